//! CART-style binary decision tree: axis-aligned splits chosen by exhaustive
//! Gini search over midpoints of sorted unique feature values.
//!
//! Ties are deterministic: the first feature and the smallest threshold with
//! the best impurity win; leaves predict the majority label, smaller class id
//! on ties.

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        label: u32,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct TreeModel {
    nodes: Vec<Node>,
    width: usize,
}

struct Builder<'a> {
    features: &'a [f64],
    width: usize,
    labels: &'a [u32],
    n_classes: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl TreeModel {
    pub(crate) fn fit(
        max_depth: usize,
        min_leaf: usize,
        features: &[f64],
        width: usize,
        labels: &[u32],
    ) -> Self {
        let n_classes = *labels.iter().max().expect("nonempty training set") as usize;
        let mut builder = Builder {
            features,
            width,
            labels,
            n_classes,
            max_depth,
            min_leaf,
            nodes: Vec::new(),
        };
        let rows: Vec<usize> = (0..labels.len()).collect();
        builder.grow(rows, 0);
        TreeModel {
            nodes: builder.nodes,
            width,
        }
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn predict_one(&self, query: &[f64]) -> u32 {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if query[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

impl Builder<'_> {
    /// Grows a subtree over `rows`, returning its node index.
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&rows);
        let node_index = self.nodes.len();
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf || is_pure(&counts) {
            self.nodes.push(Node::Leaf {
                label: majority_label(&counts),
            });
            return node_index;
        }
        let Some((feature, threshold)) = self.best_split(&rows, &counts) else {
            self.nodes.push(Node::Leaf {
                label: majority_label(&counts),
            });
            return node_index;
        };

        // Reserve the split slot before growing children.
        self.nodes.push(Node::Leaf { label: 0 });
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.features[r * self.width + feature] <= threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[node_index] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        node_index
    }

    fn class_counts(&self, rows: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes + 1];
        for &r in rows {
            counts[self.labels[r] as usize] += 1;
        }
        counts
    }

    /// Exhaustive search over (feature, midpoint threshold) pairs minimizing
    /// the weighted Gini impurity of the children, subject to `min_leaf`.
    /// Returns `None` when no split strictly improves on the parent.
    fn best_split(&self, rows: &[usize], parent_counts: &[u64]) -> Option<(usize, f64)> {
        let n = rows.len() as f64;
        let parent_gini = gini(parent_counts, rows.len());
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = Vec::with_capacity(rows.len());
        for feature in 0..self.width {
            order.clear();
            order.extend_from_slice(rows);
            order.sort_unstable_by(|&a, &b| {
                let va = self.features[a * self.width + feature];
                let vb = self.features[b * self.width + feature];
                va.partial_cmp(&vb).expect("finite features")
            });
            let mut left_counts = vec![0u64; self.n_classes + 1];
            let mut right_counts = parent_counts.to_vec();
            for cut in 1..order.len() {
                let moved = order[cut - 1];
                left_counts[self.labels[moved] as usize] += 1;
                right_counts[self.labels[moved] as usize] -= 1;
                let prev = self.features[moved * self.width + feature];
                let next = self.features[order[cut] * self.width + feature];
                if prev == next {
                    continue; // not a boundary between distinct values
                }
                if cut < self.min_leaf || order.len() - cut < self.min_leaf {
                    continue;
                }
                let w_left = cut as f64 / n;
                let w_right = 1.0 - w_left;
                let score = w_left * gini(&left_counts, cut)
                    + w_right * gini(&right_counts, order.len() - cut);
                let threshold = prev + (next - prev) / 2.0;
                let better = match best {
                    None => score < parent_gini,
                    Some((best_score, _, _)) => score < best_score,
                };
                if better {
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

fn gini(counts: &[u64], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / t;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

fn is_pure(counts: &[u64]) -> bool {
    counts.iter().filter(|&&c| c > 0).count() <= 1
}

fn majority_label(counts: &[u64]) -> u32 {
    let mut winner = 1u32;
    let mut best = 0u64;
    for (label, &count) in counts.iter().enumerate().skip(1) {
        if count > best {
            best = count;
            winner = label as u32;
        }
    }
    winner
}

#[cfg(test)]
mod tests {
    use super::*;

    fn training_error(model: &TreeModel, features: &[f64], width: usize, labels: &[u32]) -> f64 {
        let n = labels.len();
        let wrong = (0..n)
            .filter(|&i| model.predict_one(&features[i * width..(i + 1) * width]) != labels[i])
            .count();
        wrong as f64 / n as f64
    }

    #[test]
    fn separated_one_dimensional_data_splits_at_midpoint() {
        let features = [0.0, 1.0];
        let labels = [1, 2];
        let model = TreeModel::fit(8, 1, &features, 1, &labels);
        assert_eq!(training_error(&model, &features, 1, &labels), 0.0);
        assert_eq!(model.predict_one(&[0.2]), 1);
        assert_eq!(model.predict_one(&[0.8]), 2);
        // Exhaustive search over the only feature admits a single boundary
        // between distinct values; its midpoint is 0.5.
        match &model.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 0.5),
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn depth_zero_is_majority_vote() {
        let features = [0.0, 1.0, 2.0];
        let labels = [2, 2, 1];
        let model = TreeModel::fit(0, 1, &features, 1, &labels);
        for q in [-5.0, 0.0, 3.0] {
            assert_eq!(model.predict_one(&[q]), 2);
        }
    }

    #[test]
    fn chosen_split_matches_exhaustive_oracle() {
        // Brute-force every (feature, midpoint) pair and verify the root
        // split attains the minimal weighted Gini.
        let features = [
            0.1, 3.0, //
            0.4, 2.0, //
            0.9, 7.0, //
            1.3, 6.5, //
            0.2, 6.0, //
            1.1, 2.5,
        ];
        let labels = [1, 1, 2, 2, 1, 2];
        let width = 2;
        let n = labels.len();
        let model = TreeModel::fit(1, 1, &features, width, &labels);
        let Node::Split {
            feature, threshold, ..
        } = model.nodes[0]
        else {
            panic!("expected a root split");
        };

        let score_of = |f: usize, thr: f64| {
            let mut lc = [0u64; 3];
            let mut rc = [0u64; 3];
            for i in 0..n {
                if features[i * width + f] <= thr {
                    lc[labels[i] as usize] += 1;
                } else {
                    rc[labels[i] as usize] += 1;
                }
            }
            let ln: u64 = lc.iter().sum();
            let rn: u64 = rc.iter().sum();
            (ln as f64 / n as f64) * gini(&lc, ln as usize)
                + (rn as f64 / n as f64) * gini(&rc, rn as usize)
        };
        let mut best = f64::INFINITY;
        for f in 0..width {
            let mut vals: Vec<f64> = (0..n).map(|i| features[i * width + f]).collect();
            vals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for w in vals.windows(2) {
                best = best.min(score_of(f, w[0] + (w[1] - w[0]) / 2.0));
            }
        }
        assert!(
            (score_of(feature, threshold) - best).abs() < 1e-12,
            "chosen split ({feature}, {threshold}) is not optimal"
        );
    }

    #[test]
    fn training_error_non_increasing_in_depth() {
        // Noisy-ish spiral of values; deeper trees can only fit better.
        let features: Vec<f64> = (0..40).map(|i| (i as f64 * 0.73).sin()).collect();
        let labels: Vec<u32> = (0..40).map(|i| 1 + (i % 3 == 0) as u32).collect();
        let mut prev = f64::INFINITY;
        for depth in 0..8 {
            let model = TreeModel::fit(depth, 1, &features, 1, &labels);
            let err = training_error(&model, &features, 1, &labels);
            assert!(err <= prev + 1e-15, "depth {depth}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn min_leaf_respected() {
        let features = [0.0, 1.0, 2.0, 3.0];
        let labels = [1, 2, 1, 2];
        let model = TreeModel::fit(8, 2, &features, 1, &labels);
        // Any split of 4 rows with min_leaf 2 must put 2 on each side;
        // deeper nodes cannot split further.
        for node in &model.nodes {
            if let Node::Split { left, right, .. } = node {
                assert!(*left < model.nodes.len() && *right < model.nodes.len());
            }
        }
    }
}
