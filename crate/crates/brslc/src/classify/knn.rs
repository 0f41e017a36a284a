//! k-nearest-neighbor classifier with Euclidean distance.
//!
//! Deterministic by construction: distance ties are broken by the lower
//! training index, vote ties by the smaller class id.

#[derive(Debug, Clone)]
pub struct KnnModel {
    pub(crate) k: usize,
    features: Vec<f64>,
    width: usize,
    labels: Vec<u32>,
}

impl KnnModel {
    pub(crate) fn fit(k: usize, features: &[f64], width: usize, labels: &[u32]) -> Self {
        KnnModel {
            k,
            features: features.to_vec(),
            width,
            labels: labels.to_vec(),
        }
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn predict_one(&self, query: &[f64]) -> u32 {
        let n = self.labels.len();
        if self.k == 1 {
            let mut best = (f64::INFINITY, 0usize);
            for i in 0..n {
                let d = sq_dist(&self.features[i * self.width..(i + 1) * self.width], query);
                if d < best.0 {
                    best = (d, i);
                }
            }
            return self.labels[best.1];
        }
        let mut dists: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                (
                    sq_dist(&self.features[i * self.width..(i + 1) * self.width], query),
                    i,
                )
            })
            .collect();
        dists.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        let k = self.k.min(n);
        let max_label = *self.labels.iter().max().expect("nonempty training set");
        let mut votes = vec![0u32; max_label as usize + 1];
        for &(_, i) in dists.iter().take(k) {
            votes[self.labels[i] as usize] += 1;
        }
        let mut winner = 0u32;
        let mut best = 0u32;
        for (label, &count) in votes.iter().enumerate().skip(1) {
            if count > best {
                best = count;
                winner = label as u32;
            }
        }
        winner
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
