//! The four subcommands: simulate, clean, theory, eval.
//!
//! Every command resolves a full `RunConfig`-style JSON value first, echoes
//! it into `config.json` in the output directory (and into JSON artifacts),
//! and then runs. Re-running a command with the same resolved config
//! reproduces every numeric output byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use brslc::classify::{error_rate, train_dataset, ClassifierSpec};
use brslc::clean::{brslc_clean, cleaning_metrics};
use brslc::dataset::{
    load_csv, load_mask_csv, save_csv, save_mask_csv, subset_view, Dataset, IndexSet,
};
use brslc::report::{load_report, save_report};
use brslc::rng::derive_seed;
use brslc::sampling::{covering_counts, draw_subsets_range, SamplingConfig};
use brslc::simgen::{
    generate_setting, inject_symmetric_noise, make_test_set, random_mask, NoiseSpec, SettingSpec,
};
use brslc::theory::{
    coupled_mean_noise_levels, empirical_mean_noise_levels, histogram, theoretical_mean_gap,
    write_histogram_tsv, NoiseLevelStats,
};

use crate::args::{CleanArgs, CliError, EvalArgs, FileConfig, SimulateArgs, TheoryArgs};

type CmdResult = Result<(), CliError>;

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {dir:?}: {e}")))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {path:?}: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {path:?}: {e}")))
}

fn print_or_save_config(
    print_only: bool,
    out_dir: &Path,
    config: &Value,
) -> Result<bool, CliError> {
    if print_only {
        println!("{}", serde_json::to_string_pretty(config).expect("json"));
        return Ok(true);
    }
    ensure_out_dir(out_dir)?;
    write_json(&out_dir.join("config.json"), config)?;
    Ok(false)
}

pub fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let file = FileConfig::load(args.common.config.as_ref())?;
    let setting: u8 = file
        .resolve_opt(args.setting, "setting")?
        .ok_or_else(|| CliError::Usage("--setting is required (1-4)".to_string()))?;
    let n: usize = file.resolve(args.n, "n", 1000)?;
    let noise_rate: f64 = file.resolve(args.noise_rate, "noise_rate", 0.2)?;
    let n_test: usize = file.resolve(args.n_test, "n_test", 500)?;
    let seed: u64 = file.resolve(args.common.seed, "seed", 0)?;
    let out_dir: PathBuf = file.resolve(args.common.out_dir, "out_dir", PathBuf::from("out"))?;

    let config = json!({
        "command": "simulate",
        "setting": setting,
        "n": n,
        "noise_rate": noise_rate,
        "n_test": n_test,
        "seed": seed,
        "noise_seed": derive_seed(seed, "noise-seed", &[]),
        "out_dir": out_dir,
    });
    if print_or_save_config(args.common.print_config, &out_dir, &config)? {
        return Ok(());
    }

    let spec = SettingSpec::new(setting, n, seed)?;
    let clean = generate_setting(&spec)?;
    let noise = NoiseSpec::new(noise_rate, derive_seed(seed, "noise-seed", &[]))?;
    let noisy = inject_symmetric_noise(&clean, &noise)?;
    let test = make_test_set(&spec, n_test)?;

    save_csv(&noisy, out_dir.join("train.csv"))?;
    save_csv(&test, out_dir.join("test.csv"))?;
    save_mask_csv(
        noisy.noise_mask().expect("mask set"),
        out_dir.join("mask.csv"),
    )?;
    let flipped = noisy.noise_mask().unwrap().iter().filter(|&&m| m).count();
    println!(
        "simulate: setting {setting}, n {n}, {flipped} flipped labels, test {n_test} -> {}",
        out_dir.display()
    );
    Ok(())
}

pub fn cmd_clean(args: CleanArgs) -> CmdResult {
    let file = FileConfig::load(args.common.config.as_ref())?;
    let data_path: PathBuf = file
        .resolve_opt(args.data, "data")?
        .ok_or_else(|| CliError::Usage("--data is required".to_string()))?;
    let label_column: String =
        file.resolve(args.label_column, "label_column", "label".to_string())?;
    let mask_path: Option<PathBuf> = file.resolve_opt(args.mask, "mask")?;
    let classifier: String = file.resolve(args.classifier, "classifier", "knn".to_string())?;
    let q: f64 = file.resolve(args.q, "q", 0.1)?;
    let m_subsets: u64 = file.resolve(args.m_subsets, "m_subsets", 10_000)?;
    let k_folds: usize = file.resolve(args.k_folds, "k_folds", 5)?;
    let min_subset_size: usize =
        file.resolve(args.min_subset_size, "min_subset_size", k_folds.max(2))?;
    let max_iters: usize = file.resolve(args.max_iters, "max_iters", 20)?;
    let seed: u64 = file.resolve(args.common.seed, "seed", 0)?;
    let out_dir: PathBuf = file.resolve(args.common.out_dir, "out_dir", PathBuf::from("out"))?;
    let standardize = args.standardize;
    let emit_histograms = args.emit_histograms;

    let spec = ClassifierSpec::parse(&classifier)?;
    let config = json!({
        "command": "clean",
        "data": data_path,
        "label_column": label_column,
        "mask": mask_path,
        "classifier": spec,
        "q": q,
        "m_subsets": m_subsets,
        "k_folds": k_folds,
        "min_subset_size": min_subset_size,
        "max_iters": max_iters,
        "seed": seed,
        "workers": args.common.workers,
        "deterministic": args.common.deterministic,
        "standardize": standardize,
        "emit_histograms": emit_histograms,
        "out_dir": out_dir,
    });
    if print_or_save_config(args.common.print_config, &out_dir, &config)? {
        return Ok(());
    }

    let mut data = load_csv(&data_path, &label_column)?;
    for warning in data.warnings() {
        eprintln!("warning: {warning}");
    }
    if let Some(mask_path) = &mask_path {
        let mask = load_mask_csv(mask_path)?;
        data = data.with_noise_mask(mask)?;
    }
    if standardize {
        data = data.standardized();
    }

    let cfg = SamplingConfig::new(q, m_subsets, seed)?.with_min_subset_size(min_subset_size);
    let mut outcome = brslc_clean(&data, &spec, &cfg, k_folds, max_iters)?;
    outcome.report.config = config;

    save_report(&outcome.report, out_dir.join("report.json"))?;
    let cleaned_view = subset_view(&data, &outcome.report.cleaned)?;
    save_csv(&cleaned_view, out_dir.join("cleaned.csv"))?;

    if emit_histograms {
        for tr in &outcome.trace {
            let hist = histogram(&tr.tilde_e, 40, None)?;
            let mut buf = Vec::new();
            write_histogram_tsv(&hist, &mut buf)
                .map_err(|e| CliError::Data(format!("histogram write failed: {e}")))?;
            let name = format!("iter{:02}_tilde_e_hist.tsv", tr.t);
            write_text(&out_dir.join(name), &String::from_utf8(buf).expect("utf8"))?;
        }
    }

    let report = &outcome.report;
    println!(
        "clean: {} iterations, stop: {}, retained {}/{} rows -> {}",
        report.iterations.len(),
        serde_json::to_value(report.stop_reason)
            .expect("serializes")
            .as_str()
            .unwrap_or("?"),
        report.cleaned.len(),
        data.n_rows(),
        out_dir.display()
    );
    if let Some(metrics) = &report.metrics {
        println!(
            "clean: l_D {:.4}, l_cleaned {:.4}, r_noise {}, r_clean {:.1}%",
            metrics.l_d,
            metrics.l_cleaned,
            metrics
                .r_noise
                .map(|r| format!("{r:.1}%"))
                .unwrap_or_else(|| "n/a".to_string()),
            metrics.r_clean
        );
    }
    Ok(())
}

fn tilde_tsv(stats: &NoiseLevelStats, mask: &[bool]) -> String {
    let mut out = String::from("index\ttilde_l\tnoisy\n");
    for (i, (&v, &m)) in stats.tilde_l.iter().zip(mask).enumerate() {
        out.push_str(&format!("{i}\t{v}\t{}\n", u8::from(m)));
    }
    out
}

fn group_hist_tsv(
    stats: &NoiseLevelStats,
    mask: &[bool],
    keep: bool,
    bins: usize,
) -> Result<String, CliError> {
    let values: Vec<f64> = stats
        .tilde_l
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m == keep)
        .map(|(&v, _)| v)
        .collect();
    let hist = histogram(&values, bins, None)?;
    let mut buf = Vec::new();
    write_histogram_tsv(&hist, &mut buf)
        .map_err(|e| CliError::Data(format!("histogram write failed: {e}")))?;
    Ok(String::from_utf8(buf).expect("utf8"))
}

pub fn cmd_theory(args: TheoryArgs) -> CmdResult {
    let file = FileConfig::load(args.common.config.as_ref())?;
    let mask_path: Option<PathBuf> = file.resolve_opt(args.mask, "mask")?;
    let n_flag: Option<usize> = file.resolve_opt(args.n, "n")?;
    let noise_rate: Option<f64> = file.resolve_opt(args.noise_rate, "noise_rate")?;
    let q: f64 = file.resolve(args.q, "q", 0.4)?;
    let m_subsets: u64 = file.resolve(args.m_subsets, "m_subsets", 20_000)?;
    let bins: usize = file.resolve(args.bins, "bins", 60)?;
    let seed: u64 = file.resolve(args.common.seed, "seed", 0)?;
    let out_dir: PathBuf = file.resolve(args.common.out_dir, "out_dir", PathBuf::from("out"))?;
    let coupled = args.coupled;

    let config = json!({
        "command": "theory",
        "mask": mask_path,
        "n": n_flag,
        "noise_rate": noise_rate,
        "q": q,
        "m_subsets": m_subsets,
        "bins": bins,
        "coupled": coupled,
        "seed": seed,
        "workers": args.common.workers,
        "out_dir": out_dir,
    });
    if print_or_save_config(args.common.print_config, &out_dir, &config)? {
        return Ok(());
    }

    let mask: Vec<bool> = match (&mask_path, n_flag) {
        (Some(path), _) => load_mask_csv(path)?,
        (None, Some(n)) => {
            let rate = noise_rate
                .ok_or_else(|| CliError::Usage("--noise-rate is required with --n".to_string()))?;
            random_mask(n, rate, seed).map_err(CliError::from)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "a noise mask is required: give --mask, or --n with --noise-rate".to_string(),
            ))
        }
    };
    let n = mask.len();
    let n_noisy = mask.iter().filter(|&&m| m).count();
    let n_clean = n - n_noisy;

    let cfg = SamplingConfig::new(q, m_subsets, seed)?;
    let (last, counts) = covering_counts(n, &cfg)?;
    let stats = empirical_mean_noise_levels(draw_subsets_range(n, &cfg, 1, last), &mask, &counts)?;

    let theoretical = theoretical_mean_gap(n, q);
    let mut gap_lines = vec![
        format!("n\t{n}"),
        format!("n_clean\t{n_clean}"),
        format!("n_noisy\t{n_noisy}"),
        format!("q\t{q}"),
        format!("m_subsets\t{m_subsets}"),
        format!("theoretical_gap\t{theoretical}"),
    ];
    match &stats.group_means {
        Some(gm) => {
            gap_lines.push(format!("group_mean_clean\t{}", gm.clean));
            gap_lines.push(format!("group_mean_noisy\t{}", gm.noisy));
            gap_lines.push(format!("empirical_gap\t{}", gm.gap()));
        }
        None => gap_lines.push("empirical_gap\tundefined".to_string()),
    }

    write_text(&out_dir.join("tilde_l.tsv"), &tilde_tsv(&stats, &mask))?;
    let hist_all = {
        let hist = histogram(&stats.tilde_l, bins, None)?;
        let mut buf = Vec::new();
        write_histogram_tsv(&hist, &mut buf)
            .map_err(|e| CliError::Data(format!("histogram write failed: {e}")))?;
        String::from_utf8(buf).expect("utf8")
    };
    write_text(&out_dir.join("hist_all.tsv"), &hist_all)?;
    if n_clean > 0 {
        write_text(
            &out_dir.join("hist_clean.tsv"),
            &group_hist_tsv(&stats, &mask, false, bins)?,
        )?;
    }
    if n_noisy > 0 {
        write_text(
            &out_dir.join("hist_noisy.tsv"),
            &group_hist_tsv(&stats, &mask, true, bins)?,
        )?;
    }

    if coupled {
        let coup = coupled_mean_noise_levels(n, &mask, &cfg)?;
        write_text(
            &out_dir.join("coupled_tilde_l.tsv"),
            &tilde_tsv(&coup, &mask),
        )?;
        let hist = histogram(&coup.tilde_l, bins, None)?;
        let mut buf = Vec::new();
        write_histogram_tsv(&hist, &mut buf)
            .map_err(|e| CliError::Data(format!("histogram write failed: {e}")))?;
        write_text(
            &out_dir.join("hist_coupled.tsv"),
            &String::from_utf8(buf).expect("utf8"),
        )?;
        if let Some(gm) = &coup.group_means {
            gap_lines.push(format!("coupled_group_mean_clean\t{}", gm.clean));
            gap_lines.push(format!("coupled_group_mean_noisy\t{}", gm.noisy));
            gap_lines.push(format!("coupled_gap\t{}", gm.gap()));
        }
    }
    write_text(&out_dir.join("gap.tsv"), &(gap_lines.join("\n") + "\n"))?;

    if let Some(gm) = &stats.group_means {
        println!(
            "theory: empirical gap {:.6} vs theoretical {:.6} -> {}",
            gm.gap(),
            theoretical,
            out_dir.display()
        );
    } else {
        println!(
            "theory: one group is empty; gap undefined -> {}",
            out_dir.display()
        );
    }
    Ok(())
}

pub fn cmd_eval(args: EvalArgs) -> CmdResult {
    let file = FileConfig::load(args.common.config.as_ref())?;
    let data_path: PathBuf = file
        .resolve_opt(args.data, "data")?
        .ok_or_else(|| CliError::Usage("--data is required".to_string()))?;
    let label_column: String =
        file.resolve(args.label_column, "label_column", "label".to_string())?;
    let mask_path: PathBuf = file
        .resolve_opt(args.mask, "mask")?
        .ok_or_else(|| CliError::Usage("--mask is required".to_string()))?;
    let report_path: PathBuf = file
        .resolve_opt(args.report, "report")?
        .ok_or_else(|| CliError::Usage("--report is required".to_string()))?;
    let test_path: PathBuf = file
        .resolve_opt(args.test, "test")?
        .ok_or_else(|| CliError::Usage("--test is required".to_string()))?;
    let classifier: String = file.resolve(args.classifier, "classifier", "knn".to_string())?;
    let seed: u64 = file.resolve(args.common.seed, "seed", 0)?;
    let out_dir: PathBuf = file.resolve(args.common.out_dir, "out_dir", PathBuf::from("out"))?;
    let standardize = args.standardize;

    let spec = ClassifierSpec::parse(&classifier)?;
    let config = json!({
        "command": "eval",
        "data": data_path,
        "label_column": label_column,
        "mask": mask_path,
        "report": report_path,
        "test": test_path,
        "classifier": spec,
        "standardize": standardize,
        "seed": seed,
        "out_dir": out_dir,
    });
    if print_or_save_config(args.common.print_config, &out_dir, &config)? {
        return Ok(());
    }

    let mut data = load_csv(&data_path, &label_column)?;
    let mut test = load_csv(&test_path, &label_column)?;
    if standardize {
        data = data.standardized();
        test = test.standardized();
    }
    let mask = load_mask_csv(&mask_path)?;
    if mask.len() != data.n_rows() {
        return Err(CliError::Data(format!(
            "mask has {} rows but the dataset has {}",
            mask.len(),
            data.n_rows()
        )));
    }
    let report = load_report(&report_path)?;
    let cleaned = IndexSet::new(report.cleaned_indices.clone());

    let metrics = cleaning_metrics(&cleaned, &mask)?;
    let test_error_noisy = test_error(&spec, &data, &test)?;
    let cleaned_view = subset_view(&data, &cleaned)?;
    let test_error_cleaned = test_error(&spec, &cleaned_view, &test)?;

    let out = json!({
        "config": config,
        "l_D": metrics.l_d,
        "l_cleaned": metrics.l_cleaned,
        "r_noise": metrics.r_noise,
        "r_clean": metrics.r_clean,
        "test_error_noisy": test_error_noisy,
        "test_error_cleaned": test_error_cleaned,
    });
    write_json(&out_dir.join("metrics.json"), &out)?;
    println!(
        "eval: l_D {:.4}, l_cleaned {:.4}, r_noise {}, r_clean {:.1}%, test error {:.4} -> {:.4}",
        metrics.l_d,
        metrics.l_cleaned,
        metrics
            .r_noise
            .map(|r| format!("{r:.1}%"))
            .unwrap_or_else(|| "n/a".to_string()),
        metrics.r_clean,
        test_error_noisy,
        test_error_cleaned
    );
    Ok(())
}

fn test_error(spec: &ClassifierSpec, train: &Dataset, test: &Dataset) -> Result<f64, CliError> {
    let model = train_dataset(spec, train)?;
    Ok(error_rate(
        &model,
        test.features(),
        test.n_cols(),
        test.labels(),
    )?)
}
