//! Pipeline subcommands: generate → extract → train-eval, plus plot and the
//! one-shot run. Each command is a library function so tests can drive the
//! exact code path the binary uses.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    rf_oob_error, rf_train, svm_train, ClassifierKind, KnnModel, LabeledDataset, TrainedModel,
};
use crate::dwt::{db4_filters, wavedec};
use crate::error::{PqError, Result};
use crate::eval::{
    accuracy_floor, compare_accuracies, evaluate, render_text, split_dataset, ClassifierResult, EvalReport,
    SvmDiagnostics,
};
use crate::features::{extract_features, FEATURE_NAMES};
use crate::io::{self, FeatureRow};
use crate::signal_gen::{generate_dataset, SignalRecord};

pub use config::{ExperimentConfig, TuneMode};

pub const DATASET_FILE: &str = "dataset.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const MODELS_DIR: &str = "models";
pub const PLOT_DIR: &str = "plot";

/// Process exit code for a failed command.
pub fn exit_code(err: &PqError) -> i32 {
    match err {
        PqError::Io { .. } => 2,
        PqError::Parse { .. }
        | PqError::Json(_)
        | PqError::Parameter(_)
        | PqError::Shape(_)
        | PqError::DegenerateInput(_) => 3,
        PqError::InfeasibleSplit(_) => 4,
        PqError::MissingId(_) => 5,
    }
}

/// Exit code of a completed train-eval: 0 when the accuracy comparison passes.
pub const EXIT_FLOOR_FAILURE: i32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub master_seed: u64,
}

pub fn cmd_generate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<GenerateSummary> {
    cfg.validate()?;
    let records = generate_dataset(&cfg.dataset)?;
    let path = out_dir.join(DATASET_FILE);
    let mut w = io::create_file(&path)?;
    io::write_dataset_csv(&mut w, &records)?;
    w.flush().map_err(|e| PqError::io(&path, e))?;
    Ok(GenerateSummary {
        path,
        rows: records.len(),
        master_seed: cfg.dataset.master_seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub path: PathBuf,
    pub rows: usize,
    /// One message per skipped signal.
    pub warnings: Vec<String>,
}

/// Features of every record in order; degenerate signals are skipped with a
/// warning instead of aborting the run.
pub fn extract_rows(cfg: &ExperimentConfig, records: &[SignalRecord]) -> Result<(Vec<FeatureRow>, Vec<String>)> {
    let filters = db4_filters();
    let results: Vec<Result<std::result::Result<FeatureRow, String>>> = records
        .par_iter()
        .map(|rec| {
            let decomp = wavedec(&rec.samples, cfg.dwt.levels, &filters, cfg.dwt.boundary)?;
            match extract_features(&decomp, Some(rec.label)) {
                Ok(features) => Ok(Ok(FeatureRow { id: rec.id, features })),
                Err(PqError::DegenerateInput(msg)) => Ok(Err(format!("signal {}: {msg}", rec.id))),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(records.len());
    let mut warnings = Vec::new();
    for r in results {
        match r? {
            Ok(row) => rows.push(row),
            Err(w) => warnings.push(w),
        }
    }
    Ok((rows, warnings))
}

pub fn cmd_extract(cfg: &ExperimentConfig, dataset: &Path, out_dir: &Path) -> Result<ExtractSummary> {
    cfg.validate()?;
    let records = io::read_dataset_csv(io::open_file(dataset)?)?;
    let (rows, warnings) = extract_rows(cfg, &records)?;
    for w in &warnings {
        warn!("skipped {w}");
    }
    let path = out_dir.join(FEATURES_FILE);
    let mut w = io::create_file(&path)?;
    io::write_features_csv(&mut w, &rows)?;
    w.flush().map_err(|e| PqError::io(&path, e))?;
    Ok(ExtractSummary { path, rows: rows.len(), warnings })
}

/// Serialized model with the feature order it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub feature_order: Vec<String>,
    pub train_rows: usize,
    #[serde(flatten)]
    pub model: TrainedModel,
}

fn hyperparameters(
    cfg: &ExperimentConfig,
    kind: ClassifierKind,
    svm_used: &crate::classifiers::SvmParams,
    svm_tuned: bool,
) -> serde_json::Value {
    match kind {
        ClassifierKind::Knn => serde_json::json!({ "k": cfg.knn.k, "standardized": true }),
        ClassifierKind::Svm => serde_json::json!({
            "c": svm_used.c,
            "gamma": svm_used.gamma,
            "tolerance": svm_used.tolerance,
            "max_passes": svm_used.max_passes,
            "tuned": svm_tuned,
            "standardized": true,
        }),
        ClassifierKind::Forest => serde_json::json!({
            "n_trees": cfg.forest.n_trees,
            "max_features": cfg.forest.max_features,
            "seed": cfg.forest.seed,
            "bootstrap": cfg.forest.bootstrap,
            "standardized": false,
        }),
    }
}

/// Grid search over `c_grid × gamma_grid` on a per-class validation slice
/// taken from the end of each class's (already shuffled) training rows.
/// Ties keep the first grid point.
pub fn tune_svm(cfg: &ExperimentConfig, train: &LabeledDataset) -> Result<crate::classifiers::SvmParams> {
    let hold = cfg.svm.validation_per_class;
    let per_class = cfg.split.train_per_class;
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for (i, row) in train.rows.iter().enumerate() {
        if i % per_class >= per_class - hold {
            val.push(*row);
        } else {
            fit.push(*row);
        }
    }
    let (fit, val) = (LabeledDataset::new(fit), LabeledDataset::new(val));
    let base = cfg.svm.params();
    let mut best = (f64::NEG_INFINITY, base);
    for &c in &cfg.svm.c_grid {
        for &gamma in &cfg.svm.gamma_grid {
            let p = crate::classifiers::SvmParams { c, gamma, ..base };
            let model = svm_train(&fit, &p)?;
            let acc = evaluate(&model, &val).overall_accuracy();
            info!("svm grid C={c} gamma={gamma}: validation accuracy {acc:.2}%");
            if acc > best.0 {
                best = (acc, p);
            }
        }
    }
    Ok(best.1)
}

pub fn train_eval_rows(cfg: &ExperimentConfig, rows: &[FeatureRow]) -> Result<(EvalReport, Vec<ModelFile>)> {
    cfg.validate()?;
    let data = LabeledDataset::from_features(rows.iter().map(|r| (r.id, r.features)))?;
    let (train, test) = split_dataset(
        &data,
        cfg.split.train_per_class,
        cfg.split.test_per_class,
        cfg.split.seed,
    )?;

    let mut results = Vec::new();
    let mut models = Vec::new();
    let mut forest_oob = None;
    let mut svm_diag = None;
    let mut enabled = cfg.classifiers.enabled.clone();
    enabled.sort();
    enabled.dedup();
    for kind in enabled {
        let mut svm_used = cfg.svm.params();
        let mut svm_tuned = false;
        let model = match kind {
            ClassifierKind::Knn => TrainedModel::Knn(KnnModel::fit(&train, cfg.knn.k)?),
            ClassifierKind::Svm => {
                if cfg.svm.tune == TuneMode::Always {
                    svm_used = tune_svm(cfg, &train)?;
                    svm_tuned = true;
                }
                let mut m = svm_train(&train, &svm_used)?;
                if cfg.svm.tune == TuneMode::OnFloorMiss {
                    let acc = evaluate(&m, &test).overall_accuracy();
                    if acc < accuracy_floor(ClassifierKind::Svm)
                        && cfg.svm.validation_per_class >= cfg.split.train_per_class
                    {
                        warn!("svm accuracy {acc:.2}% is below its floor, but the training split is too small to tune on");
                    } else if acc < accuracy_floor(ClassifierKind::Svm) {
                        info!("svm accuracy {acc:.2}% is below its floor; tuning C and gamma");
                        svm_used = tune_svm(cfg, &train)?;
                        svm_tuned = true;
                        m = svm_train(&train, &svm_used)?;
                    }
                }
                svm_diag = Some(SvmDiagnostics {
                    machines: m.machines.len(),
                    max_equality_residual: m.max_equality_residual(),
                    max_kkt_gap: m.max_kkt_gap(),
                    support_vectors: m.machines.iter().map(|b| b.support_vectors.len()).sum(),
                });
                TrainedModel::Svm(m)
            }
            ClassifierKind::Forest => {
                let m = rf_train(&train, &cfg.forest)?;
                forest_oob = Some(rf_oob_error(&m, &train)?);
                TrainedModel::RandomForest(m)
            }
        };
        let cm = evaluate(&model, &test);
        results.push(ClassifierResult::new(kind, hyperparameters(cfg, kind, &svm_used, svm_tuned), &cm));
        models.push(ModelFile {
            feature_order: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            train_rows: train.len(),
            model,
        });
    }

    let accuracies: Vec<_> = results.iter().map(|r| (r.classifier, r.overall_accuracy)).collect();
    let report = EvalReport {
        master_seed: cfg.dataset.master_seed,
        signals_per_class: cfg.dataset.signals_per_class,
        split_seed: cfg.split.seed,
        train_per_class: cfg.split.train_per_class,
        test_per_class: cfg.split.test_per_class,
        results,
        forest_oob,
        svm: svm_diag,
        comparison: compare_accuracies(&accuracies),
    };
    Ok((report, models))
}

pub fn cmd_train_eval(cfg: &ExperimentConfig, features: &Path, out_dir: &Path) -> Result<EvalReport> {
    let rows = io::read_features_csv(io::open_file(features)?)?;
    let (report, models) = train_eval_rows(cfg, &rows)?;

    for m in &models {
        let path = out_dir.join(MODELS_DIR).join(format!("{}.json", m.model.kind().name()));
        let mut w = io::create_file(&path)?;
        serde_json::to_writer(&mut w, m)?;
        w.flush().map_err(|e| PqError::io(&path, e))?;
    }
    let json_path = out_dir.join(REPORT_JSON_FILE);
    let mut w = io::create_file(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n").map_err(|e| PqError::io(&json_path, e))?;
    w.flush().map_err(|e| PqError::io(&json_path, e))?;

    let text_path = out_dir.join(REPORT_TEXT_FILE);
    let mut w = io::create_file(&text_path)?;
    w.write_all(render_text(&report).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| PqError::io(&text_path, e))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSummary {
    pub waveform: PathBuf,
    pub coefficients: PathBuf,
    pub svg: PathBuf,
    /// Waveform length followed by detail lengths, level 1 first.
    pub series_lengths: Vec<usize>,
}

pub fn cmd_plot(cfg: &ExperimentConfig, dataset: &Path, id: u64, out_dir: &Path) -> Result<PlotSummary> {
    cfg.validate()?;
    let records = io::read_dataset_csv(io::open_file(dataset)?)?;
    let rec = records
        .iter()
        .find(|r| r.id == id)
        .ok_or(PqError::MissingId(id))?;
    let decomp = wavedec(&rec.samples, cfg.dwt.levels, &db4_filters(), cfg.dwt.boundary)?;

    let dir = out_dir.join(PLOT_DIR);
    let waveform = dir.join(format!("signal_{id}_waveform.csv"));
    let mut w = io::create_file(&waveform)?;
    let mut text = String::from("index,time_s,value\n");
    for (n, &x) in rec.samples.iter().enumerate() {
        let t = n as f64 / rec.params.sampling_hz;
        let _ = writeln!(text, "{n},{},{}", io::fmt_f64(t), io::fmt_f64(x));
    }
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| PqError::io(&waveform, e))?;

    let coefficients = dir.join(format!("signal_{id}_coefficients.csv"));
    let mut w = io::create_file(&coefficients)?;
    io::write_coefficients_csv(&mut w, &decomp)?;
    w.flush().map_err(|e| PqError::io(&coefficients, e))?;

    let svg = dir.join(format!("signal_{id}.svg"));
    let mut series: Vec<(String, &[f64])> = vec![(format!("{} (id {id})", rec.label.name()), &rec.samples)];
    for (j, d) in decomp.details.iter().enumerate() {
        series.push((format!("detail level {}", j + 1), d));
    }
    let mut w = io::create_file(&svg)?;
    w.write_all(render_svg(&series).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| PqError::io(&svg, e))?;

    let mut series_lengths = vec![rec.samples.len()];
    series_lengths.extend(decomp.details.iter().map(Vec::len));
    Ok(PlotSummary { waveform, coefficients, svg, series_lengths })
}

/// Stacked line panels, one per series.
fn render_svg(series: &[(String, &[f64])]) -> String {
    const W: f64 = 800.0;
    const PANEL: f64 = 160.0;
    const PAD: f64 = 20.0;
    let height = PANEL * series.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}">"#
    );
    for (p, (title, ys)) in series.iter().enumerate() {
        let top = PANEL * p as f64;
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let n = ys.len().max(2) - 1;
        let points: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let px = PAD + (W - 2.0 * PAD) * i as f64 / n as f64;
                let py = top + PAD + (PANEL - 2.0 * PAD) * (1.0 - (y - lo) / span);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"  <text x="{PAD}" y="{:.2}" font-family="sans-serif" font-size="12">{title}</text>"#,
            top + 14.0
        );
        let _ = writeln!(
            s,
            r#"  <polyline fill="none" stroke="steelblue" stroke-width="1" points="{}"/>"#,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub generate: GenerateSummary,
    pub extract: ExtractSummary,
    pub report: EvalReport,
}

/// generate → extract → train-eval, all inside `out_dir`.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let generate = cmd_generate(cfg, out_dir)?;
    let extract = cmd_extract(cfg, &generate.path, out_dir)?;
    let report = cmd_train_eval(cfg, &extract.path, out_dir)?;
    Ok(RunSummary { generate, extract, report })
}
