//! CSV exchange formats: dataset, feature table and coefficient export.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dwt::DecompositionResult;
use crate::error::{PqError, Result};
use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::signal_gen::{DisturbanceClass, SignalParams, SignalRecord};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PqError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PqError::io(path, e))
}

pub fn open_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PqError::io(path, e))
}

fn write_err(e: csv::Error) -> PqError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PqError::io("<csv output>", io),
        other => PqError::Parse { line: 0, msg: format!("{other:?}") },
    }
}

fn read_err(e: csv::Error) -> PqError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PqError::io("<csv input>", io),
        other => PqError::Parse { line, msg: format!("{other:?}") },
    }
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map(|p| p.line()).unwrap_or(0);
    let raw = rec.get(i).ok_or_else(|| PqError::Parse {
        line,
        msg: format!("missing column {name}"),
    })?;
    raw.trim().parse().map_err(|_| PqError::Parse {
        line,
        msg: format!("invalid {name}: {raw:?}"),
    })
}

fn parse_class(rec: &csv::StringRecord, i: usize) -> Result<DisturbanceClass> {
    let code: u8 = parse_field(rec, i, "class_code")?;
    DisturbanceClass::from_code(code).ok_or_else(|| PqError::Parse {
        line: rec.position().map(|p| p.line()).unwrap_or(0),
        msg: format!("class_code {code} outside 1..=11"),
    })
}

/// `id, class_code, class_name, seed, param_json, s0..s{n-1}`.
pub fn write_dataset_csv<W: Write>(out: W, records: &[SignalRecord]) -> Result<()> {
    let width = records.first().map_or(0, |r| r.samples.len());
    if let Some(r) = records.iter().find(|r| r.samples.len() != width) {
        return Err(PqError::Shape(format!(
            "record {} has {} samples, expected {width}",
            r.id,
            r.samples.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["id", "class_code", "class_name", "seed", "param_json"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..width).map(|i| format!("s{i}")));
    w.write_record(&header).map_err(write_err)?;
    for r in records {
        let mut row = vec![
            r.id.to_string(),
            r.label.code().to_string(),
            r.label.name().to_string(),
            r.params.rng_seed.to_string(),
            serde_json::to_string(&r.params)?,
        ];
        row.extend(r.samples.iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).map_err(write_err)?;
    }
    w.flush().map_err(|e| PqError::io("<csv output>", e))
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<SignalRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(read_err)?.clone();
    if header.len() < 5 || &header[0] != "id" || &header[4] != "param_json" {
        return Err(PqError::Parse { line: 1, msg: "not a dataset CSV header".into() });
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(read_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id: u64 = parse_field(&rec, 0, "id")?;
        let label = parse_class(&rec, 1)?;
        let seed: u64 = parse_field(&rec, 3, "seed")?;
        let params: SignalParams = serde_json::from_str(&rec[4]).map_err(|e| PqError::Parse {
            line,
            msg: format!("param_json: {e}"),
        })?;
        if params.rng_seed != seed {
            return Err(PqError::Parse { line, msg: "seed column disagrees with param_json".into() });
        }
        let samples = (5..rec.len())
            .map(|i| parse_field::<f64>(&rec, i, &header[i]))
            .collect::<Result<Vec<_>>>()?;
        out.push(SignalRecord { id, label, params, samples });
    }
    Ok(out)
}

/// One row of the feature table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    pub id: u64,
    pub features: FeatureVector,
}

/// `id, class_code, entropy, std_dev, mean, skewness, kurtosis`.
pub fn write_features_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id", "class_code"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header).map_err(write_err)?;
    for r in rows {
        let code = r.features.label.map_or(0, DisturbanceClass::code);
        let mut row = vec![r.id.to_string(), code.to_string()];
        row.extend(r.features.values().iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).map_err(write_err)?;
    }
    w.flush().map_err(|e| PqError::io("<csv output>", e))
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(read_err)?.clone();
    if header.len() != 2 + FEATURE_COUNT || &header[0] != "id" {
        return Err(PqError::Parse { line: 1, msg: "not a feature CSV header".into() });
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(read_err)?;
        let id: u64 = parse_field(&rec, 0, "id")?;
        let label = parse_class(&rec, 1)?;
        let mut v = [0.0; FEATURE_COUNT];
        for (f, slot) in v.iter_mut().enumerate() {
            *slot = parse_field(&rec, 2 + f, FEATURE_NAMES[f])?;
        }
        out.push(FeatureRow { id, features: FeatureVector::from_values(v, Some(label)) });
    }
    Ok(out)
}

/// `level, index, value` for every detail band (level 1..L) and the
/// approximation (written as level 0).
pub fn write_coefficients_csv<W: Write>(out: W, decomp: &DecompositionResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "index", "value"]).map_err(write_err)?;
    for (j, band) in decomp.details.iter().enumerate() {
        for (i, &v) in band.iter().enumerate() {
            w.write_record([(j + 1).to_string(), i.to_string(), fmt_f64(v)])
                .map_err(write_err)?;
        }
    }
    for (i, &v) in decomp.approx.iter().enumerate() {
        w.write_record(["0".to_string(), i.to_string(), fmt_f64(v)])
            .map_err(write_err)?;
    }
    w.flush().map_err(|e| PqError::io("<csv output>", e))
}
