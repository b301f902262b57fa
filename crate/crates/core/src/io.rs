//! Dataset ingestion and file output.
//!
//! Two layouts are accepted: a directory with `case/` and `control/`
//! subdirectories holding one two-column text file per sample, or a CSV
//! manifest listing `path,label` pairs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Label, MassSpectrum, SpectraDataset};

/// Relative tolerance when comparing m/z grids across samples.
const GRID_TOLERANCE: f64 = 1e-9;

/// How samples from a `benign/` subdirectory (or labelled `benign`) are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenignPolicy {
    #[default]
    Exclude,
    AsCase,
    AsControl,
}

impl BenignPolicy {
    fn label(self) -> Option<Label> {
        match self {
            BenignPolicy::Exclude => None,
            BenignPolicy::AsCase => Some(Label::Case),
            BenignPolicy::AsControl => Some(Label::Control),
        }
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()).filter(|f| !f.is_empty())
}

/// Parses one sample file into `(mz, intensity)` columns.
///
/// Blank lines and lines starting with `#` are skipped. The first remaining line
/// may be a non-numeric header. Extra columns after the second are ignored.
pub fn parse_spectrum(path: &Path, text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut mz = Vec::new();
    let mut intensity = Vec::new();
    let mut seen_data_line = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = split_fields(line).take(2).collect();
        let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        if !seen_data_line && parsed.iter().any(Option::is_none) {
            seen_data_line = true;
            continue;
        }
        seen_data_line = true;
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
        if fields.len() < 2 {
            return Err(parse_err(format!("expected two columns, found {}", fields.len())));
        }
        match (parsed[0], parsed[1]) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => {
                mz.push(x);
                intensity.push(y);
            }
            _ => return Err(parse_err(format!("unreadable value in {line:?}"))),
        }
    }
    if mz.is_empty() {
        return Err(Error::Ingestion { path: path.to_path_buf(), message: "no data rows".into() });
    }
    Ok((mz, intensity))
}

pub fn read_spectrum(path: &Path, label: Label) -> Result<MassSpectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::Ingestion { path: path.to_path_buf(), message: e.to_string() })?;
    let (mz, intensity) = parse_spectrum(path, &text)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(MassSpectrum { name, mz, intensity, label })
}

/// Reads a single-column or two-column signal file and returns the last column.
pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Ingestion { path: path.to_path_buf(), message: e.to_string() })?;
    let mut values = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = split_fields(line).last().unwrap_or_default();
        match last.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if first => {}
            _ => {
                return Err(Error::Parse { path: path.to_path_buf(), line: i + 1, message: format!("unreadable value {last:?}") })
            }
        }
        first = false;
    }
    if values.is_empty() {
        return Err(Error::Ingestion { path: path.to_path_buf(), message: "no data rows".into() });
    }
    Ok(values)
}

fn parse_label(text: &str, benign: BenignPolicy) -> Option<Option<Label>> {
    match text.trim().to_ascii_lowercase().as_str() {
        "case" | "cancer" => Some(Some(Label::Case)),
        "control" | "normal" => Some(Some(Label::Control)),
        "benign" => Some(benign.label()),
        _ => None,
    }
}

fn sample_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if entry.file_type()?.is_file() && !hidden {
            files.push(entry.path());
        }
    }
    Ok(files)
}

/// Loads a dataset from a class-directory layout or a CSV manifest.
///
/// Samples are ordered by file name (then by path) so that downstream seeded
/// sampling does not depend on directory iteration order.
pub fn load_dataset(path: &Path, benign: BenignPolicy) -> Result<SpectraDataset> {
    let mut entries: Vec<(PathBuf, Label)> = if path.is_dir() {
        let mut found = Vec::new();
        for (sub, label) in [("case", Some(Label::Case)), ("control", Some(Label::Control)), ("benign", benign.label())] {
            let dir = path.join(sub);
            if !dir.is_dir() {
                if sub != "benign" {
                    return Err(Error::Ingestion { path: path.to_path_buf(), message: format!("missing {sub}/ subdirectory") });
                }
                continue;
            }
            if let Some(label) = label {
                found.extend(sample_files(&dir)?.into_iter().map(|f| (f, label)));
            }
        }
        found
    } else {
        read_manifest(path, benign)?
    };
    entries.sort_by(|a, b| a.0.file_name().cmp(&b.0.file_name()).then_with(|| a.0.cmp(&b.0)));
    if entries.is_empty() {
        return Err(Error::Ingestion { path: path.to_path_buf(), message: "no sample files found".into() });
    }

    let mut samples: Vec<MassSpectrum> = Vec::with_capacity(entries.len());
    for (file, label) in &entries {
        let sample = read_spectrum(file, *label)?;
        if let Some(first) = samples.first() {
            if !same_grid(&first.mz, &sample.mz) {
                return Err(Error::Ingestion {
                    path: file.clone(),
                    message: format!("m/z grid differs from {} ({} vs {} rows)", first.name, sample.mz.len(), first.mz.len()),
                });
            }
        }
        samples.push(sample);
    }
    SpectraDataset::new(samples)
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= GRID_TOLERANCE * x.abs().max(y.abs()).max(1.0))
}

/// Reads a `path,label` manifest. Relative paths resolve against the manifest's directory.
fn read_manifest(manifest: &Path, benign: BenignPolicy) -> Result<Vec<(PathBuf, Label)>> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::Ingestion { path: manifest.to_path_buf(), message: e.to_string() })?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let label = fields.get(1).and_then(|l| parse_label(l, benign));
        match (fields.len(), label) {
            (2, Some(label)) => {
                if let Some(label) = label {
                    entries.push((base.join(fields[0]), label));
                }
            }
            _ if first => {}
            _ => {
                return Err(Error::Parse {
                    path: manifest.to_path_buf(),
                    line: i + 1,
                    message: format!("expected `path,label` with label case, control or benign, got {line:?}"),
                })
            }
        }
        first = false;
    }
    Ok(entries)
}

/// Feature matrix as CSV: `sample,label,<feature ids...>`.
pub fn feature_matrix_csv(matrix: &FeatureMatrix, sample_names: &[String]) -> String {
    let mut out = String::from("sample,label");
    for id in matrix.feature_ids() {
        out.push(',');
        out.push_str(&id.to_string());
    }
    out.push('\n');
    for ((row, label), name) in matrix.rows().iter().zip(matrix.labels()).zip(sample_names) {
        out.push_str(&format!("{name},{label}"));
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
