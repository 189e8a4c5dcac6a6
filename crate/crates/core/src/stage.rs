//! On-disk stage artifacts: `features.csv`, `labels.csv` and `manifest.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, LabelEncoding};
use crate::error::{QtcError, Result};
use crate::features::FeatureMatrix;
use crate::util::{fmt_f64, sha256_hex};

pub const FORMAT_VERSION: u32 = 1;
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub format_version: u32,
    pub stage: String,
    pub classes: Vec<String>,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub split: Option<DatasetSplit>,
    /// Hash of the manifest this stage was computed from.
    pub upstream_hash: Option<String>,
    pub features_sha256: String,
    pub labels_sha256: String,
}

/// Everything one pipeline stage hands to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: String,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub encoding: LabelEncoding,
    pub split: Option<DatasetSplit>,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub upstream_hash: Option<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| QtcError::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| QtcError::io(path, e))
}

fn features_csv(features: &FeatureMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(features.feature_names().iter().cloned());
    w.write_record(&header)?;
    for (id, row) in features.ids().iter().zip(features.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.into_inner()
        .map_err(|e| QtcError::validation(e.to_string()))
}

fn labels_csv(ids: &[String], labels: &[usize]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "label_index"])?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()])?;
    }
    w.into_inner()
        .map_err(|e| QtcError::validation(e.to_string()))
}

/// Writes the stage into `dir` and returns the hash of its manifest.
pub fn save_stage(dir: impl AsRef<Path>, stage: &Stage) -> Result<String> {
    let dir = dir.as_ref();
    if stage.labels.len() != stage.features.n_rows() {
        return Err(QtcError::validation(format!(
            "{} labels for {} feature rows",
            stage.labels.len(),
            stage.features.n_rows()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| QtcError::io(dir, e))?;
    let features = features_csv(&stage.features)?;
    let labels = labels_csv(stage.features.ids(), &stage.labels)?;
    let manifest = StageManifest {
        format_version: FORMAT_VERSION,
        stage: stage.name.clone(),
        classes: stage.encoding.classes.clone(),
        seed: stage.seed,
        parameters: stage.parameters.clone(),
        split: stage.split.clone(),
        upstream_hash: stage.upstream_hash.clone(),
        features_sha256: sha256_hex(&features),
        labels_sha256: sha256_hex(&labels),
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    manifest_bytes.push(b'\n');
    write_file(&dir.join(FEATURES_FILE), &features)?;
    write_file(&dir.join(LABELS_FILE), &labels)?;
    write_file(&dir.join(MANIFEST_FILE), &manifest_bytes)?;
    Ok(sha256_hex(&manifest_bytes))
}

/// Hash of the manifest stored in `dir`.
pub fn manifest_hash(dir: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&read_file(&dir.as_ref().join(MANIFEST_FILE))?))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<StageManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    Ok(serde_json::from_slice(&read_file(&path)?)?)
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> QtcError {
    QtcError::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn parse_features(path: &Path, bytes: &[u8]) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if header.get(0) != Some("id") {
        return Err(parse_err(path, 1, "first column must be \"id\""));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(path, row, e.to_string()))?;
        if rec.len() != names.len() + 1 {
            return Err(parse_err(
                path,
                row,
                format!("expected {} fields, found {}", names.len() + 1, rec.len()),
            ));
        }
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, row, format!("invalid number {field:?}")))?;
            values.push(v);
        }
    }
    FeatureMatrix::new(ids, names, values)
}

fn parse_labels(path: &Path, bytes: &[u8], ids: &[String], n_classes: usize) -> Result<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| parse_err(path, row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(parse_err(path, row, "expected 2 fields"));
        }
        if ids.get(i).map(String::as_str) != Some(&rec[0]) {
            return Err(parse_err(
                path,
                row,
                format!("id {:?} does not match features.csv", &rec[0]),
            ));
        }
        let l: usize = rec[1]
            .parse()
            .map_err(|_| parse_err(path, row, format!("invalid label index {:?}", &rec[1])))?;
        if l >= n_classes {
            return Err(parse_err(
                path,
                row,
                format!("label index {l} out of range"),
            ));
        }
        labels.push(l);
    }
    if labels.len() != ids.len() {
        return Err(parse_err(
            path,
            labels.len() + 2,
            "fewer labels than feature rows",
        ));
    }
    Ok(labels)
}

/// Loads a stage, refusing manifests written for a different stage name.
pub fn load_stage(dir: impl AsRef<Path>, expected_stage: &str) -> Result<Stage> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(QtcError::Versioning(format!(
            "{}: format version {} (expected {FORMAT_VERSION})",
            dir.display(),
            manifest.format_version
        )));
    }
    if manifest.stage != expected_stage {
        return Err(QtcError::Versioning(format!(
            "{}: stage {:?} found where {expected_stage:?} expected",
            dir.display(),
            manifest.stage
        )));
    }
    let fpath: PathBuf = dir.join(FEATURES_FILE);
    let lpath: PathBuf = dir.join(LABELS_FILE);
    let fbytes = read_file(&fpath)?;
    let lbytes = read_file(&lpath)?;
    let features = parse_features(&fpath, &fbytes)?;
    let labels = parse_labels(&lpath, &lbytes, features.ids(), manifest.classes.len())?;
    if sha256_hex(&fbytes) != manifest.features_sha256
        || sha256_hex(&lbytes) != manifest.labels_sha256
    {
        return Err(QtcError::Versioning(format!(
            "{}: stage files do not match their manifest",
            dir.display()
        )));
    }
    Ok(Stage {
        name: manifest.stage,
        features,
        labels,
        encoding: LabelEncoding::new(manifest.classes),
        split: manifest.split,
        seed: manifest.seed,
        parameters: manifest.parameters,
        upstream_hash: manifest.upstream_hash,
    })
}
