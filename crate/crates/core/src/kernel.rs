//! Fidelity quantum kernel `K(x, y) = |<phi(y)|phi(x)>|^2`.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{build_feature_map, compose, FeatureMapSpec};
use crate::error::{QtcError, Result};
use crate::qsim::{adjoint, run, sample, StateVector};
use crate::util::{fmt_f64, mix_seed, sha256_hex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum KernelMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

impl KernelMode {
    /// `shots == 0` selects exact evaluation.
    pub fn from_shots(shots: u64, seed: u64) -> Self {
        if shots == 0 {
            KernelMode::Exact
        } else {
            KernelMode::Sampled { shots, seed }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub values: Vec<f64>,
    pub mode: KernelMode,
    pub feature_map: Option<FeatureMapSpec>,
}

impl GramMatrix {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(QtcError::validation(format!(
                "{} values for a {rows}x{cols} Gram matrix",
                values.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            mode: KernelMode::Exact,
            feature_map: None,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }
}

pub fn feature_state(spec: &FeatureMapSpec, x: &[f64]) -> Result<StateVector> {
    run(&build_feature_map(spec, x)?)
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    b.inner(a).norm_sqr().min(1.0)
}

pub fn exact_kernel(spec: &FeatureMapSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(fidelity(&feature_state(spec, x)?, &feature_state(spec, y)?))
}

/// Fraction of all-zero outcomes when sampling `U(y)^dagger U(x) |0>`.
pub fn sampled_kernel(
    spec: &FeatureMapSpec,
    x: &[f64],
    y: &[f64],
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if shots == 0 {
        return Err(QtcError::validation(
            "sampled kernel needs at least one shot",
        ));
    }
    let circ = compose(
        &build_feature_map(spec, x)?,
        &adjoint(&build_feature_map(spec, y)?),
    )?;
    let counts = sample(&run(&circ)?, shots, seed);
    Ok(counts.get(&0).copied().unwrap_or(0) as f64 / shots as f64)
}

fn check_dims(spec: &FeatureMapSpec, points: &[Vec<f64>]) -> Result<()> {
    match points.iter().position(|p| p.len() != spec.n_qubits) {
        Some(i) => Err(QtcError::validation(format!(
            "point {i} has {} features, feature map expects {}",
            points[i].len(),
            spec.n_qubits
        ))),
        None => Ok(()),
    }
}

/// Kernel matrix between `x` rows and `y` rows (or `x` with itself).
///
/// The square case evaluates only the upper triangle and mirrors it. Sampled
/// entries use a seed derived from `(seed, i, j)`, so the result does not
/// depend on evaluation order.
pub fn gram(
    spec: &FeatureMapSpec,
    x: &[Vec<f64>],
    y: Option<&[Vec<f64>]>,
    mode: KernelMode,
) -> Result<GramMatrix> {
    spec.validate()?;
    check_dims(spec, x)?;
    if let Some(y) = y {
        check_dims(spec, y)?;
    }
    let (rows, cols) = (x.len(), y.map_or(x.len(), <[_]>::len));
    let square = y.is_none();
    let pairs: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (if square { i } else { 0 }..cols).map(move |j| (i, j)))
        .collect();

    let entries: Vec<f64> = match mode {
        KernelMode::Exact => {
            let states_x: Vec<StateVector> = x
                .par_iter()
                .map(|p| feature_state(spec, p))
                .collect::<Result<_>>()?;
            let states_y: Vec<StateVector> = match y {
                Some(y) => y
                    .par_iter()
                    .map(|p| feature_state(spec, p))
                    .collect::<Result<_>>()?,
                None => Vec::new(),
            };
            let other = if square { &states_x } else { &states_y };
            pairs
                .par_iter()
                .map(|&(i, j)| {
                    if square && i == j {
                        1.0
                    } else {
                        fidelity(&states_x[i], &other[j])
                    }
                })
                .collect()
        }
        KernelMode::Sampled { shots, seed } => {
            let other = y.unwrap_or(x);
            pairs
                .par_iter()
                .map(|&(i, j)| {
                    sampled_kernel(
                        spec,
                        &x[i],
                        &other[j],
                        shots,
                        mix_seed(seed, i as u64, j as u64),
                    )
                })
                .collect::<Result<_>>()?
        }
    };

    let mut values = vec![0.0; rows * cols];
    for (&(i, j), v) in pairs.iter().zip(entries) {
        values[i * cols + j] = v;
        if square {
            values[j * cols + i] = v;
        }
    }
    Ok(GramMatrix {
        rows,
        cols,
        values,
        mode,
        feature_map: Some(spec.clone()),
    })
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to zero.
pub fn psd_project(g: &GramMatrix) -> Result<GramMatrix> {
    if !g.is_square() {
        return Err(QtcError::validation("PSD projection needs a square matrix"));
    }
    let n = g.rows;
    let m = g.to_dmatrix();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt =
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(GramMatrix {
        values,
        ..g.clone()
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(g: &GramMatrix) -> f64 {
    SymmetricEigen::new(g.to_dmatrix()).eigenvalues.min()
}

pub const GRAM_FILE: &str = "gram.csv";
pub const GRAM_MANIFEST_FILE: &str = "gram.manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramManifest {
    pub feature_map: Option<FeatureMapSpec>,
    pub mode: KernelMode,
    pub rows: usize,
    pub cols: usize,
    /// Hash of the input rows the matrix was computed from.
    pub data_hash: String,
    pub values_sha256: String,
    pub upstream_hash: Option<String>,
}

pub fn data_hash(points: &[Vec<f64>]) -> String {
    let mut text = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

fn gram_csv(g: &GramMatrix) -> Vec<u8> {
    let mut out = String::new();
    for i in 0..g.rows {
        let row: Vec<String> = g.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Writes `gram.csv` (no header) and `gram.manifest.json` into `dir`.
pub fn write_gram(
    dir: impl AsRef<Path>,
    g: &GramMatrix,
    data_hash: &str,
    upstream_hash: Option<String>,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| QtcError::io(dir, e))?;
    let csv = gram_csv(g);
    let manifest = GramManifest {
        feature_map: g.feature_map.clone(),
        mode: g.mode,
        rows: g.rows,
        cols: g.cols,
        data_hash: data_hash.to_string(),
        values_sha256: sha256_hex(&csv),
        upstream_hash,
    };
    let mut mbytes = serde_json::to_vec_pretty(&manifest)?;
    mbytes.push(b'\n');
    let gpath = dir.join(GRAM_FILE);
    std::fs::write(&gpath, &csv).map_err(|e| QtcError::io(&gpath, e))?;
    let mpath = dir.join(GRAM_MANIFEST_FILE);
    std::fs::write(&mpath, &mbytes).map_err(|e| QtcError::io(&mpath, e))?;
    Ok(())
}

pub fn read_gram(dir: impl AsRef<Path>) -> Result<(GramMatrix, GramManifest)> {
    let dir = dir.as_ref();
    let mpath = dir.join(GRAM_MANIFEST_FILE);
    let manifest: GramManifest =
        serde_json::from_slice(&std::fs::read(&mpath).map_err(|e| QtcError::io(&mpath, e))?)?;
    let gpath = dir.join(GRAM_FILE);
    let bytes = std::fs::read(&gpath).map_err(|e| QtcError::io(&gpath, e))?;
    let mut values = Vec::with_capacity(manifest.rows * manifest.cols);
    let text = String::from_utf8_lossy(&bytes);
    for (i, line) in text.lines().enumerate() {
        let parse_err = |msg: String| QtcError::Parse {
            path: gpath.clone(),
            row: i + 1,
            message: msg,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != manifest.cols {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                manifest.cols,
                fields.len()
            )));
        }
        for f in fields {
            values.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err(format!("invalid number {f:?}")))?,
            );
        }
    }
    if values.len() != manifest.rows * manifest.cols {
        return Err(QtcError::Parse {
            path: gpath,
            row: text.lines().count() + 1,
            message: format!("expected {} rows", manifest.rows),
        });
    }
    if sha256_hex(&bytes) != manifest.values_sha256 {
        return Err(QtcError::Versioning(format!(
            "{}: does not match its manifest",
            gpath.display()
        )));
    }
    let g = GramMatrix {
        rows: manifest.rows,
        cols: manifest.cols,
        values,
        mode: manifest.mode,
        feature_map: manifest.feature_map.clone(),
    };
    Ok((g, manifest))
}

/// Square training Gram, reusing `dir` when its manifest matches
/// `(spec, data hash, mode)` and recomputing (and rewriting) otherwise.
pub fn cached_gram(
    dir: impl AsRef<Path>,
    spec: &FeatureMapSpec,
    x: &[Vec<f64>],
    mode: KernelMode,
) -> Result<GramMatrix> {
    let dir = dir.as_ref();
    let hash = data_hash(x);
    if let Ok((g, m)) = read_gram(dir) {
        if m.feature_map.as_ref() == Some(spec)
            && m.mode == mode
            && m.data_hash == hash
            && g.is_square()
        {
            return Ok(g);
        }
    }
    let g = gram(spec, x, None, mode)?;
    write_gram(dir, &g, &hash, None)?;
    Ok(g)
}
