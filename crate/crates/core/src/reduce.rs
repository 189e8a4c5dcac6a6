//! PCA down to the qubit budget, then min-max scaling into the angle range
//! the feature maps expect.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component (divisor `n - 1`), nonincreasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }
}

/// Flip `v` so its largest-magnitude entry (first one on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Top-`k` right singular vectors of the column-centered data.
pub fn fit_pca(x: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if n < 2 || k < 1 || k > (n - 1).min(d) {
        return Err(QtcError::validation(format!(
            "PCA with {k} components needs 1 <= k <= min(n_samples - 1, n_features) = {}",
            n.saturating_sub(1).min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| QtcError::Numerical("SVD did not produce right singular vectors".into()))?;
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut c: Vec<f64> = v_t.row(i).iter().copied().collect();
        fix_sign(&mut c);
        components.push(c);
        explained_variance.push(sigma[i] * sigma[i] / (n - 1) as f64);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Projects `(x - mean)` onto the components; columns are named `pc1..pck`.
pub fn transform_pca(model: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.n_cols() != model.n_features() {
        return Err(QtcError::validation(format!(
            "PCA model expects {} features, got {}",
            model.n_features(),
            x.n_cols()
        )));
    }
    let mut values = Vec::with_capacity(x.n_rows() * model.n_components());
    for row in x.rows() {
        for c in &model.components {
            values.push(
                row.iter()
                    .zip(&model.mean)
                    .zip(c)
                    .map(|((v, m), w)| (v - m) * w)
                    .sum(),
            );
        }
    }
    let names = (1..=model.n_components())
        .map(|i| format!("pc{i}"))
        .collect();
    FeatureMatrix::new(x.ids().to_vec(), names, values)
}

/// Per-column affine map of the training range onto `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

pub fn fit_scaler(x: &FeatureMatrix, lo: f64, hi: f64) -> Result<RangeScaler> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(QtcError::validation(format!(
            "scale interval [{lo}, {hi}] is empty"
        )));
    }
    if x.n_rows() == 0 {
        return Err(QtcError::validation("cannot fit a scaler on zero rows"));
    }
    let d = x.n_cols();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in x.rows() {
        for j in 0..d {
            mins[j] = mins[j].min(row[j]);
            maxs[j] = maxs[j].max(row[j]);
        }
    }
    Ok(RangeScaler { mins, maxs, lo, hi })
}

impl RangeScaler {
    pub fn scale_value(&self, col: usize, v: f64) -> f64 {
        let (min, max) = (self.mins[col], self.maxs[col]);
        if max == min {
            return 0.5 * (self.lo + self.hi);
        }
        let t = self.lo + (self.hi - self.lo) * (v - min) / (max - min);
        t.clamp(self.lo, self.hi)
    }
}

pub fn transform_scale(scaler: &RangeScaler, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.n_cols() != scaler.mins.len() {
        return Err(QtcError::validation(format!(
            "scaler expects {} columns, got {}",
            scaler.mins.len(),
            x.n_cols()
        )));
    }
    let d = x.n_cols();
    let values = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| scaler.scale_value(i % d, v))
        .collect();
    FeatureMatrix::new(x.ids().to_vec(), x.feature_names().to_vec(), values)
}
