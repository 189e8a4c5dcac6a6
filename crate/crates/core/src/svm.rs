//! Soft-margin kernel SVM on precomputed Gram matrices.
//!
//! The dual is solved by SMO with maximal-violating-pair selection (no
//! shrinking), so training is a deterministic function of `(G, y, C, tol)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::kernel::GramMatrix;
use crate::util::argmax;

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Multipliers at or below this are treated as zero.
pub const SUPPORT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryModel {
    /// Indices into the training set with `alpha > SUPPORT_EPS`.
    pub support: Vec<usize>,
    /// `alpha_i * y_i` for each support index.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub tol: f64,
    pub n_train: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmBinaryModel {
    /// Recovers `alpha_i` for every training point.
    pub fn alphas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_train];
        for (&i, &c) in self.support.iter().zip(&self.dual_coefs) {
            a[i] = c.abs();
        }
        a
    }
}

fn square_view(g: &GramMatrix, m: usize) -> Result<()> {
    if !g.is_square() || g.rows != m {
        return Err(QtcError::validation(format!(
            "Gram matrix is {}x{}, expected {m}x{m}",
            g.rows, g.cols
        )));
    }
    Ok(())
}

/// Trains a binary SVM; `y` holds `-1.0` / `+1.0`.
pub fn train_binary(g: &GramMatrix, y: &[f64], params: &SmoParams) -> Result<SvmBinaryModel> {
    let m = y.len();
    square_view(g, m)?;
    if !(params.c > 0.0) || !(params.tol > 0.0) {
        return Err(QtcError::validation("C and tol must be positive"));
    }
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(QtcError::validation(format!(
            "binary labels must be -1 or +1, got {v}"
        )));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(QtcError::validation(
            "binary SVM needs both classes present",
        ));
    }
    let c = params.c;
    let k = |i: usize, j: usize| g.get(i, j);
    let mut alpha = vec![0.0; m];
    // gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; m];

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..m {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                i = t;
                gmax = v;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                j = t;
                gmin = v;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let quad = (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(1e-12);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }

    let bias = compute_bias(&alpha, &grad, y, c);
    let support: Vec<usize> = (0..m).filter(|&t| alpha[t] > SUPPORT_EPS).collect();
    let dual_coefs = support.iter().map(|&t| alpha[t] * y[t]).collect();
    Ok(SvmBinaryModel {
        support,
        dual_coefs,
        bias,
        c,
        tol: params.tol,
        n_train: m,
        converged,
        iterations,
    })
}

/// Mean of `-y_t grad_t` over free multipliers, else the midpoint of the
/// feasible interval.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        // y_t f_t <= 1 at the upper bound, >= 1 at the lower bound
        if !(at_upper || at_lower) {
            sum_free += v;
            n_free += 1;
        } else if at_upper == (y[t] > 0.0) {
            ub = ub.min(v);
        } else {
            lb = lb.max(v);
        }
    }
    match (n_free, ub.is_finite(), lb.is_finite()) {
        (n, _, _) if n > 0 => sum_free / n as f64,
        (_, true, true) => 0.5 * (ub + lb),
        (_, true, false) => ub,
        (_, false, true) => lb,
        _ => 0.0,
    }
}

/// `f = sum_i coef_i k_row[support_i] + b` over a full training-set row.
pub fn decision(model: &SvmBinaryModel, k_row: &[f64]) -> Result<f64> {
    if k_row.len() != model.n_train {
        return Err(QtcError::validation(format!(
            "kernel row has {} entries, model was trained on {}",
            k_row.len(),
            model.n_train
        )));
    }
    Ok(model
        .support
        .iter()
        .zip(&model.dual_coefs)
        .map(|(&i, c)| c * k_row[i])
        .sum::<f64>()
        + model.bias)
}

/// `+1` when the decision value is nonnegative.
pub fn predict_binary(model: &SvmBinaryModel, k_row: &[f64]) -> Result<i8> {
    Ok(if decision(model, k_row)? >= 0.0 {
        1
    } else {
        -1
    })
}

/// Sum of multipliers minus the quadratic term; the dual being maximized.
pub fn dual_objective(g: &GramMatrix, y: &[f64], alpha: &[f64]) -> f64 {
    let m = y.len();
    let mut quad = 0.0;
    for i in 0..m {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * g.get(i, j);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// One-vs-rest ensemble: model `k` separates class `k` (+1) from the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvm {
    pub n_classes: usize,
    pub models: Vec<SvmBinaryModel>,
}

pub fn train_multiclass(
    g: &GramMatrix,
    labels: &[usize],
    n_classes: usize,
    params: &SmoParams,
) -> Result<MulticlassSvm> {
    if n_classes < 2 {
        return Err(QtcError::validation(
            "multiclass SVM needs at least two classes",
        ));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(QtcError::validation(format!(
            "label {l} out of range for {n_classes} classes"
        )));
    }
    let models = (0..n_classes)
        .into_par_iter()
        .map(|k| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == k { 1.0 } else { -1.0 })
                .collect();
            train_binary(g, &y, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassSvm { n_classes, models })
}

pub fn decision_values(models: &MulticlassSvm, k_row: &[f64]) -> Result<Vec<f64>> {
    models.models.iter().map(|m| decision(m, k_row)).collect()
}

/// Class with the largest decision value; ties go to the lowest index.
pub fn predict_multiclass(models: &MulticlassSvm, k_row: &[f64]) -> Result<usize> {
    Ok(argmax(&decision_values(models, k_row)?))
}

/// `(gamma <x, y> + coef0)^degree`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyKernelSpec {
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
}

impl PolyKernelSpec {
    /// Degree 3, `coef0 = 0` and `gamma = 1 / (d * mean per-feature variance)`
    /// of the training rows (1 when that variance is zero).
    pub fn fit_default(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let mut mean_var = 0.0;
        for j in 0..d {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
            mean_var += x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        }
        mean_var /= d.max(1) as f64;
        let gamma = if mean_var > 0.0 {
            1.0 / (d as f64 * mean_var)
        } else {
            1.0
        };
        Self {
            degree: 3,
            gamma,
            coef0: 0.0,
        }
    }
}

pub fn poly_kernel(x: &[f64], y: &[f64], spec: &PolyKernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(QtcError::validation(format!(
            "polynomial kernel on vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((spec.gamma * dot + spec.coef0).powi(spec.degree as i32))
}

pub fn poly_gram(
    x: &[Vec<f64>],
    y: Option<&[Vec<f64>]>,
    spec: &PolyKernelSpec,
) -> Result<GramMatrix> {
    let other = y.unwrap_or(x);
    let mut values = Vec::with_capacity(x.len() * other.len());
    for a in x {
        for b in other {
            values.push(poly_kernel(a, b, spec)?);
        }
    }
    GramMatrix::from_values(x.len(), other.len(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_gram(x: &[Vec<f64>]) -> GramMatrix {
        let spec = PolyKernelSpec {
            degree: 1,
            gamma: 1.0,
            coef0: 0.0,
        };
        poly_gram(x, None, &spec).unwrap()
    }

    fn two_point() -> (GramMatrix, Vec<f64>) {
        (linear_gram(&[vec![-1.0], vec![1.0]]), vec![-1.0, 1.0])
    }

    #[test]
    fn two_point_analytic() {
        let (g, y) = two_point();
        let params = SmoParams {
            c: 10.0,
            ..SmoParams::default()
        };
        let m = train_binary(&g, &y, &params).unwrap();
        let a = m.alphas();
        assert!((a[0] - 0.5).abs() < 1e-6 && (a[1] - 0.5).abs() < 1e-6);
        assert!(m.bias.abs() < 1e-6);
        assert!(m.converged);
        // f(x) = x on the support vectors
        assert!((decision(&m, &[1.0, -1.0]).unwrap() + 1.0).abs() < 1e-6);
        assert!((decision(&m, &[-1.0, 1.0]).unwrap() - 1.0).abs() < 1e-6);
        assert!((decision(&m, &[-0.3, 0.3]).unwrap() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn duplicated_points_same_decision() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..10 {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            xs.push(vec![
                s * 2.0 + rng.gen_range(-0.5..0.5),
                rng.gen_range(-1.0..1.0),
            ]);
            ys.push(s);
        }
        let params = SmoParams {
            c: 10.0,
            tol: 1e-8,
            ..SmoParams::default()
        };
        let single = train_binary(&linear_gram(&xs), &ys, &params).unwrap();
        let xs2: Vec<Vec<f64>> = xs.iter().chain(&xs).cloned().collect();
        let ys2: Vec<f64> = ys.iter().chain(&ys).copied().collect();
        let double = train_binary(&linear_gram(&xs2), &ys2, &params).unwrap();
        for _ in 0..20 {
            let p = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0)];
            let row1: Vec<f64> = xs.iter().map(|x| x[0] * p[0] + x[1] * p[1]).collect();
            let row2: Vec<f64> = xs2.iter().map(|x| x[0] * p[0] + x[1] * p[1]).collect();
            let (f1, f2) = (
                decision(&single, &row1).unwrap(),
                decision(&double, &row2).unwrap(),
            );
            assert!((f1 - f2).abs() < 1e-6, "{f1} vs {f2}");
        }
    }

    #[test]
    fn constraints_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| if x[0] + 0.3 * x[1] > 0.0 { 1.0 } else { -1.0 })
            .collect();
        let params = SmoParams {
            c: 5.0,
            ..SmoParams::default()
        };
        let m = train_binary(&linear_gram(&xs), &ys, &params).unwrap();
        let a = m.alphas();
        assert!(a.iter().all(|&v| (0.0..=5.0).contains(&v)));
        let s: f64 = a.iter().zip(&ys).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-8);
    }

    #[test]
    fn single_class_rejected() {
        let g = linear_gram(&[vec![1.0], vec![2.0]]);
        assert!(train_binary(&g, &[1.0, 1.0], &SmoParams::default()).is_err());
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = (0..30)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let params = SmoParams {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1,
        };
        let m = train_binary(&linear_gram(&xs), &ys, &params).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 1);
    }

    #[test]
    fn decision_edge_cases() {
        let m = SvmBinaryModel {
            support: vec![],
            dual_coefs: vec![],
            bias: 0.25,
            c: 1.0,
            tol: 1e-3,
            n_train: 3,
            converged: true,
            iterations: 0,
        };
        assert_eq!(decision(&m, &[1.0, 2.0, 3.0]).unwrap(), 0.25);
        assert!(decision(&m, &[1.0]).is_err());

        let (g, y) = two_point();
        let m = train_binary(
            &g,
            &y,
            &SmoParams {
                c: 10.0,
                ..SmoParams::default()
            },
        )
        .unwrap();
        let k = [0.4, -0.9];
        let k2: Vec<f64> = k.iter().map(|v| 2.0 * v).collect();
        let (f, f2) = (decision(&m, &k).unwrap(), decision(&m, &k2).unwrap());
        assert!((f2 - m.bias - 2.0 * (f - m.bias)).abs() < 1e-12);
        assert_eq!(predict_binary(&m, &[0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn multiclass_tie_and_binary_consistency() {
        let blank = |bias| SvmBinaryModel {
            support: vec![],
            dual_coefs: vec![],
            bias,
            c: 1.0,
            tol: 1e-3,
            n_train: 1,
            converged: true,
            iterations: 0,
        };
        let mc = MulticlassSvm {
            n_classes: 3,
            models: vec![blank(0.5), blank(0.5), blank(0.5)],
        };
        assert_eq!(predict_multiclass(&mc, &[0.0]).unwrap(), 0);

        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 - 3.5]).collect();
        let labels: Vec<usize> = xs.iter().map(|x| usize::from(x[0] > 0.0)).collect();
        let g = linear_gram(&xs);
        let mc = train_multiclass(&g, &labels, 2, &SmoParams::default()).unwrap();
        for x in &xs {
            let row: Vec<f64> = xs.iter().map(|t| t[0] * x[0]).collect();
            let via_binary = usize::from(predict_binary(&mc.models[1], &row).unwrap() == 1);
            assert_eq!(predict_multiclass(&mc, &row).unwrap(), via_binary);
        }
        assert!(train_multiclass(&g, &labels, 1, &SmoParams::default()).is_err());
    }

    #[test]
    fn poly_kernel_examples() {
        let unit = PolyKernelSpec {
            degree: 3,
            gamma: 1.0,
            coef0: 0.0,
        };
        assert_eq!(poly_kernel(&[1.0, 0.0], &[1.0, 0.0], &unit).unwrap(), 1.0);
        assert_eq!(poly_kernel(&[1.0, 0.0], &[0.0, 1.0], &unit).unwrap(), 0.0);
        let s = PolyKernelSpec {
            degree: 3,
            gamma: 0.5,
            coef0: 1.0,
        };
        assert!((poly_kernel(&[1.0, 2.0], &[3.0, 4.0], &s).unwrap() - 274.625).abs() < 1e-12);
        assert!(poly_kernel(&[1.0], &[1.0, 2.0], &s).is_err());
    }

    #[test]
    fn poly_default_gamma() {
        // per-feature variances 1 and 4 -> mean 2.5 -> gamma 1/(2 * 2.5)
        let x = vec![vec![-1.0, -2.0], vec![1.0, 2.0]];
        let s = PolyKernelSpec::fit_default(&x);
        assert_eq!(s.degree, 3);
        assert!((s.gamma - 0.2).abs() < 1e-15);
        assert_eq!(s.coef0, 0.0);
    }
}
