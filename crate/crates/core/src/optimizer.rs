//! COBYLA-style derivative-free minimizer (unconstrained).
//!
//! The method keeps `d + 1` points forming a simplex and fits the linear
//! function interpolating the objective on them. A trial step is taken from
//! the best vertex inside a trust region and replaces the worst vertex when
//! it helps; the radius `rho` halves when a step from a well-shaped simplex
//! fails to improve, and the run ends once `rho` reaches `rho_end`.
//!
//! Two additions over plain COBYLA: successive simplex gradients feed a
//! BFGS curvature estimate that shapes the trial step (dogleg within the
//! trust region), and the step radius may grow back towards `rho_begin`
//! after very successful steps. Plain linear steps zig-zag in curved
//! valleys and exhaust small evaluation budgets.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

/// Geometry: minimum vertex height, as a fraction of `rho`.
const MIN_HEIGHT: f64 = 0.25;
/// Geometry: maximum edge length, as a multiple of `rho`.
const MAX_EDGE: f64 = 2.1;
/// Length of a geometry-repair step, as a fraction of `rho`.
const REPAIR_STEP: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub rho_begin: f64,
    pub rho_end: f64,
    pub max_evaluations: usize,
    /// Only used to pick a direction when the simplex collapses.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rho_begin: 1.0,
            rho_end: 1e-4,
            max_evaluations: 30,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(QtcError::validation("cannot minimize over zero parameters"));
        }
        if !(self.rho_end > 0.0 && self.rho_end < self.rho_begin && self.rho_begin.is_finite()) {
            return Err(QtcError::validation(format!(
                "need 0 < rho_end < rho_begin, got rho_begin={} rho_end={}",
                self.rho_begin, self.rho_end
            )));
        }
        if self.max_evaluations < dim + 2 {
            return Err(QtcError::validation(format!(
                "max_evaluations must be at least dim + 2 = {}, got {}",
                dim + 2,
                self.max_evaluations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub evaluations: Vec<Evaluation>,
    pub best_so_far: Vec<f64>,
}

impl OptimizationTrace {
    fn push(&mut self, params: &[f64], value: f64) {
        let best = self
            .best_so_far
            .last()
            .map_or(value, |&b| if value < b { value } else { b });
        self.evaluations.push(Evaluation {
            params: params.to_vec(),
            value,
        });
        self.best_so_far.push(best);
    }

    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    /// Learning-curve CSV: `evaluation_index,objective,best_so_far`, one row
    /// per objective evaluation, preceded by a `#` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "# one row per objective evaluation; best_so_far is the running minimum\n\
             evaluation_index,objective,best_so_far\n",
        );
        for (i, (e, b)) in self.evaluations.iter().zip(&self.best_so_far).enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                i + 1,
                crate::util::fmt_f64(e.value),
                crate::util::fmt_f64(*b)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| QtcError::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| QtcError::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub trace: OptimizationTrace,
    /// `true` when the radius reached `rho_end` before the budget ran out.
    pub converged: bool,
}

struct Evaluator<F> {
    objective: F,
    trace: OptimizationTrace,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.objective)(x);
        if !v.is_finite() {
            return Err(QtcError::Numerical(format!(
                "objective returned {v} at x = {x:?}"
            )));
        }
        self.trace.push(x, v);
        Ok(v)
    }

    fn count(&self) -> usize {
        self.trace.len()
    }
}

fn norm(v: &DVector<f64>) -> f64 {
    v.norm()
}

/// Step minimizing `g.p + p'Hp/2` subject to `|p| <= radius` (dogleg).
fn dogleg(g: &DVector<f64>, h: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    let gn = norm(g);
    let steepest = -g * (radius / gn);
    let newton = match h.clone().cholesky() {
        Some(ch) => -ch.solve(g),
        None => return steepest,
    };
    if norm(&newton) <= radius {
        return newton;
    }
    let curvature = g.dot(&(h * g));
    if curvature <= 0.0 {
        return steepest;
    }
    let cauchy = -g * (gn * gn / curvature);
    if norm(&cauchy) >= radius {
        return steepest;
    }
    let d = &newton - &cauchy;
    let (a, b, c) = (
        d.dot(&d),
        2.0 * cauchy.dot(&d),
        cauchy.dot(&cauchy) - radius * radius,
    );
    let t = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    cauchy + d * t
}

/// Minimizes `objective` from `x0`. Every evaluation is recorded in the
/// returned trace; `f <= f(x0)` always holds.
pub fn minimize<F>(objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    config.validate(dim)?;
    let mut ev = Evaluator {
        objective,
        trace: OptimizationTrace::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut vertices: Vec<DVector<f64>> = vec![DVector::from_column_slice(x0)];
    let mut values = vec![ev.eval(x0)?];
    for i in 0..dim {
        let mut v = vertices[0].clone();
        v[i] += config.rho_begin;
        values.push(ev.eval(v.as_slice())?);
        vertices.push(v);
    }

    let mut rho = config.rho_begin;
    let mut radius = config.rho_begin;
    let mut hessian = DMatrix::<f64>::identity(dim, dim);
    let mut previous: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut converged = false;

    while ev.count() < config.max_evaluations {
        let best = argmin(&values);
        let others: Vec<usize> = (0..=dim).filter(|&i| i != best).collect();
        let edges = DMatrix::from_fn(dim, dim, |r, c| vertices[others[r]][c] - vertices[best][c]);
        let diffs = DVector::from_fn(dim, |r, _| values[others[r]] - values[best]);
        let inverse = edges.clone().try_inverse();

        // geometry: every edge short enough and every vertex far enough
        // from the face spanned by the others
        let mut repair: Option<(usize, DVector<f64>)> = None;
        match &inverse {
            Some(inv) => {
                let lengths: Vec<f64> = (0..dim).map(|r| edges.row(r).norm()).collect();
                let heights: Vec<f64> = (0..dim).map(|c| 1.0 / inv.column(c).norm()).collect();
                let far = (0..dim)
                    .filter(|&r| lengths[r] > MAX_EDGE * rho)
                    .max_by(|&a, &b| lengths[a].total_cmp(&lengths[b]).then(b.cmp(&a)));
                let flat = (0..dim)
                    .filter(|&r| heights[r] < MIN_HEIGHT * rho)
                    .min_by(|&a, &b| heights[a].total_cmp(&heights[b]).then(a.cmp(&b)));
                if let Some(r) = far.or(flat) {
                    let u = inv.column(r).into_owned();
                    repair = Some((r, &u / u.norm()));
                }
            }
            None => {
                let r = 0;
                repair = Some((r, orthogonal_direction(&edges, r, &mut rng)));
            }
        }

        let gradient = inverse.as_ref().map(|inv| inv * &diffs);

        if let Some((r, u)) = repair {
            let mut step = u * (REPAIR_STEP * rho);
            if let Some(g) = &gradient {
                if g.dot(&step) > 0.0 {
                    step = -step;
                }
            }
            let x = &vertices[best] + step;
            let idx = others[r];
            values[idx] = ev.eval(x.as_slice())?;
            vertices[idx] = x;
            continue;
        }

        let g = gradient.expect("simplex is nonsingular here");
        let xb = vertices[best].clone();
        match &previous {
            Some((px, pg)) if *px != xb => {
                let s = &xb - px;
                let y = &g - pg;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    let hs = &hessian * &s;
                    hessian += &y * y.transpose() / sy - &hs * hs.transpose() / s.dot(&hs);
                }
                previous = Some((xb.clone(), g.clone()));
            }
            None => previous = Some((xb.clone(), g.clone())),
            _ => {}
        }

        let gn = g.norm();
        if gn == 0.0 {
            if rho <= config.rho_end {
                converged = true;
                break;
            }
            rho = (rho * SHRINK).max(config.rho_end);
            radius = rho;
            continue;
        }

        let step = dogleg(&g, &hessian, radius);
        let predicted = -(g.dot(&step) + 0.5 * step.dot(&(&hessian * &step)));
        let trial = &xb + &step;
        let f_trial = ev.eval(trial.as_slice())?;
        let worst = *others
            .iter()
            .max_by(|&&a, &&b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
            .expect("dim >= 1");

        if f_trial < values[best] {
            let ratio = if predicted > 0.0 {
                (values[best] - f_trial) / predicted
            } else {
                0.0
            };
            values[worst] = f_trial;
            vertices[worst] = trial;
            if ratio > 0.7 && step.norm() > 0.9 * radius {
                radius = (2.0 * radius).min(config.rho_begin);
            }
        } else {
            if f_trial < values[worst] {
                values[worst] = f_trial;
                vertices[worst] = trial;
            }
            if rho <= config.rho_end {
                converged = true;
                break;
            }
            if radius > rho {
                radius = (SHRINK * radius).max(rho);
            } else {
                rho = (rho * SHRINK).max(config.rho_end);
                radius = rho;
            }
        }
    }

    let best = argmin(&values);
    Ok(MinimizeResult {
        x: vertices[best].as_slice().to_vec(),
        f: values[best],
        trace: ev.trace,
        converged,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Random unit vector orthogonal to every edge except row `skip`.
fn orthogonal_direction(edges: &DMatrix<f64>, skip: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let dim = edges.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for r in (0..dim).filter(|&r| r != skip) {
        let mut e = edges.row(r).transpose();
        for b in &basis {
            e -= b * b.dot(&e);
        }
        let n = e.norm();
        if n > 1e-12 {
            basis.push(e / n);
        }
    }
    loop {
        let mut u = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        for b in &basis {
            u -= b * b.dot(&u);
        }
        let n = u.norm();
        if n > 1e-6 {
            return u / n;
        }
    }
}
