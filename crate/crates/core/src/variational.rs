//! Variational classifiers: feature map followed by a trainable RY/CX
//! ansatz, read out by folding basis outcomes onto classes.
//!
//! Outcome `i` counts towards class `i mod n_classes`. VQC trains with
//! cross-entropy, QNNC with squared error against one-hot targets; both use
//! the same circuits and optimizer.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{bind_ansatz, build_ansatz, AnsatzSpec, FeatureMapSpec};
use crate::error::{QtcError, Result};
use crate::kernel::feature_state;
use crate::optimizer::{minimize, OptimizationTrace, OptimizerConfig};
use crate::qsim::{probabilities, run_from, sample_probabilities, Circuit, StateVector};
use crate::util::{argmax, mix_seed};

/// Floor applied to the true-class probability inside the log.
pub const CE_EPS: f64 = 1e-10;
pub const DEFAULT_SHOTS: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ExecutionMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpret {
    Modulo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalModel {
    pub feature_map: FeatureMapSpec,
    pub ansatz: AnsatzSpec,
    pub theta: Vec<f64>,
    pub n_classes: usize,
    pub interpret: Interpret,
    pub loss: LossKind,
    pub mode: ExecutionMode,
}

impl VariationalModel {
    /// Default circuits for `n_qubits`: ZZ map (2 reps, linear) and a
    /// one-repetition ansatz, with `theta` zeroed.
    pub fn template(
        n_qubits: usize,
        n_classes: usize,
        loss: LossKind,
        mode: ExecutionMode,
    ) -> Self {
        let ansatz = AnsatzSpec::new(n_qubits, 1);
        Self {
            feature_map: FeatureMapSpec::zz(n_qubits, 2),
            theta: vec![0.0; ansatz.n_parameters()],
            ansatz,
            n_classes,
            interpret: Interpret::Modulo,
            loss,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_map.validate()?;
        if self.ansatz.n_qubits != self.feature_map.n_qubits {
            return Err(QtcError::validation(
                "feature map and ansatz act on different qubit counts",
            ));
        }
        if self.theta.len() != self.ansatz.n_parameters() {
            return Err(QtcError::validation(format!(
                "ansatz has {} parameters, theta has {}",
                self.ansatz.n_parameters(),
                self.theta.len()
            )));
        }
        if self.n_classes < 2 {
            return Err(QtcError::validation("need at least two classes"));
        }
        if let ExecutionMode::Sampled { shots: 0, .. } = self.mode {
            return Err(QtcError::validation("sampled mode needs at least one shot"));
        }
        Ok(())
    }
}

/// Folds a distribution over basis outcomes onto `n_classes` classes.
pub fn fold_outcomes(probs: &[f64], n_classes: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_classes];
    for (i, p) in probs.iter().enumerate() {
        out[i % n_classes] += p;
    }
    out
}

fn readout(
    state: &StateVector,
    n_classes: usize,
    mode: ExecutionMode,
    seed_index: u64,
) -> Vec<f64> {
    let probs = probabilities(state);
    match mode {
        ExecutionMode::Exact => fold_outcomes(&probs, n_classes),
        ExecutionMode::Sampled { shots, seed } => {
            let counts = sample_probabilities(&probs, shots, mix_seed(seed, seed_index, 0));
            let mut freq = vec![0.0; probs.len()];
            for (i, c) in counts {
                freq[i] = c as f64 / shots as f64;
            }
            fold_outcomes(&freq, n_classes)
        }
    }
}

fn check_input(model: &VariationalModel, x: &[f64]) -> Result<()> {
    if x.len() != model.feature_map.n_qubits {
        return Err(QtcError::validation(format!(
            "model expects {} features, got {}",
            model.feature_map.n_qubits,
            x.len()
        )));
    }
    Ok(())
}

fn bound_ansatz(model: &VariationalModel) -> Result<Circuit> {
    bind_ansatz(&build_ansatz(&model.ansatz)?, &model.theta)
}

/// Class distribution for one input. Sampled mode draws with the model seed.
pub fn class_probabilities(model: &VariationalModel, x: &[f64]) -> Result<Vec<f64>> {
    model.validate()?;
    check_input(model, x)?;
    let state = run_from(feature_state(&model.feature_map, x)?, &bound_ansatz(model)?)?;
    Ok(readout(&state, model.n_classes, model.mode, 0))
}

fn sample_loss(kind: LossKind, p: &[f64], label: usize) -> f64 {
    match kind {
        LossKind::CrossEntropy => -p[label].max(CE_EPS).ln(),
        LossKind::SquaredError => p
            .iter()
            .enumerate()
            .map(|(c, &v)| {
                let t = if c == label { 1.0 } else { 0.0 };
                (v - t) * (v - t)
            })
            .sum(),
    }
}

/// Mean loss of already-folded class distributions.
pub fn loss_from_probabilities(kind: LossKind, probs: &[Vec<f64>], y: &[usize]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    probs
        .iter()
        .zip(y)
        .map(|(p, &l)| sample_loss(kind, p, l))
        .sum::<f64>()
        / probs.len() as f64
}

/// Feature-map states cached per sample; only the ansatz is re-run per
/// evaluation.
struct EncodedSet {
    states: Vec<StateVector>,
}

impl EncodedSet {
    fn new(spec: &FeatureMapSpec, x: &[Vec<f64>]) -> Result<Self> {
        let states = x
            .par_iter()
            .map(|r| feature_state(spec, r))
            .collect::<Result<_>>()?;
        Ok(Self { states })
    }

    fn class_probabilities(&self, model: &VariationalModel) -> Result<Vec<Vec<f64>>> {
        let ansatz = bound_ansatz(model)?;
        self.states
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(readout(
                    &run_from(s.clone(), &ansatz)?,
                    model.n_classes,
                    model.mode,
                    i as u64,
                ))
            })
            .collect()
    }
}

fn check_labels(model: &VariationalModel, x: &[Vec<f64>], y: &[usize]) -> Result<()> {
    if x.len() != y.len() {
        return Err(QtcError::validation(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if let Some(&l) = y.iter().find(|&&l| l >= model.n_classes) {
        return Err(QtcError::validation(format!(
            "label {l} out of range for {} classes",
            model.n_classes
        )));
    }
    for r in x {
        check_input(model, r)?;
    }
    Ok(())
}

pub fn loss(model: &VariationalModel, x: &[Vec<f64>], y: &[usize]) -> Result<f64> {
    model.validate()?;
    check_labels(model, x, y)?;
    let probs = EncodedSet::new(&model.feature_map, x)?.class_probabilities(model)?;
    Ok(loss_from_probabilities(model.loss, &probs, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    pub model: VariationalModel,
    pub curve: OptimizationTrace,
    pub converged: bool,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Draws `theta` uniformly from `[-pi, pi]` with `init_seed`, then
/// minimizes the training loss.
pub fn train(
    x: &[Vec<f64>],
    y: &[usize],
    template: &VariationalModel,
    config: &OptimizerConfig,
    init_seed: u64,
) -> Result<TrainingResult> {
    if x.is_empty() {
        return Err(QtcError::validation("training set is empty"));
    }
    template.validate()?;
    check_labels(template, x, y)?;
    let encoded = EncodedSet::new(&template.feature_map, x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    let theta0: Vec<f64> = (0..template.ansatz.n_parameters())
        .map(|_| rng.gen_range(-PI..=PI))
        .collect();

    let mut scratch = template.clone();
    let objective = |theta: &[f64]| {
        scratch.theta.copy_from_slice(theta);
        match encoded.class_probabilities(&scratch) {
            Ok(p) => loss_from_probabilities(scratch.loss, &p, y),
            Err(_) => f64::NAN,
        }
    };
    let result = minimize(objective, &theta0, config)?;
    let model = VariationalModel {
        theta: result.x,
        ..template.clone()
    };
    Ok(TrainingResult {
        initial_loss: result.trace.evaluations[0].value,
        final_loss: result.f,
        model,
        curve: result.trace,
        converged: result.converged,
    })
}

/// Most probable class per row; ties go to the lowest index.
pub fn predict(model: &VariationalModel, x: &[Vec<f64>]) -> Result<Vec<usize>> {
    model.validate()?;
    for r in x {
        check_input(model, r)?;
    }
    let probs = EncodedSet::new(&model.feature_map, x)?.class_probabilities(model)?;
    Ok(probs.iter().map(|p| argmax(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn exact(loss: LossKind, n_classes: usize) -> VariationalModel {
        VariationalModel::template(2, n_classes, loss, ExecutionMode::Exact)
    }

    #[test]
    fn zero_theta_at_pi() {
        let m = exact(LossKind::CrossEntropy, 3);
        let p = class_probabilities(&m, &[PI, PI]).unwrap();
        assert!(
            (p[0] - 1.0).abs() < 1e-10 && p[1].abs() < 1e-10 && p[2].abs() < 1e-10,
            "{p:?}"
        );
    }

    #[test]
    fn probabilities_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = exact(LossKind::CrossEntropy, 3);
        for _ in 0..50 {
            m.theta = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
            let x = [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
            let p = class_probabilities(&m, &x).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn four_classes_on_two_qubits_is_identity_readout() {
        let mut m = exact(LossKind::CrossEntropy, 4);
        m.theta = vec![0.3, -1.2, 0.8, 2.0];
        let x = [0.4, 1.3];
        let p = class_probabilities(&m, &x).unwrap();
        let state = run_from(
            feature_state(&m.feature_map, &x).unwrap(),
            &bound_ansatz(&m).unwrap(),
        )
        .unwrap();
        for (a, b) in p.iter().zip(probabilities(&state)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_values() {
        let perfect = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(
            loss_from_probabilities(LossKind::CrossEntropy, &perfect, &[0, 1]),
            0.0
        );
        assert_eq!(
            loss_from_probabilities(LossKind::SquaredError, &perfect, &[0, 1]),
            0.0
        );
        let uniform = vec![vec![1.0 / 3.0; 3]];
        assert!(
            (loss_from_probabilities(LossKind::CrossEntropy, &uniform, &[2]) - 3f64.ln()).abs()
                < 1e-12
        );
        assert!(
            (loss_from_probabilities(LossKind::SquaredError, &uniform, &[2]) - 2.0 / 3.0).abs()
                < 1e-12
        );
        // zero probability is floored, not infinite
        let zero = vec![vec![1.0, 0.0, 0.0]];
        assert!(
            (loss_from_probabilities(LossKind::CrossEntropy, &zero, &[1]) + CE_EPS.ln()).abs()
                < 1e-9
        );
    }

    #[test]
    fn loss_matches_per_sample_probabilities() {
        let mut m = exact(LossKind::SquaredError, 3);
        m.theta = vec![0.1, 0.2, -0.3, 0.4];
        let x = vec![vec![0.5, 1.0], vec![2.0, 0.3]];
        let y = vec![1, 2];
        let direct: f64 = x
            .iter()
            .zip(&y)
            .map(|(r, &l)| sample_loss(m.loss, &class_probabilities(&m, r).unwrap(), l))
            .sum::<f64>()
            / 2.0;
        assert!((loss(&m, &x, &y).unwrap() - direct).abs() < 1e-14);
        assert!(loss(&m, &x, &[1, 3]).is_err());
    }

    #[test]
    fn predict_rules() {
        assert_eq!(argmax(&[1.0, 0.0, 0.0]), 0);
        assert_eq!(argmax(&[0.2, 0.6, 0.2]), 1);
        assert_eq!(argmax(&[1.0 / 3.0; 3]), 0);
        let m = exact(LossKind::CrossEntropy, 3);
        assert_eq!(predict(&m, &[vec![PI, PI]]).unwrap(), [0]);
        assert!(predict(&m, &[vec![PI]]).is_err());
    }

    #[test]
    fn continuity_in_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut m = exact(LossKind::CrossEntropy, 3);
        for _ in 0..10 {
            m.theta = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
            let x = [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
            let p = class_probabilities(&m, &x).unwrap();
            let k = rng.gen_range(0..4);
            let mut moved = m.clone();
            moved.theta[k] += 1e-6;
            let q = class_probabilities(&moved, &x).unwrap();
            assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-5));
        }
    }

    #[test]
    fn sampled_converges_to_exact() {
        let mut m = exact(LossKind::CrossEntropy, 3);
        m.theta = vec![0.7, -0.4, 1.1, 0.2];
        let x = [0.9, 2.1];
        let p = class_probabilities(&m, &x).unwrap();
        let shots = 100_000;
        m.mode = ExecutionMode::Sampled { shots, seed: 77 };
        let q = class_probabilities(&m, &x).unwrap();
        for (a, b) in p.iter().zip(&q) {
            let sigma = (a * (1.0 - a) / shots as f64).sqrt();
            assert!((a - b).abs() <= 5.0 * sigma + 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn training_is_deterministic_and_improves() {
        let x = vec![
            vec![0.3, 0.4],
            vec![0.5, 0.2],
            vec![2.8, 2.9],
            vec![2.6, 3.0],
            vec![1.5, 0.2],
            vec![1.6, 0.1],
        ];
        let y = vec![0, 0, 1, 1, 2, 2];
        let template = exact(LossKind::CrossEntropy, 3);
        let cfg = OptimizerConfig {
            max_evaluations: 30,
            ..OptimizerConfig::default()
        };
        let a = train(&x, &y, &template, &cfg, 42).unwrap();
        let b = train(&x, &y, &template, &cfg, 42).unwrap();
        assert_eq!(a.model.theta, b.model.theta);
        assert!(a.final_loss <= a.initial_loss);
        assert!(a.curve.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        assert!((loss(&a.model, &x, &y).unwrap() - a.final_loss).abs() < 1e-12);
        assert!(train(&[], &[], &template, &cfg, 1).is_err());
    }
}
