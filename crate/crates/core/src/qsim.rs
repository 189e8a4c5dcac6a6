//! Statevector simulation over the gate set {H, P, RY, CX}.
//!
//! Basis index `i` encodes qubit `q` in bit `q` of `i`, so qubit 0 is the
//! least-significant bit. Gates update amplitudes in place; nothing here
//! builds a dense `2^n x 2^n` operator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

/// Upper bound keeping `2^n` amplitudes addressable and allocations sane.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QtcError::validation(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes; the vector must have length `2^n` and unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QtcError::validation(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QtcError::validation(format!(
                "state norm^2 is {norm}, expected 1"
            )));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        match gate {
            Gate::H { qubit } => {
                let h = FRAC_1_SQRT_2;
                self.apply_1q(*qubit, |a0, a1| ((a0 + a1) * h, (a0 - a1) * h));
            }
            Gate::P { qubit, angle } => {
                let phase = Complex64::from_polar(1.0, angle.value()?);
                let bit = 1 << qubit;
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a *= phase;
                    }
                }
            }
            Gate::Ry { qubit, angle } => {
                let half = 0.5 * angle.value()?;
                let (s, c) = half.sin_cos();
                self.apply_1q(*qubit, |a0, a1| (a0 * c - a1 * s, a0 * s + a1 * c));
            }
            Gate::Cx { control, target } => {
                let (cb, tb) = (1 << control, 1 << target);
                for i in 0..self.amplitudes.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amplitudes.swap(i, i | tb);
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_1q(
        &mut self,
        qubit: usize,
        f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64),
    ) {
        let bit = 1 << qubit;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (b0, b1) = f(self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = b0;
                self.amplitudes[i | bit] = b1;
            }
        }
    }
}

/// A gate angle: either a number or `scale * symbol` awaiting binding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Value(f64),
    Param { name: String, scale: f64 },
}

impl Angle {
    pub fn param(name: impl Into<String>) -> Self {
        Angle::Param {
            name: name.into(),
            scale: 1.0,
        }
    }

    pub fn value(&self) -> Result<f64> {
        match self {
            Angle::Value(v) => Ok(*v),
            Angle::Param { name, .. } => {
                Err(QtcError::validation(format!("unbound parameter {name:?}")))
            }
        }
    }

    fn negated(&self) -> Self {
        match self {
            Angle::Value(v) => Angle::Value(-v),
            Angle::Param { name, scale } => Angle::Param {
                name: name.clone(),
                scale: -scale,
            },
        }
    }
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::Value(v)
    }
}

/// H = (1/sqrt 2)[[1,1],[1,-1]], P(t) = diag(1, e^{it}),
/// RY(t) = [[cos t/2, -sin t/2],[sin t/2, cos t/2]], CX flips `target` when
/// `control` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H { qubit: usize },
    P { qubit: usize, angle: Angle },
    Ry { qubit: usize, angle: Angle },
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn h(qubit: usize) -> Self {
        Gate::H { qubit }
    }

    pub fn p(qubit: usize, angle: impl Into<Angle>) -> Self {
        Gate::P {
            qubit,
            angle: angle.into(),
        }
    }

    pub fn ry(qubit: usize, angle: impl Into<Angle>) -> Self {
        Gate::Ry {
            qubit,
            angle: angle.into(),
        }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::Cx { control, target }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H { qubit } | Gate::P { qubit, .. } | Gate::Ry { qubit, .. } => vec![*qubit],
            Gate::Cx { control, target } => vec![*control, *target],
        }
    }

    pub fn angle(&self) -> Option<&Angle> {
        match self {
            Gate::P { angle, .. } | Gate::Ry { angle, .. } => Some(angle),
            _ => None,
        }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        if let Some(q) = self.qubits().into_iter().find(|&q| q >= n_qubits) {
            return Err(QtcError::validation(format!(
                "gate {self:?} targets qubit {q} on a {n_qubits}-qubit register"
            )));
        }
        if let Gate::Cx { control, target } = self {
            if control == target {
                return Err(QtcError::validation(format!(
                    "CX control and target are both {control}"
                )));
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        match self {
            Gate::P { qubit, angle } => Gate::P {
                qubit: *qubit,
                angle: angle.negated(),
            },
            Gate::Ry { qubit, angle } => Gate::Ry {
                qubit: *qubit,
                angle: angle.negated(),
            },
            g => g.clone(),
        }
    }
}

/// Applies one gate to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Free parameter names, sorted.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.gates
            .iter()
            .filter_map(Gate::angle)
            .filter_map(|a| match a {
                Angle::Param { name, .. } => Some(name.clone()),
                Angle::Value(_) => None,
            })
            .collect()
    }

    pub fn is_bound(&self) -> bool {
        self.symbols().is_empty()
    }

    /// Substitutes values for the named parameters. Names not in `values`
    /// stay symbolic.
    pub fn bind(&self, values: &HashMap<String, f64>) -> Circuit {
        let bind_angle = |a: &Angle| match a {
            Angle::Param { name, scale } => match values.get(name) {
                Some(v) => Angle::Value(scale * v),
                None => a.clone(),
            },
            Angle::Value(_) => a.clone(),
        };
        let gates = self
            .gates
            .iter()
            .map(|g| match g {
                Gate::P { qubit, angle } => Gate::P {
                    qubit: *qubit,
                    angle: bind_angle(angle),
                },
                Gate::Ry { qubit, angle } => Gate::Ry {
                    qubit: *qubit,
                    angle: bind_angle(angle),
                },
                g => g.clone(),
            })
            .collect();
        Circuit {
            n_qubits: self.n_qubits,
            gates,
        }
    }
}

/// Runs `circuit` on `|0...0>`.
pub fn run(circuit: &Circuit) -> Result<StateVector> {
    run_from(StateVector::zero(circuit.n_qubits)?, circuit)
}

/// Runs `circuit` on a caller-supplied initial state.
pub fn run_from(mut state: StateVector, circuit: &Circuit) -> Result<StateVector> {
    if state.n_qubits() != circuit.n_qubits {
        return Err(QtcError::validation(format!(
            "{}-qubit circuit applied to a {}-qubit state",
            circuit.n_qubits,
            state.n_qubits()
        )));
    }
    if let Some(name) = circuit.symbols().into_iter().next() {
        return Err(QtcError::validation(format!("unbound parameter {name:?}")));
    }
    for g in &circuit.gates {
        state.apply(g)?;
    }
    Ok(state)
}

/// Gates reversed, each replaced by its inverse.
pub fn adjoint(circuit: &Circuit) -> Circuit {
    Circuit {
        n_qubits: circuit.n_qubits,
        gates: circuit.gates.iter().rev().map(Gate::inverse).collect(),
    }
}

pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes().iter().map(Complex64::norm_sqr).collect()
}

/// Multinomial draw of `shots` outcomes, deterministic for a given seed.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    sample_probabilities(&probabilities(state), shots, seed)
}

pub fn sample_probabilities(probs: &[f64], shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cumulative.push(acc);
    }
    // round-off can leave the total a hair under 1; never land on a
    // zero-probability tail outcome
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.gen::<f64>() * acc;
        let i = cumulative.partition_point(|&c| c <= u).min(last);
        *counts.entry(i).or_insert(0) += 1;
    }
    counts
}
