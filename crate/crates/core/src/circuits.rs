//! Pauli-expansion feature maps, the RY/CX ansatz, and their composition.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::qsim::{Angle, Circuit, Gate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMapKind {
    /// First order: single-qubit Z phases only.
    Z,
    /// Second order: adds ZZ phases on neighbouring pairs.
    Zz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub kind: FeatureMapKind,
    pub n_qubits: usize,
    pub reps: usize,
    pub entanglement: Entanglement,
}

impl FeatureMapSpec {
    pub fn zz(n_qubits: usize, reps: usize) -> Self {
        Self {
            kind: FeatureMapKind::Zz,
            n_qubits,
            reps,
            entanglement: Entanglement::Linear,
        }
    }

    pub fn z(n_qubits: usize, reps: usize) -> Self {
        Self {
            kind: FeatureMapKind::Z,
            ..Self::zz(n_qubits, reps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.reps == 0 {
            return Err(QtcError::validation(format!(
                "feature map needs at least one qubit and one repetition, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Neighbour pairs receiving a ZZ term.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match (self.kind, self.entanglement) {
            (FeatureMapKind::Z, _) => Vec::new(),
            (FeatureMapKind::Zz, Entanglement::Linear) => (0..self.n_qubits.saturating_sub(1))
                .map(|i| (i, i + 1))
                .collect(),
        }
    }
}

/// Pair coefficient `(pi - x_i)(pi - x_j)`.
pub fn pair_phase(xi: f64, xj: f64) -> f64 {
    (PI - xi) * (PI - xj)
}

/// Each repetition is H on every qubit, P(2 x_i) on qubit i, then for ZZ
/// maps CX(i, i+1) P(2 (pi - x_i)(pi - x_{i+1})) CX(i, i+1) per pair.
pub fn build_feature_map(spec: &FeatureMapSpec, x: &[f64]) -> Result<Circuit> {
    spec.validate()?;
    if x.len() != spec.n_qubits {
        return Err(QtcError::validation(format!(
            "feature map on {} qubits got a {}-dimensional input",
            spec.n_qubits,
            x.len()
        )));
    }
    let mut circ = Circuit::new(spec.n_qubits);
    let pairs = spec.pairs();
    for _ in 0..spec.reps {
        for q in 0..spec.n_qubits {
            circ.push(Gate::h(q));
        }
        for (q, &xq) in x.iter().enumerate() {
            circ.push(Gate::p(q, 2.0 * xq));
        }
        for &(i, j) in &pairs {
            circ.push(Gate::cx(i, j))
                .push(Gate::p(j, 2.0 * pair_phase(x[i], x[j])))
                .push(Gate::cx(i, j));
        }
    }
    Ok(circ)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub reps: usize,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, reps: usize) -> Self {
        Self { n_qubits, reps }
    }

    pub fn n_parameters(&self) -> usize {
        self.n_qubits * (self.reps + 1)
    }
}

pub fn theta_name(k: usize) -> String {
    format!("theta[{k}]")
}

/// RY layer, then `reps` times a CX chain followed by another RY layer.
/// Parameters are numbered layer-major, qubit-ascending.
pub fn build_ansatz(spec: &AnsatzSpec) -> Result<Circuit> {
    if spec.n_qubits == 0 {
        return Err(QtcError::validation("ansatz needs at least one qubit"));
    }
    let mut circ = Circuit::new(spec.n_qubits);
    let mut k = 0;
    let mut ry_layer = |circ: &mut Circuit| {
        for q in 0..spec.n_qubits {
            circ.push(Gate::ry(q, Angle::param(theta_name(k))));
            k += 1;
        }
    };
    ry_layer(&mut circ);
    for _ in 0..spec.reps {
        for q in 0..spec.n_qubits.saturating_sub(1) {
            circ.push(Gate::cx(q, q + 1));
        }
        ry_layer(&mut circ);
    }
    Ok(circ)
}

pub fn bind_ansatz(circuit: &Circuit, theta: &[f64]) -> Result<Circuit> {
    let expected = circuit.symbols().len();
    if theta.len() != expected {
        return Err(QtcError::validation(format!(
            "ansatz has {expected} parameters, got {}",
            theta.len()
        )));
    }
    let values: HashMap<String, f64> = theta
        .iter()
        .enumerate()
        .map(|(k, &v)| (theta_name(k), v))
        .collect();
    let bound = circuit.bind(&values);
    if let Some(name) = bound.symbols().into_iter().next() {
        return Err(QtcError::validation(format!(
            "parameter {name:?} left unbound"
        )));
    }
    Ok(bound)
}

/// `first` followed by `second`.
pub fn compose(first: &Circuit, second: &Circuit) -> Result<Circuit> {
    if first.n_qubits != second.n_qubits {
        return Err(QtcError::validation(format!(
            "cannot compose a {}-qubit circuit with a {}-qubit circuit",
            first.n_qubits, second.n_qubits
        )));
    }
    let mut gates = first.gates.clone();
    gates.extend(second.gates.iter().cloned());
    Ok(Circuit {
        n_qubits: first.n_qubits,
        gates,
    })
}
