//! Serialized trained models (`model.json`) and inference from them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuits::FeatureMapSpec;
use crate::error::{QtcError, Result};
use crate::kernel::{gram, KernelMode};
use crate::svm::{MulticlassSvm, PolyKernelSpec};
use crate::util::argmax;
use crate::variational::{self, VariationalModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelType {
    /// Classical SVM, polynomial kernel of degree 3
    Svc,
    /// SVM on the fidelity quantum kernel
    Qsvc,
    /// Variational quantum classifier (cross-entropy)
    Vqc,
    /// Quantum neural network classifier (squared error)
    Qnnc,
}

impl ModelType {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelType::Svc => "svc",
            ModelType::Qsvc => "qsvc",
            ModelType::Vqc => "vqc",
            ModelType::Qnnc => "qnnc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelChoice {
    Polynomial(PolyKernelSpec),
    Quantum {
        feature_map: FeatureMapSpec,
        estimator: KernelMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRecord {
    pub support_ids: Vec<String>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub id: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSvmRecord {
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub kernel: KernelChoice,
    /// One-vs-rest models, indexed by class.
    pub per_class: Vec<BinaryRecord>,
    /// Feature rows for every id referenced by `per_class`.
    pub support_vectors: Vec<SupportVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalRecord {
    #[serde(flatten)]
    pub model: VariationalModel,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelBody {
    Svc(KernelSvmRecord),
    Qsvc(KernelSvmRecord),
    Vqc(VariationalRecord),
    Qnnc(VariationalRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    #[serde(flatten)]
    pub body: ModelBody,
    pub classes: Vec<String>,
    pub n_features: usize,
    /// Manifest hash of the feature stage the model was trained on.
    pub upstream_hash: Option<String>,
}

impl TrainedModel {
    /// Packs a one-vs-rest SVM trained on `train_rows` (ids in `train_ids`).
    pub fn from_svm(
        kind: ModelType,
        svm: &MulticlassSvm,
        kernel: KernelChoice,
        train_ids: &[String],
        train_rows: &[Vec<f64>],
        classes: Vec<String>,
    ) -> Result<Self> {
        let mut used = BTreeMap::new();
        let per_class = svm
            .models
            .iter()
            .map(|m| {
                for &i in &m.support {
                    used.insert(i, ());
                }
                BinaryRecord {
                    support_ids: m.support.iter().map(|&i| train_ids[i].clone()).collect(),
                    dual_coefs: m.dual_coefs.clone(),
                    bias: m.bias,
                    converged: m.converged,
                }
            })
            .collect();
        let support_vectors = used
            .keys()
            .map(|&i| SupportVector {
                id: train_ids[i].clone(),
                features: train_rows[i].clone(),
            })
            .collect();
        let c = svm.models.first().map_or(crate::svm::DEFAULT_C, |m| m.c);
        let tol = svm
            .models
            .first()
            .map_or(crate::svm::DEFAULT_TOL, |m| m.tol);
        let record = KernelSvmRecord {
            c,
            tol,
            kernel,
            per_class,
            support_vectors,
        };
        let body = match kind {
            ModelType::Svc => ModelBody::Svc(record),
            ModelType::Qsvc => ModelBody::Qsvc(record),
            other => {
                return Err(QtcError::validation(format!(
                    "{} is not a kernel SVM",
                    other.as_str()
                )));
            }
        };
        Ok(Self {
            body,
            classes,
            n_features: train_rows.first().map_or(0, Vec::len),
            upstream_hash: None,
        })
    }

    pub fn from_variational(
        model: VariationalModel,
        converged: bool,
        classes: Vec<String>,
    ) -> Self {
        let n_features = model.feature_map.n_qubits;
        let record = VariationalRecord { model, converged };
        let body = match record.model.loss {
            variational::LossKind::CrossEntropy => ModelBody::Vqc(record),
            variational::LossKind::SquaredError => ModelBody::Qnnc(record),
        };
        Self {
            body,
            classes,
            n_features,
            upstream_hash: None,
        }
    }

    pub fn model_type(&self) -> ModelType {
        match self.body {
            ModelBody::Svc(_) => ModelType::Svc,
            ModelBody::Qsvc(_) => ModelType::Qsvc,
            ModelBody::Vqc(_) => ModelType::Vqc,
            ModelBody::Qnnc(_) => ModelType::Qnnc,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Predicted class index per row.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        if let Some(r) = x.iter().find(|r| r.len() != self.n_features) {
            return Err(QtcError::validation(format!(
                "model expects {} features, got {}",
                self.n_features,
                r.len()
            )));
        }
        match &self.body {
            ModelBody::Svc(rec) | ModelBody::Qsvc(rec) => predict_kernel_svm(rec, x),
            ModelBody::Vqc(rec) | ModelBody::Qnnc(rec) => variational::predict(&rec.model, x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| QtcError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| QtcError::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        match &self.body {
            ModelBody::Svc(rec) | ModelBody::Qsvc(rec) => {
                if rec.per_class.len() != self.classes.len() {
                    return Err(QtcError::validation("model has one binary SVM per class"));
                }
                let known: std::collections::HashSet<&str> =
                    rec.support_vectors.iter().map(|s| s.id.as_str()).collect();
                for b in &rec.per_class {
                    if b.support_ids.len() != b.dual_coefs.len() {
                        return Err(QtcError::validation(
                            "support_ids and dual_coefs differ in length",
                        ));
                    }
                    if let Some(id) = b.support_ids.iter().find(|id| !known.contains(id.as_str())) {
                        return Err(QtcError::validation(format!(
                            "support id {id:?} has no feature row"
                        )));
                    }
                }
                if let Some(sv) = rec
                    .support_vectors
                    .iter()
                    .find(|s| s.features.len() != self.n_features)
                {
                    return Err(QtcError::validation(format!(
                        "support vector {:?} has wrong width",
                        sv.id
                    )));
                }
            }
            ModelBody::Vqc(rec) | ModelBody::Qnnc(rec) => {
                rec.model.validate()?;
                if rec.model.n_classes != self.classes.len()
                    || rec.model.feature_map.n_qubits != self.n_features
                {
                    return Err(QtcError::validation(
                        "variational model shape disagrees with header",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn predict_kernel_svm(rec: &KernelSvmRecord, x: &[Vec<f64>]) -> Result<Vec<usize>> {
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let sv_rows: Vec<Vec<f64>> = rec
        .support_vectors
        .iter()
        .map(|s| s.features.clone())
        .collect();
    let index: BTreeMap<&str, usize> = rec
        .support_vectors
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let k = if sv_rows.is_empty() {
        None
    } else {
        Some(match &rec.kernel {
            KernelChoice::Polynomial(spec) => crate::svm::poly_gram(x, Some(&sv_rows), spec)?,
            KernelChoice::Quantum {
                feature_map,
                estimator,
            } => gram(feature_map, x, Some(&sv_rows), *estimator)?,
        })
    };
    let mut out = Vec::with_capacity(x.len());
    for r in 0..x.len() {
        let scores: Vec<f64> = rec
            .per_class
            .iter()
            .map(|b| {
                b.support_ids
                    .iter()
                    .zip(&b.dual_coefs)
                    .map(|(id, c)| c * k.as_ref().map_or(0.0, |k| k.get(r, index[id.as_str()])))
                    .sum::<f64>()
                    + b.bias
            })
            .collect();
        out.push(argmax(&scores));
    }
    Ok(out)
}
