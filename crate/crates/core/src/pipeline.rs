//! Stage orchestration: corpus → TF-IDF → PCA/scaling → kernel → model →
//! report. Every stage writes plain files under the work directory and
//! records the hash of the manifest it was computed from.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuits::{AnsatzSpec, FeatureMapSpec};
use crate::corpus::{self, CorpusColumns, DatasetSplit, TfidfModel};
use crate::error::{QtcError, Result};
use crate::kernel::{self, GramMatrix, KernelMode};
use crate::metrics::{self, ClassificationReport};
use crate::model::{KernelChoice, ModelType, TrainedModel};
use crate::optimizer::{OptimizationTrace, OptimizerConfig};
use crate::reduce::{self, PcaModel, RangeScaler};
use crate::stage::{self, Stage};
use crate::svm::{self, PolyKernelSpec, SmoParams};
use crate::util::sha256_hex;
use crate::variational::{self, ExecutionMode, LossKind, VariationalModel};

pub const TFIDF_STAGE: &str = "tfidf";
pub const REDUCED_STAGE: &str = "reduced";
pub const KERNEL_DIR: &str = "kernel";
pub const MODEL_FILE: &str = "model.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const REPORT_DIR: &str = "report";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub work_dir: PathBuf,
    /// Defaults to `<work_dir>/model.json`.
    pub model_path: Option<PathBuf>,
    /// Defaults to `<work_dir>/report`.
    pub report_dir: Option<PathBuf>,
    pub columns: CorpusColumns,
    pub max_features: usize,
    pub pca_components: usize,
    pub scale: [f64; 2],
    pub test_fraction: f64,
    pub model: ModelType,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    /// 0 selects exact statevector evaluation.
    pub shots: u64,
    /// Objective-evaluation budget of the variational optimizer.
    pub iters: usize,
    pub feature_map_reps: usize,
    pub ansatz_reps: usize,
    pub split_seed: u64,
    pub shot_seed: u64,
    pub init_seed: u64,
    pub optimizer_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            work_dir: PathBuf::from("work"),
            model_path: None,
            report_dir: None,
            columns: CorpusColumns::default(),
            max_features: 20,
            pca_components: 2,
            scale: [0.0, PI],
            test_fraction: 0.2,
            model: ModelType::Qsvc,
            c: svm::DEFAULT_C,
            tol: svm::DEFAULT_TOL,
            shots: 0,
            iters: 30,
            feature_map_reps: 2,
            ansatz_reps: 1,
            split_seed: 42,
            shot_seed: 42,
            init_seed: 42,
            optimizer_seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| QtcError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QtcError::Validation(m));
        if self.max_features == 0 {
            return bad("max_features must be positive".into());
        }
        if self.pca_components == 0 {
            return bad("pca_components must be positive".into());
        }
        if !(self.scale[0] < self.scale[1]) || !self.scale.iter().all(|v| v.is_finite()) {
            return bad(format!("scale interval {:?} is not increasing", self.scale));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            ));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.iters == 0 {
            return bad("iters must be positive".into());
        }
        if self.feature_map_reps == 0 {
            return bad("feature_map_reps must be positive".into());
        }
        Ok(())
    }

    pub fn tfidf_dir(&self) -> PathBuf {
        self.work_dir.join(TFIDF_STAGE)
    }

    pub fn reduced_dir(&self) -> PathBuf {
        self.work_dir.join(REDUCED_STAGE)
    }

    pub fn kernel_dir(&self) -> PathBuf {
        self.work_dir.join(KERNEL_DIR)
    }

    pub fn model_file(&self) -> PathBuf {
        self.model_path
            .clone()
            .unwrap_or_else(|| self.work_dir.join(MODEL_FILE))
    }

    /// Learning curve lives next to the model file.
    pub fn curve_file(&self) -> PathBuf {
        self.model_file().with_file_name(CURVE_FILE)
    }

    pub fn report_path(&self) -> PathBuf {
        self.report_dir
            .clone()
            .unwrap_or_else(|| self.work_dir.join(REPORT_DIR))
    }

    pub fn kernel_mode(&self) -> KernelMode {
        KernelMode::from_shots(self.shots, self.shot_seed)
    }

    pub fn execution_mode(&self) -> ExecutionMode {
        match self.shots {
            0 => ExecutionMode::Exact,
            shots => ExecutionMode::Sampled {
                shots,
                seed: self.shot_seed,
            },
        }
    }

    pub fn feature_map(&self, n_qubits: usize) -> FeatureMapSpec {
        FeatureMapSpec::zz(n_qubits, self.feature_map_reps)
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_evaluations: self.iters,
            seed: self.optimizer_seed,
            ..OptimizerConfig::default()
        }
    }

    /// The configuration without filesystem paths, as echoed into manifests.
    pub fn provenance(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            for key in ["corpus", "work_dir", "model_path", "report_dir"] {
                map.remove(key);
            }
        }
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Train/test partition of a loaded stage, in split order.
#[derive(Debug, Clone)]
pub struct Partition {
    pub train_ids: Vec<String>,
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<usize>,
    pub test_ids: Vec<String>,
    pub test_x: Vec<Vec<f64>>,
    pub test_y: Vec<usize>,
}

pub fn partition(stage: &Stage) -> Result<Partition> {
    let split = stage
        .split
        .as_ref()
        .ok_or_else(|| QtcError::Versioning(format!("stage {:?} carries no split", stage.name)))?;
    let pick = |ids: &[String]| -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let mut x = Vec::with_capacity(ids.len());
        let mut y = Vec::with_capacity(ids.len());
        for id in ids {
            let i = stage.features.row_index(id).ok_or_else(|| {
                QtcError::Versioning(format!("split id {id:?} missing from stage"))
            })?;
            x.push(stage.features.row(i).to_vec());
            y.push(stage.labels[i]);
        }
        Ok((x, y))
    };
    let (train_x, train_y) = pick(&split.train_ids)?;
    let (test_x, test_y) = pick(&split.test_ids)?;
    Ok(Partition {
        train_ids: split.train_ids.clone(),
        train_x,
        train_y,
        test_ids: split.test_ids.clone(),
        test_x,
        test_y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TfidfParameters {
    config: serde_json::Value,
    corpus_sha256: String,
    tfidf: TfidfModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReducedParameters {
    config: serde_json::Value,
    pca: PcaModel,
    scaler: RangeScaler,
}

/// Reads the corpus, splits it, and writes TF-IDF features fitted on the
/// training documents. Returns the manifest hash.
pub fn preprocess(config: &PipelineConfig) -> Result<String> {
    config.validate()?;
    let path = config
        .corpus
        .as_ref()
        .ok_or_else(|| QtcError::validation("no corpus path given"))?;
    let bytes = std::fs::read(path).map_err(|e| QtcError::io(path, e))?;
    let docs = corpus::read_corpus(bytes.as_slice(), &config.columns, path)?;
    let (encoding, labels) = corpus::encode_labels(&docs);
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    let split: DatasetSplit =
        corpus::stratified_split(&labels, &ids, config.test_fraction, config.split_seed)?;
    let train_set: std::collections::HashSet<&str> =
        split.train_ids.iter().map(String::as_str).collect();
    let train_docs: Vec<corpus::Document> = docs
        .iter()
        .filter(|d| train_set.contains(d.id.as_str()))
        .cloned()
        .collect();
    let tfidf = corpus::fit_tfidf(&train_docs, config.max_features)?;
    let features = corpus::transform_tfidf(&tfidf, &docs)?;
    let parameters = TfidfParameters {
        config: config.provenance(),
        corpus_sha256: sha256_hex(&bytes),
        tfidf,
    };
    stage::save_stage(
        config.tfidf_dir(),
        &Stage {
            name: TFIDF_STAGE.into(),
            features,
            labels,
            encoding,
            split: Some(split),
            seed: config.split_seed,
            parameters: serde_json::to_value(parameters)?,
            upstream_hash: None,
        },
    )
}

/// Fits PCA and the range scaler on the training rows of the TF-IDF stage
/// and writes the projected, scaled features of every row.
pub fn reduce(config: &PipelineConfig) -> Result<String> {
    config.validate()?;
    let dir = config.tfidf_dir();
    let upstream = stage::load_stage(&dir, TFIDF_STAGE)?;
    let upstream_hash = stage::manifest_hash(&dir)?;
    let split = upstream
        .split
        .as_ref()
        .ok_or_else(|| QtcError::Versioning("tfidf stage carries no split".into()))?;
    let train = upstream.features.select_ids(&split.train_ids)?;
    let pca = reduce::fit_pca(&train, config.pca_components)?;
    let scaler = reduce::fit_scaler(
        &reduce::transform_pca(&pca, &train)?,
        config.scale[0],
        config.scale[1],
    )?;
    let features =
        reduce::transform_scale(&scaler, &reduce::transform_pca(&pca, &upstream.features)?)?;
    let parameters = ReducedParameters {
        config: config.provenance(),
        pca,
        scaler,
    };
    stage::save_stage(
        config.reduced_dir(),
        &Stage {
            name: REDUCED_STAGE.into(),
            features,
            labels: upstream.labels,
            encoding: upstream.encoding,
            split: upstream.split,
            seed: upstream.seed,
            parameters: serde_json::to_value(parameters)?,
            upstream_hash: Some(upstream_hash),
        },
    )
}

fn load_reduced(config: &PipelineConfig) -> Result<(Stage, String)> {
    let dir = config.reduced_dir();
    let s = stage::load_stage(&dir, REDUCED_STAGE)?;
    let h = stage::manifest_hash(&dir)?;
    Ok((s, h))
}

/// Training-set quantum Gram matrix, written to `<work_dir>/kernel`.
pub fn kernel(config: &PipelineConfig) -> Result<GramMatrix> {
    config.validate()?;
    let (s, hash) = load_reduced(config)?;
    let p = partition(&s)?;
    let spec = config.feature_map(s.features.n_cols());
    let g = kernel::gram(&spec, &p.train_x, None, config.kernel_mode())?;
    kernel::write_gram(
        config.kernel_dir(),
        &g,
        &kernel::data_hash(&p.train_x),
        Some(hash),
    )?;
    Ok(g)
}

/// Reuses `<work_dir>/kernel` when it was computed from this exact stage,
/// feature map and mode; recomputes otherwise.
fn training_gram(
    config: &PipelineConfig,
    spec: &FeatureMapSpec,
    x: &[Vec<f64>],
    upstream: &str,
) -> Result<GramMatrix> {
    let mode = config.kernel_mode();
    if let Ok((g, m)) = kernel::read_gram(config.kernel_dir()) {
        if m.feature_map.as_ref() == Some(spec)
            && m.mode == mode
            && m.upstream_hash.as_deref() == Some(upstream)
            && m.data_hash == kernel::data_hash(x)
        {
            return Ok(g);
        }
    }
    kernel::gram(spec, x, None, mode)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub curve: Option<OptimizationTrace>,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
}

/// Trains `config.model` on the reduced stage's training rows and writes
/// the model (and, for variational models, the learning curve).
pub fn train(config: &PipelineConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let (s, hash) = load_reduced(config)?;
    let p = partition(&s)?;
    let classes = s.encoding.classes.clone();
    let n_classes = classes.len();
    let n_features = s.features.n_cols();
    let smo = SmoParams {
        c: config.c,
        tol: config.tol,
        ..SmoParams::default()
    };
    let mut outcome = match config.model {
        ModelType::Svc => {
            let spec = PolyKernelSpec::fit_default(&p.train_x);
            let g = svm::poly_gram(&p.train_x, None, &spec)?;
            let m = svm::train_multiclass(&g, &p.train_y, n_classes, &smo)?;
            TrainOutcome {
                model: TrainedModel::from_svm(
                    ModelType::Svc,
                    &m,
                    KernelChoice::Polynomial(spec),
                    &p.train_ids,
                    &p.train_x,
                    classes,
                )?,
                curve: None,
                initial_loss: None,
                final_loss: None,
            }
        }
        ModelType::Qsvc => {
            let spec = config.feature_map(n_features);
            let mut g = training_gram(config, &spec, &p.train_x, &hash)?;
            if matches!(g.mode, KernelMode::Sampled { .. }) {
                g = kernel::psd_project(&g)?;
            }
            let m = svm::train_multiclass(&g, &p.train_y, n_classes, &smo)?;
            let choice = KernelChoice::Quantum {
                feature_map: spec,
                estimator: config.kernel_mode(),
            };
            TrainOutcome {
                model: TrainedModel::from_svm(
                    ModelType::Qsvc,
                    &m,
                    choice,
                    &p.train_ids,
                    &p.train_x,
                    classes,
                )?,
                curve: None,
                initial_loss: None,
                final_loss: None,
            }
        }
        ModelType::Vqc | ModelType::Qnnc => {
            let loss = if config.model == ModelType::Vqc {
                LossKind::CrossEntropy
            } else {
                LossKind::SquaredError
            };
            let mut template =
                VariationalModel::template(n_features, n_classes, loss, config.execution_mode());
            template.feature_map = config.feature_map(n_features);
            template.ansatz = AnsatzSpec::new(n_features, config.ansatz_reps);
            template.theta = vec![0.0; template.ansatz.n_parameters()];
            let r = variational::train(
                &p.train_x,
                &p.train_y,
                &template,
                &config.optimizer(),
                config.init_seed,
            )?;
            TrainOutcome {
                model: TrainedModel::from_variational(r.model, r.converged, classes),
                curve: Some(r.curve),
                initial_loss: Some(r.initial_loss),
                final_loss: Some(r.final_loss),
            }
        }
    };
    outcome.model.upstream_hash = Some(hash);
    let path = config.model_file();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| QtcError::io(parent, e))?;
    }
    outcome.model.save(&path)?;
    if let Some(curve) = &outcome.curve {
        curve.write_csv(config.curve_file())?;
    }
    Ok(outcome)
}

/// Scores the model on the held-out rows and writes `report.json` and
/// `report.txt`.
pub fn evaluate(config: &PipelineConfig) -> Result<ClassificationReport> {
    config.validate()?;
    let (s, hash) = load_reduced(config)?;
    let model = TrainedModel::load(config.model_file())?;
    if model.upstream_hash.as_deref() != Some(hash.as_str()) {
        return Err(QtcError::Versioning(format!(
            "{} was not trained on the current reduced stage",
            config.model_file().display()
        )));
    }
    if model.classes != s.encoding.classes {
        return Err(QtcError::Versioning(
            "model classes differ from the stage's".into(),
        ));
    }
    let p = partition(&s)?;
    let pred = model.predict(&p.test_x)?;
    let cm = metrics::confusion(&p.test_y, &pred, model.n_classes())?;
    let report = metrics::report(&cm, &model.classes)?;
    let dir = config.report_path();
    std::fs::create_dir_all(&dir).map_err(|e| QtcError::io(&dir, e))?;
    let mut body = serde_json::to_string_pretty(&json!({
        "model": model.model_type(),
        "model_sha256": sha256_hex(model.to_json()?.as_bytes()),
        "report": report,
    }))?;
    body.push('\n');
    let jpath = dir.join(REPORT_JSON);
    std::fs::write(&jpath, body).map_err(|e| QtcError::io(&jpath, e))?;
    let tpath = dir.join(REPORT_TXT);
    std::fs::write(&tpath, report.render()).map_err(|e| QtcError::io(&tpath, e))?;
    Ok(report)
}

/// Runs every stage in order; the kernel stage only for `qsvc`.
pub fn run_all(config: &PipelineConfig) -> Result<(TrainOutcome, ClassificationReport)> {
    preprocess(config)?;
    reduce(config)?;
    if config.model == ModelType::Qsvc {
        kernel(config)?;
    }
    let outcome = train(config)?;
    let report = evaluate(config)?;
    Ok((outcome, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, SynthConfig};

    fn setup(model: ModelType) -> (tempfile::TempDir, PipelineConfig) {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.csv");
        let text = generate_corpus(&SynthConfig {
            classes: 3,
            per_class: 10,
            vocab_size: 30,
            seed: 3,
        })
        .unwrap();
        std::fs::write(&corpus, text).unwrap();
        let config = PipelineConfig {
            corpus: Some(corpus),
            work_dir: dir.path().join("work"),
            model,
            iters: 8,
            ..PipelineConfig::default()
        };
        (dir, config)
    }

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.max_features, c.pca_components, c.iters), (20, 2, 30));
        assert_eq!(c.scale, [0.0, PI]);
        assert_eq!(c.test_fraction, 0.2);
        assert_eq!(c.shots, 0);
        assert_eq!(c.kernel_mode(), KernelMode::Exact);
    }

    #[test]
    fn partial_json_config_keeps_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"max_features": 12, "model": "vqc"}"#).unwrap();
        assert_eq!(c.max_features, 12);
        assert_eq!(c.model, ModelType::Vqc);
        assert_eq!(c.pca_components, 2);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"model": "forest"}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"max_feature": 3}"#).is_err());
    }

    #[test]
    fn provenance_has_no_paths() {
        let (_d, c) = setup(ModelType::Svc);
        let text = c.provenance().to_string();
        assert!(!text.contains("corpus.csv") && !text.contains("work"));
    }

    #[test]
    fn stages_chain_and_refuse_skips() {
        let (_d, c) = setup(ModelType::Svc);
        assert!(matches!(reduce(&c), Err(QtcError::Io { .. })));
        preprocess(&c).unwrap();
        assert!(matches!(train(&c), Err(QtcError::Io { .. })));
        reduce(&c).unwrap();
        let out = train(&c).unwrap();
        assert!(out.curve.is_none());
        let r = evaluate(&c).unwrap();
        assert!(r.accuracy > 0.0);
        // Recomputing the upstream stage with other parameters stales the model.
        let c2 = PipelineConfig {
            pca_components: 3,
            ..c.clone()
        };
        reduce(&c2).unwrap();
        assert!(matches!(evaluate(&c2), Err(QtcError::Versioning(_))));
    }

    #[test]
    fn qsvc_reuses_kernel_stage() {
        let (_d, c) = setup(ModelType::Qsvc);
        let (_, r) = run_all(&c).unwrap();
        assert!(c.kernel_dir().join(kernel::GRAM_FILE).exists());
        assert!(c.report_path().join(REPORT_TXT).exists());
        assert!(r.accuracy >= 0.0);
    }

    #[test]
    fn vqc_writes_curve() {
        let (_d, c) = setup(ModelType::Vqc);
        let (out, _) = run_all(&c).unwrap();
        let curve = std::fs::read_to_string(c.curve_file()).unwrap();
        assert_eq!(
            curve.lines().filter(|l| !l.starts_with('#')).count(),
            1 + c.iters
        );
        assert!(out.final_loss.unwrap() <= out.initial_loss.unwrap());
    }

    #[test]
    fn invalid_config() {
        let c = PipelineConfig {
            scale: [1.0, 1.0],
            ..PipelineConfig::default()
        };
        assert!(matches!(c.validate(), Err(QtcError::Validation(_))));
    }
}
