use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qtc_core::model::ModelType;
use qtc_core::pipeline::{self, PipelineConfig};
use qtc_core::synth::{generate_corpus, SynthConfig};
use qtc_core::QtcError;

/// Hybrid quantum text classification on a statevector simulator.
#[derive(Parser)]
#[command(name = "qtc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded keyword-mixture corpus CSV
    Synth(SynthArgs),
    /// Read the corpus, split it and write TF-IDF features
    Preprocess(PipelineArgs),
    /// Project TF-IDF features with PCA and scale them
    Reduce(PipelineArgs),
    /// Compute the training-set quantum kernel matrix
    Kernel(PipelineArgs),
    /// Train a classifier on the reduced features
    Train(PipelineArgs),
    /// Score the trained model on the held-out split
    Evaluate(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 40)]
    per_class: usize,
    /// Shared filler vocabulary size
    #[arg(long, default_value_t = 60)]
    vocab_size: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "corpus.csv")]
    out: PathBuf,
}

/// Unset flags fall back to the config file, then to the listed default.
#[derive(Args)]
struct PipelineArgs {
    /// JSON file with any subset of the pipeline settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input corpus CSV
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Directory for stage artifacts [default: work]
    #[arg(long)]
    work_dir: Option<PathBuf>,
    /// Model file [default: <work-dir>/model.json]
    #[arg(long)]
    model_path: Option<PathBuf>,
    /// Report directory [default: <work-dir>/report]
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Corpus id column [default: ID]
    #[arg(long)]
    id_column: Option<String>,
    /// Corpus text column [default: Resume_str]
    #[arg(long)]
    text_column: Option<String>,
    /// Corpus label column [default: Category]
    #[arg(long)]
    label_column: Option<String>,
    /// TF-IDF vocabulary size [default: 20]
    #[arg(long)]
    max_features: Option<usize>,
    /// PCA output dimension, one qubit each [default: 2]
    #[arg(long)]
    pca_components: Option<usize>,
    /// Lower end of the scaling interval [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    scale_lo: Option<f64>,
    /// Upper end of the scaling interval [default: pi]
    #[arg(long, allow_negative_numbers = true)]
    scale_hi: Option<f64>,
    /// Held-out fraction per class [default: 0.2]
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Classifier [default: qsvc]
    #[arg(long, value_enum)]
    model: Option<ModelType>,
    /// SVM box constraint [default: 1]
    #[arg(long = "C", alias = "c")]
    c: Option<f64>,
    /// SMO stopping tolerance [default: 0.001]
    #[arg(long)]
    tol: Option<f64>,
    /// Measurement shots, 0 for exact statevector results [default: 0]
    #[arg(long)]
    shots: Option<u64>,
    /// Optimizer evaluation budget [default: 30]
    #[arg(long)]
    iters: Option<usize>,
    /// Feature map repetitions [default: 2]
    #[arg(long)]
    feature_map_reps: Option<usize>,
    /// Ansatz repetitions [default: 1]
    #[arg(long)]
    ansatz_reps: Option<usize>,
    /// Train/test split seed [default: 42]
    #[arg(long)]
    split_seed: Option<u64>,
    /// Measurement sampling seed [default: 42]
    #[arg(long)]
    shot_seed: Option<u64>,
    /// Initial parameter seed [default: 42]
    #[arg(long)]
    init_seed: Option<u64>,
    /// Optimizer seed [default: 42]
    #[arg(long)]
    optimizer_seed: Option<u64>,
}

impl PipelineArgs {
    fn resolve(self) -> Result<PipelineConfig, QtcError> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::from_json_file(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { c.$field = v; }
            )*};
        }
        set!(
            max_features,
            pca_components,
            test_fraction,
            model,
            c,
            tol,
            shots,
            iters,
            feature_map_reps,
            ansatz_reps,
            split_seed,
            shot_seed,
            init_seed,
            optimizer_seed,
            work_dir
        );
        if self.corpus.is_some() {
            c.corpus = self.corpus;
        }
        if self.model_path.is_some() {
            c.model_path = self.model_path;
        }
        if self.report_dir.is_some() {
            c.report_dir = self.report_dir;
        }
        if let Some(v) = self.id_column {
            c.columns.id = v;
        }
        if let Some(v) = self.text_column {
            c.columns.text = v;
        }
        if let Some(v) = self.label_column {
            c.columns.label = v;
        }
        if let Some(v) = self.scale_lo {
            c.scale[0] = v;
        }
        if let Some(v) = self.scale_hi {
            c.scale[1] = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_config(c: &PipelineConfig) {
    println!("resolved config:\n{}", c.to_json_pretty());
    println!(
        "seeds: split={} shot={} init={} optimizer={}",
        c.split_seed, c.shot_seed, c.init_seed, c.optimizer_seed
    );
}

fn run(command: Command) -> Result<(), QtcError> {
    match command {
        Command::Synth(a) => {
            let config = SynthConfig {
                classes: a.classes,
                per_class: a.per_class,
                vocab_size: a.vocab_size,
                seed: a.seed,
            };
            println!(
                "resolved config:\n{}",
                serde_json::to_string_pretty(&config)?
            );
            println!("seeds: synth={}", config.seed);
            let text = generate_corpus(&config)?;
            std::fs::write(&a.out, text).map_err(|e| QtcError::Io {
                path: a.out.clone(),
                source: e,
            })?;
            println!(
                "wrote {} documents to {}",
                config.classes * config.per_class,
                a.out.display()
            );
        }
        Command::Preprocess(a) => {
            let c = a.resolve()?;
            print_config(&c);
            let h = pipeline::preprocess(&c)?;
            println!("wrote {} (manifest {h})", c.tfidf_dir().display());
        }
        Command::Reduce(a) => {
            let c = a.resolve()?;
            print_config(&c);
            let h = pipeline::reduce(&c)?;
            println!("wrote {} (manifest {h})", c.reduced_dir().display());
        }
        Command::Kernel(a) => {
            let c = a.resolve()?;
            print_config(&c);
            let g = pipeline::kernel(&c)?;
            println!(
                "wrote {}x{} gram matrix to {}",
                g.rows,
                g.cols,
                c.kernel_dir().display()
            );
        }
        Command::Train(a) => {
            let c = a.resolve()?;
            print_config(&c);
            let out = pipeline::train(&c)?;
            if let (Some(i), Some(f)) = (out.initial_loss, out.final_loss) {
                println!("training loss {i:.6} -> {f:.6}");
                println!("wrote {}", c.curve_file().display());
            }
            println!("wrote {}", c.model_file().display());
        }
        Command::Evaluate(a) => {
            let c = a.resolve()?;
            print_config(&c);
            let r = pipeline::evaluate(&c)?;
            print!("{}", r.render());
            println!("wrote {}", c.report_path().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            // 2 is reserved for numerical aborts.
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
