use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ontomatch::evaluation::Scope;
use ontomatch::matching::{Extraction, Weighting};
use ontomatch::pipeline::{self, Output, RunConfig};
use ontomatch::refinement::Interaction;
use ontomatch::transport::SolverConfig;
use ontomatch::{Error, Result};

/// Unsupervised ontology matching with optimal transport.
#[derive(Parser)]
#[command(name = "ontomatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Couple the two ontologies globally and write candidate pairs.
    Match {
        #[command(flatten)]
        config: ConfigArgs,
        /// Candidate file to write; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Rescore candidates with context distances and filter one-to-one.
    Refine {
        #[command(flatten)]
        config: ConfigArgs,
        /// Candidate file written by `match`.
        #[arg(long)]
        candidates: PathBuf,
        /// Reference alignment; enables the threshold sweep.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Alignment file to write; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Where to write the 101-point sweep curve.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Score an alignment file against a reference.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Alignment file written by `refine`.
        #[arg(long)]
        alignment: PathBuf,
        /// Reference pairs as TSV or OAEI alignment XML.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Correlate Wasserstein and Jaccard similarity over many cases.
    Correlate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Tab-separated `source target reference` paths, one case per line.
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Class-level Wasserstein distance and similarity of two ontologies.
    Ontosim {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Word-vector text file.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Source ontology document.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Target ontology document.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Tab-separated token replacements for out-of-vocabulary words.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// uniform | inverse-min-distance
    #[arg(long, default_value = "uniform")]
    weighting: String,
    /// mnn | topk | topk(K)
    #[arg(long, default_value = "topk(20)")]
    extraction: String,
    /// Interaction preset or components joined by `*`.
    #[arg(long, default_value = "string-context-distance")]
    metric: String,
    /// Fixed filtering threshold in [0, 1].
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    /// Entropic regularization; defaults to 1% of the mean cost.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = SolverConfig::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    /// classes_only | all
    #[arg(long, default_value = "all")]
    scope: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit with status 3 when a solver stops before converging.
    #[arg(long)]
    strict: bool,
}

impl ConfigArgs {
    fn into_config(self) -> Result<RunConfig> {
        Ok(RunConfig {
            embeddings_path: self.embeddings,
            source_path: self.source,
            target_path: self.target,
            synonyms_path: self.synonyms,
            weighting: self.weighting.parse::<Weighting>()?,
            extraction: self.extraction.parse::<Extraction>()?,
            metric: self.metric.parse::<Interaction>()?,
            threshold: self.threshold,
            solver: SolverConfig {
                epsilon: self.epsilon,
                max_iter: self.max_iter,
                tol: self.tol,
            },
            scope: self.scope.parse::<Scope>()?,
            seed: self.seed,
            strict: self.strict,
        })
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(out: Output, path: Option<&Path>) -> Result<()> {
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    emit(&out.text, path)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Match { config, output } => finish(pipeline::run_match(&config.into_config()?)?, output.as_deref()),
        Command::Refine {
            config,
            candidates,
            reference,
            output,
            curve,
        } => {
            let out = pipeline::run_refine(&config.into_config()?, &candidates, reference.as_deref())?;
            emit(&out.alignment, output.as_deref())?;
            if let Some(text) = &out.curve {
                match &curve {
                    Some(p) => emit(text, Some(p))?,
                    None => eprint!(
                        "{}",
                        text.lines()
                            .filter(|l| l.starts_with("# best"))
                            .collect::<Vec<_>>()
                            .join("\n")
                            + "\n"
                    ),
                }
            }
            if let Some(r) = out.report {
                eprintln!("{r}");
            }
            Ok(())
        }
        Command::Eval {
            config,
            alignment,
            reference,
            output,
        } => finish(
            pipeline::run_eval(&config.into_config()?, &alignment, &reference)?,
            output.as_deref(),
        ),
        Command::Correlate { config, cases, output } => finish(
            pipeline::run_correlate(&config.into_config()?, &cases)?,
            output.as_deref(),
        ),
        Command::Ontosim { config, output } => {
            finish(pipeline::run_ontosim(&config.into_config()?)?, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
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
