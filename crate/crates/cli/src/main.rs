use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forge_cli::{commands, fixture, stats, Overrides, PipelineConfig, PipelineError, RunOptions};
use forge_core::grounding::DEFAULT_CLUSTERS;
use forge_core::scheduler::MixRatio;
use serde::Serialize;

const SUCCESS: u8 = 0;
const VALIDATION_FAILURE: u8 = 1;
const STAGE_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "forge", version, about = "Curate instruction-editing triplets through configured stages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline config.
    Run(RunArgs),
    /// Summarize a triplet manifest.
    Stats { manifest: PathBuf },
    /// Check triplet invariants; exits 1 when any record violates one.
    Validate { manifest: PathBuf },
    /// Write the bundled end-to-end fixture.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// k-means over an instruction corpus; prints the cluster report.
    Cluster {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
        clusters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bucket items by resolution into pixel-budget batches.
    Plan {
        items: PathBuf,
        #[arg(long)]
        pixel_budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Interleave text-to-image and edit prompts in a fixed ratio.
    Mix {
        #[arg(long)]
        edit: PathBuf,
        #[arg(long)]
        t2i: PathBuf,
        #[arg(long)]
        t2i_percent: f64,
        #[arg(long)]
        edit_percent: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mean preference loss over a JSONL file of samples.
    DpoLoss { samples: PathBuf },
    /// MAE and Spearman correlation over `{prediction, label}` lines.
    Metrics { input: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Skip stages whose output and fingerprint match.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides FORGE_SEED and the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    face_iou_threshold: Option<f64>,
    #[arg(long)]
    assessor_threshold: Option<f64>,
    #[arg(long)]
    ransac_iters: Option<usize>,
    #[arg(long)]
    inlier_tol: Option<f64>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    tau_sim: Option<f64>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    min_gap: Option<f64>,
    /// Comma-separated augmentation ops.
    #[arg(long, value_delimiter = ',')]
    ops: Option<Vec<String>>,
    #[arg(long)]
    plan: Option<String>,
}

enum Failure {
    Validation(String),
    Stage(String),
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn print_jsonl<T: Serialize>(items: &[T]) {
    let mut out = std::io::stdout().lock();
    for it in items {
        let _ = writeln!(out, "{}", serde_json::to_string(it).expect("serializable"));
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("FORGE_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Validation(format!("FORGE_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut config = PipelineConfig::load(&args.config).map_err(|e| Failure::Validation(e.0))?;
    if let Some(seed) = args.seed.or(env_seed()?) {
        config.global_seed = seed;
    }
    Overrides {
        face_iou_threshold: args.face_iou_threshold,
        assessor_threshold: args.assessor_threshold,
        ransac_iters: args.ransac_iters,
        inlier_tol: args.inlier_tol,
        topk: args.topk,
        tau_sim: args.tau_sim,
        cap: args.cap,
        min_gap: args.min_gap,
        ops: args.ops,
        plan: args.plan,
    }
    .apply(&mut config);
    let base = args.config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let opts = RunOptions { resume: args.resume, workers: args.workers };
    match forge_cli::run_pipeline(&config, base, &opts) {
        Ok(reports) => {
            print_jsonl(&reports);
            Ok(())
        }
        Err(PipelineError::Validation(m)) => Err(Failure::Validation(m)),
        Err(e @ PipelineError::Stage { .. }) => Err(Failure::Stage(e.to_string())),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let invalid = |e: forge_core::Error| Failure::Validation(e.to_string());
    match command {
        Command::Run(args) => run(args),
        Command::Stats { manifest } => {
            print_json(&stats::stats(&manifest).map_err(invalid)?);
            Ok(())
        }
        Command::Validate { manifest } => {
            let violations = commands::validate_manifest(&manifest).map_err(invalid)?;
            print_jsonl(&violations);
            if violations.is_empty() {
                Ok(())
            } else {
                Err(Failure::Validation(format!("{} violation(s)", violations.len())))
            }
        }
        Command::Fixture { out, count, seed } => {
            let s = fixture::write_fixture(&out, count, seed).map_err(|e| Failure::Stage(e.to_string()))?;
            eprintln!(
                "wrote {} triplets over {} anchors and {} user instructions to {}",
                s.triplets,
                s.anchors,
                s.users,
                out.display()
            );
            Ok(())
        }
        Command::Cluster { input, clusters, seed } => {
            print_jsonl(&commands::cluster(&input, clusters, seed).map_err(invalid)?);
            Ok(())
        }
        Command::Plan { items, pixel_budget, seed } => {
            print_jsonl(&commands::plan(&items, pixel_budget, seed).map_err(invalid)?.batches);
            Ok(())
        }
        Command::Mix { edit, t2i, t2i_percent, edit_percent, count, seed } => {
            let ratio = MixRatio::new(t2i_percent, edit_percent).map_err(invalid)?;
            print_jsonl(&commands::mix(&edit, &t2i, &ratio, count, seed).map_err(invalid)?);
            Ok(())
        }
        Command::DpoLoss { samples } => {
            print_json(&commands::dpo_loss(&samples).map_err(invalid)?);
            Ok(())
        }
        Command::Metrics { input } => {
            print_json(&commands::metrics(&input).map_err(invalid)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(SUCCESS),
        Err(Failure::Validation(m)) => {
            eprintln!("forge: {m}");
            ExitCode::from(VALIDATION_FAILURE)
        }
        Err(Failure::Stage(m)) => {
            eprintln!("forge: {m}");
            ExitCode::from(STAGE_FAILURE)
        }
    }
}
