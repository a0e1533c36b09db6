//! Command-line front end: generate traces, reconstruct, compute medians,
//! evaluate candidates, and run the statistical experiment suite.
//!
//! Every run is fully determined by its flags; all randomness flows from
//! `--seed`. Informational output (geometry, timings) goes to stderr so
//! stdout and output files stay byte-reproducible.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use tracemed::channel::{transmit, transmit_planted, uniform_seq, ChannelParams};
use tracemed::median::median3_exact;
use tracemed::reconstruct::{reconstruct3_detailed, ReconstructionPlan};
use tracemed::verify::{run_experiment, ExperimentConfig, EXPERIMENT_NAMES};
use tracemed::{Alphabet, Seq};

#[derive(Parser)]
#[command(name = "tracemed", version, about = "Trace reconstruction and median strings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random source string and noisy traces of it.
    Gen(GenArgs),
    /// Reconstruct the source from exactly three trace files.
    Reconstruct(ReconstructArgs),
    /// Compute the exact median of exactly three sequence files.
    Median(MedianArgs),
    /// Compare a candidate sequence against the true one.
    Eval(EvalArgs),
    /// Run a named statistical experiment; exits 0 only if it passes.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Source string length.
    #[arg(long)]
    n: usize,
    /// Noise rate of the channel.
    #[arg(long)]
    p: f64,
    /// Number of traces to generate.
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    alphabet_size: u32,
    /// Output prefix: writes PREFIX.base.txt and PREFIX.trace{k}.txt.
    #[arg(long)]
    out: String,
    /// Also record each transmission's op log to PREFIX.trace{k}.ops.jsonl.
    #[arg(long)]
    planted: bool,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Exactly three trace files (first one is the block reference).
    traces: Vec<PathBuf>,
    /// Noise rate the traces were generated with.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    alphabet_size: u32,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    /// Override the preset's anchor length.
    #[arg(long)]
    anchor_len: Option<usize>,
    /// Override the preset's gap length.
    #[arg(long)]
    gap_len: Option<usize>,
    /// Override the preset's search window length.
    #[arg(long)]
    window_len: Option<usize>,
    /// File to write the reconstruction to.
    #[arg(long)]
    out: PathBuf,
    /// Print a machine-readable run summary to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Paper,
    Desk,
    Custom,
}

#[derive(Args)]
struct MedianArgs {
    /// Exactly three sequence files.
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 2)]
    alphabet_size: u32,
    /// File to write the median to; without it the median goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// The true sequence.
    truth: PathBuf,
    /// The candidate to score.
    candidate: PathBuf,
    /// Noise rate, enabling normalized ratios.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 2)]
    alphabet_size: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Which experiment to run.
    #[arg(value_parser = EXPERIMENT_NAMES)]
    name: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Trace count for multi-trace experiments.
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    alphabet_size: u32,
    /// Report file; a .csv suffix writes per-trial rows as CSV, anything
    /// else the full JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the full JSON report to stdout.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Median(args) => cmd_median(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn read_seq(path: &Path, alphabet: Alphabet) -> Result<Seq> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let line = text.trim_end_matches('\n');
    if line.contains('\n') {
        bail!("{} must contain a single sequence line", path.display());
    }
    Seq::parse(alphabet, line).with_context(|| format!("parsing {}", path.display()))
}

fn write_seq(path: &Path, seq: &Seq) -> Result<()> {
    fs::write(path, seq.to_line() + "\n").with_context(|| format!("writing {}", path.display()))
}

fn exactly_three(paths: &[PathBuf], what: &str) -> Result<()> {
    if paths.len() != 3 {
        bail!("expected exactly three {what}, got {}", paths.len());
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    if args.m == 0 {
        bail!("--m must be at least 1");
    }
    let alphabet = Alphabet::new(args.alphabet_size)?;
    let params: Vec<ChannelParams> = (1..=args.m)
        .map(|k| ChannelParams::new(args.p, args.seed, k as u64))
        .collect::<Result<_, _>>()?;
    let base = uniform_seq(args.n, alphabet, args.seed, 0);
    write_seq(Path::new(&format!("{}.base.txt", args.out)), &base)?;
    for (k, params) in (1..).zip(params) {
        let trace_path = format!("{}.trace{}.txt", args.out, k);
        if args.planted {
            let (trace, planted) = transmit_planted(&base, params);
            write_seq(Path::new(&trace_path), &trace)?;
            let mut ops = String::new();
            for op in planted.ops() {
                ops.push_str(&serde_json::to_string(op)?);
                ops.push('\n');
            }
            let ops_path = format!("{}.trace{}.ops.jsonl", args.out, k);
            fs::write(&ops_path, ops).with_context(|| format!("writing {ops_path}"))?;
            eprintln!("trace {k}: {} symbols (+ op log)", trace.len());
        } else {
            let trace = transmit(&base, params);
            write_seq(Path::new(&trace_path), &trace)?;
            eprintln!("trace {k}: {} symbols", trace.len());
        }
    }
    eprintln!("base: {} symbols over alphabet {}", base.len(), args.alphabet_size);
    Ok(ExitCode::SUCCESS)
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<ExitCode> {
    exactly_three(&args.traces, "trace files")?;
    let alphabet = Alphabet::new(args.alphabet_size)?;
    let s1 = read_seq(&args.traces[0], alphabet)?;
    let s2 = read_seq(&args.traces[1], alphabet)?;
    let s3 = read_seq(&args.traces[2], alphabet)?;

    let base = match args.preset {
        PresetArg::Paper => Some(ReconstructionPlan::paper(s1.len(), args.p)?),
        PresetArg::Desk => Some(ReconstructionPlan::desk(s1.len(), args.p)?),
        PresetArg::Custom => None,
    };
    let field = |over: Option<usize>, from_preset: fn(&ReconstructionPlan) -> usize, name| {
        over.or(base.as_ref().map(from_preset)).with_context(|| {
            format!("--preset custom requires --{name}")
        })
    };
    let anchor_len = field(args.anchor_len, |p| p.anchor_len, "anchor-len")?;
    let gap_len = field(args.gap_len, |p| p.gap_len, "gap-len")?;
    let window_len = field(args.window_len, |p| p.window_len, "window-len")?;
    let overridden = [args.anchor_len, args.gap_len, args.window_len].iter().any(Option::is_some);
    let plan = match base {
        Some(plan) if !overridden => plan,
        _ => ReconstructionPlan::custom(anchor_len, gap_len, window_len)?,
    };

    eprintln!(
        "plan: anchor {} gap {} window {} -> {} blocks of {}",
        plan.anchor_len,
        plan.gap_len,
        plan.window_len,
        plan.block_count(s1.len())?,
        plan.block_len(),
    );
    let start = Instant::now();
    let detail = reconstruct3_detailed(&s1, &s2, &s3, args.p, &plan)?;
    let elapsed = start.elapsed();
    let lost = detail.lost();
    eprintln!(
        "reconstructed {} symbols in {:.2?} (lost anchors: {} and {})",
        detail.output.len(),
        elapsed,
        lost[0],
        lost[1],
    );
    write_seq(&args.out, &detail.output)?;
    if args.json {
        let summary = serde_json::json!({
            "input_len": s1.len(),
            "output_len": detail.output.len(),
            "blocks": detail.block_plans.len(),
            "lost_anchors": lost,
            "objective_total": detail.objectives.iter().sum::<usize>(),
            "plan": detail.plan,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_median(args: MedianArgs) -> Result<ExitCode> {
    exactly_three(&args.inputs, "sequence files")?;
    let alphabet = Alphabet::new(args.alphabet_size)?;
    let x1 = read_seq(&args.inputs[0], alphabet)?;
    let x2 = read_seq(&args.inputs[1], alphabet)?;
    let x3 = read_seq(&args.inputs[2], alphabet)?;
    let result = median3_exact(&x1, &x2, &x3)?;
    eprintln!("objective {} distances {:?}", result.objective, result.distances);
    match &args.out {
        Some(path) => write_seq(path, &result.median)?,
        None if !args.json => println!("{}", result.median.to_line()),
        None => {}
    }
    if args.json {
        let summary = serde_json::json!({
            "median_len": result.median.len(),
            "objective": result.objective,
            "distances": result.distances,
            "median": if args.out.is_none() { Some(result.median.to_line()) } else { None },
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let alphabet = Alphabet::new(args.alphabet_size)?;
    let truth = read_seq(&args.truth, alphabet)?;
    let candidate = read_seq(&args.candidate, alphabet)?;
    let ed = tracemed::align::edit_distance(&truth, &candidate)?;
    let n = truth.len() as f64;
    let per_pn = args.p.filter(|&p| p > 0.0).map(|p| ed as f64 / (p * n));
    let per_fine = args
        .p
        .filter(|&p| p > 0.0)
        .map(|p| ed as f64 / (p * p * (1.0 / p).log2() * n));
    if args.json {
        let summary = serde_json::json!({
            "ed": ed,
            "truth_len": truth.len(),
            "candidate_len": candidate.len(),
            "ed_per_pn": per_pn,
            "ed_per_p2logn": per_fine,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("ed {ed}");
        if let Some(r) = per_pn {
            println!("ed_per_pn {r:.6}");
        }
        if let Some(r) = per_fine {
            println!("ed_per_p2logn {r:.6}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let cfg = ExperimentConfig {
        n: args.n,
        p: args.p,
        epsilon: args.epsilon,
        delta: args.delta,
        m: args.m,
        trials: args.trials,
        seed: args.seed,
        alphabet_size: args.alphabet_size,
        thresholds: Default::default(),
    };
    let start = Instant::now();
    let report = run_experiment(&args.name, &cfg)?;
    eprintln!("{} finished in {:.2?}", args.name, start.elapsed());

    if let Some(path) = &args.out {
        let body = if path.extension().is_some_and(|e| e == "csv") {
            report.rows_csv()
        } else {
            report.to_json() + "\n"
        };
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    if args.json {
        println!("{}", report.to_json());
    } else {
        for (name, ok) in &report.pass {
            let value = report.thresholds.get(name).map(|t| t.value);
            match value {
                Some(v) => println!("{} {} (threshold {v})", if *ok { "PASS" } else { "FAIL" }, name),
                None => println!("{} {}", if *ok { "PASS" } else { "FAIL" }, name),
            }
        }
        for (key, agg) in &report.aggregates {
            println!("{key}: mean {:.6} stddev {:.6} min {:.6} max {:.6}", agg.mean, agg.stddev, agg.min, agg.max);
        }
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
