//! Command-line front end: loss evaluation, asymmetry verification, noise
//! injection, training runs, gradient checking, and run comparison.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use asymloss::harness::{
    self, compare_runs, describe_loss, parse_loss, run_experiment, ExperimentConfig, LossParams,
};
use asymloss::losses::LossSpec;
use asymloss::noise::{inject, transition_report, NoiseSpec};
use asymloss::simplex::{ClassLabel, Dataset, ProbVector};
use asymloss::trainer::gradient_check;
use asymloss::verifier::{
    argmin_is_vertex, oracle_minimize, verify_amse, weights_from_noise, AsymmetryWeights,
};
use asymloss::{Error, Result};

#[derive(Parser)]
#[command(name = "asymloss", version, about = "Asymmetric robust-loss toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Loss-function utilities.
    Losses {
        #[command(subcommand)]
        command: LossesCommand,
    },
    /// Certify the asymmetric condition for a loss at given weights.
    Verify(VerifyArgs),
    /// Label-noise utilities.
    Noise {
        #[command(subcommand)]
        command: NoiseCommand,
    },
    /// Run a training experiment from a JSON config.
    Train(TrainArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Tabulate final accuracies across persisted runs.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum LossesCommand {
    /// Evaluate value, per-class row, and gradient at a point.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum NoiseCommand {
    /// Corrupt a dataset file and write the noisy copy plus a transition report.
    Inject(InjectArgs),
}

#[derive(Args, Clone)]
struct LossArgs {
    /// Loss name: ce, fl, mae, mse, rce, nce, nfl, amse, jal-ce, jal-fl.
    #[arg(long, default_value = "amse")]
    loss: String,
    /// Full loss spec as JSON (overrides --loss and parameter flags).
    #[arg(long)]
    loss_json: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 30.0)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// RCE's log-zero substitute A.
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    log_zero: f64,
}

impl LossArgs {
    fn resolve(&self) -> Result<LossSpec> {
        if let Some(raw) = &self.loss_json {
            let spec: LossSpec = serde_json::from_str(raw)?;
            spec.validate()?;
            return Ok(spec);
        }
        parse_loss(
            &self.loss,
            &LossParams {
                gamma: self.gamma,
                a: self.a,
                q: self.q,
                alpha: self.alpha,
                beta: self.beta,
                log_zero: self.log_zero,
            },
        )
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    loss: LossArgs,
    /// Probability vector, comma-separated (e.g. 0.7,0.2,0.1).
    #[arg(long, conflicts_with = "logits")]
    p: Option<String>,
    /// Logits, comma-separated; softmax is applied first.
    #[arg(long, allow_hyphen_values = true)]
    logits: Option<String>,
    /// Label index.
    #[arg(long, default_value_t = 0)]
    y: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    loss: LossArgs,
    /// Weight vector, comma-separated (e.g. 0.6,0.2,0.2).
    #[arg(long)]
    weights: Option<String>,
    /// Noise spec JSON to derive weights from (with --k and --y).
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    y: usize,
    /// Grid size for the sup h(x) scan.
    #[arg(long, default_value_t = 2000)]
    grid: usize,
    /// Oracle grid resolution (defaults: 200 exhaustive for K <= 4,
    /// 10000 two-coordinate otherwise).
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct InjectArgs {
    /// Dataset JSON file (as written by this tool).
    #[arg(long)]
    dataset: PathBuf,
    /// Noise spec JSON, e.g. {"kind":"symmetric","eta":0.4}.
    #[arg(long)]
    noise: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for noisy.json and transition.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Class counts to test, comma-separated.
    #[arg(long, default_value = "2,10,100")]
    ks: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Maximum allowed relative error.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories (or parents of run directories).
    #[arg(long, required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    /// Also write the table as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Losses {
            command: LossesCommand::Eval(args),
        } => eval_loss(args),
        Command::Verify(args) => verify(args),
        Command::Noise {
            command: NoiseCommand::Inject(args),
        } => noise_inject(args),
        Command::Train(args) => train_cmd(args),
        Command::Gradcheck(args) => gradcheck_cmd(args),
        Command::Report(args) => report_cmd(args),
    }
}

fn parse_f64_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number '{s}': {e}")))
        })
        .collect()
}

fn eval_loss(args: EvalArgs) -> Result<()> {
    let spec = args.loss.resolve()?;
    let (p, from_logits) = match (&args.p, &args.logits) {
        (Some(raw), _) => (ProbVector::new(parse_f64_list(raw)?)?, None),
        (None, Some(raw)) => {
            let logits = parse_f64_list(raw)?;
            (asymloss::simplex::softmax(&logits)?, Some(logits))
        }
        (None, None) => {
            return Err(Error::Config("provide --p or --logits".into()));
        }
    };
    let y = ClassLabel::new(args.y, p.k())?;
    let value = spec.value(&p, y)?;
    let row = spec.row(&p)?;
    let grad_p = spec.grad_p(&p, y)?;
    let mut out = json!({
        "loss": describe_loss(&spec),
        "spec": spec,
        "p": p.values(),
        "y": args.y,
        "value": value,
        "row": row,
        "grad_p": grad_p,
    });
    if let Some(logits) = from_logits {
        out["grad_logits"] = json!(spec.grad_logits(&logits, y)?);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let spec = args.loss.resolve()?;
    let weights = match (&args.weights, &args.noise) {
        (Some(raw), _) => AsymmetryWeights::new(parse_f64_list(raw)?)?,
        (None, Some(noise_raw)) => {
            let noise: NoiseSpec = serde_json::from_str(noise_raw)?;
            weights_from_noise(&noise, ClassLabel::new(args.y, args.k)?, args.k)?
        }
        (None, None) => {
            return Err(Error::Config("provide --weights or --noise".into()));
        }
    };
    let resolution = args
        .resolution
        .unwrap_or(if weights.k() <= 4 { 200 } else { 10_000 });

    let report = if let LossSpec::Amse { a, q } = spec {
        let v = verify_amse(q, a, &weights, args.grid, resolution)?;
        json!({
            "loss": describe_loss(&spec),
            "weights": weights.weights(),
            "threshold": v.required_ratio,
            "ratio": v.actual_ratio,
            "sup_h": if v.sup_h.is_finite() { json!(v.sup_h) } else { json!("unbounded") },
            "oracle_argmin": v.oracle_argmin.values(),
            "oracle_vertex": v.oracle_vertex,
            "oracle_agrees": v.oracle_agrees,
            "verdict": if v.theorem_satisfied { "asymmetric" } else { "not-asymmetric" },
        })
    } else {
        // No closed-form threshold outside the AMSE family: oracle only.
        let argmin = oracle_minimize(&spec, &weights, resolution)?;
        let vertex = argmin_is_vertex(&argmin, weights.dominant(), resolution);
        json!({
            "loss": describe_loss(&spec),
            "weights": weights.weights(),
            "threshold": serde_json::Value::Null,
            "ratio": weights.ratio(),
            "sup_h": serde_json::Value::Null,
            "oracle_argmin": argmin.values(),
            "oracle_vertex": vertex,
            "verdict": if vertex { "asymmetric" } else { "not-asymmetric" },
        })
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn noise_inject(args: InjectArgs) -> Result<()> {
    let raw = std::fs::read(&args.dataset)?;
    let dataset: Dataset = serde_json::from_slice(&raw)?;
    dataset.validate()?;
    let spec: NoiseSpec = serde_json::from_str(&args.noise)?;
    let noisy = inject(&dataset, &spec, args.seed)?;
    let report = transition_report(&spec, &dataset, &noisy)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("noisy.json"), serde_json::to_string(&noisy)?)?;
    std::fs::write(
        args.out.join("transition.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    let flipped = noisy.samples.iter().filter(|s| s.flipped).count();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "samples": noisy.len(),
            "flipped": flipped,
            "flip_rate": flipped as f64 / noisy.len() as f64,
            "max_abs_diff": report.max_abs_diff,
            "out": args.out,
        }))?
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let raw = std::fs::read(&args.config)?;
    let mut config: ExperimentConfig = serde_json::from_slice(&raw)?;
    let mut overridden = false;
    if let Some(seed) = args.seed {
        config.opt.seed = seed;
        overridden = true;
    }
    if let Some(out) = args.out {
        config.outputs = out;
        overridden = true;
    }
    // Flag overrides invalidate the verbatim snapshot; persist canonical form.
    let original: Option<&[u8]> = if overridden { None } else { Some(&raw) };
    let record = run_experiment(&config, original)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "run_id": record.run_id,
            "dir": harness::runner::run_dir(&record),
            "loss": describe_loss(&record.config.loss),
            "final_test_acc": record.report.final_test_acc,
            "epochs": record.report.per_epoch.len(),
            "duration_secs": record.duration_secs,
        }))?
    );
    Ok(())
}

fn gradcheck_cmd(args: GradcheckArgs) -> Result<()> {
    let spec = args.loss.resolve()?;
    let ks: Vec<usize> = args
        .ks
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad class count '{s}': {e}")))
        })
        .collect::<Result<_>>()?;
    let report = gradient_check(&spec, args.trials, &ks, args.seed)?;
    let ok = report.max_rel_err_prob < args.tol && report.max_rel_err_logits < args.tol;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "loss": describe_loss(&spec),
            "report": report,
            "tol": args.tol,
            "pass": ok,
        }))?
    );
    if !ok {
        return Err(Error::Numeric(format!(
            "gradient mismatch beyond tolerance {}",
            args.tol
        )));
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    let mut records = Vec::new();
    for path in &args.runs {
        if path.join("record.json").exists() {
            records.push(harness::runner::load_record(path)?);
            continue;
        }
        // A parent directory: collect every child run.
        let mut found = false;
        if path.is_dir() {
            let mut children: Vec<PathBuf> = std::fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            children.sort();
            for child in children {
                if child.join("record.json").exists() {
                    records.push(harness::runner::load_record(&child)?);
                    found = true;
                }
            }
        }
        if !found {
            return Err(Error::InvalidInput(format!(
                "no record.json under {}",
                path.display()
            )));
        }
    }
    let table = compare_runs(&records)?;
    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, table.to_csv())?;
    }
    print!("{}", table.to_text());
    Ok(())
}
