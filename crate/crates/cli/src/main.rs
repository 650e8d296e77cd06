use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sparsefdr::detection::{discovery_bounds, exceedance_mean, mean_discovery_number};
use sparsefdr::estimators::{empirical_fdr, estimate, mad_scale};
use sparsefdr::experiment::{results_json, run_experiment, ExperimentSpec};
use sparsefdr::io::{read_vector, write_vector};
use sparsefdr::rng::ReplicateStream;
use sparsefdr::{Error, FdrBoundary, Method, ParameterBall};

#[derive(Parser)]
#[command(
    name = "sparsefdr",
    version,
    about = "FDR thresholding for sparse normal means"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold a vector of noisy coefficients with the FDR boundary.
    Denoise(DenoiseArgs),
    /// Run a seeded simulation described by a JSON spec.
    Simulate(SimulateArgs),
    /// Print boundary values t_k, penalty sums and lambda_{k,n}.
    Boundary(BoundaryArgs),
    /// Mean exceedances and discovery bounds for a vector of means.
    Detect(DetectArgs),
    /// Write y = mu + z for a means file (or spikes) with a fixed seed.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    StepUp,
    StepDown,
    Penalized,
}

#[derive(Args)]
struct DenoiseArgs {
    /// FDR control rate in (0, 1).
    #[arg(long)]
    q: f64,
    /// Known noise level.
    #[arg(long, conflicts_with = "mad")]
    sigma: Option<f64>,
    /// Estimate the noise level by MAD / 0.6745.
    #[arg(long)]
    mad: bool,
    #[arg(long, value_enum, default_value = "step-up")]
    method: MethodArg,
    /// Loss exponent for the penalized rule.
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// True means, to report the false discovery proportion.
    #[arg(long)]
    truth: Option<PathBuf>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    spec: PathBuf,
    output: PathBuf,
    /// Override the spec's replicate count.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: f64,
    /// Indices to tabulate.
    #[arg(long, num_args = 1.., required = true)]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Exponent for the penalty sums.
    #[arg(long, default_value_t = 2.0)]
    r: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BallArg {
    L0,
    Strong,
    Weak,
}

#[derive(Args)]
struct DetectArgs {
    /// File of means, one per line.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    q: f64,
    /// Evaluate M(k; mu) at these k.
    #[arg(long, num_args = 1..)]
    k: Vec<f64>,
    /// Ball for the discovery bounds.
    #[arg(long, value_enum, requires = "eta")]
    ball: Option<BallArg>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Means file; otherwise `--spikes` entries at `--level`.
    #[arg(long, conflicts_with_all = ["spikes", "level"])]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    spikes: usize,
    #[arg(long, default_value_t = 0.0)]
    level: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    output: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn read_checked(path: &Path, n: Option<usize>) -> Result<Vec<f64>, Failure> {
    let v = read_vector(path)?;
    if let Some(n) = n {
        if v.len() != n {
            return Err(Failure::Data(format!(
                "{}: expected {n} values, found {}",
                path.display(),
                v.len()
            )));
        }
    }
    Ok(v)
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value")
    );
}

fn denoise(a: DenoiseArgs) -> CliResult {
    let y = read_checked(&a.input, None)?;
    let sigma = match (a.sigma, a.mad) {
        (Some(s), _) => s,
        (None, true) => mad_scale(&y)?,
        (None, false) => 1.0,
    };
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Failure::Data(format!(
            "noise level must be positive, got {sigma}"
        )));
    }
    let b = FdrBoundary::with_noise_scale(y.len(), a.q, sigma)?;
    let method = match a.method {
        MethodArg::StepUp => Method::StepUp,
        MethodArg::StepDown => Method::StepDown,
        MethodArg::Penalized => Method::PenalizedR(a.r),
    };
    let est = estimate(&y, &b, method)?;
    write_vector(&a.output, &est.mu_hat)?;
    let fdr_hat = match &a.truth {
        Some(path) => Some(empirical_fdr(&est, &read_checked(path, Some(y.len()))?)?),
        None => None,
    };
    print_json(&json!({
        "n": y.len(),
        "q": a.q,
        "method": format!("{:?}", method),
        "k_hat": est.selection.k_hat,
        "t_hat": est.selection.t_hat,
        "sigma_hat": sigma,
        "discoveries": est.discoveries.len(),
        "fdr_hat": fdr_hat,
    }));
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult {
    let text = fs::read_to_string(&a.spec)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.spec.display())))?;
    let mut spec = ExperimentSpec::from_json(&text)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.spec.display())))?;
    if let Some(r) = a.reps {
        spec.replicates = r;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    spec.validate()
        .map_err(|e| Failure::Data(format!("{}: {e}", a.spec.display())))?;
    let base = a.spec.parent().map(Path::to_path_buf);
    let results = run_experiment(&spec, base.as_deref())?;
    fs::write(&a.output, results_json(&results)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.output.display())))?;
    Ok(())
}

fn boundary(a: BoundaryArgs) -> CliResult {
    let b = FdrBoundary::with_noise_scale(a.n, a.q, a.sigma)?;
    let mut out = String::from("k\tt_k\tpenalty_sum\tlambda_kn\n");
    for &k in &a.k {
        if k == 0 || k > a.n {
            return Err(Failure::Usage(format!(
                "k must lie in 1..={}, got {k}",
                a.n
            )));
        }
        let _ = writeln!(
            out,
            "{k}\t{:.6}\t{:.6}\t{:.6}",
            b.t(k),
            b.penalty_sum(k, a.r)?,
            b.lambda_kn(k)?
        );
    }
    print!("{out}");
    Ok(())
}

fn detect(a: DetectArgs) -> CliResult {
    let mu = read_checked(&a.config, Some(a.n))?;
    let b = FdrBoundary::new(a.n, a.q)?;
    let exceedances =
        a.k.iter()
            .map(|&k| Ok(json!({"k": k, "m": exceedance_mean(&b, &mu, k)?})))
            .collect::<Result<Vec<_>, Error>>()?;
    let bounds = match (a.ball, a.eta) {
        (Some(kind), Some(eta)) => {
            let ball = match kind {
                BallArg::L0 => ParameterBall::l0(eta, a.n),
                BallArg::Strong => ParameterBall::strong(a.p, eta, a.n),
                BallArg::Weak => ParameterBall::weak(a.p, eta, a.n),
            }?;
            Some(discovery_bounds(&b, &ball, &mu)?)
        }
        _ => None,
    };
    print_json(&json!({
        "n": a.n,
        "q": a.q,
        "k_mean": mean_discovery_number(&b, &mu)?,
        "exceedance": exceedances,
        "bounds": bounds,
    }));
    Ok(())
}

fn sample(a: SampleArgs) -> CliResult {
    if a.sigma.is_nan() || a.sigma <= 0.0 {
        return Err(Failure::Usage(format!(
            "sigma must be positive, got {}",
            a.sigma
        )));
    }
    let mu = match &a.config {
        Some(path) => read_checked(path, Some(a.n))?,
        None => {
            if a.spikes > a.n {
                return Err(Failure::Usage(format!(
                    "spikes must not exceed n = {}",
                    a.n
                )));
            }
            let mut v = vec![0.0; a.n];
            v[..a.spikes].iter_mut().for_each(|x| *x = a.level);
            v
        }
    };
    let mut stream = ReplicateStream::new(a.seed, 0);
    let y: Vec<f64> = mu.iter().map(|m| m + a.sigma * stream.normal()).collect();
    write_vector(&a.output, &y)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Simulate(a) => simulate(a),
        Command::Boundary(a) => boundary(a),
        Command::Detect(a) => detect(a),
        Command::Sample(a) => sample(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
