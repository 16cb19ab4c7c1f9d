//! `toda` — enumerate blowup energy sets Σ(μ₁, μ₂), run radial simulations,
//! verify quantization identities and re-check trajectory files.
//!
//! Exit codes: 0 success; 2 enumeration failure (budget exhausted or an
//! undecidable intersection); 3 simulation failure (step underflow or
//! exponent overflow); 4 malformed trajectory CSV; 5 residual threshold
//! violation; 64 usage errors; 1 anything else (I/O and friends).

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use toda_core::closure::{self, ClosureError, ClosureOptions};
use toda_core::conic::Conic;
use toda_core::numeric::{Rational, DEFAULT_MAX_BITS};
use toda_core::quantization::{cartan, fully_bubbling_energy, margin_check, pohozaev_residual, GammaVector};
use toda_core::radial::{
    detect_plateaus, integrate, read_trajectory_csv, residual_report, write_trajectory_csv,
    RadialError, RadialProblem, Trajectory, DEFAULT_FAST_THRESHOLD, DEFAULT_MIN_LENGTH,
    DEFAULT_SLOPE_TOL,
};

const EXIT_ENUM: u8 = 2;
const EXIT_SIM: u8 = 3;
const EXIT_CSV: u8 = 4;
const EXIT_RESIDUAL: u8 = 5;
const EXIT_USAGE: u8 = 64;

/// Tolerance for flagging a plateau as a member of Σ.
const PLATEAU_MATCH_TOL: f64 = 0.05;

#[derive(Parser)]
#[command(name = "toda", version, about = "Blowup energy sets, quantization checks and radial simulations for singular SU(n+1) Toda systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the finite set of admissible blowup energies for (mu1, mu2).
    Enumerate(EnumerateArgs),
    /// Integrate a radial problem and report its energy plateaus.
    Simulate(SimulateArgs),
    /// Print the fully-bubbling energy, its exact identity residual and margins.
    Quantize(QuantizeArgs),
    /// Re-check the conservation-law residuals of a trajectory CSV.
    Check(CheckArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    /// mu1 as `p/q` or a terminating decimal (> 0)
    #[arg(long)]
    mu1: String,
    /// mu2 as `p/q` or a terminating decimal (> 0)
    #[arg(long)]
    mu2: String,
    /// Maximum comparison precision in bits (default: $TODA_PRECISION or 256)
    #[arg(long)]
    precision: Option<u32>,
    /// Worklist step budget
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Chase opposite intersections on each member's own coordinate lines
    #[arg(long, default_value_t = false)]
    include_self_lines: bool,
    /// Output format
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SimulateArgs {
    /// Preset configuration: tower, scalar or symmetric
    #[arg(long, value_parser = ["tower", "scalar", "symmetric"])]
    preset: Option<String>,
    /// Comma-separated gamma_i as rationals, each > -1
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma: Option<Vec<String>>,
    /// Comma-separated positive coefficients h_i
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// Comma-separated initial heights eta_i
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eta: Option<Vec<f64>>,
    /// Start of the log-radius range (e^{t_start} must be <= 1e-3)
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<f64>,
    /// End of the log-radius range
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// Relative step tolerance
    #[arg(long, default_value_t = 1e-10)]
    rel: f64,
    /// Absolute step tolerance
    #[arg(long, default_value_t = 1e-10)]
    abs: f64,
    /// Maximum step in t
    #[arg(long, default_value_t = 0.5)]
    max_step: f64,
    /// Plateau slope tolerance |dsigma/dt|
    #[arg(long)]
    slope_tol: Option<f64>,
    /// Minimum plateau length in t
    #[arg(long)]
    min_length: Option<f64>,
    /// Fast-decay threshold M
    #[arg(long, default_value_t = DEFAULT_FAST_THRESHOLD)]
    fast_threshold: f64,
    /// Write the trajectory CSV here (omitted: not written unless no
    /// plateau output is requested either, in which case it goes to stdout)
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
    /// Write the plateau report JSON here (stdout when omitted)
    #[arg(long)]
    plateaus_out: Option<PathBuf>,
    /// Run a JSON file of independent jobs in parallel instead
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Parallelism for --sweep (default: available cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Number of components
    #[arg(long)]
    n: usize,
    /// Comma-separated gamma_i as rationals, each > -1
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma: Vec<String>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Trajectory CSV produced by `toda simulate`
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated gamma_i the trajectory was produced with (default 0s)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma: Option<Vec<String>>,
    /// Comma-separated h_i the trajectory was produced with (default 1s)
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// Maximum allowed relative residual
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Quantize(args) => cmd_quantize(args),
        Command::Check(args) => cmd_check(args),
    };
    ExitCode::from(code)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {}", msg);
    code
}

fn default_precision() -> u32 {
    std::env::var("TODA_PRECISION")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_BITS)
}

fn parse_rational(s: &str, what: &str) -> Result<Rational, String> {
    Rational::from_str(s).map_err(|e| format!("{}: {}", what, e))
}

fn parse_gammas(raw: &[String]) -> Result<GammaVector, String> {
    let gs: Vec<Rational> = raw
        .iter()
        .map(|s| parse_rational(s, "gamma"))
        .collect::<Result<_, _>>()?;
    GammaVector::new(gs).map_err(|e| e.to_string())
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match output {
        Some(path) => fs::write(path, content).map_err(|e| format!("{}: {}", path.display(), e)),
        None => {
            println!("{}", content);
            Ok(())
        }
    }
}

fn cmd_enumerate(args: EnumerateArgs) -> u8 {
    let conic = match build_conic(&args.mu1, &args.mu2) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let options = ClosureOptions {
        budget: args.budget,
        max_bits: args.precision.unwrap_or_else(default_precision),
        include_self_lines: args.include_self_lines,
    };
    let set = match closure::enumerate(&conic, options) {
        Ok(s) => s,
        Err(e @ ClosureError::BudgetExceeded { .. }) => return fail(EXIT_ENUM, e),
        Err(e @ ClosureError::Ambiguous { .. }) => return fail(EXIT_ENUM, e),
    };
    let content = match args.format.as_str() {
        "json" => serde_json::to_string_pretty(&set.to_json()).expect("serializable"),
        _ => {
            let mut csv = String::from("s1,s2,provenance\n");
            for p in &set.points {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    p.s1.decimal_string(30),
                    p.s2.decimal_string(30),
                    p.provenance
                ));
            }
            csv
        }
    };
    match emit(&args.output, &content) {
        Ok(()) => 0,
        Err(e) => fail(1, e),
    }
}

fn build_conic(mu1: &str, mu2: &str) -> Result<Conic, String> {
    let m1 = parse_rational(mu1, "mu1")?;
    let m2 = parse_rational(mu2, "mu2")?;
    Conic::new(m1, m2).map_err(|e| e.to_string())
}

/// Plateau report: the detected plateau energy vectors and, for two-component
/// runs, whether each lies within 0.05 of a member of the enumerated set.
#[derive(Serialize, Deserialize)]
struct PlateauReport {
    plateaus: Vec<Vec<f64>>,
    sigma_set_match: Option<Vec<bool>>,
}

#[derive(Clone, Deserialize)]
struct SweepJob {
    name: String,
    gamma: Vec<String>,
    h: Vec<f64>,
    eta: Vec<f64>,
    t_start: f64,
    t_end: f64,
    #[serde(default = "default_tol")]
    rel: f64,
    #[serde(default = "default_tol")]
    abs: f64,
    #[serde(default = "default_max_step")]
    max_step: f64,
    #[serde(default)]
    slope_tol: Option<f64>,
    #[serde(default)]
    min_length: Option<f64>,
    trajectory_out: PathBuf,
    #[serde(default)]
    plateaus_out: Option<PathBuf>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_step() -> f64 {
    0.5
}

struct ResolvedSim {
    gamma: GammaVector,
    h: Vec<f64>,
    eta: Vec<f64>,
    t_start: f64,
    t_end: f64,
    rel: f64,
    abs: f64,
    max_step: f64,
    slope_tol: f64,
    min_length: f64,
    fast_threshold: f64,
}

fn resolve_simulation(args: &SimulateArgs) -> Result<ResolvedSim, String> {
    // preset defaults, individually overridable
    struct Preset {
        gamma: &'static [&'static str],
        h: &'static [f64],
        eta: &'static [f64],
        t_start: f64,
        t_end: f64,
        min_length: f64,
    }
    let preset = match args.preset.as_deref() {
        Some("tower") => Some(Preset {
            gamma: &["0", "0"],
            h: &[1.0, 1.0],
            eta: &[0.0, -30.0],
            t_start: -7.0,
            t_end: 40.0,
            // the inter-bubble plateaus of this configuration are ~1.3 long
            min_length: 1.0,
        }),
        Some("scalar") => Some(Preset {
            gamma: &["0"],
            h: &[1.0],
            eta: &[0.0],
            t_start: -7.0,
            t_end: 7.0,
            min_length: DEFAULT_MIN_LENGTH,
        }),
        Some("symmetric") => Some(Preset {
            gamma: &["0", "0"],
            h: &[1.0, 1.0],
            eta: &[0.0, 0.0],
            t_start: -7.0,
            t_end: 12.0,
            min_length: DEFAULT_MIN_LENGTH,
        }),
        Some(other) => return Err(format!("unknown preset `{}`", other)),
        None => None,
    };
    let gamma_raw: Vec<String> = match (&args.gamma, &preset) {
        (Some(g), _) => g.clone(),
        (None, Some(p)) => p.gamma.iter().map(|s| s.to_string()).collect(),
        (None, None) => return Err("either --preset or --gamma is required".into()),
    };
    let gamma = parse_gammas(&gamma_raw)?;
    let n = gamma.n();
    let h = args
        .h
        .clone()
        .or_else(|| preset.as_ref().map(|p| p.h.to_vec()))
        .unwrap_or_else(|| vec![1.0; n]);
    let eta = args
        .eta
        .clone()
        .or_else(|| preset.as_ref().map(|p| p.eta.to_vec()))
        .unwrap_or_else(|| vec![0.0; n]);
    let t_start = args
        .t_start
        .or_else(|| preset.as_ref().map(|p| p.t_start))
        .unwrap_or(-7.0);
    let t_end = args
        .t_end
        .or_else(|| preset.as_ref().map(|p| p.t_end))
        .unwrap_or(12.0);
    let min_length = args
        .min_length
        .or_else(|| preset.as_ref().map(|p| p.min_length))
        .unwrap_or(DEFAULT_MIN_LENGTH);
    Ok(ResolvedSim {
        gamma,
        h,
        eta,
        t_start,
        t_end,
        rel: args.rel,
        abs: args.abs,
        max_step: args.max_step,
        slope_tol: args.slope_tol.unwrap_or(DEFAULT_SLOPE_TOL),
        min_length,
        fast_threshold: args.fast_threshold,
    })
}

fn run_simulation(sim: &ResolvedSim) -> Result<(Trajectory, PlateauReport), (u8, String)> {
    let mut problem = RadialProblem::new(
        sim.gamma.gamma().to_vec(),
        sim.h.clone(),
        sim.eta.clone(),
        sim.t_start,
        sim.t_end,
    )
    .map_err(|e| (EXIT_USAGE, e.to_string()))?
    .with_tolerances(sim.rel, sim.abs);
    problem.max_step = sim.max_step;

    let traj = integrate(&problem).map_err(|e| match e {
        RadialError::NonConvergence { .. } | RadialError::Overflow { .. } => {
            (EXIT_SIM, e.to_string())
        }
        RadialError::Invalid(_) => (EXIT_USAGE, e.to_string()),
    })?;

    let plateaus = detect_plateaus(&traj, sim.slope_tol, sim.min_length, sim.fast_threshold);
    let sigma_set_match = match sim.gamma.n() {
        2 => {
            let conic = Conic::new(sim.gamma.mu(0), sim.gamma.mu(1))
                .map_err(|e| (EXIT_USAGE, e.to_string()))?;
            let set = closure::enumerate(&conic, ClosureOptions::default())
                .map_err(|e| (EXIT_ENUM, e.to_string()))?;
            let members: Vec<(f64, f64)> = set.points.iter().map(|p| p.to_f64()).collect();
            Some(
                plateaus
                    .iter()
                    .map(|p| {
                        members.iter().any(|m| {
                            (p.sigma[0] - m.0).abs() <= PLATEAU_MATCH_TOL
                                && (p.sigma[1] - m.1).abs() <= PLATEAU_MATCH_TOL
                        })
                    })
                    .collect(),
            )
        }
        1 => {
            // scalar energies quantize to 0 or 2*mu
            let mu = sim.gamma.mu(0).to_f64();
            Some(
                plateaus
                    .iter()
                    .map(|p| {
                        (p.sigma[0]).abs() <= PLATEAU_MATCH_TOL
                            || (p.sigma[0] - 2.0 * mu).abs() <= PLATEAU_MATCH_TOL
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    let report = PlateauReport {
        plateaus: plateaus.iter().map(|p| p.sigma.clone()).collect(),
        sigma_set_match,
    };
    Ok((traj, report))
}

fn cmd_simulate(args: SimulateArgs) -> u8 {
    if let Some(sweep) = &args.sweep {
        return cmd_sweep(sweep, args.jobs);
    }
    let sim = match resolve_simulation(&args) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let (traj, report) = match run_simulation(&sim) {
        Ok(x) => x,
        Err((code, msg)) => return fail(code, msg),
    };
    if let Some(path) = &args.trajectory_out {
        let mut file = match fs::File::create(path) {
            Ok(f) => f,
            Err(e) => return fail(1, format!("{}: {}", path.display(), e)),
        };
        if let Err(e) = write_trajectory_csv(&mut file, &traj) {
            return fail(1, e);
        }
    }
    let json = serde_json::to_string_pretty(&report).expect("serializable");
    match emit(&args.plateaus_out, &json) {
        Ok(()) => 0,
        Err(e) => fail(1, e),
    }
}

fn cmd_sweep(path: &PathBuf, jobs: Option<usize>) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(1, format!("{}: {}", path.display(), e)),
    };
    let sweep: Vec<SweepJob> = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, format!("bad sweep file: {}", e)),
    };
    let parallelism = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);
    let failures: std::sync::Mutex<Vec<String>> = std::sync::Mutex::new(Vec::new());
    let queue = std::sync::Mutex::new(sweep.into_iter().collect::<Vec<_>>());
    std::thread::scope(|scope| {
        for _ in 0..parallelism {
            scope.spawn(|| loop {
                let job = { queue.lock().unwrap().pop() };
                let Some(job) = job else { break };
                if let Err(e) = run_sweep_job(&job) {
                    failures.lock().unwrap().push(format!("{}: {}", job.name, e));
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        0
    } else {
        for f in &failures {
            eprintln!("error: {}", f);
        }
        EXIT_SIM
    }
}

fn run_sweep_job(job: &SweepJob) -> Result<(), String> {
    let gamma = parse_gammas(&job.gamma)?;
    let sim = ResolvedSim {
        gamma,
        h: job.h.clone(),
        eta: job.eta.clone(),
        t_start: job.t_start,
        t_end: job.t_end,
        rel: job.rel,
        abs: job.abs,
        max_step: job.max_step,
        slope_tol: job.slope_tol.unwrap_or(DEFAULT_SLOPE_TOL),
        min_length: job.min_length.unwrap_or(DEFAULT_MIN_LENGTH),
        fast_threshold: DEFAULT_FAST_THRESHOLD,
    };
    let (traj, report) = run_simulation(&sim).map_err(|(_, msg)| msg)?;
    let mut file = fs::File::create(&job.trajectory_out)
        .map_err(|e| format!("{}: {}", job.trajectory_out.display(), e))?;
    write_trajectory_csv(&mut file, &traj).map_err(|e| e.to_string())?;
    file.flush().map_err(|e| e.to_string())?;
    if let Some(out) = &job.plateaus_out {
        let json = serde_json::to_string_pretty(&report).expect("serializable");
        fs::write(out, json).map_err(|e| format!("{}: {}", out.display(), e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct QuantizeReport {
    n: usize,
    gamma: Vec<String>,
    sigma: Vec<String>,
    pohozaev_residual: String,
    margins: Vec<String>,
}

fn cmd_quantize(args: QuantizeArgs) -> u8 {
    let gamma = match parse_gammas(&args.gamma) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    if gamma.n() != args.n {
        return fail(
            EXIT_USAGE,
            format!("--n {} but {} gamma values given", args.n, gamma.n()),
        );
    }
    let a = match cartan(args.n) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let sigma = fully_bubbling_energy(&gamma).expect("gamma validated");
    let residual = pohozaev_residual(&a, &sigma, &gamma).expect("dimensions agree");
    let margins = margin_check(&a, &sigma, &gamma).expect("dimensions agree");
    let report = QuantizeReport {
        n: args.n,
        gamma: gamma.gamma().iter().map(|g| g.to_string()).collect(),
        sigma: sigma
            .as_rationals()
            .expect("fully-bubbling energy is rational")
            .iter()
            .map(|s| s.to_string())
            .collect(),
        pohozaev_residual: residual.exact().expect("exact rational").to_string(),
        margins: margins
            .iter()
            .map(|m| m.exact().expect("exact rational").to_string())
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report).expect("serializable");
    match emit(&args.output, &json) {
        Ok(()) => 0,
        Err(e) => fail(1, e),
    }
}

#[derive(Serialize)]
struct CheckReport {
    points: usize,
    max_neumann_rel: f64,
    max_pohozaev_rel: f64,
    threshold: f64,
    pass: bool,
}

fn cmd_check(args: CheckArgs) -> u8 {
    let file = match fs::File::open(&args.input) {
        Ok(f) => f,
        Err(e) => return fail(1, format!("{}: {}", args.input.display(), e)),
    };
    let reader = std::io::BufReader::new(file);
    // peek at the header to learn n when gamma/h are not given
    let text = {
        use std::io::Read;
        let mut r = reader;
        let mut s = String::new();
        if let Err(e) = r.read_to_string(&mut s) {
            return fail(1, e);
        }
        s
    };
    let n_cols = text.lines().next().map(|h| h.split(',').count()).unwrap_or(0);
    if n_cols < 6 || (n_cols - 3) % 3 != 0 {
        return fail(EXIT_CSV, "malformed trajectory CSV header");
    }
    let n = (n_cols - 3) / 3;
    let gamma: Vec<Rational> = match &args.gamma {
        Some(raw) => match raw.iter().map(|s| parse_rational(s, "gamma")).collect() {
            Ok(g) => g,
            Err(e) => return fail(EXIT_USAGE, e),
        },
        None => vec![Rational::zero(); n],
    };
    let h = args.h.clone().unwrap_or_else(|| vec![1.0; n]);
    let traj = match read_trajectory_csv(text.as_bytes(), &gamma, &h) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CSV, e),
    };
    let rep = residual_report(&traj);
    let report = CheckReport {
        points: traj.len(),
        max_neumann_rel: rep.max_neumann_rel(),
        max_pohozaev_rel: rep.max_pohozaev_rel(),
        threshold: args.threshold,
        pass: rep.max_neumann_rel() <= args.threshold
            && rep.max_pohozaev_rel() <= args.threshold,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    if report.pass {
        0
    } else {
        fail(
            EXIT_RESIDUAL,
            format!(
                "residuals exceed threshold {}: neumann {}, pohozaev {}",
                args.threshold, report.max_neumann_rel, report.max_pohozaev_rel
            ),
        )
    }
}
