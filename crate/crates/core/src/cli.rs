//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{check_feasible, worst_case_interference, CaseTag, Scenario};
use crate::error::{Error, Result};
use crate::experiments::{
    gen_scenario, parse_range, run_method, sweep_constraints, sweep_distance, sweep_pbar, CovMode,
    ExperimentConfig, Method, SweepResult,
};
use crate::oracle::{mc_worst_interference_samples_only, OracleConfig};
use crate::scenario_io::load_scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "robust-beam", version, about = "Robust cognitive-radio beamforming solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario file with one or all solvers.
    Solve(SolveArgs),
    /// Rate versus the transmit-power budget.
    SweepPbar(SweepPbarArgs),
    /// Rate versus the PU/SU distance ratio.
    SweepDistance(SweepDistanceArgs),
    /// Power-only, interference-only and both-constraint rates versus the power budget.
    SweepConstraints(SweepConstraintsArgs),
    /// Cross-check solvers against each other and the oracles on seeded cases.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliMethod {
    Analytic,
    Socp,
    Oracle,
    All,
}

impl From<CliMethod> for Method {
    fn from(m: CliMethod) -> Self {
        match m {
            CliMethod::Analytic => Method::Analytic,
            CliMethod::Socp => Method::Socp,
            CliMethod::Oracle => Method::Oracle,
            CliMethod::All => Method::All,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliCov {
    Isotropic,
    Wishart,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    method: CliMethod,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Number of transmit antennas.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Interference cap in dB.
    #[arg(long = "pt-db", default_value_t = 0.0, allow_negative_numbers = true)]
    pt_db: f64,
    #[arg(long, value_enum)]
    cov: Option<CliCov>,
    /// Standard deviation for the isotropic covariance.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4.0)]
    path_loss: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    method: CliMethod,
    /// Output CSV path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepPbarArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Budget values in dB: start:stop:step, a comma list or one value.
    #[arg(long = "pbar-db", default_value = "3:10:1", allow_hyphen_values = true)]
    pbar_db: String,
    #[arg(long = "l-ratio", default_value_t = 2.0)]
    l_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct SweepDistanceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "pbar-db", default_value_t = 5.0, allow_negative_numbers = true)]
    pbar_db: f64,
    /// Distance ratios: start:stop:step, a comma list or one value.
    #[arg(long = "l-ratio", default_value = "1:10:1")]
    l_ratio: String,
    /// One or more ε values (comma list); several give one series each.
    #[arg(long, default_value = "0.2,0.3")]
    epsilon: String,
}

#[derive(Debug, Args)]
struct SweepConstraintsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "pbar-db", default_value = "0:10:1", allow_hyphen_values = true)]
    pbar_db: String,
    #[arg(long = "l-ratio", default_value_t = 2.0)]
    l_ratio: f64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
}

#[derive(Debug, Args)]
struct OracleCheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_enum, default_value = "isotropic")]
    cov: CliCov,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
}

/// Exit code for a library error: solver-side failures are 2, input problems 1.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_)
        | Error::NotOptimal(_)
        | Error::NoRoot { .. }
        | Error::InfeasibleGeometry { .. }
        | Error::NoConvergence => EXIT_SOLVER,
        _ => EXIT_BAD_INPUT,
    }
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out, err),
        Command::SweepPbar(a) => cmd_sweep_pbar(&a, out, err),
        Command::SweepDistance(a) => cmd_sweep_distance(&a, out, err),
        Command::SweepConstraints(a) => cmd_sweep_constraints(&a, out, err),
        Command::OracleCheck(a) => cmd_oracle_check(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sc = load_scenario(&a.scenario)?;
    let oracle = OracleConfig::default();
    let mut code = EXIT_OK;
    writeln!(out, "method,rate_bits,p,worst_interference,case_tag").map_err(io)?;
    for m in Method::from(a.method).expand() {
        match run_method(m, &sc, &oracle) {
            Ok(sol) => writeln!(
                out,
                "{},{:.11e},{:.11e},{:.11e},{}",
                m,
                sol.rate_bits(),
                sol.p,
                sol.worst_interference,
                sol.case_tag
            )
            .map_err(io)?,
            Err(e) => {
                writeln!(err, "{m}: {e}").map_err(io)?;
                code = code.max(exit_code_for(&e));
            }
        }
    }
    Ok(code)
}

fn base_config(c: &CommonArgs, default_cov: CliCov, epsilon: f64, l_ratio: f64, p_bar_db: f64) -> ExperimentConfig {
    let cov_mode = match c.cov.unwrap_or(default_cov) {
        CliCov::Isotropic => CovMode::Isotropic { sigma: c.sigma },
        CliCov::Wishart => CovMode::RandomWishart,
    };
    ExperimentConfig {
        n_antennas: c.n,
        p_bar_db,
        p_t_db: c.pt_db,
        epsilon,
        l_ratio,
        path_loss_exponent: c.path_loss,
        trials: c.trials,
        seed: c.seed,
        method: c.method.into(),
        cov_mode,
        oracle: OracleConfig::default(),
    }
}

fn emit(res: &SweepResult, c: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &c.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            res.write_csv(&mut w)?;
            w.flush().map_err(io)?;
        }
        None => res.write_csv(&mut *out)?,
    }
    let failures = res.total_failures();
    writeln!(
        err,
        "{} rows over {} in {:.2} s; {} failed solves",
        res.rows.len(),
        res.axis_name,
        res.elapsed_secs,
        failures
    )
    .map_err(io)?;
    Ok(if failures > 0 { EXIT_SOLVER } else { EXIT_OK })
}

fn cmd_sweep_pbar(a: &SweepPbarArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let axis = parse_range(&a.pbar_db)?;
    let cfg = base_config(&a.common, CliCov::Isotropic, a.epsilon, a.l_ratio, axis[0]);
    let res = sweep_pbar(&cfg, &axis)?;
    emit(&res, &a.common, out, err)
}

fn cmd_sweep_distance(a: &SweepDistanceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let axis = parse_range(&a.l_ratio)?;
    let eps = parse_range(&a.epsilon)?;
    let cfg = base_config(&a.common, CliCov::Isotropic, eps[0], axis[0], a.pbar_db);
    let res = sweep_distance(&cfg, &axis, &eps)?;
    emit(&res, &a.common, out, err)
}

fn cmd_sweep_constraints(a: &SweepConstraintsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let axis = parse_range(&a.pbar_db)?;
    let cfg = base_config(&a.common, CliCov::Wishart, a.epsilon, a.l_ratio, axis[0]);
    let res = sweep_constraints(&cfg, &axis)?;
    emit(&res, &a.common, out, err)
}

/// Pass/fail tally of one invariant over all cases.
#[derive(Debug, Default)]
struct Suite {
    passed: usize,
    failed: usize,
}

impl Suite {
    fn record(&mut self, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }
}

fn rel_equal(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

fn check_case(sc: &Scenario, oracle: &OracleConfig, suites: &mut [Suite; 5], seed: u64) {
    let analytic = run_method(Method::Analytic, sc, oracle);
    let socp = run_method(Method::Socp, sc, oracle);
    let grid = run_method(Method::Oracle, sc, oracle);
    let [equiv, sandwich, feasible, equality, dominance] = suites;
    match (&analytic, &socp) {
        (Ok(a), Ok(s)) => equiv.record((a.rate - s.rate).abs() <= 1e-4),
        _ => equiv.record(false),
    }
    match (&analytic, &socp, &grid) {
        (Ok(a), Ok(s), Ok(g)) => sandwich.record((a.rate - g.rate).abs() <= 1e-6 && (s.rate - g.rate).abs() <= 1e-6),
        _ => sandwich.record(false),
    }
    for sol in [&analytic, &socp] {
        feasible.record(sol.as_ref().is_ok_and(|s| check_feasible(s, sc, 1e-6).is_feasible()));
    }
    match &analytic {
        Ok(a) => {
            let ok = match a.case_tag {
                CaseTag::PowerOnly => true,
                CaseTag::InterferenceOnly => rel_equal(a.worst_interference, sc.p_t(), 1e-8),
                CaseTag::BothActive => {
                    rel_equal(a.worst_interference, sc.p_t(), 1e-8) && rel_equal(a.p, sc.p_bar(), 1e-8)
                }
            };
            equality.record(ok);
            let closed = worst_case_interference(a.p, &a.v, sc.uncertainty());
            let sampled = mc_worst_interference_samples_only(a.p, &a.v, sc.uncertainty(), 10_000, seed);
            dominance.record(sampled <= closed * (1.0 + 1e-12));
        }
        Err(_) => {
            equality.record(false);
            dominance.record(false);
        }
    }
}

fn cmd_oracle_check(a: &OracleCheckArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32> {
    if a.cases == 0 {
        return Err(Error::InvalidParameter("cases must be >= 1".into()));
    }
    let cov_mode = match a.cov {
        CliCov::Isotropic => CovMode::Isotropic { sigma: 1.0 },
        CliCov::Wishart => CovMode::RandomWishart,
    };
    let oracle = OracleConfig {
        seed: a.seed,
        ..OracleConfig::default()
    };
    let mut suites: [Suite; 5] = Default::default();
    let mut params = ChaCha8Rng::seed_from_u64(a.seed);
    for case in 0..a.cases {
        let cfg = ExperimentConfig {
            n_antennas: a.n,
            epsilon: a.epsilon,
            p_bar_db: params.gen_range(0.0..10.0),
            p_t_db: params.gen_range(-10.0..5.0),
            l_ratio: params.gen_range(1.0..2.0),
            trials: 1,
            seed: a.seed,
            cov_mode,
            ..ExperimentConfig::default()
        };
        let sc = gen_scenario(&cfg, case as u64)?;
        check_case(&sc, &oracle, &mut suites, a.seed.wrapping_add(case as u64));
    }
    let names = [
        "analytic-vs-socp",
        "oracle-sandwich",
        "feasibility",
        "equality-structure",
        "worst-case-dominance",
    ];
    let mut all_ok = true;
    for (name, s) in names.iter().zip(&suites) {
        let status = if s.failed == 0 { "PASS" } else { "FAIL" };
        all_ok &= s.failed == 0;
        writeln!(out, "{status} {name}: {} passed, {} failed", s.passed, s.failed).map_err(io)?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_SOLVER })
}
