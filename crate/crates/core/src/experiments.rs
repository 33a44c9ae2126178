//! Seeded scenario generation and the parameter sweeps, with CSV output.
//!
//! Trials run in parallel; every random draw depends only on `(seed, trial)`
//! so results do not depend on scheduling. Rates are nats internally and bits
//! in the sweep summaries.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytic::{solve_analytic, solve_interference_only, solve_sp1};
use crate::channel::{check_feasible, complex_gaussian, BeamSolution, Scenario, UncertaintyModel};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix, C64};
use crate::oracle::{grid_oracle, OracleConfig};
use crate::socp::solve_scenario_socp;

/// Environment variable capping the number of worker threads (0 = automatic).
pub const THREADS_ENV: &str = "ROBUST_BEAM_THREADS";
/// Relative tolerance at which every reported solution is rechecked.
pub const EMIT_TOL: f64 = 1e-6;

pub const CSV_HEADER: [&str; 7] = [
    "axis",
    "method",
    "mean_rate_bits",
    "std_rate_bits",
    "mean_gap_to_oracle",
    "trials",
    "seed",
];

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Socp,
    Oracle,
    All,
}

impl Method {
    /// The concrete solvers this selection stands for.
    pub fn expand(self) -> Vec<Method> {
        match self {
            Method::All => vec![Method::Analytic, Method::Socp, Method::Oracle],
            m => vec![m],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Socp => "socp",
            Method::Oracle => "oracle",
            Method::All => "all",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Method::Analytic),
            "socp" => Ok(Method::Socp),
            "oracle" => Ok(Method::Oracle),
            "all" => Ok(Method::All),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovMode {
    Isotropic { sigma: f64 },
    RandomWishart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_antennas: usize,
    pub p_bar_db: f64,
    pub p_t_db: f64,
    pub epsilon: f64,
    /// Distance ratio of the PU and SU receivers to the SU transmitter.
    pub l_ratio: f64,
    pub path_loss_exponent: f64,
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    pub cov_mode: CovMode,
    pub oracle: OracleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_antennas: 3,
            p_bar_db: 5.0,
            p_t_db: 0.0,
            epsilon: 1.0,
            l_ratio: 2.0,
            path_loss_exponent: 4.0,
            trials: 500,
            seed: 0,
            method: Method::All,
            cov_mode: CovMode::Isotropic { sigma: 1.0 },
            oracle: OracleConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_antennas < 2 {
            return bad(format!("need at least 2 antennas, got {}", self.n_antennas));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(self.path_loss_exponent > 0.0 && self.path_loss_exponent.is_finite()) {
            return bad(format!("path loss exponent must be > 0, got {}", self.path_loss_exponent));
        }
        if !(self.l_ratio >= 1.0 && self.l_ratio.is_finite()) {
            return bad(format!("distance ratio must be >= 1, got {}", self.l_ratio));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !self.p_bar_db.is_finite() || !self.p_t_db.is_finite() {
            return bad("power levels must be finite".into());
        }
        if let CovMode::Isotropic { sigma } = self.cov_mode {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return bad(format!("sigma must be > 0, got {sigma}"));
            }
        }
        Ok(())
    }
}

/// Random draw for one trial, independent of the swept parameters.
#[derive(Debug, Clone)]
struct TrialDraw {
    hs: crate::linalg::CVector,
    h0_unit: crate::linalg::CVector,
    r1: CMatrix,
}

fn draw_trial(cfg: &ExperimentConfig, trial: u64) -> TrialDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let n = cfg.n_antennas;
    let hs = complex_gaussian(&mut rng, n);
    let h0_unit = complex_gaussian(&mut rng, n);
    let r1 = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    TrialDraw { hs, h0_unit, r1 }
}

fn build_scenario(cfg: &ExperimentConfig, draw: &TrialDraw) -> Result<Scenario> {
    let n = cfg.n_antennas;
    let attenuation = cfg.l_ratio.powf(-cfg.path_loss_exponent / 2.0);
    let h0 = &draw.h0_unit * C64::new(attenuation, 0.0);
    let r = match cfg.cov_mode {
        CovMode::Isotropic { sigma } => HermitianMatrix::scaled_identity(n, sigma * sigma),
        CovMode::RandomWishart => {
            let m = draw.r1.adjoint() * &draw.r1;
            HermitianMatrix::new((&m + m.adjoint()) * C64::new(0.5, 0.0))?
        }
    };
    let m = UncertaintyModel::new(h0, r, cfg.epsilon)?;
    Scenario::new(draw.hs.clone(), m, db_to_linear(cfg.p_bar_db), db_to_linear(cfg.p_t_db))
}

/// Scenario for `trial`: `hs`, `h0` iid CN(0,1) with `h0` attenuated by
/// `l_ratio^(−exponent/2)`, and `R = σ²I` or `R1ᴴR1` with standard-normal
/// real and imaginary parts. Deterministic in `(seed, trial)`; the draw does
/// not depend on the power levels, ε or the distance ratio.
pub fn gen_scenario(cfg: &ExperimentConfig, trial: u64) -> Result<Scenario> {
    cfg.validate()?;
    build_scenario(cfg, &draw_trial(cfg, trial))
}

/// Runs one concrete solver and rechecks feasibility of its output.
pub fn run_method(method: Method, sc: &Scenario, oracle: &OracleConfig) -> Result<BeamSolution> {
    let sol = match method {
        Method::Analytic => solve_analytic(sc)?,
        Method::Socp => solve_scenario_socp(sc)?,
        Method::Oracle => grid_oracle(sc, oracle)?,
        Method::All => return Err(Error::InvalidParameter("'all' is not a single solver".into())),
    };
    let rep = check_feasible(&sol, sc, EMIT_TOL);
    if !rep.is_feasible() {
        return Err(Error::Infeasible(format!(
            "{method} output violates constraints (power slack {:e}, interference slack {:e})",
            rep.power_slack, rep.interference_slack
        )));
    }
    Ok(sol)
}

/// Per-(axis point, series) outcome across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: f64,
    pub method: String,
    /// Rate in nats per trial; `None` where the solver failed.
    pub trial_rates: Vec<Option<f64>>,
    /// Oracle rate in nats per trial, when the oracle was part of the run.
    pub oracle_rates: Option<Vec<Option<f64>>>,
    pub seed: u64,
}

impl SweepRow {
    fn successes(&self) -> impl Iterator<Item = f64> + '_ {
        self.trial_rates.iter().flatten().copied()
    }

    pub fn failures(&self) -> usize {
        self.trial_rates.iter().filter(|r| r.is_none()).count()
    }

    pub fn successful_trials(&self) -> usize {
        self.trial_rates.len() - self.failures()
    }

    pub fn mean_rate_bits(&self) -> f64 {
        let n = self.successful_trials();
        if n == 0 {
            return f64::NAN;
        }
        nats_to_bits(self.successes().sum::<f64>() / n as f64)
    }

    /// Sample standard deviation in bits (0 for fewer than two trials).
    pub fn std_rate_bits(&self) -> f64 {
        let n = self.successful_trials();
        if n == 0 {
            return f64::NAN;
        }
        if n < 2 {
            return 0.0;
        }
        let mean = self.successes().sum::<f64>() / n as f64;
        let var = self.successes().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        nats_to_bits(var.sqrt())
    }

    /// Mean of `oracle − rate` in bits over trials where both succeeded; NaN without an oracle.
    pub fn mean_gap_to_oracle(&self) -> f64 {
        let Some(oracle) = &self.oracle_rates else {
            return f64::NAN;
        };
        let gaps: Vec<f64> = self
            .trial_rates
            .iter()
            .zip(oracle)
            .filter_map(|(r, o)| Some(o.as_ref()? - r.as_ref()?))
            .collect();
        if gaps.is_empty() {
            return f64::NAN;
        }
        nats_to_bits(gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis_name: String,
    pub rows: Vec<SweepRow>,
    pub elapsed_secs: f64,
}

impl SweepResult {
    pub fn total_failures(&self) -> usize {
        self.rows.iter().map(SweepRow::failures).sum()
    }

    /// Rows for one series, in axis order.
    pub fn series(&self, method: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            let trials = row.trial_rates.len().to_string();
            let seed = row.seed.to_string();
            w.write_record([
                fmt_float(row.axis).as_str(),
                row.method.as_str(),
                fmt_float(row.mean_rate_bits()).as_str(),
                fmt_float(row.std_rate_bits()).as_str(),
                fmt_float(row.mean_gap_to_oracle()).as_str(),
                trials.as_str(),
                seed.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Twelve significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Thread pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV} must be a nonnegative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// One series of a sweep: a label and how to compute a rate from a scenario.
type RateFn<'a> = Box<dyn Fn(&Scenario) -> Result<f64> + Sync + 'a>;
type Series<'a> = (String, RateFn<'a>);

/// Evaluates every series at every axis point for every trial. `configure`
/// maps an axis value to the experiment configuration used at that point.
fn run_sweep(
    base: &ExperimentConfig,
    axis_name: &str,
    axis: &[f64],
    configure: impl Fn(&ExperimentConfig, f64) -> ExperimentConfig + Sync,
    series: &[Series<'_>],
    oracle_series: Option<usize>,
) -> Result<SweepResult> {
    base.validate()?;
    if axis.is_empty() {
        return Err(Error::InvalidParameter("sweep axis is empty".into()));
    }
    let configs: Vec<ExperimentConfig> = axis.iter().map(|&a| configure(base, a)).collect();
    for c in &configs {
        c.validate()?;
    }
    let start = Instant::now();
    let pool = thread_pool()?;
    // per_trial[trial][axis][series]
    let per_trial: Vec<Result<Vec<Vec<Option<f64>>>>> = pool.install(|| {
        (0..base.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let draw = draw_trial(base, trial);
                configs
                    .iter()
                    .map(|c| {
                        let sc = build_scenario(c, &draw)?;
                        Ok(series.iter().map(|(_, f)| f(&sc).ok()).collect())
                    })
                    .collect()
            })
            .collect()
    });
    let per_trial: Vec<Vec<Vec<Option<f64>>>> = per_trial.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (ai, &a) in axis.iter().enumerate() {
        let oracle_rates: Option<Vec<Option<f64>>> =
            oracle_series.map(|si| per_trial.iter().map(|t| t[ai][si]).collect());
        for (si, (label, _)) in series.iter().enumerate() {
            rows.push(SweepRow {
                axis: a,
                method: label.clone(),
                trial_rates: per_trial.iter().map(|t| t[ai][si]).collect(),
                oracle_rates: oracle_rates.clone(),
                seed: base.seed,
            });
        }
    }
    Ok(SweepResult {
        axis_name: axis_name.to_string(),
        rows,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn method_series<'a>(methods: &[Method], oracle: &'a OracleConfig, suffix: &str) -> Vec<Series<'a>> {
    methods
        .iter()
        .map(|&m| {
            let f: RateFn<'a> =
                Box::new(move |sc: &Scenario| run_method(m, sc, oracle).map(|s| s.rate));
            (format!("{}{}", m.label(), suffix), f)
        })
        .collect()
}

fn oracle_index(methods: &[Method]) -> Option<usize> {
    methods.iter().position(|&m| m == Method::Oracle)
}

/// Rate versus the transmit-power budget (dB).
pub fn sweep_pbar(cfg: &ExperimentConfig, p_bar_dbs: &[f64]) -> Result<SweepResult> {
    let methods = cfg.method.expand();
    let series = method_series(&methods, &cfg.oracle, "");
    run_sweep(
        cfg,
        "p_bar_db",
        p_bar_dbs,
        |c, a| ExperimentConfig { p_bar_db: a, ..c.clone() },
        &series,
        oracle_index(&methods),
    )
}

/// Rate versus the PU/SU distance ratio. With several `epsilons`, each method
/// yields one series per ε, labelled `method@eps=<ε>`.
pub fn sweep_distance(cfg: &ExperimentConfig, l_ratios: &[f64], epsilons: &[f64]) -> Result<SweepResult> {
    let methods = cfg.method.expand();
    let eps_list: Vec<f64> = if epsilons.is_empty() { vec![cfg.epsilon] } else { epsilons.to_vec() };
    let oracle = &cfg.oracle;
    let mut series: Vec<Series<'_>> = Vec::new();
    let mut oracle_idx = None;
    for &eps in &eps_list {
        for &m in &methods {
            if m == Method::Oracle && eps_list.len() == 1 {
                oracle_idx = Some(series.len());
            }
            let label = if eps_list.len() == 1 {
                m.label().to_string()
            } else {
                format!("{}@eps={}", m.label(), eps)
            };
            let f: RateFn<'_> =
                Box::new(move |sc: &Scenario| run_method(m, &sc.with_epsilon(eps)?, oracle).map(|s| s.rate));
            series.push((label, f));
        }
    }
    run_sweep(
        cfg,
        "l_ratio",
        l_ratios,
        |c, a| ExperimentConfig { l_ratio: a, ..c.clone() },
        &series,
        oracle_idx,
    )
}

/// Power-only, interference-only and both-constraint rates versus the power budget (dB).
pub fn sweep_constraints(cfg: &ExperimentConfig, p_bar_dbs: &[f64]) -> Result<SweepResult> {
    let methods = cfg.method.expand();
    let mut series: Vec<Series<'_>> = vec![
        ("power_only".to_string(), Box::new(|sc: &Scenario| solve_sp1(sc).map(|s| s.rate))),
        (
            "interference_only".to_string(),
            Box::new(|sc: &Scenario| solve_interference_only(sc).map(|s| s.rate)),
        ),
    ];
    let offset = series.len();
    series.extend(method_series(&methods, &cfg.oracle, "").into_iter().map(|(l, f)| (format!("both_{l}"), f)));
    run_sweep(
        cfg,
        "p_bar_db",
        p_bar_dbs,
        |c, a| ExperimentConfig { p_bar_db: a, ..c.clone() },
        &series,
        oracle_index(&methods).map(|i| i + offset),
    )
}

/// Parses `start:stop:step` (inclusive of `stop`), a comma list, or a single value.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("'{t}' is not a number")))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse(format!("'{t}' is not finite")))
                }
            })
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("range '{s}' must be start:stop:step")));
        }
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(Error::Parse(format!("range '{s}' needs step > 0 and stop >= start")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|k| start + step * k as f64).collect())
    } else {
        s.split(',').map(parse).collect()
    }
}
