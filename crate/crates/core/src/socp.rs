//! Real-valued second-order cone formulation of the robust beamforming
//! problem and a primal log-barrier interior-point solver for it.
//!
//! With `x = [Re w; Im w]` the problem reads
//!
//! ```text
//! maximize   h̃sᵀx
//! subject to ‖x‖ ≤ √p_bar
//!            √ε‖Q̃x‖ ± h̃0ᵀx ≤ √p_t
//!            ȟ0ᵀx = 0
//! ```
//!
//! where `hs` has been rotated so that `hsᴴh0` is real.

use std::fmt;

use nalgebra::Complex;

use crate::channel::{check_feasible, classify_active, BeamSolution, CaseTag, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{derealify, phase_align, realify, realify_check, realify_op, RMatrix, RVector};

pub const DEFAULT_TOL_GAP: f64 = 1e-8;
pub const DEFAULT_TOL_FEAS: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 500;

const BARRIER_MULTIPLIER: f64 = 10.0;
const INITIAL_T: f64 = 1.0;
const LS_ALPHA: f64 = 0.25;
const LS_BETA: f64 = 0.5;
const NEWTON_TOL: f64 = 1e-12;
const MAX_CENTERING_STEPS: usize = 100;
/// Relative slack under which a constraint counts as active in recovery and KKT checks.
pub const ACTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

/// `‖A x + b‖ ≤ dᵀx + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub a: RMatrix,
    pub b: RVector,
    pub d: RVector,
    pub e: f64,
}

impl Cone {
    /// `dᵀx + e − ‖Ax + b‖`; positive strictly inside.
    pub fn slack(&self, x: &RVector) -> f64 {
        self.d.dot(x) + self.e - (&self.a * x + &self.b).norm()
    }

    /// A cone whose norm part is constant is just a linear inequality.
    fn is_linear(&self) -> bool {
        self.a.iter().all(|&v| v == 0.0)
    }
}

/// `gᵀx = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqRow {
    pub g: RVector,
    pub value: f64,
}

/// A maximization `max cᵀx` over an intersection of second-order cones and hyperplanes.
#[derive(Debug, Clone, PartialEq)]
pub struct SocpData {
    pub c: RVector,
    pub cones: Vec<Cone>,
    pub eq_rows: Vec<EqRow>,
    pub dim: usize,
    /// Magnitude used to make the solver tolerances relative.
    pub scale: f64,
}

impl fmt::Display for SocpData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim {} scale {:e}", self.dim, self.scale)?;
        writeln!(f, "c {:?}", self.c.as_slice())?;
        for (i, cone) in self.cones.iter().enumerate() {
            writeln!(
                f,
                "cone {i} rows {} e {:e} d {:?} b {:?} a {:?}",
                cone.a.nrows(),
                cone.e,
                cone.d.as_slice(),
                cone.b.as_slice(),
                cone.a.transpose().as_slice()
            )?;
        }
        for (i, row) in self.eq_rows.iter().enumerate() {
            writeln!(f, "eq {i} value {:e} g {:?}", row.value, row.g.as_slice())?;
        }
        Ok(())
    }
}

impl SocpData {
    pub fn objective(&self, x: &RVector) -> f64 {
        self.c.dot(x)
    }

    /// Largest constraint violation (cone and equality), absolute.
    pub fn max_violation(&self, x: &RVector) -> f64 {
        let cone = self.cones.iter().map(|k| (-k.slack(x)).max(0.0)).fold(0.0, f64::max);
        let eq = self.eq_rows.iter().map(|r| (r.g.dot(x) - r.value).abs()).fold(0.0, f64::max);
        cone.max(eq)
    }

    fn check(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if self.c.len() != self.dim || !finite(self.c.as_slice()) {
            return Err(Error::InvalidParameter("objective vector malformed".into()));
        }
        for cone in &self.cones {
            if cone.a.ncols() != self.dim
                || cone.a.nrows() != cone.b.len()
                || cone.d.len() != self.dim
                || !finite(cone.a.as_slice())
                || !finite(cone.b.as_slice())
                || !finite(cone.d.as_slice())
                || !cone.e.is_finite()
            {
                return Err(Error::InvalidParameter("cone block malformed".into()));
            }
        }
        for row in &self.eq_rows {
            if row.g.len() != self.dim || !finite(row.g.as_slice()) || !row.value.is_finite() {
                return Err(Error::InvalidParameter("equality row malformed".into()));
            }
        }
        Ok(())
    }
}

/// Builds the three-cone, one-equality program for `sc`.
pub fn build_socp(sc: &Scenario) -> Result<SocpData> {
    let m = sc.uncertainty();
    let n = sc.dim();
    let dim = 2 * n;
    let hs = phase_align(sc.hs(), m.h0());
    let q = m.whitening().q();
    let a_interf = realify_op(&q) * m.epsilon().sqrt();
    let h0_real = realify(m.h0());
    let budget = Cone {
        a: RMatrix::identity(dim, dim),
        b: RVector::zeros(dim),
        d: RVector::zeros(dim),
        e: sc.p_bar().sqrt(),
    };
    let plus = Cone {
        a: a_interf.clone(),
        b: RVector::zeros(dim),
        d: -&h0_real,
        e: sc.p_t().sqrt(),
    };
    let minus = Cone {
        a: a_interf,
        b: RVector::zeros(dim),
        d: h0_real,
        e: sc.p_t().sqrt(),
    };
    let data = SocpData {
        c: realify(&hs),
        cones: vec![budget, plus, minus],
        eq_rows: vec![EqRow {
            g: realify_check(m.h0()),
            value: 0.0,
        }],
        dim,
        scale: (sc.p_bar().sqrt() * hs.norm()).max(f64::MIN_POSITIVE),
    };
    data.check()?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub x_opt: RVector,
    pub objective: f64,
    /// Total Newton steps taken.
    pub iterations: usize,
    pub duality_gap: f64,
    pub status: SolverStatus,
    /// Barrier duality gap after each completed centering step.
    pub gap_history: Vec<f64>,
}

/// Orthonormal basis of `{x : Gx = 0}` by Gram–Schmidt completion of the rows of `G`.
fn null_space_basis(rows: &[RVector], dim: usize) -> RMatrix {
    let mut span: Vec<RVector> = Vec::new();
    let orth = |v: &RVector, span: &[RVector]| -> RVector {
        let mut r = v.clone();
        // Two passes for numerical orthogonality.
        for _ in 0..2 {
            for s in span {
                r -= s * s.dot(&r);
            }
        }
        r
    };
    for g in rows {
        let r = orth(g, &span);
        let norm = r.norm();
        if norm > 1e-12 * g.norm().max(f64::MIN_POSITIVE) {
            span.push(r / norm);
        }
    }
    let row_rank = span.len();
    for k in 0..dim {
        if span.len() == dim {
            break;
        }
        let r = orth(&RVector::from_fn(dim, |i, _| if i == k { 1.0 } else { 0.0 }), &span);
        let norm = r.norm();
        if norm > 1e-6 {
            span.push(r / norm);
        }
    }
    RMatrix::from_columns(&span[row_rank..])
}

/// Minimum-norm solution of `Gx = values`.
fn particular_solution(rows: &[EqRow], dim: usize) -> Result<RVector> {
    if rows.iter().all(|r| r.value == 0.0) {
        return Ok(RVector::zeros(dim));
    }
    let g = RMatrix::from_rows(&rows.iter().map(|r| r.g.transpose()).collect::<Vec<_>>());
    let vals = RVector::from_iterator(rows.len(), rows.iter().map(|r| r.value));
    let svd = g.svd(true, true);
    svd.solve(&vals, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("equality system: {e}")))
}

struct Barrier<'a> {
    data: &'a SocpData,
}

impl Barrier<'_> {
    /// Sum of barrier terms; `None` outside the open feasible set.
    fn value(&self, x: &RVector) -> Option<f64> {
        let mut total = 0.0;
        for cone in &self.data.cones {
            let s = cone.d.dot(x) + cone.e;
            if cone.is_linear() {
                let slack = s - cone.b.norm();
                if !(slack > 0.0) {
                    return None;
                }
                total -= slack.ln();
            } else {
                let u = &cone.a * x + &cone.b;
                let gap = s * s - u.norm_squared();
                if !(s > 0.0 && gap > 0.0) {
                    return None;
                }
                total -= gap.ln();
            }
        }
        Some(total)
    }

    fn grad_hess(&self, x: &RVector) -> (RVector, RMatrix) {
        let dim = self.data.dim;
        let mut grad = RVector::zeros(dim);
        let mut hess = RMatrix::zeros(dim, dim);
        for cone in &self.data.cones {
            let s = cone.d.dot(x) + cone.e;
            if cone.is_linear() {
                let slack = s - cone.b.norm();
                grad -= &cone.d / slack;
                hess += (&cone.d * cone.d.transpose()) / (slack * slack);
            } else {
                let u = &cone.a * x + &cone.b;
                let gap = s * s - u.norm_squared();
                let at_u = cone.a.transpose() * &u;
                // ∇gap = 2s·d − 2Aᵀu, ∇²gap = 2ddᵀ − 2AᵀA.
                let dgap = &cone.d * (2.0 * s) - &at_u * 2.0;
                grad -= &dgap / gap;
                let ata = cone.a.transpose() * &cone.a;
                let ddt = &cone.d * cone.d.transpose();
                hess += (ata - ddt) * (2.0 / gap) + (&dgap * dgap.transpose()) / (gap * gap);
            }
        }
        (grad, hess)
    }

    fn complexity(&self) -> f64 {
        self.data.cones.iter().map(|c| if c.is_linear() { 1.0 } else { 2.0 }).sum()
    }
}

/// Maximizes `cᵀx` by a barrier method; tolerances are relative to `data.scale`.
pub fn solve_socp(data: &SocpData, tol_gap: f64, tol_feas: f64, max_iter: usize) -> Result<SolverReport> {
    data.check()?;
    let dim = data.dim;
    let barrier = Barrier { data };
    let z = null_space_basis(&data.eq_rows.iter().map(|r| r.g.clone()).collect::<Vec<_>>(), dim);
    let x0 = particular_solution(&data.eq_rows, dim)?;
    if barrier.value(&x0).is_none() {
        return Err(Error::Infeasible("starting point is not strictly feasible".into()));
    }
    let cz = z.transpose() * &data.c;
    let theta = barrier.complexity();
    let gap_target = tol_gap * data.scale;

    let mut y = RVector::zeros(z.ncols());
    let mut t = INITIAL_T;
    let mut iterations = 0;
    let mut gap_history = Vec::new();
    let mut status = SolverStatus::Optimal;

    'outer: loop {
        // Centering: minimize −t·cᵀx + φ(x) over x = x0 + Zy.
        for _ in 0..MAX_CENTERING_STEPS {
            let x = &x0 + &z * &y;
            let (g, h) = barrier.grad_hess(&x);
            let grad = &z.transpose() * g - &cz * t;
            let hess = z.transpose() * h * &z;
            let Some(chol) = hess.cholesky() else {
                status = SolverStatus::NumericalFailure;
                break 'outer;
            };
            let step = -chol.solve(&grad);
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                status = SolverStatus::NumericalFailure;
                break 'outer;
            }
            if decrement / 2.0 <= NEWTON_TOL {
                break;
            }
            iterations += 1;
            if iterations > max_iter {
                status = SolverStatus::MaxIterations;
                break 'outer;
            }
            let f0 = barrier.value(&x).expect("iterate stays interior") - t * cz.dot(&y);
            let dx = &z * &step;
            let mut s = 1.0;
            loop {
                let cand = &x + &dx * s;
                if let Some(phi) = barrier.value(&cand) {
                    let f = phi - t * cz.dot(&(&y + &step * s));
                    if f <= f0 - LS_ALPHA * s * decrement {
                        break;
                    }
                }
                s *= LS_BETA;
                if s < 1e-20 {
                    break;
                }
            }
            if s < 1e-20 {
                // No further progress possible at this precision.
                break;
            }
            y += &step * s;
        }
        let gap = theta / t;
        gap_history.push(gap);
        if gap <= gap_target {
            break;
        }
        t *= BARRIER_MULTIPLIER;
    }

    let x = &x0 + &z * &y;
    let duality_gap = theta / t;
    if status == SolverStatus::Optimal
        && (duality_gap > gap_target || data.max_violation(&x) > tol_feas * data.scale)
    {
        status = SolverStatus::NumericalFailure;
    }
    Ok(SolverReport {
        objective: data.objective(&x),
        x_opt: x,
        iterations,
        duality_gap,
        status,
        gap_history,
    })
}

/// Maps the optimal `x` back to a beam `(p, v)` and validates feasibility.
pub fn recover_solution(report: &SolverReport, sc: &Scenario) -> Result<BeamSolution> {
    if report.status != SolverStatus::Optimal {
        return Err(Error::NotOptimal(report.status));
    }
    let w = derealify(&report.x_opt);
    let p = w.norm_squared();
    let v = if p > 0.0 {
        &w / Complex::new(p.sqrt(), 0.0)
    } else {
        sc.hs() / Complex::new(sc.hs().norm(), 0.0)
    };
    let mut sol = BeamSolution::evaluate(p, &v, sc, CaseTag::PowerOnly);
    sol.case_tag = classify_active(sol.p, sol.worst_interference, sc, ACTIVE_TOL);
    let rep = check_feasible(&sol, sc, ACTIVE_TOL);
    if !rep.is_feasible() {
        return Err(Error::Infeasible(format!(
            "recovered beam violates constraints (power slack {:e}, interference slack {:e})",
            rep.power_slack, rep.interference_slack
        )));
    }
    Ok(sol)
}

/// Builds, solves with default tolerances and recovers.
pub fn solve_scenario_socp(sc: &Scenario) -> Result<BeamSolution> {
    let data = build_socp(sc)?;
    let report = solve_socp(&data, DEFAULT_TOL_GAP, DEFAULT_TOL_FEAS, DEFAULT_MAX_ITER)?;
    recover_solution(&report, sc)
}

/// Outcome of a first-order optimality spot check.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCheck {
    /// Indices of cones whose slack is within `ACTIVE_TOL·scale`.
    pub active: Vec<usize>,
    /// Multipliers for the active cones followed by the equality rows.
    pub multipliers: Vec<f64>,
    /// `‖c − Σλ∇f − Σν g‖ / ‖c‖`.
    pub residual: f64,
}

impl KktCheck {
    /// Stationarity with nonnegative cone multipliers, both within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol && self.multipliers[..self.active.len()].iter().all(|&l| l >= -tol)
    }
}

/// Least-squares multipliers expressing `c` through the active constraint gradients.
pub fn kkt_check(data: &SocpData, x: &RVector) -> KktCheck {
    let mut cols: Vec<RVector> = Vec::new();
    let mut active = Vec::new();
    for (i, cone) in data.cones.iter().enumerate() {
        if cone.slack(x) > ACTIVE_TOL * data.scale {
            continue;
        }
        let u = &cone.a * x + &cone.b;
        let un = u.norm();
        // Gradient of ‖Ax + b‖ − dᵀx − e.
        let grad = if un > 0.0 {
            cone.a.transpose() * &u / un - &cone.d
        } else {
            -cone.d.clone()
        };
        cols.push(grad);
        active.push(i);
    }
    for row in &data.eq_rows {
        cols.push(row.g.clone());
    }
    let c_norm = data.c.norm().max(f64::MIN_POSITIVE);
    if cols.is_empty() {
        return KktCheck {
            active,
            multipliers: Vec::new(),
            residual: 1.0,
        };
    }
    let m = RMatrix::from_columns(&cols);
    let svd = m.clone().svd(true, true);
    let lambda = svd.solve(&data.c, 1e-12).unwrap_or_else(|_| RVector::zeros(cols.len()));
    let residual = (&data.c - &m * &lambda).norm() / c_norm;
    KktCheck {
        active,
        multipliers: lambda.iter().copied().collect(),
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::solve_analytic;
    use crate::channel::{complex_gaussian, worst_case_interference, UncertaintyModel};
    use crate::linalg::{CMatrix, HermitianMatrix, C64};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn wishart(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let r1 = CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        });
        HermitianMatrix::new(r1.adjoint() * r1).unwrap()
    }

    fn scenario(n: usize, eps: f64, p_bar: f64, p_t: f64, iso: bool, rng: &mut ChaCha8Rng) -> Scenario {
        let h0 = complex_gaussian(rng, n);
        let hs = complex_gaussian(rng, n);
        let r = if iso { HermitianMatrix::identity(n) } else { wishart(n, rng) };
        Scenario::new(hs, UncertaintyModel::new(h0, r, eps).unwrap(), p_bar, p_t).unwrap()
    }

    fn solve_default(data: &SocpData) -> SolverReport {
        solve_socp(data, DEFAULT_TOL_GAP, DEFAULT_TOL_FEAS, DEFAULT_MAX_ITER).unwrap()
    }

    #[test]
    fn structure_and_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sc = scenario(3, 0.2, 2.0, 0.5, false, &mut rng);
        let data = build_socp(&sc).unwrap();
        assert_eq!(data.cones.len(), 3);
        assert_eq!(data.eq_rows.len(), 1);
        assert_eq!(data.dim, 6);
        let x = RVector::zeros(6);
        assert_abs_diff_eq!(data.cones[0].slack(&x), 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(data.cones[1].slack(&x), 0.5_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(data.cones[2].slack(&x), 0.5_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(data.objective(&x), 0.0);
        assert!(data.to_string().lines().filter(|l| l.starts_with("cone")).count() == 3);
    }

    #[test]
    fn cones_match_complex_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sc = scenario(4, 0.3, 2.0, 0.5, false, &mut rng);
        let data = build_socp(&sc).unwrap();
        let m = sc.uncertainty();
        let q = m.whitening().q();
        for _ in 0..100 {
            let w = complex_gaussian(&mut rng, 4);
            let x = realify(&w);
            assert_abs_diff_eq!((&data.cones[0].a * &x).norm(), w.norm(), epsilon = 1e-12);
            let norm_part = m.epsilon().sqrt() * (&q * &w).norm();
            let re = m.h0().dotc(&w).re;
            let plus = (&data.cones[1].a * &x).norm() - data.cones[1].d.dot(&x);
            let minus = (&data.cones[2].a * &x).norm() - data.cones[2].d.dot(&x);
            assert_abs_diff_eq!(plus, norm_part + re, epsilon = 1e-12);
            assert_abs_diff_eq!(minus, norm_part - re, epsilon = 1e-12);
            let im = w.dotc(m.h0()).im;
            assert_abs_diff_eq!(data.eq_rows[0].g.dot(&x).abs(), im.abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_epsilon_degenerates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sc = scenario(3, 0.2, 2.0, 0.5, true, &mut rng).with_epsilon(0.0).unwrap();
        let data = build_socp(&sc).unwrap();
        assert!(data.cones[1].a.iter().all(|&v| v == 0.0));
        assert!(data.cones[1].is_linear() && data.cones[2].is_linear());
        let report = solve_default(&data);
        assert_eq!(report.status, SolverStatus::Optimal);
        let x = &report.x_opt;
        assert!(data.cones[1].d.dot(x).abs() <= 0.5_f64.sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn power_only_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sc = scenario(3, 0.2, 2.0, 1.0, false, &mut rng);
        let lmax = sc.uncertainty().whitening().delta.iter().fold(f64::INFINITY, |a, &d| a.min(d)).recip();
        let p_t = sc.p_bar() * (sc.uncertainty().h0().norm() + (0.2 * lmax).sqrt()).powi(2) * 1.01;
        let sc = sc.with_p_t(p_t).unwrap();
        let data = build_socp(&sc).unwrap();
        let report = solve_default(&data);
        assert_eq!(report.status, SolverStatus::Optimal);
        let expected = sc.p_bar().sqrt() * sc.hs().norm();
        assert!((report.objective - expected).abs() <= 1e-7 * expected);
        let sol = recover_solution(&report, &sc).unwrap();
        assert!((sol.p - sc.p_bar()).abs() <= 1e-6 * sc.p_bar());
        assert_eq!(sol.case_tag, CaseTag::PowerOnly);
        let cos = data.c.dot(&report.x_opt) / (data.c.norm() * report.x_opt.norm());
        assert!(1.0 - cos < 1e-7);
    }

    #[test]
    fn gap_history_monotone_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sc = scenario(3, 0.2, 2.0, 0.3, false, &mut rng);
        let data = build_socp(&sc).unwrap();
        let a = solve_default(&data);
        let b = solve_default(&data);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert!(a.gap_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.objective >= 0.0);
        assert!(a.duality_gap <= DEFAULT_TOL_GAP * data.scale);
    }

    #[test]
    fn max_iterations_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sc = scenario(3, 0.2, 2.0, 0.3, false, &mut rng);
        let data = build_socp(&sc).unwrap();
        let report = solve_socp(&data, DEFAULT_TOL_GAP, DEFAULT_TOL_FEAS, 2).unwrap();
        assert_eq!(report.status, SolverStatus::MaxIterations);
        assert_eq!(recover_solution(&report, &sc).unwrap_err(), Error::NotOptimal(SolverStatus::MaxIterations));
    }

    #[test]
    fn recover_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sc = scenario(3, 0.2, 2.0, 0.3, false, &mut rng);
        let report = SolverReport {
            x_opt: RVector::zeros(6),
            objective: 0.0,
            iterations: 0,
            duality_gap: 0.0,
            status: SolverStatus::Optimal,
            gap_history: vec![],
        };
        let sol = recover_solution(&report, &sc).unwrap();
        assert_eq!(sol.p, 0.0);
        assert_eq!(sol.rate, 0.0);
    }

    #[test]
    fn isotropic_matches_analytic_and_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..60 {
            let p_t = 10f64.powf(rng.gen_range(-2.0..1.0));
            let sc = scenario(3, rng.gen_range(0.05..0.5), rng.gen_range(0.5..5.0), p_t, true, &mut rng);
            let data = build_socp(&sc).unwrap();
            let report = solve_default(&data);
            let sol = recover_solution(&report, &sc).unwrap();
            let analytic = solve_analytic(&sc).unwrap();
            assert!((sol.rate - analytic.rate).abs() < 1e-6, "{} vs {}", sol.rate, analytic.rate);
            assert!(worst_case_interference(sol.p, &sol.v, sc.uncertainty()) <= sc.p_t() * (1.0 + 1e-6));
            let kkt = kkt_check(&data, &report.x_opt);
            assert!(kkt.holds(1e-5), "{kkt:?}");
        }
    }

    #[test]
    fn wishart_solutions_feasible_and_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..60 {
            let p_t = 10f64.powf(rng.gen_range(-2.0..1.0));
            let sc = scenario(3, rng.gen_range(0.05..0.5), rng.gen_range(0.5..5.0), p_t, false, &mut rng);
            let data = build_socp(&sc).unwrap();
            let report = solve_default(&data);
            let sol = recover_solution(&report, &sc).unwrap();
            assert!(worst_case_interference(sol.p, &sol.v, sc.uncertainty()) <= sc.p_t() * (1.0 + 1e-6));
            let kkt = kkt_check(&data, &report.x_opt);
            assert!(kkt.holds(1e-5), "{kkt:?}");
        }
    }

    #[test]
    fn null_space_is_orthonormal_complement() {
        let g = RVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let z = null_space_basis(std::slice::from_ref(&g), 4);
        assert_eq!(z.ncols(), 3);
        assert!((z.transpose() * &z - RMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((z.transpose() * g).norm() < 1e-12);
    }

    #[test]
    fn solution_phase_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let sc = scenario(3, 0.2, 2.0, 0.2, false, &mut rng);
        let a = solve_scenario_socp(&sc).unwrap();
        let rotated = sc.with_hs(sc.hs() * C64::from_polar(1.0, 2.0)).unwrap();
        let b = solve_scenario_socp(&rotated).unwrap();
        assert!((a.rate - b.rate).abs() < 1e-9);
    }
}
