//! Closed-form solution chain: power-only, interference-only and both-active
//! subproblems for isotropic uncertainty, and their whitened counterparts for
//! general covariance.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Complex;

use crate::channel::{worst_case_interference, BeamSolution, CaseTag, Scenario, TAU_FEAS};
use crate::error::{Error, Result};
use crate::linalg::{phase_align, two_dim_basis, CVector, TwoDimBasis, Whitening, TAU_LIN};

/// Number of uniform bracket points for the both-active angle equation.
pub const ROOT_SCAN_POINTS: usize = 256;
/// Bisection stops once the bracket is narrower than this.
pub const ROOT_TOL: f64 = 1e-12;
/// Slack allowed on the arccos argument before reporting infeasible geometry.
pub const GEOMETRY_TOL: f64 = 1e-8;

/// Scalar description of an isotropic (`R = σ²I`) instance together with the
/// plane spanned by `h0` and `hs`.
#[derive(Debug, Clone)]
pub struct MeanFeedbackInstance {
    pub basis: TwoDimBasis,
    pub h0_norm: f64,
    pub hs_norm: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub p_bar: f64,
    pub p_t: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl MeanFeedbackInstance {
    /// Builds the instance from an isotropic scenario (`hs` is phase-aligned internally).
    pub fn from_scenario(sc: &Scenario) -> Result<Self> {
        let m = sc.uncertainty();
        let variance = m.covariance().isotropic_variance().ok_or_else(|| {
            Error::InvalidParameter("covariance is not a multiple of the identity".into())
        })?;
        let hs = phase_align(sc.hs(), m.h0());
        let basis = two_dim_basis(m.h0(), &hs)?;
        Self::with_basis(basis, m.h0().norm(), hs.norm(), variance.sqrt(), m.epsilon(), sc.p_bar(), sc.p_t())
    }

    /// Purely scalar instance on the canonical plane of C².
    pub fn from_scalars(
        h0_norm: f64,
        hs_norm: f64,
        alpha: f64,
        sigma: f64,
        epsilon: f64,
        p_bar: f64,
        p_t: f64,
    ) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, pi/2], got {alpha}")));
        }
        let basis = TwoDimBasis {
            h_hat: CVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]),
            h_perp_hat: CVector::from_vec(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]),
            a_hs: hs_norm * alpha.cos(),
            b_hs: hs_norm * alpha.sin(),
            alpha,
        };
        Self::with_basis(basis, h0_norm, hs_norm, sigma, epsilon, p_bar, p_t)
    }

    fn with_basis(
        basis: TwoDimBasis,
        h0_norm: f64,
        hs_norm: f64,
        sigma: f64,
        epsilon: f64,
        p_bar: f64,
        p_t: f64,
    ) -> Result<Self> {
        positive("h0_norm", h0_norm)?;
        positive("hs_norm", hs_norm)?;
        positive("sigma", sigma)?;
        positive("epsilon", epsilon)?;
        positive("p_bar", p_bar)?;
        positive("p_t", p_t)?;
        Ok(Self {
            alpha: basis.alpha,
            basis,
            h0_norm,
            hs_norm,
            sigma,
            epsilon,
            p_bar,
            p_t,
        })
    }

    /// `‖h0‖cos β + √ε σ`: worst-case interference amplitude of the unit beam at angle β.
    pub fn interference_amplitude(&self, beta: f64) -> f64 {
        self.h0_norm * beta.cos() + self.epsilon.sqrt() * self.sigma
    }

    /// Builds a solution at angle `beta` with power `p`, evaluated in closed form.
    fn solution_at(&self, beta: f64, p: f64, case_tag: CaseTag) -> BeamSolution {
        let gain = self.hs_norm * (beta - self.alpha).cos();
        let amp = self.interference_amplitude(beta);
        BeamSolution {
            p,
            v: self.basis.direction(beta),
            rate: (p * gain * gain).ln_1p(),
            case_tag,
            worst_interference: p * amp * amp,
        }
    }
}

/// Received SNR when the interference constraint is met with equality at angle `beta`.
pub fn f_beta(beta: f64, inst: &MeanFeedbackInstance) -> f64 {
    let num = inst.hs_norm.powi(2) * inst.p_t * (beta - inst.alpha).cos().powi(2);
    let den = inst.interference_amplitude(beta).powi(2);
    num / den
}

/// Power-only subproblem: full power along the matched beam.
pub fn solve_sp1(sc: &Scenario) -> Result<BeamSolution> {
    let norm = sc.hs().norm();
    if norm < TAU_LIN {
        return Err(Error::ZeroChannel);
    }
    let v = sc.hs() / Complex::new(norm, 0.0);
    Ok(BeamSolution::evaluate(sc.p_bar(), &v, sc, CaseTag::PowerOnly))
}

/// Candidate angles for the interference-only subproblem, in increasing order.
pub fn sp2_candidates(inst: &MeanFeedbackInstance) -> Vec<f64> {
    let mut out = vec![inst.alpha];
    let arg = inst.h0_norm * inst.alpha.sin() / (inst.epsilon.sqrt() * inst.sigma);
    if arg <= 1.0 {
        let beta1 = arg.asin() + inst.alpha;
        if beta1 <= FRAC_PI_2 {
            out.push(beta1);
        }
    }
    out.push(FRAC_PI_2);
    out
}

/// Interference-only subproblem for isotropic uncertainty.
pub fn solve_sp2_mean(inst: &MeanFeedbackInstance) -> BeamSolution {
    let mut best_beta = inst.alpha;
    let mut best_f = f64::NEG_INFINITY;
    for beta in sp2_candidates(inst) {
        let f = f_beta(beta, inst);
        if f > best_f {
            best_f = f;
            best_beta = beta;
        }
    }
    let p = inst.p_t / inst.interference_amplitude(best_beta).powi(2);
    inst.solution_at(best_beta, p, CaseTag::InterferenceOnly)
}

/// Both constraints active, isotropic uncertainty.
pub fn solve_both_active_mean(inst: &MeanFeedbackInstance) -> Result<BeamSolution> {
    let argument = ((inst.p_t / inst.p_bar).sqrt() - inst.epsilon.sqrt() * inst.sigma) / inst.h0_norm;
    let upper = inst.alpha.cos();
    if argument < -GEOMETRY_TOL || argument > upper + GEOMETRY_TOL {
        return Err(Error::InfeasibleGeometry { argument, upper });
    }
    let beta = argument.clamp(0.0, upper).acos();
    Ok(inst.solution_at(beta, inst.p_bar, CaseTag::BothActive))
}

fn interference_ok(sol: &BeamSolution, sc: &Scenario) -> bool {
    worst_case_interference(sol.p, &sol.v, sc.uncertainty()) <= sc.p_t() * (1.0 + TAU_FEAS)
}

fn power_ok(p: f64, sc: &Scenario) -> bool {
    p <= sc.p_bar() * (1.0 + TAU_FEAS)
}

/// Isotropic problem: power-only, then interference-only, then both-active.
pub fn solve_p3(inst: &MeanFeedbackInstance, sc: &Scenario) -> Result<BeamSolution> {
    let sp1 = solve_sp1(sc)?;
    if interference_ok(&sp1, sc) {
        return Ok(sp1);
    }
    let sp2 = solve_sp2_mean(inst);
    if power_ok(sp2.p, sc) {
        return Ok(BeamSolution::evaluate(sp2.p, &sp2.v, sc, CaseTag::InterferenceOnly));
    }
    let both = solve_both_active_mean(inst)?;
    Ok(BeamSolution::evaluate(both.p, &both.v, sc, CaseTag::BothActive))
}

/// The problem in whitened coordinates, where the uncertainty set is a ball of
/// radius √ε and the power constraint reads `p‖Δ^{1/2}v̄‖² ≤ p_bar`.
#[derive(Debug, Clone)]
pub struct WhitenedInstance {
    /// Whitened `hs`, phase-aligned to `h0_bar`.
    pub hs_bar: CVector,
    pub h0_bar: CVector,
    pub whitening: Whitening,
    pub basis: TwoDimBasis,
    pub epsilon: f64,
    pub p_bar: f64,
    pub p_t: f64,
}

impl WhitenedInstance {
    /// Unit whitened direction at angle `beta`.
    pub fn direction(&self, beta: f64) -> CVector {
        self.basis.direction(beta)
    }

    /// `‖Δ^{1/2}u(β)‖`: transmit power per unit whitened power.
    pub fn power_factor(&self, beta: f64) -> f64 {
        self.whitening.sqrt_delta_norm(&self.direction(beta))
    }

    /// `√(p_t/p_bar)·‖Δ^{1/2}u(β)‖ − (‖h̄0‖cos β + √ε)`.
    pub fn angle_residual(&self, beta: f64) -> f64 {
        (self.p_t / self.p_bar).sqrt() * self.power_factor(beta)
            - (self.h0_bar.norm() * beta.cos() + self.epsilon.sqrt())
    }

    /// Received SNR at full power along the whitened direction at angle `beta`.
    pub fn full_power_snr(&self, beta: f64) -> f64 {
        let u = self.direction(beta);
        self.p_bar * self.hs_bar.dotc(&u).norm_sqr() / self.power_factor(beta).powi(2)
    }

    /// Maps a whitened strategy `(p̄, v̄)` back to a unit beam and its transmit power.
    pub fn unwhiten(&self, p_bar_whitened: f64, vbar: &CVector) -> (f64, CVector) {
        let v = self.whitening.unwhiten_direction(vbar);
        let norm = v.norm();
        (p_bar_whitened * norm * norm, v / Complex::new(norm, 0.0))
    }

    /// The interference-only subproblem of the whitened instance viewed as an
    /// isotropic one with unit variance.
    pub fn as_unit_isotropic(&self) -> Result<MeanFeedbackInstance> {
        MeanFeedbackInstance::with_basis(
            self.basis.clone(),
            self.h0_bar.norm(),
            self.hs_bar.norm(),
            1.0,
            self.epsilon,
            self.p_bar,
            self.p_t,
        )
    }
}

/// Whitens `sc` with the eigendecomposition of its covariance.
pub fn whiten_problem(sc: &Scenario) -> Result<WhitenedInstance> {
    let m = sc.uncertainty();
    let whitening = m.whitening().clone();
    let h0_bar = whitening.whiten(m.h0());
    let hs_bar = phase_align(&whitening.whiten(sc.hs()), &h0_bar);
    let basis = two_dim_basis(&h0_bar, &hs_bar)?;
    Ok(WhitenedInstance {
        hs_bar,
        h0_bar,
        whitening,
        basis,
        epsilon: m.epsilon(),
        p_bar: sc.p_bar(),
        p_t: sc.p_t(),
    })
}

/// Roots of `g` on `[lo, hi]` found by uniform scanning then bisection.
fn scan_roots(lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = ROOT_SCAN_POINTS;
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&b| g(b)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        if vals[k] == 0.0 {
            roots.push(grid[k]);
            continue;
        }
        if k + 1 < n && vals[k + 1] != 0.0 && (vals[k] < 0.0) != (vals[k + 1] < 0.0) {
            let (mut a, mut b) = (grid[k], grid[k + 1]);
            let mut ga = vals[k];
            while b - a > ROOT_TOL {
                let mid = 0.5 * (a + b);
                let gm = g(mid);
                if gm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if (gm < 0.0) == (ga < 0.0) {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

/// Both constraints active, general covariance: solves the angle equation in
/// whitened coordinates and transmits at full power.
pub fn solve_both_active_general(w: &WhitenedInstance) -> Result<BeamSolution> {
    let lower = w.basis.alpha;
    let roots = scan_roots(lower, FRAC_PI_2, |b| w.angle_residual(b));
    let mut best: Option<(f64, f64)> = None;
    for beta in roots {
        let snr = w.full_power_snr(beta);
        if best.is_none_or(|(_, s)| snr > s) {
            best = Some((beta, snr));
        }
    }
    let (beta, _) = best.ok_or(Error::NoRoot { lower })?;
    let vbar = w.direction(beta);
    let p_whitened = w.p_bar / w.power_factor(beta).powi(2);
    let (p, v) = w.unwhiten(p_whitened, &vbar);
    let gain = w.hs_bar.dotc(&vbar).norm_sqr();
    let amp = w.h0_bar.norm() * beta.cos() + w.epsilon.sqrt();
    Ok(BeamSolution {
        p,
        v,
        rate: (p_whitened * gain).ln_1p(),
        case_tag: CaseTag::BothActive,
        worst_interference: p_whitened * amp * amp,
    })
}

/// General-covariance problem: power-only, then the whitened interference-only
/// subproblem, then the whitened both-active equation.
pub fn solve_p1(sc: &Scenario) -> Result<BeamSolution> {
    if sc.uncertainty().h0().norm() < TAU_LIN {
        return Err(Error::ZeroMeanChannel);
    }
    let sp3 = solve_sp1(sc)?;
    if interference_ok(&sp3, sc) {
        return Ok(sp3);
    }
    let w = whiten_problem(sc)?;
    let sp4 = solve_sp2_mean(&w.as_unit_isotropic()?);
    let (p, v) = w.unwhiten(sp4.p, &sp4.v);
    if power_ok(p, sc) {
        return Ok(BeamSolution::evaluate(p, &v, sc, CaseTag::InterferenceOnly));
    }
    let both = solve_both_active_general(&w)?;
    Ok(BeamSolution::evaluate(both.p, &both.v, sc, CaseTag::BothActive))
}

/// The problem without the transmit-power constraint: the interference-only
/// subproblem, in scalar form for isotropic covariance and in whitened form otherwise.
pub fn solve_interference_only(sc: &Scenario) -> Result<BeamSolution> {
    if sc.uncertainty().h0().norm() < TAU_LIN {
        return Err(Error::ZeroMeanChannel);
    }
    if sc.uncertainty().covariance().isotropic_variance().is_some() {
        let sol = solve_sp2_mean(&MeanFeedbackInstance::from_scenario(sc)?);
        return Ok(BeamSolution::evaluate(sol.p, &sol.v, sc, CaseTag::InterferenceOnly));
    }
    let w = whiten_problem(sc)?;
    let sp4 = solve_sp2_mean(&w.as_unit_isotropic()?);
    let (p, v) = w.unwhiten(sp4.p, &sp4.v);
    Ok(BeamSolution::evaluate(p, &v, sc, CaseTag::InterferenceOnly))
}

/// Isotropic covariances take the scalar path, everything else the whitened one.
pub fn solve_analytic(sc: &Scenario) -> Result<BeamSolution> {
    if sc.uncertainty().h0().norm() < TAU_LIN {
        return Err(Error::ZeroMeanChannel);
    }
    if sc.uncertainty().covariance().isotropic_variance().is_some() {
        let inst = MeanFeedbackInstance::from_scenario(sc)?;
        solve_p3(&inst, sc)
    } else {
        solve_p1(sc)
    }
}
