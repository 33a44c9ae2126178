//! Problem instances, worst-case interference over the uncertainty ellipsoid,
//! feasibility checks and rate evaluation.
//!
//! Rates are natural-log (nats); noise power is fixed to one.

use std::fmt;

use nalgebra::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, HermitianMatrix, Whitening, C64, TAU_LIN};

/// Relative band within which power and interference constraints count as met.
pub const TAU_FEAS: f64 = 1e-8;

/// The ellipsoid `{h : (h − h0)ᴴR⁻¹(h − h0) ≤ ε}` of possible SU-Tx→PU channels.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    h0: CVector,
    r: HermitianMatrix,
    epsilon: f64,
    whitening: Whitening,
}

impl UncertaintyModel {
    /// `epsilon = 0` is accepted and describes perfect knowledge of `h0`.
    pub fn new(h0: CVector, r: HermitianMatrix, epsilon: f64) -> Result<Self> {
        if h0.len() != r.dim() {
            return Err(Error::DimensionMismatch {
                expected: r.dim(),
                got: h0.len(),
            });
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if h0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("h0 has non-finite entries".into()));
        }
        let whitening = Whitening::of_covariance(&r)?;
        Ok(Self {
            h0,
            r,
            epsilon,
            whitening,
        })
    }

    pub fn h0(&self) -> &CVector {
        &self.h0
    }

    pub fn covariance(&self) -> &HermitianMatrix {
        &self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn whitening(&self) -> &Whitening {
        &self.whitening
    }

    pub fn dim(&self) -> usize {
        self.h0.len()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }
}

/// A full problem instance: maximize `log(1 + hsᴴShs)` subject to
/// `tr S ≤ p_bar` and `hᴴSh ≤ p_t` for every `h` in the ellipsoid.
#[derive(Debug, Clone)]
pub struct Scenario {
    hs: CVector,
    uncertainty: UncertaintyModel,
    p_bar: f64,
    p_t: f64,
}

fn check_power(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {value}")))
    }
}

impl Scenario {
    pub fn new(hs: CVector, uncertainty: UncertaintyModel, p_bar: f64, p_t: f64) -> Result<Self> {
        if hs.len() != uncertainty.dim() {
            return Err(Error::DimensionMismatch {
                expected: uncertainty.dim(),
                got: hs.len(),
            });
        }
        if hs.len() < 2 {
            return Err(Error::InvalidParameter("at least two transmit antennas are required".into()));
        }
        if hs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("hs has non-finite entries".into()));
        }
        check_power("p_bar", p_bar)?;
        check_power("p_t", p_t)?;
        Ok(Self {
            hs,
            uncertainty,
            p_bar,
            p_t,
        })
    }

    pub fn hs(&self) -> &CVector {
        &self.hs
    }

    pub fn uncertainty(&self) -> &UncertaintyModel {
        &self.uncertainty
    }

    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }

    pub fn p_t(&self) -> f64 {
        self.p_t
    }

    pub fn dim(&self) -> usize {
        self.hs.len()
    }

    pub fn with_p_bar(&self, p_bar: f64) -> Result<Self> {
        check_power("p_bar", p_bar)?;
        Ok(Self { p_bar, ..self.clone() })
    }

    pub fn with_p_t(&self, p_t: f64) -> Result<Self> {
        check_power("p_t", p_t)?;
        Ok(Self { p_t, ..self.clone() })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Ok(Self {
            uncertainty: self.uncertainty.with_epsilon(epsilon)?,
            ..self.clone()
        })
    }

    pub fn with_hs(&self, hs: CVector) -> Result<Self> {
        Self::new(hs, self.uncertainty.clone(), self.p_bar, self.p_t)
    }
}

/// Which constraints hold with equality at a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    PowerOnly,
    InterferenceOnly,
    BothActive,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseTag::PowerOnly => "power-only",
            CaseTag::InterferenceOnly => "interference-only",
            CaseTag::BothActive => "both-active",
        };
        f.write_str(s)
    }
}

/// Rank-one transmit strategy `S = p·vvᴴ` with its rate and worst-case interference.
#[derive(Debug, Clone)]
pub struct BeamSolution {
    pub p: f64,
    pub v: CVector,
    pub rate: f64,
    pub case_tag: CaseTag,
    pub worst_interference: f64,
}

impl BeamSolution {
    /// Normalizes `v` and evaluates rate and worst-case interference on `sc`.
    pub fn evaluate(p: f64, v: &CVector, sc: &Scenario, case_tag: CaseTag) -> Self {
        let norm = v.norm();
        let v = if norm > 0.0 {
            v / Complex::new(norm, 0.0)
        } else {
            let hs_norm = sc.hs().norm();
            sc.hs() / Complex::new(hs_norm, 0.0)
        };
        Self {
            p,
            rate: rate_of(p, &v, sc.hs()),
            worst_interference: worst_case_interference(p, &v, sc.uncertainty()),
            v,
            case_tag,
        }
    }

    pub fn rate_bits(&self) -> f64 {
        self.rate / std::f64::consts::LN_2
    }

    pub fn covariance(&self) -> CMatrix {
        (&self.v * self.v.adjoint()).scale(self.p)
    }
}

/// `log(1 + p·|hsᴴv|²)` in nats.
pub fn rate_of(p: f64, v: &CVector, hs: &CVector) -> f64 {
    (p * hs.dotc(v).norm_sqr()).ln_1p()
}

/// Closed-form maximizer of `|hᴴv|` over the ellipsoid:
/// `h_max = h0 + √(ε/vᴴRv)·α·Rv` with `α = vᴴh0/|vᴴh0|` (α = 1 when `vᴴh0 = 0`).
pub fn worst_case_channel(v: &CVector, m: &UncertaintyModel) -> CVector {
    let rv = m.covariance().matrix() * v;
    let vrv = v.dotc(&rv).re;
    if vrv <= 0.0 {
        return m.h0().clone();
    }
    let c = v.dotc(m.h0());
    let phase = if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    m.h0() + rv * (phase * (m.epsilon() / vrv).sqrt())
}

/// `p·(|h0ᴴv| + √(ε·vᴴRv))²`, the largest `p·|hᴴv|²` over the ellipsoid.
pub fn worst_case_interference(p: f64, v: &CVector, m: &UncertaintyModel) -> f64 {
    let amp = m.h0().dotc(v).norm() + (m.epsilon() * m.covariance().quadratic_form(v).max(0.0)).sqrt();
    p * amp * amp
}

/// Classifies a feasible point by which constraints are tight within `tol`.
pub fn classify_active(p: f64, worst_interference: f64, sc: &Scenario, tol: f64) -> CaseTag {
    let power_tight = p >= sc.p_bar() * (1.0 - tol);
    let interference_tight = worst_interference >= sc.p_t() * (1.0 - tol);
    match (power_tight, interference_tight) {
        (true, true) => CaseTag::BothActive,
        (false, true) => CaseTag::InterferenceOnly,
        _ => CaseTag::PowerOnly,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub power_ok: bool,
    pub interference_ok: bool,
    /// `(p_bar − p)/p_bar`.
    pub power_slack: f64,
    /// `(p_t − worst interference)/p_t`.
    pub interference_slack: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.power_ok && self.interference_ok
    }
}

/// Rechecks both constraints from `(p, v)`; `tol` is relative.
pub fn check_feasible(sol: &BeamSolution, sc: &Scenario, tol: f64) -> FeasibilityReport {
    let interference = worst_case_interference(sol.p, &sol.v, sc.uncertainty());
    FeasibilityReport {
        power_ok: sol.p <= sc.p_bar() * (1.0 + tol),
        interference_ok: interference <= sc.p_t() * (1.0 + tol),
        power_slack: (sc.p_bar() - sol.p) / sc.p_bar(),
        interference_slack: (sc.p_t() - interference) / sc.p_t(),
    }
}

/// `n` iid CN(0, 1) entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Draws points `h = h0 + √ε·Qᴴz` with `‖z‖ ≤ 1` (or `= 1` on the boundary),
/// where `QᴴQ = R`, so `(h − h0)ᴴR⁻¹(h − h0) = ε‖z‖²`.
#[derive(Debug, Clone)]
pub struct EllipsoidSampler {
    center: CVector,
    shape: CMatrix,
    boundary: bool,
    z: CVector,
}

impl EllipsoidSampler {
    pub fn new(m: &UncertaintyModel, boundary: bool) -> Self {
        let shape = m.whitening().q().adjoint().scale(m.epsilon().sqrt());
        Self {
            center: m.h0().clone(),
            shape,
            boundary,
            z: CVector::zeros(m.dim()),
        }
    }

    /// Writes one sample into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut CVector) {
        let n = self.z.len();
        let mut norm_sq = 0.0;
        for k in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            self.z[k] = C64::new(re, im);
            norm_sq += re * re + im * im;
        }
        let mut radius = 1.0;
        if !self.boundary {
            // Uniform in the ball of real dimension 2N.
            let u: f64 = rng.gen();
            radius = u.powf(1.0 / (2 * n) as f64);
        }
        let scale = radius / norm_sq.sqrt();
        out.copy_from(&self.center);
        for j in 0..n {
            let zj = self.z[j] * scale;
            for i in 0..n {
                out[i] += self.shape[(i, j)] * zj;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> CVector {
        let mut out = CVector::zeros(self.z.len());
        self.sample_into(rng, &mut out);
        out
    }
}

/// `count` seeded samples from the ellipsoid (or its boundary).
pub fn sample_ellipsoid(m: &UncertaintyModel, seed: u64, count: usize, boundary: bool) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = EllipsoidSampler::new(m, boundary);
    (0..count).map(|_| sampler.sample(&mut rng)).collect()
}

/// `(h − h0)ᴴR⁻¹(h − h0)` evaluated through a linear solve against `R`.
pub fn ellipsoid_quadratic_form(h: &CVector, m: &UncertaintyModel) -> f64 {
    let d = h - m.h0();
    let chol = m
        .covariance()
        .matrix()
        .clone()
        .cholesky()
        .expect("covariance of a valid model is positive definite");
    d.dotc(&chol.solve(&d)).re
}

/// True when `‖h0‖` is below the degeneracy threshold.
pub fn is_zero_mean(m: &UncertaintyModel) -> bool {
    m.h0().norm() < TAU_LIN
}
