//! Brute-force reference solvers used to validate the closed-form and conic
//! solvers: dense angle grids, random full-space search, Monte-Carlo
//! interference maximization and a perfect-CSI reference.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Complex;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    classify_active, complex_gaussian, worst_case_channel, worst_case_interference, BeamSolution, EllipsoidSampler,
    Scenario, UncertaintyModel,
};
use crate::error::{Error, Result};
use crate::linalg::{phase_align, two_dim_basis, CVector, TwoDimBasis, C64};

/// Largest dimension accepted by [`full_space_search`].
pub const FULL_SPACE_LIMIT: usize = 6;

const GOLDEN_ITERATIONS: usize = 200;
const TAG_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Number of angle cells over `[α, π/2]`.
    pub beta_steps: usize,
    /// Number of power levels over `[0, p_bar]` in the Monte-Carlo mode.
    pub power_steps: usize,
    pub random_dirs: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Polish the best grid cell by golden-section search.
    pub refine: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            beta_steps: 100_000,
            power_steps: 1_000,
            random_dirs: 10_000,
            mc_samples: 10_000,
            seed: 0,
            refine: true,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if self.beta_steps == 0 || self.power_steps == 0 || self.random_dirs == 0 || self.mc_samples == 0 {
            return Err(Error::InvalidParameter("oracle counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// The problem restricted to the unit beams `cos β·ĥ + sin β·ĥ⊥`.
///
/// Every quantity the search needs is a quadratic form in `(cos β, sin β)`,
/// so each grid cell costs O(1).
struct PlaneSearch {
    basis: TwoDimBasis,
    /// `hsᴴĥ`, `hsᴴĥ⊥`.
    hs_coef: (C64, C64),
    /// `h0ᴴĥ`, `h0ᴴĥ⊥`.
    h0_coef: (C64, C64),
    /// `ĥᴴRĥ`, `ĥ⊥ᴴRĥ⊥`, `Re ĥᴴRĥ⊥`, scaled by ε.
    quad: (f64, f64, f64),
    p_bar: f64,
    p_t: f64,
}

impl PlaneSearch {
    fn new(basis: TwoDimBasis, hs: &CVector, h0: &CVector, m: Option<&UncertaintyModel>, p_bar: f64, p_t: f64) -> Self {
        let quad = match m {
            Some(m) => {
                let r = m.covariance().matrix();
                let e = m.epsilon();
                let rh = r * &basis.h_hat;
                let rp = r * &basis.h_perp_hat;
                (
                    e * basis.h_hat.dotc(&rh).re,
                    e * basis.h_perp_hat.dotc(&rp).re,
                    e * basis.h_hat.dotc(&rp).re,
                )
            }
            None => (0.0, 0.0, 0.0),
        };
        Self {
            hs_coef: (hs.dotc(&basis.h_hat), hs.dotc(&basis.h_perp_hat)),
            h0_coef: (h0.dotc(&basis.h_hat), h0.dotc(&basis.h_perp_hat)),
            basis,
            quad,
            p_bar,
            p_t,
        }
    }

    /// Best power and resulting rate along the beam at angle `beta`.
    fn eval(&self, beta: f64) -> (f64, f64) {
        let (s, c) = beta.sin_cos();
        let gain = (self.hs_coef.0 * c + self.hs_coef.1 * s).norm_sqr();
        let mean = (self.h0_coef.0 * c + self.h0_coef.1 * s).norm();
        let spread = (c * c * self.quad.0 + s * s * self.quad.1 + 2.0 * c * s * self.quad.2).max(0.0);
        let amp = mean + spread.sqrt();
        let p = if amp > 0.0 {
            self.p_bar.min(self.p_t / (amp * amp))
        } else {
            self.p_bar
        };
        (p, (p * gain).ln_1p())
    }

    /// Grid search over `[α, π/2]` with the lowest angle winning ties, optionally
    /// polished inside the neighbouring cells.
    fn search(&self, steps: usize, refine: bool) -> (f64, f64) {
        let lo = self.basis.alpha;
        let width = FRAC_PI_2 - lo;
        let at = |k: usize| if k == steps { FRAC_PI_2 } else { lo + width * k as f64 / steps as f64 };
        let mut best_k = 0;
        let mut best_rate = self.eval(at(0)).1;
        for k in 1..=steps {
            let (_, rate) = self.eval(at(k));
            // Differences at rounding level count as ties, which the lowest angle wins.
            if rate > best_rate + TIE_TOL * best_rate.abs() {
                best_rate = rate;
                best_k = k;
            }
        }
        let mut best_beta = at(best_k);
        if refine && width > 0.0 {
            let a = at(best_k.saturating_sub(1));
            let b = at((best_k + 1).min(steps));
            let beta = golden_max(a, b, |x| self.eval(x).1);
            if self.eval(beta).1 > best_rate + TIE_TOL * best_rate.abs() {
                best_beta = beta;
            }
        }
        (best_beta, self.eval(best_beta).0)
    }
}

/// Golden-section maximizer of a unimodal function on `[a, b]`.
fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= f64::EPSILON * b.abs().max(1.0) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

fn finish(p: f64, v: &CVector, sc: &Scenario) -> BeamSolution {
    let mut sol = BeamSolution::evaluate(p, v, sc, crate::channel::CaseTag::PowerOnly);
    sol.case_tag = classify_active(sol.p, sol.worst_interference, sc, TAG_TOL);
    sol
}

/// Exhaustive search over beams in the plane of `h0` and `hs`, each with its
/// largest robustly feasible power.
pub fn grid_oracle(sc: &Scenario, cfg: &OracleConfig) -> Result<BeamSolution> {
    cfg.validate()?;
    let m = sc.uncertainty();
    let hs = phase_align(sc.hs(), m.h0());
    let basis = two_dim_basis(m.h0(), &hs)?;
    let plane = PlaneSearch::new(basis, sc.hs(), m.h0(), Some(m), sc.p_bar(), sc.p_t());
    let (beta, p) = plane.search(cfg.beta_steps, cfg.refine);
    Ok(finish(p, &plane.basis.direction(beta), sc))
}

/// The same plane search, but with interference estimated from `mc_samples`
/// boundary samples and power restricted to a uniform grid of `power_steps`
/// levels. Does not rely on the closed-form worst case; it is optimistic by
/// the sampling error.
pub fn grid_oracle_mc(sc: &Scenario, cfg: &OracleConfig) -> Result<BeamSolution> {
    cfg.validate()?;
    let m = sc.uncertainty();
    let hs = phase_align(sc.hs(), m.h0());
    let basis = two_dim_basis(m.h0(), &hs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sampler = EllipsoidSampler::new(m, true);
    let mut h = CVector::zeros(sc.dim());
    let mut proj = Vec::with_capacity(cfg.mc_samples + 1);
    // The mean channel is a member of the set as well.
    proj.push((m.h0().dotc(&basis.h_hat), m.h0().dotc(&basis.h_perp_hat)));
    for _ in 0..cfg.mc_samples {
        sampler.sample_into(&mut rng, &mut h);
        proj.push((h.dotc(&basis.h_hat), h.dotc(&basis.h_perp_hat)));
    }
    let hs_coef = (sc.hs().dotc(&basis.h_hat), sc.hs().dotc(&basis.h_perp_hat));
    let lo = basis.alpha;
    let steps = cfg.beta_steps;
    let mut best = (f64::NEG_INFINITY, lo, 0.0);
    for k in 0..=steps {
        let beta = if k == steps { FRAC_PI_2 } else { lo + (FRAC_PI_2 - lo) * k as f64 / steps as f64 };
        let (s, c) = beta.sin_cos();
        let unit_interference = proj.iter().map(|(a, b)| (a * c + b * s).norm_sqr()).fold(0.0, f64::max);
        let p_max = if unit_interference > 0.0 {
            sc.p_bar().min(sc.p_t() / unit_interference)
        } else {
            sc.p_bar()
        };
        let level = ((p_max / sc.p_bar()) * cfg.power_steps as f64).floor();
        let p = sc.p_bar() * level / cfg.power_steps as f64;
        let rate = (p * (hs_coef.0 * c + hs_coef.1 * s).norm_sqr()).ln_1p();
        if rate > best.0 {
            best = (rate, beta, p);
        }
    }
    Ok(finish(best.2, &basis.direction(best.1), sc))
}

/// Best beam among the given directions, each with its largest robustly feasible power.
pub fn best_of_directions(sc: &Scenario, dirs: &[CVector]) -> Option<BeamSolution> {
    let mut best: Option<(f64, f64, CVector)> = None;
    for d in dirs {
        let norm = d.norm();
        if norm == 0.0 {
            continue;
        }
        let v = d / Complex::new(norm, 0.0);
        let unit = worst_case_interference(1.0, &v, sc.uncertainty());
        let p = if unit > 0.0 { sc.p_bar().min(sc.p_t() / unit) } else { sc.p_bar() };
        let rate = crate::channel::rate_of(p, &v, sc.hs());
        if best.as_ref().is_none_or(|(r, _, _)| rate > *r) {
            best = Some((rate, p, v));
        }
    }
    best.map(|(_, p, v)| finish(p, &v, sc))
}

/// Random search over `random_dirs` seeded unit directions in the whole space.
pub fn full_space_search(sc: &Scenario, cfg: &OracleConfig) -> Result<BeamSolution> {
    cfg.validate()?;
    let n = sc.dim();
    if n > FULL_SPACE_LIMIT {
        return Err(Error::DimensionTooLarge {
            n,
            limit: FULL_SPACE_LIMIT,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dirs: Vec<CVector> = (0..cfg.random_dirs).map(|_| complex_gaussian(&mut rng, n)).collect();
    best_of_directions(sc, &dirs).ok_or_else(|| Error::InvalidParameter("no usable direction".into()))
}

/// Largest `p|hᴴv|²` over `samples` seeded boundary points of the ellipsoid.
pub fn mc_worst_interference_samples_only(p: f64, v: &CVector, m: &UncertaintyModel, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = EllipsoidSampler::new(m, true);
    let mut h = CVector::zeros(m.dim());
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        sampler.sample_into(&mut rng, &mut h);
        best = best.max(h.dotc(v).norm_sqr());
    }
    p * best
}

/// Sampled maximum together with the closed-form worst-case channel itself.
pub fn mc_worst_interference(p: f64, v: &CVector, m: &UncertaintyModel, cfg: &OracleConfig) -> f64 {
    let sampled = mc_worst_interference_samples_only(p, v, m, cfg.mc_samples, cfg.seed);
    let h_max = worst_case_channel(v, m);
    sampled.max(p * h_max.dotc(v).norm_sqr())
}

/// Optimal beam when the interference channel is known to be exactly `h_fixed`,
/// found by grid search in the plane of `h_fixed` and `hs`.
pub fn perfect_csi_reference(sc: &Scenario, h_fixed: &CVector, cfg: &OracleConfig) -> Result<BeamSolution> {
    cfg.validate()?;
    if h_fixed.len() != sc.dim() {
        return Err(Error::DimensionMismatch {
            expected: sc.dim(),
            got: h_fixed.len(),
        });
    }
    let hs = phase_align(sc.hs(), h_fixed);
    let basis = two_dim_basis(h_fixed, &hs)?;
    let plane = PlaneSearch::new(basis, sc.hs(), h_fixed, None, sc.p_bar(), sc.p_t());
    let (beta, p) = plane.search(cfg.beta_steps, cfg.refine);
    let v = plane.basis.direction(beta);
    let rate = crate::channel::rate_of(p, &v, sc.hs());
    let interference = p * h_fixed.dotc(&v).norm_sqr();
    let tag = if p >= sc.p_bar() * (1.0 - TAG_TOL) && interference >= sc.p_t() * (1.0 - TAG_TOL) {
        crate::channel::CaseTag::BothActive
    } else if interference >= sc.p_t() * (1.0 - TAG_TOL) {
        crate::channel::CaseTag::InterferenceOnly
    } else {
        crate::channel::CaseTag::PowerOnly
    };
    Ok(BeamSolution {
        p,
        v,
        rate,
        case_tag: tag,
        worst_interference: interference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{solve_analytic, solve_sp2_mean, MeanFeedbackInstance};
    use crate::channel::{check_feasible, CaseTag};
    use crate::linalg::{cvec_real, HermitianMatrix};
    use rand::Rng;

    fn iso(n: usize, eps: f64, p_bar: f64, p_t: f64, rng: &mut ChaCha8Rng) -> Scenario {
        let h0 = complex_gaussian(rng, n);
        let hs = complex_gaussian(rng, n);
        let m = UncertaintyModel::new(h0, HermitianMatrix::identity(n), eps).unwrap();
        Scenario::new(hs, m, p_bar, p_t).unwrap()
    }

    fn small_cfg() -> OracleConfig {
        OracleConfig {
            beta_steps: 20_000,
            random_dirs: 2_000,
            mc_samples: 2_000,
            power_steps: 2_000,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn golden_finds_peak_and_kink() {
        let x = golden_max(0.0, 2.0, |x| -(x - 0.7_f64).powi(2));
        assert!((x - 0.7).abs() < 1e-7);
        let x = golden_max(0.0, 2.0, |x| x.min(1.3 - (x - 1.0)));
        assert!((x - 1.15).abs() < 1e-12);
    }

    #[test]
    fn huge_cap_gives_matched_beam() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sc = iso(3, 0.2, 2.0, 1e12, &mut rng);
        let sol = grid_oracle(&sc, &small_cfg()).unwrap();
        let expected = (sc.p_bar() * sc.hs().norm_squared()).ln_1p();
        assert!((sol.rate - expected).abs() < 1e-12);
        assert_eq!(sol.case_tag, CaseTag::PowerOnly);
    }

    #[test]
    fn orthogonal_isotropic_uses_right_angle() {
        let m = UncertaintyModel::new(cvec_real(&[1.0, 0.0, 0.0]), HermitianMatrix::identity(3), 0.3).unwrap();
        let sc = Scenario::new(cvec_real(&[0.0, 1.0, 0.5]), m, 1e6, 0.4).unwrap();
        let sol = grid_oracle(&sc, &small_cfg()).unwrap();
        let inst = MeanFeedbackInstance::from_scalars(1.0, 1.25_f64.sqrt(), FRAC_PI_2, 1.0, 0.3, 1e6, 0.4).unwrap();
        assert!((sol.rate - solve_sp2_mean(&inst).rate).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_isotropic_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p_t = 10f64.powf(rng.gen_range(-2.0..1.0));
            let sc = iso(3, rng.gen_range(0.05..0.5), rng.gen_range(0.5..5.0), p_t, &mut rng);
            let grid = grid_oracle(&sc, &OracleConfig::default()).unwrap();
            let analytic = solve_analytic(&sc).unwrap();
            assert!((grid.rate - analytic.rate).abs() <= 1e-6 * analytic.rate.max(1e-12));
            assert!(check_feasible(&grid, &sc, 1e-8).is_feasible());
        }
    }

    #[test]
    fn mc_grid_is_close_and_not_pessimistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let sc = iso(2, 0.2, 2.0, 0.3, &mut rng);
            let exact = grid_oracle(&sc, &small_cfg()).unwrap();
            let cfg = OracleConfig {
                beta_steps: 500,
                ..small_cfg()
            };
            let mc = grid_oracle_mc(&sc, &cfg).unwrap();
            assert!((mc.rate - exact.rate).abs() < 5e-2 * exact.rate.max(1e-3), "{} vs {}", mc.rate, exact.rate);
        }
    }

    #[test]
    fn full_space_respects_limit_and_single_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sc = iso(7, 0.2, 2.0, 0.3, &mut rng);
        assert_eq!(
            full_space_search(&sc, &small_cfg()).unwrap_err(),
            Error::DimensionTooLarge { n: 7, limit: 6 }
        );
        let sc = iso(3, 0.2, 2.0, 0.3, &mut rng);
        let sol = solve_analytic(&sc).unwrap();
        let single = best_of_directions(&sc, std::slice::from_ref(&sol.v)).unwrap();
        assert!((single.rate - sol.rate).abs() < 1e-12);
    }

    #[test]
    fn full_space_two_antennas_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sc = iso(2, 0.2, 2.0, 0.3, &mut rng);
        let grid = grid_oracle(&sc, &small_cfg()).unwrap();
        let full = full_space_search(&sc, &small_cfg()).unwrap();
        assert!(full.rate <= grid.rate + 1e-9);
        assert!(full.rate > grid.rate - 5e-2);
    }

    #[test]
    fn mc_interference_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = UncertaintyModel::new(complex_gaussian(&mut rng, 3), HermitianMatrix::identity(3), 1e-30).unwrap();
        let v = complex_gaussian(&mut rng, 3).normalize();
        let tiny = mc_worst_interference(2.0, &v, &m, &small_cfg());
        assert!((tiny - 2.0 * m.h0().dotc(&v).norm_sqr()).abs() < 1e-12);
        let m = m.with_epsilon(0.3).unwrap();
        let closed = worst_case_interference(2.0, &v, &m);
        let with_point = mc_worst_interference(2.0, &v, &m, &small_cfg());
        assert!((with_point - closed).abs() <= 1e-10 * closed);
        let sampled = mc_worst_interference_samples_only(2.0, &v, &m, 2_000, 9);
        assert!(sampled <= closed * (1.0 + 1e-12));
    }

    #[test]
    fn perfect_csi_orthogonal_and_aligned() {
        let m = UncertaintyModel::new(cvec_real(&[1.0, 0.0]), HermitianMatrix::identity(2), 0.1).unwrap();
        let sc = Scenario::new(cvec_real(&[0.0, 2.0]), m, 3.0, 0.5).unwrap();
        let sol = perfect_csi_reference(&sc, &cvec_real(&[1.0, 0.0]), &small_cfg()).unwrap();
        assert_eq!(sol.p, 3.0);
        assert!((sol.rate - (3.0_f64 * 4.0).ln_1p()).abs() < 1e-12);

        let h_fixed = cvec_real(&[0.0, 1.5]);
        let sol = perfect_csi_reference(&sc, &h_fixed, &small_cfg()).unwrap();
        assert!((sol.p - (3.0_f64).min(0.5 / 2.25)).abs() < 1e-12);
        assert!((sol.v[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_outputs_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let sc = iso(3, rng.gen_range(0.05..0.5), rng.gen_range(0.5..5.0), rng.gen_range(0.01..2.0), &mut rng);
            let grid = grid_oracle(&sc, &small_cfg()).unwrap();
            assert!(check_feasible(&grid, &sc, 1e-8).is_feasible());
            let full = full_space_search(&sc, &small_cfg()).unwrap();
            assert!(check_feasible(&full, &sc, 1e-8).is_feasible());
        }
    }
}
