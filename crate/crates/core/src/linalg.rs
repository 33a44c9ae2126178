//! Complex vector and matrix primitives shared by the solvers.
//!
//! Conventions: `a.dotc(&b)` is `aᴴb`. A Hermitian decomposition is stored as
//! `M = Uᴴ·diag(Δ)·U`, i.e. the rows of `U` are the conjugated eigenvectors.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;
pub type RVector = DVector<f64>;
pub type RMatrix = DMatrix<f64>;

/// Absolute tolerance for linear-algebra identities on unit-scale data.
pub const TAU_LIN: f64 = 1e-10;
/// Smallest admissible eigenvalue ratio of a positive-definite covariance.
pub const TAU_PD: f64 = 1e-12;

const EIG_MAX_SWEEPS: usize = 10_000;

/// Builds a complex vector from `(re, im)` pairs.
pub fn cvec(entries: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| C64::new(re, im)))
}

/// Builds a real-valued complex vector.
pub fn cvec_real(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&re| C64::new(re, 0.0)))
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// A square complex matrix that is Hermitian exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `m` if `‖m − mᴴ‖_max ≤ τ_lin·max(1, ‖m‖_max)` and stores the
    /// symmetrized `(m + mᴴ)/2` so the stored entries are exactly Hermitian.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        let adjoint = m.adjoint();
        let asymmetry = max_abs(&(&m - &adjoint));
        if asymmetry > TAU_LIN * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self((&m + &adjoint).scale(0.5)))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        Self(CMatrix::identity(n, n).scale(scale))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(CMatrix::from_diagonal(&cvec_real(diag)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `Re(vᴴ M v)`; the imaginary part vanishes for Hermitian `M`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// Returns `σ²` when `‖M − (tr M/N)·I‖_max ≤ 1e-10·(tr M/N)`.
    pub fn isotropic_variance(&self) -> Option<f64> {
        let n = self.dim();
        let mean = self.trace() / n as f64;
        if mean <= 0.0 {
            return None;
        }
        let dev = &self.0 - CMatrix::identity(n, n).scale(mean);
        (max_abs(&dev) <= 1e-10 * mean).then_some(mean)
    }

    pub fn is_positive_definite(&self) -> bool {
        match hermitian_eig(self) {
            Ok(eig) => {
                let max = eig.delta[0];
                max > 0.0 && eig.delta[eig.delta.len() - 1] > TAU_PD * max
            }
            Err(_) => false,
        }
    }
}

/// Hermitian decomposition `M = Uᴴ·diag(Δ)·U`, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub u: CMatrix,
    pub delta: RVector,
}

impl EigenPair {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&self.delta.map(|x| C64::new(x, 0.0)));
        self.u.adjoint() * d * &self.u
    }
}

/// Eigendecomposition of a Hermitian PSD matrix.
///
/// Eigenvalues are sorted descending and each eigenvector's largest-magnitude
/// entry (first one on ties) is made real-positive, so the output is fully
/// determined by the input. Round-off negatives above `−τ_lin·‖M‖_max` are
/// clamped to zero; anything more negative is rejected.
pub fn hermitian_eig(m: &HermitianMatrix) -> Result<EigenPair> {
    let n = m.dim();
    let scale = m.max_abs().max(1.0);
    let eig = m
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut u = CMatrix::zeros(n, n);
    let mut delta = RVector::zeros(n);
    for (row, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda < -TAU_LIN * scale {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: lambda });
        }
        delta[row] = lambda.max(0.0);

        let mut col = eig.eigenvectors.column(idx).into_owned();
        let mut pivot = 0;
        for k in 1..n {
            if col[k].norm() > col[pivot].norm() {
                pivot = k;
            }
        }
        let p = col[pivot];
        if p.norm() > 0.0 {
            col *= p.conj() / p.norm();
            col[pivot] = C64::new(col[pivot].re, 0.0);
        }
        for k in 0..n {
            u[(row, k)] = col[k].conj();
        }
    }
    Ok(EigenPair { u, delta })
}

/// Decomposition of an inverse covariance `R⁻¹ = Uᴴ·diag(Δ)·U` (Δ descending),
/// computed from the eigenpairs of `R` itself for accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    pub u: CMatrix,
    pub delta: RVector,
}

impl Whitening {
    pub fn of_covariance(r: &HermitianMatrix) -> Result<Self> {
        let eig = hermitian_eig(r)?;
        let n = r.dim();
        let largest = eig.delta[0];
        let smallest = eig.delta[n - 1];
        let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
        if largest <= 0.0 || ratio < TAU_PD {
            return Err(Error::SingularCovariance { ratio });
        }
        // Eigenvalues of R are descending, so reversing gives Δ = 1/λ descending.
        let mut u = CMatrix::zeros(n, n);
        let mut delta = RVector::zeros(n);
        for row in 0..n {
            let src = n - 1 - row;
            delta[row] = 1.0 / eig.delta[src];
            u.set_row(row, &eig.u.row(src));
        }
        Ok(Self { u, delta })
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    fn scaled_u(&self, power: f64) -> CMatrix {
        let mut m = self.u.clone();
        for (i, mut row) in m.row_iter_mut().enumerate() {
            row *= C64::new(self.delta[i].powf(power), 0.0);
        }
        m
    }

    /// `Q = Δ^{-1/2}·U`, so that `QᴴQ = R`.
    pub fn q(&self) -> CMatrix {
        self.scaled_u(-0.5)
    }

    /// `h̄ = Δ^{1/2}·U·h`.
    pub fn whiten(&self, h: &CVector) -> CVector {
        self.scaled_u(0.5) * h
    }

    /// `v = Uᴴ·Δ^{1/2}·v̄`.
    pub fn unwhiten_direction(&self, vbar: &CVector) -> CVector {
        let scaled = CVector::from_iterator(
            self.dim(),
            vbar.iter()
                .zip(self.delta.iter())
                .map(|(z, d)| z * d.sqrt()),
        );
        self.u.adjoint() * scaled
    }

    /// `‖Δ^{1/2}·x‖`.
    pub fn sqrt_delta_norm(&self, x: &CVector) -> f64 {
        x.iter()
            .zip(self.delta.iter())
            .map(|(z, d)| d * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `Q = Δ^{-1/2}·U` where `R⁻¹ = Uᴴ·Δ·U`; `ε·‖Qw‖²` is the largest `|h₁ᴴw|²`
/// over the ellipsoid `h₁ᴴR⁻¹h₁ ≤ ε`.
pub fn whitening_map(r: &HermitianMatrix) -> Result<CMatrix> {
    Whitening::of_covariance(r).map(|w| w.q())
}

/// Rotates `hs` by a unit phase so that `resultᴴh0` is real and nonnegative.
/// Returns `hs` unchanged when `hsᴴh0 = 0`.
pub fn phase_align(hs: &CVector, h0: &CVector) -> CVector {
    let c = hs.dotc(h0);
    let mag = c.norm();
    if mag == 0.0 {
        return hs.clone();
    }
    hs * (c / mag)
}

/// Orthonormal pair spanning `h0` and `hs`, with `hs = a_hs·ĥ + b_hs·ĥ⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDimBasis {
    pub h_hat: CVector,
    pub h_perp_hat: CVector,
    pub a_hs: f64,
    pub b_hs: f64,
    /// Angle between `hs` and `h0`, in `[0, π/2]`.
    pub alpha: f64,
}

impl TwoDimBasis {
    /// `cos β·ĥ + sin β·ĥ⊥`.
    pub fn direction(&self, beta: f64) -> CVector {
        let (s, c) = beta.sin_cos();
        &self.h_hat * C64::new(c, 0.0) + &self.h_perp_hat * C64::new(s, 0.0)
    }
}

/// First canonical vector orthogonalized against unit `h_hat`, skipping any
/// `e_k` whose residual is shorter than `1/√2` (one always exists for N ≥ 2).
fn canonical_perp(h_hat: &CVector) -> CVector {
    let n = h_hat.len();
    for k in 0..n {
        let residual_sq = 1.0 - h_hat[k].norm_sqr();
        if residual_sq >= 0.5 || k == n - 1 {
            let mut e = CVector::zeros(n);
            e[k] = C64::new(1.0, 0.0);
            let proj = h_hat.dotc(&e);
            let perp = e - h_hat * proj;
            let norm = perp.norm();
            return perp / C64::new(norm, 0.0);
        }
    }
    unreachable!("loop returns at k == n - 1")
}

/// Builds `ĥ = h0/‖h0‖` and `ĥ⊥ ∝ hs − (ĥᴴhs)ĥ`. Requires `hs` phase-aligned to
/// `h0` (`ĥᴴhs` real, nonnegative).
pub fn two_dim_basis(h0: &CVector, hs: &CVector) -> Result<TwoDimBasis> {
    if h0.len() != hs.len() {
        return Err(Error::DimensionMismatch {
            expected: h0.len(),
            got: hs.len(),
        });
    }
    let h0_norm = h0.norm();
    if h0_norm < TAU_LIN {
        return Err(Error::ZeroMeanChannel);
    }
    let h_hat = h0 / C64::new(h0_norm, 0.0);
    let hs_norm = hs.norm();
    let c = h_hat.dotc(hs);
    let tol = TAU_LIN * hs_norm;
    if c.im.abs() > tol || c.re < -tol {
        return Err(Error::NotPhaseAligned { imag: c.im });
    }
    let perp = hs - &h_hat * c;
    let b = perp.norm();
    let a = c.re.max(0.0);
    let (h_perp_hat, b_hs) = if b <= tol || hs_norm == 0.0 {
        (canonical_perp(&h_hat), 0.0)
    } else {
        (perp / C64::new(b, 0.0), b)
    };
    Ok(TwoDimBasis {
        h_hat,
        h_perp_hat,
        a_hs: a,
        b_hs,
        alpha: b_hs.atan2(a),
    })
}

/// `[Re v; Im v]`.
pub fn realify(v: &CVector) -> RVector {
    let n = v.len();
    RVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`realify`].
pub fn derealify(x: &RVector) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(x[i], x[i + n]))
}

/// `[[Re Q, −Im Q], [Im Q, Re Q]]`, so that `realify_op(Q)·realify(w) = realify(Q·w)`.
pub fn realify_op(q: &CMatrix) -> RMatrix {
    let (r, c) = q.shape();
    RMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = q[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `[Im h; −Re h]`, whose inner product with `realify(w)` is `Im(wᴴh)`.
pub fn realify_check(h: &CVector) -> RVector {
    let n = h.len();
    RVector::from_fn(2 * n, |i, _| if i < n { h[i].im } else { -h[i - n].re })
}
