//! Exact Gaussian-state algebra for one or two bosonic modes.
//!
//! States are parametrized by the first moments ⟨x̂⟩, ⟨p̂⟩ and the covariance
//! matrix of the dimensionless quadratures x̂ = (â† + â)/√2, p̂ = i(â† − â)/√2,
//! with [x̂, p̂] = i and ħ = 1. In this convention the vacuum covariance is
//! diag(1/2, 1/2) and a thermal state has variance n_th + 1/2 in both
//! quadratures.
//!
//! Everything here is closed-form: symplectic congruences for the unitaries,
//! symplectic eigenvalues for the entropy, and the exact relaxation of the
//! mode in a squeezed thermal environment expressed through the decay of the
//! unsqueezed-frame moments ⟨R̂⟩, ⟨R̂²⟩, ⟨R̂†R̂⟩ with R̂ = â cosh r + â† sinh r e^{iθ}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::ReservoirSpec;

const SYMMETRY_TOL: f64 = 1e-12;
const PHYSICALITY_TOL: f64 = 1e-12;
/// Below this distance from the vacuum symplectic eigenvalue the entropy
/// contribution is taken to be exactly zero (avoids ln 0).
const PURITY_CUTOFF: f64 = 1e-12;
/// Symplectic eigenvalues this far below 1/2 are rejected as unphysical.
const UNPHYSICAL_TOL: f64 = 1e-9;

/// A single mode of the field: its angular frequency (in units of ω₁ = 1)
/// and a free-text label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSpec {
    omega: f64,
    label: String,
}

impl ModeSpec {
    pub fn new(omega: f64) -> Result<Self> {
        if omega <= 0.0 || !omega.is_finite() {
            return Err(Error::Domain(format!("mode frequency must be > 0, got {omega}")));
        }
        Ok(Self { omega, label: String::new() })
    }

    pub fn with_label(omega: f64, label: impl Into<String>) -> Result<Self> {
        let mut m = Self::new(omega)?;
        m.label = label.into();
        Ok(m)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Squeezing parameters (r, θ) of the unitary
/// Ŝ = exp[(r/2)(â² e^{−iθ} − â†² e^{iθ})], with r ≥ 0 and θ wrapped into [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    r: f64,
    theta: f64,
}

impl SqueezeParams {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("squeeze amplitude must be >= 0, got {r}")));
        }
        if !theta.is_finite() {
            return Err(Error::Domain(format!("squeeze phase must be finite, got {theta}")));
        }
        Ok(Self { r, theta: theta.rem_euclid(std::f64::consts::TAU) })
    }

    pub fn none() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Parameters of the inverse unitary Ŝ†, i.e. (r, θ + π).
    pub fn inverse(&self) -> Self {
        Self { r: self.r, theta: (self.theta + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) }
    }
}

/// First and second moments of a Gaussian state of one or two modes.
///
/// `mean` holds (⟨x̂₁⟩, ⟨p̂₁⟩[, ⟨x̂₂⟩, ⟨p̂₂⟩]) and `cov` the matrix of second
/// central moments in the same ordering, symmetrized.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GaussianStateData", into = "GaussianStateData")]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Serialization shape: `{ "n_modes": .., "mean": [..], "cov": [[..], ..] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GaussianStateData {
    n_modes: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl From<GaussianState> for GaussianStateData {
    fn from(s: GaussianState) -> Self {
        let n_modes = s.n_modes();
        let dim = 2 * n_modes;
        let cov = (0..dim)
            .map(|i| (0..dim).map(|j| s.cov[(i, j)]).collect())
            .collect();
        Self { n_modes, mean: s.mean.iter().copied().collect(), cov }
    }
}

impl TryFrom<GaussianStateData> for GaussianState {
    type Error = Error;

    fn try_from(d: GaussianStateData) -> Result<Self> {
        let dim = 2 * d.n_modes;
        if d.n_modes == 0 || d.n_modes > 2 {
            return Err(Error::Domain(format!("n_modes must be 1 or 2, got {}", d.n_modes)));
        }
        if d.mean.len() != dim || d.cov.len() != dim || d.cov.iter().any(|row| row.len() != dim) {
            return Err(Error::Dimension(format!(
                "mean/cov shape inconsistent with n_modes = {}",
                d.n_modes
            )));
        }
        let mean = DVector::from_vec(d.mean);
        let cov = DMatrix::from_fn(dim, dim, |i, j| d.cov[i][j]);
        GaussianState::new(mean, cov)
    }
}

impl GaussianState {
    /// Builds a state from explicit moments, validating symmetry, finiteness
    /// and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim != 2 && dim != 4 {
            return Err(Error::Dimension(format!("mean must have length 2 or 4, got {dim}")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension(format!(
                "cov must be {dim}x{dim}, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|x| !x.is_finite()) || cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("moments must be finite".into()));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::Domain(format!(
                        "covariance not symmetric at ({i},{j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        // Symmetrize exactly so downstream algebra never sees the residual.
        let cov = (&cov + cov.transpose()) * 0.5;
        let state = Self { mean, cov };
        let nu_min = state
            .symplectic_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if nu_min < 0.5 - PHYSICALITY_TOL {
            return Err(Error::Unphysical { nu: nu_min });
        }
        Ok(state)
    }

    /// Vacuum of `n_modes` modes: zero mean, covariance diag(1/2, ...).
    pub fn vacuum(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * 0.5,
        }
    }

    /// Single-mode thermal state with mean occupation `n_th`.
    pub fn thermal(n_th: f64) -> Result<Self> {
        if n_th < 0.0 || !n_th.is_finite() {
            return Err(Error::Domain(format!("occupation must be >= 0, got {n_th}")));
        }
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * (n_th + 0.5),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Symplectic eigenvalues of the covariance matrix (one per mode).
    ///
    /// Single mode: ν = √det V. Two modes: from the symplectic invariants
    /// Δ = det A + det B + 2 det C, ν±² = (Δ ± √(Δ² − 4 det V))/2.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        match self.n_modes() {
            1 => {
                let det = self.cov[(0, 0)] * self.cov[(1, 1)] - self.cov[(0, 1)] * self.cov[(1, 0)];
                vec![det.max(0.0).sqrt()]
            }
            _ => {
                let v = &self.cov;
                let det2 = |a: f64, b: f64, c: f64, d: f64| a * d - b * c;
                let det_a = det2(v[(0, 0)], v[(0, 1)], v[(1, 0)], v[(1, 1)]);
                let det_b = det2(v[(2, 2)], v[(2, 3)], v[(3, 2)], v[(3, 3)]);
                let det_c = det2(v[(0, 2)], v[(0, 3)], v[(1, 2)], v[(1, 3)]);
                let det_v = v.determinant();
                let delta = det_a + det_b + 2.0 * det_c;
                let disc = (delta * delta - 4.0 * det_v).max(0.0).sqrt();
                let nu_plus = ((delta + disc) * 0.5).max(0.0).sqrt();
                let nu_minus = ((delta - disc) * 0.5).max(0.0).sqrt();
                vec![nu_minus, nu_plus]
            }
        }
    }

    /// Tensor product: `self` becomes mode 1, `other` mode 2.
    pub fn tensor(&self, other: &GaussianState) -> Result<GaussianState> {
        if self.n_modes() + other.n_modes() != 2 {
            return Err(Error::ModeCount { expected: 2, got: self.n_modes() + other.n_modes() });
        }
        let mut mean = DVector::zeros(4);
        mean.rows_mut(0, 2).copy_from(&self.mean);
        mean.rows_mut(2, 2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(4, 4);
        cov.view_mut((0, 0), (2, 2)).copy_from(&self.cov);
        cov.view_mut((2, 2), (2, 2)).copy_from(&other.cov);
        Ok(GaussianState { mean, cov })
    }

    /// Marginal of one mode of a two-mode state (`mode` is 0 or 1).
    pub fn marginal(&self, mode: usize) -> Result<GaussianState> {
        if self.n_modes() != 2 {
            return Err(Error::ModeCount { expected: 2, got: self.n_modes() });
        }
        if mode > 1 {
            return Err(Error::Domain(format!("mode index must be 0 or 1, got {mode}")));
        }
        let off = 2 * mode;
        Ok(GaussianState {
            mean: self.mean.rows(off, 2).into_owned(),
            cov: self.cov.view((off, off), (2, 2)).into_owned(),
        })
    }

    /// Non-central complex moments ⟨â⟩, ⟨â²⟩, ⟨â†â⟩ of a single-mode state.
    pub fn complex_moments(&self) -> Result<ComplexMoments> {
        self.require_modes(1)?;
        let (mx, mp) = (self.mean[0], self.mean[1]);
        let xx = self.cov[(0, 0)] + mx * mx;
        let pp = self.cov[(1, 1)] + mp * mp;
        let xp = self.cov[(0, 1)] + mx * mp;
        Ok(ComplexMoments {
            alpha: Complex64::new(mx, mp) / f64::sqrt(2.0),
            a_sq: Complex64::new((xx - pp) * 0.5, xp),
            occupation: (xx + pp) * 0.5 - 0.5,
        })
    }

    /// Rebuilds a single-mode state from non-central complex moments.
    pub fn from_complex_moments(m: &ComplexMoments) -> Result<GaussianState> {
        let mx = f64::sqrt(2.0) * m.alpha.re;
        let mp = f64::sqrt(2.0) * m.alpha.im;
        let xx = m.occupation + 0.5 + m.a_sq.re;
        let pp = m.occupation + 0.5 - m.a_sq.re;
        let xp = m.a_sq.im;
        let mean = DVector::from_vec(vec![mx, mp]);
        let cov = DMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => xx - mx * mx,
            (1, 1) => pp - mp * mp,
            _ => xp - mx * mp,
        });
        GaussianState::new(mean, cov)
    }

    fn require_modes(&self, n: usize) -> Result<()> {
        if self.n_modes() != n {
            return Err(Error::ModeCount { expected: n, got: self.n_modes() });
        }
        Ok(())
    }
}

/// Non-central single-mode moments ⟨â⟩, ⟨â²⟩ and ⟨â†â⟩.
#[derive(Debug, Clone, Copy)]
pub struct ComplexMoments {
    pub alpha: Complex64,
    pub a_sq: Complex64,
    pub occupation: f64,
}

/// A single-mode Gaussian unitary, possibly a composition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianUnitary {
    Identity,
    Squeeze(SqueezeParams),
    Rotation { phi: f64 },
    Displacement { dx: f64, dp: f64 },
    Sequence { ops: Vec<GaussianUnitary> },
}

impl GaussianUnitary {
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        match self {
            GaussianUnitary::Identity => Ok(state.clone()),
            GaussianUnitary::Squeeze(sq) => apply_squeeze(state, sq),
            GaussianUnitary::Rotation { phi } => apply_rotation(state, *phi),
            GaussianUnitary::Displacement { dx, dp } => apply_displacement(state, *dx, *dp),
            GaussianUnitary::Sequence { ops } => {
                let mut s = state.clone();
                for op in ops {
                    s = op.apply(&s)?;
                }
                Ok(s)
            }
        }
    }
}

/// Symplectic matrix of the squeeze unitary acting on a state,
/// mean → S mean, cov → S cov Sᵀ.
fn squeeze_symplectic(sq: &SqueezeParams) -> DMatrix<f64> {
    let (c, s) = (sq.r.cosh(), sq.r.sinh());
    let (ct, st) = (sq.theta.cos(), sq.theta.sin());
    DMatrix::from_row_slice(2, 2, &[c - s * ct, -s * st, -s * st, c + s * ct])
}

fn congruence(state: &GaussianState, s: &DMatrix<f64>) -> GaussianState {
    GaussianState {
        mean: s * &state.mean,
        cov: s * &state.cov * s.transpose(),
    }
}

/// Constructs the squeezed thermal state Ŝ e^{−βĤ}/Z Ŝ† of one mode.
///
/// Zero mean; the quadrature variance at phase θ/2 is e^{−2r}(n_th + 1/2)
/// and the conjugate one e^{+2r}(n_th + 1/2), with n_th = (e^{βω} − 1)⁻¹.
pub fn make_squeezed_thermal(beta: f64, mode: &ModeSpec, sq: &SqueezeParams) -> Result<GaussianState> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::Domain(format!("inverse temperature must be > 0, got {beta}")));
    }
    let n_th = thermal_occupation(beta, mode.omega());
    let nu = n_th + 0.5;
    // S(r,θ) S(r,θ)ᵀ = S(2r,θ): same principal axes, doubled rapidity.
    let doubled = SqueezeParams { r: 2.0 * sq.r, theta: sq.theta };
    Ok(GaussianState {
        mean: DVector::zeros(2),
        cov: squeeze_symplectic(&doubled) * nu,
    })
}

/// Mean thermal occupation (e^{βω} − 1)⁻¹.
pub fn thermal_occupation(beta: f64, omega: f64) -> f64 {
    1.0 / f64::exp_m1(beta * omega)
}

/// Applies the squeeze unitary Ŝ(r, θ) to a single-mode state.
pub fn apply_squeeze(state: &GaussianState, sq: &SqueezeParams) -> Result<GaussianState> {
    state.require_modes(1)?;
    Ok(congruence(state, &squeeze_symplectic(sq)))
}

/// Applies the phase rotation e^{−iφ â†â} to a single-mode state.
pub fn apply_rotation(state: &GaussianState, phi: f64) -> Result<GaussianState> {
    state.require_modes(1)?;
    let (c, s) = (phi.cos(), phi.sin());
    let rot = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
    Ok(congruence(state, &rot))
}

/// Displaces a single-mode state by (dx, dp) in phase space.
pub fn apply_displacement(state: &GaussianState, dx: f64, dp: f64) -> Result<GaussianState> {
    state.require_modes(1)?;
    let mut out = state.clone();
    out.mean[0] += dx;
    out.mean[1] += dp;
    Ok(out)
}

/// Applies the beam-splitter unitary generated by iħg(âb̂† − â†b̂) for time τ
/// to a two-mode state, with `angle` = gτ. The map rotates the two modes into
/// each other by `angle` in each quadrature pair and conserves total photon
/// number on resonance.
pub fn apply_beam_splitter(state: &GaussianState, angle: f64) -> Result<GaussianState> {
    state.require_modes(2)?;
    let (c, s) = (angle.cos(), angle.sin());
    #[rustfmt::skip]
    let bs = DMatrix::from_row_slice(4, 4, &[
         c, 0.0,  -s, 0.0,
        0.0,  c, 0.0,  -s,
         s, 0.0,   c, 0.0,
        0.0,  s, 0.0,   c,
    ]);
    Ok(congruence(state, &bs))
}

/// Mean energy ω⟨â†â⟩ = ω[(⟨x̂²⟩ + ⟨p̂²⟩)/2 − 1/2] of a single-mode state
/// (second moments about zero).
pub fn mean_energy(state: &GaussianState, mode: &ModeSpec) -> Result<f64> {
    let m = state.complex_moments()?;
    Ok(mode.omega() * m.occupation)
}

/// Second-order quadrature asymmetry ⟨𝒜̂⟩ = (ω/2)(⟨p̂²_{θ/2}⟩ − ⟨x̂²_{θ/2}⟩),
/// second moments about zero, equal to −ω Re(e^{−iθ}⟨â²⟩).
pub fn asymmetry(state: &GaussianState, mode: &ModeSpec, theta: f64) -> Result<f64> {
    let m = state.complex_moments()?;
    let phase = Complex64::from_polar(1.0, -theta);
    Ok(-mode.omega() * (phase * m.a_sq).re)
}

/// Variance of the quadrature x̂_φ = cos φ x̂ + sin φ p̂ of a single-mode state.
pub fn quadrature_variance(state: &GaussianState, phi: f64) -> Result<f64> {
    state.require_modes(1)?;
    let (c, s) = (phi.cos(), phi.sin());
    let v = &state.cov;
    Ok(c * c * v[(0, 0)] + 2.0 * c * s * v[(0, 1)] + s * s * v[(1, 1)])
}

/// Von Neumann entropy in nats from the symplectic eigenvalues:
/// S = Σ_k (ν_k + 1/2) ln(ν_k + 1/2) − (ν_k − 1/2) ln(ν_k − 1/2).
pub fn entropy_gaussian(state: &GaussianState) -> Result<f64> {
    let mut total = 0.0;
    for nu in state.symplectic_eigenvalues() {
        if nu < 0.5 - UNPHYSICAL_TOL {
            return Err(Error::Unphysical { nu });
        }
        total += binary_entropy_term(nu);
    }
    Ok(total)
}

fn binary_entropy_term(nu: f64) -> f64 {
    let x = nu - 0.5;
    if x < PURITY_CUTOFF {
        return 0.0;
    }
    (nu + 0.5) * (nu + 0.5).ln() - x * x.ln()
}

/// Unsqueezed-frame moments (⟨R̂⟩, ⟨R̂²⟩, ⟨R̂†R̂⟩), non-central, with
/// R̂ = â cosh r + â† sinh r e^{iθ}.
pub fn dressed_moments(m: &ComplexMoments, sq: &SqueezeParams) -> DressedMoments {
    let (c, s) = (sq.r.cosh(), sq.r.sinh());
    let phase = Complex64::from_polar(1.0, sq.theta);
    let rho = c * m.alpha + s * phase * m.alpha.conj();
    let r_sq = c * c * m.a_sq + s * s * phase * phase * m.a_sq.conj()
        + c * s * phase * (2.0 * m.occupation + 1.0);
    let occ = (c * c + s * s) * m.occupation + s * s
        + 2.0 * c * s * (phase.conj() * m.a_sq).re;
    DressedMoments { rho, r_sq, occupation: occ }
}

/// Inverse of [`dressed_moments`], using â = R̂ cosh r − R̂† sinh r e^{iθ}.
pub fn undress_moments(d: &DressedMoments, sq: &SqueezeParams) -> ComplexMoments {
    let (c, s) = (sq.r.cosh(), sq.r.sinh());
    let phase = Complex64::from_polar(1.0, sq.theta);
    let alpha = c * d.rho - s * phase * d.rho.conj();
    let a_sq = c * c * d.r_sq + s * s * phase * phase * d.r_sq.conj()
        - c * s * phase * (2.0 * d.occupation + 1.0);
    let occupation = (c * c + s * s) * d.occupation + s * s
        - 2.0 * c * s * (phase.conj() * d.r_sq).re;
    ComplexMoments { alpha, a_sq, occupation }
}

/// Moments in the frame where the reservoir looks thermal.
#[derive(Debug, Clone, Copy)]
pub struct DressedMoments {
    pub rho: Complex64,
    pub r_sq: Complex64,
    pub occupation: f64,
}

/// Occupation ⟨R̂†R̂⟩ of a single-mode state in the reservoir's unsqueezed frame.
pub fn dressed_occupation(state: &GaussianState, sq: &SqueezeParams) -> Result<f64> {
    Ok(dressed_moments(&state.complex_moments()?, sq).occupation)
}

/// Exact state at time t of a single-mode Gaussian state relaxing in the
/// squeezed thermal environment described by `res`, via the closed-form
/// moment decay
///
///   ⟨R̂⟩_t = e^{−γt/2} ⟨R̂⟩_0,
///   ⟨R̂²⟩_t = e^{−γt} ⟨R̂²⟩_0,
///   ⟨R̂†R̂⟩_t = n_th + e^{−γt} (⟨R̂†R̂⟩_0 − n_th).
pub fn relax_moments_analytic(initial: &GaussianState, res: &ReservoirSpec, t: f64) -> Result<GaussianState> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let sq = res.sq();
    let mut d = dressed_moments(&initial.complex_moments()?, &sq);
    let decay = (-res.gamma() * t).exp();
    d.rho *= decay.sqrt();
    d.r_sq *= decay;
    d.occupation = res.n_th() + decay * (d.occupation - res.n_th());
    GaussianState::from_complex_moments(&undress_moments(&d, &sq))
}
