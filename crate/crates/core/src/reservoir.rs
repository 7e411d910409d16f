//! Specification of a squeezed thermal reservoir and its derived moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{make_squeezed_thermal, thermal_occupation, GaussianState, ModeSpec, SqueezeParams};

/// Everything defining the environment of the mode: inverse temperature β,
/// resonance frequency ω, squeezing (r, θ) and coupling rate γ.
///
/// The derived reservoir moments at resonance are exposed read-only:
/// n_th = (e^{βω} − 1)⁻¹, N = n_th cosh 2r + sinh²r and
/// M = −sinh r cosh r (2 n_th + 1) e^{iθ}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReservoirSpec {
    beta: f64,
    omega: f64,
    sq: SqueezeParams,
    gamma: f64,
}

impl ReservoirSpec {
    pub fn new(beta: f64, omega: f64, sq: SqueezeParams, gamma: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("omega", omega), ("gamma", gamma)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Domain(format!("reservoir {name} must be > 0, got {v}")));
            }
        }
        Ok(Self { beta, omega, sq, gamma })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sq(&self) -> SqueezeParams {
        self.sq
    }

    pub fn r(&self) -> f64 {
        self.sq.r()
    }

    pub fn theta(&self) -> f64 {
        self.sq.theta()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Thermal occupation n_th at resonance.
    pub fn n_th(&self) -> f64 {
        thermal_occupation(self.beta, self.omega)
    }

    /// Mean occupation N = n_th cosh 2r + sinh²r of the steady state.
    pub fn mean_occupation(&self) -> f64 {
        let r = self.sq.r();
        self.n_th() * (2.0 * r).cosh() + r.sinh().powi(2)
    }

    /// Squeezing moment M = −sinh r cosh r (2 n_th + 1) e^{iθ}.
    pub fn squeezing_moment(&self) -> Complex64 {
        let r = self.sq.r();
        -r.sinh() * r.cosh() * (2.0 * self.n_th() + 1.0) * Complex64::from_polar(1.0, self.sq.theta())
    }

    /// Steady-state values ⟨Ĥ⟩_π = ωN and ⟨𝒜̂⟩_π = ω|M|.
    pub fn steady_energy(&self) -> f64 {
        self.omega * self.mean_occupation()
    }

    pub fn steady_asymmetry(&self) -> f64 {
        self.omega * self.squeezing_moment().norm()
    }

    pub fn mode(&self) -> ModeSpec {
        ModeSpec::new(self.omega).expect("validated at construction")
    }

    /// The Gaussian steady state π = Ŝ e^{−βĤ}/Z Ŝ†.
    pub fn steady_state_gaussian(&self) -> GaussianState {
        make_squeezed_thermal(self.beta, &self.mode(), &self.sq).expect("validated at construction")
    }
}
