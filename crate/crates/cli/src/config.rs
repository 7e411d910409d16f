//! Run configurations: one JSON document per run, strict about unknown keys,
//! fully validated into domain types before any computation starts.

use serde::{Deserialize, Serialize};

use sqtherm::fock::{self, FockDensityMatrix};
use sqtherm::gaussian::{apply_squeeze, GaussianState};
use sqtherm::otto::{CycleParams, PhaseGrid};
use sqtherm::{Error, ReservoirSpec, Result, SqueezeParams};

/// Reservoir parameters as they appear in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub beta: f64,
    pub omega: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
    pub gamma: f64,
}

impl ReservoirConfig {
    pub fn build(&self) -> Result<ReservoirSpec> {
        ReservoirSpec::new(self.beta, self.omega, SqueezeParams::new(self.r, self.theta)?, self.gamma)
    }
}

/// Initial states selectable from configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    Vacuum,
    Thermal { n_th: f64 },
    SqueezedThermal { n_th: f64, r: f64, theta: f64 },
    Fock { n: usize },
    /// The Fock-basis diagonal of the reservoir steady state.
    DephasedSteadyState,
}

impl InitialStateConfig {
    pub fn is_gaussian(&self) -> bool {
        matches!(
            self,
            InitialStateConfig::Vacuum
                | InitialStateConfig::Thermal { .. }
                | InitialStateConfig::SqueezedThermal { .. }
        )
    }

    pub fn gaussian(&self) -> Result<GaussianState> {
        match self {
            InitialStateConfig::Vacuum => Ok(GaussianState::vacuum(1)),
            InitialStateConfig::Thermal { n_th } => GaussianState::thermal(*n_th),
            InitialStateConfig::SqueezedThermal { n_th, r, theta } => apply_squeeze(
                &GaussianState::thermal(*n_th)?,
                &SqueezeParams::new(*r, *theta)?,
            ),
            other => Err(Error::Domain(format!(
                "initial state {other:?} has no Gaussian representation"
            ))),
        }
    }

    pub fn fock(&self, dim: usize, res: &ReservoirSpec) -> Result<FockDensityMatrix> {
        match self {
            InitialStateConfig::Vacuum => Ok(FockDensityMatrix::vacuum(dim)),
            InitialStateConfig::Thermal { n_th } => FockDensityMatrix::thermal(dim, *n_th),
            InitialStateConfig::SqueezedThermal { n_th, r, theta } => {
                fock::squeezed_thermal_fock(dim, *n_th, &SqueezeParams::new(*r, *theta)?)
            }
            InitialStateConfig::Fock { n } => FockDensityMatrix::fock_state(dim, *n),
            InitialStateConfig::DephasedSteadyState => {
                Ok(fock::steady_state_fock(dim, res)?.diagonal_part())
            }
        }
    }

    /// Truncation adequate for both the initial state and the steady state.
    pub fn resolve_dim(&self, res: &ReservoirSpec, requested: Option<usize>) -> usize {
        if let Some(d) = requested {
            return d;
        }
        let base = fock::default_dim(res);
        match self {
            InitialStateConfig::SqueezedThermal { n_th, r, .. } => {
                // The squeeze axes of the state and the reservoir can differ,
                // so size for the combined rapidity.
                base.max(fock::tail_dim(*n_th, r + res.r(), 1e-10))
            }
            InitialStateConfig::Thermal { n_th } => base.max(fock::tail_dim(*n_th, res.r(), 1e-10)),
            InitialStateConfig::Fock { n } => base.max(4 * (n + 2)),
            _ => base,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxConfig {
    pub reservoir: ReservoirConfig,
    #[serde(default = "default_initial")]
    pub initial_state: InitialStateConfig,
    /// Duration in units of 1/γ.
    #[serde(default = "default_gamma_t")]
    pub gamma_t_final: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Fock truncation override.
    #[serde(default)]
    pub dim: Option<usize>,
}

fn default_initial() -> InitialStateConfig {
    InitialStateConfig::Vacuum
}

fn default_gamma_t() -> f64 {
    8.0
}

fn default_samples() -> usize {
    200
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            reservoir: ReservoirConfig { beta: 1.0, omega: 1.0, r: 0.5, theta: 0.0, gamma: 1.0 },
            initial_state: default_initial(),
            gamma_t_final: default_gamma_t(),
            n_samples: default_samples(),
            dim: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
}

impl CycleConfig {
    pub fn build(&self) -> Result<CycleParams> {
        CycleParams::new(
            self.beta1,
            self.beta2,
            self.omega1,
            self.omega2,
            SqueezeParams::new(self.r, self.theta)?,
        )
    }
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self { beta1: 1.0, beta2: 0.2, omega1: 1.0, omega2: 3.0, r: 0.5, theta: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_omega1")]
    pub omega1: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "PhaseGrid::standard")]
    pub grid: PhaseGrid,
}

fn default_beta1() -> f64 {
    1.0
}

fn default_beta2() -> f64 {
    0.2
}

fn default_omega1() -> f64 {
    1.0
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self {
            beta1: default_beta1(),
            beta2: default_beta2(),
            omega1: default_omega1(),
            theta: 0.0,
            grid: PhaseGrid::standard(),
        }
    }
}

impl PhaseDiagramConfig {
    pub fn validate(&self) -> Result<()> {
        // The grid itself is validated by constructing one corner point.
        CycleParams::new(
            self.beta1,
            self.beta2,
            self.omega1,
            self.omega1.max(self.grid.omega2_min),
            SqueezeParams::new(self.grid.r_min, self.theta)?,
        )?;
        if self.grid.n_omega2 < 2 || self.grid.n_r < 2 {
            return Err(Error::Domain("grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiguresConfig {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_omega1")]
    pub omega1: f64,
    #[serde(default)]
    pub theta: f64,
}

impl Default for FiguresConfig {
    fn default() -> Self {
        Self { beta1: 1.0, beta2: 0.2, omega1: 1.0, theta: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollideConfig {
    #[serde(default = "default_gamma_small")]
    pub gamma: f64,
    #[serde(default = "default_g_tau")]
    pub g_tau: f64,
    #[serde(default = "default_beta1")]
    pub beta: f64,
    #[serde(default = "default_omega1")]
    pub omega: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_initial")]
    pub initial_state: InitialStateConfig,
    #[serde(default = "default_n_collisions")]
    pub n_collisions: usize,
    #[serde(default = "default_n_trajectories")]
    pub n_trajectories: usize,
    #[serde(default = "default_limit_gamma_t")]
    pub gamma_t_final: f64,
    #[serde(default = "default_g_tau_values")]
    pub g_tau_values: Vec<f64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_gamma_small() -> f64 {
    0.01
}

fn default_g_tau() -> f64 {
    0.1
}

fn default_r() -> f64 {
    0.5
}

fn default_n_collisions() -> usize {
    2000
}

fn default_n_trajectories() -> usize {
    256
}

fn default_limit_gamma_t() -> f64 {
    2.0
}

fn default_g_tau_values() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

fn default_n_grid() -> usize {
    80
}

impl Default for CollideConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma_small(),
            g_tau: default_g_tau(),
            beta: 1.0,
            omega: 1.0,
            r: default_r(),
            theta: 0.0,
            initial_state: default_initial(),
            n_collisions: default_n_collisions(),
            n_trajectories: default_n_trajectories(),
            gamma_t_final: default_limit_gamma_t(),
            g_tau_values: default_g_tau_values(),
            n_grid: default_n_grid(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleReservoirConfig {
    pub beta: f64,
    pub omega: f64,
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_omega1")]
    pub gamma: f64,
    /// The unitary stroke; the optimal unsqueezing when absent.
    #[serde(default)]
    pub unitary: Option<sqtherm::GaussianUnitary>,
}

impl Default for SingleReservoirConfig {
    fn default() -> Self {
        Self { beta: 1.0, omega: 1.0, r: 0.5, theta: 0.0, gamma: 1.0, unitary: None }
    }
}
