//! Monte-Carlo repeated-interaction model of the squeezed thermal reservoir.
//!
//! The system mode collides at exponentially distributed times (rate 𝓡) with
//! fresh ancilla modes prepared in the same squeezed thermal state, one at a
//! time, through the exact beam-splitter unitary generated by
//! iħg(âb̂† − â†b̂) over a collision of duration τ. No perturbative expansion
//! is made: the Lindblad limit γ = 𝓡(gτ)² is a *measured* limit of the model
//! as gτ → 0, and the reservoir entropy bookkeeping ΔS_R ≈ −ΔΦ is checked
//! collision by collision.
//!
//! Each collision multiplies the dressed-frame occupation gap by cos²(gτ)
//! exactly, so the ensemble decay is exponential with rate 𝓡 sin²(gτ); its
//! first-order deviation from γ is (gτ)²/3.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    apply_beam_splitter, dressed_occupation, entropy_gaussian, make_squeezed_thermal, mean_energy,
    quadrature_variance, GaussianState, SqueezeParams,
};
use crate::reservoir::ReservoirSpec;

/// Perturbative-regime cap on gτ and 𝓡τ.
pub const REGIME_CAP: f64 = 0.1;

/// Compensated (Kahan) accumulator; order-independent aggregation relies on
/// summing per-trajectory results in index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Parameters of one collisional run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionConfig {
    coupling: f64,
    duration: f64,
    rate: f64,
    n_collisions: usize,
    seed: u64,
    ancilla: ReservoirSpec,
}

impl CollisionConfig {
    /// Builds a configuration, enforcing gτ ≤ 0.1 and 𝓡τ ≤ 0.1. The ancilla
    /// reservoir spec carries the effective decay rate γ = 𝓡(gτ)².
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        coupling: f64,
        duration: f64,
        rate: f64,
        n_collisions: usize,
        seed: u64,
        beta: f64,
        omega: f64,
        sq: SqueezeParams,
    ) -> Result<Self> {
        for (name, v) in [("coupling", coupling), ("duration", duration), ("rate", rate)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Domain(format!("collision {name} must be > 0, got {v}")));
            }
        }
        let g_tau = coupling * duration;
        if g_tau > REGIME_CAP {
            return Err(Error::Regime(format!(
                "g*tau = {g_tau} exceeds the perturbative cap {REGIME_CAP}"
            )));
        }
        if rate * duration > REGIME_CAP {
            return Err(Error::Regime(format!(
                "rate*tau = {} exceeds the non-overlap cap {REGIME_CAP}",
                rate * duration
            )));
        }
        let gamma_eff = rate * g_tau * g_tau;
        let ancilla = ReservoirSpec::new(beta, omega, sq, gamma_eff)?;
        Ok(Self {
            coupling,
            duration,
            rate,
            n_collisions,
            seed,
            ancilla,
        })
    }

    /// Convenience constructor fixing the target γ and gτ: τ is set by the
    /// non-overlap cap 𝓡τ = 0.1.
    pub fn from_gamma(
        gamma: f64,
        g_tau: f64,
        n_collisions: usize,
        seed: u64,
        beta: f64,
        omega: f64,
        sq: SqueezeParams,
    ) -> Result<Self> {
        if g_tau <= 0.0 || gamma <= 0.0 || !g_tau.is_finite() || !gamma.is_finite() {
            return Err(Error::Domain("gamma and g_tau must be > 0".into()));
        }
        let rate = gamma / (g_tau * g_tau);
        let duration = REGIME_CAP / rate;
        let coupling = g_tau / duration;
        Self::new(coupling, duration, rate, n_collisions, seed, beta, omega, sq)
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn n_collisions(&self) -> usize {
        self.n_collisions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn g_tau(&self) -> f64 {
        self.coupling * self.duration
    }

    /// Effective Lindblad decay rate γ = 𝓡(gτ)².
    pub fn effective_gamma(&self) -> f64 {
        self.ancilla.gamma()
    }

    /// The ancilla preparation (β, ω, r, θ) with γ set to the effective rate.
    pub fn ancilla(&self) -> &ReservoirSpec {
        &self.ancilla
    }
}

/// One recorded collision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub index: usize,
    pub time: f64,
    pub occupation_before: f64,
    pub occupation_after: f64,
    /// ⟨R̂†R̂⟩ after the collision (the exponentially decaying observable).
    pub dressed_occupation_after: f64,
    pub var_squeezed_after: f64,
    pub var_antisqueezed_after: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub asymmetry_before: f64,
    pub asymmetry_after: f64,
    pub ancilla_entropy_after: f64,
    pub ancilla_energy_after: f64,
}

/// Full record of one trajectory.
#[derive(Debug, Clone)]
pub struct CollisionTrace {
    pub records: Vec<CollisionRecord>,
    pub initial: GaussianState,
    pub final_state: GaussianState,
    pub ancilla_entropy_before: f64,
    pub ancilla_energy_before: f64,
    /// Σ_k ΔS_R^(k), compensated.
    pub sum_ancilla_entropy_change: f64,
    /// Φ accumulated from the entropy-flow state functions along the trajectory.
    pub entropy_flow: f64,
    pub total_time: f64,
}

/// Runs the collisional model with the config's seed (stream 0).
pub fn run_collisions(initial: &GaussianState, cfg: &CollisionConfig) -> Result<CollisionTrace> {
    run_collisions_stream(initial, cfg, 0)
}

/// Runs one trajectory on an independent RNG stream; identical seeds and
/// streams give identical traces.
pub fn run_collisions_stream(
    initial: &GaussianState,
    cfg: &CollisionConfig,
    stream: u64,
) -> Result<CollisionTrace> {
    if initial.n_modes() != 1 {
        return Err(Error::ModeCount { expected: 1, got: initial.n_modes() });
    }
    let res = cfg.ancilla();
    let mode = res.mode();
    let sq = res.sq();
    let theta = res.theta();
    let ancilla = make_squeezed_thermal(res.beta(), &mode, &sq)?;
    let ancilla_entropy = entropy_gaussian(&ancilla)?;
    let ancilla_energy = mean_energy(&ancilla, &mode)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let angle = cfg.g_tau();
    let (cosh2r, sinh2r) = ((2.0 * res.r()).cosh(), (2.0 * res.r()).sinh());

    let mut state = initial.clone();
    let mut t = 0.0;
    let mut records = Vec::with_capacity(cfg.n_collisions);
    let mut sum_dsr = KahanSum::default();
    let mut phi = KahanSum::default();

    for index in 0..cfg.n_collisions {
        let u: f64 = rng.random();
        t += -f64::ln_1p(-u) / cfg.rate;

        let energy_before = mean_energy(&state, &mode)?;
        let asym_before = crate::gaussian::asymmetry(&state, &mode, theta)?;
        let occ_before = energy_before / mode.omega();

        let joint = state.tensor(&ancilla)?;
        let mixed = apply_beam_splitter(&joint, angle)?;
        state = mixed.marginal(0)?;
        let ancilla_after = mixed.marginal(1)?;

        let energy_after = mean_energy(&state, &mode)?;
        let asym_after = crate::gaussian::asymmetry(&state, &mode, theta)?;
        let anc_entropy_after = entropy_gaussian(&ancilla_after)?;

        sum_dsr.add(anc_entropy_after - ancilla_entropy);
        phi.add(res.beta() * (cosh2r * (energy_after - energy_before) - sinh2r * (asym_after - asym_before)));

        records.push(CollisionRecord {
            index,
            time: t,
            occupation_before: occ_before,
            occupation_after: energy_after / mode.omega(),
            dressed_occupation_after: dressed_occupation(&state, &sq)?,
            var_squeezed_after: quadrature_variance(&state, theta / 2.0)?,
            var_antisqueezed_after: quadrature_variance(&state, theta / 2.0 + std::f64::consts::FRAC_PI_2)?,
            energy_before,
            energy_after,
            asymmetry_before: asym_before,
            asymmetry_after: asym_after,
            ancilla_entropy_after: anc_entropy_after,
            ancilla_energy_after: mean_energy(&ancilla_after, &mode)?,
        });
    }

    Ok(CollisionTrace {
        records,
        initial: initial.clone(),
        final_state: state,
        ancilla_entropy_before: ancilla_entropy,
        ancilla_energy_before: ancilla_energy,
        sum_ancilla_entropy_change: sum_dsr.value(),
        entropy_flow: phi.value(),
        total_time: t,
    })
}

/// Collision kernel on bare moments: given the system (mean, cov) and the
/// fresh-ancilla covariance B₀, rotating by `angle` gives
/// A' = c²A + s²B₀, B' = s²A + c²B₀, C' = cs(A − B₀), m₁' = c m₁, m₂' = s m₁.
/// Used by the ensemble paths; equal to tensor → beam splitter → marginal.
#[derive(Debug, Clone)]
struct FastCollider {
    cos: f64,
    sin: f64,
    anc_cov: Matrix2<f64>,
}

impl FastCollider {
    fn new(cfg: &CollisionConfig) -> Result<Self> {
        let res = cfg.ancilla();
        let ancilla = make_squeezed_thermal(res.beta(), &res.mode(), &res.sq())?;
        let anc_cov = Matrix2::new(
            ancilla.cov()[(0, 0)],
            ancilla.cov()[(0, 1)],
            ancilla.cov()[(1, 0)],
            ancilla.cov()[(1, 1)],
        );
        Ok(Self {
            cos: cfg.g_tau().cos(),
            sin: cfg.g_tau().sin(),
            anc_cov,
        })
    }

    /// Updates the system in place; returns the ancilla marginal after.
    fn collide(&self, mean: &mut Vector2<f64>, cov: &mut Matrix2<f64>) -> (Vector2<f64>, Matrix2<f64>) {
        let (c, s) = (self.cos, self.sin);
        let a = *cov;
        let b0 = self.anc_cov;
        *cov = a * (c * c) + b0 * (s * s);
        let anc_cov_after = a * (s * s) + b0 * (c * c);
        let anc_mean_after = *mean * s;
        *mean *= c;
        (anc_mean_after, anc_cov_after)
    }
}

fn moments_of(state: &GaussianState) -> (Vector2<f64>, Matrix2<f64>) {
    (
        Vector2::new(state.mean()[0], state.mean()[1]),
        Matrix2::new(
            state.cov()[(0, 0)],
            state.cov()[(0, 1)],
            state.cov()[(1, 0)],
            state.cov()[(1, 1)],
        ),
    )
}

/// ⟨R̂†R̂⟩ from bare (mean, cov) moments.
fn dressed_occupation_fast(mean: &Vector2<f64>, cov: &Matrix2<f64>, sq: &SqueezeParams) -> f64 {
    let (c, s) = (sq.r().cosh(), sq.r().sinh());
    let (ct, st) = (sq.theta().cos(), sq.theta().sin());
    let xx = cov[(0, 0)] + mean.x * mean.x;
    let pp = cov[(1, 1)] + mean.y * mean.y;
    let xp = cov[(0, 1)] + mean.x * mean.y;
    let occ = 0.5 * (xx + pp) - 0.5;
    // 2 Re(e^{−iθ}⟨â²⟩) with ⟨â²⟩ = (xx − pp)/2 + i xp.
    let re_a2 = 0.5 * (xx - pp);
    let two_re = 2.0 * (ct * re_a2 + st * xp);
    (c * c + s * s) * occ + s * s + c * s * two_re
}

/// One trajectory's dressed occupation sampled on `grid` times (the state is
/// piecewise constant between collisions). Runs until the grid is exhausted.
fn trajectory_on_grid(
    initial: &GaussianState,
    cfg: &CollisionConfig,
    stream: u64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let collider = FastCollider::new(cfg)?;
    let sq = cfg.ancilla().sq();
    let (mut mean, mut cov) = moments_of(initial);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let mut out = Vec::with_capacity(grid.len());
    let mut current = dressed_occupation_fast(&mean, &cov, &sq);
    let mut draw_wait = move || {
        let u: f64 = rng.random();
        -f64::ln_1p(-u) / cfg.rate
    };
    let mut t_next = draw_wait();
    for &t_k in grid {
        // Apply every collision occurring up to the sample time; the state
        // is piecewise constant in between.
        while t_next <= t_k {
            collider.collide(&mut mean, &mut cov);
            current = dressed_occupation_fast(&mean, &cov, &sq);
            t_next += draw_wait();
        }
        out.push(current);
    }
    Ok(out)
}

/// Ensemble-mean dressed occupation on a fixed time grid, averaged over
/// `n_trajectories` independent streams; aggregation is in stream order.
pub fn ensemble_mean_dressed_occupation(
    initial: &GaussianState,
    cfg: &CollisionConfig,
    n_trajectories: usize,
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    (0..n_trajectories as u64)
        .into_par_iter()
        .map(|stream| trajectory_on_grid(initial, cfg, stream, grid))
        .collect()
}

/// Least-squares exponential fit of one decay curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub g_tau: f64,
    pub fitted_rate: f64,
    /// Batch-means standard error of the fitted rate.
    pub std_error: f64,
    pub r_squared: f64,
    pub relative_deviation: f64,
    pub regime_warning: bool,
}

/// Configuration of the Lindblad-limit convergence study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitCheckConfig {
    pub gamma: f64,
    pub beta: f64,
    pub omega: f64,
    pub sq: SqueezeParams,
    pub seed: u64,
    pub n_trajectories: usize,
    /// Total simulated time per trajectory, in units of 1/γ.
    pub gamma_t_final: f64,
    pub g_tau_values: Vec<f64>,
    pub n_grid: usize,
}

impl LimitCheckConfig {
    pub fn standard(gamma: f64, beta: f64, omega: f64, sq: SqueezeParams, seed: u64) -> Self {
        Self {
            gamma,
            beta,
            omega,
            sq,
            seed,
            n_trajectories: 1024,
            gamma_t_final: 2.0,
            g_tau_values: vec![0.1, 0.05, 0.025],
            n_grid: 80,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitCheckReport {
    pub gamma: f64,
    pub fits: Vec<RateFit>,
}

fn fit_log_slope(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    // Returns (slope, r_squared) of ln|values| against times.
    let mut xs = Vec::with_capacity(times.len());
    let mut ys = Vec::with_capacity(times.len());
    for (&t, &v) in times.iter().zip(values) {
        if v.abs() > 0.0 {
            xs.push(t);
            ys.push(v.abs().ln());
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_sq = (sxy * sxy) / (sxx * syy);
    Some((slope, r_sq))
}

/// Runs ensembles at each gτ with γ held fixed (adjusting 𝓡 and τ), fits the
/// decay of ⟨R̂†R̂⟩ − n_th to an exponential, and reports the fitted rate, its
/// deviation from γ and the batch-means statistical error. The fitted rates
/// converge to γ as gτ → 0 (the exact ensemble rate is 𝓡 sin²(gτ)).
pub fn lindblad_limit_check(cfg: &LimitCheckConfig, initial: &GaussianState) -> Result<LimitCheckReport> {
    if cfg.n_trajectories < 8 {
        return Err(Error::Domain("need at least 8 trajectories for batch statistics".into()));
    }
    let n_th = crate::gaussian::thermal_occupation(cfg.beta, cfg.omega);
    let t_final = cfg.gamma_t_final / cfg.gamma;
    let grid: Vec<f64> = (1..=cfg.n_grid)
        .map(|k| t_final * k as f64 / cfg.n_grid as f64)
        .collect();

    let mut fits = Vec::with_capacity(cfg.g_tau_values.len());
    for &g_tau in &cfg.g_tau_values {
        let run_cfg = CollisionConfig::from_gamma(cfg.gamma, g_tau, 0, cfg.seed, cfg.beta, cfg.omega, cfg.sq)?;
        let per_traj = ensemble_mean_dressed_occupation(initial, &run_cfg, cfg.n_trajectories, &grid)?;

        // Deterministic mean over trajectories in index order.
        let mut mean_curve = vec![KahanSum::default(); grid.len()];
        for traj in &per_traj {
            for (acc, &v) in mean_curve.iter_mut().zip(traj) {
                acc.add(v);
            }
        }
        let inv_n = 1.0 / cfg.n_trajectories as f64;
        let gap: Vec<f64> = mean_curve.iter().map(|acc| acc.value() * inv_n - n_th).collect();
        let (slope, r_squared) =
            fit_log_slope(&grid, &gap).ok_or_else(|| Error::Regime("degenerate decay curve".into()))?;
        let fitted_rate = -slope;

        // Batch means over 8 contiguous trajectory blocks.
        let n_batches = 8;
        let batch = cfg.n_trajectories / n_batches;
        let mut batch_rates = Vec::with_capacity(n_batches);
        for b in 0..n_batches {
            let mut curve = vec![KahanSum::default(); grid.len()];
            for traj in per_traj.iter().skip(b * batch).take(batch) {
                for (acc, &v) in curve.iter_mut().zip(traj) {
                    acc.add(v);
                }
            }
            let gap_b: Vec<f64> = curve.iter().map(|acc| acc.value() / batch as f64 - n_th).collect();
            if let Some((s, _)) = fit_log_slope(&grid, &gap_b) {
                batch_rates.push(-s);
            }
        }
        let std_error = if batch_rates.len() >= 2 {
            let m = batch_rates.iter().sum::<f64>() / batch_rates.len() as f64;
            let var = batch_rates.iter().map(|r| (r - m) * (r - m)).sum::<f64>()
                / (batch_rates.len() - 1) as f64;
            (var / batch_rates.len() as f64).sqrt()
        } else {
            f64::NAN
        };

        fits.push(RateFit {
            g_tau,
            fitted_rate,
            std_error,
            r_squared,
            relative_deviation: (fitted_rate - cfg.gamma).abs() / cfg.gamma,
            regime_warning: r_squared < 0.99,
        });
    }
    Ok(LimitCheckReport { gamma: cfg.gamma, fits })
}

/// Reservoir entropy balance of one trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BalanceReport {
    pub sum_ancilla_entropy: f64,
    pub minus_entropy_flow: f64,
    pub discrepancy: f64,
}

/// Compares the accumulated ancilla entropy changes with −Φ from the
/// entropy-flow bookkeeping;
/// the discrepancy is O((gτ)²) relative.
pub fn reservoir_entropy_balance(trace: &CollisionTrace) -> BalanceReport {
    let sum = trace.sum_ancilla_entropy_change;
    let minus_phi = -trace.entropy_flow;
    BalanceReport {
        sum_ancilla_entropy: sum,
        minus_entropy_flow: minus_phi,
        discrepancy: sum - minus_phi,
    }
}

/// Ensemble-averaged entropy balance over independent trajectories.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleBalance {
    pub mean_sum_ancilla_entropy: f64,
    pub mean_minus_entropy_flow: f64,
    pub discrepancy: f64,
    /// Standard error of the per-trajectory discrepancy mean.
    pub std_error: f64,
    pub n_trajectories: usize,
}

pub fn ensemble_entropy_balance(
    initial: &GaussianState,
    cfg: &CollisionConfig,
    n_trajectories: usize,
) -> Result<EnsembleBalance> {
    let per_traj: Vec<Result<(f64, f64)>> = (0..n_trajectories as u64)
        .into_par_iter()
        .map(|stream| {
            let trace = run_collisions_stream(initial, cfg, stream)?;
            Ok((trace.sum_ancilla_entropy_change, -trace.entropy_flow))
        })
        .collect();
    let mut sums = KahanSum::default();
    let mut flows = KahanSum::default();
    let mut disc = Vec::with_capacity(n_trajectories);
    for r in per_traj {
        let (s, f) = r?;
        sums.add(s);
        flows.add(f);
        disc.push(s - f);
    }
    let n = n_trajectories as f64;
    let mean_disc = disc.iter().sum::<f64>() / n;
    let var = disc.iter().map(|d| (d - mean_disc) * (d - mean_disc)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(EnsembleBalance {
        mean_sum_ancilla_entropy: sums.value() / n,
        mean_minus_entropy_flow: flows.value() / n,
        discrepancy: mean_disc,
        std_error: (var / n).sqrt(),
        n_trajectories,
    })
}
