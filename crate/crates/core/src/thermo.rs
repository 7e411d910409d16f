//! Thermodynamic bookkeeping for relaxation in a squeezed thermal
//! environment: heat flux Q̇ = Tr[Ĥ ρ̇], asymmetry flux 𝒜̇ = Tr[𝒜̂ ρ̇], the
//! entropy flow Φ̇ = β(cosh 2r Q̇ − sinh 2r 𝒜̇), and the entropy production
//! Σ̇ = Ṡ − Φ̇ ≥ 0, plus the single-reservoir work-extraction protocol.
//!
//! Q, 𝒜 and hence Φ are state functions along pure relaxation (no driving),
//! so cumulative ledgers integrate exactly: Q(t) = U(t) − U(0) and
//! Φ(t) = β[cosh 2r Q(t) − sinh 2r (𝒜(t) − 𝒜(0))], with Σ = ΔS − Φ.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    self, evolve_sampled, steady_state_fock, FockDensityMatrix, LindbladGenerator,
    RelativeEntropyToSteady,
};
use crate::gaussian::{
    self, dressed_moments, entropy_gaussian, relax_moments_analytic, DressedMoments, GaussianState,
    GaussianUnitary,
};
use crate::reservoir::ReservoirSpec;

/// Tolerance on the second law Σ̇ ≥ 0 and ledger consistency checks.
pub const SECOND_LAW_TOL: f64 = 1e-9;
/// Default number of grid intervals per trajectory ledger.
pub const DEFAULT_LEDGER_SAMPLES: usize = 200;

/// Instantaneous rates at one state.
#[derive(Debug, Clone, Copy)]
pub struct Rates {
    /// Ṡ, entropy rate.
    pub entropy: f64,
    /// Q̇, heat flux entering from the reservoir.
    pub heat: f64,
    /// 𝒜̇, asymmetry flux.
    pub asymmetry: f64,
    /// Φ̇ = β(cosh 2r Q̇ − sinh 2r 𝒜̇), entropy flow.
    pub entropy_flow: f64,
    /// Σ̇ = Ṡ − Φ̇, entropy production rate.
    pub entropy_production: f64,
}

/// Closed-form fluxes Q̇ = −γ(U − ωN) and 𝒜̇ = −γ(𝒜 − ω|M|).
#[derive(Debug, Clone, Copy)]
pub struct Fluxes {
    pub heat: f64,
    pub asymmetry: f64,
}

fn flow_and_production(res: &ReservoirSpec, entropy_rate: f64, heat: f64, asymmetry: f64) -> (f64, f64) {
    let two_r = 2.0 * res.r();
    let flow = res.beta() * (two_r.cosh() * heat - two_r.sinh() * asymmetry);
    (flow, entropy_rate - flow)
}

/// Rates on the Gaussian backend, from the closed-form derivatives of the
/// dressed moments. Ṡ follows from dν/dt; at a pure state being heated the
/// entropy rate diverges and +∞ is returned.
pub fn rates_gaussian(state: &GaussianState, res: &ReservoirSpec) -> Result<Rates> {
    let sq = res.sq();
    let m = state.complex_moments()?;
    let d = dressed_moments(&m, &sq);
    let gamma = res.gamma();
    let ddt = DressedMoments {
        rho: -0.5 * gamma * d.rho,
        r_sq: -gamma * d.r_sq,
        occupation: -gamma * (d.occupation - res.n_th()),
    };
    // The inverse moment map is affine; its differential drops the constants.
    let (c, s) = (sq.r().cosh(), sq.r().sinh());
    let phase = Complex64::from_polar(1.0, sq.theta());
    let d_alpha = c * ddt.rho - s * phase * ddt.rho.conj();
    let d_a_sq = c * c * ddt.r_sq + s * s * phase * phase * ddt.r_sq.conj()
        - 2.0 * c * s * phase * ddt.occupation;
    let d_occ = (c * c + s * s) * ddt.occupation - 2.0 * c * s * (phase.conj() * ddt.r_sq).re;

    let heat = res.omega() * d_occ;
    let asym = -res.omega() * (phase.conj() * d_a_sq).re;

    // Central second moments and their derivatives give ν̇ and then Ṡ.
    let u_c = m.a_sq - m.alpha * m.alpha;
    let n_c = m.occupation - m.alpha.norm_sqr();
    let du_c = d_a_sq - 2.0 * m.alpha * d_alpha;
    let dn_c = d_occ - 2.0 * (m.alpha.conj() * d_alpha).re;
    let nu = ((n_c + 0.5) * (n_c + 0.5) - u_c.norm_sqr()).max(0.0).sqrt();
    let entropy_rate = if nu - 0.5 < 1e-12 {
        let dnu_sq = 2.0 * (n_c + 0.5) * dn_c - 2.0 * (u_c.conj() * du_c).re;
        if dnu_sq > 1e-15 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        let dnu = ((n_c + 0.5) * dn_c - (u_c.conj() * du_c).re) / nu;
        ((nu + 0.5) / (nu - 0.5)).ln() * dnu
    };

    let (flow, production) = flow_and_production(res, entropy_rate, heat, asym);
    Ok(Rates {
        entropy: entropy_rate,
        heat,
        asymmetry: asym,
        entropy_flow: flow,
        entropy_production: production,
    })
}

/// The closed-form fluxes Q̇ = −γ(U_S − ωN), 𝒜̇ = −γ(𝒜 − ω|M|); must agree
/// with [`rates_gaussian`] on Gaussian states.
pub fn closed_form_fluxes(state: &GaussianState, res: &ReservoirSpec) -> Result<Fluxes> {
    let mode = res.mode();
    let u = gaussian::mean_energy(state, &mode)?;
    let a = gaussian::asymmetry(state, &mode, res.theta())?;
    Ok(Fluxes {
        heat: -res.gamma() * (u - res.steady_energy()),
        asymmetry: -res.gamma() * (a - res.steady_asymmetry()),
    })
}

/// Rates on the Fock backend. Q̇ and 𝒜̇ are exact traces against ρ̇ = 𝓛ρ;
/// Ṡ is a centered finite difference of the von Neumann entropy over one
/// integrator substep (O(h²) error).
pub fn rates_fock(rho: &FockDensityMatrix, gen: &LindbladGenerator) -> Result<Rates> {
    let res = gen.reservoir();
    let h = (fock::STEP_CAP_GAMMA / res.gamma()).min(gen.stable_step());
    rates_fock_with_step(rho, gen, h)
}

pub fn rates_fock_with_step(rho: &FockDensityMatrix, gen: &LindbladGenerator, h: f64) -> Result<Rates> {
    if rho.dim() != gen.dim() {
        return Err(Error::Dimension(format!(
            "state dim {} does not match generator dim {}",
            rho.dim(),
            gen.dim()
        )));
    }
    let res = gen.reservoir();
    let rho_dot = gen.apply(rho.data());
    let d = rho.dim();
    let mut heat = 0.0;
    let mut tr_a_sq = Complex64::new(0.0, 0.0);
    for i in 0..d {
        heat += i as f64 * rho_dot[(i, i)].re;
        if i + 2 < d {
            tr_a_sq += (((i + 1) * (i + 2)) as f64).sqrt() * rho_dot[(i + 2, i)];
        }
    }
    heat *= res.omega();
    let phase = Complex64::from_polar(1.0, -res.theta());
    let asym = -res.omega() * (phase * tr_a_sq).re;

    let plus = gen.rk4_step(rho.data(), h);
    let minus = gen.rk4_step(rho.data(), -h);
    let entropy_rate = (entropy_of_matrix(&plus) - entropy_of_matrix(&minus)) / (2.0 * h);

    let (flow, production) = flow_and_production(res, entropy_rate, heat, asym);
    Ok(Rates {
        entropy: entropy_rate,
        heat,
        asymmetry: asym,
        entropy_flow: flow,
        entropy_production: production,
    })
}

fn entropy_of_matrix(m: &nalgebra::DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Time series of the thermodynamic state functions along one relaxation:
/// entropy S, cumulative heat Q, asymmetry 𝒜, cumulative entropy flow Φ and
/// cumulative entropy production Σ = ΔS − Φ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoLedger {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub heat: Vec<f64>,
    pub asymmetry: Vec<f64>,
    pub entropy_flow: Vec<f64>,
    pub entropy_production: Vec<f64>,
}

impl ThermoLedger {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks Σ non-decreasing and Σ = (S − S₀) − Φ at every sample.
    pub fn validate(&self) -> Result<()> {
        let s0 = self.entropy.first().copied().unwrap_or(0.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..self.len() {
            let sigma = self.entropy_production[k];
            if sigma < prev - SECOND_LAW_TOL {
                return Err(Error::Inconsistency(format!(
                    "entropy production decreased at sample {k}: {prev} -> {sigma}"
                )));
            }
            let reconstructed = (self.entropy[k] - s0) - self.entropy_flow[k];
            if (sigma - reconstructed).abs() > SECOND_LAW_TOL {
                return Err(Error::Inconsistency(format!(
                    "Sigma[{k}] = {sigma} but (S - S0) - Phi = {reconstructed}"
                )));
            }
            prev = sigma;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn ledger_push(
    ledger: &mut ThermoLedger,
    res: &ReservoirSpec,
    t: f64,
    entropy: f64,
    energy: f64,
    asym: f64,
    energy0: f64,
    asym0: f64,
    entropy0: f64,
) {
    let q = energy - energy0;
    let two_r = 2.0 * res.r();
    let phi = res.beta() * (two_r.cosh() * q - two_r.sinh() * (asym - asym0));
    ledger.times.push(t);
    ledger.entropy.push(entropy);
    ledger.heat.push(q);
    ledger.asymmetry.push(asym);
    ledger.entropy_flow.push(phi);
    ledger.entropy_production.push((entropy - entropy0) - phi);
}

fn empty_ledger(n: usize) -> ThermoLedger {
    ThermoLedger {
        times: Vec::with_capacity(n),
        entropy: Vec::with_capacity(n),
        heat: Vec::with_capacity(n),
        asymmetry: Vec::with_capacity(n),
        entropy_flow: Vec::with_capacity(n),
        entropy_production: Vec::with_capacity(n),
    }
}

/// Exact ledger of a Gaussian state relaxing for time `t_final`, sampled on a
/// uniform grid of `n_samples + 1` points.
pub fn ledger_gaussian(
    initial: &GaussianState,
    res: &ReservoirSpec,
    t_final: f64,
    n_samples: usize,
) -> Result<ThermoLedger> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be >= 1".into()));
    }
    let mode = res.mode();
    let mut ledger = empty_ledger(n_samples + 1);
    let e0 = gaussian::mean_energy(initial, &mode)?;
    let a0 = gaussian::asymmetry(initial, &mode, res.theta())?;
    let s0 = entropy_gaussian(initial)?;
    for k in 0..=n_samples {
        let t = t_final * k as f64 / n_samples as f64;
        let state = relax_moments_analytic(initial, res, t)?;
        let s = entropy_gaussian(&state)?;
        let e = gaussian::mean_energy(&state, &mode)?;
        let a = gaussian::asymmetry(&state, &mode, res.theta())?;
        ledger_push(&mut ledger, res, t, s, e, a, e0, a0, s0);
    }
    Ok(ledger)
}

/// Ledger of a Fock-backend trajectory, with the relative entropy to the
/// steady state and the integrator trace drift alongside.
#[derive(Debug, Clone)]
pub struct FockLedger {
    pub ledger: ThermoLedger,
    pub energy: Vec<f64>,
    pub rel_entropy_to_pi: Vec<f64>,
    pub trace_drift: Vec<f64>,
}

pub fn ledger_fock(
    initial: &FockDensityMatrix,
    gen: &LindbladGenerator,
    t_final: f64,
    n_samples: usize,
) -> Result<FockLedger> {
    let res = gen.reservoir();
    let mode = res.mode();
    let rel_to_pi = RelativeEntropyToSteady::new(gen.dim(), res);
    let traj = evolve_sampled(initial, gen, t_final, f64::INFINITY, n_samples)?;

    let mut ledger = empty_ledger(traj.samples.len());
    let mut energy = Vec::with_capacity(traj.samples.len());
    let mut rel = Vec::with_capacity(traj.samples.len());
    let mut drifts = Vec::with_capacity(traj.samples.len());
    let first = fock::observables(&traj.samples[0].state, &mode, res.theta());
    for sample in &traj.samples {
        let obs = fock::observables(&sample.state, &mode, res.theta());
        ledger_push(
            &mut ledger,
            res,
            sample.t,
            obs.entropy,
            obs.energy,
            obs.asymmetry,
            first.energy,
            first.asymmetry,
            first.entropy,
        );
        energy.push(obs.energy);
        rel.push(rel_to_pi.eval(&sample.state)?);
        drifts.push(sample.trace_drift);
    }
    Ok(FockLedger {
        ledger,
        energy,
        rel_entropy_to_pi: rel,
        trace_drift: drifts,
    })
}

/// Upper bound tanh(2r)·Δ𝒜 on the work extractable in one two-stroke cycle.
pub fn single_reservoir_work_bound(res: &ReservoirSpec, delta_a: f64) -> f64 {
    (2.0 * res.r()).tanh() * delta_a
}

/// Maximum work from one cycle against a single squeezed reservoir, and the
/// entropy produced extracting it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WorkExtraction {
    pub w_max: f64,
    pub entropy_production: f64,
}

/// W_max = ω (2 n_th + 1) sinh²r, reached by the unsqueezing unitary Ŝ†;
/// extracting it produces Σ = β W_max per cycle.
pub fn max_extractable_work(res: &ReservoirSpec) -> WorkExtraction {
    let w = res.omega() * (2.0 * res.n_th() + 1.0) * res.r().sinh().powi(2);
    WorkExtraction {
        w_max: w,
        entropy_production: res.beta() * w,
    }
}

/// Energetics of one two-stroke cycle: a unitary stroke on π, then relaxation
/// back to π.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TwoStrokeReport {
    pub w_out: f64,
    pub heat: f64,
    pub entropy_production: f64,
    pub delta_asymmetry: f64,
    pub bound: f64,
}

/// Runs the two-stroke protocol: W_out = E(π) − E(UπU†), Q = W_out by cycle
/// energy balance, Σ = −ΔΦ over the relaxation. Fails if the bound
/// W_out ≤ tanh(2r)Δ𝒜 is violated beyond 1e-9.
pub fn two_stroke_protocol(res: &ReservoirSpec, unitary: &GaussianUnitary) -> Result<TwoStrokeReport> {
    let mode = res.mode();
    let pi = res.steady_state_gaussian();
    let rho = unitary.apply(&pi)?;
    let w_out = gaussian::mean_energy(&pi, &mode)? - gaussian::mean_energy(&rho, &mode)?;
    let delta_a =
        gaussian::asymmetry(&pi, &mode, res.theta())? - gaussian::asymmetry(&rho, &mode, res.theta())?;
    let two_r = 2.0 * res.r();
    // Relaxation ρ → π has Q = W_out and the same Δ𝒜, so Σ = −ΔΦ.
    let sigma = -res.beta() * (two_r.cosh() * w_out - two_r.sinh() * delta_a);
    let bound = single_reservoir_work_bound(res, delta_a);
    if w_out > bound + 1e-9 {
        return Err(Error::Inconsistency(format!(
            "work bound violated: W_out = {w_out} > tanh(2r) dA = {bound}"
        )));
    }
    Ok(TwoStrokeReport {
        w_out,
        heat: w_out,
        entropy_production: sigma,
        delta_asymmetry: delta_a,
        bound,
    })
}

/// The Fock-basis diagonal of the steady state: same energy and populations
/// as π but no coherences, hence 𝒜 = 0 and Q̇ = 0 along its relaxation.
pub fn dephased_steady_state(dim: usize, res: &ReservoirSpec) -> Result<FockDensityMatrix> {
    Ok(steady_state_fock(dim, res)?.diagonal_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_generator;
    use crate::gaussian::{apply_displacement, apply_squeeze, SqueezeParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn res_05() -> ReservoirSpec {
        ReservoirSpec::new(1.0, 1.0, SqueezeParams::new(0.5, 0.0).unwrap(), 1.0).unwrap()
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> GaussianUnitary {
        GaussianUnitary::Sequence {
            ops: vec![
                GaussianUnitary::Rotation { phi: rng.random_range(0.0..std::f64::consts::TAU) },
                GaussianUnitary::Squeeze(
                    SqueezeParams::new(
                        rng.random_range(0.0..0.8),
                        rng.random_range(0.0..std::f64::consts::TAU),
                    )
                    .unwrap(),
                ),
                GaussianUnitary::Displacement {
                    dx: rng.random_range(-1.0..1.0),
                    dp: rng.random_range(-1.0..1.0),
                },
            ],
        }
    }

    #[test]
    fn rates_vanish_at_steady_state() {
        let res = ReservoirSpec::new(0.9, 1.2, SqueezeParams::new(0.6, 2.0).unwrap(), 0.7).unwrap();
        let rates = rates_gaussian(&res.steady_state_gaussian(), &res).unwrap();
        for v in [rates.heat, rates.asymmetry, rates.entropy, rates.entropy_flow, rates.entropy_production] {
            assert!(v.abs() < 1e-9 * res.gamma(), "rate {v} not ~0");
        }

        let dim = fock::default_dim(&res);
        let gen = build_generator(dim, &res).unwrap();
        let pi = steady_state_fock(dim, &res).unwrap();
        let rates = rates_fock(&pi, &gen).unwrap();
        for v in [rates.heat, rates.asymmetry, rates.entropy_flow] {
            assert!(v.abs() < 1e-7 * res.gamma(), "fock rate {v} not ~0");
        }
    }

    #[test]
    fn thermal_reservoir_flow_is_beta_heat() {
        let res = ReservoirSpec::new(0.8, 1.0, SqueezeParams::none(), 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let state = apply_displacement(
                &apply_squeeze(
                    &GaussianState::thermal(rng.random_range(0.0..2.0)).unwrap(),
                    &SqueezeParams::new(rng.random_range(0.0..0.8), 1.0).unwrap(),
                )
                .unwrap(),
                rng.random_range(-1.0..1.0),
                0.3,
            )
            .unwrap();
            let rates = rates_gaussian(&state, &res).unwrap();
            assert!((rates.entropy_flow - res.beta() * rates.heat).abs() < 1e-14 * rates.heat.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_fluxes_match_rates() {
        let res = ReservoirSpec::new(1.1, 0.9, SqueezeParams::new(0.7, 1.4).unwrap(), 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let state = random_unitary(&mut rng)
                .apply(&GaussianState::thermal(rng.random_range(0.0..1.5)).unwrap())
                .unwrap();
            let rates = rates_gaussian(&state, &res).unwrap();
            let fluxes = closed_form_fluxes(&state, &res).unwrap();
            assert!((rates.heat - fluxes.heat).abs() < 1e-8);
            assert!((rates.asymmetry - fluxes.asymmetry).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_flux_values() {
        let res = res_05();
        let pi = res.steady_state_gaussian();
        let f = closed_form_fluxes(&pi, &res).unwrap();
        assert!(f.heat.abs() < 1e-12 && f.asymmetry.abs() < 1e-12);

        let vac = GaussianState::vacuum(1);
        let f = closed_form_fluxes(&vac, &res).unwrap();
        assert!((f.heat - res.gamma() * res.steady_energy()).abs() < 1e-13);

        // Thermal at the reservoir β with r > 0: heat flows in.
        let th = GaussianState::thermal(res.n_th()).unwrap();
        let f = closed_form_fluxes(&th, &res).unwrap();
        let expected = res.gamma() * res.omega() * (res.mean_occupation() - res.n_th());
        assert!((f.heat - expected).abs() < 1e-13);
        assert!(f.heat > 0.0);
    }

    #[test]
    fn illustrative_dephased_relaxation() {
        // Diagonal of π: Q̇ = 0 but 𝒜̇ > 0, so Φ̇ < 0 and Ṡ < Σ̇.
        let res = ReservoirSpec::new(1.0, 1.0, SqueezeParams::new(0.5, 0.8).unwrap(), 1.0).unwrap();
        let dim = fock::default_dim(&res);
        let gen = build_generator(dim, &res).unwrap();
        let rho = dephased_steady_state(dim, &res).unwrap();
        let rates = rates_fock(&rho, &gen).unwrap();
        assert!(rates.heat.abs() < 1e-8, "heat rate {}", rates.heat);
        assert!(rates.asymmetry > 1e-3);
        assert!(rates.entropy_flow < 0.0);
        assert!(rates.entropy < rates.entropy_production);
        assert!(rates.entropy_production >= -SECOND_LAW_TOL);
    }

    #[test]
    fn ledger_gaussian_invariants_and_rate_consistency() {
        let res = ReservoirSpec::new(0.7, 1.0, SqueezeParams::new(0.8, 2.2).unwrap(), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let initial = random_unitary(&mut rng)
                .apply(&GaussianState::thermal(rng.random_range(0.0..1.5)).unwrap())
                .unwrap();
            let ledger = ledger_gaussian(&initial, &res, 6.0 / res.gamma(), DEFAULT_LEDGER_SAMPLES).unwrap();
            ledger.validate().unwrap();
            // Ledger increments reproduce the instantaneous rates mid-run.
            let k = 50;
            let state_k = relax_moments_analytic(&initial, &res, ledger.times[k]).unwrap();
            let r = rates_gaussian(&state_k, &res).unwrap();
            let dt = ledger.times[k + 1] - ledger.times[k - 1];
            let dq = (ledger.heat[k + 1] - ledger.heat[k - 1]) / dt;
            assert!((r.heat - dq).abs() < 1e-3 * r.heat.abs().max(1e-3));
        }
    }

    #[test]
    fn fock_ledger_matches_relative_entropy_route() {
        // Σ(t) = −[D(ρ(t)‖π) − D(ρ(0)‖π)]: the two forms of the entropy
        // production agree on the Fock backend.
        let res = ReservoirSpec::new(1.0, 1.0, SqueezeParams::new(0.4, 1.1).unwrap(), 1.0).unwrap();
        // Sized for the initial state's tails in the basis of π (the squeeze
        // angles differ, so the relative squeeze is what sets the spread).
        let dim = fock::tail_dim(0.9, 0.7, 1e-13).max(fock::default_dim(&res));
        let gen = build_generator(dim, &res).unwrap();
        let rho0 = fock::squeezed_thermal_fock(dim, 0.9, &SqueezeParams::new(0.3, 2.8).unwrap()).unwrap();
        let fl = ledger_fock(&rho0, &gen, 3.0 / res.gamma(), 60).unwrap();
        fl.ledger.validate().unwrap();
        for k in 0..fl.ledger.len() {
            let sigma_rel = -(fl.rel_entropy_to_pi[k] - fl.rel_entropy_to_pi[0]);
            assert!(
                (fl.ledger.entropy_production[k] - sigma_rel).abs() < 1e-6,
                "sample {k}: {} vs {}",
                fl.ledger.entropy_production[k],
                sigma_rel
            );
        }
    }

    #[test]
    fn work_bound_and_max_work_values() {
        let res = res_05();
        assert_eq!(
            single_reservoir_work_bound(
                &ReservoirSpec::new(1.0, 1.0, SqueezeParams::none(), 1.0).unwrap(),
                3.7
            ),
            0.0
        );
        assert!((single_reservoir_work_bound(&res, 1.0) - 1.0f64.tanh()).abs() < 1e-15);

        let w = max_extractable_work(&res);
        assert!((w.w_max - 0.587_600_596_821_900_7).abs() < 1e-13);
        assert!((w.entropy_production - res.beta() * w.w_max).abs() < 1e-15);

        // Identity: W_max = E(π) − E(thermal at the same β).
        let mode = res.mode();
        let e_pi = gaussian::mean_energy(&res.steady_state_gaussian(), &mode).unwrap();
        let e_th = gaussian::mean_energy(&GaussianState::thermal(res.n_th()).unwrap(), &mode).unwrap();
        assert!((w.w_max - (e_pi - e_th)).abs() < 1e-13);

        let r0 = max_extractable_work(&ReservoirSpec::new(2.0, 1.0, SqueezeParams::none(), 1.0).unwrap());
        assert_eq!(r0.w_max, 0.0);
    }

    #[test]
    fn bound_dominates_optimal_work_on_grid() {
        for &beta in &[0.3, 1.0, 2.5] {
            for &omega in &[0.5, 1.0, 2.0] {
                for &r in &[0.1, 0.5, 1.0, 1.5] {
                    let res =
                        ReservoirSpec::new(beta, omega, SqueezeParams::new(r, 1.0).unwrap(), 1.0).unwrap();
                    let w = max_extractable_work(&res).w_max;
                    // Optimal protocol: Δ𝒜 = ⟨𝒜⟩_π − 0.
                    let bound = single_reservoir_work_bound(&res, res.steady_asymmetry());
                    assert!(bound >= w - 1e-12, "bound {bound} < W_max {w}");
                }
            }
        }
    }

    #[test]
    fn two_stroke_protocol_cases() {
        let res = res_05();
        let idle = two_stroke_protocol(&res, &GaussianUnitary::Identity).unwrap();
        assert!(idle.w_out.abs() < 1e-14 && idle.entropy_production.abs() < 1e-14);

        // Unsqueezing extracts W_max and produces Σ = βW_max.
        let unsqueeze = GaussianUnitary::Squeeze(res.sq().inverse());
        let opt = two_stroke_protocol(&res, &unsqueeze).unwrap();
        let w = max_extractable_work(&res);
        assert!((opt.w_out - w.w_max).abs() < 1e-12);
        assert!((opt.heat - opt.w_out).abs() < 1e-15);
        assert!((opt.entropy_production - w.entropy_production).abs() < 1e-11);
        assert!(opt.w_out <= opt.bound + 1e-9);

        // Squeezing further costs work.
        let more = GaussianUnitary::Squeeze(SqueezeParams::new(0.1, res.theta()).unwrap());
        let rep = two_stroke_protocol(&res, &more).unwrap();
        assert!(rep.w_out < 0.0);
    }

    #[test]
    fn two_stroke_bound_over_random_unitaries() {
        let res = ReservoirSpec::new(0.8, 1.0, SqueezeParams::new(0.6, 1.9).unwrap(), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let u = random_unitary(&mut rng);
            let rep = two_stroke_protocol(&res, &u).unwrap();
            assert!(rep.w_out <= rep.bound + 1e-9);
            assert!(rep.entropy_production >= -1e-9);
        }
    }

    #[test]
    fn gaussian_sigma_rate_nonnegative_along_trajectories() {
        let res = ReservoirSpec::new(1.2, 1.0, SqueezeParams::new(0.9, 4.0).unwrap(), 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let initial = random_unitary(&mut rng)
                .apply(&GaussianState::thermal(rng.random_range(0.05..1.5)).unwrap())
                .unwrap();
            for &gt in &[0.0, 0.2, 0.5, 1.0, 2.0, 5.0] {
                let state = relax_moments_analytic(&initial, &res, gt / res.gamma()).unwrap();
                let r = rates_gaussian(&state, &res).unwrap();
                assert!(r.entropy_production >= -SECOND_LAW_TOL, "Sigma_dot = {}", r.entropy_production);
            }
        }
    }
}
