//! The four-stroke Otto cycle between a cold thermal reservoir (β₁, ω₁) and a
//! hot squeezed thermal reservoir (β₂ ≤ β₁, ω₂ ≥ ω₁, squeezing r):
//!
//!   A→B  adiabatic compression ω₁ → ω₂ (occupation preserved),
//!   B→C  isochore against the hot squeezed reservoir,
//!   C→D  unsqueeze, then adiabatic expansion ω₂ → ω₁,
//!   D→A  isochore against the cold reservoir.
//!
//! Everything is closed-form in n₁ = n_th(β₁ω₁) and n₂ = n_th(β₂ω₂):
//! per-stroke energies, total work, efficiency per operational region,
//! cycle entropy production, the region boundaries r_w, r_q, r_c and
//! ω₂* = ω₁β₁/β₂, second-law efficiency bounds, and the free-energy split of
//! the hot-reservoir loss. `verify_cycle_numeric` rebuilds the four corner
//! states with the Gaussian backend and must reproduce every energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    self, apply_squeeze, make_squeezed_thermal, thermal_occupation, ModeSpec, SqueezeParams,
};

/// Tie band for region classification and first-law assertions.
pub const SIGN_TOL: f64 = 1e-12;

/// Cycle parameters: cold (β₁, ω₁), hot (β₂, ω₂), hot-reservoir squeezing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleParams {
    beta1: f64,
    beta2: f64,
    omega1: f64,
    omega2: f64,
    sq: SqueezeParams,
}

impl CycleParams {
    pub fn new(beta1: f64, beta2: f64, omega1: f64, omega2: f64, sq: SqueezeParams) -> Result<Self> {
        for (name, v) in [("beta1", beta1), ("beta2", beta2), ("omega1", omega1), ("omega2", omega2)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if beta2 > beta1 {
            return Err(Error::Domain(format!(
                "the second reservoir must be the hot one: beta2 = {beta2} > beta1 = {beta1}"
            )));
        }
        if omega2 < omega1 {
            return Err(Error::Domain(format!(
                "compression must raise the frequency: omega2 = {omega2} < omega1 = {omega1}"
            )));
        }
        Ok(Self { beta1, beta2, omega1, omega2, sq })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    pub fn sq(&self) -> SqueezeParams {
        self.sq
    }

    /// Cold-reservoir occupation n₁ = (e^{β₁ω₁} − 1)⁻¹.
    pub fn n1(&self) -> f64 {
        thermal_occupation(self.beta1, self.omega1)
    }

    /// Hot-reservoir occupation n₂ = (e^{β₂ω₂} − 1)⁻¹.
    pub fn n2(&self) -> f64 {
        thermal_occupation(self.beta2, self.omega2)
    }

    /// The frequency ω₂* = ω₁ β₁/β₂ where n₂ = n₁.
    pub fn omega2_star(&self) -> f64 {
        self.omega1 * self.beta1 / self.beta2
    }
}

/// Operational regions of the cycle, by the signs of (W_out, Q_BC, Q_DA):
/// I engine, II driven refrigerator, III refrigerator with work output,
/// IV dual-heat-source engine at unit efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Squeezing boundaries at fixed (β₁, β₂, ω₁, ω₂). `r_q`, `r_w` exist for
/// ω₂ ≥ ω₂* and `r_c` for ω₂ ≤ ω₂*; out-of-domain values are absent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Boundaries {
    pub omega2_star: f64,
    pub r_q: Option<f64>,
    pub r_w: Option<f64>,
    pub r_c: Option<f64>,
}

/// Everything about one cycle at one parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleReport {
    pub w_ab: f64,
    pub q_bc: f64,
    pub w_cd: f64,
    pub q_da: f64,
    pub w_out: f64,
    pub delta_a_bc: f64,
    /// Efficiency; absent in region II (no engine output to define it by).
    pub eta: Option<f64>,
    pub eta_carnot: f64,
    pub eta_ht: f64,
    /// Second-law bound on η; absent in region II.
    pub eta_max: Option<f64>,
    pub sigma_cyc: f64,
    pub region: Region,
    pub boundaries: Boundaries,
}

/// Classifies the sign pattern of (W_out, Q_BC, Q_DA), resolving boundary
/// ties within [`SIGN_TOL`] toward the lower-numbered region.
pub fn classify_region(w_out: f64, q_bc: f64, q_da: f64) -> Result<Region> {
    let t = SIGN_TOL;
    if w_out >= -t && q_bc >= -t && q_da <= t {
        Ok(Region::I)
    } else if w_out <= t && q_bc <= t && q_da >= -t {
        Ok(Region::II)
    } else if w_out >= -t && q_bc <= t && q_da >= -t {
        Ok(Region::III)
    } else if w_out >= -t && q_bc >= -t && q_da >= -t {
        Ok(Region::IV)
    } else {
        Err(Error::InfeasibleRegion { w_out, q_bc, q_da })
    }
}

/// Boundary curves at one frequency: ω₂* = ω₁β₁/β₂ and, where defined,
/// sinh²r_q = (n₁ − n₂)/(2n₂ + 1), sinh²r_w = (1 − ω₁/ω₂) sinh²r_q,
/// sinh²r_c = (ω₂*/ω₂ − 1)(n₂ − n₁)/(2n₂ + 1).
pub fn region_boundaries(beta1: f64, beta2: f64, omega1: f64, omega2: f64) -> Boundaries {
    let omega2_star = omega1 * beta1 / beta2;
    let n1 = thermal_occupation(beta1, omega1);
    let n2 = thermal_occupation(beta2, omega2);
    let (mut r_q, mut r_w, mut r_c) = (None, None, None);
    if omega2 >= omega2_star {
        let sinh2_rq = (n1 - n2) / (2.0 * n2 + 1.0);
        let sinh2_rw = (1.0 - omega1 / omega2) * sinh2_rq;
        r_q = Some(sinh2_rq.max(0.0).sqrt().asinh());
        r_w = Some(sinh2_rw.max(0.0).sqrt().asinh());
    }
    if omega2 <= omega2_star {
        let sinh2_rc = (omega2_star / omega2 - 1.0) * (n2 - n1) / (2.0 * n2 + 1.0);
        r_c = Some(sinh2_rc.max(0.0).sqrt().asinh());
    }
    Boundaries { omega2_star, r_q, r_w, r_c }
}

/// Carnot efficiency 1 − β₂/β₁.
pub fn eta_carnot(p: &CycleParams) -> f64 {
    1.0 - p.beta2 / p.beta1
}

/// High-temperature generalized Carnot efficiency
/// η_ht = 1 − β₂/(β₁(1 + 2 sinh²r)).
pub fn eta_ht(p: &CycleParams) -> f64 {
    1.0 - p.beta2 / (p.beta1 * (1.0 + 2.0 * p.sq.r().sinh().powi(2)))
}

/// Frequency of the local work maximum in the high-temperature regime,
/// ω₂ = ω₁ √(β₁(1 + 2 sinh²r)/β₂).
pub fn max_power_frequency_ht(p: &CycleParams) -> f64 {
    p.omega1 * (p.beta1 * (1.0 + 2.0 * p.sq.r().sinh().powi(2)) / p.beta2).sqrt()
}

/// Full closed-form analysis of one cycle.
pub fn analyze_cycle(p: &CycleParams) -> Result<CycleReport> {
    let (n1, n2) = (p.n1(), p.n2());
    let (w1, w2) = (p.omega1, p.omega2);
    let r = p.sq.r();
    let (cosh2r, sinh2r) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let sinh_sq = r.sinh().powi(2);

    let w_ab = -(w2 - w1) * n1;
    let q_bc = w2 * (n2 * cosh2r + sinh_sq - n1);
    let w_cd = w2 * (n2 * cosh2r + sinh_sq) - w1 * n2;
    let q_da = w1 * (n1 - n2);
    let delta_a_bc = w2 * sinh2r * (n2 + 0.5);
    let w_out = w_ab + w_cd;

    let region = classify_region(w_out, q_bc, q_da)?;
    let boundaries = region_boundaries(p.beta1, p.beta2, w1, w2);

    let eta = match region {
        Region::I => {
            let denom = (2.0 * n2 + 1.0) * sinh_sq + (n2 - n1);
            let value = 1.0 - (w1 / w2) * ((n2 - n1) / denom);
            if value.is_nan() {
                None
            } else {
                Some(value)
            }
        }
        Region::II => None,
        Region::III => {
            let sinh2_rq = (n1 - n2) / (2.0 * n2 + 1.0);
            Some(1.0 - (w2 / w1) * (1.0 - sinh_sq / sinh2_rq))
        }
        Region::IV => Some(1.0),
    };

    let eta_max = match region {
        Region::I => {
            let num = (2.0 * n2 + 1.0) - cosh2r * (2.0 * n1 + 1.0);
            let den = cosh2r * (2.0 * n2 + 1.0) - (2.0 * n1 + 1.0);
            let value = 1.0 - (p.beta2 / p.beta1) * num / den;
            if value.is_nan() {
                None
            } else {
                Some(value)
            }
        }
        Region::II => None,
        Region::III => {
            let sinh2_rq = (n1 - n2) / (2.0 * n2 + 1.0);
            Some(
                1.0 - p.beta1 / (p.beta2 * cosh2r)
                    + (w2 / w1) * (2.0 * r).tanh() * sinh2r / (2.0 * sinh2_rq),
            )
        }
        Region::IV => Some(1.0),
    };

    let sigma_cyc = -p.beta1 * q_da - p.beta2 * (cosh2r * q_bc - sinh2r * delta_a_bc);

    Ok(CycleReport {
        w_ab,
        q_bc,
        w_cd,
        q_da,
        w_out,
        delta_a_bc,
        eta,
        eta_carnot: eta_carnot(p),
        eta_ht: eta_ht(p),
        eta_max,
        sigma_cyc,
        region,
        boundaries,
    })
}

/// The free-energy loss of the hot squeezed reservoir over one cycle,
/// referenced to the cold temperature T₁, split into the thermal-gradient
/// and squeezing contributions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FreeEnergySplit {
    /// (1 − T₁/T₂) Q_BC.
    pub carnot_term: f64,
    /// (T₁/T₂)(sinh 2r Δ𝒜_BC − 2 sinh²r Q_BC).
    pub squeezing_term: f64,
    /// ΔF₂(T₁) = carnot_term + squeezing_term.
    pub delta_f2: f64,
    /// Whether Δ𝒜_BC ≥ tanh(r) Q_BC, making the coherence flux an
    /// independent free-energy source.
    pub coherence_is_source: bool,
}

pub fn free_energy_decomposition(p: &CycleParams) -> Result<FreeEnergySplit> {
    let report = analyze_cycle(p)?;
    let t1_over_t2 = p.beta2 / p.beta1;
    let r = p.sq.r();
    let carnot_term = (1.0 - t1_over_t2) * report.q_bc;
    let squeezing_term =
        t1_over_t2 * ((2.0 * r).sinh() * report.delta_a_bc - 2.0 * r.sinh().powi(2) * report.q_bc);
    let delta_f2 = carnot_term + squeezing_term;
    if report.w_out > delta_f2 + SIGN_TOL {
        return Err(Error::Inconsistency(format!(
            "free-energy bound violated: W_out = {} > dF2 = {delta_f2}",
            report.w_out
        )));
    }
    Ok(FreeEnergySplit {
        carnot_term,
        squeezing_term,
        delta_f2,
        coherence_is_source: report.delta_a_bc >= r.tanh() * report.q_bc,
    })
}

/// Rebuilds the cycle by constructing the four corner states explicitly with
/// the Gaussian backend and taking energy differences. Fails if any energy
/// disagrees with [`analyze_cycle`] by more than 1e-8 (they normally agree to
/// 1e-10).
pub fn verify_cycle_numeric(p: &CycleParams) -> Result<CycleReport> {
    let mode1 = ModeSpec::new(p.omega1)?;
    let mode2 = ModeSpec::new(p.omega2)?;
    let no_sq = SqueezeParams::none();

    // A: equilibrium with the cold reservoir at ω₁.
    let state_a = make_squeezed_thermal(p.beta1, &mode1, &no_sq)?;
    // B: adiabatic modulation preserves occupations; only the frequency label changes.
    let state_b = state_a.clone();
    // C: steady state of the hot squeezed reservoir at ω₂.
    let state_c = make_squeezed_thermal(p.beta2, &mode2, &p.sq)?;
    // D: unsqueeze, then adiabatic modulation back to ω₁.
    let state_d = apply_squeeze(&state_c, &p.sq.inverse())?;

    let e_a = gaussian::mean_energy(&state_a, &mode1)?;
    let e_b = gaussian::mean_energy(&state_b, &mode2)?;
    let e_c = gaussian::mean_energy(&state_c, &mode2)?;
    let e_d = gaussian::mean_energy(&state_d, &mode1)?;

    let w_ab = e_a - e_b;
    let q_bc = e_c - e_b;
    let w_cd = e_c - e_d;
    let q_da = e_a - e_d;
    let w_out = w_ab + w_cd;
    let theta = p.sq.theta();
    let delta_a_bc =
        gaussian::asymmetry(&state_c, &mode2, theta)? - gaussian::asymmetry(&state_b, &mode2, theta)?;

    let analytic = analyze_cycle(p)?;
    for (name, numeric, closed) in [
        ("W_AB", w_ab, analytic.w_ab),
        ("Q_BC", q_bc, analytic.q_bc),
        ("W_CD", w_cd, analytic.w_cd),
        ("Q_DA", q_da, analytic.q_da),
        ("W_out", w_out, analytic.w_out),
        ("dA_BC", delta_a_bc, analytic.delta_a_bc),
    ] {
        if (numeric - closed).abs() > 1e-8 {
            return Err(Error::Inconsistency(format!(
                "{name}: state-based value {numeric} vs closed form {closed}"
            )));
        }
    }

    let region = classify_region(w_out, q_bc, q_da)?;
    Ok(CycleReport {
        w_ab,
        q_bc,
        w_cd,
        q_da,
        w_out,
        delta_a_bc,
        region,
        ..analytic
    })
}

/// A rectangular sweep over (ω₂, r) at fixed temperatures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub omega2_min: f64,
    pub omega2_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_omega2: usize,
    pub n_r: usize,
}

impl PhaseGrid {
    /// ω₂/ω₁ ∈ [1, 8], r ∈ [0, 1.5] at 200×200.
    pub fn standard() -> Self {
        Self {
            omega2_min: 1.0,
            omega2_max: 8.0,
            r_min: 0.0,
            r_max: 1.5,
            n_omega2: 200,
            n_r: 200,
        }
    }

    pub fn omega2_values(&self) -> Vec<f64> {
        grid_values(self.omega2_min, self.omega2_max, self.n_omega2)
    }

    pub fn r_values(&self) -> Vec<f64> {
        grid_values(self.r_min, self.r_max, self.n_r)
    }
}

fn grid_values(min: f64, max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![min];
    }
    (0..n)
        .map(|k| min + (max - min) * k as f64 / (n - 1) as f64)
        .collect()
}

/// One evaluated grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhasePoint {
    pub omega2: f64,
    pub r: f64,
    pub region: Region,
    pub eta: Option<f64>,
    pub w_out: f64,
    pub sigma_cyc: f64,
}

/// Evaluates the cycle over the grid, rows in ω₂-major order. Cells run in
/// parallel; assembly order is deterministic.
pub fn phase_diagram(
    grid: &PhaseGrid,
    beta1: f64,
    beta2: f64,
    omega1: f64,
    theta: f64,
) -> Result<Vec<PhasePoint>> {
    let omega2s = grid.omega2_values();
    let rs = grid.r_values();
    let rows: Vec<Result<Vec<PhasePoint>>> = omega2s
        .par_iter()
        .map(|&omega2| {
            rs.iter()
                .map(|&r| {
                    let p = CycleParams::new(beta1, beta2, omega1, omega2, SqueezeParams::new(r, theta)?)?;
                    let rep = analyze_cycle(&p)?;
                    Ok(PhasePoint {
                        omega2,
                        r,
                        region: rep.region,
                        eta: rep.eta,
                        w_out: rep.w_out,
                        sigma_cyc: rep.sigma_cyc,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(omega2s.len() * rs.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}
