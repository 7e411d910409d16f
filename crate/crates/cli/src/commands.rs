//! Command implementations. Each validates its configuration into domain
//! types, computes everything in memory, and only then writes output files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sqtherm::collisional::{
    ensemble_entropy_balance, lindblad_limit_check, reservoir_entropy_balance, run_collisions,
    CollisionConfig, LimitCheckConfig, LimitCheckReport,
};
use sqtherm::fock::build_generator;
use sqtherm::gaussian::GaussianUnitary;
use sqtherm::otto::{
    analyze_cycle, free_energy_decomposition, phase_diagram, verify_cycle_numeric, CycleReport,
    FreeEnergySplit, PhasePoint,
};
use sqtherm::thermo::{
    ledger_fock, ledger_gaussian, max_extractable_work, two_stroke_protocol, ThermoLedger,
};

use crate::config::{
    CollideConfig, CycleConfig, FiguresConfig, PhaseDiagramConfig, RelaxConfig, SingleReservoirConfig,
};
use crate::errors::{CliError, CliResult};
use crate::output::{fmt, fmt_opt, CsvTable, OutputSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

fn ledger_csv(ledger: &ThermoLedger) -> CsvTable {
    let mut table = CsvTable::new(&["t", "S", "Q", "A", "Phi", "Sigma"]);
    for k in 0..ledger.len() {
        table.row(&[
            fmt(ledger.times[k]),
            fmt(ledger.entropy[k]),
            fmt(ledger.heat[k]),
            fmt(ledger.asymmetry[k]),
            fmt(ledger.entropy_flow[k]),
            fmt(ledger.entropy_production[k]),
        ]);
    }
    table
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub delta_entropy: f64,
    pub heat: f64,
    pub delta_asymmetry: f64,
    pub entropy_flow: f64,
    pub entropy_production: f64,
}

fn totals(ledger: &ThermoLedger) -> LedgerTotals {
    let last = ledger.len() - 1;
    LedgerTotals {
        delta_entropy: ledger.entropy[last] - ledger.entropy[0],
        heat: ledger.heat[last],
        delta_asymmetry: ledger.asymmetry[last] - ledger.asymmetry[0],
        entropy_flow: ledger.entropy_flow[last],
        entropy_production: ledger.entropy_production[last],
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CrossBackendDeviation {
    pub entropy: f64,
    pub heat: f64,
    pub asymmetry: f64,
    pub entropy_flow: f64,
    pub entropy_production: f64,
    pub overall: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RelaxSummary {
    pub config: RelaxConfig,
    pub dim: usize,
    pub fock: LedgerTotals,
    pub gaussian: Option<LedgerTotals>,
    pub cross_backend_max_deviation: Option<CrossBackendDeviation>,
    pub max_trace_drift: f64,
}

/// Relaxation from a configurable initial state, run on the Fock backend and
/// (for Gaussian-representable states) the exact Gaussian backend alongside.
pub fn cmd_relax(cfg: &RelaxConfig, out_dir: &Path) -> CliResult<Vec<std::path::PathBuf>> {
    let res = cfg.reservoir.build().map_err(CliError::config)?;
    if cfg.gamma_t_final <= 0.0 || !cfg.gamma_t_final.is_finite() || cfg.n_samples == 0 {
        return Err(CliError::Config(
            "gamma_t_final must be > 0 and n_samples >= 1".into(),
        ));
    }
    let dim = cfg.initial_state.resolve_dim(&res, cfg.dim);
    let gen = build_generator(dim, &res).map_err(CliError::config)?;
    let rho0 = cfg.initial_state.fock(dim, &res).map_err(CliError::compute)?;
    let t_final = cfg.gamma_t_final / res.gamma();

    let fock = ledger_fock(&rho0, &gen, t_final, cfg.n_samples).map_err(CliError::compute)?;

    let gaussian = if cfg.initial_state.is_gaussian() {
        let g0 = cfg.initial_state.gaussian().map_err(CliError::config)?;
        Some(ledger_gaussian(&g0, &res, t_final, cfg.n_samples).map_err(CliError::compute)?)
    } else {
        None
    };

    let cross = gaussian.as_ref().map(|g| {
        let f = &fock.ledger;
        let col_dev = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max)
        };
        let entropy = col_dev(&f.entropy, &g.entropy);
        let heat = col_dev(&f.heat, &g.heat);
        let asymmetry = col_dev(&f.asymmetry, &g.asymmetry);
        let entropy_flow = col_dev(&f.entropy_flow, &g.entropy_flow);
        let entropy_production = col_dev(&f.entropy_production, &g.entropy_production);
        let overall = [entropy, heat, asymmetry, entropy_flow, entropy_production]
            .into_iter()
            .fold(0.0f64, f64::max);
        CrossBackendDeviation { entropy, heat, asymmetry, entropy_flow, entropy_production, overall }
    });

    let mut out = OutputSet::new(out_dir);
    out.add_csv("ledger_fock.csv", ledger_csv(&fock.ledger));
    let mut traj = CsvTable::new(&["t", "energy", "asymmetry", "entropy", "rel_entropy_to_pi", "trace_drift"]);
    for k in 0..fock.ledger.len() {
        traj.row(&[
            fmt(fock.ledger.times[k]),
            fmt(fock.energy[k]),
            fmt(fock.ledger.asymmetry[k]),
            fmt(fock.ledger.entropy[k]),
            fmt(fock.rel_entropy_to_pi[k]),
            fmt(fock.trace_drift[k]),
        ]);
    }
    out.add_csv("trajectory_fock.csv", traj);
    if let Some(g) = &gaussian {
        out.add_csv("ledger_gaussian.csv", ledger_csv(g));
    }
    let summary = RelaxSummary {
        config: cfg.clone(),
        dim,
        fock: totals(&fock.ledger),
        gaussian: gaussian.as_ref().map(totals),
        cross_backend_max_deviation: cross,
        max_trace_drift: fock.trace_drift.last().copied().unwrap_or(0.0),
    };
    out.add_json("summary.json", &summary)?;
    Ok(out.write()?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CycleFile {
    pub config: CycleConfig,
    pub report: CycleReport,
    pub free_energy: FreeEnergySplit,
    /// Largest |analytic − state-constructed| energy deviation.
    pub numeric_check_max_deviation: f64,
}

pub fn cmd_cycle(
    cfg: &CycleConfig,
    out_dir: &Path,
    format: ReportFormat,
) -> CliResult<Vec<std::path::PathBuf>> {
    let p = cfg.build().map_err(CliError::config)?;
    let report = analyze_cycle(&p).map_err(CliError::compute)?;
    let numeric = verify_cycle_numeric(&p).map_err(CliError::compute)?;
    let free_energy = free_energy_decomposition(&p).map_err(CliError::compute)?;
    let max_dev = [
        (report.w_ab, numeric.w_ab),
        (report.q_bc, numeric.q_bc),
        (report.w_cd, numeric.w_cd),
        (report.q_da, numeric.q_da),
        (report.w_out, numeric.w_out),
        (report.delta_a_bc, numeric.delta_a_bc),
    ]
    .into_iter()
    .map(|(a, b)| (a - b).abs())
    .fold(0.0f64, f64::max);

    let file = CycleFile {
        config: cfg.clone(),
        report,
        free_energy,
        numeric_check_max_deviation: max_dev,
    };
    let mut out = OutputSet::new(out_dir);
    match format {
        ReportFormat::Json => out.add_json("cycle_report.json", &file)?,
        ReportFormat::Csv => {
            let r = &file.report;
            let mut t = CsvTable::new(&["key", "value"]);
            for (k, v) in [
                ("W_AB", fmt(r.w_ab)),
                ("Q_BC", fmt(r.q_bc)),
                ("W_CD", fmt(r.w_cd)),
                ("Q_DA", fmt(r.q_da)),
                ("W_out", fmt(r.w_out)),
                ("dA_BC", fmt(r.delta_a_bc)),
                ("eta", fmt_opt(r.eta)),
                ("eta_carnot", fmt(r.eta_carnot)),
                ("eta_ht", fmt(r.eta_ht)),
                ("eta_max", fmt_opt(r.eta_max)),
                ("Sigma_cyc", fmt(r.sigma_cyc)),
                ("region", r.region.to_string()),
                ("omega2_star", fmt(r.boundaries.omega2_star)),
                ("r_q", fmt_opt(r.boundaries.r_q)),
                ("r_w", fmt_opt(r.boundaries.r_w)),
                ("r_c", fmt_opt(r.boundaries.r_c)),
                ("delta_F2", fmt(file.free_energy.delta_f2)),
                ("numeric_check_max_deviation", fmt(max_dev)),
            ] {
                t.row(&[k.to_string(), v]);
            }
            out.add_csv("cycle_report.csv", t);
        }
    }
    Ok(out.write()?)
}

fn phase_csv(points: &[PhasePoint]) -> CsvTable {
    let mut t = CsvTable::new(&["omega2", "r", "region", "eta"]);
    for p in points {
        t.row(&[fmt(p.omega2), fmt(p.r), p.region.to_string(), fmt_opt(p.eta)]);
    }
    t
}

pub fn cmd_phase_diagram(cfg: &PhaseDiagramConfig, out_dir: &Path) -> CliResult<Vec<std::path::PathBuf>> {
    cfg.validate().map_err(CliError::config)?;
    let points =
        phase_diagram(&cfg.grid, cfg.beta1, cfg.beta2, cfg.omega1, cfg.theta).map_err(CliError::compute)?;
    let mut out = OutputSet::new(out_dir);
    out.add_csv("phase_diagram.csv", phase_csv(&points));
    Ok(out.write()?)
}

/// Work-output curves, phase diagram and efficiency-bound curves at the
/// standard parameter point β₁ = 1, β₂ = 0.2 (in units of ħω₁).
pub fn cmd_figures(cfg: &FiguresConfig, out_dir: &Path) -> CliResult<Vec<std::path::PathBuf>> {
    use sqtherm::otto::{CycleParams, PhaseGrid};
    use sqtherm::SqueezeParams;

    // Validate the caption parameter set up front.
    CycleParams::new(cfg.beta1, cfg.beta2, cfg.omega1, cfg.omega1, SqueezeParams::new(0.0, cfg.theta).map_err(CliError::config)?)
        .map_err(CliError::config)?;

    let r_set = [0.0, 0.5, 0.7, 0.8, 0.9];
    let cycle = |omega2: f64, r: f64| -> sqtherm::Result<CycleReport> {
        analyze_cycle(&CycleParams::new(
            cfg.beta1,
            cfg.beta2,
            cfg.omega1,
            omega2,
            SqueezeParams::new(r, cfg.theta)?,
        )?)
    };

    // Work output vs frequency ratio, one column per squeezing value.
    let mut fig2 = CsvTable::new(&[
        "omega2",
        "w_out_r0.0",
        "w_out_r0.5",
        "w_out_r0.7",
        "w_out_r0.8",
        "w_out_r0.9",
    ]);
    let n = 701;
    for k in 0..n {
        let omega2 = cfg.omega1 * (1.0 + 7.0 * k as f64 / (n - 1) as f64);
        let mut cells = vec![fmt(omega2)];
        for &r in &r_set {
            cells.push(fmt(cycle(omega2, r).map_err(CliError::compute)?.w_out));
        }
        fig2.row(&cells);
    }

    // Operational-region phase diagram.
    let points = phase_diagram(&PhaseGrid::standard(), cfg.beta1, cfg.beta2, cfg.omega1, cfg.theta)
        .map_err(CliError::compute)?;

    // Efficiency and its bounds vs squeezing at ω₂ = 3ω₁.
    let mut fig4 = CsvTable::new(&["r", "eta", "eta_max", "eta_c", "eta_ht"]);
    let n = 241;
    for k in 0..n {
        let r = 1.2 * k as f64 / (n - 1) as f64;
        let rep = cycle(3.0 * cfg.omega1, r).map_err(CliError::compute)?;
        fig4.row(&[
            fmt(r),
            fmt_opt(rep.eta),
            fmt_opt(rep.eta_max),
            fmt(rep.eta_carnot),
            fmt(rep.eta_ht),
        ]);
    }

    let mut out = OutputSet::new(out_dir);
    out.add_csv("fig2.csv", fig2);
    out.add_csv("fig3.csv", phase_csv(&points));
    out.add_csv("fig4.csv", fig4);
    Ok(out.write()?)
}

/// Ensemble summary of a collisional run (fixed key set).
#[derive(Debug, Serialize, Deserialize)]
pub struct CollideSummary {
    pub gamma_eff: f64,
    pub fitted_rate: f64,
    #[serde(rename = "sum_dSR")]
    pub sum_dsr: f64,
    #[serde(rename = "minus_Phi")]
    pub minus_phi: f64,
    pub n_traj: usize,
    pub seed: u64,
}

pub fn cmd_collide(
    cfg: &CollideConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> CliResult<Vec<std::path::PathBuf>> {
    let seed = seed_override.unwrap_or(cfg.seed);
    let sq = sqtherm::SqueezeParams::new(cfg.r, cfg.theta).map_err(CliError::config)?;
    let run_cfg = CollisionConfig::from_gamma(
        cfg.gamma,
        cfg.g_tau,
        cfg.n_collisions,
        seed,
        cfg.beta,
        cfg.omega,
        sq,
    )
    .map_err(CliError::config)?;
    let initial = cfg.initial_state.gaussian().map_err(CliError::config)?;
    if cfg.n_trajectories < 8 {
        return Err(CliError::Config("n_trajectories must be >= 8".into()));
    }

    let trace = run_collisions(&initial, &run_cfg).map_err(CliError::compute)?;
    let balance = reservoir_entropy_balance(&trace);
    let ensemble =
        ensemble_entropy_balance(&initial, &run_cfg, cfg.n_trajectories).map_err(CliError::compute)?;

    let mut g_tau_values = cfg.g_tau_values.clone();
    if !g_tau_values.contains(&cfg.g_tau) {
        g_tau_values.insert(0, cfg.g_tau);
    }
    let limit_cfg = LimitCheckConfig {
        gamma: cfg.gamma,
        beta: cfg.beta,
        omega: cfg.omega,
        sq,
        seed,
        n_trajectories: cfg.n_trajectories,
        gamma_t_final: cfg.gamma_t_final,
        g_tau_values,
        n_grid: cfg.n_grid,
    };
    let limit: LimitCheckReport = lindblad_limit_check(&limit_cfg, &initial).map_err(CliError::compute)?;
    let fitted_rate = limit
        .fits
        .iter()
        .find(|f| f.g_tau == cfg.g_tau)
        .map(|f| f.fitted_rate)
        .unwrap_or(f64::NAN);

    let mut trace_csv = CsvTable::new(&["collision_index", "t", "n_sys", "var_sq", "var_anti", "dS_ancilla"]);
    for rec in &trace.records {
        trace_csv.row(&[
            rec.index.to_string(),
            fmt(rec.time),
            fmt(rec.occupation_after),
            fmt(rec.var_squeezed_after),
            fmt(rec.var_antisqueezed_after),
            fmt(rec.ancilla_entropy_after - trace.ancilla_entropy_before),
        ]);
    }

    let summary = CollideSummary {
        gamma_eff: run_cfg.effective_gamma(),
        fitted_rate,
        sum_dsr: ensemble.mean_sum_ancilla_entropy,
        minus_phi: ensemble.mean_minus_entropy_flow,
        n_traj: cfg.n_trajectories,
        seed,
    };

    let mut out = OutputSet::new(out_dir);
    out.add_csv("trace.csv", trace_csv);
    out.add_json("ensemble_summary.json", &summary)?;
    out.add_json("limit_check.json", &limit)?;
    out.add_json("trace_balance.json", &balance)?;
    Ok(out.write()?)
}

/// Two-stroke work extraction summary (fixed key set per the interface).
#[derive(Debug, Serialize, Deserialize)]
pub struct SingleReservoirSummary {
    #[serde(rename = "W_out")]
    pub w_out: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Sigma")]
    pub sigma: f64,
    pub bound: f64,
    #[serde(rename = "W_max")]
    pub w_max: f64,
}

pub fn cmd_single_reservoir(
    cfg: &SingleReservoirConfig,
    out_dir: &Path,
    format: ReportFormat,
) -> CliResult<Vec<std::path::PathBuf>> {
    let sq = sqtherm::SqueezeParams::new(cfg.r, cfg.theta).map_err(CliError::config)?;
    let res = sqtherm::ReservoirSpec::new(cfg.beta, cfg.omega, sq, cfg.gamma).map_err(CliError::config)?;
    let unitary = cfg
        .unitary
        .clone()
        .unwrap_or(GaussianUnitary::Squeeze(sq.inverse()));
    let report = two_stroke_protocol(&res, &unitary).map_err(CliError::compute)?;
    let summary = SingleReservoirSummary {
        w_out: report.w_out,
        q: report.heat,
        sigma: report.entropy_production,
        bound: report.bound,
        w_max: max_extractable_work(&res).w_max,
    };
    let mut out = OutputSet::new(out_dir);
    match format {
        ReportFormat::Json => out.add_json("single_reservoir.json", &summary)?,
        ReportFormat::Csv => {
            let mut t = CsvTable::new(&["key", "value"]);
            for (k, v) in [
                ("W_out", summary.w_out),
                ("Q", summary.q),
                ("Sigma", summary.sigma),
                ("bound", summary.bound),
                ("W_max", summary.w_max),
            ] {
                t.row(&[k.to_string(), fmt(v)]);
            }
            out.add_csv("single_reservoir.csv", t);
        }
    }
    Ok(out.write()?)
}
