//! Scenario configuration, presets, the scenario runner and sweeps.

mod config;
pub mod presets;
mod sweep;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use config::{
    load_config, load_config_file, overrides_layer, parse_config, resolve_layers, ConfigLayer, DetectSection,
    DomainSection, FieldSpec, InitialData, InitialSection, ModelSection, Scalar, ScenarioConfig, SolverSection,
    SpectralSection,
};
pub use sweep::{run_sweep, run_sweep_file, SweepKind, SweepSpec, SweepTable};

use crate::diagnostics::{self, OutcomeReport};
use crate::error::{Error, Result};
use crate::model::{validate_assumptions, AssumptionReport};
use crate::solver::{self, Trajectory};
use crate::spectral::{self, LinearizedProblem, SpectralResult};

/// Load a preset by name, optionally as its 2D variant, with overrides on top.
pub fn preset_config(name: &str, two_d: bool, overrides: &[String]) -> Result<ScenarioConfig> {
    let layers = [presets::preset_layer(name, two_d)?, overrides_layer(overrides)?];
    resolve_layers(layers, Path::new("."))
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub trajectory: Trajectory,
    pub outcome: OutcomeReport,
    pub assumptions: AssumptionReport,
    /// Present when `μ ≡ 0` and `p = 1`.
    pub spectral: Option<SpectralResult>,
    pub summary: String,
}

/// Whether the linearization at the disease-free state describes the dynamics.
pub fn spectral_applies(config: &ScenarioConfig) -> bool {
    config.model.is_sis() && config.model.exponents.p == 1.0
}

/// `λ₀`, `ρ` and `R₀` for the linearization at `S ≡ N/|Ω|`, `N` from the initial data.
pub fn spectral_for(config: &ScenarioConfig) -> Result<SpectralResult> {
    let initial = config.initial.build(&config.domain)?;
    let mass = initial.total_mass(&config.domain);
    let problem = LinearizedProblem::from_model(&config.model, &config.domain, mass, config.spectral)?;
    spectral::analyze(&problem)
}

/// Snapshot schedule: configured times plus `t_end - kω` for the trailing periods.
fn snapshot_times(config: &ScenarioConfig) -> Vec<f64> {
    let mut times = config.plan.snapshot_times.clone();
    if let Some(omega) = config.model.declared_period() {
        let t_end = config.plan.t_end;
        times.extend(
            (0..=config.period_snapshots)
                .map(|k| t_end - k as f64 * omega)
                .filter(|t| *t > 0.0),
        );
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    times
}

/// Run the scenario, classify it, and write `diagnostics.csv`, `snapshots/`
/// and `summary.txt` into `out_dir` when given.
pub fn run_scenario(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioReport> {
    let initial = config.initial.build(&config.domain)?;
    let assumptions = validate_assumptions(&config.model, &config.domain, &initial);
    let mut plan = config.plan.clone();
    plan.snapshot_times = snapshot_times(config);
    let trajectory = solver::run(&config.domain, &config.model, initial, &plan)?;
    let outcome = diagnostics::classify_longtime(&trajectory, &config.tolerances)?;
    let spectral = if spectral_applies(config) {
        Some(spectral_for(config)?)
    } else {
        None
    };
    let summary = summarize(config, &trajectory, &outcome, &assumptions, spectral.as_ref());
    let report = ScenarioReport {
        trajectory,
        outcome,
        assumptions,
        spectral,
        summary,
    };
    if let Some(dir) = out_dir {
        write_artifacts(config, &report, dir)?;
    }
    Ok(report)
}

/// Write `contents` via a temporary file and rename, so readers never see partial files.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_artifacts(config: &ScenarioConfig, report: &ScenarioReport, dir: &Path) -> Result<()> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    write_atomic(&dir.join("diagnostics.csv"), &diagnostics::to_csv(&report.trajectory.rows))?;
    for (k, snap) in report.trajectory.snapshots.iter().enumerate() {
        write_atomic(
            &snap_dir.join(format!("snapshot_{k:03}.txt")),
            &solver::format_snapshot(&config.domain, snap),
        )?;
    }
    write_atomic(
        &snap_dir.join("final.txt"),
        &solver::format_snapshot(&config.domain, &report.trajectory.final_state),
    )?;
    write_atomic(&dir.join("summary.txt"), &report.summary)
}

/// Plain decimal in the readable range, exponent notation outside it.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Fixed-order `key=value` listing of spectral results.
pub fn spectral_listing(result: &SpectralResult) -> String {
    let mut out = String::new();
    let opt = |v: Option<f64>| v.map_or("undefined".to_string(), num);
    let _ = writeln!(out, "lambda0={}", num(result.lambda0));
    let _ = writeln!(out, "rho={}", num(result.rho));
    let _ = writeln!(out, "R0={}", opt(result.r0));
    if let Some(r) = result.r0_bisection {
        let _ = writeln!(out, "R0_bisection={}", num(r));
    }
    let _ = writeln!(out, "spectral_iterations={}", result.iterations);
    let _ = writeln!(out, "spectral_residual={:e}", result.residual);
    if let Some(r0) = result.r0 {
        let product = (1.0 - r0) * result.lambda0;
        let _ = writeln!(out, "sign_check=(1-R0)*lambda0={product:e} {}", if product >= -1e-8 { "consistent" } else { "INCONSISTENT" });
    }
    out
}

fn summarize(
    config: &ScenarioConfig,
    traj: &Trajectory,
    report: &OutcomeReport,
    assumptions: &AssumptionReport,
    spectral: Option<&SpectralResult>,
) -> String {
    let mut out = String::new();
    let m = &traj.monitors;
    let regime = config.model.regime();
    let _ = writeln!(out, "preset={}", config.preset.as_deref().unwrap_or("none"));
    let _ = writeln!(out, "regime={}", regime.label);
    let _ = writeln!(out, "bounds_theorem_applicable={}", regime.bounds_theorem_applicable);
    let failures: Vec<String> = assumptions.failures().map(|c| c.id.to_string()).collect();
    let _ = writeln!(
        out,
        "assumptions={}",
        if failures.is_empty() { "pass".to_string() } else { format!("fail({})", failures.join(",")) }
    );
    let _ = writeln!(out, "marginal_positivity={}", m.marginal_positivity);
    let _ = writeln!(out, "t_end={}", config.plan.t_end);
    let _ = writeln!(out, "accepted_steps={}", m.accepted_steps);
    let _ = writeln!(out, "rejected_steps={}", m.rejected_steps);
    let _ = writeln!(out, "initial_mass={}", num(traj.initial_mass()));
    let _ = writeln!(out, "final_mass={}", num(traj.rows.last().map_or(f64::NAN, |r| r.mass())));
    let _ = writeln!(out, "max_relative_mass_drift={:e}", diagnostics::max_relative_mass_drift(&traj.rows));
    let _ = writeln!(out, "max_mass_increase={:e}", diagnostics::max_mass_increase(&traj.rows));
    let _ = writeln!(out, "mass_identity_defect={:e}", m.mass_identity_defect);
    let _ = writeln!(out, "min_S={}", num(m.min_s));
    let _ = writeln!(out, "min_I={}", num(m.min_i));
    let _ = writeln!(out, "M_inf={}", num(m.m_infinity));
    match &report.evidence {
        Some(ev) => {
            let _ = writeln!(out, "N_inf={}", num(ev.n_infinity()));
            let _ = writeln!(out, "tail_window=[{}, {}] rows={}", ev.t_start, ev.t_end, ev.rows);
            let _ = writeln!(out, "tail_sup_S={:e}", ev.max_sup_s);
            let _ = writeln!(out, "tail_sup_I={:e}", ev.max_sup_i);
            let _ = writeln!(out, "tail_flat_S={:e}", ev.max_flat_s);
            let _ = writeln!(out, "tail_min_S={:e}", ev.min_s);
            let _ = writeln!(out, "tail_min_I={:e}", ev.min_i);
        }
        None => {
            let _ = writeln!(out, "N_inf=undefined");
        }
    }
    let _ = writeln!(out, "outcome={}", report.outcome.label());
    let _ = writeln!(out, "outcome_detail={}", report.outcome);
    if let diagnostics::Outcome::DiseaseFreeLimit { s_star } = report.outcome {
        let cap = config.model.disease_free_cap(&config.domain);
        let _ = writeln!(out, "S_star={}", num(s_star));
        if config.model.exponents.p == 1.0 {
            let _ = writeln!(
                out,
                "S_star_bound=S_star<={cap} {}",
                if s_star <= cap * (1.0 + 1e-12) { "holds" } else { "VIOLATED" }
            );
        }
    }
    if let Some(r) = report.period_residual {
        let _ = writeln!(out, "period_residual={r:e}");
    }
    if let Some(s) = spectral {
        out.push_str(&spectral_listing(s));
    }
    out.push_str("\n# resolved configuration (defaults applied)\n");
    out.push_str(&config.to_toml());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_lists_monitors_and_config() {
        let cfg = preset_config("thm-2.11-persist", false, &["solver.t_end=2".into(), "domain.n=20".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run_scenario(&cfg, Some(dir.path())).unwrap();
        for key in ["regime=H1-ii", "M_inf=", "N_inf=", "outcome=", "lambda0=", "R0=", "[model]"] {
            assert!(report.summary.contains(key), "missing {key}:\n{}", report.summary);
        }
        assert!(dir.path().join("diagnostics.csv").exists());
        assert!(dir.path().join("snapshots/final.txt").exists());
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert_eq!(summary, report.summary);
    }

    #[test]
    fn periodic_presets_snapshot_trailing_periods() {
        let cfg = preset_config("thm-2.11-periodic", false, &[]).unwrap();
        let times = snapshot_times(&cfg);
        assert_eq!(times, vec![35.0, 36.0, 37.0, 38.0, 39.0, 40.0]);
    }
}
