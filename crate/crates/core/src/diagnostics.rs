//! Norms, mass bookkeeping and tail-window classification of long-time behavior.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate, Domain};
use crate::solver::{SystemState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass_s: f64,
    pub mass_i: f64,
    pub sup_s: f64,
    pub sup_i: f64,
    pub min_s: f64,
    pub min_i: f64,
    pub l2_s: f64,
    pub l2_i: f64,
    /// `sup S - min S`
    pub flat_s: f64,
    pub flat_i: f64,
}

impl DiagnosticsRow {
    pub fn mass(&self) -> f64 {
        self.mass_s + self.mass_i
    }

    pub fn sup(&self) -> f64 {
        self.sup_s.max(self.sup_i)
    }
}

pub const CSV_HEADER: &str = "t,mass_S,mass_I,sup_S,sup_I,min_S,min_I,L2_S,L2_I,flat_S,flat_I";

pub fn row(domain: &Domain, state: &SystemState) -> Result<DiagnosticsRow> {
    let (s, i) = (&state.s, &state.i);
    Ok(DiagnosticsRow {
        t: state.t,
        mass_s: integrate(domain, s)?,
        mass_i: integrate(domain, i)?,
        sup_s: s.sup(),
        sup_i: i.sup(),
        min_s: s.min(),
        min_i: i.min(),
        l2_s: lk_norm(domain, s, 2.0)?,
        l2_i: lk_norm(domain, i, 2.0)?,
        flat_s: s.sup() - s.min(),
        flat_i: i.sup() - i.min(),
    })
}

/// `(∫ |f|^k)^{1/k}` by midpoint quadrature; `k = ∞` gives the sup-norm.
pub fn lk_norm(domain: &Domain, f: &[f64], k: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::Domain(format!("L^k norm needs k >= 1, got {k}")));
    }
    if k.is_infinite() {
        if f.len() != domain.len() {
            return Err(Error::Domain(format!(
                "grid function has {} values, domain has {} nodes",
                f.len(),
                domain.len()
            )));
        }
        return Ok(f.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let powered: Vec<f64> = f.iter().map(|v| v.abs().powf(k)).collect();
    Ok(integrate(domain, &powered)?.powf(1.0 / k))
}

pub fn to_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t, r.mass_s, r.mass_i, r.sup_s, r.sup_i, r.min_s, r.min_i, r.l2_s, r.l2_i, r.flat_s, r.flat_i
        );
    }
    out
}

/// Largest `mass(t_{k+1}) - mass(t_k)` over consecutive rows (`-∞` if fewer than two).
pub fn max_mass_increase(rows: &[DiagnosticsRow]) -> f64 {
    rows.windows(2)
        .map(|w| w[1].mass() - w[0].mass())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest `|mass(t) - mass(0)| / mass(0)`.
pub fn max_relative_mass_drift(rows: &[DiagnosticsRow]) -> f64 {
    let Some(first) = rows.first() else { return 0.0 };
    let m0 = first.mass();
    rows.iter().map(|r| (r.mass() - m0).abs() / m0).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub extinct: f64,
    pub flat: f64,
    pub persist: f64,
    pub periodic: f64,
    /// Minimum number of rows in the tail window.
    pub min_window: usize,
    pub tail_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            extinct: 1e-4,
            flat: 1e-4,
            persist: 1e-3,
            periodic: 1e-4,
            min_window: 10,
            tail_fraction: 0.2,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.extinct, self.flat, self.persist, self.periodic]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) || self.min_window < 2 {
            return Err(Error::config(format!("invalid detection tolerances {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    DiseaseFreeLimit { s_star: f64 },
    ExtinctionBoth,
    /// `floor` is the empirical persistence floor over the tail window.
    Persistent { floor: f64 },
    PeriodicCandidate { floor: f64, residual: f64 },
    Undetermined { reason: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::DiseaseFreeLimit { .. } => "DiseaseFreeLimit",
            Outcome::ExtinctionBoth => "ExtinctionBoth",
            Outcome::Persistent { .. } => "Persistent",
            Outcome::PeriodicCandidate { .. } => "PeriodicCandidate",
            Outcome::Undetermined { .. } => "Undetermined",
        }
    }

    /// `S*`, the persistence floor, or the period residual; `NaN` otherwise.
    pub fn value(&self) -> f64 {
        match self {
            Outcome::DiseaseFreeLimit { s_star } => *s_star,
            Outcome::Persistent { floor } => *floor,
            Outcome::PeriodicCandidate { residual, .. } => *residual,
            Outcome::ExtinctionBoth | Outcome::Undetermined { .. } => f64::NAN,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::DiseaseFreeLimit { s_star } => write!(f, "DiseaseFreeLimit(S*={s_star})"),
            Outcome::ExtinctionBoth => f.write_str("ExtinctionBoth"),
            Outcome::Persistent { floor } => write!(f, "Persistent(empirical persistence floor={floor})"),
            Outcome::PeriodicCandidate { floor, residual } => {
                write!(f, "PeriodicCandidate(residual={residual:e}, floor={floor})")
            }
            Outcome::Undetermined { reason } => write!(f, "Undetermined({reason})"),
        }
    }
}

/// Statistics of the tail window backing a classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEvidence {
    pub t_start: f64,
    pub t_end: f64,
    pub rows: usize,
    pub max_sup_s: f64,
    pub max_sup_i: f64,
    pub min_s: f64,
    pub min_i: f64,
    pub max_flat_s: f64,
    pub max_flat_i: f64,
    /// Tail average of the spatial mean of S.
    pub mean_s: f64,
}

impl TailEvidence {
    /// Tail sup-norm monitor, the empirical `N∞`.
    pub fn n_infinity(&self) -> f64 {
        self.max_sup_s.max(self.max_sup_i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeReport {
    pub outcome: Outcome,
    pub evidence: Option<TailEvidence>,
    pub tolerances: Tolerances,
    pub period_residual: Option<f64>,
}

pub fn tail_window<'a>(rows: &'a [DiagnosticsRow], tol: &Tolerances) -> &'a [DiagnosticsRow] {
    let len = ((rows.len() as f64) * tol.tail_fraction).ceil() as usize;
    &rows[rows.len() - len.min(rows.len())..]
}

pub fn tail_evidence(domain: &Domain, window: &[DiagnosticsRow]) -> Option<TailEvidence> {
    let (first, last) = (window.first()?, window.last()?);
    let fold_max = |f: fn(&DiagnosticsRow) -> f64| window.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let fold_min = |f: fn(&DiagnosticsRow) -> f64| window.iter().map(f).fold(f64::INFINITY, f64::min);
    Some(TailEvidence {
        t_start: first.t,
        t_end: last.t,
        rows: window.len(),
        max_sup_s: fold_max(|r| r.sup_s),
        max_sup_i: fold_max(|r| r.sup_i),
        min_s: fold_min(|r| r.min_s),
        min_i: fold_min(|r| r.min_i),
        max_flat_s: fold_max(|r| r.flat_s),
        max_flat_i: fold_max(|r| r.flat_i),
        mean_s: window.iter().map(|r| r.mass_s).sum::<f64>() / (window.len() as f64 * domain.measure()),
    })
}

/// Decision tree over tail statistics: disease-free limit, total extinction,
/// persistence, then (only when the coefficients declare a period) a
/// periodic-limit check on the tail snapshots.
pub fn classify_longtime(traj: &Trajectory, tol: &Tolerances) -> Result<OutcomeReport> {
    tol.validate()?;
    let window = tail_window(&traj.rows, tol);
    let undetermined = |reason: String, evidence| OutcomeReport {
        outcome: Outcome::Undetermined { reason },
        evidence,
        tolerances: *tol,
        period_residual: None,
    };
    if window.len() < tol.min_window {
        return Ok(undetermined(
            format!("tail window has {} rows, need {}", window.len(), tol.min_window),
            None,
        ));
    }
    let ev = tail_evidence(&traj.domain, window).expect("window is nonempty");

    let outcome = if ev.max_sup_i < tol.extinct && ev.max_flat_s < tol.flat && ev.max_sup_s > tol.extinct {
        Outcome::DiseaseFreeLimit { s_star: ev.mean_s }
    } else if ev.max_sup_s < tol.extinct && ev.max_sup_i < tol.extinct {
        Outcome::ExtinctionBoth
    } else if ev.min_s >= tol.persist && ev.min_i >= tol.persist {
        Outcome::Persistent {
            floor: ev.min_s.min(ev.min_i),
        }
    } else {
        return Ok(undetermined("no tail criterion met".into(), Some(ev)));
    };

    let mut period_residual = None;
    let outcome = match (outcome, traj.period) {
        (Outcome::Persistent { floor }, Some(omega)) => match detect_periodic_since(traj, omega, ev.t_start) {
            Ok(residual) => {
                period_residual = Some(residual);
                if residual < tol.periodic {
                    Outcome::PeriodicCandidate { floor, residual }
                } else {
                    Outcome::Persistent { floor }
                }
            }
            // Too few aligned snapshots in the tail: periodicity is not assessed.
            Err(Error::Config { .. }) => Outcome::Persistent { floor },
            Err(e) => return Err(e),
        },
        (o, _) => o,
    };
    Ok(OutcomeReport {
        outcome,
        evidence: Some(ev),
        tolerances: *tol,
        period_residual,
    })
}

/// Largest relative sup-norm change `‖u(t+ω) - u(t)‖∞ / ‖u(t)‖∞` over snapshot
/// pairs in the default tail window.
pub fn detect_periodic(traj: &Trajectory, omega: f64) -> Result<f64> {
    let tol = Tolerances::default();
    let since = tail_window(&traj.rows, &tol).first().map_or(0.0, |r| r.t);
    detect_periodic_since(traj, omega, since)
}

pub const MIN_PERIOD_PAIRS: usize = 3;

pub fn detect_periodic_since(traj: &Trajectory, omega: f64, since: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::config(format!("period must be positive, got {omega}")));
    }
    let pairs: Vec<(&SystemState, &SystemState)> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= since * (1.0 - 1e-12))
        .filter_map(|a| traj.snapshot_at(a.t + omega).map(|b| (a, b)))
        .collect();
    if pairs.len() < MIN_PERIOD_PAIRS {
        return Err(Error::config(format!(
            "periodicity check needs {MIN_PERIOD_PAIRS} snapshot pairs one period ω={omega} apart after t={since}, found {}",
            pairs.len()
        )));
    }
    Ok(pairs
        .iter()
        .map(|(a, b)| {
            let diff = a
                .s
                .iter()
                .zip(b.s.iter())
                .chain(a.i.iter().zip(b.i.iter()))
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            diff / a.sup_norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max))
}

/// Splits `rows[1..]` into `windows` consecutive blocks and returns the max of `field` on each.
pub fn windowed_max(rows: &[DiagnosticsRow], windows: usize, field: fn(&DiagnosticsRow) -> f64) -> Vec<f64> {
    let body = rows.get(1..).unwrap_or(&[]);
    if windows == 0 || body.len() < windows {
        return Vec::new();
    }
    let size = body.len() / windows;
    let skip = body.len() - size * windows;
    body[skip..]
        .chunks(size)
        .map(|c| c.iter().map(field).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;
    use crate::solver::RunMonitors;

    fn monitors() -> RunMonitors {
        RunMonitors {
            m_infinity: 0.0,
            min_s: 0.0,
            min_i: 0.0,
            accepted_steps: 0,
            rejected_steps: 0,
            marginal_positivity: false,
            mass_identity_defect: 0.0,
        }
    }

    fn synthetic(domain: Domain, omega: f64, period: Option<f64>, f: impl Fn(f64) -> (f64, f64)) -> Trajectory {
        let dt = omega / 8.0;
        let states: Vec<SystemState> = (0..=160)
            .map(|k| {
                let t = k as f64 * dt;
                let (s, i) = f(t);
                SystemState::new(GridFunction::constant(&domain, s), GridFunction::constant(&domain, i), t)
            })
            .collect();
        Trajectory {
            domain,
            rows: states.iter().map(|s| row(&domain, s).unwrap()).collect(),
            final_state: states.last().unwrap().clone(),
            snapshots: states,
            monitors: monitors(),
            period,
        }
    }

    #[test]
    fn lk_norm_cases() {
        let d = Domain::interval(2.0, 16).unwrap();
        let c = GridFunction::constant(&d, 3.0);
        assert!((lk_norm(&d, &c, 2.0).unwrap() - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(lk_norm(&d, &GridFunction::constant(&d, 0.0), 3.0).unwrap(), 0.0);
        let f = GridFunction::from_fn(&d, |p| (p.x - 1.0) * 2.0);
        let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        assert_eq!(lk_norm(&d, &f, 1.0).unwrap(), integrate(&d, &abs).unwrap());
        assert!(lk_norm(&d, &f, 0.5).is_err());
        assert_eq!(lk_norm(&d, &f, f64::INFINITY).unwrap(), f.sup_abs());
    }

    #[test]
    fn csv_has_fixed_header_and_dot_decimals() {
        let d = Domain::interval(1.0, 4).unwrap();
        let st = SystemState::new(GridFunction::constant(&d, 0.5), GridFunction::constant(&d, 0.25), 1.5);
        let text = to_csv(&[row(&d, &st).unwrap()]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[0], "1.5");
        assert_eq!(fields[1], "0.5");
    }

    #[test]
    fn synthetic_periodic_residual_is_tiny() {
        let omega = 1.0;
        let traj = synthetic(Domain::interval(1.0, 8).unwrap(), omega, Some(omega), |t| {
            (1.0 + 0.1 * (2.0 * std::f64::consts::PI * t / omega).sin(), 0.5)
        });
        assert!(detect_periodic(&traj, omega).unwrap() <= 1e-10);
        let report = classify_longtime(&traj, &Tolerances::default()).unwrap();
        assert_eq!(report.outcome.label(), "PeriodicCandidate");
    }

    #[test]
    fn autonomous_steady_state_stays_persistent() {
        let traj = synthetic(Domain::interval(1.0, 8).unwrap(), 1.0, None, |_| (0.5, 0.5));
        let report = classify_longtime(&traj, &Tolerances::default()).unwrap();
        assert_eq!(report.outcome, Outcome::Persistent { floor: 0.5 });
        assert!(detect_periodic(&traj, 1.0).unwrap() == 0.0);
    }

    #[test]
    fn decaying_transient_fails_periodic_test() {
        let traj = synthetic(Domain::interval(1.0, 8).unwrap(), 1.0, Some(1.0), |t| (0.5 + (-0.05 * t).exp(), 0.5));
        let report = classify_longtime(&traj, &Tolerances::default()).unwrap();
        assert_eq!(report.outcome.label(), "Persistent");
        assert!(report.period_residual.unwrap() > 1e-4);
    }

    #[test]
    fn missing_snapshots_is_config_error() {
        let mut traj = synthetic(Domain::interval(1.0, 8).unwrap(), 1.0, Some(1.0), |_| (0.5, 0.5));
        traj.snapshots.truncate(3);
        assert!(matches!(detect_periodic(&traj, 1.0), Err(Error::Config { .. })));
    }

    #[test]
    fn decision_tree_branches() {
        let d = Domain::interval(1.0, 8).unwrap();
        let free = synthetic(d, 1.0, None, |t| (1.3, (-t).exp() * 1e-3));
        let r = classify_longtime(&free, &Tolerances::default()).unwrap();
        assert!(matches!(r.outcome, Outcome::DiseaseFreeLimit { s_star } if (s_star - 1.3).abs() < 1e-12));
        let dead = synthetic(d, 1.0, None, |_| (0.0, 0.0));
        assert_eq!(classify_longtime(&dead, &Tolerances::default()).unwrap().outcome, Outcome::ExtinctionBoth);
        let half = synthetic(d, 1.0, None, |_| (1e-5, 0.3));
        assert_eq!(classify_longtime(&half, &Tolerances::default()).unwrap().outcome.label(), "Undetermined");
        let mut short = dead.clone();
        short.rows.truncate(20);
        let r = classify_longtime(&short, &Tolerances::default()).unwrap();
        assert!(matches!(r.outcome, Outcome::Undetermined { .. }));
        assert!(r.evidence.is_none());
    }

    #[test]
    fn windowed_max_tracks_decay() {
        let traj = synthetic(Domain::interval(1.0, 8).unwrap(), 1.0, None, |t| (1.0, (-t).exp()));
        let w = windowed_max(&traj.rows, 4, |r| r.sup_i);
        assert_eq!(w.len(), 4);
        assert!(w.windows(2).all(|p| p[1] < p[0]));
    }
}
