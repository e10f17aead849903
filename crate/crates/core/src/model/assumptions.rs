use std::fmt;

use crate::grid::{Domain, GridFunction};
use crate::solver::SystemState;

use super::{CoefficientField, ModelSpec, TIME_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssumptionId {
    A1,
    A2,
    A3,
    A3Dual,
    A4i,
    A4ii,
    A4iii,
    A5,
    A6,
}

impl AssumptionId {
    /// Checks the solver refuses to run without.
    pub fn is_mandatory(&self) -> bool {
        matches!(
            self,
            AssumptionId::A2 | AssumptionId::A4i | AssumptionId::A4ii | AssumptionId::A4iii
        )
    }
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AssumptionId::A1 => "A1",
            AssumptionId::A2 => "A2",
            AssumptionId::A3 => "A3",
            AssumptionId::A3Dual => "A3'",
            AssumptionId::A4i => "A4(i)",
            AssumptionId::A4ii => "A4(ii)",
            AssumptionId::A4iii => "A4(iii)",
            AssumptionId::A5 => "A5",
            AssumptionId::A6 => "A6",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub id: AssumptionId,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn get(&self, id: AssumptionId) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn status(&self, id: AssumptionId) -> CheckStatus {
        self.get(id).map_or(CheckStatus::NotApplicable, |c| c.status)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn mandatory_failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.failures().filter(|c| c.id.is_mandatory())
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{}={} ({})", c.id, c.status, c.detail)?;
        }
        Ok(())
    }
}

/// Sampling window for the bound checks: one period when declared.
fn sample_times(spec: &ModelSpec) -> Vec<f64> {
    let window = spec.declared_period().unwrap_or(10.0);
    (0..=TIME_SAMPLES)
        .map(|k| window * k as f64 / TIME_SAMPLES as f64)
        .collect()
}

fn sampled_range(field: &CoefficientField, domain: &Domain, times: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in times {
        for v in field.sample(domain, t) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

fn check(id: AssumptionId, ok: bool, detail: String) -> AssumptionCheck {
    AssumptionCheck {
        id,
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        detail,
    }
}

fn not_applicable(id: AssumptionId, detail: &str) -> AssumptionCheck {
    AssumptionCheck {
        id,
        status: CheckStatus::NotApplicable,
        detail: detail.to_string(),
    }
}

fn all_positive(f: &GridFunction) -> bool {
    f.iter().all(|v| *v > 0.0)
}

/// Report-only check of the standing assumptions against a model and its initial data.
///
/// Hölder continuity in (A1) is not verifiable from samples; only the bounds are checked.
pub fn validate_assumptions(spec: &ModelSpec, domain: &Domain, initial: &SystemState) -> AssumptionReport {
    let times = sample_times(spec);
    let mut checks = Vec::with_capacity(9);

    // (A1): declared bounds hold at all samples and are finite and nonnegative.
    let mut a1_ok = true;
    let mut a1_detail = Vec::new();
    for (name, field) in spec.fields() {
        let (lo, hi) = sampled_range(field, domain, &times);
        let (sl, su) = (field.lower_bound(), field.upper_bound());
        let ok = sl >= 0.0 && su.is_finite() && lo >= sl - 1e-12 && hi <= su + 1e-12;
        a1_ok &= ok;
        a1_detail.push(format!("{name} in [{lo:.4}, {hi:.4}]"));
    }
    checks.push(check(AssumptionId::A1, a1_ok, a1_detail.join(", ")));

    let s0 = &initial.s;
    let i0 = &initial.i;
    let nonneg = |f: &GridFunction| f.iter().all(|v| v.is_finite() && *v >= 0.0);
    checks.push(check(
        AssumptionId::A2,
        nonneg(s0) && nonneg(i0) && s0.len() == domain.len() && i0.len() == domain.len(),
        format!("min S0={:.3e}, min I0={:.3e}", s0.min(), i0.min()),
    ));

    let beta_lo = sampled_range(&spec.beta, domain, &times).0.min(spec.beta.lower_bound());
    checks.push(check(
        AssumptionId::A3,
        beta_lo > 0.0,
        format!("inf beta={beta_lo:.4}"),
    ));

    let regime = spec.regime().label;
    if regime.is_dual() {
        let times_ok = times.iter().all(|&t| {
            let g = spec.gamma.sample(domain, t);
            let m = spec.mu.sample(domain, t);
            g.iter().zip(&m).all(|(a, b)| a + b > 0.0)
        });
        let floor = spec.gamma.lower_bound() + spec.mu.lower_bound();
        checks.push(check(
            AssumptionId::A3Dual,
            times_ok && floor > 0.0,
            format!("inf(gamma+mu) >= {floor:.4} for regime {regime}"),
        ));
    } else {
        checks.push(not_applicable(AssumptionId::A3Dual, "regime does not exchange roles"));
    }

    checks.push(check(
        AssumptionId::A4i,
        i0.iter().any(|v| *v > 0.0),
        format!("sup I0={:.3e}", i0.sup()),
    ));

    let q = spec.exponents.q;
    if q < 1.0 {
        let gamma_lo = sampled_range(&spec.gamma, domain, &times).0.min(spec.gamma.lower_bound());
        checks.push(check(
            AssumptionId::A4ii,
            all_positive(s0) && gamma_lo > 0.0,
            format!("q={q}: min S0={:.3e}, inf gamma={gamma_lo:.4}", s0.min()),
        ));
    } else {
        checks.push(not_applicable(AssumptionId::A4ii, "q >= 1"));
    }

    let p = spec.exponents.p;
    if p < 1.0 {
        checks.push(check(
            AssumptionId::A4iii,
            all_positive(i0),
            format!("p={p}: min I0={:.3e}", i0.min()),
        ));
    } else {
        checks.push(not_applicable(AssumptionId::A4iii, "p >= 1"));
    }

    if spec.mu.is_identically_zero() {
        checks.push(not_applicable(AssumptionId::A5, "mu = 0 (no mortality)"));
    } else {
        let mu_lo = sampled_range(&spec.mu, domain, &times).0.min(spec.mu.lower_bound());
        checks.push(check(AssumptionId::A5, mu_lo > 0.0, format!("inf mu={mu_lo:.4}")));
    }

    match spec.declared_period() {
        None => checks.push(not_applicable(AssumptionId::A6, "no period declared")),
        Some(w) => {
            let divides = spec.fields().iter().filter_map(|(_, f)| f.period()).all(|pw| {
                let ratio = w / pw;
                (ratio - ratio.round()).abs() < 1e-9
            });
            let mut max_dev: f64 = 0.0;
            for (_, field) in spec.fields() {
                for &t in &times {
                    let a = field.sample(domain, t);
                    let b = field.sample(domain, t + w);
                    for (x, y) in a.iter().zip(&b) {
                        max_dev = max_dev.max((x - y).abs() / (1.0 + x.abs()));
                    }
                }
            }
            checks.push(check(
                AssumptionId::A6,
                divides && max_dev <= 1e-12,
                format!("omega={w}, max deviation {max_dev:.2e}"),
            ));
        }
    }

    AssumptionReport { checks }
}
