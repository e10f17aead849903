//! IMEX time stepping: explicit reaction, backward-Euler diffusion.
//!
//! One step maps `(S, I)` to
//! `S⁺ = (I - dt d_S Δ_h)⁻¹ (S + dt f)` and `I⁺ = (I - dt d_I Δ_h)⁻¹ (I + dt g)`
//! with `f = -βK(S,I) + γ S^s I^r` and `g = βK(S,I) - (γ+μ) S^s I^r`.
//! The diffusion inverse has unit column sums and nonnegative entries, so it
//! conserves the discrete mass exactly and never creates negative values;
//! a step whose output is negative anywhere is rejected and retried with a
//! halved step, never clamped.

use std::fmt::Write as _;

use crate::diagnostics::{self, DiagnosticsRow};
use crate::error::{Error, Result};
use crate::grid::{integrate, Domain, GridFunction};
use crate::linalg::TridiagonalLdl;
use crate::model::{validate_assumptions, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub s: GridFunction,
    pub i: GridFunction,
    pub t: f64,
}

impl SystemState {
    pub fn new(s: GridFunction, i: GridFunction, t: f64) -> Self {
        Self { s, i, t }
    }

    pub fn total_mass(&self, domain: &Domain) -> f64 {
        let cell = domain.cell_volume();
        (self.s.iter().sum::<f64>() + self.i.iter().sum::<f64>()) * cell
    }

    /// `max(sup S, sup I)`.
    pub fn sup_norm(&self) -> f64 {
        self.s.sup_abs().max(self.i.sup_abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityPolicy {
    RejectAndHalve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// `None` selects the automatic initial step.
    pub dt_init: Option<f64>,
    pub dt_min: f64,
    pub dt_max: f64,
    pub linear_tol: f64,
    pub positivity: PositivityPolicy,
    pub max_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt_init: None,
            dt_min: 1e-10,
            dt_max: 1e-2,
            linear_tol: 1e-12,
            positivity: PositivityPolicy::RejectAndHalve,
            max_steps: 50_000_000,
        }
    }
}

/// Gain of the implicit diffusion over the explicit stability limit.
const IMEX_GAIN: f64 = 100.0;
const DT_INIT_CAP: f64 = 1e-2;
const GROWTH_FACTOR: f64 = 1.2;
const GROWTH_AFTER: usize = 10;

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt_max
            && self.dt_max.is_finite()
            && self.linear_tol > 0.0
            && self.max_steps > 0;
        if !ok {
            return Err(Error::config(format!("invalid solver settings {self:?}")));
        }
        if let Some(dt) = self.dt_init {
            if !(self.dt_min..=self.dt_max).contains(&dt) {
                return Err(Error::config(format!(
                    "dt_init={dt} must lie in [dt_min, dt_max] = [{}, {}]",
                    self.dt_min, self.dt_max
                )));
            }
        }
        Ok(())
    }

    /// `0.1 h²/max(d)` scaled by the IMEX gain, capped at `1e-2` and clipped to `[dt_min, dt_max]`.
    pub fn initial_dt(&self, domain: &Domain, model: &ModelSpec) -> f64 {
        self.dt_init.unwrap_or_else(|| {
            let (hx, hy) = domain.spacing();
            let h = if domain.dim() == 2 { hx.min(hy) } else { hx };
            let explicit = 0.1 * h * h / model.d_s.max(model.d_i);
            (explicit * IMEX_GAIN)
                .min(DT_INIT_CAP)
                .min(self.dt_max)
                .max(self.dt_min)
        })
    }
}

/// Reaction-driven step cap `0.5 / (σ⁰ (1 + M^{p+q}))`.
pub fn reaction_dt_cap(model: &ModelSpec, sup_norm: f64) -> f64 {
    let sigma = model.sigma_upper();
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    let e = model.exponents.p + model.exponents.q;
    0.5 / (sigma * (1.0 + sup_norm.powf(e)))
}

/// Backward-Euler diffusion solve `(I - c Δ_h) u = rhs` for a fixed `c = dt·d`.
///
/// In 2D the operator is approximated by consecutive x- and y-direction
/// implicit sweeps; each sweep conserves mass and positivity.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    domain: Domain,
    x: TridiagonalLdl,
    y: Option<TridiagonalLdl>,
}

impl ImplicitDiffusion {
    pub fn new(domain: &Domain, dt_times_d: f64) -> Self {
        let (nx, ny) = domain.shape();
        let (hx, hy) = domain.spacing();
        let axis = |n: usize, h: f64| {
            let w = dt_times_d / (h * h);
            let diag: Vec<f64> = (0..n)
                .map(|i| 1.0 + w * ((i > 0) as usize + (i + 1 < n) as usize) as f64)
                .collect();
            let off = vec![-w; n - 1];
            TridiagonalLdl::factor(&diag, &off).expect("I - cΔ is an M-matrix for c >= 0")
        };
        Self {
            domain: *domain,
            x: axis(nx, hx),
            y: (domain.dim() == 2).then(|| axis(ny, hy)),
        }
    }

    pub fn solve_in_place(&self, u: &mut [f64]) {
        let (nx, ny) = self.domain.shape();
        for j in 0..ny {
            self.x.solve_strided(u, j * nx, 1);
        }
        if let Some(y) = &self.y {
            for i in 0..nx {
                y.solve_strided(u, i, nx);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted {
        state: SystemState,
        /// `dt ∫ μ S^s I^r dx` evaluated on the pre-step state.
        mortality: f64,
    },
    Rejected {
        component: &'static str,
        node: usize,
    },
}

/// Reusable per-run workspace: coefficient buffers and cached diffusion factors.
#[derive(Debug)]
pub struct Stepper<'a> {
    domain: &'a Domain,
    model: &'a ModelSpec,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    mu: Vec<f64>,
    cache: Option<(f64, ImplicitDiffusion, ImplicitDiffusion)>,
}

impl<'a> Stepper<'a> {
    pub fn new(domain: &'a Domain, model: &'a ModelSpec) -> Self {
        let n = domain.len();
        Self {
            domain,
            model,
            beta: vec![0.0; n],
            gamma: vec![0.0; n],
            mu: vec![0.0; n],
            cache: None,
        }
    }

    fn diffusion(&mut self, dt: f64) -> &(f64, ImplicitDiffusion, ImplicitDiffusion) {
        let stale = !matches!(&self.cache, Some((cached, _, _)) if *cached == dt);
        if stale {
            self.cache = Some((
                dt,
                ImplicitDiffusion::new(self.domain, dt * self.model.d_s),
                ImplicitDiffusion::new(self.domain, dt * self.model.d_i),
            ));
        }
        self.cache.as_ref().expect("cache filled above")
    }

    pub fn step(&mut self, state: &SystemState, dt: f64) -> Result<StepOutcome> {
        let model = self.model;
        let t = state.t;
        model.beta.sample_into(self.domain, t, &mut self.beta);
        model.gamma.sample_into(self.domain, t, &mut self.gamma);
        model.mu.sample_into(self.domain, t, &mut self.mu);

        let e = model.exponents;
        let plain_recovery = e.is_si();
        let n = self.domain.len();
        let mut s_new = Vec::with_capacity(n);
        let mut i_new = Vec::with_capacity(n);
        let mut mortality = 0.0;
        for k in 0..n {
            let (s, i) = (state.s[k], state.i[k]);
            let incidence = self.beta[k] * model.incidence.kernel(s, i);
            let recovery = if plain_recovery { i } else { s.powf(e.s) * i.powf(e.r) };
            s_new.push(s + dt * (-incidence + self.gamma[k] * recovery));
            i_new.push(i + dt * (incidence - (self.gamma[k] + self.mu[k]) * recovery));
            mortality += self.mu[k] * recovery;
        }
        mortality *= dt * self.domain.cell_volume();

        let (_, ds, di) = self.diffusion(dt);
        ds.solve_in_place(&mut s_new);
        di.solve_in_place(&mut i_new);

        let next = SystemState::new(GridFunction::from_vec(s_new), GridFunction::from_vec(i_new), t + dt);
        let non_finite = [("S", &next.s), ("I", &next.i)]
            .into_iter()
            .find_map(|(c, f)| f.iter().position(|v| !v.is_finite()).map(|node| (c, node)));
        if let Some((component, node)) = non_finite {
            return Err(Error::NonFinite {
                component,
                node,
                state: Box::new(next),
            });
        }
        for (component, field) in [("S", &next.s), ("I", &next.i)] {
            if let Some(node) = field.iter().position(|v| *v < 0.0) {
                return Ok(StepOutcome::Rejected { component, node });
            }
        }
        Ok(StepOutcome::Accepted {
            state: next,
            mortality,
        })
    }
}

/// One IMEX step with a fresh workspace.
pub fn step(
    domain: &Domain,
    model: &ModelSpec,
    state: &SystemState,
    dt: f64,
    settings: &SolverSettings,
) -> Result<StepOutcome> {
    if !(dt >= settings.dt_min && dt <= settings.dt_max) {
        return Err(Error::Domain(format!(
            "dt={dt} outside [dt_min, dt_max] = [{}, {}]",
            settings.dt_min, settings.dt_max
        )));
    }
    Stepper::new(domain, model).step(state, dt)
}

/// Time horizon, output schedule and solver controls for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub t_end: f64,
    pub settings: SolverSettings,
    /// Diagnostics are recorded at `t = 0`, every `cadence`, and at `t_end`.
    pub cadence: f64,
    pub snapshot_times: Vec<f64>,
    /// Run even if mandatory assumption checks fail.
    pub allow_violations: bool,
}

/// Running monitors over every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMonitors {
    /// `sup_t max(‖S‖∞, ‖I‖∞)`, the empirical `M∞`.
    pub m_infinity: f64,
    pub min_s: f64,
    pub min_i: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Initial data positive but within a few ulps of zero where positivity matters.
    pub marginal_positivity: bool,
    /// Largest `|Δmass + mortality|` over accepted steps (discrete mass identity defect).
    pub mass_identity_defect: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub domain: Domain,
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<SystemState>,
    pub monitors: RunMonitors,
    /// Common period of the coefficients, if any.
    pub period: Option<f64>,
    pub final_state: SystemState,
}

impl Trajectory {
    pub fn initial_mass(&self) -> f64 {
        self.rows.first().map_or(0.0, |r| r.mass_s + r.mass_i)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&SystemState> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.snapshots.iter().find(|s| (s.t - t).abs() <= tol)
    }
}

const MARGINAL: f64 = 1e-12;

fn marginal_positivity(model: &ModelSpec, initial: &SystemState) -> bool {
    let marginal = |f: &GridFunction| {
        let m = f.min();
        m > 0.0 && m < MARGINAL * f.sup().max(f64::MIN_POSITIVE)
    };
    (model.exponents.q < 1.0 && marginal(&initial.s)) || (model.exponents.p < 1.0 && marginal(&initial.i))
}

fn stop_times(plan: &RunPlan) -> Vec<(f64, bool, bool)> {
    // (time, record diagnostics, record snapshot)
    let mut stops: Vec<(f64, bool, bool)> = Vec::new();
    if plan.cadence > 0.0 {
        let ticks = (plan.t_end / plan.cadence).floor() as usize;
        for k in 1..=ticks {
            let t = k as f64 * plan.cadence;
            if t < plan.t_end * (1.0 - 1e-12) {
                stops.push((t, true, false));
            }
        }
    }
    stops.push((plan.t_end, true, false));
    for &t in &plan.snapshot_times {
        if t > 0.0 && t <= plan.t_end * (1.0 + 1e-12) {
            stops.push((t.min(plan.t_end), false, true));
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, bool, bool)> = Vec::with_capacity(stops.len());
    for s in stops {
        match merged.last_mut() {
            Some(last) if (s.0 - last.0).abs() <= 1e-12 * s.0.max(1.0) => {
                last.1 |= s.1;
                last.2 |= s.2;
            }
            _ => merged.push(s),
        }
    }
    merged
}

/// Integrate from `initial` to `plan.t_end` with adaptive IMEX stepping.
pub fn run(domain: &Domain, model: &ModelSpec, initial: SystemState, plan: &RunPlan) -> Result<Trajectory> {
    domain.validate()?;
    model.validate()?;
    plan.settings.validate()?;
    if !(plan.t_end > 0.0 && plan.t_end.is_finite()) {
        return Err(Error::config(format!("t_end must be positive, got {}", plan.t_end)));
    }
    let report = validate_assumptions(model, domain, &initial);
    let failed: Vec<String> = report
        .mandatory_failures()
        .map(|c| format!("{} ({})", c.id, c.detail))
        .collect();
    if !failed.is_empty() && !plan.allow_violations {
        return Err(Error::Assumptions(failed.join("; ")));
    }

    let settings = &plan.settings;
    let mut stepper = Stepper::new(domain, model);
    let mut state = initial;
    let mut rows = vec![diagnostics::row(domain, &state)?];
    let mut snapshots = Vec::new();
    let mut monitors = RunMonitors {
        m_infinity: state.sup_norm(),
        min_s: state.s.min(),
        min_i: state.i.min(),
        accepted_steps: 0,
        rejected_steps: 0,
        marginal_positivity: marginal_positivity(model, &state),
        mass_identity_defect: 0.0,
    };

    let mut dt_cur = settings.initial_dt(domain, model);
    let mut streak = 0usize;
    let mut mass = state.total_mass(domain);
    let stops = stop_times(plan);
    let mut steps = 0usize;

    for &(stop, record, snapshot) in &stops {
        while state.t < stop {
            steps += 1;
            if steps > settings.max_steps {
                return Err(Error::Numeric {
                    message: format!("step budget {} exhausted at t={}", settings.max_steps, state.t),
                    residual: stop - state.t,
                });
            }
            let gap = stop - state.t;
            let capped = dt_cur.min(reaction_dt_cap(model, state.sup_norm()));
            let lands = capped >= gap * (1.0 - 1e-9);
            let dt = if lands { gap } else { capped };
            match stepper.step(&state, dt)? {
                StepOutcome::Accepted { state: next, mortality } => {
                    let next_mass = next.total_mass(domain);
                    monitors.mass_identity_defect =
                        monitors.mass_identity_defect.max((next_mass - mass + mortality).abs());
                    mass = next_mass;
                    state = next;
                    if lands {
                        state.t = stop;
                    }
                    monitors.accepted_steps += 1;
                    monitors.m_infinity = monitors.m_infinity.max(state.sup_norm());
                    monitors.min_s = monitors.min_s.min(state.s.min());
                    monitors.min_i = monitors.min_i.min(state.i.min());
                    if !lands || dt >= dt_cur {
                        streak += 1;
                        if streak >= GROWTH_AFTER {
                            dt_cur = (dt_cur * GROWTH_FACTOR).min(settings.dt_max);
                            streak = 0;
                        }
                    }
                }
                StepOutcome::Rejected { component, node } => {
                    monitors.rejected_steps += 1;
                    streak = 0;
                    dt_cur = dt.min(dt_cur) * 0.5;
                    if dt_cur < settings.dt_min {
                        return Err(Error::StiffFailure {
                            t: state.t,
                            dt_min: settings.dt_min,
                            component,
                            node,
                        });
                    }
                }
            }
        }
        if record {
            rows.push(diagnostics::row(domain, &state)?);
        }
        if snapshot {
            snapshots.push(state.clone());
        }
    }

    Ok(Trajectory {
        domain: *domain,
        rows,
        snapshots,
        monitors,
        period: model.declared_period(),
        final_state: state,
    })
}

/// Plain-text node dump: a `# t = ...` header then `x [y] S I` per node.
pub fn format_snapshot(domain: &Domain, state: &SystemState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# t = {:?}", state.t);
    let header = if domain.dim() == 2 { "# x y S I" } else { "# x S I" };
    let _ = writeln!(out, "{header}");
    for k in 0..domain.len() {
        let p = domain.node(k);
        if domain.dim() == 2 {
            let _ = writeln!(out, "{:?} {:?} {:?} {:?}", p.x, p.y, state.s[k], state.i[k]);
        } else {
            let _ = writeln!(out, "{:?} {:?} {:?}", p.x, state.s[k], state.i[k]);
        }
    }
    out
}

/// `∫ (S + I)` via midpoint quadrature.
pub fn total_mass(domain: &Domain, state: &SystemState) -> Result<f64> {
    Ok(integrate(domain, &state.s)? + integrate(domain, &state.i)?)
}
