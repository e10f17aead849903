//! Spatially homogeneous models: the SI system with mortality
//! `S' = -βS^qI^p, I' = βS^qI^p - μI` and the SIS system
//! `S' = -βS^qI^p + γI, I' = βS^qI^p - γI` (`S + I = N`), with their
//! closed-form classifications and a fixed-step RK4 oracle.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for deciding that a threshold holds with equality.
pub const EQUALITY_RTOL: f64 = 1e-12;

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUALITY_RTOL * a.abs().max(b.abs())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiOdeParams {
    pub beta: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub s0: f64,
    pub i0: f64,
}

impl SiOdeParams {
    pub fn new(beta: f64, mu: f64, p: f64, q: f64, s0: f64, i0: f64) -> Result<Self> {
        let params = Self { beta, mu, p, q, s0, i0 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        positive("beta", self.beta)?;
        positive("mu", self.mu)?;
        positive("p", self.p)?;
        positive("q", self.q)?;
        positive("S0", self.s0)?;
        positive("I0", self.i0)
    }

    /// `(μ p S0^{1-q}, (1-q) β I0^p)`, the two sides of the finite-time test.
    fn extinction_sides(&self) -> (f64, f64) {
        (
            self.mu * self.p * self.s0.powf(1.0 - self.q),
            (1.0 - self.q) * self.beta * self.i0.powf(self.p),
        )
    }

    /// Left side of the positive-limit test `p S0^{1-q}[μ - β S0^q I0^{p-1}]`.
    fn positive_limit_side(&self) -> f64 {
        self.p * self.s0.powf(1.0 - self.q) * (self.mu - self.beta * self.s0.powf(self.q) * self.i0.powf(self.p - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SiOutcome {
    BothToZero,
    /// `S` reaches zero no later than `t_upper`.
    SHitsZeroFiniteTime { t_upper: f64 },
    SToPositiveLimit,
    Unclassified,
}

impl SiOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SiOutcome::BothToZero => "BothToZero",
            SiOutcome::SHitsZeroFiniteTime { .. } => "SHitsZeroFiniteTime",
            SiOutcome::SToPositiveLimit => "SToPositiveLimit",
            SiOutcome::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for SiOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiOutcome::SHitsZeroFiniteTime { t_upper } => write!(f, "SHitsZeroFiniteTime(T*={t_upper})"),
            other => f.write_str(other.label()),
        }
    }
}

/// Case table for `q < 1` (equality, strict finite-time inequality,
/// positive-limit inequality for `p >= 1`), then the general facts
/// `p < 1 ⇒ (0,0)` and `p, q >= 1 ⇒ S* > 0`.
pub fn si_classify(params: &SiOdeParams) -> SiOutcome {
    let SiOdeParams { p, q, .. } = *params;
    if q < 1.0 {
        let (lhs, rhs) = params.extinction_sides();
        if nearly_equal(lhs, rhs) {
            return SiOutcome::BothToZero;
        }
        if lhs < rhs {
            return match extinction_time_bound(params) {
                Ok(t_upper) => SiOutcome::SHitsZeroFiniteTime { t_upper },
                Err(_) => SiOutcome::Unclassified,
            };
        }
        if p >= 1.0 && params.positive_limit_side() > rhs {
            return SiOutcome::SToPositiveLimit;
        }
        if p < 1.0 {
            return SiOutcome::BothToZero;
        }
        return SiOutcome::Unclassified;
    }
    if p < 1.0 {
        SiOutcome::BothToZero
    } else {
        SiOutcome::SToPositiveLimit
    }
}

/// `T* = -(1/(pμ)) ln(1 - pμ S0^{1-q} / ((1-q) β I0^p))`, an upper bound on
/// the time at which `S` reaches zero.
pub fn extinction_time_bound(params: &SiOdeParams) -> Result<f64> {
    params.validate()?;
    if !(params.q < 1.0) {
        return Err(Error::Domain(format!("finite-time extinction needs q < 1, got q={}", params.q)));
    }
    let (lhs, rhs) = params.extinction_sides();
    if !(lhs < rhs) || nearly_equal(lhs, rhs) {
        return Err(Error::Domain(format!(
            "finite-time extinction needs mu*p*S0^(1-q) < (1-q)*beta*I0^p strictly, got {lhs} >= {rhs}"
        )));
    }
    let pm = params.p * params.mu;
    Ok(-(1.0 - lhs / rhs).ln() / pm)
}

/// `q^q (p-1)^{p-1} / (p-1+q)^{p-1+q} · N^{p-1+q}`
pub fn n_star(p: f64, q: f64, n: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("n_star needs p > 1, got {p}")));
    }
    positive("q", q)?;
    positive("N", n)?;
    let e = p - 1.0 + q;
    Ok(q.powf(q) * (p - 1.0).powf(p - 1.0) / e.powf(e) * n.powf(e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SisOdeParams {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub n: f64,
    pub s0: f64,
}

impl SisOdeParams {
    pub fn new(beta: f64, gamma: f64, p: f64, q: f64, n: f64, s0: f64) -> Result<Self> {
        let params = Self { beta, gamma, p, q, n, s0 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        positive("beta", self.beta)?;
        positive("gamma", self.gamma)?;
        positive("p", self.p)?;
        positive("q", self.q)?;
        positive("N", self.n)?;
        if !(self.s0 > 0.0 && self.s0 < self.n) {
            return Err(Error::Domain(format!("S0 must lie in (0, N={}), got {}", self.n, self.s0)));
        }
        Ok(())
    }

    pub fn i0(&self) -> f64 {
        self.n - self.s0
    }

    /// `h(S) = β S^q (N-S)^{p-1} - γ`; interior steady states are its roots.
    pub fn profile(&self, s: f64) -> f64 {
        self.beta * s.powf(self.q) * (self.n - s).powf(self.p - 1.0) - self.gamma
    }

    /// Reduced field `dS/dt = -β S^q (N-S)^p + γ (N-S)`.
    pub fn reduced_field(&self, s: f64) -> f64 {
        let i = (self.n - s).max(0.0);
        -self.beta * s.max(0.0).powf(self.q) * i.powf(self.p) + self.gamma * i
    }

    /// Threshold `γ` is compared against: `β N*` for `p > 1`, `β N^q` for `p = 1`.
    pub fn threshold(&self) -> Option<f64> {
        if self.p > 1.0 {
            n_star(self.p, self.q, self.n).ok().map(|ns| self.beta * ns)
        } else if self.p == 1.0 {
            Some(self.beta * self.n.powf(self.q))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Attracting,
    Repelling,
    /// Attracts from one side only.
    SemiStable { attracting_from_below: bool },
    /// The disease-free state `(N, 0)`, approached from below or not.
    Boundary { attracting_from_below: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub s: f64,
    pub i: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSet {
    /// Interior states sorted by `S`, followed by the boundary state `(N, 0)`.
    pub states: Vec<SteadyState>,
}

impl SteadyStateSet {
    pub fn interior(&self) -> impl Iterator<Item = &SteadyState> {
        self.states
            .iter()
            .filter(|s| !matches!(s.stability, Stability::Boundary { .. }))
    }

    pub fn interior_count(&self) -> usize {
        self.interior().count()
    }
}

const BISECTION_ITERS: usize = 200;

/// Root of a sign-changing `f` on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interior roots of `h` in `(0, N)`: one for `p <= 1` (when it exists), up to
/// two around the maximizer `S_m = qN/(p-1+q)` for `p > 1`.
fn interior_roots(params: &SisOdeParams) -> Vec<f64> {
    let SisOdeParams { beta, gamma, p, q, n, .. } = *params;
    let h = |s: f64| params.profile(s);
    if p > 1.0 {
        let threshold = params.threshold().expect("p > 1");
        let s_m = q * n / (p - 1.0 + q);
        if nearly_equal(gamma, threshold) {
            vec![s_m]
        } else if gamma < threshold {
            vec![bisect(h, 0.0, s_m), bisect(h, s_m, n)]
        } else {
            vec![]
        }
    } else if p == 1.0 {
        let threshold = beta * n.powf(q);
        if gamma < threshold && !nearly_equal(gamma, threshold) {
            vec![(gamma / beta).powf(1.0 / q)]
        } else {
            vec![]
        }
    } else {
        // h → -γ at 0 and → +∞ at N, strictly increasing
        let mut hi = n;
        for k in 1..=60 {
            let trial = n * (1.0 - 0.5f64.powi(k));
            if h(trial) > 0.0 {
                hi = trial;
                break;
            }
        }
        vec![bisect(h, 0.0, hi)]
    }
}

/// Steady states of the SIS model, tagged by the sign of the reduced field on each side.
pub fn sis_steady_states(params: &SisOdeParams) -> SteadyStateSet {
    let roots = interior_roots(params);
    let n = params.n;
    let mut edges = vec![0.0];
    edges.extend(&roots);
    edges.push(n);
    // sign of h on each open interval between consecutive roots; dS/dt = -(N-S) h(S)
    let h_sign: Vec<f64> = edges
        .windows(2)
        .map(|w| params.profile(0.5 * (w[0] + w[1])).signum())
        .collect();
    let mut states: Vec<SteadyState> = roots
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let from_below = h_sign[k] < 0.0;
            let from_above = h_sign[k + 1] > 0.0;
            let stability = match (from_below, from_above) {
                (true, true) => Stability::Attracting,
                (false, false) => Stability::Repelling,
                (b, _) => Stability::SemiStable { attracting_from_below: b },
            };
            SteadyState { s, i: n - s, stability }
        })
        .collect();
    states.push(SteadyState {
        s: n,
        i: 0.0,
        stability: Stability::Boundary {
            attracting_from_below: *h_sign.last().expect("at least one interval") < 0.0,
        },
    });
    SteadyStateSet { states }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SisOutcome {
    Interior { s: f64, i: f64 },
    DiseaseFree { n: f64 },
    /// `p = 1` with `γ = βN^q` exactly: not covered by the case table.
    Unclassified,
}

impl SisOutcome {
    pub fn limit(&self) -> Option<(f64, f64)> {
        match *self {
            SisOutcome::Interior { s, i } => Some((s, i)),
            SisOutcome::DiseaseFree { n } => Some((n, 0.0)),
            SisOutcome::Unclassified => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SisOutcome::Interior { .. } => "Interior",
            SisOutcome::DiseaseFree { .. } => "DiseaseFree",
            SisOutcome::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for SisOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.limit() {
            Some((s, i)) => write!(f, "{}({s};{i})", self.label()),
            None => f.write_str(self.label()),
        }
    }
}

/// Predicted limit of the SIS model from the steady-state case table.
pub fn sis_classify(params: &SisOdeParams) -> SisOutcome {
    let set = sis_steady_states(params);
    let interior: Vec<&SteadyState> = set.interior().collect();
    let n = params.n;
    let s0 = params.s0;
    let to = |st: &SteadyState| SisOutcome::Interior { s: st.s, i: st.i };
    let free = SisOutcome::DiseaseFree { n };
    if params.p > 1.0 {
        match interior.as_slice() {
            [lower, upper] => {
                if nearly_equal(s0, upper.s) {
                    to(upper)
                } else if s0 < upper.s {
                    to(lower)
                } else {
                    free
                }
            }
            [only] => {
                if s0 <= only.s || nearly_equal(s0, only.s) {
                    to(only)
                } else {
                    free
                }
            }
            _ => free,
        }
    } else if params.p == 1.0 {
        let threshold = params.threshold().expect("p = 1");
        if nearly_equal(params.gamma, threshold) {
            SisOutcome::Unclassified
        } else if let [only] = interior.as_slice() {
            to(only)
        } else {
            free
        }
    } else {
        to(interior[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeSystem {
    Si(SiOdeParams),
    Sis(SisOdeParams),
    /// Scalar reduced SIS equation for `S`; `I = N - S`.
    Reduced(SisOdeParams),
}

impl OdeSystem {
    fn initial(&self) -> (f64, f64) {
        match self {
            OdeSystem::Si(p) => (p.s0, p.i0),
            OdeSystem::Sis(p) | OdeSystem::Reduced(p) => (p.s0, p.i0()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OdeSystem::Si(p) => p.validate(),
            OdeSystem::Sis(p) | OdeSystem::Reduced(p) => p.validate(),
        }
    }

    #[inline]
    fn field(&self, s: f64, i: f64) -> (f64, f64) {
        match self {
            OdeSystem::Si(p) => {
                let inc = p.beta * s.max(0.0).powf(p.q) * i.max(0.0).powf(p.p);
                (-inc, inc - p.mu * i)
            }
            OdeSystem::Sis(p) => {
                let g = p.beta * s.max(0.0).powf(p.q) * i.max(0.0).powf(p.p) - p.gamma * i;
                (-g, g)
            }
            OdeSystem::Reduced(p) => {
                let ds = p.reduced_field(s);
                (ds, -ds)
            }
        }
    }
}

/// Fixed-step RK4 state machine.
#[derive(Debug, Clone)]
struct Rk4 {
    system: OdeSystem,
    s: f64,
    i: f64,
    t: f64,
    clamp_time: Option<f64>,
}

impl Rk4 {
    fn new(system: OdeSystem) -> Self {
        let (s, i) = system.initial();
        Self {
            system,
            s,
            i,
            t: 0.0,
            clamp_time: None,
        }
    }

    fn step(&mut self, dt: f64) -> Result<()> {
        let f = |s, i| self.system.field(s, i);
        let (s, i) = (self.s, self.i);
        let k1 = f(s, i);
        let k2 = f(s + 0.5 * dt * k1.0, i + 0.5 * dt * k1.1);
        let k3 = f(s + 0.5 * dt * k2.0, i + 0.5 * dt * k2.1);
        let k4 = f(s + dt * k3.0, i + dt * k3.1);
        let mut s_new = s + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let mut i_new = i + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        self.t += dt;
        if let OdeSystem::Reduced(p) = self.system {
            i_new = p.n - s_new;
        }
        if !(s_new.is_finite() && i_new.is_finite()) {
            return Err(Error::Numeric {
                message: format!("non-finite ODE state at t={}", self.t),
                residual: f64::NAN,
            });
        }
        if matches!(self.system, OdeSystem::Si(_)) && s_new < 0.0 {
            s_new = 0.0;
            self.clamp_time.get_or_insert(self.t);
        }
        self.s = s_new;
        self.i = i_new;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    /// First time `S` was clamped at zero (SI only).
    pub clamp_time: Option<f64>,
    /// `max |S + I - N|` for the SIS systems.
    pub conservation_drift: Option<f64>,
}

impl OdeTrajectory {
    pub fn terminal(&self) -> (f64, f64) {
        (*self.s.last().expect("nonempty"), *self.i.last().expect("nonempty"))
    }
}

/// Fixed-step RK4 from `t = 0` to `t_end` (the last step is shortened to land exactly).
pub fn rk4_integrate(system: &OdeSystem, t_end: f64, dt: f64) -> Result<OdeTrajectory> {
    system.validate()?;
    if !(dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Domain(format!("rk4 needs dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")));
    }
    let mut rk = Rk4::new(*system);
    let steps = (t_end / dt).ceil() as usize;
    let mut out = OdeTrajectory {
        times: Vec::with_capacity(steps + 1),
        s: Vec::with_capacity(steps + 1),
        i: Vec::with_capacity(steps + 1),
        clamp_time: None,
        conservation_drift: None,
    };
    let n = match system {
        OdeSystem::Si(_) => None,
        OdeSystem::Sis(p) | OdeSystem::Reduced(p) => Some(p.n),
    };
    let mut drift: f64 = 0.0;
    let mut record = |rk: &Rk4, out: &mut OdeTrajectory| {
        out.times.push(rk.t);
        out.s.push(rk.s);
        out.i.push(rk.i);
        if let Some(n) = n {
            drift = drift.max((rk.s + rk.i - n).abs());
        }
    };
    record(&rk, &mut out);
    for k in 0..steps {
        let h = if k + 1 == steps { t_end - rk.t } else { dt };
        rk.step(h)?;
        record(&rk, &mut out);
    }
    out.clamp_time = rk.clamp_time;
    if let Some(n) = n {
        if drift > 1e-10 * n {
            return Err(Error::Numeric {
                message: format!("S + I drifted from N={n}"),
                residual: drift,
            });
        }
        out.conservation_drift = Some(drift);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub s: f64,
    pub i: f64,
    pub t: f64,
    pub clamp_time: Option<f64>,
    /// Sup-norm change over the last tenth of the horizon.
    pub last_decade_movement: f64,
}

/// Integrates over `[0, T]` with `T` doubling from `t_start` until the change
/// over `[0.9T, T]` is below `movement_tol` or `t_max` is reached.
pub fn rk4_until_settled(system: &OdeSystem, dt: f64, t_start: f64, t_max: f64, movement_tol: f64) -> Result<Terminal> {
    system.validate()?;
    let mut rk = Rk4::new(*system);
    let mut horizon = t_start.min(t_max);
    loop {
        let mark = 0.9 * horizon;
        let advance = |rk: &mut Rk4, until: f64| -> Result<()> {
            while rk.t < until - 1e-12 * until.max(1.0) {
                rk.step(dt.min(until - rk.t))?;
            }
            Ok(())
        };
        advance(&mut rk, mark)?;
        let (s_mark, i_mark) = (rk.s, rk.i);
        advance(&mut rk, horizon)?;
        let movement = (rk.s - s_mark).abs().max((rk.i - i_mark).abs());
        if movement < movement_tol || horizon >= t_max {
            return Ok(Terminal {
                s: rk.s,
                i: rk.i,
                t: rk.t,
                clamp_time: rk.clamp_time,
                last_decade_movement: movement,
            });
        }
        horizon = (2.0 * horizon).min(t_max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSweepSettings {
    pub points: usize,
    pub seed: u64,
    /// Relative exclusion band around every analytic threshold.
    pub band: f64,
    /// Terminal matching tolerance.
    pub tol: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_max: f64,
    pub movement: f64,
}

impl Default for OdeSweepSettings {
    fn default() -> Self {
        Self {
            points: 200,
            seed: 20_240_601,
            band: 0.05,
            tol: 1e-3,
            dt: 0.005,
            t_start: 50.0,
            t_max: 5000.0,
            movement: 1e-6,
        }
    }
}

/// One row of `p,q,beta,gamma_or_mu,N_or_I0,S0,predicted,observed,agree`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSweepRow {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub gamma_or_mu: f64,
    pub n_or_i0: f64,
    pub s0: f64,
    pub predicted: String,
    pub observed: String,
    pub agree: bool,
}

pub const ODE_SWEEP_HEADER: &str = "p,q,beta,gamma_or_mu,N_or_I0,S0,predicted,observed,agree";

pub fn ode_sweep_csv(rows: &[OdeSweepRow]) -> String {
    let mut out = String::from(ODE_SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.p, r.q, r.beta, r.gamma_or_mu, r.n_or_i0, r.s0, r.predicted, r.observed, r.agree
        ));
    }
    out
}

fn outside_band(a: f64, b: f64, band: f64) -> bool {
    (a - b).abs() > band * a.abs().max(b.abs())
}

/// True when `params` is classified and at least `band` away from every SI threshold.
pub fn si_eligible(params: &SiOdeParams, band: f64) -> bool {
    let outcome = si_classify(params);
    if outcome == SiOutcome::Unclassified {
        return false;
    }
    let away = |x: f64| outside_band(x, 1.0, band);
    if !away(params.p) || !away(params.q) {
        return false;
    }
    if params.q < 1.0 {
        let (lhs, rhs) = params.extinction_sides();
        if !outside_band(lhs, rhs, band) {
            return false;
        }
        if params.p >= 1.0 && !outside_band(params.positive_limit_side(), rhs, band) {
            return false;
        }
    }
    true
}

/// True when `params` is at least `band` away from `γ = βN*`, `γ = βN^q` and `S0 = S^*`.
pub fn sis_eligible(params: &SisOdeParams, band: f64) -> bool {
    if let Some(threshold) = params.threshold() {
        if !outside_band(params.gamma, threshold, band) {
            return false;
        }
    }
    if params.p != 1.0 && !outside_band(params.p, 1.0, band) {
        return false;
    }
    if params.p > 1.0 {
        let set = sis_steady_states(params);
        let upper = set.interior().nth(1).map(|st| st.s);
        if upper.is_some_and(|s| !outside_band(params.s0, s, band)) {
            return false;
        }
    }
    sis_classify(params) != SisOutcome::Unclassified
}

/// Observed SI label from a terminal state: an infected remainder above `tol`
/// leaves the outcome open; otherwise a clamp event, a vanished `S`, or a
/// positive `S` limit.
pub fn si_observed(term: &Terminal, tol: f64) -> &'static str {
    if term.i >= tol {
        "Undetermined"
    } else if term.clamp_time.is_some() {
        "SHitsZeroFiniteTime"
    } else if term.s < tol {
        "BothToZero"
    } else {
        "SToPositiveLimit"
    }
}

pub fn si_agrees(predicted: &SiOutcome, observed: &str, term: &Terminal) -> bool {
    match predicted {
        SiOutcome::BothToZero => observed == "BothToZero" || observed == "SHitsZeroFiniteTime",
        SiOutcome::SHitsZeroFiniteTime { t_upper } => {
            observed == "SHitsZeroFiniteTime" && term.clamp_time.is_some_and(|t| t <= t_upper + 0.01)
        }
        SiOutcome::SToPositiveLimit => observed == "SToPositiveLimit",
        SiOutcome::Unclassified => false,
    }
}

fn si_candidate(rng: &mut ChaCha8Rng) -> SiOdeParams {
    // For p < 1 the late phase follows S' ≈ -C S^a with a = q/(1-p), which is
    // only algebraic for a > 1; q is drawn through a <= 1.4 so the decay to
    // zero is resolvable within t_max.
    // For p, q >= 1 the limit S* shrinks quickly as β/μ grows; β <= μ keeps it
    // above the observation tolerance.
    let (p, q, beta, mu) = match rng.gen_range(0..3) {
        0 => {
            let p = rng.gen_range(0.2..0.6);
            let q = rng.gen_range(0.5..1.4) * (1.0 - p);
            (p, q, rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0))
        }
        1 => (rng.gen_range(1.1..2.5), rng.gen_range(0.3..0.9), rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)),
        _ => {
            let mu = rng.gen_range(0.5..2.0);
            (rng.gen_range(1.1..2.5), rng.gen_range(1.1..2.0), mu * rng.gen_range(0.1..1.0), mu)
        }
    };
    SiOdeParams {
        beta,
        mu,
        p,
        q,
        s0: rng.gen_range(0.2..2.0),
        i0: rng.gen_range(0.1..2.0),
    }
}

fn sis_candidate(rng: &mut ChaCha8Rng) -> SisOdeParams {
    let p = match rng.gen_range(0..3) {
        0 => rng.gen_range(0.3..0.9),
        1 => 1.0,
        _ => rng.gen_range(1.2..3.0),
    };
    let n = rng.gen_range(0.5..2.0);
    SisOdeParams {
        beta: rng.gen_range(0.5..3.0),
        gamma: rng.gen_range(0.1..1.5),
        p,
        q: rng.gen_range(0.5..2.0),
        n,
        s0: n * rng.gen_range(0.05..0.95),
    }
}

fn draw<T>(settings: &OdeSweepSettings, candidate: fn(&mut ChaCha8Rng) -> T, eligible: impl Fn(&T) -> bool) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut out = Vec::with_capacity(settings.points);
    while out.len() < settings.points {
        let c = candidate(&mut rng);
        if eligible(&c) {
            out.push(c);
        }
    }
    out
}

/// Random SI sweep outside the threshold bands: predicted vs RK4-observed behavior.
pub fn si_sweep(settings: &OdeSweepSettings) -> Result<Vec<OdeSweepRow>> {
    let points = draw(settings, si_candidate, |c| si_eligible(c, settings.band));
    points
        .par_iter()
        .map(|params| {
            let predicted = si_classify(params);
            let term = rk4_until_settled(&OdeSystem::Si(*params), settings.dt, settings.t_start, settings.t_max, settings.movement)?;
            let observed = si_observed(&term, settings.tol);
            Ok(OdeSweepRow {
                p: params.p,
                q: params.q,
                beta: params.beta,
                gamma_or_mu: params.mu,
                n_or_i0: params.i0,
                s0: params.s0,
                predicted: predicted.label().to_string(),
                observed: observed.to_string(),
                agree: si_agrees(&predicted, observed, &term),
            })
        })
        .collect()
}

/// Random SIS sweep outside the threshold bands: predicted limit vs RK4 terminal state.
pub fn sis_sweep(settings: &OdeSweepSettings) -> Result<Vec<OdeSweepRow>> {
    let points = draw(settings, sis_candidate, |c| sis_eligible(c, settings.band));
    points.par_iter().map(|params| sis_row(params, settings)).collect()
}

pub fn sis_row(params: &SisOdeParams, settings: &OdeSweepSettings) -> Result<OdeSweepRow> {
    let predicted = sis_classify(params);
    let term = rk4_until_settled(&OdeSystem::Sis(*params), settings.dt, settings.t_start, settings.t_max, settings.movement)?;
    let observed = if term.i < settings.tol { "DiseaseFree" } else { "Interior" };
    let agree = predicted
        .limit()
        .is_some_and(|(s, i)| (term.s - s).abs().max((term.i - i).abs()) <= settings.tol);
    Ok(OdeSweepRow {
        p: params.p,
        q: params.q,
        beta: params.beta,
        gamma_or_mu: params.gamma,
        n_or_i0: params.n,
        s0: params.s0,
        predicted: predicted.to_string(),
        observed: format!("{observed}({};{})", term.s, term.i),
        agree,
    })
}
