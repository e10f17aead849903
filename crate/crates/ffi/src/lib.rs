//! C ABI for the `siepi` simulator.
//!
//! Scenarios and runs are opaque handles created and destroyed through this
//! API. Every fallible call returns a [`SiepiStatus`]; on failure the message
//! is available from [`siepi_last_error_message`] on the same thread. Panics
//! never cross the boundary: they surface as `SIEPI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use siepi::diagnostics::{DiagnosticsRow, Outcome};
use siepi::harness::{self, ScenarioConfig, ScenarioReport};
use siepi::model::{evaluate_incidence, IncidenceKind};
use siepi::ode::{self, SiOdeParams};
use siepi::spectral::SpectralResult;
use siepi::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiepiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Numeric = 5,
    StiffFailure = 6,
    NonFinite = 7,
    Assumptions = 8,
    Io = 9,
    OutOfRange = 10,
    /// The requested quantity does not exist for this run (e.g. no spectral results).
    NotAvailable = 11,
    Panic = 12,
}

/// Resolved scenario configuration.
pub struct SiepiScenario {
    config: ScenarioConfig,
}

/// Finished run: trajectory, classification and summary.
pub struct SiepiRun {
    report: ScenarioReport,
    summary: CString,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiepiOutcomeKind {
    DiseaseFreeLimit = 0,
    ExtinctionBoth = 1,
    Persistent = 2,
    PeriodicCandidate = 3,
    Undetermined = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SiepiOutcome {
    pub kind: SiepiOutcomeKind,
    /// `S*`, persistence floor or period residual; NaN when the outcome has none.
    pub value: f64,
    /// Tail sup-norm monitor; NaN when the tail window was too short.
    pub n_infinity: f64,
    /// Running sup-norm monitor over the whole run.
    pub m_infinity: f64,
    /// NaN unless a periodicity check ran.
    pub period_residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SiepiDiagnosticsRow {
    pub t: f64,
    pub mass_s: f64,
    pub mass_i: f64,
    pub sup_s: f64,
    pub sup_i: f64,
    pub min_s: f64,
    pub min_i: f64,
    pub l2_s: f64,
    pub l2_i: f64,
    pub flat_s: f64,
    pub flat_i: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SiepiSpectral {
    pub lambda0: f64,
    pub rho: f64,
    /// NaN when undefined (no recovery).
    pub r0: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiepiIncidenceKind {
    /// `S^q I^p`
    Power = 0,
    /// `S ln(1 + k I)`; `param` is `k`
    Binomial = 1,
    /// `S^q I^p / (1 + I^ℓ)`; `param` is `ℓ`
    Saturated = 2,
    /// `S^q I^p e^{-I} / (1 + I^ℓ)`; `param` is `ℓ`
    Media = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SiepiStatus {
    match e {
        Error::Config { .. } => SiepiStatus::Config,
        Error::Domain(_) => SiepiStatus::Domain,
        Error::Numeric { .. } => SiepiStatus::Numeric,
        Error::StiffFailure { .. } => SiepiStatus::StiffFailure,
        Error::NonFinite { .. } => SiepiStatus::NonFinite,
        Error::Assumptions(_) => SiepiStatus::Assumptions,
        Error::Io { .. } => SiepiStatus::Io,
    }
}

struct Failure(SiepiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SiepiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SiepiStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SiepiStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SiepiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SiepiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn siepi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn siepi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a scenario from config text. Relative table paths resolve against the working directory.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_scenario_from_str(text: *const c_char, out: *mut *mut SiepiScenario) -> SiepiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = harness::parse_config(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(SiepiScenario { config }));
        Ok(())
    })
}

/// Load a built-in preset; `two_d` selects the square-domain variant.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_scenario_from_preset(
    name: *const c_char,
    two_d: bool,
    out: *mut *mut SiepiScenario,
) -> SiepiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = harness::preset_config(str_arg(name, "name")?, two_d, &[])?;
        *out = Box::into_raw(Box::new(SiepiScenario { config }));
        Ok(())
    })
}

/// Apply one `section.key=value` override in place.
///
/// # Safety
/// `scenario` must come from this library; `assignment` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn siepi_scenario_override(scenario: *mut SiepiScenario, assignment: *const c_char) -> SiepiStatus {
    guard(|| {
        let scenario = out_arg(scenario, "scenario")?;
        let layer = harness::overrides_layer(&[str_arg(assignment, "assignment")?.to_string()])?;
        let config = harness::resolve_layers([scenario.config.resolved.clone(), layer], Path::new("."))?;
        scenario.config = config;
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn siepi_scenario_free(scenario: *mut SiepiScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Principal eigenvalue and R0 of the scenario's linearization.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_scenario_spectral(scenario: *const SiepiScenario, out: *mut SiepiSpectral) -> SiepiStatus {
    guard(|| {
        let scenario = ref_arg(scenario, "scenario")?;
        let out = out_arg(out, "out")?;
        *out = spectral_c(&harness::spectral_for(&scenario.config)?);
        Ok(())
    })
}

/// Run the scenario. With a non-null `out_dir`, artifacts are written there.
///
/// # Safety
/// `scenario` must come from this library; `out_dir` is null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_scenario_run(
    scenario: *const SiepiScenario,
    out_dir: *const c_char,
    out: *mut *mut SiepiRun,
) -> SiepiStatus {
    guard(|| {
        let scenario = ref_arg(scenario, "scenario")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let dir = if out_dir.is_null() {
            None
        } else {
            let d = Path::new(str_arg(out_dir, "out_dir")?);
            std::fs::create_dir_all(d).map_err(|e| Error::Io {
                path: d.to_path_buf(),
                source: e,
            })?;
            Some(d)
        };
        let report = harness::run_scenario(&scenario.config, dir)?;
        let summary = CString::new(report.summary.replace('\0', " ")).unwrap_or_default();
        *out = Box::into_raw(Box::new(SiepiRun { report, summary }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn siepi_run_free(run: *mut SiepiRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_run_outcome(run: *const SiepiRun, out: *mut SiepiOutcome) -> SiepiStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let out = out_arg(out, "out")?;
        let r = &run.report.outcome;
        let kind = match r.outcome {
            Outcome::DiseaseFreeLimit { .. } => SiepiOutcomeKind::DiseaseFreeLimit,
            Outcome::ExtinctionBoth => SiepiOutcomeKind::ExtinctionBoth,
            Outcome::Persistent { .. } => SiepiOutcomeKind::Persistent,
            Outcome::PeriodicCandidate { .. } => SiepiOutcomeKind::PeriodicCandidate,
            Outcome::Undetermined { .. } => SiepiOutcomeKind::Undetermined,
        };
        *out = SiepiOutcome {
            kind,
            value: r.outcome.value(),
            n_infinity: r.evidence.map_or(f64::NAN, |e| e.n_infinity()),
            m_infinity: run.report.trajectory.monitors.m_infinity,
            period_residual: r.period_residual.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Number of diagnostics rows; 0 for a null handle.
///
/// # Safety
/// `run` is null or comes from this library.
#[no_mangle]
pub unsafe extern "C" fn siepi_run_row_count(run: *const SiepiRun) -> usize {
    run.as_ref().map_or(0, |r| r.report.trajectory.rows.len())
}

/// # Safety
/// `run` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_run_row(run: *const SiepiRun, index: usize, out: *mut SiepiDiagnosticsRow) -> SiepiStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let out = out_arg(out, "out")?;
        let rows = &run.report.trajectory.rows;
        let r: &DiagnosticsRow = rows.get(index).ok_or_else(|| {
            Failure(
                SiepiStatus::OutOfRange,
                format!("row {index} out of range ({} rows)", rows.len()),
            )
        })?;
        *out = SiepiDiagnosticsRow {
            t: r.t,
            mass_s: r.mass_s,
            mass_i: r.mass_i,
            sup_s: r.sup_s,
            sup_i: r.sup_i,
            min_s: r.min_s,
            min_i: r.min_i,
            l2_s: r.l2_s,
            l2_i: r.l2_i,
            flat_s: r.flat_s,
            flat_i: r.flat_i,
        };
        Ok(())
    })
}

/// Spectral results computed with the run (`μ ≡ 0`, `p = 1` only).
///
/// # Safety
/// `run` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_run_spectral(run: *const SiepiRun, out: *mut SiepiSpectral) -> SiepiStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let out = out_arg(out, "out")?;
        let s = run.report.spectral.as_ref().ok_or_else(|| {
            Failure(
                SiepiStatus::NotAvailable,
                "spectral results are computed only for mu = 0 and p = 1".into(),
            )
        })?;
        *out = spectral_c(s);
        Ok(())
    })
}

/// Human-readable summary; owned by `run`.
///
/// # Safety
/// `run` is null or comes from this library. Returns null for a null handle.
#[no_mangle]
pub unsafe extern "C" fn siepi_run_summary(run: *const SiepiRun) -> *const c_char {
    run.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

fn spectral_c(s: &SpectralResult) -> SiepiSpectral {
    SiepiSpectral {
        lambda0: s.lambda0,
        rho: s.rho,
        r0: s.r0.unwrap_or(f64::NAN),
        iterations: s.iterations,
        residual: s.residual,
    }
}

/// SIS threshold `q^q (p-1)^{p-1} / (p-1+q)^{p-1+q} · N^{p-1+q}`; interior states exist when it exceeds `γ/β`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_n_star(p: f64, q: f64, n: f64, out: *mut f64) -> SiepiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ode::n_star(p, q, n)?;
        Ok(())
    })
}

/// Upper bound on the time at which S reaches zero in the SI ODE.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_extinction_time_bound(
    beta: f64,
    mu: f64,
    p: f64,
    q: f64,
    s0: f64,
    i0: f64,
    out: *mut f64,
) -> SiepiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ode::extinction_time_bound(&SiOdeParams::new(beta, mu, p, q, s0, i0)?)?;
        Ok(())
    })
}

/// Incidence kernel `K(S, I)` (without β). `param` is `k` or `ℓ` as the kind requires.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siepi_evaluate_incidence(
    kind: SiepiIncidenceKind,
    q: f64,
    p: f64,
    param: f64,
    s: f64,
    i: f64,
    out: *mut f64,
) -> SiepiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind = match kind {
            SiepiIncidenceKind::Power => IncidenceKind::Power { q, p },
            SiepiIncidenceKind::Binomial => IncidenceKind::Binomial { k: param },
            SiepiIncidenceKind::Saturated => IncidenceKind::Saturated { q, p, ell: param },
            SiepiIncidenceKind::Media => IncidenceKind::Media { q, p, ell: param },
        };
        *out = evaluate_incidence(&kind, s, i)?;
        Ok(())
    })
}
