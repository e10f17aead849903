use std::ffi::{CStr, CString};
use std::ptr;

use siepi_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(siepi_last_error_message()) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut SiepiScenario {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { siepi_scenario_from_preset(name.as_ptr(), false, &mut s) }, SiepiStatus::Ok);
    s
}

fn set(s: *mut SiepiScenario, assignment: &str) -> SiepiStatus {
    let a = CString::new(assignment).unwrap();
    unsafe { siepi_scenario_override(s, a.as_ptr()) }
}

#[test]
fn preset_run_roundtrip() {
    let s = preset("thm-2.11-persist");
    assert_eq!(set(s, "solver.t_end=20"), SiepiStatus::Ok);
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { siepi_scenario_run(s, out_dir.as_ptr(), &mut run) }, SiepiStatus::Ok, "{}", last_error());
    assert!(dir.path().join("run/summary.txt").exists());

    let mut outcome = SiepiOutcome {
        kind: SiepiOutcomeKind::Undetermined,
        value: 0.0,
        n_infinity: 0.0,
        m_infinity: 0.0,
        period_residual: 0.0,
    };
    assert_eq!(unsafe { siepi_run_outcome(run, &mut outcome) }, SiepiStatus::Ok);
    assert_eq!(outcome.kind, SiepiOutcomeKind::Persistent);
    assert!(outcome.m_infinity.is_finite());

    let n = unsafe { siepi_run_row_count(run) };
    assert!(n > 10);
    let mut first = SiepiDiagnosticsRow::default();
    let mut last = SiepiDiagnosticsRow::default();
    unsafe {
        assert_eq!(siepi_run_row(run, 0, &mut first), SiepiStatus::Ok);
        assert_eq!(siepi_run_row(run, n - 1, &mut last), SiepiStatus::Ok);
        assert_eq!(siepi_run_row(run, n, &mut last), SiepiStatus::OutOfRange);
    }
    assert!(last_error().contains("out of range"));
    assert_eq!(last.t, 20.0);
    let total = |r: &SiepiDiagnosticsRow| r.mass_s + r.mass_i;
    assert!((total(&first) - total(&last)).abs() < 1e-10 * total(&first));

    let mut spec = SiepiSpectral::default();
    assert_eq!(unsafe { siepi_run_spectral(run, &mut spec) }, SiepiStatus::Ok);
    assert!((spec.r0 - 2.0).abs() < 1e-8 && (spec.lambda0 + 1.0).abs() < 1e-8);

    let summary = unsafe { CStr::from_ptr(siepi_run_summary(run)) }.to_str().unwrap();
    assert!(summary.contains("outcome=Persistent"));

    unsafe {
        siepi_run_free(run);
        siepi_scenario_free(s);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut s = ptr::null_mut();
    let bad = CString::new("[model]\np = 1\nq = 1\nds_ = 2\n[domain]\nL = 1\nn = 10\n").unwrap();
    assert_eq!(unsafe { siepi_scenario_from_str(bad.as_ptr(), &mut s) }, SiepiStatus::Config);
    assert!(s.is_null());
    assert!(last_error().contains("line 4"));

    let name = CString::new("no-such-preset").unwrap();
    assert_eq!(unsafe { siepi_scenario_from_preset(name.as_ptr(), false, &mut s) }, SiepiStatus::Config);
    assert_eq!(unsafe { siepi_scenario_from_preset(ptr::null(), false, &mut s) }, SiepiStatus::NullPointer);

    let bytes = [0xffu8, 0];
    assert_eq!(
        unsafe { siepi_scenario_from_str(bytes.as_ptr().cast(), &mut s) },
        SiepiStatus::InvalidUtf8
    );

    let s = preset("thm-2.11-persist");
    let mut before = SiepiSpectral::default();
    assert_eq!(unsafe { siepi_scenario_spectral(s, &mut before) }, SiepiStatus::Ok);
    assert_eq!(set(s, "model.beta=-1"), SiepiStatus::Config);
    // a failed override leaves the scenario untouched
    let mut spec = SiepiSpectral::default();
    assert_eq!(unsafe { siepi_scenario_spectral(s, &mut spec) }, SiepiStatus::Ok);
    assert_eq!(spec.lambda0, before.lambda0);
    unsafe { siepi_scenario_free(s) };

    let s = preset("thm-2.10-ii");
    assert_eq!(set(s, "solver.t_end=1"), SiepiStatus::Ok);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { siepi_scenario_run(s, ptr::null(), &mut run) }, SiepiStatus::Ok);
    assert_eq!(unsafe { siepi_run_spectral(run, &mut spec) }, SiepiStatus::NotAvailable);
    unsafe {
        siepi_run_free(run);
        siepi_scenario_free(s);
        siepi_run_free(ptr::null_mut());
        siepi_scenario_free(ptr::null_mut());
    }
    assert_eq!(unsafe { siepi_run_row_count(ptr::null()) }, 0);
    assert!(unsafe { siepi_run_summary(ptr::null()) }.is_null());
}

#[test]
fn scalar_helpers() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(siepi_extinction_time_bound(1.0, 1.0, 1.0, 0.5, 1.0, 4.0, &mut v), SiepiStatus::Ok);
        assert!((v - 2f64.ln()).abs() < 1e-12);
        assert_eq!(siepi_extinction_time_bound(1.0, 1.0, 1.0, 1.5, 1.0, 4.0, &mut v), SiepiStatus::Domain);

        // q^q (p-1)^(p-1) N^(p-1+q) / (p-1+q)^(p-1+q) at p=2, q=1, N=2
        assert_eq!(siepi_n_star(2.0, 1.0, 2.0, &mut v), SiepiStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12, "{v}");

        assert_eq!(
            siepi_evaluate_incidence(SiepiIncidenceKind::Power, 0.5, 2.0, 0.0, 4.0, 3.0, &mut v),
            SiepiStatus::Ok
        );
        assert!((v - 18.0).abs() < 1e-12);
        assert_eq!(
            siepi_evaluate_incidence(SiepiIncidenceKind::Binomial, 0.0, 0.0, 1.0, 2.0, std::f64::consts::E - 1.0, &mut v),
            SiepiStatus::Ok
        );
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(
            siepi_evaluate_incidence(SiepiIncidenceKind::Power, 1.0, 1.0, 0.0, -1.0, 1.0, &mut v),
            SiepiStatus::Domain
        );
        assert_eq!(siepi_n_star(2.0, 1.0, 0.25, ptr::null_mut()), SiepiStatus::NullPointer);
    }
    let version = unsafe { CStr::from_ptr(siepi_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}
