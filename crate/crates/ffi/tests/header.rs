use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_public_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/siepi.h")).unwrap();
    assert!(header.contains("#ifndef SIEPI_H"));
    for item in [
        "typedef struct SiepiScenario SiepiScenario;",
        "typedef struct SiepiRun SiepiRun;",
        "SIEPI_STATUS_OK = 0",
        "SIEPI_STATUS_PANIC",
        "siepi_last_error_message",
        "siepi_scenario_from_str",
        "siepi_scenario_from_preset",
        "siepi_scenario_override",
        "siepi_scenario_run",
        "siepi_run_outcome",
        "siepi_run_row",
        "siepi_run_spectral",
        "siepi_n_star",
        "siepi_extinction_time_bound",
        "siepi_evaluate_incidence",
        "siepi_scenario_free",
        "siepi_run_free",
    ] {
        assert!(header.contains(item), "missing {item}");
    }
}

// target/<profile>/deps/<test binary> -> target/<profile>
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = profile_dir().join("libsiepi_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c_smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = status else {
        eprintln!("skipping: no C compiler ({cc})");
        return;
    };
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("rows="), "{text}");
}
