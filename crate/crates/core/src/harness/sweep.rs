//! Parameter sweeps. A spec names a kind, a base and a `[grid]` of values;
//! points are the cartesian product of the grid (keys in sorted order, last key
//! fastest). With an output directory, finished rows are kept in `rows/` and
//! listed in an append-only `manifest.txt`, so an interrupted sweep resumes
//! where it stopped.
//!
//! ```toml
//! kind = "pde"                 # pde | sis-grid | ode-si | ode-sis
//! preset = "thm-2.11-persist"  # or base = "config.toml"
//! [grid]
//! "model.beta" = [0.5, 2.0]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ode::{self, OdeSweepSettings, SisOdeParams};

use super::{load_config_file, preset_config, run_scenario, num, write_atomic, ConfigLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Full PDE runs of a base scenario with `section.key` overrides.
    Pde,
    /// SIS ODE steady-state count, prediction and RK4 observation on a grid.
    SisGrid,
    /// Random SI ODE oracle sweep.
    OdeSi,
    /// Random SIS ODE oracle sweep.
    OdeSis,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SisBase {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
}

impl Default for SisBase {
    fn default() -> Self {
        Self {
            beta: 1.0,
            gamma: 0.21,
            p: 2.0,
            q: 1.0,
            n: 1.0,
            s0: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Base config file for `pde`, relative to the spec file.
    #[serde(default)]
    pub base: Option<String>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub two_d: bool,
    #[serde(default)]
    pub sis: SisBase,
    #[serde(default)]
    pub ode: OdeSweepSettings,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })
    }

    /// Cartesian product of the grid; empty if any axis is empty or there is no axis.
    pub fn points(&self) -> Vec<Vec<(&str, &toml::Value)>> {
        if self.grid.is_empty() {
            return Vec::new();
        }
        let mut points: Vec<Vec<(&str, &toml::Value)>> = vec![Vec::new()];
        for (key, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((key.as_str(), v));
                        p
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: String,
    pub rows: Vec<String>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.clone();
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

fn plain(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(x) => Ok(*x as f64),
        other => Err(Error::config(format!("grid value {other} for `{key}` is not a number"))),
    }
}

pub fn run_sweep_file(path: &Path, out_dir: Option<&Path>) -> Result<SweepTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = SweepSpec::parse(&text)?;
    run_sweep(&spec, path.parent().unwrap_or(Path::new(".")), out_dir)
}

/// Run every point of the sweep. Per-point failures land in the `error`
/// column; only spec, I/O and manifest problems abort.
pub fn run_sweep(spec: &SweepSpec, base_dir: &Path, out_dir: Option<&Path>) -> Result<SweepTable> {
    let table = match spec.kind {
        SweepKind::OdeSi | SweepKind::OdeSis => oracle_sweep(spec)?,
        SweepKind::Pde | SweepKind::SisGrid => grid_sweep(spec, base_dir, out_dir)?,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("sweep.csv"), &table.to_csv())?;
    }
    Ok(table)
}

fn oracle_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if !spec.grid.is_empty() {
        return Err(Error::config("oracle sweeps draw their own points; remove [grid]"));
    }
    let rows = match spec.kind {
        SweepKind::OdeSi => ode::si_sweep(&spec.ode)?,
        _ => ode::sis_sweep(&spec.ode)?,
    };
    let csv = ode::ode_sweep_csv(&rows);
    let mut lines = csv.lines().map(str::to_string);
    Ok(SweepTable {
        header: lines.next().unwrap_or_default(),
        rows: lines.collect(),
    })
}

const SIS_KEYS: [&str; 6] = ["beta", "gamma", "p", "q", "N", "S0"];

fn grid_sweep(spec: &SweepSpec, base_dir: &Path, out_dir: Option<&Path>) -> Result<SweepTable> {
    let keys: Vec<&str> = spec.grid.keys().map(String::as_str).collect();
    let tail = match spec.kind {
        SweepKind::Pde => {
            if spec.base.is_some() == spec.preset.is_some() {
                return Err(Error::config("a pde sweep needs exactly one of `base` or `preset`"));
            }
            for key in &keys {
                overrides_check(key)?;
            }
            "outcome,outcome_value,N_inf,M_inf,lambda0,R0,error"
        }
        _ => {
            if let Some(bad) = keys.iter().find(|k| !SIS_KEYS.contains(k)) {
                return Err(Error::config(format!(
                    "unknown sis-grid key `{bad}` (expected one of {})",
                    SIS_KEYS.join(", ")
                )));
            }
            "interior_states,predicted,observed,agree,error"
        }
    };
    let mut header = String::from("index");
    for k in &keys {
        header.push(',');
        header.push_str(&csv_field(k));
    }
    header.push(',');
    header.push_str(tail);

    let points = spec.points();
    let store = match out_dir {
        Some(dir) => Some(RowStore::open(dir, &header)?),
        None => None,
    };
    let done = store.as_ref().map(RowStore::completed).unwrap_or_default();

    let rows: Vec<Result<String>> = points
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            if done.contains(&index) {
                return store.as_ref().expect("completed rows imply a store").load(index);
            }
            let mut row = index.to_string();
            for (_, v) in point {
                row.push(',');
                row.push_str(&csv_field(&plain(v)));
            }
            row.push(',');
            row.push_str(&match spec.kind {
                SweepKind::Pde => pde_point(spec, base_dir, point, out_dir.map(|d| d.join("points").join(index.to_string()))),
                _ => sis_point(spec, point),
            });
            if let Some(store) = &store {
                store.commit(index, &row)?;
            }
            Ok(row)
        })
        .collect();
    Ok(SweepTable {
        header,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

fn overrides_check(key: &str) -> Result<()> {
    crate::harness::overrides_layer(&[format!("{key}=0")]).map(|_: ConfigLayer| ())
}

fn pde_point(spec: &SweepSpec, base_dir: &Path, point: &[(&str, &toml::Value)], dir: Option<PathBuf>) -> String {
    let overrides: Vec<String> = point.iter().map(|(k, v)| format!("{k}={}", plain(v))).collect();
    let result = (|| {
        let config = match (&spec.base, &spec.preset) {
            (Some(base), _) => load_config_file(&base_dir.join(base), &overrides)?,
            (_, Some(name)) => preset_config(name, spec.two_d, &overrides)?,
            _ => unreachable!("checked before the sweep"),
        };
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        run_scenario(&config, dir.as_deref())
    })();
    match result {
        Ok(report) => {
            let opt = |v: Option<f64>| v.map_or(String::new(), num);
            let n_inf = report.outcome.evidence.map(|e| e.n_infinity());
            let spectral = report.spectral.as_ref();
            format!(
                "{},{},{},{},{},{},",
                report.outcome.outcome.label(),
                num(report.outcome.outcome.value()),
                opt(n_inf),
                num(report.trajectory.monitors.m_infinity),
                opt(spectral.map(|s| s.lambda0)),
                opt(spectral.and_then(|s| s.r0)),
            )
        }
        Err(e) => format!(",,,,,,{}", csv_field(&e.to_string())),
    }
}

fn sis_point(spec: &SweepSpec, point: &[(&str, &toml::Value)]) -> String {
    let result = (|| {
        let mut b = spec.sis;
        for (k, v) in point {
            let x = number(k, v)?;
            match *k {
                "beta" => b.beta = x,
                "gamma" => b.gamma = x,
                "p" => b.p = x,
                "q" => b.q = x,
                "N" => b.n = x,
                _ => b.s0 = x,
            }
        }
        let params = SisOdeParams::new(b.beta, b.gamma, b.p, b.q, b.n, b.s0)?;
        let count = ode::sis_steady_states(&params).interior_count();
        let row = ode::sis_row(&params, &spec.ode)?;
        Ok::<_, Error>(format!(
            "{count},{},{},{},",
            csv_field(&row.predicted),
            csv_field(&row.observed),
            row.agree
        ))
    })();
    result.unwrap_or_else(|e| format!(",,,,{}", csv_field(&e.to_string())))
}

/// Finished rows on disk: `rows/<index>.csv` plus an append-only manifest of indices.
struct RowStore {
    rows_dir: PathBuf,
    manifest: PathBuf,
    completed: BTreeSet<usize>,
    lock: Mutex<()>,
}

impl RowStore {
    fn open(dir: &Path, header: &str) -> Result<Self> {
        let rows_dir = dir.join("rows");
        fs::create_dir_all(&rows_dir).map_err(|e| Error::io(&rows_dir, e))?;
        let manifest = dir.join("manifest.txt");
        let stamp = format!("# {header}");
        let mut completed = BTreeSet::new();
        match fs::read_to_string(&manifest) {
            Ok(text) => {
                let mut lines = text.lines();
                if lines.next() != Some(stamp.as_str()) {
                    return Err(Error::config(format!(
                        "{} belongs to a different sweep; use a fresh output directory",
                        manifest.display()
                    )));
                }
                // A torn final line (crash mid-append) is ignored and the point rerun.
                completed.extend(lines.filter_map(|l| l.trim().parse::<usize>().ok()));
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                write_atomic(&manifest, &format!("{stamp}\n"))?;
            }
            Err(e) => return Err(Error::io(&manifest, e)),
        }
        Ok(Self {
            rows_dir,
            manifest,
            completed,
            lock: Mutex::new(()),
        })
    }

    fn completed(&self) -> BTreeSet<usize> {
        self.completed
            .iter()
            .copied()
            .filter(|i| self.row_path(*i).exists())
            .collect()
    }

    fn row_path(&self, index: usize) -> PathBuf {
        self.rows_dir.join(format!("{index}.csv"))
    }

    fn load(&self, index: usize) -> Result<String> {
        let path = self.row_path(index);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(text.trim_end_matches('\n').to_string())
    }

    fn commit(&self, index: usize, row: &str) -> Result<()> {
        write_atomic(&self.row_path(index), &format!("{row}\n"))?;
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut f = OpenOptions::new()
            .append(true)
            .open(&self.manifest)
            .map_err(|e| Error::io(&self.manifest, e))?;
        writeln!(f, "{index}").map_err(|e| Error::io(&self.manifest, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_gives_header_only() {
        let spec = SweepSpec::parse("kind = \"pde\"\npreset = \"thm-2.10-i\"\n").unwrap();
        let table = run_sweep(&spec, Path::new("."), None).unwrap();
        assert!(table.rows.is_empty());
        assert_eq!(table.to_csv(), format!("{}\n", table.header));
        let spec = SweepSpec::parse("kind = \"sis-grid\"\n[grid]\ngamma = []\n").unwrap();
        assert!(run_sweep(&spec, Path::new("."), None).unwrap().rows.is_empty());
    }

    #[test]
    fn product_order_is_sorted_keys_last_fastest() {
        let spec = SweepSpec::parse("kind = \"sis-grid\"\n[grid]\nq = [1, 2]\np = [3, 4, 5]\n").unwrap();
        let pts: Vec<String> = spec
            .points()
            .iter()
            .map(|p| p.iter().map(|(k, v)| format!("{k}{v}")).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(pts, ["p3 q1", "p3 q2", "p4 q1", "p4 q2", "p5 q1", "p5 q2"]);
    }

    #[test]
    fn bad_points_fail_in_row() {
        let spec = SweepSpec::parse("kind = \"sis-grid\"\n[grid]\nN = [1.0, -1.0]\n").unwrap();
        let table = run_sweep(&spec, Path::new("."), None).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows[0].ends_with(','), "{}", table.rows[0]);
        assert!(!table.rows[1].ends_with(','), "{}", table.rows[1]);
        assert!(SweepSpec::parse("kind = \"sis-grid\"\n[grid]\nbogus = [1]\n")
            .and_then(|s| run_sweep(&s, Path::new("."), None))
            .is_err());
    }
}
