//! Scenario configuration: TOML sections `[model]`, `[domain]`, `[initial]`,
//! `[solver]`, `[detect]`, `[spectral]`, an optional top-level
//! `preset = "..."`, and `--override section.key=value` layers.
//!
//! Resolution order (later wins): built-in defaults, preset, file, overrides.
//! Unknown keys and type mismatches are rejected with the offending line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::Tolerances;
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::model::{CoefficientField, CoefficientTable, Exponents, IncidenceKind, ModelSpec, Separable};
use crate::solver::{RunPlan, SolverSettings, SystemState};
use crate::spectral::SpectralSettings;

use super::presets;

/// A number or a function-call expression such as `cos(1, 0.5, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Expr(String),
}

macro_rules! layered {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[$fmeta])* #[serde(default, skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }

        impl $name {
            /// Fields set in `top` replace those in `self`.
            pub fn layer(self, top: Self) -> Self {
                Self { $($field: top.$field.or(self.$field),)* }
            }
        }
    };
}

layered!(ModelSection {
    p: f64,
    q: f64,
    s: f64,
    r: f64,
    /// `power`, `binomial`, `saturated` or `media`
    incidence: String,
    k: f64,
    ell: f64,
    #[serde(rename = "dS")]
    d_s: f64,
    #[serde(rename = "dI")]
    d_i: f64,
    beta: Scalar,
    gamma: Scalar,
    mu: Scalar,
});

layered!(DomainSection {
    #[serde(rename = "L")]
    l: f64,
    n: usize,
    #[serde(rename = "Lx")]
    lx: f64,
    #[serde(rename = "Ly")]
    ly: f64,
    nx: usize,
    ny: usize,
});

layered!(InitialSection {
    #[serde(rename = "S")]
    s: Scalar,
    #[serde(rename = "I")]
    i: Scalar,
    /// Rescale `S` and `I` jointly so that `∫(S + I) = mass`.
    mass: f64,
    allow_violations: bool,
});

layered!(SolverSection {
    t_end: f64,
    dt_init: f64,
    dt_min: f64,
    dt_max: f64,
    linear_tol: f64,
    max_steps: usize,
    cadence: f64,
    snapshot_times: Vec<f64>,
});

layered!(DetectSection {
    extinct: f64,
    flat: f64,
    persist: f64,
    periodic: f64,
    min_window: usize,
    tail_fraction: f64,
    /// Number of trailing periods with automatic snapshots (periodic coefficients only).
    period_snapshots: usize,
});

layered!(SpectralSection {
    dt: f64,
    max_iter: usize,
    tol: f64,
});

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub detect: DetectSection,
    #[serde(default)]
    pub spectral: SpectralSection,
}

impl ConfigLayer {
    pub fn layer(self, top: Self) -> Self {
        Self {
            preset: top.preset.or(self.preset),
            model: self.model.layer(top.model),
            domain: self.domain.layer(top.domain),
            initial: self.initial.layer(top.initial),
            solver: self.solver.layer(top.solver),
            detect: self.detect.layer(top.detect),
            spectral: self.spectral.layer(top.spectral),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_at(text, s.start)),
            message: e.message().to_string(),
        })
    }

    /// Documented defaults for every optional key.
    pub fn defaults() -> Self {
        let solver = SolverSettings::default();
        let tol = Tolerances::default();
        let spectral = SpectralSettings::default();
        Self {
            preset: None,
            model: ModelSection {
                s: Some(0.0),
                r: Some(1.0),
                incidence: Some("power".into()),
                k: Some(1.0),
                ell: Some(1.0),
                d_s: Some(1.0),
                d_i: Some(1.0),
                beta: Some(Scalar::Num(1.0)),
                gamma: Some(Scalar::Num(1.0)),
                mu: Some(Scalar::Num(0.0)),
                ..Default::default()
            },
            domain: DomainSection::default(),
            initial: InitialSection {
                s: Some(Scalar::Num(1.0)),
                i: Some(Scalar::Expr("bump(0.5, 0.1, 0.5, 0.01)".into())),
                mass: None,
                allow_violations: Some(false),
            },
            solver: SolverSection {
                t_end: Some(10.0),
                dt_init: None,
                dt_min: Some(solver.dt_min),
                dt_max: Some(solver.dt_max),
                linear_tol: Some(solver.linear_tol),
                max_steps: Some(solver.max_steps),
                cadence: Some(0.1),
                snapshot_times: Some(Vec::new()),
            },
            detect: DetectSection {
                extinct: Some(tol.extinct),
                flat: Some(tol.flat),
                persist: Some(tol.persist),
                periodic: Some(tol.periodic),
                min_window: Some(tol.min_window),
                tail_fraction: Some(tol.tail_fraction),
                period_snapshots: Some(4),
            },
            spectral: SpectralSection {
                dt: Some(spectral.dt),
                max_iter: Some(spectral.max_iter),
                tol: Some(spectral.tol),
            },
        }
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]`, for semantic errors.
fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(idx + 1);
                }
            }
        }
    }
    None
}

/// Turns `section.key=value` pairs into a config layer. Values that are not
/// valid TOML are taken as strings, so `model.beta=cos(1,0.5,1)` works unquoted.
pub fn overrides_layer(overrides: &[String]) -> Result<ConfigLayer> {
    let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut top = Vec::new();
    for raw in overrides {
        let (key, value) = raw
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{raw}` must look like section.key=value")))?;
        let value = value.trim();
        let literal = if toml::from_str::<toml::Table>(&format!("v = {value}")).is_ok() {
            value.to_string()
        } else {
            toml::Value::String(value.to_string()).to_string()
        };
        match key.trim().split_once('.') {
            Some((section, k)) => sections
                .entry(section.to_string())
                .or_default()
                .push((k.to_string(), literal)),
            None => top.push((key.trim().to_string(), literal)),
        }
    }
    let mut text = String::new();
    for (k, v) in &top {
        text.push_str(&format!("{k} = {v}\n"));
    }
    for (section, pairs) in &sections {
        text.push_str(&format!("[{section}]\n"));
        for (k, v) in pairs {
            text.push_str(&format!("{k} = {v}\n"));
        }
    }
    ConfigLayer::parse(&text).map_err(|e| match e {
        Error::Config { message, .. } => Error::config(format!("in --override: {message}")),
        other => other,
    })
}

/// Initial profile for one component.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// Gaussian `base + amplitude·exp(-|ξ - c|²/(2 width²))` in normalized coordinates.
    Bump {
        center: (f64, f64),
        width: f64,
        amplitude: f64,
        base: f64,
    },
    Table(Vec<f64>),
}

impl FieldSpec {
    pub fn build(&self, domain: &Domain) -> Result<GridFunction> {
        match self {
            FieldSpec::Constant(c) => Ok(GridFunction::constant(domain, *c)),
            FieldSpec::Bump {
                center,
                width,
                amplitude,
                base,
            } => {
                let two_d = domain.dim() == 2;
                let values = (0..domain.len())
                    .map(|k| {
                        let xi = domain.normalized_node(k);
                        let mut r2 = (xi.x - center.0).powi(2);
                        if two_d {
                            r2 += (xi.y - center.1).powi(2);
                        }
                        base + amplitude * (-r2 / (2.0 * width * width)).exp()
                    })
                    .collect();
                Ok(GridFunction::from_vec(values))
            }
            FieldSpec::Table(values) => {
                if values.len() != domain.len() {
                    return Err(Error::config(format!(
                        "initial table has {} values, domain has {} nodes",
                        values.len(),
                        domain.len()
                    )));
                }
                Ok(GridFunction::from_vec(values.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub s: FieldSpec,
    pub i: FieldSpec,
    pub mass: Option<f64>,
}

impl InitialData {
    pub fn build(&self, domain: &Domain) -> Result<SystemState> {
        let mut s = self.s.build(domain)?;
        let mut i = self.i.build(domain)?;
        if let Some(target) = self.mass {
            let current = (s.iter().sum::<f64>() + i.iter().sum::<f64>()) * domain.cell_volume();
            if !(current > 0.0 && target > 0.0) {
                return Err(Error::config(format!(
                    "cannot rescale initial mass {current} to {target}"
                )));
            }
            let factor = target / current;
            s.iter_mut().for_each(|v| *v *= factor);
            i.iter_mut().for_each(|v| *v *= factor);
        }
        Ok(SystemState::new(s, i, 0.0))
    }
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub model: ModelSpec,
    pub domain: Domain,
    pub initial: InitialData,
    pub plan: RunPlan,
    pub tolerances: Tolerances,
    pub period_snapshots: usize,
    pub spectral: SpectralSettings,
    /// The merged layer every value above was read from.
    pub resolved: ConfigLayer,
}

impl ScenarioConfig {
    /// The resolved configuration as TOML; feeding it back reproduces the scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.resolved).unwrap_or_else(|e| format!("# unserializable config: {e}\n"))
    }
}

/// Parse config text with no overrides; relative table paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    load_config(text, Path::new("."), &[])
}

pub fn load_config_file(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_config(&text, base, overrides)
}

pub fn load_config(text: &str, base_dir: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let file = ConfigLayer::parse(text)?;
    let over = overrides_layer(overrides)?;
    let preset_name = over.preset.clone().or_else(|| file.preset.clone());
    let mut merged = ConfigLayer::defaults();
    if let Some(name) = &preset_name {
        merged = merged.layer(presets::preset_layer(name, false)?);
    }
    merged = merged.layer(file).layer(over);
    resolve(merged, &Context { text, base_dir })
}

/// Resolve a layer stack that did not come from a file (presets, sweeps).
pub fn resolve_layers(layers: impl IntoIterator<Item = ConfigLayer>, base_dir: &Path) -> Result<ScenarioConfig> {
    let merged = layers.into_iter().fold(ConfigLayer::defaults(), ConfigLayer::layer);
    resolve(merged, &Context { text: "", base_dir })
}

struct Context<'a> {
    text: &'a str,
    base_dir: &'a Path,
}

impl Context<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: line_of_key(self.text, section, key),
            message: format!("{section}.{key}: {}", message.into()),
        }
    }

    fn missing(&self, section: &str, key: &str) -> Error {
        let header = format!("[{section}]");
        let line = self
            .text
            .lines()
            .position(|l| l.trim() == header)
            .map(|i| i + 1);
        Error::Config {
            line,
            message: format!("missing mandatory key {section}.{key}"),
        }
    }

    fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// `name(arg, ...)` → (name, args) with string arguments unquoted.
fn call(expr: &str) -> Option<(String, Vec<String>)> {
    let expr = expr.trim();
    let open = expr.find('(')?;
    let inner = expr.strip_suffix(')')?.get(open + 1..)?;
    let name = expr[..open].trim().to_ascii_lowercase();
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| a.trim().trim_matches('"').to_string()).collect()
    };
    Some((name, args))
}

fn numbers(args: &[String]) -> std::result::Result<Vec<f64>, String> {
    args.iter()
        .map(|a| a.parse::<f64>().map_err(|_| format!("`{a}` is not a number")))
        .collect()
}

fn coefficient(ctx: &Context, key: &str, value: &Scalar) -> Result<CoefficientField> {
    let bad = |m: String| ctx.err("model", key, m);
    let expr = match value {
        Scalar::Num(v) => return CoefficientField::constant(*v).map_err(|e| bad(e.to_string())),
        Scalar::Expr(e) => e,
    };
    if let Ok(v) = expr.trim().parse::<f64>() {
        return CoefficientField::constant(v).map_err(|e| bad(e.to_string()));
    }
    let (name, args) = call(expr).ok_or_else(|| bad(format!("cannot parse `{expr}`")))?;
    let field = match name.as_str() {
        "table" => {
            let [path] = args.as_slice() else {
                return Err(bad("table() takes one path".into()));
            };
            let path = ctx.path(path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let table = CoefficientTable::parse(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            Ok(CoefficientField::Tabulated(table))
        }
        _ => {
            let v = numbers(&args).map_err(bad)?;
            match (name.as_str(), v.as_slice()) {
                ("cos", &[mean, amp, k]) => CoefficientField::spatial_cosine(mean, amp, wavenumber(k).map_err(bad)?),
                ("periodic", &[base, amp, omega]) => CoefficientField::periodic(base, amp, omega),
                ("separable", &[mean, amp_x, k, amp_t, omega]) => CoefficientField::separable(Separable {
                    mean,
                    amplitude_x: amp_x,
                    wavenumber: wavenumber(k).map_err(bad)?,
                    amplitude_t: amp_t,
                    period: Some(omega),
                }),
                _ => {
                    return Err(bad(format!(
                        "unknown coefficient form `{expr}` (expected a number, cos(mean, amp, k), \
                         periodic(base, amp, omega), separable(mean, amp_x, k, amp_t, omega) or table(\"path\"))"
                    )))
                }
            }
        }
    };
    field.map_err(|e| bad(e.to_string()))
}

fn wavenumber(k: f64) -> std::result::Result<u32, String> {
    if k >= 0.0 && k.fract() == 0.0 && k <= u32::MAX as f64 {
        Ok(k as u32)
    } else {
        Err(format!("wavenumber must be a nonnegative integer, got {k}"))
    }
}

fn field_spec(ctx: &Context, key: &str, value: &Scalar, two_d: bool) -> Result<FieldSpec> {
    let bad = |m: String| ctx.err("initial", key, m);
    let expr = match value {
        Scalar::Num(v) => return Ok(FieldSpec::Constant(*v)),
        Scalar::Expr(e) => e,
    };
    if let Ok(v) = expr.trim().parse::<f64>() {
        return Ok(FieldSpec::Constant(v));
    }
    let (name, args) = call(expr).ok_or_else(|| bad(format!("cannot parse `{expr}`")))?;
    match name.as_str() {
        "table" => {
            let [path] = args.as_slice() else {
                return Err(bad("table() takes one path".into()));
            };
            let path = ctx.path(path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut values = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                for tok in line.split('#').next().unwrap_or("").split_whitespace() {
                    values.push(tok.parse::<f64>().map_err(|_| {
                        bad(format!("{}:{}: `{tok}` is not a number", path.display(), ln + 1))
                    })?);
                }
            }
            Ok(FieldSpec::Table(values))
        }
        "bump" | "bump2" => {
            let v = numbers(&args).map_err(bad)?;
            let (center, rest) = match (name.as_str(), v.len()) {
                ("bump", 3 | 4) => ((v[0], if two_d { v[0] } else { 0.5 }), &v[1..]),
                ("bump2", 4 | 5) => ((v[0], v[1]), &v[2..]),
                _ => {
                    return Err(bad(format!(
                        "expected bump(center, width, amplitude[, base]) or bump2(cx, cy, width, amplitude[, base]), got `{expr}`"
                    )))
                }
            };
            let (width, amplitude, base) = (rest[0], rest[1], rest.get(2).copied().unwrap_or(0.0));
            if !(width > 0.0) {
                return Err(bad(format!("bump width must be positive, got {width}")));
            }
            Ok(FieldSpec::Bump {
                center,
                width,
                amplitude,
                base,
            })
        }
        _ => Err(bad(format!(
            "unknown initial form `{expr}` (expected a number, bump(...), bump2(...) or table(\"path\"))"
        ))),
    }
}

fn resolve(layer: ConfigLayer, ctx: &Context) -> Result<ScenarioConfig> {
    let m = &layer.model;
    let p = m.p.ok_or_else(|| ctx.missing("model", "p"))?;
    let q = m.q.ok_or_else(|| ctx.missing("model", "q"))?;
    let s = m.s.unwrap_or(0.0);
    let r = m.r.unwrap_or(1.0);
    let exponents = Exponents::new(p, q, s, r).map_err(|e| ctx.err("model", "p", e.to_string()))?;
    let incidence_name = m.incidence.clone().unwrap_or_else(|| "power".into());
    let incidence = match incidence_name.as_str() {
        "power" => IncidenceKind::Power { q, p },
        "binomial" => IncidenceKind::Binomial { k: m.k.unwrap_or(1.0) },
        "saturated" => IncidenceKind::Saturated {
            q,
            p,
            ell: m.ell.unwrap_or(1.0),
        },
        "media" => IncidenceKind::Media {
            q,
            p,
            ell: m.ell.unwrap_or(1.0),
        },
        other => {
            return Err(ctx.err(
                "model",
                "incidence",
                format!("unknown incidence `{other}` (power, binomial, saturated, media)"),
            ))
        }
    };
    if matches!(incidence, IncidenceKind::Binomial { .. }) && (p != 1.0 || q != 1.0) {
        return Err(ctx.err("model", "incidence", "binomial incidence needs p = q = 1"));
    }
    let scalar = |v: &Option<Scalar>| v.clone().unwrap_or(Scalar::Num(1.0));
    let model = ModelSpec::new(
        exponents,
        coefficient(ctx, "beta", &scalar(&m.beta))?,
        coefficient(ctx, "gamma", &scalar(&m.gamma))?,
        coefficient(ctx, "mu", &m.mu.clone().unwrap_or(Scalar::Num(0.0)))?,
        m.d_s.unwrap_or(1.0),
        m.d_i.unwrap_or(1.0),
        incidence,
    )
    .map_err(|e| ctx.err("model", "dS", e.to_string()))?;

    let d = &layer.domain;
    let domain = match (d.l, d.n, d.lx, d.ly, d.nx, d.ny) {
        (Some(l), Some(n), None, None, None, None) => Domain::interval(l, n),
        (None, None, Some(lx), Some(ly), Some(nx), Some(ny)) => Domain::rectangle(lx, ly, nx, ny),
        (None, None, None, None, None, None) => return Err(ctx.missing("domain", "L")),
        _ => {
            return Err(ctx.err(
                "domain",
                if d.l.is_some() || d.n.is_some() { "L" } else { "Lx" },
                "give either L and n (interval) or Lx, Ly, nx and ny (rectangle)",
            ))
        }
    }
    .map_err(|e| ctx.err("domain", "n", e.to_string()))?;

    let init = &layer.initial;
    let two_d = domain.dim() == 2;
    let initial = InitialData {
        s: field_spec(ctx, "S", &init.s.clone().unwrap_or(Scalar::Num(1.0)), two_d)?,
        i: field_spec(
            ctx,
            "I",
            &init.i.clone().unwrap_or(Scalar::Expr("bump(0.5, 0.1, 0.5, 0.01)".into())),
            two_d,
        )?,
        mass: init.mass,
    };

    let sv = &layer.solver;
    let defaults = SolverSettings::default();
    let settings = SolverSettings {
        dt_init: sv.dt_init,
        dt_min: sv.dt_min.unwrap_or(defaults.dt_min),
        dt_max: sv.dt_max.unwrap_or(defaults.dt_max),
        linear_tol: sv.linear_tol.unwrap_or(defaults.linear_tol),
        positivity: defaults.positivity,
        max_steps: sv.max_steps.unwrap_or(defaults.max_steps),
    };
    settings.validate().map_err(|e| ctx.err("solver", "dt_max", e.to_string()))?;
    let t_end = sv.t_end.unwrap_or(10.0);
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(ctx.err("solver", "t_end", format!("must be positive, got {t_end}")));
    }
    let cadence = sv.cadence.unwrap_or(0.1);
    if !(cadence > 0.0) {
        return Err(ctx.err("solver", "cadence", format!("must be positive, got {cadence}")));
    }
    let plan = RunPlan {
        t_end,
        settings,
        cadence,
        snapshot_times: sv.snapshot_times.clone().unwrap_or_default(),
        allow_violations: init.allow_violations.unwrap_or(false),
    };

    let dt = &layer.detect;
    let td = Tolerances::default();
    let tolerances = Tolerances {
        extinct: dt.extinct.unwrap_or(td.extinct),
        flat: dt.flat.unwrap_or(td.flat),
        persist: dt.persist.unwrap_or(td.persist),
        periodic: dt.periodic.unwrap_or(td.periodic),
        min_window: dt.min_window.unwrap_or(td.min_window),
        tail_fraction: dt.tail_fraction.unwrap_or(td.tail_fraction),
    };
    tolerances
        .validate()
        .map_err(|e| ctx.err("detect", "tail_fraction", e.to_string()))?;

    let sp = &layer.spectral;
    let sd = SpectralSettings::default();
    let spectral = SpectralSettings {
        dt: sp.dt.unwrap_or(sd.dt),
        max_iter: sp.max_iter.unwrap_or(sd.max_iter),
        tol: sp.tol.unwrap_or(sd.tol),
    };

    Ok(ScenarioConfig {
        preset: layer.preset.clone(),
        model,
        domain,
        initial,
        plan,
        tolerances,
        period_snapshots: dt.period_snapshots.unwrap_or(4),
        spectral,
        resolved: layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config("[model]\np = 1\nq = 1\n[domain]\nL = 1\nn = 100\n").unwrap();
        assert_eq!(cfg.domain, Domain::interval(1.0, 100).unwrap());
        assert_eq!(cfg.model.beta, CoefficientField::Constant(1.0));
        assert!(cfg.model.is_sis());
        assert_eq!(cfg.plan.t_end, 10.0);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert!(cfg.to_toml().contains("dS = 1.0"));
    }

    #[test]
    fn misspelled_key_names_key_and_line() {
        let err = parse_config("[model]\np = 1\nq = 1\nds_ = 2\n[domain]\nL = 1\nn = 10\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, Some(4));
                assert!(message.contains("ds_"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_mismatch_and_missing_keys() {
        let err = parse_config("[model]\np = \"one\"\nq = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(2), .. }), "{err:?}");
        let err = parse_config("[model]\nq = 1\n[domain]\nL = 1\nn = 10\n").unwrap_err();
        assert!(err.to_string().contains("model.p"), "{err}");
        let err = parse_config("[model]\np = 1\nq = 1\n").unwrap_err();
        assert!(err.to_string().contains("domain.L"), "{err}");
    }

    #[test]
    fn semantic_errors_carry_lines() {
        let text = "[model]\np = 1\nq = 1\nbeta = \"cos(1, 2)\"\n[domain]\nL = 1\nn = 10\n";
        match parse_config(text).unwrap_err() {
            Error::Config { line, message } => {
                assert_eq!(line, Some(4));
                assert!(message.contains("model.beta"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn preset_reference_expands() {
        let cfg = parse_config("preset = \"thm-2.10-ii\"\n").unwrap();
        assert_eq!(cfg.model.exponents.p, 0.5);
        assert_eq!(cfg.preset.as_deref(), Some("thm-2.10-ii"));
        let cfg = parse_config("preset = \"thm-2.10-ii\"\n[model]\nmu = 0.75\n").unwrap();
        assert_eq!(cfg.model.mu, CoefficientField::Constant(0.75));
        assert!(parse_config("preset = \"nope\"\n").is_err());
    }

    #[test]
    fn overrides_win_and_accept_bare_expressions() {
        let text = "[model]\np = 1\nq = 1\n[domain]\nL = 1\nn = 10\n";
        let cfg = load_config(
            text,
            Path::new("."),
            &["model.beta=cos(2, 1, 1)".into(), "solver.t_end=3".into(), "model.gamma=0.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.model.beta, CoefficientField::spatial_cosine(2.0, 1.0, 1).unwrap());
        assert_eq!(cfg.plan.t_end, 3.0);
        assert!(load_config(text, Path::new("."), &["model.bogus=1".into()]).is_err());
        assert!(load_config(text, Path::new("."), &["nonsense".into()]).is_err());
    }

    #[test]
    fn initial_forms() {
        let d = Domain::interval(1.0, 10).unwrap();
        let text = "[model]\np = 1\nq = 1\n[domain]\nL = 1\nn = 10\n[initial]\nS = \"bump(0.5, 0.2, 1.0, 0.5)\"\nI = 0.25\nmass = 2.0\n";
        let cfg = parse_config(text).unwrap();
        let st = cfg.initial.build(&d).unwrap();
        assert!((st.total_mass(&d) - 2.0).abs() < 1e-12);
        assert!(st.s.min() > 0.0);
        let two_d = "[model]\np = 1\nq = 1\n[domain]\nLx = 1\nLy = 2\nnx = 8\nny = 8\n[initial]\nS = \"bump2(0.2, 0.8, 0.1, 1.0)\"\n";
        let cfg = parse_config(two_d).unwrap();
        assert_eq!(cfg.domain.dim(), 2);
        assert!(parse_config("[model]\np = 1\nq = 1\n[domain]\nL = 1\nn = 10\n[initial]\nS = \"bump(1)\"\n").is_err());
    }

    #[test]
    fn tables_load_relative_to_base_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("beta.txt"), "omega 1 nx 2 nt 2\n1 2\n1 2\n").unwrap();
        std::fs::write(dir.path().join("s0.txt"), "1 1 1 1\n# comment\n2 2 2 2\n").unwrap();
        let text = "[model]\np = 1\nq = 1\nbeta = 'table(\"beta.txt\")'\n[domain]\nL = 1\nn = 8\n[initial]\nS = 'table(\"s0.txt\")'\n";
        let cfg = load_config(text, dir.path(), &[]).unwrap();
        assert_eq!(cfg.model.declared_period(), Some(1.0));
        let st = cfg.initial.build(&cfg.domain).unwrap();
        assert_eq!(st.s[7], 2.0);
    }

    #[test]
    fn resolved_toml_round_trips() {
        let cfg = parse_config("preset = \"thm-2.11-periodic\"\n").unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(again.model, cfg.model);
        assert_eq!(again.plan, cfg.plan);
        assert_eq!(again.domain, cfg.domain);
    }
}
