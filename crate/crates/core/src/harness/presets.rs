//! Built-in scenarios, one per long-time regime. All are 1D by default;
//! `two_d` swaps the interval for a square with the same side.

use crate::error::{Error, Result};

use super::config::{ConfigLayer, DomainSection};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    text: &'static str,
}

pub const CATALOG: &[Preset] = &[
    Preset {
        name: "thm-2.10-i",
        summary: "mortality, p = q = 1: infection dies out, S flattens to S* <= sup (gamma+mu)/beta",
        text: r#"
[model]
p = 1
q = 1
beta = 1
gamma = 1
mu = 1

[domain]
L = 1
n = 100

[initial]
S = "bump(0.3, 0.1, 0.5, 1.0)"
I = "bump(0.7, 0.1, 0.5, 0.05)"

[solver]
t_end = 200
cadence = 0.5
"#,
    },
    Preset {
        name: "thm-2.10-ii",
        summary: "mortality, p < 1: both components go extinct",
        text: r#"
[model]
p = 0.5
q = 1
beta = 10
gamma = 0
mu = 0.5

[domain]
L = 1
n = 100

[initial]
S = "bump(0.3, 0.1, 0.5, 1.0)"
I = "bump(0.7, 0.1, 0.5, 0.05)"

[solver]
t_end = 200
cadence = 0.5
"#,
    },
    Preset {
        name: "thm-2.11-persist",
        summary: "no mortality, R0 = 2: persistence at the endemic state (0.5, 0.5)",
        text: r#"
[model]
p = 1
q = 1
beta = 2
gamma = 1
mu = 0

[domain]
L = 1
n = 100

[initial]
S = "bump(0.3, 0.1, 0.5, 0.9)"
I = "bump(0.7, 0.1, 0.3, 0.1)"
mass = 1.0

[solver]
t_end = 60
cadence = 0.25
"#,
    },
    Preset {
        name: "thm-2.11-periodic",
        summary: "no mortality, beta = 2(1 + 0.5 cos 2 pi t): persistence on a periodic orbit",
        text: r#"
[model]
p = 1
q = 1
beta = "periodic(2, 0.5, 1)"
gamma = 1
mu = 0

[domain]
L = 1
n = 100

[initial]
S = "bump(0.3, 0.1, 0.5, 0.9)"
I = "bump(0.7, 0.1, 0.3, 0.1)"
mass = 1.0

[solver]
t_end = 40
cadence = 0.05

[detect]
period_snapshots = 5
"#,
    },
    Preset {
        name: "sis-bistable",
        summary: "no mortality, p = 2: bistable reduced dynamics, S0 = 0.5 settles at (0.3, 0.7)",
        text: r#"
[model]
p = 2
q = 1
beta = 1
gamma = 0.21
mu = 0

[domain]
L = 1
n = 100

[initial]
S = 0.5
I = "bump(0.5, 0.1, 0.02, 0.49)"
mass = 1.0

[solver]
t_end = 150
cadence = 0.5
"#,
    },
    Preset {
        name: "si-finite-extinction",
        summary: "q < 1 with strong initial infection: S is driven close to zero before recovery refills it",
        text: r#"
[model]
p = 1
q = 0.5
beta = 1
gamma = 0.05
mu = 1

[domain]
L = 1
n = 100

[initial]
S = 1
I = "bump(0.5, 0.2, 0.5, 4.0)"

[solver]
t_end = 60
cadence = 0.25
"#,
    },
    Preset {
        name: "r0-threshold",
        summary: "no mortality, heterogeneous beta, slow infected diffusion: spectral R0 vs. dynamics",
        text: r#"
[model]
p = 1
q = 1
beta = "cos(1.5, 1.0, 1)"
gamma = 1
mu = 0
dI = 0.1

[domain]
L = 1
n = 100

[initial]
S = 1
I = "bump(0.2, 0.1, 0.2, 0.01)"
mass = 1.0

[solver]
t_end = 120
cadence = 0.5
"#,
    },
    Preset {
        name: "mass-conservation",
        summary: "no mortality, heterogeneous beta, 12,500 fixed steps on n = 200: total mass check",
        text: r#"
[model]
p = 1.5
q = 0.5
beta = "cos(2, 1, 2)"
gamma = 1
mu = 0

[domain]
L = 1
n = 200

[initial]
S = "bump(0.25, 0.1, 1.0, 0.5)"
I = "bump(0.75, 0.1, 1.0, 0.1)"

[solver]
t_end = 50
dt_init = 0.004
dt_max = 0.004
cadence = 0.5
"#,
    },
];

pub fn names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|p| p.name)
}

pub fn find(name: &str) -> Option<&'static Preset> {
    CATALOG.iter().find(|p| p.name == name)
}

/// The catalog entry as a config layer (with `preset` set to its name).
pub fn preset_layer(name: &str, two_d: bool) -> Result<ConfigLayer> {
    let preset = find(name).ok_or_else(|| {
        Error::config(format!(
            "unknown preset `{name}` (known: {})",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    let mut layer = ConfigLayer::parse(preset.text)?;
    layer.preset = Some(name.to_string());
    if two_d {
        let side = layer.domain.l.unwrap_or(1.0);
        layer.domain = DomainSection {
            lx: Some(side),
            ly: Some(side),
            nx: Some(40),
            ny: Some(40),
            ..Default::default()
        };
    }
    Ok(layer)
}
