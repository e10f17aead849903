//! Space-time coefficient fields β, γ, μ.
//!
//! Spatial arguments are normalized node coordinates `ξ ∈ [0,1]` so a field
//! definition is independent of the domain size and resolution.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoefficientField {
    Constant(f64),
    /// `(mean + amplitude_x·cos(kπξ_x)) · (1 + amplitude_t·cos(2πt/ω))`
    Separable(Separable),
    Tabulated(CoefficientTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separable {
    pub mean: f64,
    pub amplitude_x: f64,
    pub wavenumber: u32,
    pub amplitude_t: f64,
    pub period: Option<f64>,
}

impl CoefficientField {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Domain(format!("coefficient must be finite and >= 0, got {value}")));
        }
        Ok(CoefficientField::Constant(value))
    }

    /// `mean + amplitude·cos(kπξ_x)`, constant in time.
    pub fn spatial_cosine(mean: f64, amplitude: f64, wavenumber: u32) -> Result<Self> {
        Self::separable(Separable {
            mean,
            amplitude_x: amplitude,
            wavenumber,
            amplitude_t: 0.0,
            period: None,
        })
    }

    /// `base·(1 + amplitude·cos(2πt/ω))`, uniform in space.
    pub fn periodic(base: f64, amplitude: f64, period: f64) -> Result<Self> {
        Self::separable(Separable {
            mean: base,
            amplitude_x: 0.0,
            wavenumber: 1,
            amplitude_t: amplitude,
            period: Some(period),
        })
    }

    pub fn separable(sep: Separable) -> Result<Self> {
        let finite = [sep.mean, sep.amplitude_x, sep.amplitude_t]
            .iter()
            .all(|v| v.is_finite());
        if !finite || sep.mean < sep.amplitude_x.abs() {
            return Err(Error::Domain(format!(
                "separable coefficient needs mean >= |amplitude_x| (got {} and {})",
                sep.mean, sep.amplitude_x
            )));
        }
        if sep.amplitude_t.abs() > 1.0 {
            return Err(Error::Domain("temporal amplitude must lie in [-1, 1]".into()));
        }
        match sep.period {
            Some(w) if !(w.is_finite() && w > 0.0) => {
                return Err(Error::Domain(format!("period must be positive, got {w}")))
            }
            None if sep.amplitude_t != 0.0 => {
                return Err(Error::Domain("temporal amplitude needs a period".into()))
            }
            _ => {}
        }
        if sep.amplitude_x != 0.0 && sep.wavenumber == 0 {
            return Err(Error::Domain("spatial amplitude needs wavenumber >= 1".into()));
        }
        Ok(CoefficientField::Separable(sep))
    }

    /// Evaluate at normalized position `xi` and time `t`.
    #[inline]
    pub fn value(&self, xi: Point, t: f64) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Separable(s) => {
                let space = s.mean + s.amplitude_x * (s.wavenumber as f64 * PI * xi.x).cos();
                let time = match s.period {
                    Some(w) if s.amplitude_t != 0.0 => 1.0 + s.amplitude_t * (2.0 * PI * t / w).cos(),
                    _ => 1.0,
                };
                space * time
            }
            CoefficientField::Tabulated(tab) => tab.value(xi.x, t),
        }
    }

    /// Fill `out` with the field at every node of `domain` at time `t`.
    pub fn sample_into(&self, domain: &Domain, t: f64, out: &mut [f64]) {
        match self {
            CoefficientField::Constant(c) => out.iter_mut().for_each(|o| *o = *c),
            _ => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.value(domain.normalized_node(k), t);
                }
            }
        }
    }

    pub fn sample(&self, domain: &Domain, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; domain.len()];
        self.sample_into(domain, t, &mut v);
        v
    }

    /// σ₀: a guaranteed lower bound.
    pub fn lower_bound(&self) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Separable(s) => (s.mean - s.amplitude_x.abs()) * (1.0 - s.amplitude_t.abs()),
            CoefficientField::Tabulated(t) => t.min(),
        }
    }

    /// σ⁰: a guaranteed upper bound.
    pub fn upper_bound(&self) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Separable(s) => (s.mean + s.amplitude_x.abs()) * (1.0 + s.amplitude_t.abs()),
            CoefficientField::Tabulated(t) => t.max(),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            CoefficientField::Constant(_) => None,
            CoefficientField::Separable(s) => s.period.filter(|_| s.amplitude_t != 0.0),
            CoefficientField::Tabulated(t) => t.period,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoefficientField::Constant(c) => Some(*c),
            CoefficientField::Separable(s) if s.amplitude_x == 0.0 && s.amplitude_t == 0.0 => Some(s.mean),
            _ => None,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.upper_bound() == 0.0
    }

    /// Whether the field is independent of position.
    pub fn is_spatially_uniform(&self) -> bool {
        match self {
            CoefficientField::Constant(_) => true,
            CoefficientField::Separable(s) => s.amplitude_x == 0.0,
            CoefficientField::Tabulated(t) => t.is_spatially_uniform(),
        }
    }

    /// Multiply the field by a nonnegative scalar.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CoefficientField::Constant(c) => CoefficientField::Constant(c * factor),
            CoefficientField::Separable(s) => CoefficientField::Separable(Separable {
                mean: s.mean * factor,
                amplitude_x: s.amplitude_x * factor,
                ..*s
            }),
            CoefficientField::Tabulated(t) => CoefficientField::Tabulated(CoefficientTable {
                values: t.values.iter().map(|v| v * factor).collect(),
                ..t.clone()
            }),
        }
    }
}

impl fmt::Display for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientField::Constant(c) => write!(f, "{c}"),
            CoefficientField::Separable(s) => write!(
                f,
                "separable({}, {}, {}, {}, {})",
                s.mean,
                s.amplitude_x,
                s.wavenumber,
                s.amplitude_t,
                s.period.unwrap_or(0.0)
            ),
            CoefficientField::Tabulated(t) => write!(
                f,
                "table(nx={}, nt={}, omega={})",
                t.nx,
                t.nt,
                t.period.unwrap_or(0.0)
            ),
        }
    }
}

/// A coefficient sampled on a uniform `(ξ, t)` lattice and interpolated bilinearly.
///
/// Rows are spatial samples at `ξ_i = i/(nx-1)`; columns are time samples at
/// `t_j = jω/nt` over one period (wrapping back to column 0 at `t = ω`).
/// A table with `ω = 0` is time independent and has exactly one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub period: Option<f64>,
    pub nx: usize,
    pub nt: usize,
    values: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(period: Option<f64>, nx: usize, nt: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 {
            return Err(Error::Domain("coefficient table needs at least 2 spatial rows".into()));
        }
        if nt == 0 || values.len() != nx * nt {
            return Err(Error::Domain(format!(
                "coefficient table expects {nx}x{nt} values, got {}",
                values.len()
            )));
        }
        match period {
            Some(w) if !(w.is_finite() && w > 0.0) => {
                return Err(Error::Domain(format!("table period must be positive, got {w}")))
            }
            None if nt != 1 => {
                return Err(Error::Domain("a table without period must have one time column".into()))
            }
            _ => {}
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("table entries must be finite and >= 0, found {v}")));
        }
        Ok(Self {
            period,
            nx,
            nt,
            values,
        })
    }

    /// Parse the plain-text matrix format:
    ///
    /// ```text
    /// # optional comments
    /// omega 1.0 nx 3 nt 2
    /// 1.0 1.5
    /// 2.0 2.5
    /// 1.0 1.5
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::config("coefficient table is empty"))?;
        let herr = |msg: &str| Error::Config {
            line: Some(hline),
            message: format!("table header: {msg} (expected `omega <w> nx <n> nt <m>`)"),
        };
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 6 || tokens[0] != "omega" || tokens[2] != "nx" || tokens[4] != "nt" {
            return Err(herr("malformed"));
        }
        let omega: f64 = tokens[1].parse().map_err(|_| herr("bad omega"))?;
        let nx: usize = tokens[3].parse().map_err(|_| herr("bad nx"))?;
        let nt: usize = tokens[5].parse().map_err(|_| herr("bad nt"))?;
        let mut values = Vec::with_capacity(nx * nt);
        let mut rows = 0;
        for (lno, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config {
                    line: Some(lno),
                    message: format!("table row: {e}"),
                })?;
            if row.len() != nt {
                return Err(Error::Config {
                    line: Some(lno),
                    message: format!("table row has {} columns, header says {nt}", row.len()),
                });
            }
            values.extend(row);
            rows += 1;
        }
        if rows != nx {
            return Err(Error::config(format!("table has {rows} rows, header says {nx}")));
        }
        let period = if omega == 0.0 { None } else { Some(omega) };
        Self::new(period, nx, nt, values)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("omega {} nx {} nt {}\n", self.period.unwrap_or(0.0), self.nx, self.nt);
        for row in self.values.chunks(self.nt) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nt + j]
    }

    pub fn value(&self, xi: f64, t: f64) -> f64 {
        let u = xi.clamp(0.0, 1.0) * (self.nx - 1) as f64;
        let i0 = (u.floor() as usize).min(self.nx - 2);
        let wx = u - i0 as f64;
        let (j0, j1, wt) = match self.period {
            Some(w) if self.nt > 1 => {
                let tau = t.rem_euclid(w) / w * self.nt as f64;
                let j0 = (tau.floor() as usize).min(self.nt - 1);
                (j0, (j0 + 1) % self.nt, tau - j0 as f64)
            }
            _ => (0, 0, 0.0),
        };
        let lerp = |j: usize| self.at(i0, j) * (1.0 - wx) + self.at(i0 + 1, j) * wx;
        lerp(j0) * (1.0 - wt) + lerp(j1) * wt
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn is_spatially_uniform(&self) -> bool {
        (0..self.nt).all(|j| (1..self.nx).all(|i| self.at(i, j) == self.at(0, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64) -> Point {
        Point { x, y: 0.0 }
    }

    #[test]
    fn rejects_negative_profiles() {
        assert!(CoefficientField::constant(-1.0).is_err());
        assert!(CoefficientField::spatial_cosine(0.5, 0.6, 1).is_err());
        assert!(CoefficientField::periodic(1.0, 1.5, 1.0).is_err());
        assert!(CoefficientField::periodic(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn table_parse_and_interpolate() {
        let text = "# beta table\nomega 2.0 nx 3 nt 2\n1 3\n2 4\n3 5\n";
        let tab = CoefficientTable::parse(text).unwrap();
        assert_eq!(tab.value(0.0, 0.0), 1.0);
        assert_eq!(tab.value(1.0, 0.0), 3.0);
        assert_eq!(tab.value(0.25, 0.0), 1.5);
        // halfway between columns (t = ω/4), and wrapping at t = ω
        assert_eq!(tab.value(0.0, 0.5), 2.0);
        assert_eq!(tab.value(0.5, 2.0), tab.value(0.5, 0.0));
        assert_eq!(tab.value(0.0, 1.5), 2.0);
        let again = CoefficientTable::parse(&tab.to_text()).unwrap();
        assert_eq!(again, tab);
    }

    #[test]
    fn table_errors_carry_line_numbers() {
        let err = CoefficientTable::parse("omega 1 nx 2 nt 2\n1 2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(3), .. }), "{err}");
        let err = CoefficientTable::parse("\nomega x nx 2 nt 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(2), .. }), "{err}");
        assert!(CoefficientTable::parse("omega 0 nx 2 nt 2\n1 1\n1 1\n").is_err());
        assert!(CoefficientTable::parse("omega 1 nx 2 nt 1\n1\n").is_err());
    }

    fn any_field() -> impl Strategy<Value = CoefficientField> {
        prop_oneof![
            (0.0f64..5.0).prop_map(|c| CoefficientField::constant(c).unwrap()),
            (0.0f64..3.0, 0.0f64..1.0, 1u32..4, -1.0f64..1.0, 0.1f64..5.0).prop_map(
                |(m, frac, k, at, w)| {
                    CoefficientField::separable(Separable {
                        mean: m,
                        amplitude_x: m * frac,
                        wavenumber: k,
                        amplitude_t: at,
                        period: Some(w),
                    })
                    .unwrap()
                }
            ),
            (2usize..6, 1usize..5, 0.1f64..4.0, proptest::collection::vec(0.0f64..3.0, 30)).prop_map(
                |(nx, nt, w, pool)| {
                    let vals = pool.into_iter().cycle().take(nx * nt).collect();
                    CoefficientField::Tabulated(CoefficientTable::new(Some(w), nx, nt, vals).unwrap())
                }
            ),
        ]
    }

    proptest! {
        #[test]
        fn sampled_values_respect_bounds_and_period(field in any_field()) {
            let (lo, hi) = (field.lower_bound(), field.upper_bound());
            let w = field.period();
            for a in 0..=20 {
                for b in 0..=20 {
                    let xi = a as f64 / 20.0;
                    let t = b as f64 * 0.37;
                    let v = field.value(pt(xi), t);
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
                    if let Some(w) = w {
                        let shifted = field.value(pt(xi), t + w);
                        prop_assert!((shifted - v).abs() <= 1e-12 * (1.0 + v.abs()));
                    }
                }
            }
        }
    }
}
