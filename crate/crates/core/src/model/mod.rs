//! Model parameters: exponents, incidence kernels, coefficient fields and the
//! assumption/regime checks that decide which boundedness results apply.

mod assumptions;
mod coefficient;
mod incidence;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Domain;

/// Time samples per period used when coefficient fields are checked by sampling.
pub(crate) const TIME_SAMPLES: usize = 64;

pub use assumptions::{validate_assumptions, AssumptionCheck, AssumptionId, AssumptionReport, CheckStatus};
pub use coefficient::{CoefficientField, CoefficientTable, Separable};
pub use incidence::{evaluate_incidence, IncidenceKind};

/// Exponents of the generalized reaction terms `-β u^q v^p + γ u^s v^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub r: f64,
}

impl Exponents {
    /// SI specialization: recovery term `γ I`, i.e. `s = 0`, `r = 1`.
    pub fn si(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 0.0, 1.0)
    }

    pub fn new(p: f64, q: f64, s: f64, r: f64) -> Result<Self> {
        let e = Self { p, q, s, r };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.p, self.q, self.s, self.r].iter().all(|v| v.is_finite());
        if !all_finite || self.p <= 0.0 || self.q <= 0.0 || self.s < 0.0 || self.r < 0.0 {
            return Err(Error::Domain(format!(
                "exponents need p, q > 0 and s, r >= 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn is_si(&self) -> bool {
        self.s == 0.0 && self.r == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    H1i,
    H1ii,
    H1iii,
    H1iv,
    H2i,
    H2ii,
    None,
}

impl RegimeLabel {
    /// Regimes whose bounds are obtained by exchanging the roles of `u` and `v`,
    /// which need `γ + μ` rather than `β` bounded below.
    pub fn is_dual(&self) -> bool {
        matches!(self, RegimeLabel::H1iii | RegimeLabel::H1iv | RegimeLabel::H2ii)
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeLabel::H1i => "H1-i",
            RegimeLabel::H1ii => "H1-ii",
            RegimeLabel::H1iii => "H1-iii",
            RegimeLabel::H1iv => "H1-iv",
            RegimeLabel::H2i => "H2-i",
            RegimeLabel::H2ii => "H2-ii",
            RegimeLabel::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeClassification {
    pub label: RegimeLabel,
    pub bounds_theorem_applicable: bool,
}

/// First matching exponent regime in the order H1-i, H1-ii, H1-iii, H1-iv, H2-i, H2-ii.
pub fn classify_exponents(e: &Exponents) -> RegimeClassification {
    let Exponents { p, q, s, r } = *e;
    let label = if p > r && r >= 0.0 && s * p - r * q <= p - r {
        RegimeLabel::H1i
    } else if p == r && p >= 0.0 && 0.0 <= s && s < q {
        RegimeLabel::H1ii
    } else if s > q && q >= 0.0 && s * p - r * q <= s - q {
        RegimeLabel::H1iii
    } else if s == q && s >= 0.0 && 0.0 <= p && p < r {
        RegimeLabel::H1iv
    } else if (0.0..1.0).contains(&p) && 0.0 <= s && s < q && p * s - q * r >= s - q {
        RegimeLabel::H2i
    } else if (0.0..1.0).contains(&s) && 0.0 <= p && p < r && p * s - q * r >= p - r {
        RegimeLabel::H2ii
    } else {
        RegimeLabel::None
    };
    RegimeClassification {
        label,
        bounds_theorem_applicable: label != RegimeLabel::None,
    }
}

/// Full reaction-diffusion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub exponents: Exponents,
    pub beta: CoefficientField,
    pub gamma: CoefficientField,
    pub mu: CoefficientField,
    pub d_s: f64,
    pub d_i: f64,
    pub incidence: IncidenceKind,
}

impl ModelSpec {
    pub fn new(
        exponents: Exponents,
        beta: CoefficientField,
        gamma: CoefficientField,
        mu: CoefficientField,
        d_s: f64,
        d_i: f64,
        incidence: IncidenceKind,
    ) -> Result<Self> {
        let spec = Self {
            exponents,
            beta,
            gamma,
            mu,
            d_s,
            d_i,
            incidence,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Power incidence `β S^q I^p` with SI recovery `γ I`.
    pub fn si_power(
        p: f64,
        q: f64,
        beta: CoefficientField,
        gamma: CoefficientField,
        mu: CoefficientField,
        d_s: f64,
        d_i: f64,
    ) -> Result<Self> {
        Self::new(
            Exponents::si(p, q)?,
            beta,
            gamma,
            mu,
            d_s,
            d_i,
            IncidenceKind::Power { q, p },
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.exponents.validate()?;
        self.incidence.validate()?;
        if !(self.d_s > 0.0 && self.d_i > 0.0 && self.d_s.is_finite() && self.d_i.is_finite()) {
            return Err(Error::Domain(format!(
                "diffusivities must be positive, got d_S={}, d_I={}",
                self.d_s, self.d_i
            )));
        }
        let (q, p) = self.incidence.core_exponents();
        if q != self.exponents.q || p != self.exponents.p {
            return Err(Error::Domain(format!(
                "incidence core exponents (q={q}, p={p}) disagree with model exponents (q={}, p={})",
                self.exponents.q, self.exponents.p
            )));
        }
        Ok(())
    }

    /// SIS case: no disease-induced mortality.
    pub fn is_sis(&self) -> bool {
        self.mu.is_identically_zero()
    }

    /// σ⁰ over all three coefficients.
    pub fn sigma_upper(&self) -> f64 {
        self.beta
            .upper_bound()
            .max(self.gamma.upper_bound())
            .max(self.mu.upper_bound())
    }

    pub fn fields(&self) -> [(&'static str, &CoefficientField); 3] {
        [("beta", &self.beta), ("gamma", &self.gamma), ("mu", &self.mu)]
    }

    /// Longest declared period among the coefficients, if any is time periodic.
    pub fn declared_period(&self) -> Option<f64> {
        self.fields()
            .iter()
            .filter_map(|(_, f)| f.period())
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w))))
    }

    pub fn regime(&self) -> RegimeClassification {
        classify_exponents(&self.exponents)
    }

    /// `sup (γ+μ)/β` over the grid nodes and one period (or a unit time window
    /// when autonomous): the cap on the disease-free limit when `p = 1`.
    pub fn disease_free_cap(&self, domain: &Domain) -> f64 {
        let window = self.declared_period().unwrap_or(1.0);
        let mut cap: f64 = 0.0;
        for k in 0..TIME_SAMPLES {
            let t = window * k as f64 / TIME_SAMPLES as f64;
            let b = self.beta.sample(domain, t);
            let g = self.gamma.sample(domain, t);
            let m = self.mu.sample(domain, t);
            for i in 0..domain.len() {
                cap = cap.max((g[i] + m[i]) / b[i]);
            }
        }
        cap
    }
}
