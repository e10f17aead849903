use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Incidence kernel `K(S, I)`; the transmission coefficient β is applied by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IncidenceKind {
    /// `S^q I^p`
    Power { q: f64, p: f64 },
    /// `S ln(1 + k I)`
    Binomial { k: f64 },
    /// `S^q I^p / (1 + I^ℓ)`
    Saturated { q: f64, p: f64, ell: f64 },
    /// `S^q I^p e^{-I} / (1 + I^ℓ)`
    Media { q: f64, p: f64, ell: f64 },
}

impl IncidenceKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            IncidenceKind::Power { q, p } => q > 0.0 && p > 0.0,
            IncidenceKind::Binomial { k } => k >= 0.0,
            IncidenceKind::Saturated { q, p, ell } | IncidenceKind::Media { q, p, ell } => {
                q > 0.0 && p > 0.0 && ell >= 0.0
            }
        };
        let finite = match *self {
            IncidenceKind::Power { q, p } => q.is_finite() && p.is_finite(),
            IncidenceKind::Binomial { k } => k.is_finite(),
            IncidenceKind::Saturated { q, p, ell } | IncidenceKind::Media { q, p, ell } => {
                q.is_finite() && p.is_finite() && ell.is_finite()
            }
        };
        if ok && finite {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid incidence parameters {self:?}")))
        }
    }

    /// The `(q, p)` power core used for regime classification. The binomial
    /// kernel behaves like `S·I` near `I = 0`.
    pub fn core_exponents(&self) -> (f64, f64) {
        match *self {
            IncidenceKind::Power { q, p }
            | IncidenceKind::Saturated { q, p, .. }
            | IncidenceKind::Media { q, p, .. } => (q, p),
            IncidenceKind::Binomial { .. } => (1.0, 1.0),
        }
    }

    /// Kernel value without input checks. Callers guarantee `s, i >= 0`.
    #[inline]
    pub fn kernel(&self, s: f64, i: f64) -> f64 {
        match *self {
            IncidenceKind::Power { q, p } => power(s, q) * power(i, p),
            IncidenceKind::Binomial { k } => s * (k * i).ln_1p(),
            IncidenceKind::Saturated { q, p, ell } => power(s, q) * power(i, p) / (1.0 + i.powf(ell)),
            IncidenceKind::Media { q, p, ell } => {
                power(s, q) * power(i, p) * (-i).exp() / (1.0 + i.powf(ell))
            }
        }
    }
}

/// `x^e` with `0^e = 0` for `e > 0`.
#[inline]
fn power(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

pub fn evaluate_incidence(kind: &IncidenceKind, s: f64, i: f64) -> Result<f64> {
    kind.validate()?;
    if !(s >= 0.0 && i >= 0.0) {
        return Err(Error::Domain(format!(
            "incidence needs nonnegative densities, got S={s}, I={i}"
        )));
    }
    Ok(kind.kernel(s, i))
}
