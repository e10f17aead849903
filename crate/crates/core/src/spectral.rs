//! Principal periodic-parabolic eigenvalue `λ₀` of
//! `∂φ/∂t - d_I Δφ - a(x,t) φ = λ φ` (Neumann, ω-periodic) and the basic
//! reproduction number `R₀`.
//!
//! `λ₀ = -ln(ρ)/ω` where `ρ` is the spectral radius of the period map, found
//! by power iteration from the positive constant field. Each linear step
//! applies `exp(dt·a(x, t_mid))` pointwise and then one backward-Euler
//! diffusion solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::model::{CoefficientField, ModelSpec};
use crate::solver::ImplicitDiffusion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSettings {
    /// Target step inside one period; rounded down so the period is hit exactly.
    pub dt: f64,
    pub max_iter: usize,
    /// Relative change of the growth ratio that stops the power iteration.
    pub tol: f64,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_iter: 1000,
            tol: 1e-8,
        }
    }
}

/// Bisection tolerance on `R₀`, relative to the bracket.
pub const R0_TOL: f64 = 1e-6;
const BRACKET_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedProblem {
    pub domain: Domain,
    pub d_i: f64,
    pub beta: CoefficientField,
    pub gamma: CoefficientField,
    /// `(N/|Ω|)^q`
    pub scale: f64,
    pub period: f64,
    pub settings: SpectralSettings,
}

impl LinearizedProblem {
    pub fn new(
        domain: Domain,
        d_i: f64,
        beta: CoefficientField,
        gamma: CoefficientField,
        scale: f64,
        period: f64,
        settings: SpectralSettings,
    ) -> Result<Self> {
        domain.validate()?;
        if !(d_i > 0.0 && scale >= 0.0 && scale.is_finite() && period > 0.0 && period.is_finite()) {
            return Err(Error::Domain(format!(
                "linearized problem needs d_I > 0, scale >= 0, ω > 0; got {d_i}, {scale}, {period}"
            )));
        }
        if !(settings.dt > 0.0 && settings.tol > 0.0 && settings.max_iter >= 2) {
            return Err(Error::config(format!("invalid spectral settings {settings:?}")));
        }
        Ok(Self {
            domain,
            d_i,
            beta,
            gamma,
            scale,
            period,
            settings,
        })
    }

    /// Linearization at the disease-free state `S ≡ N/|Ω|`. Autonomous models use `ω = 1`.
    pub fn from_model(model: &ModelSpec, domain: &Domain, total_mass: f64, settings: SpectralSettings) -> Result<Self> {
        if !(total_mass > 0.0) {
            return Err(Error::Domain(format!("total mass must be positive, got {total_mass}")));
        }
        let scale = (total_mass / domain.measure()).powf(model.exponents.q);
        Self::new(
            *domain,
            model.d_i,
            model.beta.clone(),
            model.gamma.clone(),
            scale,
            model.declared_period().unwrap_or(1.0),
            settings,
        )
    }

    /// `σ⁰_β (N/|Ω|)^q + σ⁰_γ`, a bound on `|a|`.
    pub fn potential_bound(&self) -> f64 {
        self.beta.upper_bound() * self.scale + self.gamma.upper_bound()
    }

    fn with_divisor(&self, divisor: f64) -> Self {
        let mut p = self.clone();
        p.scale /= divisor;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monodromy {
    pub rho: f64,
    /// Principal eigenfield at `t = 0`, normalized to unit sup-norm.
    pub eigenfield: GridFunction,
    pub iterations: usize,
    /// `‖Pφ - ρφ‖∞ / ρ` at the last iterate.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda0: f64,
    pub rho: f64,
    pub r0: Option<f64>,
    /// Bisection value when `r0` came from the autonomous closed form.
    pub r0_bisection: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub eigenfield: GridFunction,
}

struct PeriodMap<'a> {
    problem: &'a LinearizedProblem,
    steps: usize,
    dt: f64,
    diffusion: ImplicitDiffusion,
    beta: Vec<f64>,
    gamma: Vec<f64>,
}

impl<'a> PeriodMap<'a> {
    fn new(problem: &'a LinearizedProblem) -> Self {
        let steps = (problem.period / problem.settings.dt).ceil().max(1.0) as usize;
        let dt = problem.period / steps as f64;
        let n = problem.domain.len();
        Self {
            problem,
            steps,
            dt,
            diffusion: ImplicitDiffusion::new(&problem.domain, dt * problem.d_i),
            beta: vec![0.0; n],
            gamma: vec![0.0; n],
        }
    }

    fn apply(&mut self, phi: &mut [f64]) {
        let p = self.problem;
        let uniform = p.beta.is_spatially_uniform() && p.gamma.is_spatially_uniform();
        for k in 0..self.steps {
            let t_mid = (k as f64 + 0.5) * self.dt;
            if uniform {
                let a = p.beta.value(Default::default(), t_mid) * p.scale - p.gamma.value(Default::default(), t_mid);
                let factor = (self.dt * a).exp();
                phi.iter_mut().for_each(|v| *v *= factor);
            } else {
                p.beta.sample_into(&p.domain, t_mid, &mut self.beta);
                p.gamma.sample_into(&p.domain, t_mid, &mut self.gamma);
                for ((v, b), g) in phi.iter_mut().zip(&self.beta).zip(&self.gamma) {
                    *v *= (self.dt * (b * p.scale - g)).exp();
                }
            }
            self.diffusion.solve_in_place(phi);
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Spectral radius of the period map by power iteration.
pub fn monodromy_radius(problem: &LinearizedProblem) -> Result<Monodromy> {
    let mut map = PeriodMap::new(problem);
    let n = problem.domain.len();
    let mut phi = vec![1.0; n];
    let mut prev = f64::NAN;
    for iteration in 1..=problem.settings.max_iter {
        let mut next = phi.clone();
        map.apply(&mut next);
        let ratio = sup(&next);
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::Numeric {
                message: format!("period map produced sup-norm {ratio} at iteration {iteration}"),
                residual: f64::NAN,
            });
        }
        let residual = phi
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((b - ratio * a).abs()))
            / ratio;
        next.iter_mut().for_each(|v| *v /= ratio);
        phi = next;
        if (ratio - prev).abs() <= problem.settings.tol * ratio {
            return Ok(Monodromy {
                rho: ratio,
                eigenfield: GridFunction::from_vec(phi),
                iterations: iteration,
                residual,
            });
        }
        prev = ratio;
    }
    Err(Error::Numeric {
        message: format!(
            "power iteration did not converge in {} iterations (last ratio {prev})",
            problem.settings.max_iter
        ),
        residual: f64::NAN,
    })
}

/// `λ₀ = -ln(ρ)/ω` with the principal eigenfield; `r0` is left unset.
pub fn principal_eigenvalue(problem: &LinearizedProblem) -> Result<SpectralResult> {
    let m = monodromy_radius(problem)?;
    Ok(SpectralResult {
        lambda0: -m.rho.ln() / problem.period,
        rho: m.rho,
        r0: None,
        r0_bisection: None,
        iterations: m.iterations,
        residual: m.residual,
        eigenfield: m.eigenfield,
    })
}

fn lambda0_with_divisor(problem: &LinearizedProblem, divisor: f64) -> Result<f64> {
    Ok(principal_eigenvalue(&problem.with_divisor(divisor))?.lambda0)
}

/// `R₀` as the divisor `μ̂` at which `λ₀` of `β(N/|Ω|)^q/μ̂ - γ` vanishes.
/// `None` when `γ ≡ 0` (no recovery, `R₀` undefined).
pub fn r0_bisection(problem: &LinearizedProblem) -> Result<Option<f64>> {
    if problem.gamma.upper_bound() <= 0.0 {
        return Ok(None);
    }
    if problem.beta.upper_bound() * problem.scale <= 0.0 {
        return Ok(Some(0.0));
    }
    // λ₀ increases with the divisor.
    let (mut lo, mut hi) = (1.0, 1.0);
    let at_one = lambda0_with_divisor(problem, 1.0)?;
    if at_one == 0.0 {
        return Ok(Some(1.0));
    }
    let mut expansions = 0;
    if at_one < 0.0 {
        while lambda0_with_divisor(problem, hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > BRACKET_LIMIT {
                return Err(bracket_error(lo, hi));
            }
        }
    } else {
        while lambda0_with_divisor(problem, lo)? > 0.0 {
            hi = lo;
            lo *= 0.5;
            expansions += 1;
            if expansions > BRACKET_LIMIT {
                return Err(bracket_error(lo, hi));
            }
        }
    }
    while hi - lo > R0_TOL * hi {
        let mid = 0.5 * (lo + hi);
        let l = lambda0_with_divisor(problem, mid)?;
        if l == 0.0 {
            return Ok(Some(mid));
        }
        if l < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

fn bracket_error(lo: f64, hi: f64) -> Error {
    Error::Numeric {
        message: format!("R0 bracket [{lo}, {hi}] failed to enclose a sign change"),
        residual: hi - lo,
    }
}

/// `R₀`, using the closed form `β(N/|Ω|)^q/γ` for constant coefficients.
pub fn r0(problem: &LinearizedProblem) -> Result<Option<f64>> {
    match (problem.beta.as_constant(), problem.gamma.as_constant()) {
        (Some(b), Some(g)) if g > 0.0 => Ok(Some(b * problem.scale / g)),
        _ => r0_bisection(problem),
    }
}

/// `λ₀`, `ρ` and `R₀` together. For constant coefficients the closed-form
/// `R₀` is reported and the bisection value kept as a cross-check.
pub fn analyze(problem: &LinearizedProblem) -> Result<SpectralResult> {
    let mut result = principal_eigenvalue(problem)?;
    result.r0 = r0(problem)?;
    if problem.beta.as_constant().is_some() && problem.gamma.as_constant().is_some() {
        result.r0_bisection = r0_bisection(problem)?;
    }
    Ok(result)
}
