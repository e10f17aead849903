//! Cell-centered finite-volume grids with homogeneous Neumann boundaries.
//!
//! Nodes sit at cell centers. The boundary condition is imposed with mirror
//! ghost cells, so every row and every column of the discrete Laplacian sums
//! to zero and the midpoint quadrature of `Δ_h f` vanishes identically.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dot, norm2, TridiagonalLdl};

pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain1D {
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain2D {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

/// A rectangular spatial domain: an interval or a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval(Domain1D),
    Rectangle(Domain2D),
}

/// Physical coordinates of a node (`y` is zero in 1D).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Domain {
    pub fn interval(length: f64, cells: usize) -> Result<Self> {
        let d = Domain::Interval(Domain1D { length, cells });
        d.validate()?;
        Ok(d)
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        let d = Domain::Rectangle(Domain2D { lx, ly, nx, ny });
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let (lengths, counts): (Vec<f64>, Vec<usize>) = match *self {
            Domain::Interval(d) => (vec![d.length], vec![d.cells]),
            Domain::Rectangle(d) => (vec![d.lx, d.ly], vec![d.nx, d.ny]),
        };
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::config("domain lengths must be positive and finite"));
        }
        if counts.iter().any(|&n| n < MIN_CELLS) {
            return Err(Error::config(format!(
                "each axis needs at least {MIN_CELLS} cells, got {counts:?}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(_) => 1,
            Domain::Rectangle(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Domain::Interval(d) => d.cells,
            Domain::Rectangle(d) => d.nx * d.ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval(d) => d.length,
            Domain::Rectangle(d) => d.lx * d.ly,
        }
    }

    /// Cell widths `(hx, hy)`; `hy` is 1 in 1D so that the product is the cell volume.
    pub fn spacing(&self) -> (f64, f64) {
        match *self {
            Domain::Interval(d) => (d.length / d.cells as f64, 1.0),
            Domain::Rectangle(d) => (d.lx / d.nx as f64, d.ly / d.ny as f64),
        }
    }

    pub fn cell_volume(&self) -> f64 {
        let (hx, hy) = self.spacing();
        hx * hy
    }

    /// Number of cells along each axis (`ny = 1` in 1D).
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Domain::Interval(d) => (d.cells, 1),
            Domain::Rectangle(d) => (d.nx, d.ny),
        }
    }

    /// Largest side length.
    pub fn diameter_axis(&self) -> f64 {
        match *self {
            Domain::Interval(d) => d.length,
            Domain::Rectangle(d) => d.lx.max(d.ly),
        }
    }

    pub fn node(&self, index: usize) -> Point {
        let (nx, _) = self.shape();
        let (hx, hy) = self.spacing();
        let i = index % nx;
        let j = index / nx;
        match self {
            Domain::Interval(_) => Point {
                x: (i as f64 + 0.5) * hx,
                y: 0.0,
            },
            Domain::Rectangle(_) => Point {
                x: (i as f64 + 0.5) * hx,
                y: (j as f64 + 0.5) * hy,
            },
        }
    }

    /// Node coordinates scaled to the unit interval/square.
    pub fn normalized_node(&self, index: usize) -> Point {
        let p = self.node(index);
        match *self {
            Domain::Interval(d) => Point {
                x: p.x / d.length,
                y: 0.0,
            },
            Domain::Rectangle(d) => Point {
                x: p.x / d.lx,
                y: p.y / d.ly,
            },
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }
}

/// Values of a scalar field at the nodes of a [`Domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction(Vec<f64>);

impl GridFunction {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(domain: &Domain, value: f64) -> Self {
        Self(vec![value; domain.len()])
    }

    pub fn from_fn(domain: &Domain, f: impl Fn(Point) -> f64) -> Self {
        Self(domain.nodes().map(f).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn sup(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for GridFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GridFunction {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Second-order five-point (three-point in 1D) Neumann Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteLaplacian {
    domain: Domain,
    inv_hx2: f64,
    inv_hy2: f64,
}

pub fn build_laplacian(domain: &Domain) -> Result<DiscreteLaplacian> {
    domain.validate()?;
    let (hx, hy) = domain.spacing();
    Ok(DiscreteLaplacian {
        domain: *domain,
        inv_hx2: 1.0 / (hx * hx),
        inv_hy2: if domain.dim() == 2 { 1.0 / (hy * hy) } else { 0.0 },
    })
}

impl DiscreteLaplacian {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = self.domain.shape();
        debug_assert_eq!(u.len(), nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let c = u[k];
                let west = if i > 0 { u[k - 1] } else { c };
                let east = if i + 1 < nx { u[k + 1] } else { c };
                let mut v = (west - 2.0 * c + east) * self.inv_hx2;
                if ny > 1 {
                    let south = if j > 0 { u[k - nx] } else { c };
                    let north = if j + 1 < ny { u[k + nx] } else { c };
                    v += (south - 2.0 * c + north) * self.inv_hy2;
                }
                out[k] = v;
            }
        }
    }

    pub fn apply_to(&self, u: &GridFunction) -> GridFunction {
        let mut out = vec![0.0; u.len()];
        self.apply(u, &mut out);
        GridFunction(out)
    }

    /// Matrix entry `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let (nx, ny) = self.domain.shape();
        let (ri, rj) = (row % nx, row / nx);
        let (ci, cj) = (col % nx, col / nx);
        let axis = |r: usize, c: usize, n: usize, w: f64| -> f64 {
            if r == c {
                let neighbours = (r > 0) as usize + (r + 1 < n) as usize;
                -(neighbours as f64) * w
            } else if r.abs_diff(c) == 1 {
                w
            } else {
                0.0
            }
        };
        if rj == cj {
            let mut v = axis(ri, ci, nx, self.inv_hx2);
            if ri == ci && ny > 1 {
                v += axis(rj, cj, ny, self.inv_hy2);
            }
            v
        } else if ri == ci && ny > 1 {
            axis(rj, cj, ny, self.inv_hy2)
        } else {
            0.0
        }
    }
}

/// Midpoint-rule quadrature `Σ f_i · |cell|`.
pub fn integrate(domain: &Domain, f: &[f64]) -> Result<f64> {
    if f.len() != domain.len() {
        return Err(Error::Domain(format!(
            "grid function has {} values, domain has {} nodes",
            f.len(),
            domain.len()
        )));
    }
    Ok(f.iter().sum::<f64>() * domain.cell_volume())
}

/// Result of the deflated shifted-inverse eigen iteration.
#[derive(Debug, Clone, Copy)]
pub struct PoincareEstimate {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub const POINCARE_TOL: f64 = 1e-10;
const POINCARE_MAX_ITER: usize = 1000;

/// Smallest positive eigenvalue of `-Δ_h` (the discrete Poincaré constant).
pub fn poincare_constant(domain: &Domain) -> Result<f64> {
    poincare_constant_with(domain, POINCARE_TOL, POINCARE_MAX_ITER).map(|e| e.value)
}

/// Shifted inverse iteration on `-Δ_h + σI` with the constant mode removed by
/// explicit orthogonalization every sweep. The shift is the continuum
/// estimate `(π/L_max)²`, which keeps the convergence ratio bounded
/// independently of the domain scale.
pub fn poincare_constant_with(domain: &Domain, tol: f64, max_iter: usize) -> Result<PoincareEstimate> {
    let (nx, ny) = domain.shape();
    if nx < 8 || (domain.dim() == 2 && ny < 8) {
        return Err(Error::config("poincare_constant needs at least 8 cells per axis"));
    }
    let lap = build_laplacian(domain)?;
    let n = domain.len();
    let shift = (std::f64::consts::PI / domain.diameter_axis()).powi(2);

    let neg_lap = |v: &[f64], out: &mut [f64]| {
        lap.apply(v, out);
        out.iter_mut().for_each(|o| *o = -*o);
    };

    // 1D: direct factorization of the shifted tridiagonal matrix.
    let direct = if domain.dim() == 1 {
        let w = lap.inv_hx2;
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let nb = (i > 0) as usize + (i + 1 < n) as usize;
                nb as f64 * w + shift
            })
            .collect();
        let off = vec![-w; n - 1];
        TridiagonalLdl::factor(&diag, &off)
    } else {
        None
    };

    // Start from a smooth non-constant field.
    let mut x: Vec<f64> = (0..n)
        .map(|k| {
            let p = domain.normalized_node(k);
            (std::f64::consts::PI * p.x).cos() + 0.5 * (std::f64::consts::PI * p.y).cos() + 0.1 * p.x
        })
        .collect();
    deflate_constant(&mut x);
    normalize(&mut x);

    let mut lambda = shift;
    let mut ax = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut y = vec![0.0; n];
        match &direct {
            Some(f) => {
                y.copy_from_slice(&x);
                f.solve_in_place(&mut y);
            }
            None => {
                let guess = 1.0 / (shift + lambda);
                y.iter_mut().zip(&x).for_each(|(yi, xi)| *yi = xi * guess);
                let apply = |v: &[f64], out: &mut [f64]| {
                    neg_lap(v, out);
                    out.iter_mut().zip(v).for_each(|(o, vi)| *o += shift * vi);
                };
                let rep = conjugate_gradient(apply, &x, &mut y, tol * 1e-3, 10 * n);
                if !rep.converged && rep.relative_residual > tol {
                    return Err(Error::Numeric {
                        message: format!("inner conjugate-gradient solve did not converge in {} iterations", rep.iterations),
                        residual: rep.relative_residual,
                    });
                }
            }
        }
        deflate_constant(&mut y);
        normalize(&mut y);
        x = y;
        neg_lap(&x, &mut ax);
        lambda = dot(&x, &ax);
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, xi)| a - lambda * xi).collect();
        residual = norm2(&r) / lambda.abs();
        if residual <= tol {
            return Ok(PoincareEstimate {
                value: lambda,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::Numeric {
        message: format!("poincare iteration did not converge in {max_iter} sweeps"),
        residual,
    })
}

fn deflate_constant(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn normalize(x: &mut [f64]) {
    let n = norm2(x);
    x.iter_mut().for_each(|v| *v /= n);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn too_few_cells_is_config_error() {
        assert!(matches!(Domain::interval(1.0, 3), Err(Error::Config { .. })));
        assert!(matches!(
            Domain::rectangle(1.0, 1.0, 4, 2),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn laplacian_annihilates_constants() {
        for d in [
            Domain::interval(2.5, 17).unwrap(),
            Domain::rectangle(1.0, 3.0, 6, 9).unwrap(),
        ] {
            let lap = build_laplacian(&d).unwrap();
            let out = lap.apply_to(&GridFunction::constant(&d, 3.7));
            assert!(out.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn laplacian_is_symmetric_with_zero_row_sums() {
        for d in [
            Domain::interval(1.0, 7).unwrap(),
            Domain::rectangle(2.0, 1.0, 8, 4).unwrap(),
        ] {
            let lap = build_laplacian(&d).unwrap();
            let n = d.len();
            for r in 0..n {
                let mut row_sum = 0.0;
                for c in 0..n {
                    assert_eq!(lap.entry(r, c), lap.entry(c, r));
                    row_sum += lap.entry(r, c);
                }
                assert_eq!(row_sum, 0.0);
            }
            // entry() agrees with apply() on unit vectors
            for c in 0..n {
                let mut e = vec![0.0; n];
                e[c] = 1.0;
                let mut out = vec![0.0; n];
                lap.apply(&e, &mut out);
                for r in 0..n {
                    assert_eq!(out[r], lap.entry(r, c));
                }
            }
        }
    }

    #[test]
    fn laplacian_of_cosine_is_second_order() {
        let l = 1.0;
        let d = Domain::interval(l, 200).unwrap();
        let f = GridFunction::from_fn(&d, |p| (PI * p.x / l).cos());
        let lap = build_laplacian(&d).unwrap().apply_to(&f);
        let h = l / 200.0;
        let err = lap
            .iter()
            .zip(f.iter())
            .map(|(a, fi)| (a + (PI / l).powi(2) * fi).abs())
            .fold(0.0, f64::max);
        // (π²)·(π h)²/12 leading error
        assert!(err < 2.0 * PI.powi(4) * h * h / 12.0, "err = {err}");
    }

    #[test]
    fn quadrature_cases() {
        let d = Domain::interval(2.0, 13).unwrap();
        assert!((integrate(&d, &GridFunction::constant(&d, 1.0)).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(integrate(&d, &GridFunction::constant(&d, 0.0)).unwrap(), 0.0);
        let d = Domain::interval(1.0, 100).unwrap();
        let f = GridFunction::from_fn(&d, |p| p.x);
        assert!((integrate(&d, &f).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(integrate(&d, &[1.0; 3]), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_of_laplacian_vanishes() {
        let d = Domain::rectangle(1.0, 2.0, 7, 5).unwrap();
        let f = GridFunction::from_fn(&d, |p| (3.0 * p.x).sin() + p.y * p.y * p.x);
        let lf = build_laplacian(&d).unwrap().apply_to(&f);
        assert!(integrate(&d, &lf).unwrap().abs() < 1e-11);
    }

    #[test]
    fn poincare_requires_eight_cells() {
        let d = Domain::interval(1.0, 6).unwrap();
        assert!(poincare_constant(&d).is_err());
    }

    #[test]
    fn poincare_on_pi_interval() {
        let d = Domain::interval(PI, 400).unwrap();
        assert!((poincare_constant(&d).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn poincare_on_rectangle_uses_long_side() {
        let d = Domain::rectangle(2.0, 1.0, 40, 20).unwrap();
        let exact = (PI / 2.0).powi(2);
        assert!((poincare_constant(&d).unwrap() - exact).abs() / exact < 1e-3);
    }
}
