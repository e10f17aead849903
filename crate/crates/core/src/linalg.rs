//! Small dense-free linear algebra kernels used by the grid and solver.

/// `LDLᵀ` factorization of a symmetric tridiagonal matrix.
///
/// Stores the pivots `d` and the unit-lower multipliers `l` so that repeated
/// solves against the same matrix cost `O(n)` without refactoring.
#[derive(Debug, Clone)]
pub struct TridiagonalLdl {
    pivots: Vec<f64>,
    multipliers: Vec<f64>,
}

impl TridiagonalLdl {
    /// Factor the matrix with main diagonal `diag` and symmetric off-diagonal
    /// `off` (`off[i]` couples rows `i` and `i + 1`).
    ///
    /// Returns `None` if a pivot is not strictly positive.
    pub fn factor(diag: &[f64], off: &[f64]) -> Option<Self> {
        let n = diag.len();
        debug_assert_eq!(off.len() + 1, n);
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n.saturating_sub(1));
        let mut prev = diag[0];
        if prev <= 0.0 || !prev.is_finite() {
            return None;
        }
        pivots.push(prev);
        for i in 1..n {
            let l = off[i - 1] / prev;
            let d = diag[i] - l * off[i - 1];
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            multipliers.push(l);
            pivots.push(d);
            prev = d;
        }
        Some(Self {
            pivots,
            multipliers,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        self.solve_strided(rhs, 0, 1);
    }

    /// Solve along a strided line `rhs[offset + k * stride]`, `k = 0..n`.
    pub fn solve_strided(&self, rhs: &mut [f64], offset: usize, stride: usize) {
        let n = self.pivots.len();
        let at = |k: usize| offset + k * stride;
        for k in 1..n {
            rhs[at(k)] -= self.multipliers[k - 1] * rhs[at(k - 1)];
        }
        for k in 0..n {
            rhs[at(k)] /= self.pivots[k];
        }
        for k in (0..n - 1).rev() {
            rhs[at(k)] -= self.multipliers[k] * rhs[at(k + 1)];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Unpreconditioned conjugate gradients for a symmetric positive definite
/// operator given as a closure `apply(x, out)`. `x` holds the initial guess
/// on entry and the solution on exit.
pub fn conjugate_gradient<F>(apply: F, rhs: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> CgReport
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let rhs_norm = norm2(rhs);
    if rhs_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgReport {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iter && rr.sqrt() > tol * rhs_norm {
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        iterations += 1;
    }
    let relative_residual = rr.sqrt() / rhs_norm;
    CgReport {
        iterations,
        relative_residual,
        converged: relative_residual <= tol,
    }
}
