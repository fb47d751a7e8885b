//! Small dense and iterative linear-algebra kernels.
//!
//! Everything here operates on flat `&[f64]` buffers in row-major order. The
//! matrices involved are element-local blocks (at most a few hundred rows),
//! so simple O(n^3) routines are plenty; the independent eigen-oracles used
//! in the test suite live in the tests and are built on nalgebra instead.

use crate::{error::invalid, Error, Result};

/// Dense symmetric positive definite matrix stored via its Cholesky factor.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    /// Lower-triangular factor, row major, upper part unused.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive definite matrix (row major, n x n).
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = a.to_vec();
        for j in 0..n {
            let mut diag = l[j * n + j];
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(invalid(format!(
                    "matrix not positive definite at pivot {j} (value {diag:.3e})"
                )));
            }
            let dsqrt = diag.sqrt();
            l[j * n + j] = dsqrt;
            for i in (j + 1)..n {
                let mut v = l[i * n + j];
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / dsqrt;
            }
        }
        // zero the unused upper triangle so Debug output is readable
        for i in 0..n {
            for j in (i + 1)..n {
                l[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // forward: L y = b
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[i * n + k] * b[k];
            }
            b[i] = v / self.l[i * n + i];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i] * b[k];
            }
            b[i] = v / self.l[i * n + i];
        }
    }

    /// Solve for several right-hand sides laid out as consecutive rows of
    /// length n (i.e. each row is an independent rhs).
    pub fn solve_rows_in_place(&self, rows: &mut [f64]) {
        assert_eq!(rows.len() % self.n, 0);
        for row in rows.chunks_mut(self.n) {
            self.solve_in_place(row);
        }
    }
}

/// y = A x for a dense row-major matrix.
pub fn matvec(a: &[f64], n_rows: usize, n_cols: usize, x: &[f64], y: &mut [f64]) {
    assert_eq!(a.len(), n_rows * n_cols);
    assert_eq!(x.len(), n_cols);
    assert_eq!(y.len(), n_rows);
    for (i, yi) in y.iter_mut().enumerate() {
        let row = &a[i * n_cols..(i + 1) * n_cols];
        let mut acc = 0.0;
        for (aij, xj) in row.iter().zip(x) {
            acc += aij * xj;
        }
        *yi = acc;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for an SPD operator given as a closure.
///
/// `apply(x, y)` computes y = A x; `precond(r, z)` computes z = P^{-1} r.
/// Returns the iteration count. Converges when ||r|| <= rtol * ||b||.
pub fn pcg(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    precond: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    precond(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);

    for it in 0..max_iter {
        if norm2(&r) <= rtol * bnorm {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::solver("cg: operator lost positive definiteness"));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm2(&r) <= rtol * bnorm {
        Ok(max_iter)
    } else {
        Err(Error::solver(format!(
            "cg did not converge in {max_iter} iterations (rel res {:.3e})",
            norm2(&r) / bnorm
        )))
    }
}

/// Largest generalized eigenvalue of (A, M) by power iteration on M^{-1} A.
///
/// A must be symmetric positive semidefinite and M symmetric positive
/// definite; the generalized Rayleigh quotient (x, A x)/(x, M x) then
/// converges monotonically from the starting vector. Convergence is declared
/// once the quotient is stationary to the requested relative tolerance over
/// three consecutive sweeps.
pub fn power_iteration_max_eig(
    apply_a: &mut dyn FnMut(&[f64], &mut [f64]),
    apply_m: &mut dyn FnMut(&[f64], &mut [f64]),
    solve_m: &mut dyn FnMut(&mut [f64]),
    n: usize,
    rtol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut x = vec![0.0; n];
    rng.fill_symmetric(&mut x);
    let nx = norm2(&x);
    for v in x.iter_mut() {
        *v /= nx;
    }
    let mut ax = vec![0.0; n];
    let mut mx = vec![0.0; n];
    let mut lambda_prev = f64::NAN;
    let mut quiet_sweeps = 0;
    for _ in 0..max_iter {
        apply_a(&x, &mut ax);
        apply_m(&x, &mut mx);
        let xmx = dot(&x, &mx);
        if xmx <= 0.0 || !xmx.is_finite() {
            return Err(Error::solver(
                "power iteration: mass quadratic form not positive",
            ));
        }
        let lambda = dot(&x, &ax) / xmx;
        // next iterate: x <- M^{-1} A x
        solve_m(&mut ax);
        std::mem::swap(&mut x, &mut ax);
        let nx = norm2(&x);
        if nx == 0.0 || !nx.is_finite() {
            return Err(Error::solver("power iteration produced a zero/NaN iterate"));
        }
        for v in x.iter_mut() {
            *v /= nx;
        }
        if lambda_prev.is_finite() {
            let denom = lambda.abs().max(f64::MIN_POSITIVE);
            if (lambda - lambda_prev).abs() <= 0.1 * rtol * denom {
                quiet_sweeps += 1;
                if quiet_sweeps >= 3 {
                    return Ok(lambda);
                }
            } else {
                quiet_sweeps = 0;
            }
        }
        lambda_prev = lambda;
    }
    Err(Error::solver(format!(
        "power iteration did not converge in {max_iter} sweeps"
    )))
}
