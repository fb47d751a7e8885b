//! Reference-cell polynomial bases and quadrature.
//!
//! The scalar basis on the reference cell `[0,1]^d` is the tensor product of
//! 1-D Lagrange polynomials nodal at Gauss-Lobatto points (endpoints
//! included, which keeps traces well conditioned). Quadrature is
//! Gauss-Legendre with k+1 points per direction, exact through degree 2k+1
//! per direction - exact for every bilinear form appearing here since the
//! coefficients are piecewise constant and the geometry affine.

use crate::error::invalid;
use crate::Result;

pub const MAX_DEGREE: usize = 8;

/// Legendre polynomial value and derivative at x in [-1,1].
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for m in 1..n {
        let mf = m as f64;
        let p_next = ((2.0 * mf + 1.0) * x * p - mf * p_prev) / (mf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // derivative from the standard identity (valid for |x| != 1)
    let dp = if (1.0 - x * x).abs() > 1e-14 {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    } else {
        let sign: f64 = if x > 0.0 { 1.0 } else { -1.0 };
        sign.powi(n as i32 + 1) * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p, dp)
}

/// Gauss-Legendre nodes and weights on `[0,1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton from the Chebyshev-like initial guess
        let mut x = -(std::f64::consts::PI * (4.0 * i as f64 + 3.0) / (4.0 * n as f64 + 2.0)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Gauss-Lobatto nodes on `[0,1]` (n >= 2 points, endpoints included).
pub fn gauss_lobatto(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let k = n - 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[k] = 1.0;
    // interior nodes are the roots of P_k'
    for i in 1..k {
        let mut x = -(std::f64::consts::PI * i as f64 / k as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(k, x);
            // P_k'' from the Legendre ODE: (1-x^2) P'' = 2x P' - k(k+1) P
            let ddp = (2.0 * x * dp - (k * (k + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
    }
    nodes.iter().map(|&x| 0.5 * (x + 1.0)).collect()
}

/// Quadrature rule on a reference entity (points are padded to 3 coords).
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Reference entity a quadrature rule lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entity {
    Cell,
    Face,
}

/// Tensor Gauss-Legendre rule with k+1 points per direction on the reference
/// cell `[0,1]^d` or reference face `[0,1]^(d-1)`.
pub fn make_quadrature(k: usize, entity: Entity, d: usize) -> QuadratureRule {
    let n1 = k + 1;
    let (x, w) = gauss_legendre(n1);
    let dims = match entity {
        Entity::Cell => d,
        Entity::Face => d - 1,
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let total = n1.pow(dims as u32);
    for flat in 0..total {
        let mut p = [0.0f64; 3];
        let mut wt = 1.0;
        let mut rem = flat;
        for a in 0..dims {
            let i = rem % n1;
            rem /= n1;
            p[a] = x[i];
            wt *= w[i];
        }
        points.push(p);
        weights.push(wt);
    }
    QuadratureRule { points, weights }
}

/// Nodal tensor-product basis of degree k on `[0,1]^d`.
#[derive(Clone, Debug)]
pub struct Basis {
    pub degree: usize,
    pub dim: usize,
    /// 1-D Gauss-Lobatto nodes, k+1 of them.
    pub nodes_1d: Vec<f64>,
}

impl Basis {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&k) {
            return Err(invalid(format!(
                "basis degree must be in 1..={MAX_DEGREE}, got {k}"
            )));
        }
        if d != 2 && d != 3 {
            return Err(invalid(format!("basis dim must be 2 or 3, got {d}")));
        }
        Ok(Self {
            degree: k,
            dim: d,
            nodes_1d: gauss_lobatto(k + 1),
        })
    }

    /// Number of scalar basis functions, (k+1)^d.
    pub fn n_scalar(&self) -> usize {
        (self.degree + 1).pow(self.dim as u32)
    }

    /// Per-axis node indices of scalar basis function i.
    pub fn unpack(&self, i: usize) -> [usize; 3] {
        let n1 = self.degree + 1;
        let i0 = i % n1;
        let rest = i / n1;
        let i1 = rest % n1;
        let i2 = rest / n1;
        [i0, i1, i2]
    }

    /// 1-D Lagrange polynomial value, product form (exact at nodes).
    fn lagrange_1d(&self, i: usize, x: f64) -> f64 {
        let xs = &self.nodes_1d;
        let mut v = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if j != i {
                v *= (x - xj) / (xs[i] - xj);
            }
        }
        v
    }

    /// 1-D Lagrange polynomial derivative, product form.
    fn lagrange_1d_deriv(&self, i: usize, x: f64) -> f64 {
        let xs = &self.nodes_1d;
        let mut sum = 0.0;
        for m in 0..xs.len() {
            if m == i {
                continue;
            }
            let mut term = 1.0 / (xs[i] - xs[m]);
            for (j, &xj) in xs.iter().enumerate() {
                if j != i && j != m {
                    term *= (x - xj) / (xs[i] - xj);
                }
            }
            sum += term;
        }
        sum
    }

    /// Value of scalar basis function i at a reference point.
    pub fn eval(&self, i: usize, x: &[f64; 3]) -> f64 {
        let idx = self.unpack(i);
        let mut v = self.lagrange_1d(idx[0], x[0]) * self.lagrange_1d(idx[1], x[1]);
        if self.dim == 3 {
            v *= self.lagrange_1d(idx[2], x[2]);
        }
        v
    }

    /// Reference gradient of scalar basis function i at a reference point
    /// (third component zero in 2D).
    pub fn eval_grad(&self, i: usize, x: &[f64; 3]) -> [f64; 3] {
        let idx = self.unpack(i);
        let l: Vec<f64> = (0..self.dim)
            .map(|a| self.lagrange_1d(idx[a], x[a]))
            .collect();
        let dl: Vec<f64> = (0..self.dim)
            .map(|a| self.lagrange_1d_deriv(idx[a], x[a]))
            .collect();
        let mut g = [0.0f64; 3];
        for a in 0..self.dim {
            let mut v = dl[a];
            for b in 0..self.dim {
                if b != a {
                    v *= l[b];
                }
            }
            g[a] = v;
        }
        g
    }
}
