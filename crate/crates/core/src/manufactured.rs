//! Manufactured solutions and run problems.
//!
//! The solution family is, with s(t) = sin(3 pi t),
//!
//! ```text
//! 3D: u = s(t) * ( -sin^2(pi x) sin(2 pi y) sin(2 pi z),
//!                   sin(2 pi x) sin^2(pi y) sin(2 pi z),
//!                   sin(2 pi x) sin(2 pi y) sin^2(pi z) )
//! 2D: u = s(t) * ( -sin^2(pi x) sin(2 pi y),
//!                   sin(2 pi x) sin^2(pi y) )
//! ```
//!
//! Every component vanishes on the boundary of the unit box for all t, and
//! u(., 0) = 0. The body force f = rho u_tt - div(2 mu eps + lambda tr(eps) I)
//! is hand-differentiated below (constant coefficients) and cross-checked
//! against a high-order finite-difference oracle in the tests; note the 2D
//! pattern is divergence free, so lambda drops out of f there.
//!
//! The free-oscillation problems reuse the spatial pattern as initial
//! velocity u_1 = u_t(., 0) with u_0 = 0 and no forcing; they have no
//! closed-form trajectory and are used for the conservation experiments.

use crate::error::invalid;
use crate::field::SymTensor;
use crate::material::apply_stiffness;
use crate::Result;
use std::f64::consts::PI;

/// Temporal angular frequency of the family, 3 pi.
pub const OMEGA: f64 = 3.0 * PI;

/// Closed-form solution of the elastodynamics system on the unit box.
#[derive(Clone, Copy, Debug)]
pub struct ExactSolution {
    pub dim: usize,
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ExactSolution {
    pub fn new(dim: usize, rho: f64, lambda: f64, mu: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid("exact solution defined for dim 2 or 3"));
        }
        Ok(Self {
            dim,
            rho,
            lambda,
            mu,
        })
    }

    /// Spatial pattern (the displacement at s(t) = 1).
    fn pattern(&self, x: &[f64; 3]) -> [f64; 3] {
        let sx = (PI * x[0]).sin();
        let sy = (PI * x[1]).sin();
        let s2x = (2.0 * PI * x[0]).sin();
        let s2y = (2.0 * PI * x[1]).sin();
        if self.dim == 2 {
            [-sx * sx * s2y, s2x * sy * sy, 0.0]
        } else {
            let sz = (PI * x[2]).sin();
            let s2z = (2.0 * PI * x[2]).sin();
            [
                -sx * sx * s2y * s2z,
                s2x * sy * sy * s2z,
                s2x * s2y * sz * sz,
            ]
        }
    }

    pub fn displacement(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let s = (OMEGA * t).sin();
        let p = self.pattern(x);
        [s * p[0], s * p[1], s * p[2]]
    }

    pub fn velocity(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let ds = OMEGA * (OMEGA * t).cos();
        let p = self.pattern(x);
        [ds * p[0], ds * p[1], ds * p[2]]
    }

    /// (u, u_t) at one point.
    pub fn eval(&self, x: &[f64; 3], t: f64) -> ([f64; 3], [f64; 3]) {
        (self.displacement(x, t), self.velocity(x, t))
    }

    /// Linearized strain eps(u).
    pub fn strain(&self, x: &[f64; 3], t: f64) -> SymTensor {
        let s = (OMEGA * t).sin();
        let sx = (PI * x[0]).sin();
        let sy = (PI * x[1]).sin();
        let s2x = (2.0 * PI * x[0]).sin();
        let s2y = (2.0 * PI * x[1]).sin();
        let c2x = (2.0 * PI * x[0]).cos();
        let c2y = (2.0 * PI * x[1]).cos();
        let mut eps = SymTensor::ZERO;
        if self.dim == 2 {
            eps.c[0] = -s * PI * s2x * s2y;
            eps.c[1] = s * PI * s2x * s2y;
            eps.c[3] = s * PI * (c2x * sy * sy - sx * sx * c2y);
        } else {
            let sz = (PI * x[2]).sin();
            let s2z = (2.0 * PI * x[2]).sin();
            let c2z = (2.0 * PI * x[2]).cos();
            eps.c[0] = -s * PI * s2x * s2y * s2z;
            eps.c[1] = s * PI * s2x * s2y * s2z;
            eps.c[2] = s * PI * s2x * s2y * s2z;
            eps.c[3] = s * PI * s2z * (c2x * sy * sy - sx * sx * c2y);
            eps.c[4] = s * PI * s2y * (c2x * sz * sz - sx * sx * c2z);
            eps.c[5] = s * PI * s2x * (sy * sy * c2z + c2y * sz * sz);
        }
        eps
    }

    /// Cauchy stress sigma = D eps(u).
    pub fn stress(&self, x: &[f64; 3], t: f64) -> SymTensor {
        apply_stiffness(&self.strain(x, t), self.lambda, self.mu, self.dim)
    }

    /// Boundary traction sigma(x, t) n.
    pub fn traction(&self, x: &[f64; 3], n: &[f64; 3], t: f64) -> [f64; 3] {
        self.stress(x, t).mul_vec(n)
    }

    /// Body force f = rho u_tt - div sigma, hand-differentiated.
    pub fn forcing(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let s = (OMEGA * t).sin();
        let pi2 = PI * PI;
        let (rho, lambda, mu) = (self.rho, self.lambda, self.mu);
        let sx2 = (PI * x[0]).sin().powi(2);
        let sy2 = (PI * x[1]).sin().powi(2);
        let s2x = (2.0 * PI * x[0]).sin();
        let s2y = (2.0 * PI * x[1]).sin();
        let c2x = (2.0 * PI * x[0]).cos();
        let c2y = (2.0 * PI * x[1]).cos();
        if self.dim == 2 {
            // 2D: tr(eps) = 0, so lambda does not appear
            let f1 = s * pi2 * s2y * (9.0 * rho * sx2 - 2.0 * mu * (1.0 - 2.0 * c2x));
            let f2 = -s * pi2 * s2x * (9.0 * rho * sy2 - 2.0 * mu * (1.0 - 2.0 * c2y));
            [f1, f2, 0.0]
        } else {
            let sz2 = (PI * x[2]).sin().powi(2);
            let s2z = (2.0 * PI * x[2]).sin();
            let c2z = (2.0 * PI * x[2]).cos();
            let f1 = s * pi2 * s2y * s2z * ((9.0 * rho - 8.0 * mu) * sx2 - 2.0 * lambda * c2x);
            let f2 = -s
                * pi2
                * s2x
                * s2z
                * (9.0 * rho * sy2 + 4.0 * mu * (2.0 * c2y - 1.0) + 2.0 * lambda * c2y);
            let f3 = -s
                * pi2
                * s2x
                * s2y
                * (9.0 * rho * sz2 + 4.0 * mu * (2.0 * c2z - 1.0) + 2.0 * lambda * c2z);
            [f1, f2, f3]
        }
    }
}

/// A runnable problem: initial data, loads, and (if available) the exact
/// solution for error measurement.
#[derive(Clone, Debug)]
pub enum Problem {
    /// Zero data everywhere; the trajectory is identically zero.
    Zero { dim: usize },
    /// Forced problem with the closed-form solution above.
    Manufactured(ExactSolution),
    /// u_0 = 0, u_1 = velocity of the family at t = 0, no loads. Used for
    /// the conservation experiments; no closed-form trajectory.
    FreeOscillation(ExactSolution),
}

impl Problem {
    /// Look up a problem by its registered name.
    pub fn from_name(name: &str, rho: f64, lambda: f64, mu: f64) -> Result<Problem> {
        match name {
            "paper2d" => Ok(Problem::Manufactured(ExactSolution::new(
                2, rho, lambda, mu,
            )?)),
            "paper3d" => Ok(Problem::Manufactured(ExactSolution::new(
                3, rho, lambda, mu,
            )?)),
            "conservation2d" => Ok(Problem::FreeOscillation(ExactSolution::new(
                2, rho, lambda, mu,
            )?)),
            "conservation3d" => Ok(Problem::FreeOscillation(ExactSolution::new(
                3, rho, lambda, mu,
            )?)),
            "zero2d" => Ok(Problem::Zero { dim: 2 }),
            "zero3d" => Ok(Problem::Zero { dim: 3 }),
            _ => Err(invalid(format!(
                "unknown problem '{name}' (expected paper2d, paper3d, conservation2d, \
                 conservation3d, zero2d, zero3d)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Zero { dim } => *dim,
            Problem::Manufactured(s) | Problem::FreeOscillation(s) => s.dim,
        }
    }

    pub fn initial_displacement(&self, x: &[f64; 3]) -> [f64; 3] {
        match self {
            Problem::Manufactured(s) => s.displacement(x, 0.0),
            _ => [0.0; 3],
        }
    }

    pub fn initial_velocity(&self, x: &[f64; 3]) -> [f64; 3] {
        match self {
            Problem::Zero { .. } => [0.0; 3],
            Problem::Manufactured(s) | Problem::FreeOscillation(s) => s.velocity(x, 0.0),
        }
    }

    pub fn body_force(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        match self {
            Problem::Manufactured(s) => s.forcing(x, t),
            _ => [0.0; 3],
        }
    }

    /// Neumann traction; zero except for the manufactured problem, where it
    /// is the exact traction (so mixed boundary conditions stay consistent).
    pub fn traction(&self, x: &[f64; 3], n: &[f64; 3], t: f64) -> [f64; 3] {
        match self {
            Problem::Manufactured(s) => s.traction(x, n, t),
            _ => [0.0; 3],
        }
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        match self {
            Problem::Manufactured(s) => Some(s),
            _ => None,
        }
    }

    pub fn has_loads(&self) -> bool {
        matches!(self, Problem::Manufactured(_))
    }
}
