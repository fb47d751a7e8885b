//! Material data: mass density, Lame parameters, and the isotropic
//! stiffness/compliance pair
//!
//!   D tau = 2 mu tau + lambda tr(tau) I,
//!   A sigma = (1/2mu) (sigma - lambda/(d lambda + 2 mu) tr(sigma) I).
//!
//! The compliance uses the dimension-consistent denominator d*lambda + 2*mu
//! so that A = D^{-1} holds in both 2D and 3D (with the 3D denominator the
//! pair would not invert each other in 2D).

use crate::error::invalid;
use crate::field::SymTensor;
use crate::mesh::Mesh;
use crate::Result;

/// Piecewise-constant material coefficients, one triple per element.
#[derive(Clone, Debug)]
pub struct MaterialField {
    pub rho: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    dim: usize,
}

impl MaterialField {
    /// Homogeneous material on every element.
    pub fn uniform(mesh: &Mesh, rho: f64, lambda: f64, mu: f64) -> Result<Self> {
        Self::from_tables(
            mesh,
            vec![rho; mesh.n_elems()],
            vec![lambda; mesh.n_elems()],
            vec![mu; mesh.n_elems()],
        )
    }

    /// Per-element tables; all three must cover every element with strictly
    /// positive values.
    pub fn from_tables(mesh: &Mesh, rho: Vec<f64>, lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let n = mesh.n_elems();
        if rho.len() != n || lambda.len() != n || mu.len() != n {
            return Err(invalid(format!(
                "material tables must have one entry per element ({n})"
            )));
        }
        for e in 0..n {
            if !(rho[e] > 0.0 && lambda[e] > 0.0 && mu[e] > 0.0) {
                return Err(invalid(format!(
                    "material must be strictly positive, element {e}: rho={} lambda={} mu={}",
                    rho[e], lambda[e], mu[e]
                )));
            }
        }
        Ok(Self {
            rho,
            lambda,
            mu,
            dim: mesh.dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest stiffness eigenvalue d*lambda + 2*mu of one element; the
    /// scalar stand-in for D in penalty weights.
    pub fn stiffness_scale(&self, e: usize) -> f64 {
        self.dim as f64 * self.lambda[e] + 2.0 * self.mu[e]
    }

    /// Face weight {D}: mean of the adjacent element scales, one-sided on
    /// boundary faces.
    pub fn face_scale(&self, mesh: &Mesh, face_id: usize) -> f64 {
        let f = &mesh.faces[face_id];
        match f.minus {
            Some(m) => 0.5 * (self.stiffness_scale(f.plus) + self.stiffness_scale(m)),
            None => self.stiffness_scale(f.plus),
        }
    }

    /// P-wave speed of one element.
    pub fn wave_speed(&self, e: usize) -> f64 {
        wave_speed(self.lambda[e], self.mu[e], self.rho[e])
    }

    pub fn apply_stiffness_at(&self, e: usize, tau: &SymTensor) -> SymTensor {
        apply_stiffness(tau, self.lambda[e], self.mu[e], self.dim)
    }

    pub fn apply_compliance_at(&self, e: usize, sigma: &SymTensor) -> SymTensor {
        apply_compliance(sigma, self.lambda[e], self.mu[e], self.dim)
    }
}

/// Hooke stiffness: D tau = 2 mu tau + lambda tr(tau) I (I of dimension d,
/// so the padded zz entry stays zero in 2D).
pub fn apply_stiffness(tau: &SymTensor, lambda: f64, mu: f64, d: usize) -> SymTensor {
    let tr = tau.trace();
    let mut out = tau.scale(2.0 * mu);
    out.c[0] += lambda * tr;
    out.c[1] += lambda * tr;
    if d == 3 {
        out.c[2] += lambda * tr;
    }
    out
}

/// P-wave speed sqrt((lambda + 2 mu)/rho).
pub fn wave_speed(lambda: f64, mu: f64, rho: f64) -> f64 {
    ((lambda + 2.0 * mu) / rho).sqrt()
}

/// Compliance A = D^{-1}: A sigma = (sigma - lambda/(d lambda + 2 mu) tr(sigma) I) / (2 mu).
pub fn apply_compliance(sigma: &SymTensor, lambda: f64, mu: f64, d: usize) -> SymTensor {
    let factor = lambda / (d as f64 * lambda + 2.0 * mu);
    let tr = sigma.trace();
    let mut out = *sigma;
    out.c[0] -= factor * tr;
    out.c[1] -= factor * tr;
    if d == 3 {
        out.c[2] -= factor * tr;
    }
    out.scale(1.0 / (2.0 * mu))
}
