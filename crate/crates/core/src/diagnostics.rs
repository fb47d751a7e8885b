//! Energy norms, error norms against exact solutions, and convergence-rate
//! tables.
//!
//! Norms implemented (all reported as the square root of the assembled
//! quadratic form):
//!
//! * IP energy norm: `||rho^1/2 u_t||^2 + ||D^1/2 eps(u)||^2 +
//!   ||S_F^1/2 [[u]]||^2` over interior and Dirichlet faces;
//! * the A-norm: `||D^1/2 eps(u)||^2 + sum_F h_F^{-1} {D} ||[[u]]||^2`;
//! * the augmented IP error norm, which adds `||h_F^1/2 {D eps(.)}_delta||^2`
//!   (the quantity the a-priori estimates control);
//! * the displacement-stress (MDG) energy and its augmented variant live in
//!   [`crate::mixed`], next to the flux parameters they depend on.
//!
//! Errors against an exact solution evaluate the exact fields pointwise at
//! the quadrature nodes; the exact solution is never interpolated.

use crate::error::invalid;
use crate::field::{DGVector, SymTensor};
use crate::manufactured::ExactSolution;
use crate::material::MaterialField;
use crate::mesh::{FaceKind, Mesh};
use crate::tables::ElementTables;
use crate::trace::{self, Weight};
use crate::Result;

/// Penalty weight S_F = c0 h_F^{-1} k^2 {D} of one face (interior or
/// Dirichlet; the penalty is undefined on Neumann faces).
pub fn penalty_value(
    mesh: &Mesh,
    material: &MaterialField,
    face_id: usize,
    k: usize,
    c0: f64,
) -> Result<f64> {
    let face = &mesh.faces[face_id];
    if face.kind == FaceKind::Neumann {
        return Err(invalid(format!(
            "penalty undefined on Neumann face {face_id}"
        )));
    }
    Ok(c0 * (k * k) as f64 * material.face_scale(mesh, face_id) / face.h_f)
}

/// ||rho^1/2 v||^2 over the broken elements.
pub fn weighted_l2_sq(
    tables: &ElementTables,
    mesh: &Mesh,
    material: &MaterialField,
    v: &DGVector,
) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.n_elems() {
        let vals = tables.vector_at_volume(v, e);
        let rho = material.rho[e];
        for (q, val) in vals.iter().enumerate() {
            let w = tables.vol_weights[q];
            total += w * rho * (val[0] * val[0] + val[1] * val[1] + val[2] * val[2]);
        }
    }
    total
}

/// ||D^1/2 eps(u)||^2 over the broken elements.
pub fn strain_energy_sq(
    tables: &ElementTables,
    mesh: &Mesh,
    material: &MaterialField,
    u: &DGVector,
) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.n_elems() {
        let eps = tables.strain_at_volume(u, e);
        for (q, t) in eps.iter().enumerate() {
            total += tables.vol_weights[q] * material.apply_stiffness_at(e, t).dot(t);
        }
    }
    total
}

/// `||S_F^1/2 [[u]]||^2` over interior and Dirichlet faces.
pub fn penalty_jump_sq(
    tables: &ElementTables,
    mesh: &Mesh,
    material: &MaterialField,
    u: &DGVector,
    k: usize,
    c0: f64,
) -> f64 {
    let mut total = 0.0;
    for face in &mesh.faces {
        if face.kind == FaceKind::Neumann {
            continue;
        }
        let s_f = c0 * (k * k) as f64 * material.face_scale(mesh, face.id) / face.h_f;
        let traces = trace::gather_vector_traces(tables, mesh, u, face);
        let jumps = trace::jump_vector(&traces, face);
        let w = &tables.face_weights[face.axis];
        for (q, j) in jumps.iter().enumerate() {
            total += w[q] * s_f * j.dot(j);
        }
    }
    total
}

/// IP energy norm of (u, u_t).
pub fn energy_norm_ip(
    tables: &ElementTables,
    mesh: &Mesh,
    material: &MaterialField,
    u: &DGVector,
    u_t: &DGVector,
    k: usize,
    c0: f64,
) -> f64 {
    (weighted_l2_sq(tables, mesh, material, u_t)
        + strain_energy_sq(tables, mesh, material, u)
        + penalty_jump_sq(tables, mesh, material, u, k, c0))
    .sqrt()
}

/// The A-norm: strain energy plus the {D}-weighted h^{-1} jump seminorm.
pub fn norm_a(tables: &ElementTables, mesh: &Mesh, material: &MaterialField, u: &DGVector) -> f64 {
    let mut total = strain_energy_sq(tables, mesh, material, u);
    for face in &mesh.faces {
        if face.kind == FaceKind::Neumann {
            continue;
        }
        let wgt = material.face_scale(mesh, face.id) / face.h_f;
        let traces = trace::gather_vector_traces(tables, mesh, u, face);
        let jumps = trace::jump_vector(&traces, face);
        let w = &tables.face_weights[face.axis];
        for (q, j) in jumps.iter().enumerate() {
            total += w[q] * wgt * j.dot(j);
        }
    }
    total.sqrt()
}

/// Which norm `error_vs_exact` measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorNorm {
    /// Plain L2 norm of the displacement error.
    L2,
    /// IP energy norm of the error pair (u - u^h, u_t - v^h).
    EnergyIp,
    /// IP energy norm augmented with ||h_F^1/2 {D eps(e)}_delta||^2, the
    /// norm controlled by the a-priori estimate.
    EnergyIpAugmented,
}

/// Error of a discrete pair (u^h, v^h) against the exact solution at time t.
///
/// `delta` weights the average in the augmented term; `c0` scales the
/// penalty part of the energy norm.
#[allow(clippy::too_many_arguments)]
pub fn error_vs_exact(
    tables: &ElementTables,
    mesh: &Mesh,
    material: &MaterialField,
    u_h: &DGVector,
    v_h: &DGVector,
    exact: &ExactSolution,
    t: f64,
    norm: ErrorNorm,
    delta: Weight,
    c0: f64,
) -> f64 {
    let k = tables.basis.degree;
    let mut total = 0.0;

    // volume terms: exact fields evaluated pointwise at the quadrature nodes
    for e in 0..mesh.n_elems() {
        let u_vals = tables.vector_at_volume(u_h, e);
        let v_vals = tables.vector_at_volume(v_h, e);
        let eps_vals = tables.strain_at_volume(u_h, e);
        for (q, pt) in tables.vol_rule.points.iter().enumerate() {
            let x = mesh.map_to_physical(e, pt);
            let w = tables.vol_weights[q];
            let (ue, ve) = exact.eval(&x, t);
            let du = [
                ue[0] - u_vals[q][0],
                ue[1] - u_vals[q][1],
                ue[2] - u_vals[q][2],
            ];
            match norm {
                ErrorNorm::L2 => {
                    total += w * (du[0] * du[0] + du[1] * du[1] + du[2] * du[2]);
                }
                ErrorNorm::EnergyIp | ErrorNorm::EnergyIpAugmented => {
                    let dv = [
                        ve[0] - v_vals[q][0],
                        ve[1] - v_vals[q][1],
                        ve[2] - v_vals[q][2],
                    ];
                    total += w * material.rho[e] * (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]);
                    let de = exact.strain(&x, t).sub(&eps_vals[q]);
                    total += w * material.apply_stiffness_at(e, &de).dot(&de);
                }
            }
        }
    }
    if norm == ErrorNorm::L2 {
        return total.sqrt();
    }

    // face terms; the exact solution is continuous with [[u]] = 0 on
    // interior faces and u = 0 on the Dirichlet boundary, so the error jump
    // reduces to the discrete jump on interior faces but keeps the exact
    // trace on Dirichlet faces (where u^h does not vanish exactly)
    for face in &mesh.faces {
        if face.kind == FaceKind::Neumann {
            continue;
        }
        let s_f = c0 * (k * k) as f64 * material.face_scale(mesh, face.id) / face.h_f;
        let wq = &tables.face_weights[face.axis];
        let u_traces = trace::gather_vector_traces(tables, mesh, u_h, face);
        let strain_traces = trace::gather_strain_traces(tables, u_h, face);
        let side = face.local_side(face.plus);
        for q in 0..tables.face_rule.len() {
            let xref = tables.face_ref_point(face.axis, side, q);
            let x = mesh.map_to_physical(face.plus, &xref);
            let ue = exact.displacement(&x, t);
            let eps_e = exact.strain(&x, t);

            // jump of the error
            let jump = match &u_traces.minus {
                Some(minus) => {
                    // exact u is continuous: its jump vanishes
                    trace::jump_vector_point(&u_traces.plus[q], &minus[q], &face.normal).scale(-1.0)
                }
                None => {
                    let diff = [
                        ue[0] - u_traces.plus[q][0],
                        ue[1] - u_traces.plus[q][1],
                        ue[2] - u_traces.plus[q][2],
                    ];
                    SymTensor::sym_outer(&diff, &face.normal)
                }
            };
            total += wq[q] * s_f * jump.dot(&jump);

            if norm == ErrorNorm::EnergyIpAugmented {
                // {D eps(e)}_delta: exact stress minus the weighted average
                // of the discrete stress traces
                let d = delta.value();
                let avg_disc = match &strain_traces.minus {
                    Some(minus) => {
                        let plus = material.apply_stiffness_at(face.plus, &strain_traces.plus[q]);
                        let mn = material.apply_stiffness_at(face.minus.unwrap(), &minus[q]);
                        plus.lin(d, &mn, 1.0 - d)
                    }
                    None => material.apply_stiffness_at(face.plus, &strain_traces.plus[q]),
                };
                let sig_e = crate::material::apply_stiffness(
                    &eps_e,
                    material.lambda[face.plus],
                    material.mu[face.plus],
                    mesh.dim,
                );
                let davg = sig_e.sub(&avg_disc);
                total += wq[q] * face.h_f * davg.dot(&davg);
            }
        }
    }
    total.sqrt()
}

/// One row of a convergence table.
#[derive(Clone, Debug)]
pub struct RateRow {
    pub h: f64,
    pub error: f64,
    /// log2(e_{i-1} / e_i) against the previous (coarser) level.
    pub rate: Option<f64>,
}

/// Convergence table for one (degree, method) pair.
#[derive(Clone, Debug)]
pub struct RateTable {
    pub degree: usize,
    pub method: String,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of log e against log h.
    pub regression_rate: Option<f64>,
}

/// Build a rate table from (h, error) pairs with h halving between levels.
pub fn convergence_rates(degree: usize, method: &str, data: &[(f64, f64)]) -> Result<RateTable> {
    if data.len() < 2 {
        // a single level is allowed: errors without rates
        let rows = data
            .iter()
            .map(|&(h, e)| RateRow {
                h,
                error: e,
                rate: None,
            })
            .collect();
        return Ok(RateTable {
            degree,
            method: method.to_string(),
            rows,
            regression_rate: None,
        });
    }
    for pair in data.windows(2) {
        let (h0, h1) = (pair[0].0, pair[1].0);
        if !(h1 < h0) {
            return Err(invalid(format!(
                "mesh sizes must decrease, got {h0} then {h1}"
            )));
        }
        if (h0 / h1 - 2.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "mesh sizes must halve between levels, got {h0} then {h1}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(data.len());
    for (i, &(h, e)) in data.iter().enumerate() {
        let rate = if i > 0 {
            Some((data[i - 1].1 / e).log2())
        } else {
            None
        };
        rows.push(RateRow { h, error: e, rate });
    }
    // least-squares slope of log e vs log h
    let xs: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Ok(RateTable {
        degree,
        method: method.to_string(),
        rows,
        regression_rate: Some(sxy / sxx),
    })
}

impl RateTable {
    /// CSV with a versioned header comment; one row per level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# elastodg rate table v1\nk,method,h,error,rate\n");
        for row in &self.rows {
            let rate = row.rate.map(|r| format!("{r:.4}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.6e},{:.12e},{}\n",
                self.degree, self.method, row.h, row.error, rate
            ));
        }
        if let Some(r) = self.regression_rate {
            out.push_str(&format!("# regression_rate,{r:.4}\n"));
        }
        out
    }

    /// Human-readable fixed-width table.
    pub fn to_text(&self) -> String {
        let mut out = format!("k = {}, method = {}\n", self.degree, self.method);
        out.push_str("        h            error      rate\n");
        for row in &self.rows {
            let rate = row
                .rate
                .map(|r| format!("{r:8.4}"))
                .unwrap_or_else(|| "       -".into());
            out.push_str(&format!("{:12.6e} {:14.6e} {}\n", row.h, row.error, rate));
        }
        if let Some(r) = self.regression_rate {
            out.push_str(&format!("regression slope: {r:.4}\n"));
        }
        out
    }
}

/// Time series of a discrete energy and its ratio to the initial value.
#[derive(Clone, Debug, Default)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
}

#[derive(Clone, Copy, Debug)]
pub struct EnergyRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// energy / energy(0); defined as 0 when the initial energy vanishes.
    pub ratio: f64,
    /// Error in the selected norm when an exact solution is available.
    pub error: Option<f64>,
}

impl EnergyReport {
    pub fn push(&mut self, step: usize, t: f64, energy: f64, error: Option<f64>) {
        let e0 = self.rows.first().map(|r| r.energy).unwrap_or(energy);
        let ratio = if self.rows.is_empty() {
            if energy > 0.0 {
                1.0
            } else {
                0.0
            }
        } else if e0 > 0.0 {
            energy / e0
        } else {
            0.0
        };
        self.rows.push(EnergyRow {
            step,
            t,
            energy,
            ratio,
            error,
        });
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// Largest |ratio - 1| over the series (0 for an empty/zero series).
    pub fn max_drift(&self) -> f64 {
        if self.rows.first().map(|r| r.energy > 0.0) != Some(true) {
            return 0.0;
        }
        self.rows
            .iter()
            .map(|r| (r.ratio - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_error(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.error)
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.max(e))))
    }

    /// CSV per the energy-report schema: step, t, energy, ratio.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# elastodg energy report v1\nstep,t,energy,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.9e},{:.12e},{:.12e}\n",
                r.step, r.t, r.energy, r.ratio
            ));
        }
        out
    }

    /// CSV per the trajectory schema: step, t, energy, error, ratio (error
    /// blank when no exact solution was given).
    pub fn to_trajectory_csv(&self) -> String {
        let mut out = String::from(
            "# elastodg trajectory v1\nstep,t,energy_norm,error_energy,energy_ratio\n",
        );
        for r in &self.rows {
            let err = r.error.map(|e| format!("{e:.12e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.9e},{:.12e},{},{:.12e}\n",
                r.step, r.t, r.energy, err, r.ratio
            ));
        }
        out
    }
}
