//! Interior-penalty discretizations of the displacement formulation.
//!
//! The bilinear form assembled here is
//!
//! ```text
//! a(w, v) = (D eps(w), eps(v))
//!         - <{D eps(w)}_delta, [[v]]>              (interior + Dirichlet faces)
//!         + theta <[[w]], {D eps(v)}_delta>        (same face set)
//!         + <S_F [[w]], [[v]]>,   S_F = c0 h_F^{-1} k^2 {D},
//! ```
//!
//! with theta = -1 the symmetric (SIP) scheme, theta = 0 incomplete (IIP)
//! and theta = +1 non-symmetric (NIP). The weight delta is free for SIP;
//! NIP/IIP are restricted to delta = 1/2 (their flux derivation fixes it),
//! and both carry a stability caveat: the energy analysis only covers the
//! symmetric scheme.
//!
//! An optional velocity-jump damping operator C, `<d_F [[u_t]], [[v]]>` with
//! d_F = c_f h_F^{-1} k^2 {D}, can be assembled alongside; c_f = 0 disables
//! it. It penalizes the time derivative of the displacement and is kept
//! solely to reproduce its effect on the explicit time-step restriction.

use crate::diagnostics;
use crate::error::invalid;
use crate::field::{DGVector, SymTensor};
use crate::material::MaterialField;
use crate::mesh::{FaceKind, Mesh};
use crate::rng::SplitMix64;
use crate::tables::{ElementTables, MassOperator};
use crate::Result;
use std::io::Write;

/// Parameters of an interior-penalty scheme.
#[derive(Clone, Copy, Debug)]
pub struct IpConfig {
    /// Transpose-term sign: -1 (SIP), 0 (IIP), +1 (NIP).
    pub theta: i32,
    /// Average weight, in `[0, 1]`; must be 1/2 unless theta = -1.
    pub delta: f64,
    /// Penalty constant, > 0.
    pub c0: f64,
    /// Velocity-jump damping constant, >= 0 (0 disables the damping term).
    pub c_f: f64,
}

impl Default for IpConfig {
    fn default() -> Self {
        Self {
            theta: -1,
            delta: 0.5,
            c0: 10.0,
            c_f: 0.0,
        }
    }
}

impl IpConfig {
    pub fn validate(&self) -> Result<()> {
        if ![-1, 0, 1].contains(&self.theta) {
            return Err(invalid(format!(
                "theta must be -1, 0 or 1, got {}",
                self.theta
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid(format!(
                "delta must lie in [0,1], got {}",
                self.delta
            )));
        }
        if self.theta != -1 && (self.delta - 0.5).abs() > 1e-14 {
            return Err(invalid(
                "weighted averages (delta != 1/2) are only supported with theta = -1",
            ));
        }
        if !(self.c0 > 0.0) {
            return Err(invalid(format!(
                "penalty constant c0 must be > 0, got {}",
                self.c0
            )));
        }
        if self.c_f < 0.0 {
            return Err(invalid(format!(
                "damping constant c_f must be >= 0, got {}",
                self.c_f
            )));
        }
        Ok(())
    }

    /// Stability caveats worth surfacing to the user.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.theta != -1 {
            w.push(format!(
                "theta = {} ({}) is outside the analyzed stability theory; only the \
                 symmetric scheme (theta = -1) carries an energy bound",
                self.theta,
                if self.theta == 0 { "IIP" } else { "NIP" }
            ));
        }
        w
    }
}

/// Sparse block matrix over element pairs. Blocks are dense nb x nb with
/// nb = d * (k+1)^d, stored row major; the column layout per row is the
/// element itself plus its face neighbors, sorted.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub nb: usize,
    pub n_rows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    blocks: Vec<f64>,
}

impl BlockMatrix {
    /// Empty matrix with the face-adjacency sparsity of the mesh.
    pub fn with_mesh_layout(mesh: &Mesh, nb: usize) -> Self {
        let n = mesh.n_elems();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for e in 0..n {
            let mut cols = mesh.neighbors(e);
            cols.push(e);
            cols.sort_unstable();
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        let blocks = vec![0.0; col_idx.len() * nb * nb];
        Self {
            nb,
            n_rows: n,
            row_ptr,
            col_idx,
            blocks,
        }
    }

    /// Mutable dense block coupling test element `row` to trial element `col`.
    pub fn block_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        let pos = self.col_idx[lo..hi]
            .binary_search(&col)
            .expect("block outside mesh adjacency");
        let at = (lo + pos) * self.nb * self.nb;
        &mut self.blocks[at..at + self.nb * self.nb]
    }

    /// y = A x.
    pub fn matvec(&self, x: &DGVector, y: &mut DGVector) {
        let nb = self.nb;
        y.fill(0.0);
        for row in 0..self.n_rows {
            let yr = y.elem_mut(row);
            for bi in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[bi];
                let xc = x.elem(col);
                let block = &self.blocks[bi * nb * nb..(bi + 1) * nb * nb];
                for i in 0..nb {
                    let brow = &block[i * nb..(i + 1) * nb];
                    let mut acc = 0.0;
                    for (a, b) in brow.iter().zip(xc) {
                        acc += a * b;
                    }
                    yr[i] += acc;
                }
            }
        }
    }

    /// Bilinear form value v^T A u.
    pub fn bilinear(&self, u: &DGVector, v: &DGVector) -> f64 {
        let mut au = DGVector::zeros_like(u);
        self.matvec(u, &mut au);
        au.dot(v)
    }

    /// Write the scalar triplets (row, col, value) of every stored entry.
    /// Global index = element * nb + local index. Intended for small meshes.
    pub fn write_coo(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let nb = self.nb;
        for row in 0..self.n_rows {
            for bi in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[bi];
                let block = &self.blocks[bi * nb * nb..(bi + 1) * nb * nb];
                for i in 0..nb {
                    for j in 0..nb {
                        writeln!(
                            out,
                            "{} {} {:.16e}",
                            row * nb + i,
                            col * nb + j,
                            block[i * nb + j]
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Assembled interior-penalty operator: stiffness A, optional damping C,
/// and the block-diagonal mass.
#[derive(Clone, Debug)]
pub struct IpOperator {
    pub cfg: IpConfig,
    pub stiffness: BlockMatrix,
    pub damping: Option<BlockMatrix>,
    pub mass: MassOperator,
}

use crate::tables::{basis_face_jumps, basis_strains};

pub use crate::diagnostics::penalty_value;

/// Assemble the interior-penalty operator.
pub fn assemble_ip(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: IpConfig,
) -> Result<IpOperator> {
    cfg.validate()?;
    let d = tables.dim;
    let n = tables.n_scalar();
    let nvec = d * n;
    let k = tables.basis.degree;
    let nq_vol = tables.vol_rule.len();
    let nq_face = tables.face_rule.len();

    let strain_vol = basis_strains(tables, &tables.grad_vol, nq_vol);
    let mut strain_face: crate::tables::PerAxisSide<Vec<SymTensor>> = Default::default();
    let mut jump_face: crate::tables::PerAxisSide<Vec<SymTensor>> = Default::default();
    for axis in 0..d {
        for side in 0..2 {
            strain_face[axis][side] = basis_strains(tables, &tables.grad_face[axis][side], nq_face);
            jump_face[axis][side] = basis_face_jumps(tables, axis, side);
        }
    }

    let mut a = BlockMatrix::with_mesh_layout(mesh, nvec);
    let mut c = (cfg.c_f > 0.0).then(|| BlockMatrix::with_mesh_layout(mesh, nvec));

    // volume term (D eps(w), eps(v)) on the element diagonal
    let mut d_strain = vec![SymTensor::ZERO; nvec];
    for e in 0..mesh.n_elems() {
        let block = a.block_mut(e, e);
        for q in 0..nq_vol {
            let w = tables.vol_weights[q];
            let row = &strain_vol[q * nvec..(q + 1) * nvec];
            for (j, s) in row.iter().enumerate() {
                d_strain[j] = material.apply_stiffness_at(e, s);
            }
            for i in 0..nvec {
                let ei = &row[i];
                let brow = &mut block[i * nvec..(i + 1) * nvec];
                for j in 0..nvec {
                    brow[j] += w * d_strain[j].dot(ei);
                }
            }
        }
    }

    // face terms over interior and Dirichlet faces
    for face in &mesh.faces {
        if face.kind == FaceKind::Neumann {
            continue;
        }
        let axis = face.axis;
        let s_f = cfg.c0 * (k * k) as f64 * material.face_scale(mesh, face.id) / face.h_f;
        let d_f = cfg.c_f * (k * k) as f64 * material.face_scale(mesh, face.id) / face.h_f;

        // (element, local side, jump sign, average weight)
        let sides: Vec<(usize, usize, f64, f64)> = match face.minus {
            Some(m) => vec![
                (face.plus, 1, 1.0, cfg.delta),
                (m, 0, -1.0, 1.0 - cfg.delta),
            ],
            None => vec![(
                face.plus,
                face.local_side(face.plus),
                face.normal[axis],
                1.0,
            )],
        };

        let wq = &tables.face_weights[axis];
        let mut d_trial = vec![SymTensor::ZERO; nvec];
        for &(e_test, ls_test, sg_test, w_test) in &sides {
            for &(e_trial, ls_trial, sg_trial, w_trial) in &sides {
                let jumps_test = &jump_face[axis][ls_test];
                let jumps_trial = &jump_face[axis][ls_trial];
                let strains_test = &strain_face[axis][ls_test];
                let strains_trial = &strain_face[axis][ls_trial];
                let block = a.block_mut(e_test, e_trial);
                for q in 0..nq_face {
                    let w = wq[q];
                    let jt = &jumps_test[q * nvec..(q + 1) * nvec];
                    let jr = &jumps_trial[q * nvec..(q + 1) * nvec];
                    let st = &strains_test[q * nvec..(q + 1) * nvec];
                    let sr = &strains_trial[q * nvec..(q + 1) * nvec];
                    for (dj, s) in d_trial.iter_mut().zip(sr) {
                        *dj = material.apply_stiffness_at(e_trial, s);
                    }
                    let pen = s_f * sg_test * sg_trial;
                    // flux:      - w_trial * sg_test * (D_r eps_j) : (phi_i (.) n)
                    // transpose: + theta * w_test * sg_trial * (phi_j (.) n) : (D_s eps_i)
                    // penalty:   + S_F * sg_test * sg_trial * (phi_j (.) n) : (phi_i (.) n)
                    for i in 0..nvec {
                        let ji = &jt[i];
                        let di = material.apply_stiffness_at(e_test, &st[i]);
                        let brow = &mut block[i * nvec..(i + 1) * nvec];
                        for j in 0..nvec {
                            let mut v = -w_trial * sg_test * d_trial[j].dot(ji);
                            if cfg.theta != 0 {
                                v += cfg.theta as f64 * w_test * sg_trial * jr[j].dot(&di);
                            }
                            v += pen * jr[j].dot(ji);
                            brow[j] += w * v;
                        }
                    }
                }
                if let Some(cm) = c.as_mut() {
                    let block = cm.block_mut(e_test, e_trial);
                    for q in 0..nq_face {
                        let w = wq[q] * d_f * sg_test * sg_trial;
                        let jt = &jumps_test[q * nvec..(q + 1) * nvec];
                        let jr = &jumps_trial[q * nvec..(q + 1) * nvec];
                        for i in 0..nvec {
                            let ji = &jt[i];
                            let brow = &mut block[i * nvec..(i + 1) * nvec];
                            for j in 0..nvec {
                                brow[j] += w * jr[j].dot(ji);
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(IpOperator {
        cfg,
        stiffness: a,
        damping: c,
        mass: MassOperator::new(material),
    })
}

/// Load vector (f, v) + <g, v> over the Neumann boundary at time t.
pub fn assemble_ip_rhs(
    mesh: &Mesh,
    tables: &ElementTables,
    f: &dyn Fn(&[f64; 3], f64) -> [f64; 3],
    g: crate::mixed::TractionFn<'_>,
    t: f64,
) -> DGVector {
    let d = tables.dim;
    let n = tables.n_scalar();
    let mut rhs = DGVector::zeros(d, n, mesh.n_elems());

    for e in 0..mesh.n_elems() {
        let coeffs = rhs.elem_mut(e);
        for (q, pt) in tables.vol_rule.points.iter().enumerate() {
            let x = mesh.map_to_physical(e, pt);
            let fv = f(&x, t);
            let w = tables.vol_weights[q];
            for c in 0..d {
                if fv[c] == 0.0 {
                    continue;
                }
                let block = &mut coeffs[c * n..(c + 1) * n];
                for i in 0..n {
                    block[i] += w * fv[c] * tables.phi_vol[q * n + i];
                }
            }
        }
    }

    for face in &mesh.faces {
        if face.kind != FaceKind::Neumann {
            continue;
        }
        let e = face.plus;
        let side = face.local_side(e);
        let phis = &tables.phi_face[face.axis][side];
        let wq = &tables.face_weights[face.axis];
        let coeffs = rhs.elem_mut(e);
        for q in 0..tables.face_rule.len() {
            let xref = tables.face_ref_point(face.axis, side, q);
            let x = mesh.map_to_physical(e, &xref);
            let gv = g(&x, &face.normal, t);
            for c in 0..d {
                if gv[c] == 0.0 {
                    continue;
                }
                let block = &mut coeffs[c * n..(c + 1) * n];
                for i in 0..n {
                    block[i] += wq[q] * gv[c] * phis[q * n + i];
                }
            }
        }
    }
    rhs
}

/// Smallest sampled Rayleigh quotient a(v, v) / |||v|||_A^2 over random
/// coefficient vectors; positive values indicate the penalty is large
/// enough on this mesh. Requires the symmetric scheme.
pub fn coercivity_probe(
    op: &IpOperator,
    tables: &ElementTables,
    mesh: &Mesh,
    material: &MaterialField,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if op.cfg.theta != -1 {
        return Err(invalid(
            "coercivity probe requires the symmetric scheme (theta = -1)",
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let mut best = f64::INFINITY;
    let mut v = DGVector::zeros(tables.dim, tables.n_scalar(), mesh.n_elems());
    for _ in 0..samples {
        rng.fill_symmetric(&mut v.data);
        let denom = diagnostics::norm_a(tables, mesh, material, &v).powi(2);
        if denom < 1e-300 {
            continue;
        }
        let quotient = op.stiffness.bilinear(&v, &v) / denom;
        best = best.min(quotient);
    }
    Ok(best)
}
