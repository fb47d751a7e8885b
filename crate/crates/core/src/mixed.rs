//! Displacement-stress DG formulations: FDG and its LDG / ALT special cases.
//!
//! The stress has no time derivative, so it is enslaved to the displacement:
//! each step solves the constitutive equation
//!
//! ```text
//! (A sigma, tau) + <c22 [[sigma]], [[tau]]>_int + <c22 sigma n, tau n>_N
//!   = (eps(u), tau) + <{u}_{1-delta} - {u}, [[tau]]>_int
//!     - <[[u]], {tau}>_{int+D} + <c22 g, tau n>_N
//! ```
//!
//! for sigma and feeds it to the momentum residual
//!
//! ```text
//! B(u, sigma; v) = (sigma, eps(v)) - <{sigma}_delta, [[v]]>_int
//!                + <c11 [[u]], [[v]]>_int + <c11 u, v>_D - <sigma n, v>_D.
//! ```
//!
//! Flux parameters: c11 = c1 h_F^{-1} k^2 {D} and c22 = c2 h_F k^{-2} / {D},
//! with the one-sided element scale on boundary faces. LDG sets c2 = 0 (the
//! sigma solve is then strictly element-local), ALT sets c1 = c2 = 0 with
//! delta in {0, 1} (one-sided fluxes). With c2 > 0 the sigma operator is a
//! compliance mass plus a nonnegative jump penalty - symmetric positive
//! definite - and is solved by preconditioned conjugate gradients with the
//! element-local solve as the preconditioner.

use crate::error::invalid;
use crate::field::{n_sym, sym_slots, DGTensorField, DGVector, SymTensor};
use crate::material::MaterialField;
use crate::mesh::{FaceKind, Mesh};
use crate::tables::{basis_face_jumps, basis_strains, ElementTables};
use crate::trace::Weight;
use crate::Result;

/// Traction callable (x, n, t) -> g used for Neumann data.
pub type TractionFn<'a> = &'a dyn Fn(&[f64; 3], &[f64; 3], f64) -> [f64; 3];

/// Flux family of the displacement-stress formulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixedMethod {
    Fdg,
    Ldg,
    Alt,
}

impl MixedMethod {
    pub fn name(&self) -> &'static str {
        match self {
            MixedMethod::Fdg => "fdg",
            MixedMethod::Ldg => "ldg",
            MixedMethod::Alt => "alt",
        }
    }
}

/// Parameters of a displacement-stress scheme.
#[derive(Clone, Copy, Debug)]
pub struct MixedConfig {
    pub method: MixedMethod,
    /// Average weight delta in `[0,1]`; ALT requires delta in {0, 1}.
    pub delta: f64,
    /// Displacement-jump penalty constant (>= 0; forced 0 for ALT).
    pub c1: f64,
    /// Stress-jump penalty constant (>= 0; forced 0 for LDG and ALT).
    pub c2: f64,
}

impl MixedConfig {
    pub fn fdg(delta: f64, c1: f64, c2: f64) -> Self {
        Self {
            method: MixedMethod::Fdg,
            delta,
            c1,
            c2,
        }
    }

    pub fn ldg(delta: f64, c1: f64) -> Self {
        Self {
            method: MixedMethod::Ldg,
            delta,
            c1,
            c2: 0.0,
        }
    }

    pub fn alt(delta: f64) -> Self {
        Self {
            method: MixedMethod::Alt,
            delta,
            c1: 0.0,
            c2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid(format!(
                "delta must lie in [0,1], got {}",
                self.delta
            )));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(invalid("penalty constants c1, c2 must be nonnegative"));
        }
        match self.method {
            MixedMethod::Fdg => {}
            MixedMethod::Ldg => {
                if self.c2 != 0.0 {
                    return Err(invalid("LDG requires c2 = 0"));
                }
            }
            MixedMethod::Alt => {
                if self.c1 != 0.0 || self.c2 != 0.0 {
                    return Err(invalid("ALT requires c1 = c2 = 0"));
                }
                if self.delta != 0.0 && self.delta != 1.0 {
                    return Err(invalid("ALT requires delta = 0 or delta = 1"));
                }
            }
        }
        Ok(())
    }

    /// Stability caveats for this scheme on the given mesh.
    pub fn warnings(&self, mesh: &Mesh) -> Vec<String> {
        let mut w = Vec::new();
        if self.method == MixedMethod::Alt && mesh.faces.iter().any(|f| f.kind == FaceKind::Neumann)
        {
            w.push(
                "ALT fluxes on a mesh with Neumann faces: stability is guaranteed only \
                 under Dirichlet-type boundary conditions"
                    .to_string(),
            );
        }
        w
    }

    pub fn delta_weight(&self) -> Weight {
        Weight::new(self.delta).expect("validated delta")
    }
}

/// Per-face flux parameters (c11, c22).
pub fn flux_parameters(
    mesh: &Mesh,
    material: &MaterialField,
    face_id: usize,
    k: usize,
    cfg: &MixedConfig,
) -> (f64, f64) {
    let face = &mesh.faces[face_id];
    let scale = material.face_scale(mesh, face_id);
    let k2 = (k * k) as f64;
    let c11 = cfg.c1 * k2 * scale / face.h_f;
    let c22 = cfg.c2 * face.h_f / (k2 * scale);
    (c11, c22)
}

/// Stress solver: element-local when c2 = 0, preconditioned CG otherwise.
#[derive(Clone, Debug)]
pub struct SigmaSolver {
    global: bool,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl SigmaSolver {
    pub fn new(cfg: &MixedConfig) -> Self {
        Self {
            global: cfg.c2 > 0.0,
            rel_tol: 1e-10,
            max_iter: 800,
        }
    }

    pub fn is_local(&self) -> bool {
        !self.global
    }
}

/// Apply the inverse of the element compliance component matrix: for a
/// component vector r (tested against the E_b basis with Frobenius
/// weighting), the inverse action is 2 mu r_diag + lambda * sum(r_diag) on
/// diagonal components and mu r_off on off-diagonal ones.
fn compliance_component_inverse(d: usize, lambda: f64, mu: f64, r: &mut [f64]) {
    let tr: f64 = r[..d].iter().sum();
    for v in r[..d].iter_mut() {
        *v = 2.0 * mu * *v + lambda * tr;
    }
    for v in r[d..n_sym(d)].iter_mut() {
        *v *= mu;
    }
}

/// Solve the block-diagonal part (A sigma, tau) = rhs(tau) element by
/// element; exact for c2 = 0 and the CG preconditioner otherwise.
fn sigma_local_solve(
    tables: &ElementTables,
    material: &MaterialField,
    rhs: &DGTensorField,
) -> DGTensorField {
    let n = tables.n_scalar();
    let d = tables.dim;
    let nc = n_sym(d);
    let mut out = rhs.clone();
    let mut comp = vec![0.0; nc];
    for e in 0..rhs.n_elems {
        let lambda = material.lambda[e];
        let mu = material.mu[e];
        let block = out.elem_mut(e);
        // component inverse at each mode, then the scalar mass solve per row
        for p in 0..n {
            for (c, v) in comp.iter_mut().enumerate() {
                *v = block[c * n + p];
            }
            compliance_component_inverse(d, lambda, mu, &mut comp);
            for (c, v) in comp.iter().enumerate() {
                block[c * n + p] = *v;
            }
        }
        tables.mass_chol.solve_rows_in_place(block);
    }
    out
}

/// y = (A sigma, tau) + c22 jump terms, the SPD left side of the sigma
/// equation, assembled matrix-free.
fn sigma_operator_apply(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    s: &DGTensorField,
    out: &mut DGTensorField,
) {
    let n = tables.n_scalar();
    let d = tables.dim;
    let slots = sym_slots(d);
    let k = tables.basis.degree;
    out.data.fill(0.0);

    // compliance mass (G (x) M block per element)
    for e in 0..mesh.n_elems() {
        let vals = tables.tensor_at_volume(s, e);
        let block = out.elem_mut(e);
        for (q, sig) in vals.iter().enumerate() {
            let w = tables.vol_weights[q];
            let a_sig = material.apply_compliance_at(e, sig);
            for (c, &slot) in slots.iter().enumerate() {
                // (A sigma) : E_c, with the doubled off-diagonal weight
                let m = if slot >= 3 { 2.0 } else { 1.0 };
                let coef = w * m * a_sig.c[slot];
                if coef == 0.0 {
                    continue;
                }
                let row = &mut block[c * n..(c + 1) * n];
                for i in 0..n {
                    row[i] += coef * tables.phi_vol[q * n + i];
                }
            }
        }
    }

    if cfg.c2 == 0.0 {
        return;
    }

    // c22 penalty terms
    for face in &mesh.faces {
        match face.kind {
            FaceKind::Interior => {
                let (_, c22) = flux_parameters(mesh, material, face.id, k, cfg);
                let m = face.minus.unwrap();
                let tp = tables.tensor_at_face(s, face.plus, face.axis, 1);
                let tm = tables.tensor_at_face(s, m, face.axis, 0);
                let wq = &tables.face_weights[face.axis];
                for (elem, side, sign) in [(face.plus, 1usize, 1.0f64), (m, 0, -1.0)] {
                    let phis = &tables.phi_face[face.axis][side];
                    let block = out.elem_mut(elem);
                    for q in 0..tables.face_rule.len() {
                        let jump = tp[q].sub(&tm[q]).mul_vec(&face.normal);
                        // [[tau]] for tau = E_c phi_p from this side is
                        // sign * (E_c n) phi_p; (jump . E_c n) picks the
                        // component pattern of E_c n
                        let w = wq[q] * c22 * sign;
                        accumulate_vector_against_basis_normal(
                            d,
                            &jump,
                            &face.normal,
                            w,
                            phis,
                            q,
                            n,
                            block,
                        );
                    }
                }
            }
            FaceKind::Neumann => {
                let (_, c22) = flux_parameters(mesh, material, face.id, k, cfg);
                let e = face.plus;
                let side = face.local_side(e);
                let tr = tables.tensor_at_face(s, e, face.axis, side);
                let wq = &tables.face_weights[face.axis];
                let phis = &tables.phi_face[face.axis][side];
                let block = out.elem_mut(e);
                for q in 0..tables.face_rule.len() {
                    let sn = tr[q].mul_vec(&face.normal);
                    let w = wq[q] * c22;
                    accumulate_vector_against_basis_normal(
                        d,
                        &sn,
                        &face.normal,
                        w,
                        phis,
                        q,
                        n,
                        block,
                    );
                }
            }
            FaceKind::Dirichlet => {}
        }
    }
}

/// Accumulate w * (vec . (E_c n)) phi_p into the tensor coefficient block;
/// E_c n has entries n_j on the diagonal pattern and the two symmetric
/// off-diagonal entries for c = (i, j).
#[allow(clippy::too_many_arguments)]
fn accumulate_vector_against_basis_normal(
    d: usize,
    vec: &[f64; 3],
    normal: &[f64; 3],
    w: f64,
    phis: &[f64],
    q: usize,
    n: usize,
    block: &mut [f64],
) {
    let slots = sym_slots(d);
    for (c, &slot) in slots.iter().enumerate() {
        // E_c n for the six padded components
        let dot = match slot {
            0 => vec[0] * normal[0],
            1 => vec[1] * normal[1],
            2 => vec[2] * normal[2],
            3 => vec[0] * normal[1] + vec[1] * normal[0],
            4 => vec[0] * normal[2] + vec[2] * normal[0],
            _ => vec[1] * normal[2] + vec[2] * normal[1],
        };
        if dot == 0.0 {
            continue;
        }
        let row = &mut block[c * n..(c + 1) * n];
        for i in 0..n {
            row[i] += w * dot * phis[q * n + i];
        }
    }
}

/// Right-hand side of the sigma equation for a displacement u and Neumann
/// data g at time t.
#[allow(clippy::too_many_arguments)]
fn sigma_rhs(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    u: &DGVector,
    g: Option<TractionFn<'_>>,
    t: f64,
) -> DGTensorField {
    let n = tables.n_scalar();
    let d = tables.dim;
    let slots = sym_slots(d);
    let k = tables.basis.degree;
    let mut rhs = DGTensorField::zeros(d, n, mesh.n_elems());

    // (eps(u), tau)
    for e in 0..mesh.n_elems() {
        let eps = tables.strain_at_volume(u, e);
        let block = rhs.elem_mut(e);
        for (q, t_eps) in eps.iter().enumerate() {
            let w = tables.vol_weights[q];
            for (c, &slot) in slots.iter().enumerate() {
                let m = if slot >= 3 { 2.0 } else { 1.0 };
                let coef = w * m * t_eps.c[slot];
                if coef == 0.0 {
                    continue;
                }
                let row = &mut block[c * n..(c + 1) * n];
                for i in 0..n {
                    row[i] += coef * tables.phi_vol[q * n + i];
                }
            }
        }
    }

    for face in &mesh.faces {
        let wq = &tables.face_weights[face.axis];
        match face.kind {
            FaceKind::Interior => {
                let m = face.minus.unwrap();
                let up = tables.vector_at_face(u, face.plus, face.axis, 1);
                let um = tables.vector_at_face(u, m, face.axis, 0);
                for (elem, side, sign) in [(face.plus, 1usize, 1.0f64), (m, 0, -1.0)] {
                    let phis = &tables.phi_face[face.axis][side];
                    let block = rhs.elem_mut(elem);
                    for q in 0..tables.face_rule.len() {
                        // <{u}_{1-delta} - {u}, [[tau]]>: the weighted-average
                        // defect is (1/2 - delta)(u+ - u-)
                        let f = 0.5 - cfg.delta;
                        let diff = [
                            f * (up[q][0] - um[q][0]),
                            f * (up[q][1] - um[q][1]),
                            f * (up[q][2] - um[q][2]),
                        ];
                        accumulate_vector_against_basis_normal(
                            d,
                            &diff,
                            &face.normal,
                            wq[q] * sign,
                            phis,
                            q,
                            n,
                            block,
                        );
                        // -<[[u]], {tau}>: {tau} from this side carries 1/2
                        let jump = crate::trace::jump_vector_point(&up[q], &um[q], &face.normal);
                        accumulate_tensor_against_basis(d, &jump, -0.5 * wq[q], phis, q, n, block);
                    }
                }
            }
            FaceKind::Dirichlet => {
                // -<[[u]], {tau}> with [[u]] = u (.) n and {tau} = tau
                let e = face.plus;
                let side = face.local_side(e);
                let ub = tables.vector_at_face(u, e, face.axis, side);
                let phis = &tables.phi_face[face.axis][side];
                let block = rhs.elem_mut(e);
                for q in 0..tables.face_rule.len() {
                    let jump = SymTensor::sym_outer(&ub[q], &face.normal);
                    accumulate_tensor_against_basis(d, &jump, -wq[q], phis, q, n, block);
                }
            }
            FaceKind::Neumann => {
                // +<c22 g, tau n>
                if cfg.c2 == 0.0 {
                    continue;
                }
                let Some(g) = g else { continue };
                let (_, c22) = flux_parameters(mesh, material, face.id, k, cfg);
                let e = face.plus;
                let side = face.local_side(e);
                let phis = &tables.phi_face[face.axis][side];
                let block = rhs.elem_mut(e);
                for q in 0..tables.face_rule.len() {
                    let xref = tables.face_ref_point(face.axis, side, q);
                    let x = mesh.map_to_physical(e, &xref);
                    let gv = g(&x, &face.normal, t);
                    accumulate_vector_against_basis_normal(
                        d,
                        &gv,
                        &face.normal,
                        wq[q] * c22,
                        phis,
                        q,
                        n,
                        block,
                    );
                }
            }
        }
    }
    rhs
}

/// Accumulate w * (T : E_c) phi_p into the tensor coefficient block.
fn accumulate_tensor_against_basis(
    d: usize,
    t: &SymTensor,
    w: f64,
    phis: &[f64],
    q: usize,
    n: usize,
    block: &mut [f64],
) {
    let slots = sym_slots(d);
    for (c, &slot) in slots.iter().enumerate() {
        let m = if slot >= 3 { 2.0 } else { 1.0 };
        let coef = w * m * t.c[slot];
        if coef == 0.0 {
            continue;
        }
        let row = &mut block[c * n..(c + 1) * n];
        for i in 0..n {
            row[i] += coef * phis[q * n + i];
        }
    }
}

/// Recover the stress from the displacement (and Neumann data at time t).
///
/// With c2 = 0 the solve is strictly element-local; with c2 > 0 a global
/// SPD system is solved by CG to the solver's relative tolerance.
#[allow(clippy::too_many_arguments)]
pub fn recover_sigma(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    solver: &SigmaSolver,
    u: &DGVector,
    g: Option<TractionFn<'_>>,
    t: f64,
) -> Result<DGTensorField> {
    let rhs = sigma_rhs(mesh, tables, material, cfg, u, g, t);
    if solver.is_local() {
        return Ok(sigma_local_solve(tables, material, &rhs));
    }
    let mut x = sigma_local_solve(tables, material, &rhs);
    let mut scratch = DGTensorField::zeros(tables.dim, tables.n_scalar(), mesh.n_elems());
    // TODO: the CG closures copy the coefficient buffers on every
    // application; reuse scratch fields if the c2 > 0 path ever shows up in
    // profiles
    let mut apply = |v: &[f64], out: &mut [f64]| {
        let vin = DGTensorField {
            dim: tables.dim,
            n_modes: tables.n_scalar(),
            n_elems: mesh.n_elems(),
            data: v.to_vec(),
        };
        sigma_operator_apply(mesh, tables, material, cfg, &vin, &mut scratch);
        out.copy_from_slice(&scratch.data);
    };
    let mut precond = |r: &[f64], z: &mut [f64]| {
        let rin = DGTensorField {
            dim: tables.dim,
            n_modes: tables.n_scalar(),
            n_elems: mesh.n_elems(),
            data: r.to_vec(),
        };
        let solved = sigma_local_solve(tables, material, &rin);
        z.copy_from_slice(&solved.data);
    };
    let rhs_data = rhs.data.clone();
    let mut x_data = x.data.clone();
    crate::linalg::pcg(
        &mut apply,
        &mut precond,
        &rhs_data,
        &mut x_data,
        solver.rel_tol,
        solver.max_iter,
    )?;
    x.data = x_data;
    Ok(x)
}

/// Load-free left side of the momentum equation: the caller subtracts the
/// load vector (f, v) + <g, v>_N.
pub fn momentum_apply(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    u: &DGVector,
    sigma: &DGTensorField,
) -> DGVector {
    let n = tables.n_scalar();
    let d = tables.dim;
    let nvec = d * n;
    let k = tables.basis.degree;
    let mut out = DGVector::zeros(d, n, mesh.n_elems());

    // (sigma, eps(v))
    let strain_vol = basis_strains(tables, &tables.grad_vol, tables.vol_rule.len());
    for e in 0..mesh.n_elems() {
        let vals = tables.tensor_at_volume(sigma, e);
        let block = out.elem_mut(e);
        for (q, sig) in vals.iter().enumerate() {
            let w = tables.vol_weights[q];
            let row = &strain_vol[q * nvec..(q + 1) * nvec];
            for (iv, eps_basis) in row.iter().enumerate() {
                block[iv] += w * sig.dot(eps_basis);
            }
        }
    }

    for face in &mesh.faces {
        let wq = &tables.face_weights[face.axis];
        match face.kind {
            FaceKind::Interior => {
                let (c11, _) = flux_parameters(mesh, material, face.id, k, cfg);
                let m = face.minus.unwrap();
                let sp = tables.tensor_at_face(sigma, face.plus, face.axis, 1);
                let sm = tables.tensor_at_face(sigma, m, face.axis, 0);
                let up = tables.vector_at_face(u, face.plus, face.axis, 1);
                let um = tables.vector_at_face(u, m, face.axis, 0);
                for (elem, side, sign) in [(face.plus, 1usize, 1.0f64), (m, 0, -1.0)] {
                    let jumps = basis_face_jumps(tables, face.axis, side);
                    let block = out.elem_mut(elem);
                    for q in 0..tables.face_rule.len() {
                        // -<{sigma}_delta, [[v]]> + <c11 [[u]], [[v]]>
                        let avg = sp[q].lin(cfg.delta, &sm[q], 1.0 - cfg.delta);
                        let ujump = crate::trace::jump_vector_point(&up[q], &um[q], &face.normal);
                        let target = ujump.scale(c11).sub(&avg);
                        let w = wq[q] * sign;
                        let jrow = &jumps[q * nvec..(q + 1) * nvec];
                        for (iv, jb) in jrow.iter().enumerate() {
                            block[iv] += w * target.dot(jb);
                        }
                    }
                }
            }
            FaceKind::Dirichlet => {
                // +<c11 u, v> - <sigma n, v>
                let (c11, _) = flux_parameters(mesh, material, face.id, k, cfg);
                let e = face.plus;
                let side = face.local_side(e);
                let sb = tables.tensor_at_face(sigma, e, face.axis, side);
                let ub = tables.vector_at_face(u, e, face.axis, side);
                let phis = &tables.phi_face[face.axis][side];
                let block = out.elem_mut(e);
                for q in 0..tables.face_rule.len() {
                    let sn = sb[q].mul_vec(&face.normal);
                    let target = [
                        c11 * ub[q][0] - sn[0],
                        c11 * ub[q][1] - sn[1],
                        c11 * ub[q][2] - sn[2],
                    ];
                    for c in 0..d {
                        if target[c] == 0.0 {
                            continue;
                        }
                        let row = &mut block[c * n..(c + 1) * n];
                        for i in 0..n {
                            row[i] += wq[q] * target[c] * phis[q * n + i];
                        }
                    }
                }
            }
            FaceKind::Neumann => {}
        }
    }
    out
}

/// Discrete energy of the displacement-stress formulation:
/// `||rho^1/2 u_t||^2 + ||A^1/2 sigma||^2 + ||c11^1/2 [[u]]||^2_{int+D} +
/// ||c22^1/2 [[sigma]]||^2_{int} + ||c22^1/2 sigma n||^2_{N}`.
pub fn discrete_energy_mdg(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    u_t: &DGVector,
    sigma: &DGTensorField,
    u: &DGVector,
) -> f64 {
    let k = tables.basis.degree;
    let mut total = crate::diagnostics::weighted_l2_sq(tables, mesh, material, u_t);
    for e in 0..mesh.n_elems() {
        let vals = tables.tensor_at_volume(sigma, e);
        for (q, sig) in vals.iter().enumerate() {
            total += tables.vol_weights[q] * material.apply_compliance_at(e, sig).dot(sig);
        }
    }
    for face in &mesh.faces {
        let (c11, c22) = flux_parameters(mesh, material, face.id, k, cfg);
        let wq = &tables.face_weights[face.axis];
        match face.kind {
            FaceKind::Interior => {
                let m = face.minus.unwrap();
                if c11 > 0.0 {
                    let up = tables.vector_at_face(u, face.plus, face.axis, 1);
                    let um = tables.vector_at_face(u, m, face.axis, 0);
                    for q in 0..tables.face_rule.len() {
                        let j = crate::trace::jump_vector_point(&up[q], &um[q], &face.normal);
                        total += wq[q] * c11 * j.dot(&j);
                    }
                }
                if c22 > 0.0 {
                    let sp = tables.tensor_at_face(sigma, face.plus, face.axis, 1);
                    let sm = tables.tensor_at_face(sigma, m, face.axis, 0);
                    for q in 0..tables.face_rule.len() {
                        let j = sp[q].sub(&sm[q]).mul_vec(&face.normal);
                        total += wq[q] * c22 * (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]);
                    }
                }
            }
            FaceKind::Dirichlet => {
                if c11 > 0.0 {
                    let ub =
                        tables.vector_at_face(u, face.plus, face.axis, face.local_side(face.plus));
                    for q in 0..tables.face_rule.len() {
                        let j = SymTensor::sym_outer(&ub[q], &face.normal);
                        total += wq[q] * c11 * j.dot(&j);
                    }
                }
            }
            FaceKind::Neumann => {
                if c22 > 0.0 {
                    let sb = tables.tensor_at_face(
                        sigma,
                        face.plus,
                        face.axis,
                        face.local_side(face.plus),
                    );
                    for q in 0..tables.face_rule.len() {
                        let sn = sb[q].mul_vec(&face.normal);
                        total += wq[q] * c22 * (sn[0] * sn[0] + sn[1] * sn[1] + sn[2] * sn[2]);
                    }
                }
            }
        }
    }
    total
}

/// Augmented MDG error norm: the energy above plus
/// ||c22^1/2 {sigma}_delta||^2 over interior and Dirichlet faces (identically
/// zero for LDG and ALT where c22 = 0).
pub fn energy_mdg_augmented(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    u_t: &DGVector,
    sigma: &DGTensorField,
    u: &DGVector,
) -> f64 {
    let mut total = discrete_energy_mdg(mesh, tables, material, cfg, u_t, sigma, u);
    let k = tables.basis.degree;
    if cfg.c2 > 0.0 {
        for face in &mesh.faces {
            if face.kind == FaceKind::Neumann {
                continue;
            }
            let (_, c22) = flux_parameters(mesh, material, face.id, k, cfg);
            let traces = crate::trace::gather_tensor_traces(tables, sigma, face);
            let avg = crate::trace::weighted_average_tensor(&traces, cfg.delta_weight(), face);
            let wq = &tables.face_weights[face.axis];
            for (q, a) in avg.iter().enumerate() {
                total += wq[q] * c22 * a.dot(a);
            }
        }
    }
    total
}

/// Error of a discrete triple (u_h, v_h, sigma_h) against the exact solution
/// in the augmented MDG norm: the discrete energy of the difference plus
/// ||c22^1/2 {e_sigma}_delta||^2 over interior and Dirichlet faces. The
/// exact fields are evaluated pointwise at the quadrature nodes.
#[allow(clippy::too_many_arguments)]
pub fn error_mdg_vs_exact(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    u_h: &DGVector,
    v_h: &DGVector,
    sigma_h: &DGTensorField,
    exact: &crate::manufactured::ExactSolution,
    t: f64,
) -> f64 {
    let k = tables.basis.degree;
    let mut total = 0.0;

    for e in 0..mesh.n_elems() {
        let v_vals = tables.vector_at_volume(v_h, e);
        let s_vals = tables.tensor_at_volume(sigma_h, e);
        for (q, pt) in tables.vol_rule.points.iter().enumerate() {
            let x = mesh.map_to_physical(e, pt);
            let w = tables.vol_weights[q];
            let ve = exact.velocity(&x, t);
            let dv = [
                ve[0] - v_vals[q][0],
                ve[1] - v_vals[q][1],
                ve[2] - v_vals[q][2],
            ];
            total += w * material.rho[e] * (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]);
            let ds = exact.stress(&x, t).sub(&s_vals[q]);
            total += w * material.apply_compliance_at(e, &ds).dot(&ds);
        }
    }

    for face in &mesh.faces {
        let (c11, c22) = flux_parameters(mesh, material, face.id, k, cfg);
        let wq = &tables.face_weights[face.axis];
        let side = face.local_side(face.plus);
        match face.kind {
            FaceKind::Interior => {
                // the exact fields are continuous: error jumps reduce to the
                // discrete jumps
                let m = face.minus.unwrap();
                if c11 > 0.0 {
                    let up = tables.vector_at_face(u_h, face.plus, face.axis, 1);
                    let um = tables.vector_at_face(u_h, m, face.axis, 0);
                    for q in 0..tables.face_rule.len() {
                        let j = crate::trace::jump_vector_point(&up[q], &um[q], &face.normal);
                        total += wq[q] * c11 * j.dot(&j);
                    }
                }
                if c22 > 0.0 {
                    let sp = tables.tensor_at_face(sigma_h, face.plus, face.axis, 1);
                    let sm = tables.tensor_at_face(sigma_h, m, face.axis, 0);
                    for q in 0..tables.face_rule.len() {
                        let j = sp[q].sub(&sm[q]).mul_vec(&face.normal);
                        total += wq[q] * c22 * (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]);
                        // augmented term: {e_sigma}_delta
                        let xref = tables.face_ref_point(face.axis, 1, q);
                        let x = mesh.map_to_physical(face.plus, &xref);
                        let se = exact.stress(&x, t);
                        let avg = sp[q].lin(cfg.delta, &sm[q], 1.0 - cfg.delta);
                        let d = se.sub(&avg);
                        total += wq[q] * c22 * d.dot(&d);
                    }
                }
            }
            FaceKind::Dirichlet => {
                let ub = tables.vector_at_face(u_h, face.plus, face.axis, side);
                let sb = tables.tensor_at_face(sigma_h, face.plus, face.axis, side);
                for q in 0..tables.face_rule.len() {
                    let xref = tables.face_ref_point(face.axis, side, q);
                    let x = mesh.map_to_physical(face.plus, &xref);
                    if c11 > 0.0 {
                        let ue = exact.displacement(&x, t);
                        let du = [ue[0] - ub[q][0], ue[1] - ub[q][1], ue[2] - ub[q][2]];
                        let j = SymTensor::sym_outer(&du, &face.normal);
                        total += wq[q] * c11 * j.dot(&j);
                    }
                    if c22 > 0.0 {
                        // augmented term, one-sided average on the boundary
                        let d = exact.stress(&x, t).sub(&sb[q]);
                        total += wq[q] * c22 * d.dot(&d);
                    }
                }
            }
            FaceKind::Neumann => {
                if c22 > 0.0 {
                    let sb = tables.tensor_at_face(sigma_h, face.plus, face.axis, side);
                    for q in 0..tables.face_rule.len() {
                        let xref = tables.face_ref_point(face.axis, side, q);
                        let x = mesh.map_to_physical(face.plus, &xref);
                        let dn = exact.stress(&x, t).sub(&sb[q]).mul_vec(&face.normal);
                        total += wq[q] * c22 * (dn[0] * dn[0] + dn[1] * dn[1] + dn[2] * dn[2]);
                    }
                }
            }
        }
    }
    total.sqrt()
}

/// The composed displacement operator u -> B(u, sigma_hom(u)); the linear
/// stiffness action used by the leapfrog scheme and spectral estimates.
pub fn composed_apply(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    solver: &SigmaSolver,
    u: &DGVector,
) -> Result<DGVector> {
    let sigma = recover_sigma(mesh, tables, material, cfg, solver, u, None, 0.0)?;
    Ok(momentum_apply(mesh, tables, material, cfg, u, &sigma))
}

/// Write the composed operator as dense coordinate triplets (row, col,
/// value), one column per unit displacement vector. Meant for external
/// eigen-analysis on small meshes only, since every column costs a stress
/// solve.
pub fn export_composed_coo(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    cfg: &MixedConfig,
    solver: &SigmaSolver,
    out: &mut dyn std::io::Write,
) -> Result<()> {
    let n = tables.dim * tables.n_scalar() * mesh.n_elems();
    let mut unit = DGVector::zeros(tables.dim, tables.n_scalar(), mesh.n_elems());
    for col in 0..n {
        unit.fill(0.0);
        unit.data[col] = 1.0;
        let bu = composed_apply(mesh, tables, material, cfg, solver, &unit)?;
        for (row, v) in bu.data.iter().enumerate() {
            writeln!(out, "{row} {col} {v:.16e}")?;
        }
    }
    Ok(())
}
