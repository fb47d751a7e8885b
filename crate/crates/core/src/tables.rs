//! Tabulated basis data bound to a mesh: values and physical gradients of
//! every scalar basis function at the volume quadrature points and at the
//! face quadrature points of each (axis, side) pair, plus the shared element
//! mass factorization, L2 projection, and strain evaluation.
//!
//! On a uniform Cartesian mesh every element is a translate of the same box,
//! so one set of tabulations and one scalar mass Cholesky serve the whole
//! mesh; only the material coefficients vary per element.

use crate::basis::{make_quadrature, Basis, Entity, QuadratureRule};
use crate::field::{DGTensorField, DGVector, SymTensor};
use crate::linalg::Cholesky;
use crate::mesh::Mesh;
use crate::Result;

/// Per-(axis, side) tabulation storage, indexed `[axis][side]` with side 0
/// at the element's reference coordinate 0.
pub type PerAxisSide<T> = [[T; 2]; 3];

/// Basis/quadrature tabulations shared by assembly, norms and projections.
#[derive(Clone, Debug)]
pub struct ElementTables {
    pub basis: Basis,
    pub dim: usize,
    /// Volume rule on the reference cell.
    pub vol_rule: QuadratureRule,
    /// Physical volume weights (reference weight x cell volume).
    pub vol_weights: Vec<f64>,
    /// phi_i at volume quadrature point q: `phi_vol[q * n + i]`.
    pub phi_vol: Vec<f64>,
    /// Physical gradient of phi_i at volume point q.
    pub grad_vol: Vec<[f64; 3]>,
    /// Face rule on the reference face `[0,1]^(d-1)`.
    pub face_rule: QuadratureRule,
    /// Physical face weights per axis (reference weight x face measure).
    pub face_weights: [Vec<f64>; 3],
    /// phi_i at face point q: `phi_face[axis][side][q * n + i]`.
    pub phi_face: PerAxisSide<Vec<f64>>,
    /// Physical gradients at face points, indexed like `phi_face`.
    pub grad_face: PerAxisSide<Vec<[f64; 3]>>,
    /// Scalar mass matrix of one element without density (includes |J|).
    pub base_mass: Vec<f64>,
    /// Cholesky factor of `base_mass`.
    pub mass_chol: Cholesky,
    cell_volume: f64,
}

impl ElementTables {
    pub fn new(mesh: &Mesh, basis: Basis) -> Result<Self> {
        let d = mesh.dim;
        assert_eq!(basis.dim, d, "basis and mesh dimension must agree");
        let n = basis.n_scalar();
        let k = basis.degree;
        let cell_volume = mesh.cell_volume();

        let vol_rule = make_quadrature(k, Entity::Cell, d);
        let nq = vol_rule.len();
        let mut phi_vol = vec![0.0; nq * n];
        let mut grad_vol = vec![[0.0; 3]; nq * n];
        let mut vol_weights = vec![0.0; nq];
        for (q, (pt, w)) in vol_rule.points.iter().zip(&vol_rule.weights).enumerate() {
            vol_weights[q] = w * cell_volume;
            for i in 0..n {
                phi_vol[q * n + i] = basis.eval(i, pt);
                grad_vol[q * n + i] = physical_grad(basis.eval_grad(i, pt), mesh);
            }
        }

        let face_rule = make_quadrature(k, Entity::Face, d);
        let nqf = face_rule.len();
        let mut face_weights: [Vec<f64>; 3] = Default::default();
        let mut phi_face: PerAxisSide<Vec<f64>> = Default::default();
        let mut grad_face: PerAxisSide<Vec<[f64; 3]>> = Default::default();
        for axis in 0..d {
            let measure = face_measure(mesh, axis);
            face_weights[axis] = face_rule.weights.iter().map(|w| w * measure).collect();
            for side in 0..2 {
                let mut phis = vec![0.0; nqf * n];
                let mut grads = vec![[0.0; 3]; nqf * n];
                for (q, fp) in face_rule.points.iter().enumerate() {
                    let pt = face_point_to_cell(axis, side, fp, d);
                    for i in 0..n {
                        phis[q * n + i] = basis.eval(i, &pt);
                        grads[q * n + i] = physical_grad(basis.eval_grad(i, &pt), mesh);
                    }
                }
                phi_face[axis][side] = phis;
                grad_face[axis][side] = grads;
            }
        }

        // scalar mass matrix (exact for affine cells: integrand degree 2k)
        let mut base_mass = vec![0.0; n * n];
        for q in 0..nq {
            let w = vol_weights[q];
            for i in 0..n {
                let pi = phi_vol[q * n + i];
                for j in 0..n {
                    base_mass[i * n + j] += w * pi * phi_vol[q * n + j];
                }
            }
        }
        let mass_chol = Cholesky::new(&base_mass, n)?;

        Ok(Self {
            basis,
            dim: d,
            vol_rule,
            vol_weights,
            phi_vol,
            grad_vol,
            face_rule,
            face_weights,
            phi_face,
            grad_face,
            base_mass,
            mass_chol,
            cell_volume,
        })
    }

    pub fn n_scalar(&self) -> usize {
        self.basis.n_scalar()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Reference-cell coordinates of face quadrature point q on the given
    /// (axis, side) of an element.
    pub fn face_ref_point(&self, axis: usize, side: usize, q: usize) -> [f64; 3] {
        face_point_to_cell(axis, side, &self.face_rule.points[q], self.dim)
    }

    /// Vector field values at the volume quadrature points of one element.
    pub fn vector_at_volume(&self, u: &DGVector, e: usize) -> Vec<[f64; 3]> {
        let n = self.n_scalar();
        let coeffs = u.elem(e);
        let mut out = vec![[0.0; 3]; self.vol_rule.len()];
        for (q, val) in out.iter_mut().enumerate() {
            for c in 0..self.dim {
                let block = &coeffs[c * n..(c + 1) * n];
                let mut v = 0.0;
                for i in 0..n {
                    v += block[i] * self.phi_vol[q * n + i];
                }
                val[c] = v;
            }
        }
        out
    }

    /// Strain tensor of a vector field at the volume quadrature points of
    /// one element: eps(u) = (grad u + grad u^T) / 2.
    pub fn strain_at_volume(&self, u: &DGVector, e: usize) -> Vec<SymTensor> {
        let n = self.n_scalar();
        let coeffs = u.elem(e);
        let mut out = vec![SymTensor::ZERO; self.vol_rule.len()];
        for (q, eps) in out.iter_mut().enumerate() {
            let mut grad = [[0.0f64; 3]; 3]; // grad[c][a] = d u_c / d x_a
            for c in 0..self.dim {
                let block = &coeffs[c * n..(c + 1) * n];
                for i in 0..n {
                    let g = self.grad_vol[q * n + i];
                    let ci = block[i];
                    grad[c][0] += ci * g[0];
                    grad[c][1] += ci * g[1];
                    grad[c][2] += ci * g[2];
                }
            }
            *eps = strain_from_grad(&grad);
        }
        out
    }

    /// Vector field trace at the face quadrature points of one element side.
    pub fn vector_at_face(
        &self,
        u: &DGVector,
        e: usize,
        axis: usize,
        side: usize,
    ) -> Vec<[f64; 3]> {
        let n = self.n_scalar();
        let coeffs = u.elem(e);
        let phis = &self.phi_face[axis][side];
        let mut out = vec![[0.0; 3]; self.face_rule.len()];
        for (q, val) in out.iter_mut().enumerate() {
            for c in 0..self.dim {
                let block = &coeffs[c * n..(c + 1) * n];
                let mut v = 0.0;
                for i in 0..n {
                    v += block[i] * phis[q * n + i];
                }
                val[c] = v;
            }
        }
        out
    }

    /// Strain trace at the face quadrature points of one element side.
    pub fn strain_at_face(
        &self,
        u: &DGVector,
        e: usize,
        axis: usize,
        side: usize,
    ) -> Vec<SymTensor> {
        let n = self.n_scalar();
        let coeffs = u.elem(e);
        let grads = &self.grad_face[axis][side];
        let mut out = vec![SymTensor::ZERO; self.face_rule.len()];
        for (q, eps) in out.iter_mut().enumerate() {
            let mut grad = [[0.0f64; 3]; 3];
            for c in 0..self.dim {
                let block = &coeffs[c * n..(c + 1) * n];
                for i in 0..n {
                    let g = grads[q * n + i];
                    let ci = block[i];
                    grad[c][0] += ci * g[0];
                    grad[c][1] += ci * g[1];
                    grad[c][2] += ci * g[2];
                }
            }
            *eps = strain_from_grad(&grad);
        }
        out
    }

    /// Symmetric-tensor field trace at the face quadrature points.
    pub fn tensor_at_face(
        &self,
        s: &DGTensorField,
        e: usize,
        axis: usize,
        side: usize,
    ) -> Vec<SymTensor> {
        let n = self.n_scalar();
        let coeffs = s.elem(e);
        let phis = &self.phi_face[axis][side];
        let nc = s.n_comp();
        let mut out = vec![SymTensor::ZERO; self.face_rule.len()];
        let mut comp_vals = vec![0.0; nc];
        for (q, val) in out.iter_mut().enumerate() {
            for (c, cv) in comp_vals.iter_mut().enumerate() {
                let block = &coeffs[c * n..(c + 1) * n];
                let mut v = 0.0;
                for i in 0..n {
                    v += block[i] * phis[q * n + i];
                }
                *cv = v;
            }
            *val = DGTensorField::assemble_point(self.dim, &comp_vals);
        }
        out
    }

    /// Symmetric-tensor field at the volume quadrature points.
    pub fn tensor_at_volume(&self, s: &DGTensorField, e: usize) -> Vec<SymTensor> {
        let n = self.n_scalar();
        let coeffs = s.elem(e);
        let nc = s.n_comp();
        let mut out = vec![SymTensor::ZERO; self.vol_rule.len()];
        let mut comp_vals = vec![0.0; nc];
        for (q, val) in out.iter_mut().enumerate() {
            for (c, cv) in comp_vals.iter_mut().enumerate() {
                let block = &coeffs[c * n..(c + 1) * n];
                let mut v = 0.0;
                for i in 0..n {
                    v += block[i] * self.phi_vol[q * n + i];
                }
                *cv = v;
            }
            *val = DGTensorField::assemble_point(self.dim, &comp_vals);
        }
        out
    }

    /// L2 projection of a vector-valued function into the broken space.
    pub fn project_vector(
        &self,
        mesh: &Mesh,
        f: &mut dyn FnMut(&[f64; 3]) -> [f64; 3],
    ) -> DGVector {
        let n = self.n_scalar();
        let mut out = DGVector::zeros(self.dim, n, mesh.n_elems());
        for e in 0..mesh.n_elems() {
            let coeffs = out.elem_mut(e);
            for (q, pt) in self.vol_rule.points.iter().enumerate() {
                let x = mesh.map_to_physical(e, pt);
                let val = f(&x);
                let w = self.vol_weights[q];
                for c in 0..self.dim {
                    let block = &mut coeffs[c * n..(c + 1) * n];
                    for i in 0..n {
                        block[i] += w * val[c] * self.phi_vol[q * n + i];
                    }
                }
            }
            self.mass_chol.solve_rows_in_place(coeffs);
        }
        out
    }

    /// L2 projection of a symmetric-tensor function into the broken space.
    pub fn project_tensor(
        &self,
        mesh: &Mesh,
        f: &mut dyn FnMut(&[f64; 3]) -> SymTensor,
    ) -> DGTensorField {
        let n = self.n_scalar();
        let slots = crate::field::sym_slots(self.dim);
        let mut out = DGTensorField::zeros(self.dim, n, mesh.n_elems());
        for e in 0..mesh.n_elems() {
            let coeffs = out.elem_mut(e);
            for (q, pt) in self.vol_rule.points.iter().enumerate() {
                let x = mesh.map_to_physical(e, pt);
                let val = f(&x);
                let w = self.vol_weights[q];
                for (c, &slot) in slots.iter().enumerate() {
                    let block = &mut coeffs[c * n..(c + 1) * n];
                    for i in 0..n {
                        block[i] += w * val.c[slot] * self.phi_vol[q * n + i];
                    }
                }
            }
            self.mass_chol.solve_rows_in_place(coeffs);
        }
        out
    }

    /// Evaluate a broken vector field at an arbitrary physical point.
    pub fn eval_vector_at(&self, mesh: &Mesh, u: &DGVector, x: &[f64; 3]) -> [f64; 3] {
        let mut idx = [0usize; 3];
        let mut xref = [0.0f64; 3];
        for a in 0..self.dim {
            let rel = (x[a] - mesh.lo[a]) / mesh.extent[a];
            let cell = (rel.floor() as isize).clamp(0, mesh.cells[a] as isize - 1) as usize;
            idx[a] = cell;
            xref[a] = (rel - cell as f64).clamp(0.0, 1.0);
        }
        let e = mesh.element_id(idx);
        let n = self.n_scalar();
        let coeffs = u.elem(e);
        let mut out = [0.0; 3];
        for i in 0..n {
            let phi = self.basis.eval(i, &xref);
            for c in 0..self.dim {
                out[c] += coeffs[c * n + i] * phi;
            }
        }
        out
    }
}

/// Density-weighted block-diagonal mass operator with a shared factorization.
#[derive(Clone, Debug)]
pub struct MassOperator {
    rho: Vec<f64>,
}

impl MassOperator {
    pub fn new(material: &crate::material::MaterialField) -> Self {
        Self {
            rho: material.rho.clone(),
        }
    }

    /// y = M x.
    pub fn apply(&self, tables: &ElementTables, x: &DGVector, y: &mut DGVector) {
        let n = tables.n_scalar();
        for e in 0..x.n_elems {
            let xe = x.elem(e);
            let rho = self.rho[e];
            let ye = y.elem_mut(e);
            for c in 0..x.dim {
                let xb = &xe[c * n..(c + 1) * n];
                let yb = &mut ye[c * n..(c + 1) * n];
                crate::linalg::matvec(&tables.base_mass, n, n, xb, yb);
                for v in yb.iter_mut() {
                    *v *= rho;
                }
            }
        }
    }

    /// r <- M^{-1} r.
    pub fn solve_in_place(&self, tables: &ElementTables, r: &mut DGVector) {
        let n = tables.n_scalar();
        let dim = r.dim;
        for e in 0..r.n_elems {
            let rho = self.rho[e];
            let re = r.elem_mut(e);
            for c in 0..dim {
                let rb = &mut re[c * n..(c + 1) * n];
                tables.mass_chol.solve_in_place(rb);
                for v in rb.iter_mut() {
                    *v /= rho;
                }
            }
        }
    }
}

/// Dense element mass matrix for one element (block-diagonal over the d
/// vector components, each block the density-weighted scalar mass).
pub fn element_mass_matrix(tables: &ElementTables, rho: f64) -> Vec<f64> {
    let n = tables.n_scalar();
    let d = tables.dim;
    let full = d * n;
    let mut m = vec![0.0; full * full];
    for c in 0..d {
        for i in 0..n {
            for j in 0..n {
                m[(c * n + i) * full + (c * n + j)] = rho * tables.base_mass[i * n + j];
            }
        }
    }
    m
}

/// Strain tensors of every vector basis function at a set of tabulated
/// points, laid out `[q * n_vec + iv]` with iv = comp * n_scalar + node.
pub fn basis_strains(tables: &ElementTables, grads: &[[f64; 3]], nq: usize) -> Vec<SymTensor> {
    let d = tables.dim;
    let n = tables.n_scalar();
    let nvec = d * n;
    let mut out = vec![SymTensor::ZERO; nq * nvec];
    for q in 0..nq {
        for c in 0..d {
            let mut unit = [0.0f64; 3];
            unit[c] = 1.0;
            for i in 0..n {
                out[q * nvec + c * n + i] = SymTensor::sym_outer(&unit, &grads[q * n + i]);
            }
        }
    }
    out
}

/// [phi_iv (.) e_axis] at the face quadrature points of one (axis, side),
/// laid out like [`basis_strains`].
pub fn basis_face_jumps(tables: &ElementTables, axis: usize, side: usize) -> Vec<SymTensor> {
    let d = tables.dim;
    let n = tables.n_scalar();
    let nvec = d * n;
    let nq = tables.face_rule.len();
    let phis = &tables.phi_face[axis][side];
    let mut e_axis = [0.0f64; 3];
    e_axis[axis] = 1.0;
    let mut out = vec![SymTensor::ZERO; nq * nvec];
    for q in 0..nq {
        for c in 0..d {
            let mut unit = [0.0f64; 3];
            unit[c] = 1.0;
            let base = SymTensor::sym_outer(&unit, &e_axis);
            for i in 0..n {
                out[q * nvec + c * n + i] = base.scale(phis[q * n + i]);
            }
        }
    }
    out
}

fn physical_grad(ref_grad: [f64; 3], mesh: &Mesh) -> [f64; 3] {
    let mut g = [0.0; 3];
    for a in 0..mesh.dim {
        g[a] = ref_grad[a] / mesh.extent[a];
    }
    g
}

fn face_measure(mesh: &Mesh, axis: usize) -> f64 {
    let mut m = 1.0;
    for a in 0..mesh.dim {
        if a != axis {
            m *= mesh.extent[a];
        }
    }
    m
}

/// Embed a reference-face point into the reference cell on (axis, side).
fn face_point_to_cell(axis: usize, side: usize, fp: &[f64; 3], d: usize) -> [f64; 3] {
    let mut pt = [0.0f64; 3];
    pt[axis] = side as f64;
    let mut t = 0;
    for a in 0..d {
        if a != axis {
            pt[a] = fp[t];
            t += 1;
        }
    }
    pt
}

pub(crate) fn strain_from_grad(grad: &[[f64; 3]; 3]) -> SymTensor {
    SymTensor {
        c: [
            grad[0][0],
            grad[1][1],
            grad[2][2],
            0.5 * (grad[0][1] + grad[1][0]),
            0.5 * (grad[0][2] + grad[2][0]),
            0.5 * (grad[1][2] + grad[2][1]),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gauss_legendre;
    use crate::mesh::{build_cartesian_mesh, MeshConfig};

    fn unit_tables(d: usize, n: usize, k: usize) -> (Mesh, ElementTables) {
        let mesh = build_cartesian_mesh(&MeshConfig::unit_box(d, n)).unwrap();
        let tables = ElementTables::new(&mesh, Basis::new(k, d).unwrap()).unwrap();
        (mesh, tables)
    }

    #[test]
    fn q1_mass_matrix_is_exact() {
        // expected from exact integration of bilinear hats on the unit square
        let (_, t) = unit_tables(2, 1, 1);
        let n = 4;
        // node order follows the tensor index (x fastest): (0,0),(1,0),(0,1),(1,1)
        let expect = [
            [4.0, 2.0, 2.0, 1.0],
            [2.0, 4.0, 1.0, 2.0],
            [2.0, 1.0, 4.0, 2.0],
            [1.0, 2.0, 2.0, 4.0],
        ];
        for i in 0..n {
            for j in 0..n {
                let want = expect[i][j] / 36.0;
                assert!(
                    (t.base_mass[i * n + j] - want).abs() < 1e-14,
                    "({i},{j}): {} vs {}",
                    t.base_mass[i * n + j],
                    want
                );
            }
        }
        assert!((t.base_mass[0] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn mass_scales_linearly_with_density_and_is_spd() {
        let (_, t) = unit_tables(2, 2, 2);
        let m1 = element_mass_matrix(&t, 1.0);
        let m2 = element_mass_matrix(&t, 2.0);
        for (a, b) in m1.iter().zip(&m2) {
            assert!((2.0 * a - b).abs() < 1e-14);
        }
        // SPD certificate: Cholesky of the full block matrix succeeds
        let full = t.dim * t.n_scalar();
        assert!(Cholesky::new(&m1, full).is_ok());
    }

    #[test]
    fn mass_with_one_more_quadrature_point_matches() {
        // (k+1)-point Gauss is already exact for the affine-cell mass matrix
        let (mesh, t) = unit_tables(2, 3, 3);
        let n = t.n_scalar();
        let (x1, w1) = gauss_legendre(t.basis.degree + 2);
        let mut overkill = vec![0.0; n * n];
        for (ix, &px) in x1.iter().enumerate() {
            for (iy, &py) in x1.iter().enumerate() {
                let w = w1[ix] * w1[iy] * mesh.cell_volume();
                let pt = [px, py, 0.0];
                for i in 0..n {
                    let pi = t.basis.eval(i, &pt);
                    for j in 0..n {
                        overkill[i * n + j] += w * pi * t.basis.eval(j, &pt);
                    }
                }
            }
        }
        for (a, b) in t.base_mass.iter().zip(&overkill) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn strain_examples() {
        let (mesh, t) = unit_tables(2, 1, 2);
        let n = t.n_scalar();

        // constant field -> zero strain
        let mut u = DGVector::zeros(2, n, mesh.n_elems());
        for i in 0..n {
            u.set(0, 0, i, 3.0);
            u.set(0, 1, i, -2.0);
        }
        for eps in t.strain_at_volume(&u, 0) {
            assert!(eps.norm() < 1e-13);
        }

        // u = (x, 0): eps = [[1,0],[0,0]]
        let mut u = DGVector::zeros(2, n, mesh.n_elems());
        for i in 0..n {
            let idx = t.basis.unpack(i);
            u.set(0, 0, i, t.basis.nodes_1d[idx[0]]);
        }
        for eps in t.strain_at_volume(&u, 0) {
            assert!((eps.c[0] - 1.0).abs() < 1e-13);
            assert!(eps.c[1].abs() < 1e-13);
            assert!(eps.c[3].abs() < 1e-13);
        }

        // u = (y, x): grad is not symmetric but eps is [[0,1],[1,0]]
        let mut u = DGVector::zeros(2, n, mesh.n_elems());
        for i in 0..n {
            let idx = t.basis.unpack(i);
            u.set(0, 0, i, t.basis.nodes_1d[idx[1]]);
            u.set(0, 1, i, t.basis.nodes_1d[idx[0]]);
        }
        for eps in t.strain_at_volume(&u, 0) {
            assert!(eps.c[0].abs() < 1e-13);
            assert!(eps.c[1].abs() < 1e-13);
            assert!((eps.c[3] - 1.0).abs() < 1e-13);
        }

        // rigid rotation u = (-y, x) has exactly zero strain
        let mut u = DGVector::zeros(2, n, mesh.n_elems());
        for i in 0..n {
            let idx = t.basis.unpack(i);
            u.set(0, 0, i, -t.basis.nodes_1d[idx[1]]);
            u.set(0, 1, i, t.basis.nodes_1d[idx[0]]);
        }
        for eps in t.strain_at_volume(&u, 0) {
            assert!(eps.norm() < 1e-13);
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let (mesh, t) = unit_tables(2, 2, 2);
        // a quadratic vector field is reproduced exactly by the k=2 space
        let mut u = t.project_vector(&mesh, &mut |x| [x[0] * x[0] + 0.5 * x[1], x[0] * x[1], 0.0]);
        for e in 0..mesh.n_elems() {
            for (q, pt) in t.vol_rule.points.iter().enumerate() {
                let x = mesh.map_to_physical(e, pt);
                let vals = t.vector_at_volume(&u, e);
                assert!((vals[q][0] - (x[0] * x[0] + 0.5 * x[1])).abs() < 1e-13);
                assert!((vals[q][1] - x[0] * x[1]).abs() < 1e-13);
            }
        }
        // point evaluation agrees too
        let v = t.eval_vector_at(&mesh, &u, &[0.33, 0.71, 0.0]);
        assert!((v[0] - (0.33f64 * 0.33 + 0.5 * 0.71)).abs() < 1e-13);
        u.fill(0.0);
        assert_eq!(t.eval_vector_at(&mesh, &u, &[0.9, 0.9, 0.0]), [0.0; 3]);
    }

    #[test]
    fn mass_operator_roundtrip() {
        let (mesh, t) = unit_tables(3, 2, 1);
        let mat = crate::material::MaterialField::uniform(&mesh, 2.5, 1.0, 1.0).unwrap();
        let m = MassOperator::new(&mat);
        let mut rng = crate::rng::SplitMix64::new(9);
        let mut x = DGVector::zeros(3, t.n_scalar(), mesh.n_elems());
        rng.fill_symmetric(&mut x.data);
        let mut y = DGVector::zeros_like(&x);
        m.apply(&t, &x, &mut y);
        m.solve_in_place(&t, &mut y);
        for (a, b) in x.data.iter().zip(&y.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
