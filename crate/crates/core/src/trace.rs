//! Face trace extraction and the jump / average / weighted-average calculus.
//!
//! Everything is evaluated pointwise at face quadrature nodes (never as
//! modal coefficients); assembly, energy norms and the identity tests all go
//! through the functions here so there is exactly one implementation of each
//! definition.
//!
//! Conventions (see also [`crate::mesh`]): on an interior face the jump of a
//! vector is the symmetric tensor `[[v]] = v+ (.) n+ + v- (.) n-`, the jump
//! of a symmetric tensor the vector `[[tau]] = tau+ n+ + tau- n-`, and the
//! weighted average `{w}_delta = delta * w+ + (1-delta) * w-`. On boundary
//! faces `[[v]] = v (.) n`, averages reduce to the single trace regardless
//! of delta, and tensor jumps are undefined.

use crate::error::invalid;
use crate::field::{DGTensorField, DGVector, SymTensor};
use crate::mesh::{Face, Mesh};
use crate::tables::ElementTables;
use crate::Result;

/// Weight of a weighted average, delta in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight(f64);

impl Weight {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(invalid(format!(
                "average weight must lie in [0,1], got {delta}"
            )));
        }
        Ok(Self(delta))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Complementary weight 1 - delta.
    pub fn complement(&self) -> Weight {
        Weight(1.0 - self.0)
    }
}

/// Per-quadrature-point traces of a field on one face; `minus` is absent on
/// boundary faces.
#[derive(Clone, Debug)]
pub struct FaceTraces<T> {
    pub plus: Vec<T>,
    pub minus: Option<Vec<T>>,
}

impl<T: Clone> FaceTraces<T> {
    /// Relabel the two sides (used by the orientation-covariance tests).
    pub fn swapped(&self) -> Option<FaceTraces<T>> {
        self.minus.as_ref().map(|m| FaceTraces {
            plus: m.clone(),
            minus: Some(self.plus.clone()),
        })
    }
}

/// Traces of a broken vector field at the quadrature points of a face.
pub fn gather_vector_traces(
    tables: &ElementTables,
    mesh: &Mesh,
    u: &DGVector,
    face: &Face,
) -> FaceTraces<[f64; 3]> {
    let plus = tables.vector_at_face(u, face.plus, face.axis, face.local_side(face.plus));
    let minus = face
        .minus
        .map(|m| tables.vector_at_face(u, m, face.axis, face.local_side(m)));
    let _ = mesh;
    FaceTraces { plus, minus }
}

/// Traces of a broken symmetric-tensor field at the quadrature points of a face.
pub fn gather_tensor_traces(
    tables: &ElementTables,
    s: &DGTensorField,
    face: &Face,
) -> FaceTraces<SymTensor> {
    let plus = tables.tensor_at_face(s, face.plus, face.axis, face.local_side(face.plus));
    let minus = face
        .minus
        .map(|m| tables.tensor_at_face(s, m, face.axis, face.local_side(m)));
    FaceTraces { plus, minus }
}

/// Traces of the strain of a broken vector field at the face points.
pub fn gather_strain_traces(
    tables: &ElementTables,
    u: &DGVector,
    face: &Face,
) -> FaceTraces<SymTensor> {
    let plus = tables.strain_at_face(u, face.plus, face.axis, face.local_side(face.plus));
    let minus = face
        .minus
        .map(|m| tables.strain_at_face(u, m, face.axis, face.local_side(m)));
    FaceTraces { plus, minus }
}

/// Pointwise vector jump on an interior face: v+ (.) n+ + v- (.) n-.
pub fn jump_vector_point(v_plus: &[f64; 3], v_minus: &[f64; 3], n_plus: &[f64; 3]) -> SymTensor {
    let diff = [
        v_plus[0] - v_minus[0],
        v_plus[1] - v_minus[1],
        v_plus[2] - v_minus[2],
    ];
    SymTensor::sym_outer(&diff, n_plus)
}

/// Vector jump at every quadrature point of a face (boundary: v (.) n).
pub fn jump_vector(traces: &FaceTraces<[f64; 3]>, face: &Face) -> Vec<SymTensor> {
    match &traces.minus {
        Some(minus) => traces
            .plus
            .iter()
            .zip(minus)
            .map(|(p, m)| jump_vector_point(p, m, &face.normal))
            .collect(),
        None => traces
            .plus
            .iter()
            .map(|p| SymTensor::sym_outer(p, &face.normal))
            .collect(),
    }
}

/// Tensor jump at every quadrature point: tau+ n+ + tau- n-. Only defined on
/// interior faces.
pub fn jump_tensor(traces: &FaceTraces<SymTensor>, face: &Face) -> Result<Vec<[f64; 3]>> {
    let minus = traces.minus.as_ref().ok_or_else(|| {
        invalid(format!(
            "tensor jump undefined on boundary face {}",
            face.id
        ))
    })?;
    Ok(traces
        .plus
        .iter()
        .zip(minus)
        .map(|(p, m)| p.sub(m).mul_vec(&face.normal))
        .collect())
}

/// Weighted average of vector traces; the single trace on boundary faces.
pub fn weighted_average_vector(
    traces: &FaceTraces<[f64; 3]>,
    delta: Weight,
    _face: &Face,
) -> Vec<[f64; 3]> {
    match &traces.minus {
        Some(minus) => {
            let d = delta.value();
            traces
                .plus
                .iter()
                .zip(minus)
                .map(|(p, m)| {
                    [
                        d * p[0] + (1.0 - d) * m[0],
                        d * p[1] + (1.0 - d) * m[1],
                        d * p[2] + (1.0 - d) * m[2],
                    ]
                })
                .collect()
        }
        None => traces.plus.clone(),
    }
}

/// Weighted average of tensor traces; the single trace on boundary faces.
pub fn weighted_average_tensor(
    traces: &FaceTraces<SymTensor>,
    delta: Weight,
    _face: &Face,
) -> Vec<SymTensor> {
    match &traces.minus {
        Some(minus) => {
            let d = delta.value();
            traces
                .plus
                .iter()
                .zip(minus)
                .map(|(p, m)| p.lin(d, m, 1.0 - d))
                .collect()
        }
        None => traces.plus.clone(),
    }
}

/// Sum over elements of the boundary pairing <tau n_K, v>_{dK}, evaluated
/// element by element (each element sees only its own traces and outward
/// normal).
pub fn surface_pairing(
    tables: &ElementTables,
    mesh: &Mesh,
    s: &DGTensorField,
    v: &DGVector,
) -> f64 {
    let mut total = 0.0;
    for face in &mesh.faces {
        let mut sides = vec![(face.plus, 1.0)];
        if let Some(m) = face.minus {
            sides.push((m, -1.0));
        }
        for (elem, sign) in sides {
            let side = face.local_side(elem);
            let tau = tables.tensor_at_face(s, elem, face.axis, side);
            let vv = tables.vector_at_face(v, elem, face.axis, side);
            let n_k = [
                sign * face.normal[0],
                sign * face.normal[1],
                sign * face.normal[2],
            ];
            let w = &tables.face_weights[face.axis];
            for q in 0..tau.len() {
                let tn = tau[q].mul_vec(&n_k);
                total += w[q] * (tn[0] * vv[q][0] + tn[1] * vv[q][1] + tn[2] * vv[q][2]);
            }
        }
    }
    total
}

/// The same pairing computed through the face calculus:
/// `<{tau}, [[v]]>_{F_h} + <[[tau]], {v}>_{F_h^o}`.
pub fn surface_pairing_via_faces(
    tables: &ElementTables,
    mesh: &Mesh,
    s: &DGTensorField,
    v: &DGVector,
) -> f64 {
    let half = Weight::new(0.5).unwrap();
    let mut total = 0.0;
    for face in &mesh.faces {
        let tau_traces = gather_tensor_traces(tables, s, face);
        let v_traces = gather_vector_traces(tables, mesh, v, face);
        let tau_avg = weighted_average_tensor(&tau_traces, half, face);
        let v_jump = jump_vector(&v_traces, face);
        let w = &tables.face_weights[face.axis];
        for q in 0..tau_avg.len() {
            total += w[q] * tau_avg[q].dot(&v_jump[q]);
        }
        if face.minus.is_some() {
            let tau_jump = jump_tensor(&tau_traces, face).expect("interior face");
            let v_avg = weighted_average_vector(&v_traces, half, face);
            for q in 0..tau_jump.len() {
                total += w[q]
                    * (tau_jump[q][0] * v_avg[q][0]
                        + tau_jump[q][1] * v_avg[q][1]
                        + tau_jump[q][2] * v_avg[q][2]);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Basis;
    use crate::mesh::{build_cartesian_mesh, FaceKind, MeshConfig};
    use crate::rng::SplitMix64;

    fn setup(d: usize, n: usize, k: usize) -> (Mesh, ElementTables) {
        let mesh = build_cartesian_mesh(&MeshConfig::unit_box(d, n)).unwrap();
        let tables = ElementTables::new(&mesh, Basis::new(k, d).unwrap()).unwrap();
        (mesh, tables)
    }

    fn random_fields(
        tables: &ElementTables,
        mesh: &Mesh,
        rng: &mut SplitMix64,
    ) -> (DGTensorField, DGVector) {
        let n = tables.n_scalar();
        let mut s = DGTensorField::zeros(mesh.dim, n, mesh.n_elems());
        rng.fill_symmetric(&mut s.data);
        let mut v = DGVector::zeros(mesh.dim, n, mesh.n_elems());
        rng.fill_symmetric(&mut v.data);
        (s, v)
    }

    #[test]
    fn jump_of_continuous_vector_vanishes() {
        let (mesh, tables) = setup(2, 2, 2);
        // project a globally smooth field: continuous across faces
        let u = tables.project_vector(&mesh, &mut |x| [x[0] * x[1], x[0] + x[1], 0.0]);
        for face in mesh.faces.iter().filter(|f| !f.is_boundary()) {
            let traces = gather_vector_traces(&tables, &mesh, &u, face);
            for j in jump_vector(&traces, face) {
                assert!(j.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_jump_is_sym_outer() {
        let (mesh, tables) = setup(2, 1, 1);
        let u = tables.project_vector(&mesh, &mut |_| [1.0, 0.0, 0.0]);
        let face = mesh
            .faces
            .iter()
            .find(|f| f.is_boundary() && f.normal[0] > 0.0)
            .unwrap();
        let traces = gather_vector_traces(&tables, &mesh, &u, face);
        for j in jump_vector(&traces, face) {
            // v = (1,0), n = (1,0): [[1,0],[0,0]]
            assert!((j.c[0] - 1.0).abs() < 1e-13);
            assert!(j.c[1].abs() < 1e-13 && j.c[3].abs() < 1e-13);
        }
    }

    #[test]
    fn tensor_jump_examples() {
        let (mesh, tables) = setup(2, 2, 1);
        let face = mesh.faces.iter().find(|f| !f.is_boundary()).unwrap();

        // continuous tensor -> zero jump; equal traces -> zero jump
        let s = tables.project_tensor(&mesh, &mut |x| {
            let mut t = SymTensor::ZERO;
            t.c[0] = x[0];
            t.c[1] = x[1];
            t.c[3] = x[0] * x[1];
            t
        });
        let traces = gather_tensor_traces(&tables, &s, face);
        for j in jump_tensor(&traces, face).unwrap() {
            assert!(j.iter().all(|c| c.abs() < 1e-12));
        }

        // tau+ = I, tau- = 0 along an n = +e_a face gives jump = n
        let mut s = DGTensorField::zeros(2, tables.n_scalar(), mesh.n_elems());
        for i in 0..tables.n_scalar() {
            s.set(face.plus, 0, i, 1.0);
            s.set(face.plus, 1, i, 1.0);
        }
        let traces = gather_tensor_traces(&tables, &s, face);
        for j in jump_tensor(&traces, face).unwrap() {
            for a in 0..3 {
                assert!((j[a] - face.normal[a]).abs() < 1e-13);
            }
        }

        // boundary faces refuse tensor jumps
        let bface = mesh.faces.iter().find(|f| f.is_boundary()).unwrap();
        let btraces = gather_tensor_traces(&tables, &s, bface);
        assert!(jump_tensor(&btraces, bface).is_err());
    }

    #[test]
    fn weighted_average_rules() {
        let (mesh, tables) = setup(2, 2, 1);
        let face = mesh.faces.iter().find(|f| !f.is_boundary()).unwrap();
        let n = tables.n_scalar();

        let mut u = DGVector::zeros(2, n, mesh.n_elems());
        for i in 0..n {
            u.set(face.plus, 0, i, 2.0);
            u.set(face.minus.unwrap(), 0, i, 4.0);
        }
        let traces = gather_vector_traces(&tables, &mesh, &u, face);

        // delta = 1 picks the plus trace (ALT building block)
        for v in weighted_average_vector(&traces, Weight::new(1.0).unwrap(), face) {
            assert!((v[0] - 2.0).abs() < 1e-14);
        }
        // delta = 1/2 is the arithmetic mean
        for v in weighted_average_vector(&traces, Weight::new(0.5).unwrap(), face) {
            assert!((v[0] - 3.0).abs() < 1e-14);
        }
        // boundary faces ignore delta
        let bface = mesh
            .faces
            .iter()
            .find(|f| f.is_boundary() && f.plus == face.plus)
            .unwrap();
        let btraces = gather_vector_traces(&tables, &mesh, &u, bface);
        let avg = weighted_average_vector(&btraces, Weight::new(0.3).unwrap(), bface);
        for (a, p) in avg.iter().zip(&btraces.plus) {
            assert_eq!(a, p);
        }

        assert!(Weight::new(1.2).is_err());
        assert!(Weight::new(-0.1).is_err());
        assert!((Weight::new(0.3).unwrap().complement().value() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn surface_pairing_trivial_cases() {
        let (mesh, tables) = setup(2, 1, 1);
        let n = tables.n_scalar();
        // v = 0 -> 0
        let s = tables.project_tensor(&mesh, &mut |_| SymTensor::identity(2));
        let v0 = DGVector::zeros(2, n, mesh.n_elems());
        assert_eq!(surface_pairing(&tables, &mesh, &s, &v0), 0.0);
        // tau = I, v = const: integral of c . n over a closed surface is 0
        let v = tables.project_vector(&mesh, &mut |_| [0.7, -0.3, 0.0]);
        assert!(surface_pairing(&tables, &mesh, &s, &v).abs() < 1e-13);
    }

    #[test]
    fn element_loop_equals_face_loop() {
        let mut rng = SplitMix64::new(2024);
        for (d, cells, k) in [(2usize, 2usize, 1usize), (2, 2, 3), (3, 2, 2)] {
            let (mesh, tables) = setup(d, cells, k);
            for _ in 0..5 {
                let (s, v) = random_fields(&tables, &mesh, &mut rng);
                let lhs = surface_pairing(&tables, &mesh, &s, &v);
                let rhs = surface_pairing_via_faces(&tables, &mesh, &s, &v);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()),
                    "d={d} k={k}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn orientation_swap_is_invisible() {
        // relabelling the two sides (swap traces, negate the normal, replace
        // delta by 1-delta) leaves jumps and weighted averages unchanged
        let (mesh, tables) = setup(2, 2, 2);
        let mut rng = SplitMix64::new(31);
        let (s, v) = random_fields(&tables, &mesh, &mut rng);
        let face = mesh.faces.iter().find(|f| !f.is_boundary()).unwrap();
        let mut flipped = face.clone();
        for a in 0..3 {
            flipped.normal[a] = -face.normal[a];
        }

        let vt = gather_vector_traces(&tables, &mesh, &v, face);
        let j = jump_vector(&vt, face);
        let j_f = jump_vector(&vt.swapped().unwrap(), &flipped);
        for (a, b) in j.iter().zip(&j_f) {
            assert!(a.sub(b).norm() < 1e-13);
        }

        let st = gather_tensor_traces(&tables, &s, face);
        let tj = jump_tensor(&st, face).unwrap();
        let tj_f = jump_tensor(&st.swapped().unwrap(), &flipped).unwrap();
        for (a, b) in tj.iter().zip(&tj_f) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-13);
            }
        }

        let delta = Weight::new(0.3).unwrap();
        let avg = weighted_average_tensor(&st, delta, face);
        let avg_f = weighted_average_tensor(&st.swapped().unwrap(), delta.complement(), &flipped);
        for (a, b) in avg.iter().zip(&avg_f) {
            assert!(a.sub(b).norm() < 1e-13);
        }
    }

    #[test]
    fn local_side_mapping_consistency() {
        // traces taken from the two sides of an interior face sample the
        // same physical points: a globally continuous field agrees exactly
        let (mesh, tables) = setup(3, 2, 3);
        let u = tables.project_vector(&mesh, &mut |x| {
            [x[0] * x[1] * x[2], x[0] + 2.0 * x[1], x[2] * x[2]]
        });
        for face in mesh.faces.iter().filter(|f| f.kind == FaceKind::Interior) {
            let traces = gather_vector_traces(&tables, &mesh, &u, face);
            let minus = traces.minus.as_ref().unwrap();
            for (p, m) in traces.plus.iter().zip(minus) {
                for a in 0..3 {
                    assert!((p[a] - m[a]).abs() < 1e-12);
                }
            }
        }
    }
}
