//! Shared helpers for the integration and acceptance suites: independently
//! coded dense oracles and the face-calculus identity checks, each returning
//! a worst-case deviation that the callers compare against their tolerance.

// each test binary compiles this module separately and uses a subset
#![allow(dead_code)]

use elastodg::basis::Basis;
use elastodg::field::{sym_slots, DGTensorField, DGVector};
use elastodg::ip::IpConfig;
use elastodg::manufactured::{ExactSolution, Problem};
use elastodg::material::MaterialField;
use elastodg::mesh::{build_cartesian_mesh, FaceKind, Mesh, MeshConfig};
use elastodg::mixed::{self, MixedConfig, SigmaSolver};
use elastodg::rng::SplitMix64;
use elastodg::tables::ElementTables;
use elastodg::timestep::{spectral_dt, IpSystem, SecondOrderSystem};
use elastodg::trace::{self, Weight};
use nalgebra::{DMatrix, DVector};

pub fn setup(d: usize, cells: usize, k: usize) -> (Mesh, ElementTables, MaterialField) {
    let mesh = build_cartesian_mesh(&MeshConfig::unit_box(d, cells)).unwrap();
    let tables = ElementTables::new(&mesh, Basis::new(k, d).unwrap()).unwrap();
    let mat = MaterialField::uniform(&mesh, 1.0, 1.0, 1.0).unwrap();
    (mesh, tables, mat)
}

pub fn random_vector(rng: &mut SplitMix64, tables: &ElementTables, mesh: &Mesh) -> DGVector {
    let mut v = DGVector::zeros(tables.dim, tables.n_scalar(), mesh.n_elems());
    rng.fill_symmetric(&mut v.data);
    v
}

pub fn random_tensor(rng: &mut SplitMix64, tables: &ElementTables, mesh: &Mesh) -> DGTensorField {
    let mut s = DGTensorField::zeros(tables.dim, tables.n_scalar(), mesh.n_elems());
    rng.fill_symmetric(&mut s.data);
    s
}

/// Relative deviation |a - b| / (1 + |a| + |b|).
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs() + b.abs())
}

/// Worst deviation of the element-loop surface pairing against its
/// jump/average face decomposition over `n_fields` random field pairs.
pub fn pairing_identity_worst(
    mesh: &Mesh,
    tables: &ElementTables,
    n_fields: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_fields {
        let s = random_tensor(&mut rng, tables, mesh);
        let v = random_vector(&mut rng, tables, mesh);
        let lhs = trace::surface_pairing(tables, mesh, &s, &v);
        let rhs = trace::surface_pairing_via_faces(tables, mesh, &s, &v);
        worst = worst.max(rel_dev(lhs, rhs));
    }
    worst
}

/// Worst pointwise deviation of {tau}_delta n = {tau} n + (2delta-1)/2 [[tau]]
/// over `n_fields` random tensors with random weights.
pub fn average_decomposition_worst(
    mesh: &Mesh,
    tables: &ElementTables,
    n_fields: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_fields {
        let s = random_tensor(&mut rng, tables, mesh);
        let delta = Weight::new(rng.next_f64()).unwrap();
        for face in mesh.faces.iter().filter(|f| !f.is_boundary()) {
            let traces = trace::gather_tensor_traces(tables, &s, face);
            let avg_d = trace::weighted_average_tensor(&traces, delta, face);
            let avg = trace::weighted_average_tensor(&traces, Weight::new(0.5).unwrap(), face);
            let jump = trace::jump_tensor(&traces, face).unwrap();
            let coef = (2.0 * delta.value() - 1.0) / 2.0;
            for q in 0..avg_d.len() {
                let lhs = avg_d[q].mul_vec(&face.normal);
                let base = avg[q].mul_vec(&face.normal);
                for c in 0..3 {
                    worst = worst.max(rel_dev(lhs[c], base[c] + coef * jump[q][c]));
                }
            }
        }
    }
    worst
}

/// Worst deviation of the average-defect transposition identity
/// -<{u}_{1-d} - {u}, [[D eps u]]> = <{D eps u}_d - {D eps u}, [[u]]>.
pub fn defect_transposition_worst(
    mesh: &Mesh,
    tables: &ElementTables,
    material: &MaterialField,
    n_fields: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    let half = Weight::new(0.5).unwrap();
    for _ in 0..n_fields {
        let u = random_vector(&mut rng, tables, mesh);
        let delta = Weight::new(rng.next_f64()).unwrap();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for face in mesh.faces.iter().filter(|f| !f.is_boundary()) {
            let wq = &tables.face_weights[face.axis];
            let u_traces = trace::gather_vector_traces(tables, mesh, &u, face);
            let strain_traces = trace::gather_strain_traces(tables, &u, face);
            let stress = trace::FaceTraces {
                plus: strain_traces
                    .plus
                    .iter()
                    .map(|e| material.apply_stiffness_at(face.plus, e))
                    .collect::<Vec<_>>(),
                minus: strain_traces.minus.as_ref().map(|m| {
                    m.iter()
                        .map(|e| material.apply_stiffness_at(face.minus.unwrap(), e))
                        .collect::<Vec<_>>()
                }),
            };
            let u_1md = trace::weighted_average_vector(&u_traces, delta.complement(), face);
            let u_avg = trace::weighted_average_vector(&u_traces, half, face);
            let s_jump = trace::jump_tensor(&stress, face).unwrap();
            let s_avg_d = trace::weighted_average_tensor(&stress, delta, face);
            let s_avg = trace::weighted_average_tensor(&stress, half, face);
            let u_jump = trace::jump_vector(&u_traces, face);
            for q in 0..wq.len() {
                let du = [
                    u_1md[q][0] - u_avg[q][0],
                    u_1md[q][1] - u_avg[q][1],
                    u_1md[q][2] - u_avg[q][2],
                ];
                lhs -= wq[q] * (du[0] * s_jump[q][0] + du[1] * s_jump[q][1] + du[2] * s_jump[q][2]);
                rhs += wq[q] * s_avg_d[q].sub(&s_avg[q]).dot(&u_jump[q]);
            }
        }
        worst = worst.max(rel_dev(lhs, rhs));
    }
    worst
}

/// Worst deviation of the non-symmetrized vs symmetrized jump pairing
/// against symmetric averages.
pub fn nonsymmetric_jump_worst(
    mesh: &Mesh,
    tables: &ElementTables,
    n_fields: usize,
    seed: u64,
) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let half = Weight::new(0.5).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..n_fields {
        let s = random_tensor(&mut rng, tables, mesh);
        let v = random_vector(&mut rng, tables, mesh);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for face in mesh.faces.iter().filter(|f| !f.is_boundary()) {
            let wq = &tables.face_weights[face.axis];
            let v_traces = trace::gather_vector_traces(tables, mesh, &v, face);
            let s_traces = trace::gather_tensor_traces(tables, &s, face);
            let s_avg = trace::weighted_average_tensor(&s_traces, half, face);
            let v_jump = trace::jump_vector(&v_traces, face);
            let minus = v_traces.minus.as_ref().unwrap();
            for q in 0..wq.len() {
                let n = face.normal;
                let vp = v_traces.plus[q];
                let vm = minus[q];
                let a = &s_avg[q];
                let m = [
                    [a.c[0], a.c[3], a.c[4]],
                    [a.c[3], a.c[1], a.c[5]],
                    [a.c[4], a.c[5], a.c[2]],
                ];
                let mut dot = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        dot += (vp[i] - vm[i]) * n[j] * m[i][j];
                    }
                }
                lhs += wq[q] * dot;
                rhs += wq[q] * v_jump[q].dot(a);
            }
        }
        worst = worst.max(rel_dev(lhs, rhs));
    }
    worst
}

/// Max coefficient difference between the element-local LDG stress recovery
/// and an independently assembled dense solve on a 2x2 mesh.
pub fn ldg_dense_recovery_diff(seed: u64) -> f64 {
    let (mesh, tables, mat) = setup(2, 2, 1);
    let cfg = MixedConfig::ldg(0.35, 1.0);
    let solver = SigmaSolver::new(&cfg);
    let n = tables.n_scalar();
    let nc = sym_slots(2).len();
    let n_dof = mesh.n_elems() * nc * n;
    let mut rng = SplitMix64::new(seed);
    let mut u = DGVector::zeros(2, n, mesh.n_elems());
    rng.fill_symmetric(&mut u.data);

    let dof = |e: usize, c: usize, p: usize| (e * nc + c) * n + p;
    let basis_field = |e: usize, c: usize, p: usize| {
        let mut s = DGTensorField::zeros(2, n, mesh.n_elems());
        s.set(e, c, p, 1.0);
        s
    };

    let mut amat = DMatrix::<f64>::zeros(n_dof, n_dof);
    for e in 0..mesh.n_elems() {
        for cj in 0..nc {
            for pj in 0..n {
                let tau_j = basis_field(e, cj, pj);
                let vals_j = tables.tensor_at_volume(&tau_j, e);
                for ci in 0..nc {
                    for pi in 0..n {
                        let tau_i = basis_field(e, ci, pi);
                        let vals_i = tables.tensor_at_volume(&tau_i, e);
                        let mut acc = 0.0;
                        for q in 0..tables.vol_rule.len() {
                            let a_tau = mat.apply_compliance_at(e, &vals_j[q]);
                            acc += tables.vol_weights[q] * a_tau.dot(&vals_i[q]);
                        }
                        amat[(dof(e, ci, pi), dof(e, cj, pj))] = acc;
                    }
                }
            }
        }
    }

    let half = Weight::new(0.5).unwrap();
    let delta = Weight::new(cfg.delta).unwrap();
    let mut rhs = DVector::<f64>::zeros(n_dof);
    for e in 0..mesh.n_elems() {
        let eps_u = tables.strain_at_volume(&u, e);
        for c in 0..nc {
            for p in 0..n {
                let tau = basis_field(e, c, p);
                let vals = tables.tensor_at_volume(&tau, e);
                let mut acc = 0.0;
                for q in 0..tables.vol_rule.len() {
                    acc += tables.vol_weights[q] * eps_u[q].dot(&vals[q]);
                }
                for face in &mesh.faces {
                    if face.kind == FaceKind::Neumann || (face.plus != e && face.minus != Some(e)) {
                        continue;
                    }
                    let wq = &tables.face_weights[face.axis];
                    let u_traces = trace::gather_vector_traces(&tables, &mesh, &u, face);
                    let tau_traces = trace::gather_tensor_traces(&tables, &tau, face);
                    let u_jump = trace::jump_vector(&u_traces, face);
                    let tau_avg = trace::weighted_average_tensor(&tau_traces, half, face);
                    if !face.is_boundary() {
                        let u_1md =
                            trace::weighted_average_vector(&u_traces, delta.complement(), face);
                        let u_avg = trace::weighted_average_vector(&u_traces, half, face);
                        let tau_jump = trace::jump_tensor(&tau_traces, face).unwrap();
                        for q in 0..wq.len() {
                            let du = [
                                u_1md[q][0] - u_avg[q][0],
                                u_1md[q][1] - u_avg[q][1],
                                u_1md[q][2] - u_avg[q][2],
                            ];
                            acc += wq[q]
                                * (du[0] * tau_jump[q][0]
                                    + du[1] * tau_jump[q][1]
                                    + du[2] * tau_jump[q][2]);
                            acc -= wq[q] * u_jump[q].dot(&tau_avg[q]);
                        }
                    } else {
                        for q in 0..wq.len() {
                            acc -= wq[q] * u_jump[q].dot(&tau_avg[q]);
                        }
                    }
                }
                rhs[dof(e, c, p)] = acc;
            }
        }
    }

    let dense = amat.lu().solve(&rhs).expect("dense sigma solve");
    let local = mixed::recover_sigma(&mesh, &tables, &mat, &cfg, &solver, &u, None, 0.0).unwrap();
    let mut max_diff = 0.0f64;
    for e in 0..mesh.n_elems() {
        for c in 0..nc {
            for p in 0..n {
                let i = local.idx(e, c, p);
                max_diff = max_diff.max((local.data[i] - dense[dof(e, c, p)]).abs());
            }
        }
    }
    max_diff
}

/// Relative difference between the power-iteration stability bound and a
/// dense generalized eigensolve of the exported (K, M) pair.
pub fn spectral_vs_dense_rel(seed: u64) -> f64 {
    let (mesh, tables, mat) = setup(2, 4, 1);
    let problem = Problem::from_name("conservation2d", 1.0, 1.0, 1.0).unwrap();
    let sys = IpSystem::new(&mesh, &tables, &mat, &problem, IpConfig::default()).unwrap();
    let n = 2 * tables.n_scalar() * mesh.n_elems();

    let mut buf = Vec::new();
    sys.op.stiffness.write_coo(&mut buf).unwrap();
    let mut kmat = DMatrix::<f64>::zeros(n, n);
    for line in String::from_utf8(buf).unwrap().lines() {
        let mut it = line.split_whitespace();
        let r: usize = it.next().unwrap().parse().unwrap();
        let c: usize = it.next().unwrap().parse().unwrap();
        let v: f64 = it.next().unwrap().parse().unwrap();
        kmat[(r, c)] += v;
    }
    let mut mmat = DMatrix::<f64>::zeros(n, n);
    let mut x = sys.new_vector();
    let mut y = sys.new_vector();
    for j in 0..n {
        x.fill(0.0);
        x.data[j] = 1.0;
        sys.mass_apply(&x, &mut y);
        for i in 0..n {
            mmat[(i, j)] = y.data[i];
        }
    }
    let l_inv = mmat
        .cholesky()
        .expect("mass SPD")
        .l()
        .try_inverse()
        .unwrap();
    let s = &l_inv * &kmat * l_inv.transpose();
    let s = (s.clone() + s.transpose()) * 0.5;
    let lmax = s
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let dense_dt = 2.0 / lmax.sqrt();
    let power_dt = spectral_dt(&sys, seed).unwrap();
    (dense_dt - power_dt).abs() / dense_dt
}

/// Worst residual |rho u_tt - div sigma - f| of the closed-form forcing
/// against the sixth-order finite-difference oracle at random points.
pub fn forcing_fd_worst(n_points: usize, seed: u64) -> f64 {
    let d1 = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| {
        (-f(x - 3.0 * h) + 9.0 * f(x - 2.0 * h) - 45.0 * f(x - h) + 45.0 * f(x + h)
            - 9.0 * f(x + 2.0 * h)
            + f(x + 3.0 * h))
            / (60.0 * h)
    };
    let d2 = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| {
        (2.0 * f(x - 3.0 * h) - 27.0 * f(x - 2.0 * h) + 270.0 * f(x - h) - 490.0 * f(x)
            + 270.0 * f(x + h)
            - 27.0 * f(x + 2.0 * h)
            + 2.0 * f(x + 3.0 * h))
            / (180.0 * h * h)
    };
    let h = 1e-3;
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for i in 0..n_points {
        let dim = if i % 2 == 0 { 2 } else { 3 };
        let sol = ExactSolution::new(dim, 1.0, 1.0, 1.0).unwrap();
        let x = [
            0.05 + 0.9 * rng.next_f64(),
            0.05 + 0.9 * rng.next_f64(),
            0.05 + 0.9 * rng.next_f64(),
        ];
        let t = 0.05 + rng.next_f64();
        let f = sol.forcing(&x, t);
        for c in 0..dim {
            let ft = |s: f64| sol.displacement(&x, s)[c];
            let utt = d2(&ft, t, h);
            let mut div = 0.0;
            for a in 0..dim {
                let fs = |s: f64| {
                    let mut xs = x;
                    xs[a] = s;
                    let sig = sol.stress(&xs, t);
                    let m = [
                        [sig.c[0], sig.c[3], sig.c[4]],
                        [sig.c[3], sig.c[1], sig.c[5]],
                        [sig.c[4], sig.c[5], sig.c[2]],
                    ];
                    m[c][a]
                };
                div += d1(&fs, x[a], h);
            }
            worst = worst.max((sol.rho * utt - div - f[c]).abs());
        }
    }
    worst
}
