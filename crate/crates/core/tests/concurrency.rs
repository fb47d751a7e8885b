//! The assembled objects are immutable plain data: assert they can be
//! shared across threads, which is what the parallel-assembly contracts
//! promise.

use elastodg::basis::Basis;
use elastodg::ip::{assemble_ip, IpConfig, IpOperator};
use elastodg::material::MaterialField;
use elastodg::mesh::{build_cartesian_mesh, Mesh, MeshConfig};
use elastodg::tables::ElementTables;

fn assert_send_sync<T: Send + Sync>() {}

#[test]
fn solver_types_are_shareable() {
    assert_send_sync::<Mesh>();
    assert_send_sync::<ElementTables>();
    assert_send_sync::<MaterialField>();
    assert_send_sync::<IpOperator>();
    assert_send_sync::<elastodg::field::DGVector>();
    assert_send_sync::<elastodg::field::DGTensorField>();
}

#[test]
fn shared_operator_matvec_from_threads() {
    let mesh = build_cartesian_mesh(&MeshConfig::unit_box(2, 3)).unwrap();
    let tables = ElementTables::new(&mesh, Basis::new(1, 2).unwrap()).unwrap();
    let mat = MaterialField::uniform(&mesh, 1.0, 1.0, 1.0).unwrap();
    let op = assemble_ip(&mesh, &tables, &mat, IpConfig::default()).unwrap();
    let mut x = elastodg::field::DGVector::zeros(2, tables.n_scalar(), mesh.n_elems());
    elastodg::rng::SplitMix64::new(1).fill_symmetric(&mut x.data);

    let mut reference = elastodg::field::DGVector::zeros_like(&x);
    op.stiffness.matvec(&x, &mut reference);

    std::thread::scope(|scope| {
        for _ in 0..4 {
            let op = &op;
            let x = &x;
            let reference = &reference;
            scope.spawn(move || {
                let mut y = elastodg::field::DGVector::zeros_like(x);
                op.stiffness.matvec(x, &mut y);
                assert_eq!(y.data, reference.data);
            });
        }
    });
}

#[test]
fn mesh_summary_prints() {
    let mesh = build_cartesian_mesh(&MeshConfig::unit_box(2, 4)).unwrap();
    let text = format!("{mesh}");
    assert!(text.contains("16 elements"));
    assert!(text.contains("interior"));
}
