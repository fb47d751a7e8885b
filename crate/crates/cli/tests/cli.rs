//! End-to-end checks of the command-line driver against temporary configs.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastodg"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elastodg-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_on_missing_args() {
    let out = bin().output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
}

#[test]
fn energy_run_writes_csv_and_is_deterministic() {
    let dir = tmp_dir("energy");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "mesh.dim = 2\nmesh.cells = 4 4\nfem.degree = 1\n\
         problem.name = conservation2d\ntime.final = 0.1\ntime.stride = 5\n",
    )
    .unwrap();
    let run = |out: &str| {
        let status = bin()
            .args(["energy", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(dir.join(out))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(dir.join(out).join("energy.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b, "energy CSV must be byte-identical across runs");
    assert!(a.starts_with("# elastodg energy report v1\nstep,t,energy,ratio\n"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn converge_emits_rate_table() {
    let dir = tmp_dir("conv");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "mesh.dim = 2\nmesh.cells = 4 4\nfem.degree = 1\nproblem.name = paper2d\n\
         time.final = 0.1\nconverge.levels = 2\nconverge.degrees = 1\nconverge.base_cells = 4\n",
    )
    .unwrap();
    let out = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("rates.csv")).unwrap();
    assert!(csv.contains("k,method,h,error,rate"));
    assert!(csv.contains("1,sip"));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("regression slope"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_config_exits_with_all_violations() {
    let dir = tmp_dir("bad");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "mesh.dim = 2\nmesh.cells = 4 4\nmethod.theta = 9\nbogus.key = 1\n",
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("theta"));
    assert!(err.contains("unknown key 'bogus.key'"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn nip_warning_is_surfaced() {
    let dir = tmp_dir("warn");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "mesh.dim = 2\nmesh.cells = 2 2\nmethod.theta = 1\n\
         problem.name = conservation2d\ntime.final = 0.02\n",
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability"));
    std::fs::remove_dir_all(&dir).ok();
}
