//! Config-driven experiment drivers: single runs, convergence sweeps,
//! conservation traces, and time-step restriction scans. The CLI is a thin
//! shell over these; the acceptance suite calls them directly.

use crate::basis::Basis;
use crate::config::{Formulation, RunConfig};
use crate::diagnostics::{convergence_rates, EnergyReport, RateTable};
use crate::manufactured::Problem;
use crate::material::MaterialField;
use crate::mesh::{build_cartesian_mesh, Mesh, MeshConfig};
use crate::tables::ElementTables;
use crate::timestep::{
    estimate_dt, run_simulation, IpSystem, MixedSystem, ResolvedTime, RunOptions,
    SecondOrderSystem, Trajectory,
};
use crate::{Error, Result};

/// Mesh, tabulations, material and problem for one run.
pub struct Setup {
    pub mesh: Mesh,
    pub tables: ElementTables,
    pub material: MaterialField,
    pub problem: Problem,
}

/// Build everything a run needs from a validated config.
pub fn build_setup(cfg: &RunConfig) -> Result<Setup> {
    build_setup_sized(cfg, &cfg.mesh, cfg.degree)
}

fn build_setup_sized(cfg: &RunConfig, mesh_cfg: &MeshConfig, degree: usize) -> Result<Setup> {
    let mesh = build_cartesian_mesh(mesh_cfg)?;
    let tables = ElementTables::new(&mesh, Basis::new(degree, mesh_cfg.dim)?)?;
    let material = cfg.build_material(&mesh)?;
    let problem = cfg.build_problem()?;
    Ok(Setup {
        mesh,
        tables,
        material,
        problem,
    })
}

fn with_system<T>(
    cfg: &RunConfig,
    setup: &Setup,
    f: &mut dyn FnMut(&dyn SecondOrderSystem) -> Result<T>,
) -> Result<T> {
    match &cfg.formulation {
        Formulation::Ip(ip_cfg) => {
            let sys = IpSystem::new(
                &setup.mesh,
                &setup.tables,
                &setup.material,
                &setup.problem,
                *ip_cfg,
            )?;
            f(&sys)
        }
        Formulation::Mixed(m_cfg) => {
            let sys = MixedSystem::new(
                &setup.mesh,
                &setup.tables,
                &setup.material,
                &setup.problem,
                *m_cfg,
            )?;
            f(&sys)
        }
    }
}

/// Outcome of a plain `run` invocation.
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub csv: String,
    pub summary: String,
}

/// Integrate the configured problem once and emit the trajectory CSV.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let setup = build_setup(cfg)?;
    let traj = with_system(cfg, &setup, &mut |sys| {
        let rt = cfg
            .time
            .resolve(sys, &setup.mesh, &setup.material, cfg.degree)?;
        run_simulation(sys, &rt, &RunOptions::default())
    })?;
    let csv = traj.report.to_trajectory_csv();
    let summary = match traj.blown_up {
        Some(step) => format!(
            "ABORTED: blow-up at step {step} (dt = {:.6e}); see trajectory CSV",
            traj.dt
        ),
        None => format!(
            "completed {} steps at dt = {:.6e}; max energy ratio {:.6e}{}",
            traj.n_steps,
            traj.dt,
            traj.report.max_ratio(),
            traj.report
                .max_error()
                .map(|e| format!("; max energy error {e:.6e}"))
                .unwrap_or_default()
        ),
    };
    Ok(RunOutcome {
        trajectory: traj,
        csv,
        summary,
    })
}

/// Outcome of an energy-conservation run.
pub struct EnergyOutcome {
    pub report: EnergyReport,
    pub csv: String,
    pub max_ratio: f64,
}

/// Run the configured zero-forcing problem and report the energy ratio
/// series. Blow-ups abort with diagnostics.
pub fn cmd_energy(cfg: &RunConfig) -> Result<EnergyOutcome> {
    if cfg.build_problem()?.has_loads() {
        return Err(Error::InvalidArgument(
            "energy requires a zero-forcing problem (conservation* or zero*)".into(),
        ));
    }
    let setup = build_setup(cfg)?;
    let traj = with_system(cfg, &setup, &mut |sys| {
        let rt = cfg
            .time
            .resolve(sys, &setup.mesh, &setup.material, cfg.degree)?;
        run_simulation(sys, &rt, &RunOptions::default())
    })?;
    if let Some(step) = traj.blown_up {
        return Err(Error::BlowUp {
            step,
            time: step as f64 * traj.dt,
        });
    }
    let max_ratio = traj.report.max_ratio();
    let mut csv = traj.report.to_csv();
    csv.push_str(&format!("# max_ratio,{max_ratio:.12e}\n"));
    Ok(EnergyOutcome {
        report: traj.report,
        csv,
        max_ratio,
    })
}

/// One cell of a convergence sweep.
#[derive(Clone, Debug)]
pub struct ConvergeCell {
    pub degree: usize,
    pub h: f64,
    pub cells: usize,
    /// Max-over-strides error in the augmented energy norm; None if the run
    /// blew up.
    pub error: Option<f64>,
}

/// Outcome of a convergence sweep.
pub struct ConvergeOutcome {
    pub tables: Vec<RateTable>,
    pub cells: Vec<ConvergeCell>,
    pub csv: String,
    pub text: String,
    /// Human-readable notes for aborted cells.
    pub aborted: Vec<String>,
}

/// Run the (degree, level) sweep, recording the max-over-strides energy
/// error per cell and the per-degree rate tables. A blow-up aborts only its
/// own cell, which is flagged instead of tabulated.
pub fn cmd_converge(cfg: &RunConfig) -> Result<ConvergeOutcome> {
    if cfg.build_problem()?.exact().is_none() {
        return Err(Error::InvalidArgument(
            "converge requires a manufactured problem with an exact solution".into(),
        ));
    }
    let mut cells_out = Vec::new();
    let mut tables = Vec::new();
    let mut aborted = Vec::new();
    let method = cfg.formulation.name();

    for &k in &cfg.converge.degrees {
        let mut data = Vec::new();
        let mut chain_broken = false;
        for level in 0..cfg.converge.levels {
            let n = cfg.converge.base_cells << level;
            let mut mesh_cfg = cfg.mesh.clone();
            mesh_cfg.cells = vec![n; mesh_cfg.dim];
            let setup = build_setup_sized(cfg, &mesh_cfg, k)?;
            let h = (0..mesh_cfg.dim)
                .map(|a| (mesh_cfg.hi[a] - mesh_cfg.lo[a]) / n as f64)
                .fold(0.0f64, f64::max);
            let traj = with_system(cfg, &setup, &mut |sys| {
                let rt = cfg.time.resolve(sys, &setup.mesh, &setup.material, k)?;
                run_simulation(sys, &rt, &RunOptions::default())
            })?;
            let error = match traj.blown_up {
                Some(step) => {
                    aborted.push(format!("k={k} h={h:.6e}: blow-up at step {step}"));
                    chain_broken = true;
                    None
                }
                None => traj.report.max_error(),
            };
            cells_out.push(ConvergeCell {
                degree: k,
                h,
                cells: n,
                error,
            });
            if let (Some(e), false) = (error, chain_broken) {
                data.push((h, e));
            }
        }
        if !data.is_empty() {
            tables.push(convergence_rates(k, &method, &data)?);
        }
    }

    let mut csv = String::from("# elastodg rate table v1\nk,method,h,error,rate\n");
    let mut text = String::new();
    for t in &tables {
        // skip each table's own header; one shared header above
        for line in t.to_csv().lines().skip(2) {
            csv.push_str(line);
            csv.push('\n');
        }
        text.push_str(&t.to_text());
        text.push('\n');
    }
    for note in &aborted {
        csv.push_str(&format!("# aborted,{note}\n"));
        text.push_str(&format!("aborted: {note}\n"));
    }
    Ok(ConvergeOutcome {
        tables,
        cells: cells_out,
        csv,
        text,
        aborted,
    })
}

/// Outcome of a time-step restriction scan.
pub struct DtScanOutcome {
    pub rows: Vec<(f64, f64)>,
    pub csv: String,
    /// Whether the critical dt is non-increasing in c_f.
    pub monotone: bool,
}

/// For each damping constant, bisect the blow-up threshold dt* (the run is
/// declared unstable when the energy ratio exceeds 1e6 within the horizon).
pub fn cmd_dtscan(cfg: &RunConfig, seed: u64) -> Result<DtScanOutcome> {
    let Formulation::Ip(ip_cfg) = &cfg.formulation else {
        return Err(Error::InvalidArgument(
            "dtscan requires the ip formulation".into(),
        ));
    };
    let mut rows = Vec::new();
    for &c_f in &cfg.dtscan.c_f_values {
        let mut scan_cfg = cfg.clone();
        scan_cfg.formulation = Formulation::Ip(crate::ip::IpConfig { c_f, ..*ip_cfg });
        let setup = build_setup(&scan_cfg)?;
        let dt_star = with_system(&scan_cfg, &setup, &mut |sys| {
            critical_dt(
                sys,
                &setup.mesh,
                &setup.material,
                cfg.dtscan.t_final,
                cfg.degree,
                seed,
            )
        })?;
        rows.push((c_f, dt_star));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-6));
    let mut csv = String::from("# elastodg dtscan v1\nc_f,critical_dt\n");
    for (c_f, dt) in &rows {
        csv.push_str(&format!("{c_f:.6e},{dt:.9e}\n"));
    }
    if !monotone {
        csv.push_str("# warning: critical dt is not monotone in c_f\n");
    }
    Ok(DtScanOutcome {
        rows,
        csv,
        monotone,
    })
}

/// Bisect the stability threshold of the leapfrog scheme for one system.
pub fn critical_dt(
    system: &dyn SecondOrderSystem,
    mesh: &Mesh,
    material: &MaterialField,
    t_final: f64,
    degree: usize,
    seed: u64,
) -> Result<f64> {
    // small seeded noise excites every mode so weak instabilities surface
    let (_, v0) = system.initial_state();
    let amp = 1e-8 * (1.0 + v0.norm2() / (v0.data.len() as f64).sqrt());
    let opts = RunOptions {
        perturb: Some((amp, seed)),
    };

    let blows = |dt: f64| -> Result<bool> {
        let n = (t_final / dt).ceil().max(2.0) as usize;
        let rt = ResolvedTime {
            dt,
            n_steps: n,
            stride: 5,
        };
        Ok(run_simulation(system, &rt, &opts)?.blown_up.is_some())
    };

    // bracket the threshold starting from the CFL heuristic
    let mut lo = estimate_dt(mesh, material, degree, 0.25);
    let mut shrinks = 0;
    while blows(lo)? {
        lo /= 2.0;
        shrinks += 1;
        if shrinks > 60 {
            return Err(Error::solver("dtscan: no stable dt found while bracketing"));
        }
    }
    let mut hi = lo * 1.5;
    let mut grows = 0;
    while !blows(hi)? {
        lo = hi;
        hi *= 1.5;
        grows += 1;
        if grows > 80 {
            return Err(Error::solver(
                "dtscan: no unstable dt found while bracketing",
            ));
        }
    }
    // geometric bisection to 0.1% width
    while hi / lo > 1.001 {
        let mid = (lo * hi).sqrt();
        if blows(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    #[test]
    fn run_and_energy_on_tiny_meshes() {
        let cfg = parse_config_str(
            "mesh.dim = 2\nmesh.cells = 2 2\nfem.degree = 1\n\
             problem.name = conservation2d\ntime.final = 0.05\ntime.stride = 2\n",
        )
        .unwrap();
        let out = cmd_run(&cfg).unwrap();
        assert!(out.trajectory.blown_up.is_none());
        assert!(out.csv.contains("step,t,energy_norm"));
        let e = cmd_energy(&cfg).unwrap();
        assert!(
            e.max_ratio > 0.9 && e.max_ratio < 1.1,
            "ratio {}",
            e.max_ratio
        );
        assert!(e.csv.contains("max_ratio"));
    }

    #[test]
    fn energy_rejects_forced_problems() {
        let cfg = parse_config_str(
            "mesh.dim = 2\nmesh.cells = 2 2\nproblem.name = paper2d\ntime.final = 0.05\n",
        )
        .unwrap();
        assert!(cmd_energy(&cfg).is_err());
    }

    #[test]
    fn converge_single_level_has_errors_but_no_rates() {
        let cfg = parse_config_str(
            "mesh.dim = 2\nmesh.cells = 4 4\nproblem.name = paper2d\n\
             time.final = 0.05\nconverge.levels = 1\nconverge.degrees = 1\n\
             converge.base_cells = 2\n",
        )
        .unwrap();
        let out = cmd_converge(&cfg).unwrap();
        assert!(out.aborted.is_empty());
        assert_eq!(out.tables.len(), 1);
        assert_eq!(out.tables[0].rows.len(), 1);
        assert!(out.tables[0].rows[0].rate.is_none());
        assert!(out.tables[0].regression_rate.is_none());
        assert!(out.cells[0].error.unwrap() > 0.0);
    }

    #[test]
    fn converge_requires_exact_solution() {
        let cfg = parse_config_str("mesh.dim = 2\nmesh.cells = 2 2\n").unwrap();
        assert!(cmd_converge(&cfg).is_err());
    }

    #[test]
    fn deterministic_csv_output() {
        let text = "mesh.dim = 2\nmesh.cells = 2 2\nproblem.name = conservation2d\n\
                    time.final = 0.05\ntime.stride = 2\n";
        let a = cmd_energy(&parse_config_str(text).unwrap()).unwrap().csv;
        let b = cmd_energy(&parse_config_str(text).unwrap()).unwrap().csv;
        assert_eq!(a, b);
    }

    #[test]
    fn blow_up_flags_only_its_own_cell() {
        // a fixed, far-too-large dt makes every level blow up; the sweep
        // still completes and flags the cells instead of erroring out
        let cfg = parse_config_str(
            "mesh.dim = 2\nmesh.cells = 4 4\nproblem.name = paper2d\n\
             time.dt = 0.2\ntime.final = 1.0\nconverge.levels = 2\n\
             converge.degrees = 2\nconverge.base_cells = 2\n",
        )
        .unwrap();
        let out = cmd_converge(&cfg).unwrap();
        assert_eq!(out.aborted.len(), 2, "{:?}", out.aborted);
        assert!(out.cells.iter().all(|c| c.error.is_none()));
        assert!(out.csv.contains("# aborted"));
    }

    #[test]
    fn dtscan_requires_ip() {
        let cfg = parse_config_str(
            "mesh.dim = 2\nmesh.cells = 2 2\nmethod.formulation = mixed\n\
             problem.name = conservation2d\n",
        )
        .unwrap();
        assert!(cmd_dtscan(&cfg, 0).is_err());
    }
}
