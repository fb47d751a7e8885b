//! Browser front end for the 2D wave solvers: an interactive displacement
//! field, its energy-ratio trace, and a critical-time-step probe, exposed
//! through wasm-bindgen to a single static page (see `www/index.html`).
//!
//! The crate also compiles natively so the glue logic stays under ordinary
//! `cargo test`.

use elastodg::basis::Basis;
use elastodg::field::DGVector;
use elastodg::ip::{assemble_ip, assemble_ip_rhs, IpConfig, IpOperator};
use elastodg::manufactured::Problem;
use elastodg::material::MaterialField;
use elastodg::mesh::{build_cartesian_mesh, Mesh, MeshConfig};
use elastodg::mixed::{self, MixedConfig, SigmaSolver};
use elastodg::tables::{ElementTables, MassOperator};
use elastodg::timestep::{
    leapfrog_init, leapfrog_step, run_simulation, LeapfrogState, ResolvedTime, RunOptions,
    SecondOrderSystem,
};
use wasm_bindgen::prelude::*;

enum Discretization {
    Ip {
        op: IpOperator,
    },
    Mixed {
        cfg: MixedConfig,
        solver: SigmaSolver,
        mass: MassOperator,
    },
}

/// Owning semi-discrete system; the library systems borrow their setup, the
/// browser object has to own it.
struct DemoSystem {
    mesh: Mesh,
    tables: ElementTables,
    material: MaterialField,
    problem: Problem,
    disc: Discretization,
}

impl SecondOrderSystem for DemoSystem {
    fn shape(&self) -> (usize, usize, usize) {
        (self.tables.dim, self.tables.n_scalar(), self.mesh.n_elems())
    }

    fn initial_state(&self) -> (DGVector, DGVector) {
        let u0 = self
            .tables
            .project_vector(&self.mesh, &mut |x| self.problem.initial_displacement(x));
        let v0 = self
            .tables
            .project_vector(&self.mesh, &mut |x| self.problem.initial_velocity(x));
        (u0, v0)
    }

    fn mass_apply(&self, x: &DGVector, out: &mut DGVector) {
        match &self.disc {
            Discretization::Ip { op } => op.mass.apply(&self.tables, x, out),
            Discretization::Mixed { mass, .. } => mass.apply(&self.tables, x, out),
        }
    }

    fn mass_solve(&self, r: &mut DGVector) {
        match &self.disc {
            Discretization::Ip { op } => op.mass.solve_in_place(&self.tables, r),
            Discretization::Mixed { mass, .. } => mass.solve_in_place(&self.tables, r),
        }
    }

    fn stiffness_apply(&self, u: &DGVector, out: &mut DGVector) -> elastodg::Result<()> {
        match &self.disc {
            Discretization::Ip { op } => {
                op.stiffness.matvec(u, out);
                Ok(())
            }
            Discretization::Mixed { cfg, solver, .. } => {
                *out = mixed::composed_apply(
                    &self.mesh,
                    &self.tables,
                    &self.material,
                    cfg,
                    solver,
                    u,
                )?;
                Ok(())
            }
        }
    }

    fn forcing(&self, t: f64, out: &mut DGVector) -> elastodg::Result<()> {
        if !self.problem.has_loads() {
            out.fill(0.0);
            return Ok(());
        }
        let f = |x: &[f64; 3], t: f64| self.problem.body_force(x, t);
        let g = |x: &[f64; 3], n: &[f64; 3], t: f64| self.problem.traction(x, n, t);
        *out = assemble_ip_rhs(&self.mesh, &self.tables, &f, &g, t);
        Ok(())
    }

    fn damping_apply(&self, v: &DGVector, out: &mut DGVector) -> bool {
        match &self.disc {
            Discretization::Ip { op } => match &op.damping {
                Some(c) => {
                    c.matvec(v, out);
                    true
                }
                None => false,
            },
            Discretization::Mixed { .. } => false,
        }
    }

    fn symmetric_stiffness(&self) -> bool {
        match &self.disc {
            Discretization::Ip { op } => op.cfg.theta == -1,
            Discretization::Mixed { .. } => true,
        }
    }

    fn energy(&self, u: &DGVector, v: &DGVector, t: f64) -> elastodg::Result<f64> {
        match &self.disc {
            Discretization::Ip { op } => Ok(elastodg::diagnostics::energy_norm_ip(
                &self.tables,
                &self.mesh,
                &self.material,
                u,
                v,
                self.tables.basis.degree,
                op.cfg.c0,
            )),
            Discretization::Mixed { cfg, solver, .. } => {
                let g = |x: &[f64; 3], n: &[f64; 3], t: f64| self.problem.traction(x, n, t);
                let has_g = self.problem.has_loads();
                let sigma = mixed::recover_sigma(
                    &self.mesh,
                    &self.tables,
                    &self.material,
                    cfg,
                    solver,
                    u,
                    if has_g { Some(&g) } else { None },
                    t,
                )?;
                Ok(mixed::discrete_energy_mdg(
                    &self.mesh,
                    &self.tables,
                    &self.material,
                    cfg,
                    v,
                    &sigma,
                    u,
                )
                .sqrt())
            }
        }
    }

    fn error(&self, _u: &DGVector, _v: &DGVector, _t: f64) -> elastodg::Result<Option<f64>> {
        Ok(None)
    }
}

#[allow(clippy::too_many_arguments)]
fn build_system(
    cells: usize,
    degree: usize,
    method: &str,
    c0: f64,
    delta: f64,
    c1: f64,
    c2: f64,
    c_f: f64,
    forced: bool,
) -> Result<DemoSystem, String> {
    let mesh = build_cartesian_mesh(&MeshConfig::unit_box(2, cells)).map_err(|e| e.to_string())?;
    let tables = ElementTables::new(&mesh, Basis::new(degree, 2).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let material = MaterialField::uniform(&mesh, 1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let problem = Problem::from_name(
        if forced { "paper2d" } else { "conservation2d" },
        1.0,
        1.0,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let disc = match method {
        "sip" | "iip" | "nip" => {
            let theta = match method {
                "sip" => -1,
                "iip" => 0,
                _ => 1,
            };
            let cfg = IpConfig {
                theta,
                delta: if theta == -1 { delta } else { 0.5 },
                c0,
                c_f,
            };
            let op = assemble_ip(&mesh, &tables, &material, cfg).map_err(|e| e.to_string())?;
            Discretization::Ip { op }
        }
        "ldg" | "fdg" | "alt" => {
            let cfg = match method {
                "ldg" => MixedConfig::ldg(delta, c1),
                "fdg" => MixedConfig::fdg(delta, c1, c2),
                _ => MixedConfig::alt(if delta >= 0.5 { 1.0 } else { 0.0 }),
            };
            cfg.validate().map_err(|e| e.to_string())?;
            let solver = SigmaSolver::new(&cfg);
            Discretization::Mixed {
                cfg,
                solver,
                mass: MassOperator::new(&material),
            }
        }
        other => return Err(format!("unknown method '{other}'")),
    };
    Ok(DemoSystem {
        mesh,
        tables,
        material,
        problem,
        disc,
    })
}

/// Interactive 2D elastic-wave simulation.
#[wasm_bindgen]
pub struct WaveSim {
    system: DemoSystem,
    state: LeapfrogState,
    scratch: DGVector,
    e0: f64,
    times: Vec<f64>,
    ratios: Vec<f64>,
    peak: f64,
}

#[wasm_bindgen]
impl WaveSim {
    /// Build a simulation on the unit square. `method` is one of
    /// sip/nip/iip/ldg/fdg/alt; `forced` selects the driven wave problem
    /// instead of the free oscillation.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cells: u32,
        degree: u32,
        method: String,
        c0: f64,
        delta: f64,
        c1: f64,
        c2: f64,
        c_f: f64,
        cfl: f64,
        forced: bool,
    ) -> Result<WaveSim, JsValue> {
        let cells = cells.clamp(2, 64) as usize;
        let degree = degree.clamp(1, 4) as usize;
        let system = build_system(cells, degree, &method, c0, delta, c1, c2, c_f, forced)
            .map_err(|e| JsValue::from_str(&e))?;
        let dt_max = elastodg::timestep::spectral_dt(&system, 0x5eed)
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        let dt = cfl.clamp(0.01, 1.0) * dt_max;
        let (u0, v0) = system.initial_state();
        let state =
            leapfrog_init(&system, u0, &v0, dt).map_err(|e| JsValue::from_str(&e.to_string()))?;
        let scratch = system.new_vector();
        let mut sim = WaveSim {
            system,
            state,
            scratch,
            e0: 0.0,
            times: Vec::new(),
            ratios: Vec::new(),
            peak: 1e-12,
        };
        sim.e0 = sim.current_energy().max(1e-300);
        sim.record();
        Ok(sim)
    }

    fn current_energy(&self) -> f64 {
        // backward difference from the leapfrog window is enough for display
        let dt = self.state.dt;
        let mut v = self.state.u_curr.clone();
        v.axpy(-1.0, &self.state.u_prev);
        v.scale(1.0 / dt);
        self.system
            .energy(&self.state.u_curr, &v, self.state.t)
            .unwrap_or(f64::NAN)
    }

    fn record(&mut self) {
        let e = self.current_energy();
        self.times.push(self.state.t);
        self.ratios.push(e / self.e0);
    }

    /// Advance n leapfrog steps; returns false once the run has blown up.
    pub fn step(&mut self, n: u32) -> Result<bool, JsValue> {
        for _ in 0..n {
            leapfrog_step(&self.system, &mut self.state, &mut self.scratch)
                .map_err(|e| JsValue::from_str(&e.to_string()))?;
        }
        self.record();
        let healthy =
            self.state.u_curr.is_finite() && self.ratios.last().copied().unwrap_or(0.0) < 1e6;
        Ok(healthy)
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn dt(&self) -> f64 {
        self.state.dt
    }

    pub fn energy_ratio(&self) -> f64 {
        *self.ratios.last().unwrap_or(&0.0)
    }

    /// Recorded sample times (one per `step` call).
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Energy ratios at the recorded sample times.
    pub fn energy_series(&self) -> Vec<f64> {
        self.ratios.clone()
    }

    /// Displacement magnitude sampled on a w x h grid, rendered as RGBA.
    pub fn field_rgba(&mut self, w: u32, h: u32) -> Vec<u8> {
        let (w, h) = (w as usize, h as usize);
        let mut mags = vec![0.0f64; w * h];
        let mut frame_peak = 0.0f64;
        for j in 0..h {
            for i in 0..w {
                let x = [
                    (i as f64 + 0.5) / w as f64,
                    1.0 - (j as f64 + 0.5) / h as f64,
                    0.0,
                ];
                let u =
                    self.system
                        .tables
                        .eval_vector_at(&self.system.mesh, &self.state.u_curr, &x);
                let m = (u[0] * u[0] + u[1] * u[1]).sqrt();
                mags[j * w + i] = m;
                frame_peak = frame_peak.max(m);
            }
        }
        // slowly adapting color scale so the animation does not flicker
        self.peak = (0.95 * self.peak).max(frame_peak).max(1e-12);
        let mut rgba = vec![0u8; w * h * 4];
        for (px, m) in rgba.chunks_exact_mut(4).zip(&mags) {
            let t = (m / self.peak).clamp(0.0, 1.0);
            let (r, g, b) = heat_color(t);
            px[0] = r;
            px[1] = g;
            px[2] = b;
            px[3] = 255;
        }
        rgba
    }
}

/// Simple dark-blue -> magenta -> yellow heat map.
fn heat_color(t: f64) -> (u8, u8, u8) {
    let r = (255.0 * (1.5 * t).min(1.0).powf(0.8)) as u8;
    let g = (255.0 * (t.max(0.4) - 0.4) / 0.6 * ((t.max(0.4) - 0.4) / 0.6)) as u8;
    let b = (255.0 * (0.2 + 0.8 * (1.0 - t) * (0.3 + 0.7 * t))) as u8;
    (r, g, b)
}

/// Critical leapfrog step size of the damped NIP scheme on a small fixed
/// mesh (8 x 8 cells, degree 1), found by bisection on the blow-up
/// threshold. Exposes the time-step restriction the damping term causes.
#[wasm_bindgen]
pub fn critical_dt_for_damping(c_f: f64) -> Result<f64, JsValue> {
    let system = build_system(8, 1, "nip", 10.0, 0.5, 1.0, 0.0, c_f.max(0.0), false)
        .map_err(|e| JsValue::from_str(&e))?;
    elastodg::runner::critical_dt(&system, &system.mesh, &system.material, 0.25, 1, 7)
        .map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Energy-ratio series of a short free-oscillation run at the given CFL
/// fraction; used by the page to plot conservation without animating.
#[wasm_bindgen]
pub fn conservation_trace(
    method: String,
    cells: u32,
    degree: u32,
    cfl: f64,
) -> Result<Vec<f64>, JsValue> {
    let system = build_system(
        cells.clamp(2, 32) as usize,
        degree.clamp(1, 3) as usize,
        &method,
        10.0,
        0.5,
        1.0,
        if method == "fdg" { 1.0 } else { 0.0 },
        0.0,
        false,
    )
    .map_err(|e| JsValue::from_str(&e))?;
    let dt_max = elastodg::timestep::spectral_dt(&system, 1)
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    let dt = cfl.clamp(0.01, 0.9) * dt_max;
    let n = (1.0 / dt).ceil() as usize;
    let rt = ResolvedTime {
        dt,
        n_steps: n,
        stride: (n / 60).max(1),
    };
    let traj = run_simulation(&system, &rt, &RunOptions::default())
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(traj.report.rows.iter().map(|r| r.ratio).collect())
}
