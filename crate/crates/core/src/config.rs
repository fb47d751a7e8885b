//! Flat `key = value` run configuration with dotted sections.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Lists are whitespace separated. Unknown keys are hard
//! errors, and validation reports every violation at once rather than the
//! first. Defaults are filled for everything except what a run genuinely
//! cannot guess; the minimal file is
//!
//! ```text
//! mesh.dim = 2
//! mesh.cells = 8 8
//! ```
//!
//! Recognized keys (defaults in parentheses):
//!
//! ```text
//! mesh.dim                 2 or 3
//! mesh.cells               cells per axis, dim entries
//! mesh.lo / mesh.hi        box corners (0... / 1...)
//! mesh.boundary            D|N per side: xmin xmax ymin ymax [zmin zmax] (all D)
//! material.rho/lambda/mu   uniform constants (1 / 1 / 1)
//! material.table           CSV path "element_id,rho,lambda,mu" (unset)
//! fem.degree               polynomial degree (1)
//! method.formulation       ip | mixed (ip)
//! method.theta             -1 | 0 | 1 (-1)           [ip]
//! method.delta             average weight (0.5)
//! method.c0                penalty constant (10)     [ip]
//! method.c_f               damping constant (0)      [ip]
//! method.scheme            fdg | ldg | alt (ldg)     [mixed]
//! method.c1 / method.c2    flux constants (1 / 0)    [mixed]
//! time.dt XOR time.cfl     step size or CFL fraction (cfl = 0.25)
//! time.final               final time (1)
//! time.stride              steps between reports (10)
//! problem.name             paper2d|paper3d|conservation2d|conservation3d|zero2d|zero3d
//!                          (zero2d/zero3d to match mesh.dim)
//! converge.levels          refinement levels (4)
//! converge.degrees         degrees for the sweep (fem.degree)
//! converge.base_cells      coarsest cells per axis (4)
//! dtscan.c_f               damping constants to scan (0 and method.c0)
//! dtscan.final             horizon for blow-up detection (0.5)
//! ```

use crate::error::invalid;
use crate::ip::IpConfig;
use crate::mesh::{BoundaryKind, MeshConfig};
use crate::mixed::{MixedConfig, MixedMethod};
use crate::timestep::{DtControl, TimeConfig};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Material data source: uniform constants or a per-element CSV table.
#[derive(Clone, Debug)]
pub enum MaterialSpec {
    Uniform { rho: f64, lambda: f64, mu: f64 },
    Table { path: String },
}

/// Spatial discretization selector.
#[derive(Clone, Debug)]
pub enum Formulation {
    Ip(IpConfig),
    Mixed(MixedConfig),
}

impl Formulation {
    pub fn name(&self) -> String {
        match self {
            Formulation::Ip(cfg) => match cfg.theta {
                -1 => "sip".into(),
                0 => "iip".into(),
                _ => "nip".into(),
            },
            Formulation::Mixed(cfg) => cfg.method.name().into(),
        }
    }
}

/// Convergence-sweep parameters.
#[derive(Clone, Debug)]
pub struct ConvergeSpec {
    pub levels: usize,
    pub degrees: Vec<usize>,
    pub base_cells: usize,
}

/// Time-step scan parameters.
#[derive(Clone, Debug)]
pub struct DtScanSpec {
    pub c_f_values: Vec<f64>,
    pub t_final: f64,
}

/// Fully validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub material: MaterialSpec,
    pub degree: usize,
    pub formulation: Formulation,
    pub time: TimeConfig,
    pub problem_name: String,
    pub converge: ConvergeSpec,
    pub dtscan: DtScanSpec,
    /// Non-fatal notices produced during validation (stability caveats).
    pub warnings: Vec<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "mesh.dim",
    "mesh.cells",
    "mesh.lo",
    "mesh.hi",
    "mesh.boundary",
    "material.rho",
    "material.lambda",
    "material.mu",
    "material.table",
    "fem.degree",
    "method.formulation",
    "method.theta",
    "method.delta",
    "method.c0",
    "method.c_f",
    "method.scheme",
    "method.c1",
    "method.c2",
    "time.dt",
    "time.cfl",
    "time.final",
    "time.stride",
    "problem.name",
    "converge.levels",
    "converge.degrees",
    "converge.base_cells",
    "dtscan.c_f",
    "dtscan.final",
];

/// Parse and validate a configuration file.
pub fn parse_config(path: &str) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read config '{path}': {e}")))?;
    parse_config_str(&text)
}

/// Parse and validate configuration text, reporting every violation.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    let mut violations = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            violations.push(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            ));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            violations.push(format!("line {}: unknown key '{key}'", lineno + 1));
            continue;
        }
        if pairs.insert(key.clone(), value).is_some() {
            violations.push(format!("line {}: duplicate key '{key}'", lineno + 1));
        }
    }

    let cfg = build_config(&pairs, &mut violations);
    match cfg {
        Some(cfg) if violations.is_empty() => Ok(cfg),
        _ => Err(Error::Config(violations)),
    }
}

fn get_f64(
    pairs: &BTreeMap<String, String>,
    key: &str,
    default: f64,
    out: &mut Vec<String>,
) -> f64 {
    match pairs.get(key) {
        None => default,
        Some(v) => v.parse().unwrap_or_else(|_| {
            out.push(format!("{key}: expected a number, got '{v}'"));
            default
        }),
    }
}

fn get_usize(
    pairs: &BTreeMap<String, String>,
    key: &str,
    default: usize,
    out: &mut Vec<String>,
) -> usize {
    match pairs.get(key) {
        None => default,
        Some(v) => v.parse().unwrap_or_else(|_| {
            out.push(format!("{key}: expected a nonnegative integer, got '{v}'"));
            default
        }),
    }
}

fn get_list_f64(
    pairs: &BTreeMap<String, String>,
    key: &str,
    out: &mut Vec<String>,
) -> Option<Vec<f64>> {
    pairs.get(key).map(|v| {
        v.split_whitespace()
            .map(|t| {
                t.parse().unwrap_or_else(|_| {
                    out.push(format!("{key}: expected numbers, got '{t}'"));
                    0.0
                })
            })
            .collect()
    })
}

fn get_list_usize(
    pairs: &BTreeMap<String, String>,
    key: &str,
    out: &mut Vec<String>,
) -> Option<Vec<usize>> {
    pairs.get(key).map(|v| {
        v.split_whitespace()
            .map(|t| {
                t.parse().unwrap_or_else(|_| {
                    out.push(format!("{key}: expected integers, got '{t}'"));
                    0
                })
            })
            .collect()
    })
}

fn build_config(pairs: &BTreeMap<String, String>, out: &mut Vec<String>) -> Option<RunConfig> {
    let dim = get_usize(pairs, "mesh.dim", 2, out);
    if dim != 2 && dim != 3 {
        out.push(format!("mesh.dim: must be 2 or 3, got {dim}"));
        return None;
    }

    let cells = get_list_usize(pairs, "mesh.cells", out).unwrap_or_else(|| vec![4; dim]);
    if cells.len() != dim {
        out.push(format!(
            "mesh.cells: expected {dim} entries, got {}",
            cells.len()
        ));
    }
    if cells.contains(&0) {
        out.push("mesh.cells: every axis needs at least one cell".into());
    }

    let lo = get_list_f64(pairs, "mesh.lo", out).unwrap_or_else(|| vec![0.0; dim]);
    let hi = get_list_f64(pairs, "mesh.hi", out).unwrap_or_else(|| vec![1.0; dim]);
    if lo.len() != dim || hi.len() != dim {
        out.push(format!("mesh.lo/mesh.hi: expected {dim} entries each"));
    } else {
        for a in 0..dim {
            if !(lo[a] < hi[a]) {
                out.push(format!("mesh.lo/mesh.hi: degenerate bounds on axis {a}"));
            }
        }
    }

    let boundary: Vec<BoundaryKind> = match pairs.get("mesh.boundary") {
        None => vec![BoundaryKind::Dirichlet; 2 * dim],
        Some(v) => {
            let tags: Vec<_> = v.split_whitespace().collect();
            if tags.len() != 2 * dim {
                out.push(format!(
                    "mesh.boundary: expected {} side tags, got {}",
                    2 * dim,
                    tags.len()
                ));
            }
            tags.iter()
                .map(|t| match t.to_ascii_lowercase().as_str() {
                    "d" | "dirichlet" => BoundaryKind::Dirichlet,
                    "n" | "neumann" => BoundaryKind::Neumann,
                    other => {
                        out.push(format!("mesh.boundary: unknown tag '{other}' (use D or N)"));
                        BoundaryKind::Dirichlet
                    }
                })
                .collect()
        }
    };

    let material = if let Some(path) = pairs.get("material.table") {
        for k in ["material.rho", "material.lambda", "material.mu"] {
            if pairs.contains_key(k) {
                out.push(format!("{k}: conflicts with material.table"));
            }
        }
        MaterialSpec::Table { path: path.clone() }
    } else {
        let rho = get_f64(pairs, "material.rho", 1.0, out);
        let lambda = get_f64(pairs, "material.lambda", 1.0, out);
        let mu = get_f64(pairs, "material.mu", 1.0, out);
        if rho <= 0.0 || lambda <= 0.0 || mu <= 0.0 {
            out.push("material.rho/lambda/mu: must all be strictly positive".into());
        }
        MaterialSpec::Uniform { rho, lambda, mu }
    };

    let degree = get_usize(pairs, "fem.degree", 1, out);
    if !(1..=crate::basis::MAX_DEGREE).contains(&degree) {
        out.push(format!(
            "fem.degree: must lie in 1..={}, got {degree}",
            crate::basis::MAX_DEGREE
        ));
    }

    let mut warnings = Vec::new();
    let formulation_name = pairs
        .get("method.formulation")
        .cloned()
        .unwrap_or_else(|| "ip".into());
    let delta = get_f64(pairs, "method.delta", 0.5, out);
    let formulation = match formulation_name.as_str() {
        "ip" => {
            for k in ["method.scheme", "method.c1", "method.c2"] {
                if pairs.contains_key(k) {
                    out.push(format!(
                        "{k}: only meaningful with method.formulation = mixed"
                    ));
                }
            }
            let theta_raw = pairs
                .get("method.theta")
                .cloned()
                .unwrap_or_else(|| "-1".into());
            let theta: i32 = theta_raw.parse().unwrap_or_else(|_| {
                out.push(format!(
                    "method.theta: expected -1, 0 or 1, got '{theta_raw}'"
                ));
                -1
            });
            let cfg = IpConfig {
                theta,
                delta,
                c0: get_f64(pairs, "method.c0", 10.0, out),
                c_f: get_f64(pairs, "method.c_f", 0.0, out),
            };
            if let Err(Error::InvalidArgument(msg)) = cfg.validate() {
                out.push(format!("method: {msg}"));
            }
            warnings.extend(cfg.warnings());
            Formulation::Ip(cfg)
        }
        "mixed" => {
            for k in ["method.theta", "method.c0", "method.c_f"] {
                if pairs.contains_key(k) {
                    out.push(format!("{k}: only meaningful with method.formulation = ip"));
                }
            }
            let scheme = pairs
                .get("method.scheme")
                .cloned()
                .unwrap_or_else(|| "ldg".into());
            let method = match scheme.as_str() {
                "fdg" => MixedMethod::Fdg,
                "ldg" => MixedMethod::Ldg,
                "alt" => MixedMethod::Alt,
                other => {
                    out.push(format!(
                        "method.scheme: expected fdg, ldg or alt, got '{other}'"
                    ));
                    MixedMethod::Ldg
                }
            };
            // LDG and ALT force their vanishing penalties
            let c1 = match method {
                MixedMethod::Alt => 0.0,
                _ => get_f64(pairs, "method.c1", 1.0, out),
            };
            let c2 = match method {
                MixedMethod::Fdg => get_f64(pairs, "method.c2", 0.0, out),
                _ => 0.0,
            };
            if method != MixedMethod::Fdg && pairs.contains_key("method.c2") {
                out.push("method.c2: forced to 0 for ldg and alt; remove it".into());
            }
            if method == MixedMethod::Alt && pairs.contains_key("method.c1") {
                out.push("method.c1: forced to 0 for alt; remove it".into());
            }
            let cfg = MixedConfig {
                method,
                delta,
                c1,
                c2,
            };
            if let Err(Error::InvalidArgument(msg)) = cfg.validate() {
                out.push(format!("method: {msg}"));
            }
            if method == MixedMethod::Alt && boundary.contains(&BoundaryKind::Neumann) {
                warnings.push(
                    "ALT fluxes with Neumann sides: stability is guaranteed only under \
                     Dirichlet-type boundary conditions"
                        .to_string(),
                );
            }
            Formulation::Mixed(cfg)
        }
        other => {
            out.push(format!(
                "method.formulation: expected ip or mixed, got '{other}'"
            ));
            Formulation::Ip(IpConfig::default())
        }
    };

    let control = match (pairs.get("time.dt"), pairs.get("time.cfl")) {
        (Some(_), Some(_)) => {
            out.push("time.dt and time.cfl: exactly one may be given".into());
            DtControl::Cfl(0.25)
        }
        (Some(_), None) => DtControl::Fixed(get_f64(pairs, "time.dt", 1e-3, out)),
        (None, Some(_)) => DtControl::Cfl(get_f64(pairs, "time.cfl", 0.25, out)),
        (None, None) => DtControl::Cfl(0.25),
    };
    let time = TimeConfig {
        control,
        t_final: get_f64(pairs, "time.final", 1.0, out),
        stride: get_usize(pairs, "time.stride", 10, out),
    };
    if let Err(Error::InvalidArgument(msg)) = time.validate() {
        out.push(format!("time: {msg}"));
    }

    let problem_name = pairs.get("problem.name").cloned().unwrap_or_else(|| {
        if dim == 2 {
            "zero2d".into()
        } else {
            "zero3d".into()
        }
    });
    match crate::manufactured::Problem::from_name(&problem_name, 1.0, 1.0, 1.0) {
        Ok(p) => {
            if p.dim() != dim {
                out.push(format!(
                    "problem.name: '{problem_name}' is {}-dimensional but mesh.dim = {dim}",
                    p.dim()
                ));
            }
            if p.has_loads() && matches!(material, MaterialSpec::Table { .. }) {
                out.push(
                    "problem.name: the manufactured forcing assumes uniform material; \
                     use material constants instead of material.table"
                        .into(),
                );
            }
        }
        Err(e) => out.push(format!("problem.name: {e}")),
    }

    let converge = ConvergeSpec {
        levels: get_usize(pairs, "converge.levels", 4, out).max(1),
        degrees: get_list_usize(pairs, "converge.degrees", out).unwrap_or_else(|| vec![degree]),
        base_cells: get_usize(pairs, "converge.base_cells", 4, out).max(1),
    };
    for &k in &converge.degrees {
        if !(1..=crate::basis::MAX_DEGREE).contains(&k) {
            out.push(format!("converge.degrees: degree {k} out of range"));
        }
    }

    let default_cf = match &formulation {
        Formulation::Ip(cfg) => vec![0.0, cfg.c0],
        Formulation::Mixed(_) => vec![0.0],
    };
    let dtscan = DtScanSpec {
        c_f_values: get_list_f64(pairs, "dtscan.c_f", out).unwrap_or(default_cf),
        t_final: get_f64(pairs, "dtscan.final", 0.5, out),
    };
    if dtscan.t_final <= 0.0 {
        out.push("dtscan.final: must be > 0".into());
    }

    Some(RunConfig {
        mesh: MeshConfig {
            dim,
            cells,
            lo,
            hi,
            boundary,
        },
        material,
        degree,
        formulation,
        time,
        problem_name,
        converge,
        dtscan,
        warnings,
    })
}

impl RunConfig {
    /// Materialize the per-element coefficients for a built mesh.
    pub fn build_material(
        &self,
        mesh: &crate::mesh::Mesh,
    ) -> Result<crate::material::MaterialField> {
        match &self.material {
            MaterialSpec::Uniform { rho, lambda, mu } => {
                crate::material::MaterialField::uniform(mesh, *rho, *lambda, *mu)
            }
            MaterialSpec::Table { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("cannot read material table '{path}': {e}")))?;
                let n = mesh.n_elems();
                let mut rho = vec![f64::NAN; n];
                let mut lambda = vec![f64::NAN; n];
                let mut mu = vec![f64::NAN; n];
                for (lineno, raw) in text.lines().enumerate() {
                    let line = raw.split('#').next().unwrap_or("").trim();
                    if line.is_empty() || line.starts_with("element_id") {
                        continue;
                    }
                    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                    if cols.len() != 4 {
                        return Err(invalid(format!(
                            "material table line {}: expected 'element_id,rho,lambda,mu'",
                            lineno + 1
                        )));
                    }
                    let e: usize = cols[0].parse().map_err(|_| {
                        invalid(format!("material table line {}: bad id", lineno + 1))
                    })?;
                    if e >= n {
                        return Err(invalid(format!(
                            "material table line {}: element {e} out of range (mesh has {n})",
                            lineno + 1
                        )));
                    }
                    rho[e] = cols[1].parse().map_err(|_| invalid("bad rho"))?;
                    lambda[e] = cols[2].parse().map_err(|_| invalid("bad lambda"))?;
                    mu[e] = cols[3].parse().map_err(|_| invalid("bad mu"))?;
                }
                if let Some(e) = rho.iter().position(|v| v.is_nan()) {
                    return Err(invalid(format!("material table misses element {e}")));
                }
                crate::material::MaterialField::from_tables(mesh, rho, lambda, mu)
            }
        }
    }

    /// The problem instance with the configured material constants.
    pub fn build_problem(&self) -> Result<crate::manufactured::Problem> {
        let (rho, lambda, mu) = match &self.material {
            MaterialSpec::Uniform { rho, lambda, mu } => (*rho, *lambda, *mu),
            // validated at parse: table material only with zero problems
            MaterialSpec::Table { .. } => (1.0, 1.0, 1.0),
        };
        crate::manufactured::Problem::from_name(&self.problem_name, rho, lambda, mu)
    }
}
