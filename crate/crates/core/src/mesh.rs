//! Conforming Cartesian meshes of axis-aligned boxes in 2D and 3D.
//!
//! Conventions used everywhere downstream:
//!
//! * Elements are enumerated lexicographically, `id = ix + nx*(iy + ny*iz)`.
//! * For an interior face the "plus" element is the one with the smaller
//!   element id (the min side along the face axis) and the unit normal `n+`
//!   points from plus to minus, i.e. along `+e_axis`. Boundary faces carry
//!   the outward normal and only a plus element.
//! * `h_K` is the Euclidean diameter of a cell, `h_F` the largest extent of
//!   a face (for a uniform grid of cubes with side a: `h_K = a*sqrt(d)`,
//!   `h_F = a`).
//!
//! All coordinates and index arithmetic are padded to three axes so that 2D
//! and 3D share the same code paths; the unused axis has one cell and zero
//! extent.

use crate::error::invalid;
use crate::Result;
use std::fmt;

/// Boundary condition tag for a box side or face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Classification of a mesh face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// Box side index: `2*axis + (1 if max side)`, so
/// x-min, x-max, y-min, y-max, z-min, z-max.
pub fn side_index(axis: usize, max_side: bool) -> usize {
    2 * axis + usize::from(max_side)
}

/// Mesh construction parameters.
#[derive(Clone, Debug)]
pub struct MeshConfig {
    pub dim: usize,
    /// Cells per axis (length = dim, all >= 1).
    pub cells: Vec<usize>,
    /// Lower box corner (length = dim).
    pub lo: Vec<f64>,
    /// Upper box corner (length = dim), componentwise > lo.
    pub hi: Vec<f64>,
    /// Tag per box side, indexed by [`side_index`] (length = 2*dim).
    pub boundary: Vec<BoundaryKind>,
}

impl MeshConfig {
    /// n^dim cells on the unit box with Dirichlet conditions everywhere.
    pub fn unit_box(dim: usize, n: usize) -> Self {
        Self {
            dim,
            cells: vec![n; dim],
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
            boundary: vec![BoundaryKind::Dirichlet; 2 * dim],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(invalid(format!(
                "mesh dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.cells.len() != self.dim || self.lo.len() != self.dim || self.hi.len() != self.dim {
            return Err(invalid("cells/lo/hi must all have length dim"));
        }
        if self.boundary.len() != 2 * self.dim {
            return Err(invalid("boundary must list one tag per box side (2*dim)"));
        }
        for a in 0..self.dim {
            if self.cells[a] == 0 {
                return Err(invalid(format!("cells[{a}] must be >= 1")));
            }
            if !(self.lo[a] < self.hi[a]) {
                return Err(invalid(format!(
                    "degenerate bounds on axis {a}: lo = {}, hi = {}",
                    self.lo[a], self.hi[a]
                )));
            }
        }
        Ok(())
    }
}

/// One face of the mesh.
#[derive(Clone, Debug)]
pub struct Face {
    pub id: usize,
    pub kind: FaceKind,
    /// Axis the face is orthogonal to.
    pub axis: usize,
    /// Element on the plus side (smaller id for interior faces).
    pub plus: usize,
    /// Element on the minus side; `None` on boundary faces.
    pub minus: Option<usize>,
    /// Unit normal `n+` (padded to 3 components, axis-aligned so one entry
    /// is exactly +-1 and the rest are exactly 0).
    pub normal: [f64; 3],
    /// Largest extent of the face.
    pub h_f: f64,
    /// (d-1)-measure of the face.
    pub measure: f64,
}

impl Face {
    /// Local side of the face within the given adjacent element: 0 if the
    /// face sits at that element's reference coordinate 0 along `axis`,
    /// 1 if at reference coordinate 1.
    pub fn local_side(&self, element: usize) -> usize {
        if element == self.plus {
            // Interior faces sit at the max side of the plus element. A
            // boundary face is on the max side exactly when its normal
            // points along +axis.
            usize::from(self.normal[self.axis] > 0.0)
        } else {
            debug_assert_eq!(Some(element), self.minus);
            0
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

/// Disjoint, exhaustive partition of the face set by kind.
#[derive(Clone, Debug, Default)]
pub struct FacePartition {
    pub interior: Vec<usize>,
    pub dirichlet: Vec<usize>,
    pub neumann: Vec<usize>,
}

/// Immutable Cartesian mesh.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    /// Cells per axis, padded to 3 (unused axis has 1 cell).
    pub cells: [usize; 3],
    /// Lower box corner, padded to 3.
    pub lo: [f64; 3],
    /// Cell extent per axis, padded to 3 (unused axis has 0 extent).
    pub extent: [f64; 3],
    pub faces: Vec<Face>,
    pub boundary: Vec<BoundaryKind>,
    /// Max element diameter.
    pub h: f64,
    /// Element diameter (same for every cell of a uniform grid).
    pub h_elem: f64,
    /// Smallest cell extent, used by CFL heuristics.
    pub min_extent: f64,
    n_elems: usize,
}

/// Build a Cartesian mesh with classified, oriented faces.
pub fn build_cartesian_mesh(cfg: &MeshConfig) -> Result<Mesh> {
    cfg.validate()?;
    let d = cfg.dim;
    let mut cells = [1usize; 3];
    let mut lo = [0.0f64; 3];
    let mut extent = [0.0f64; 3];
    for a in 0..d {
        cells[a] = cfg.cells[a];
        lo[a] = cfg.lo[a];
        extent[a] = (cfg.hi[a] - cfg.lo[a]) / cfg.cells[a] as f64;
    }
    let n_elems = cells[0] * cells[1] * cells[2];
    let h_elem = (extent[0].powi(2) + extent[1].powi(2) + extent[2].powi(2)).sqrt();
    let min_extent = (0..d).map(|a| extent[a]).fold(f64::INFINITY, f64::min);

    let mut mesh = Mesh {
        dim: d,
        cells,
        lo,
        extent,
        faces: Vec::new(),
        boundary: cfg.boundary.clone(),
        h: h_elem,
        h_elem,
        min_extent,
        n_elems,
    };

    // Faces axis by axis: planes p = 0..=n_a crossed with the cells of the
    // remaining axes.
    let mut faces = Vec::new();
    for axis in 0..d {
        let (t0, t1) = other_axes(axis, d);
        let n_t0 = cells[t0];
        let n_t1 = if d == 3 { cells[t1] } else { 1 };
        let mut fext = [0.0f64; 2];
        fext[0] = extent[t0];
        if d == 3 {
            fext[1] = extent[t1];
        }
        let h_f = fext[0].max(fext[1]);
        let measure = if d == 3 { fext[0] * fext[1] } else { fext[0] };
        for p in 0..=cells[axis] {
            for j1 in 0..n_t1 {
                for j0 in 0..n_t0 {
                    let mut idx = [0usize; 3];
                    idx[t0] = j0;
                    if d == 3 {
                        idx[t1] = j1;
                    }
                    let id = faces.len();
                    let face = if p == 0 {
                        idx[axis] = 0;
                        let elem = mesh.element_id(idx);
                        let mut normal = [0.0; 3];
                        normal[axis] = -1.0;
                        Face {
                            id,
                            kind: boundary_face_kind(&cfg.boundary, axis, false),
                            axis,
                            plus: elem,
                            minus: None,
                            normal,
                            h_f,
                            measure,
                        }
                    } else if p == cells[axis] {
                        idx[axis] = cells[axis] - 1;
                        let elem = mesh.element_id(idx);
                        let mut normal = [0.0; 3];
                        normal[axis] = 1.0;
                        Face {
                            id,
                            kind: boundary_face_kind(&cfg.boundary, axis, true),
                            axis,
                            plus: elem,
                            minus: None,
                            normal,
                            h_f,
                            measure,
                        }
                    } else {
                        idx[axis] = p - 1;
                        let plus = mesh.element_id(idx);
                        idx[axis] = p;
                        let minus = mesh.element_id(idx);
                        let mut normal = [0.0; 3];
                        normal[axis] = 1.0;
                        Face {
                            id,
                            kind: FaceKind::Interior,
                            axis,
                            plus,
                            minus: Some(minus),
                            normal,
                            h_f,
                            measure,
                        }
                    };
                    faces.push(face);
                }
            }
        }
    }
    mesh.faces = faces;
    Ok(mesh)
}

fn boundary_face_kind(boundary: &[BoundaryKind], axis: usize, max_side: bool) -> FaceKind {
    match boundary[side_index(axis, max_side)] {
        BoundaryKind::Dirichlet => FaceKind::Dirichlet,
        BoundaryKind::Neumann => FaceKind::Neumann,
    }
}

/// The one or two axes spanning faces orthogonal to `axis`.
fn other_axes(axis: usize, dim: usize) -> (usize, usize) {
    match (dim, axis) {
        (2, 0) => (1, 1),
        (2, 1) => (0, 0),
        (3, 0) => (1, 2),
        (3, 1) => (0, 2),
        (3, 2) => (0, 1),
        _ => unreachable!("validated dim/axis"),
    }
}

impl Mesh {
    pub fn n_elems(&self) -> usize {
        self.n_elems
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Lexicographic element id from per-axis cell indices.
    pub fn element_id(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.cells[0] * (idx[1] + self.cells[1] * idx[2])
    }

    /// Per-axis cell indices of an element.
    pub fn element_index(&self, e: usize) -> [usize; 3] {
        let ix = e % self.cells[0];
        let rest = e / self.cells[0];
        let iy = rest % self.cells[1];
        let iz = rest / self.cells[1];
        [ix, iy, iz]
    }

    /// Lower corner of an element's cell (padded to 3 coordinates).
    pub fn element_corner(&self, e: usize) -> [f64; 3] {
        let idx = self.element_index(e);
        [
            self.lo[0] + idx[0] as f64 * self.extent[0],
            self.lo[1] + idx[1] as f64 * self.extent[1],
            self.lo[2] + idx[2] as f64 * self.extent[2],
        ]
    }

    /// Map a reference point in `[0,1]^d` to physical coordinates in element e.
    pub fn map_to_physical(&self, e: usize, xref: &[f64; 3]) -> [f64; 3] {
        let c = self.element_corner(e);
        [
            c[0] + xref[0] * self.extent[0],
            c[1] + xref[1] * self.extent[1],
            c[2] + xref[2] * self.extent[2],
        ]
    }

    /// Cell volume (uniform across the mesh).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.extent[a]).product()
    }

    /// Orientation data of a face: (n+, h_F, plus element, minus element).
    pub fn face_geometry(&self, face_id: usize) -> Result<([f64; 3], f64, usize, Option<usize>)> {
        let f = self
            .faces
            .get(face_id)
            .ok_or_else(|| invalid(format!("unknown face id {face_id}")))?;
        Ok((f.normal, f.h_f, f.plus, f.minus))
    }

    /// Element ids adjacent to an element through faces, self excluded.
    pub fn neighbors(&self, e: usize) -> Vec<usize> {
        let idx = self.element_index(e);
        let mut out = Vec::with_capacity(2 * self.dim);
        for a in 0..self.dim {
            if idx[a] > 0 {
                let mut j = idx;
                j[a] -= 1;
                out.push(self.element_id(j));
            }
            if idx[a] + 1 < self.cells[a] {
                let mut j = idx;
                j[a] += 1;
                out.push(self.element_id(j));
            }
        }
        out
    }
}

/// Partition the face set into interior / Dirichlet / Neumann according to
/// the given side tags (total on valid meshes; the tags may differ from the
/// ones the mesh was built with).
pub fn classify_faces(mesh: &Mesh, boundary: &[BoundaryKind]) -> FacePartition {
    let mut part = FacePartition::default();
    for f in &mesh.faces {
        if f.is_boundary() {
            let max_side = f.normal[f.axis] > 0.0;
            match boundary[side_index(f.axis, max_side)] {
                BoundaryKind::Dirichlet => part.dirichlet.push(f.id),
                BoundaryKind::Neumann => part.neumann.push(f.id),
            }
        } else {
            part.interior.push(f.id);
        }
    }
    part
}

impl fmt::Display for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = classify_faces(self, &self.boundary);
        write!(
            f,
            "{}d Cartesian mesh: {:?} cells ({} elements), h = {:.4e}, \
             faces: {} interior / {} Dirichlet / {} Neumann",
            self.dim,
            &self.cells[..self.dim],
            self.n_elems(),
            self.h,
            part.interior.len(),
            part.dirichlet.len(),
            part.neumann.len()
        )
    }
}
