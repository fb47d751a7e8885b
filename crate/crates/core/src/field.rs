//! Block-structured coefficient storage for broken vector and symmetric
//! tensor fields, plus the pointwise symmetric-tensor value type.
//!
//! Layouts are element-major: a `DGVector` stores, per element, d component
//! blocks of (k+1)^d nodal coefficients; a `DGTensorField` stores d(d+1)/2
//! independent component blocks (symmetric storage, so sigma = sigma^T by
//! construction). Pointwise tensors are padded to six components
//! [xx, yy, zz, xy, xz, yz] with the z entries identically zero in 2D, which
//! lets 2D and 3D share all the algebra below.

/// Pointwise symmetric tensor, padded to 3x3.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor {
    /// [xx, yy, zz, xy, xz, yz]
    pub c: [f64; 6],
}

/// Storage component -> padded component index, per dimension.
pub fn sym_slots(d: usize) -> &'static [usize] {
    match d {
        2 => &[0, 1, 3],
        3 => &[0, 1, 2, 3, 4, 5],
        _ => unreachable!("dim is 2 or 3"),
    }
}

/// Number of independent symmetric-tensor components, d(d+1)/2.
pub fn n_sym(d: usize) -> usize {
    d * (d + 1) / 2
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor { c: [0.0; 6] };

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor {
            c: [a, b, c, 0.0, 0.0, 0.0],
        }
    }

    /// Identity of the given dimension (zz = 0 in 2D).
    pub fn identity(d: usize) -> Self {
        if d == 2 {
            Self::diag(1.0, 1.0, 0.0)
        } else {
            Self::diag(1.0, 1.0, 1.0)
        }
    }

    /// Symmetrized outer product v (.) n = (v n^T + n v^T) / 2.
    pub fn sym_outer(v: &[f64; 3], n: &[f64; 3]) -> Self {
        SymTensor {
            c: [
                v[0] * n[0],
                v[1] * n[1],
                v[2] * n[2],
                0.5 * (v[0] * n[1] + v[1] * n[0]),
                0.5 * (v[0] * n[2] + v[2] * n[0]),
                0.5 * (v[1] * n[2] + v[2] * n[1]),
            ],
        }
    }

    pub fn trace(&self) -> f64 {
        self.c[0] + self.c[1] + self.c[2]
    }

    /// Frobenius inner product (off-diagonal entries count twice).
    pub fn dot(&self, o: &SymTensor) -> f64 {
        self.c[0] * o.c[0]
            + self.c[1] * o.c[1]
            + self.c[2] * o.c[2]
            + 2.0 * (self.c[3] * o.c[3] + self.c[4] * o.c[4] + self.c[5] * o.c[5])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Matrix-vector product sigma n.
    pub fn mul_vec(&self, n: &[f64; 3]) -> [f64; 3] {
        [
            self.c[0] * n[0] + self.c[3] * n[1] + self.c[4] * n[2],
            self.c[3] * n[0] + self.c[1] * n[1] + self.c[5] * n[2],
            self.c[4] * n[0] + self.c[5] * n[1] + self.c[2] * n[2],
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for v in out.c.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, o: &SymTensor) -> Self {
        let mut out = *self;
        for (v, w) in out.c.iter_mut().zip(&o.c) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, o: &SymTensor) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// a*self + b*other.
    pub fn lin(&self, a: f64, o: &SymTensor, b: f64) -> Self {
        self.scale(a).add(&o.scale(b))
    }
}

/// Broken vector field coefficients (element blocks of d * n_modes values).
#[derive(Clone, Debug, PartialEq)]
pub struct DGVector {
    pub dim: usize,
    pub n_modes: usize,
    pub n_elems: usize,
    pub data: Vec<f64>,
}

impl DGVector {
    pub fn zeros(dim: usize, n_modes: usize, n_elems: usize) -> Self {
        Self {
            dim,
            n_modes,
            n_elems,
            data: vec![0.0; dim * n_modes * n_elems],
        }
    }

    pub fn zeros_like(o: &DGVector) -> Self {
        Self::zeros(o.dim, o.n_modes, o.n_elems)
    }

    /// Coefficients of one element, d consecutive component blocks.
    pub fn elem(&self, e: usize) -> &[f64] {
        let b = self.dim * self.n_modes;
        &self.data[e * b..(e + 1) * b]
    }

    pub fn elem_mut(&mut self, e: usize) -> &mut [f64] {
        let b = self.dim * self.n_modes;
        &mut self.data[e * b..(e + 1) * b]
    }

    pub fn idx(&self, e: usize, comp: usize, mode: usize) -> usize {
        (e * self.dim + comp) * self.n_modes + mode
    }

    pub fn set(&mut self, e: usize, comp: usize, mode: usize, v: f64) {
        let i = self.idx(e, comp, mode);
        self.data[i] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.data.iter_mut() {
            *v *= s;
        }
    }

    /// self += alpha * other.
    pub fn axpy(&mut self, alpha: f64, other: &DGVector) {
        crate::linalg::axpy(alpha, &other.data, &mut self.data);
    }

    pub fn dot(&self, other: &DGVector) -> f64 {
        crate::linalg::dot(&self.data, &other.data)
    }

    pub fn norm2(&self) -> f64 {
        crate::linalg::norm2(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Broken symmetric-tensor field coefficients (d(d+1)/2 blocks per element).
#[derive(Clone, Debug, PartialEq)]
pub struct DGTensorField {
    pub dim: usize,
    pub n_modes: usize,
    pub n_elems: usize,
    pub data: Vec<f64>,
}

impl DGTensorField {
    pub fn zeros(dim: usize, n_modes: usize, n_elems: usize) -> Self {
        Self {
            dim,
            n_modes,
            n_elems,
            data: vec![0.0; n_sym(dim) * n_modes * n_elems],
        }
    }

    pub fn n_comp(&self) -> usize {
        n_sym(self.dim)
    }

    pub fn elem(&self, e: usize) -> &[f64] {
        let b = self.n_comp() * self.n_modes;
        &self.data[e * b..(e + 1) * b]
    }

    pub fn elem_mut(&mut self, e: usize) -> &mut [f64] {
        let b = self.n_comp() * self.n_modes;
        let start = e * b;
        &mut self.data[start..start + b]
    }

    pub fn idx(&self, e: usize, comp: usize, mode: usize) -> usize {
        (e * self.n_comp() + comp) * self.n_modes + mode
    }

    pub fn set(&mut self, e: usize, comp: usize, mode: usize, v: f64) {
        let i = self.idx(e, comp, mode);
        self.data[i] = v;
    }

    pub fn axpy(&mut self, alpha: f64, other: &DGTensorField) {
        crate::linalg::axpy(alpha, &other.data, &mut self.data);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Assemble the pointwise tensor value from per-component scalar values.
    pub fn assemble_point(dim: usize, comp_values: &[f64]) -> SymTensor {
        let mut t = SymTensor::ZERO;
        for (s, &slot) in sym_slots(dim).iter().enumerate() {
            t.c[slot] = comp_values[s];
        }
        t
    }
}
