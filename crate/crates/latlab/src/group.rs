//! Matrix/group layer: determinant-one group elements, diagonal flows,
//! block-unipotent translates, cone arithmetic, the local triple
//! decomposition and its modular factor, and a right-invariant surrogate
//! metric.

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Construction tolerance on |det - 1|.
pub const DET_TOL: f64 = 1e-9;
/// Relative tolerance on the two balanced sums of a cone vector.
pub const CONE_BALANCE_TOL: f64 = 1e-12;
/// Relative round-trip tolerance for the local triple decomposition.
pub const DECOMP_TOL: f64 = 1e-10;

/// Block dimensions: k = m + n with m expanding rows and n contracting rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    m: usize,
    n: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("need m >= 1 and n >= 1".into()));
        }
        Ok(Dims { m, n })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.m + self.n
    }

    /// Dimension of the block-lower-triangular group: m^2 + mn + n^2 - 1.
    pub fn lower_triangular_dim(&self) -> usize {
        self.m * self.m + self.m * self.n + self.n * self.n - 1
    }
}

/// An element of the determinant-one matrix group, validated at construction.
#[derive(Clone, Debug)]
pub struct GroupElement {
    mat: Mat,
}

impl GroupElement {
    pub fn new(mat: Mat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidArgument("group element must be square".into()));
        }
        if mat.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry in group element".into()));
        }
        let det = mat.det();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidArgument(format!(
                "determinant {det:.12e} is not 1 within {DET_TOL:e}"
            )));
        }
        Ok(GroupElement { mat })
    }

    pub fn identity(k: usize) -> Self {
        GroupElement { mat: Mat::identity(k) }
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn k(&self) -> usize {
        self.mat.rows()
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { mat: self.mat.mul(&other.mat) }
    }

    pub fn inverse(&self) -> GroupElement {
        // Determinant-one matrices are invertible; pivot failure would mean
        // the construction invariant was already broken.
        let inv = self.mat.inverse().expect("det-1 matrix must be invertible");
        GroupElement { mat: inv }
    }
}

/// A k-tuple in the open balanced cone: all entries positive, first m
/// summing to the same value as the last n.
#[derive(Clone, Debug)]
pub struct ConeVector {
    dims: Dims,
    t: Vec<f64>,
}

impl ConeVector {
    pub fn new(dims: Dims, t: Vec<f64>) -> Result<Self> {
        if t.len() != dims.k() {
            return Err(Error::InvalidArgument(format!(
                "cone vector length {} != k = {}",
                t.len(),
                dims.k()
            )));
        }
        if t.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::InvalidArgument(
                "cone vector entries must be finite and strictly positive".into(),
            ));
        }
        let sum_m: f64 = t[..dims.m()].iter().sum();
        let sum_n: f64 = t[dims.m()..].iter().sum();
        let total: f64 = t.iter().map(|x| x.abs()).sum();
        if (sum_m - sum_n).abs() > CONE_BALANCE_TOL * total {
            return Err(Error::InvalidArgument(format!(
                "unbalanced cone vector: sum of first m = {sum_m:.15e}, sum of last n = {sum_n:.15e}"
            )));
        }
        Ok(ConeVector { dims, t })
    }

    /// The balanced embedding of a scalar flow time: (t/m, ..., t/m, t/n, ..., t/n).
    pub fn from_scalar(dims: Dims, t: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidArgument("scalar flow time must be positive".into()));
        }
        let mut v = vec![t / dims.m() as f64; dims.m()];
        v.extend(std::iter::repeat(t / dims.n() as f64).take(dims.n()));
        ConeVector::new(dims, v)
    }

    /// Scale a direction vector so that its minimum entry equals `floor`.
    pub fn scaled_to_floor(dims: Dims, direction: &[f64], floor: f64) -> Result<Self> {
        let base = ConeVector::new(dims, direction.to_vec())?;
        let s = floor / base.floor();
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidArgument("target floor must be positive".into()));
        }
        ConeVector::new(dims, base.t.iter().map(|x| x * s).collect())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn entries(&self) -> &[f64] {
        &self.t
    }

    /// Distance to the cone's walls: the minimum entry.
    pub fn floor(&self) -> f64 {
        self.t.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Split off the balanced scalar part at half the floor, returning
    /// (t_scalar, remainder) with remainder still in the cone and
    /// floor(remainder) >= t_scalar.
    pub fn split(&self) -> (f64, ConeVector) {
        let t_scalar = self.floor() / 2.0;
        let m = self.dims.m() as f64;
        let n = self.dims.n() as f64;
        let u: Vec<f64> = self
            .t
            .iter()
            .enumerate()
            .map(|(i, x)| if i < self.dims.m() { x - t_scalar / m } else { x - t_scalar / n })
            .collect();
        let u = ConeVector::new(self.dims, u).expect("split remainder stays in the cone");
        (t_scalar, u)
    }
}

/// Coordinates on the expanding block-unipotent group: an m x n real matrix.
#[derive(Clone, Debug)]
pub struct HorosphericalPoint {
    y: Mat,
}

impl HorosphericalPoint {
    pub fn new(dims: Dims, y: Mat) -> Result<Self> {
        if (y.rows(), y.cols()) != (dims.m(), dims.n()) {
            return Err(Error::InvalidArgument(format!(
                "expected {}x{} coordinate block, got {}x{}",
                dims.m(),
                dims.n(),
                y.rows(),
                y.cols()
            )));
        }
        if y.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite horospherical coordinate".into()));
        }
        Ok(HorosphericalPoint { y })
    }

    pub fn zero(dims: Dims) -> Self {
        HorosphericalPoint { y: Mat::zeros(dims.m(), dims.n()) }
    }

    pub fn from_slice(dims: Dims, flat: &[f64]) -> Result<Self> {
        if flat.len() != dims.m() * dims.n() {
            return Err(Error::InvalidArgument("wrong coordinate count".into()));
        }
        let y = Mat::from_fn(dims.m(), dims.n(), |i, j| flat[i * dims.n() + j]);
        HorosphericalPoint::new(dims, y)
    }

    pub fn coords(&self) -> &Mat {
        &self.y
    }
}

/// The scalar diagonal flow: m entries e^{t/m} followed by n entries e^{-t/n}.
///
/// The contracting block carries the negative exponent; this is forced by
/// det = 1 and by consistency with the cone flow under the balanced
/// embedding (t/m, ..., t/m, t/n, ..., t/n).
pub fn make_g_t(dims: Dims, t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument("flow time must be finite".into()));
    }
    let m = dims.m() as f64;
    let n = dims.n() as f64;
    let mat = Mat::from_fn(dims.k(), dims.k(), |i, j| {
        if i != j {
            0.0
        } else if i < dims.m() {
            (t / m).exp()
        } else {
            (-t / n).exp()
        }
    });
    GroupElement::new(mat)
}

/// The multi-parameter diagonal flow: diag(e^{t_1}, ..., e^{t_m}, e^{-t_{m+1}}, ..., e^{-t_k}).
pub fn make_g_vt(t: &ConeVector) -> GroupElement {
    let dims = t.dims();
    let mat = Mat::from_fn(dims.k(), dims.k(), |i, j| {
        if i != j {
            0.0
        } else if i < dims.m() {
            t.entries()[i].exp()
        } else {
            (-t.entries()[i]).exp()
        }
    });
    GroupElement::new(mat).expect("balanced cone vector gives determinant one")
}

/// The expanding block-unipotent element [[I_m, Y], [0, I_n]].
pub fn make_u_y(dims: Dims, y: &HorosphericalPoint) -> GroupElement {
    let mat = Mat::from_fn(dims.k(), dims.k(), |i, j| {
        if i == j {
            1.0
        } else if i < dims.m() && j >= dims.m() {
            y.coords()[(i, j - dims.m())]
        } else {
            0.0
        }
    });
    GroupElement { mat }
}

/// The opposite (contracting) block-unipotent element [[I_m, 0], [X, I_n]]
/// with X an n x m block.
pub fn make_u_minus(dims: Dims, x: &Mat) -> GroupElement {
    assert_eq!((x.rows(), x.cols()), (dims.n(), dims.m()));
    let mat = Mat::from_fn(dims.k(), dims.k(), |i, j| {
        if i == j {
            1.0
        } else if i >= dims.m() && j < dims.m() {
            x[(i - dims.m(), j)]
        } else {
            0.0
        }
    });
    GroupElement { mat }
}

/// Conjugation of a horospherical point by the diagonal flow, entrywise
/// Y_ij -> e^{+-(t_i + t_{m+j})} Y_ij. With `inverse` every entry contracts
/// by at least e^{-2 floor(t)}.
pub fn conj_phi(t: &ConeVector, y: &HorosphericalPoint, inverse: bool) -> HorosphericalPoint {
    let dims = t.dims();
    let sign = if inverse { -1.0 } else { 1.0 };
    let mat = Mat::from_fn(dims.m(), dims.n(), |i, j| {
        let rate = t.entries()[i] + t.entries()[dims.m() + j];
        (sign * rate).exp() * y.coords()[(i, j)]
    });
    HorosphericalPoint { y: mat }
}

/// Right-invariant surrogate metric: max(|g h^-1 - I|_F, |h g^-1 - I|_F).
/// Zero iff g = h; invariant under right translation by construction.
pub fn dist_g(g: &GroupElement, h: &GroupElement) -> f64 {
    let k = g.k();
    let a = g.mat().mul(&h.inverse().mat).sub(&Mat::identity(k)).frobenius_norm();
    let b = h.mat().mul(&g.inverse().mat).sub(&Mat::identity(k)).frobenius_norm();
    a.max(b)
}

/// Local factorization g = h_minus * h_zero * h with h_minus lower
/// block-unipotent, h_zero block-diagonal of determinant one and h upper
/// block-unipotent (block LDU on the top-left m x m block).
#[derive(Clone, Debug)]
pub struct TripleDecomposition {
    pub h_minus: GroupElement,
    pub h_zero: GroupElement,
    pub h: GroupElement,
    /// 2-norm condition number of the top-left block that was inverted.
    pub top_left_condition: f64,
}

pub fn decompose_local(dims: Dims, g: &GroupElement) -> Result<TripleDecomposition> {
    if g.k() != dims.k() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let (a, b, c, d) = g.mat().to_blocks(dims.m());
    let cond = a.condition_number();
    let a_inv = a.inverse().map_err(|_| {
        Error::DecompositionUndefined("top-left block is numerically singular".into())
    })?;
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::DecompositionUndefined(format!(
            "top-left block condition number {cond:.3e} too large"
        )));
    }
    let y_minus = c.mul(&a_inv); // n x m
    let y_plus = a_inv.mul(&b); // m x n
    let schur = d.sub(&c.mul(&a_inv).mul(&b));
    let h_minus = make_u_minus(dims, &y_minus);
    let h = make_u_y(dims, &HorosphericalPoint { y: y_plus });
    let zero_mat = Mat::from_blocks(
        &a,
        &Mat::zeros(dims.m(), dims.n()),
        &Mat::zeros(dims.n(), dims.m()),
        &schur,
    );
    let h_zero = GroupElement { mat: zero_mat };
    Ok(TripleDecomposition { h_minus, h_zero, h, top_left_condition: cond })
}

/// Modular factor of the block-lower-triangular group, evaluated on its
/// block-diagonal part: |det A|^k where A is the top-left m x m block.
///
/// Equivalently |det(Ad h0 restricted to the lower-triangular Lie algebra)|^s
/// with the sign s = -1; that sign is the one under which the Monte Carlo
/// product-formula check passes, see `haar::mc_haar_check`.
pub fn modular_delta(dims: Dims, h_zero: &GroupElement) -> Result<f64> {
    let (a, b, c, _d) = h_zero.mat().to_blocks(dims.m());
    if b.max_abs() > 1e-12 || c.max_abs() > 1e-12 {
        return Err(Error::InvalidArgument("modular factor needs a block-diagonal input".into()));
    }
    Ok(a.det().abs().powi(dims.k() as i32))
}
