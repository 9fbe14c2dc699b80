//! Exterior powers of R^k in the minor basis: the induced group action,
//! integer multivector enumeration, grid suprema of translate norms over
//! horospherical balls, and the truncated infimum of |wedge^j(g) w| over
//! integer w.
//!
//! Coordinates of a degree-j multivector are indexed by the j-element
//! subsets of {0, ..., k-1} sorted lexicographically; this indexing is fixed
//! so coordinate arrays are portable.

use crate::error::{Error, Result};
use crate::group::{make_g_vt, make_u_y, ConeVector, GroupElement, HorosphericalPoint};
use crate::lattice::ENUM_BUDGET;
use crate::matrix::{norm, Mat};
use crate::quad::linspace;

/// An element of the degree-j exterior power in the minor basis.
#[derive(Clone, Debug)]
pub struct MultiVector {
    k: usize,
    degree: usize,
    coords: Vec<f64>,
}

impl MultiVector {
    pub fn new(k: usize, degree: usize, coords: Vec<f64>) -> Result<Self> {
        if degree == 0 || degree > k {
            return Err(Error::InvalidArgument("degree must satisfy 1 <= j <= k".into()));
        }
        if coords.len() != binomial(k, degree) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates for degree {} in dimension {}, got {}",
                binomial(k, degree),
                degree,
                k,
                coords.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite multivector coordinate".into()));
        }
        Ok(MultiVector { k, degree, coords })
    }

    /// Basis element e_{S} for the subset with the given lexicographic index.
    pub fn basis(k: usize, degree: usize, index: usize) -> Self {
        let mut coords = vec![0.0; binomial(k, degree)];
        coords[index] = 1.0;
        MultiVector { k, degree, coords }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn scale(&self, s: f64) -> Self {
        MultiVector {
            k: self.k,
            degree: self.degree,
            coords: self.coords.iter().map(|x| x * s).collect(),
        }
    }
}

pub fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc = 1usize;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// The j-element subsets of {0..k-1} in lexicographic order.
pub fn subsets(k: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(k, j));
    let mut cur: Vec<usize> = (0..j).collect();
    loop {
        out.push(cur.clone());
        // advance to the next lexicographic combination
        let mut i = j;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + k - j {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for t in i + 1..j {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// Matrix of the induced action on the degree-j exterior power: entry
/// (S, T) is the minor det(g[S, T]).
pub fn wedge_matrix(g: &Mat, j: usize) -> Mat {
    let k = g.rows();
    let sets = subsets(k, j);
    let dim = sets.len();
    Mat::from_fn(dim, dim, |si, ti| g.minor(&sets[si], &sets[ti]))
}

/// Apply the induced action of g to a multivector.
pub fn wedge_action(g: &GroupElement, w: &MultiVector) -> MultiVector {
    let m = wedge_matrix(g.mat(), w.degree());
    MultiVector { k: w.k, degree: w.degree, coords: m.mul_vec(w.coords()) }
}

pub fn mv_norm(w: &MultiVector) -> f64 {
    w.norm()
}

/// Max over a uniform grid of Y in the sup-norm ball of |wedge^j(g_t u_Y g) w|.
/// The grid includes the ball's corners; refining the grid can only increase
/// the value.
pub fn sup_norm_over_ball(
    t: &ConeVector,
    g: &GroupElement,
    w: &MultiVector,
    ball_radius: f64,
    grid_per_axis: usize,
) -> Result<f64> {
    if grid_per_axis < 2 {
        return Err(Error::InvalidArgument("need at least 2 grid points per axis".into()));
    }
    if ball_radius <= 0.0 {
        return Err(Error::InvalidArgument("ball radius must be positive".into()));
    }
    let dims = t.dims();
    if g.k() != dims.k() || w.k() != dims.k() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let g_t = make_g_vt(t);
    let axis = linspace(-ball_radius, ball_radius, grid_per_axis);
    let d = dims.m() * dims.n();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; d];
    let mut flat = vec![0.0f64; d];
    loop {
        for (a, &i) in idx.iter().enumerate() {
            flat[a] = axis[i];
        }
        let y = HorosphericalPoint::from_slice(dims, &flat)?;
        let composed = g_t.mul(&make_u_y(dims, &y)).mul(g);
        let img = wedge_action(&composed, w);
        best = best.max(img.norm());
        // odometer over grid indices
        let mut axis_i = 0;
        loop {
            if axis_i == d {
                return Ok(best);
            }
            if idx[axis_i] + 1 < grid_per_axis {
                idx[axis_i] += 1;
                break;
            }
            idx[axis_i] = 0;
            axis_i += 1;
        }
    }
}

/// All nonzero integer coordinate arrays of norm <= max_norm in the degree-j
/// power. Includes non-decomposable integer multivectors, a superset of the
/// wedge images of integer vectors, which only strengthens the bounds
/// checked downstream.
pub fn enumerate_integer_multivectors(
    k: usize,
    j: usize,
    max_norm: f64,
) -> Result<Vec<MultiVector>> {
    if j == 0 || j > k {
        return Err(Error::InvalidArgument("degree out of range".into()));
    }
    if max_norm < 1.0 {
        return Ok(Vec::new());
    }
    let dim = binomial(k, j);
    let per_axis = 2 * (max_norm.floor() as u64) + 1;
    let mut total: u64 = dim as u64;
    for _ in 0..dim {
        total =
            total.checked_mul(per_axis).filter(|&t| t <= ENUM_BUDGET).ok_or_else(|| {
                Error::BudgetExceeded {
                    visited: 0,
                    best_so_far: None,
                    context: format!("integer multivector enumeration, C({k},{j}) = {dim}"),
                }
            })?;
    }
    let bound = max_norm.floor() as i64;
    let norm2_max = max_norm * max_norm * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut c = vec![-bound; dim];
    'outer: loop {
        let n2: f64 = c.iter().map(|&x| (x * x) as f64).sum();
        if n2 > 0.0 && n2 <= norm2_max {
            out.push(MultiVector {
                k,
                degree: j,
                coords: c.iter().map(|&x| x as f64).collect(),
            });
        }
        for x in c.iter_mut() {
            if *x < bound {
                *x += 1;
                continue 'outer;
            }
            *x = -bound;
        }
        break;
    }
    Ok(out)
}

/// Truncated infimum of |wedge^j(g) w| over integer w != 0 and degrees
/// 1..k-1.
#[derive(Clone, Debug)]
pub struct DeltaLResult {
    /// Minimum over the enumerated truncation.
    pub value: f64,
    pub attained_degree: usize,
    pub attained_coords: Vec<i64>,
    /// Enumeration covered |w| <= max_norm.
    pub max_norm: f64,
    /// For |w| > max_norm the image norm is at least this much, by the
    /// smallest singular value of the induced action.
    pub large_w_lower_bound: f64,
    /// True when large_w_lower_bound >= value, i.e. the reported value is
    /// the exact infimum.
    pub certified_exact: bool,
}

pub fn delta_l(g: &GroupElement, max_norm: f64) -> Result<DeltaLResult> {
    let k = g.k();
    if k < 2 {
        return Err(Error::InvalidArgument("need k >= 2".into()));
    }
    let mut best = f64::INFINITY;
    let mut attained_degree = 1;
    let mut attained_coords = Vec::new();
    let mut large_bound = f64::INFINITY;
    let sv = g.mat().singular_values();
    for j in 1..k {
        // smallest singular value of the induced action: product of the j
        // smallest singular values of g
        let sigma_min: f64 = sv[k - j..].iter().product();
        large_bound = large_bound.min(sigma_min * max_norm);
        let wedge = wedge_matrix(g.mat(), j);
        for w in enumerate_integer_multivectors(k, j, max_norm)? {
            let img = wedge.mul_vec(w.coords());
            let n = norm(&img);
            if n < best {
                best = n;
                attained_degree = j;
                attained_coords = w.coords().iter().map(|&x| x as i64).collect();
            }
        }
    }
    if best == f64::INFINITY {
        return Err(Error::InvalidArgument("max_norm below 1 enumerates nothing".into()));
    }
    Ok(DeltaLResult {
        value: best,
        attained_degree,
        attained_coords,
        max_norm,
        large_w_lower_bound: large_bound,
        certified_exact: large_bound >= best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Dims;
    use crate::rng::{derive_rng, uniform_in};
    use rand::Rng;

    #[test]
    fn subset_indexing_is_lexicographic() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(4, 1), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(subsets(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(subsets(5, 3).len(), binomial(5, 3));
    }

    #[test]
    fn degree_one_matches_matrix_action() {
        let mut rng = derive_rng(201, 0, 0);
        for _ in 0..20 {
            let k = 3;
            let mut m = Mat::identity(k);
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] += uniform_in(&mut rng, -0.4, 0.4);
                }
            }
            let m = m.scale(1.0 / m.det().abs().powf(1.0 / k as f64));
            if m.det() < 0.0 {
                continue;
            }
            let g = GroupElement::new(m.clone()).unwrap();
            let v: Vec<f64> = (0..k).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
            let w = MultiVector::new(k, 1, v.clone()).unwrap();
            let img = wedge_action(&g, &w);
            let want = m.mul_vec(&v);
            for (a, b) in img.coords().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn top_degree_is_determinant() {
        let g = GroupElement::new(
            Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let top = MultiVector::basis(2, 2, 0);
        let img = wedge_action(&g, &top);
        assert!((img.coords()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn functoriality_on_random_pairs() {
        let mut rng = derive_rng(203, 0, 0);
        for k in [3usize, 4, 5] {
            for _ in 0..40 {
                let rand_el = |rng: &mut rand_chacha::ChaCha8Rng| loop {
                    let mut m = Mat::identity(k);
                    for i in 0..k {
                        for j in 0..k {
                            m[(i, j)] += uniform_in(rng, -0.4, 0.4);
                        }
                    }
                    let det = m.det();
                    if det > 0.2 {
                        return GroupElement::new(m.scale(1.0 / det.powf(1.0 / k as f64)))
                            .unwrap();
                    }
                };
                let a = rand_el(&mut rng);
                let b = rand_el(&mut rng);
                for j in 1..k {
                    let lhs = wedge_matrix(a.mul(&b).mat(), j);
                    let rhs = wedge_matrix(a.mat(), j).mul(&wedge_matrix(b.mat(), j));
                    let rel = lhs.sub(&rhs).frobenius_norm() / rhs.frobenius_norm().max(1.0);
                    assert!(rel < 1e-10, "functoriality failed at k={k}, j={j}: {rel:e}");
                }
            }
        }
    }

    #[test]
    fn orthogonal_action_is_isometric() {
        let mut rng = derive_rng(205, 0, 0);
        for _ in 0..50 {
            // random rotation in 3 dimensions from three plane rotations
            let mut q = Mat::identity(3);
            for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let th = uniform_in(&mut rng, 0.0, std::f64::consts::TAU);
                let mut r = Mat::identity(3);
                r[(a, a)] = th.cos();
                r[(a, b)] = -th.sin();
                r[(b, a)] = th.sin();
                r[(b, b)] = th.cos();
                q = q.mul(&r);
            }
            let g = GroupElement::new(q).unwrap();
            for j in 1..3 {
                let dim = binomial(3, j);
                let coords: Vec<f64> =
                    (0..dim).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
                let w = MultiVector::new(3, j, coords).unwrap();
                let img = wedge_action(&g, &w);
                assert!((img.norm() - w.norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn norm_basics() {
        let w = MultiVector::basis(3, 2, 0); // e0 ^ e1
        assert_eq!(mv_norm(&w), 1.0);
        let z = MultiVector::new(3, 2, vec![0.0; 3]).unwrap();
        assert_eq!(mv_norm(&z), 0.0);
        assert_eq!(mv_norm(&MultiVector::basis(3, 2, 1).scale(3.0)), 3.0);
    }

    #[test]
    fn sup_norm_examples() {
        let dims = Dims::new(1, 1).unwrap();
        let t = ConeVector::new(dims, vec![1.0, 1.0]).unwrap();
        let e = GroupElement::identity(2);

        // w = e0 is fixed by u_Y and scaled by e^{t_0}
        let w = MultiVector::basis(2, 1, 0);
        let got = sup_norm_over_ball(&t, &e, &w, 0.7, 9).unwrap();
        assert!((got - 1.0f64.exp()).abs() < 1e-12);

        // w = e1: |(e^t Y, e^{-t})| maximized at |Y| = 1
        let w = MultiVector::basis(2, 1, 1);
        let got = sup_norm_over_ball(&t, &e, &w, 1.0, 11).unwrap();
        let want = (1.0f64.exp().powi(2) + (-1.0f64).exp().powi(2)).sqrt();
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        assert!((want - 2.7430).abs() < 1e-4);

        // refinement is monotone
        let coarse = sup_norm_over_ball(&t, &e, &w, 1.0, 8).unwrap();
        let fine = sup_norm_over_ball(&t, &e, &w, 1.0, 64).unwrap();
        assert!(fine >= coarse);
    }

    #[test]
    fn integer_multivector_counts() {
        let vs = enumerate_integer_multivectors(2, 1, 1.0).unwrap();
        assert_eq!(vs.len(), 4);

        let vs = enumerate_integer_multivectors(3, 2, 1.0).unwrap();
        assert_eq!(vs.len(), 6);

        let vs = enumerate_integer_multivectors(2, 1, (2.0f64).sqrt()).unwrap();
        assert_eq!(vs.len(), 8);
    }

    #[test]
    fn enumeration_budget_guard() {
        // C(8,4) = 70 axes at 3 values each overflows the node budget
        assert!(matches!(
            enumerate_integer_multivectors(8, 4, 1.0),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn delta_l_examples() {
        let e = GroupElement::identity(2);
        let r = delta_l(&e, 2.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert!(r.certified_exact);

        let g = GroupElement::new(
            Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap(),
        )
        .unwrap();
        let r = delta_l(&g, 2.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        assert_eq!(r.attained_degree, 1);
        let abs: Vec<i64> = r.attained_coords.iter().map(|x| x.abs()).collect();
        assert_eq!(abs, vec![0, 1]);

        // orthogonal: norms preserved, infimum 1, certified
        let th: f64 = 0.37;
        let q = GroupElement::new(
            Mat::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]).unwrap(),
        )
        .unwrap();
        let r = delta_l(&q, 2.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.certified_exact);
    }

    #[test]
    fn growth_along_cone_directions() {
        // pooled slope of log sup over floor(t) must be positive for random
        // unit multivectors (empirical growth bound at m=2, n=1)
        let dims = Dims::new(2, 1).unwrap();
        let e = GroupElement::identity(3);
        let mut rng = derive_rng(207, 0, 0);
        let mut points = Vec::new();
        for _ in 0..20 {
            let j = if rng.random::<bool>() { 1 } else { 2 };
            let dim = binomial(3, j);
            let coords: Vec<f64> = (0..dim).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
            let w = MultiVector::new(3, j, coords).unwrap();
            let w = w.scale(1.0 / w.norm());
            for s in [1.0f64, 2.0, 3.0] {
                let t = ConeVector::scaled_to_floor(dims, &[1.0, 2.0, 3.0], s).unwrap();
                let sup = sup_norm_over_ball(&t, &e, &w, 1.0, 9).unwrap();
                points.push((s, sup.ln()));
            }
        }
        let fit = crate::fitting::fit_line(&points).unwrap();
        assert!(fit.slope > 0.5, "pooled growth slope {}", fit.slope);
    }
}
