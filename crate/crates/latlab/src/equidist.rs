//! The headline experiment: translate integrals of bump densities against
//! lattice test functions, certified tensor quadrature, comparison with the
//! exact mean-value oracle, decay-rate fitting, and the explicit exponent
//! bookkeeping formulas.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{conj_phi, make_u_y, ConeVector, Dims, GroupElement, HorosphericalPoint};
use crate::lattice::{siegel_mean, siegel_transform_of_basis, Lattice, RadialFunction};
use crate::matrix::Mat;
use crate::quad::midpoints;
use crate::rng::pairwise_sum;
use crate::smooth::{AffineImage, BumpFunction, PointwiseProduct, SmoothFn};

/// A test function on the space of lattices with an exactly computable mean.
#[derive(Clone)]
pub enum TestFunction {
    /// Sum of a radial profile over primitive lattice vectors; its mean is
    /// the radial integral divided by zeta(k).
    Siegel(RadialFunction),
    /// A bounded profile of the first minimum; no exact mean, used for
    /// continuity and plumbing checks.
    Lambda1Profile(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl TestFunction {
    pub fn eval(&self, lattice: &Lattice) -> Result<f64> {
        match self {
            TestFunction::Siegel(f) => siegel_transform_of_basis(lattice.basis(), f),
            TestFunction::Lambda1Profile(f) => Ok(f(lattice.shortest_vector()?.lambda1)),
        }
    }

    /// Exact Haar mean, available for the primitive-sum kind.
    pub fn exact_mean(&self, k: usize) -> Result<f64> {
        match self {
            TestFunction::Siegel(f) => siegel_mean(f, k),
            TestFunction::Lambda1Profile(_) => Err(Error::InvalidArgument(
                "first-minimum profiles have no exact mean oracle".into(),
            )),
        }
    }
}

pub fn make_bump(dim: usize, radius: f64) -> Result<BumpFunction> {
    BumpFunction::new(dim, radius)
}

/// A quadrature value together with its refinement certificate.
#[derive(Clone, Copy, Debug)]
pub struct QuadValue {
    pub value: f64,
    /// Relative difference between the two finest refinements.
    pub refinement: f64,
    pub points_per_axis: usize,
}

/// Translate integral: integral over horospherical coordinates of
/// f(Y) psi(g u_Y z) certified by two quadrature refinements agreeing to
/// 0.5 percent.
///
/// For the primitive-sum test function with a diagonal translate and a
/// one-column horospherical block, the sum is unfolded through the
/// integral: each lattice vector contributes a small separable box where
/// its term is supported, integrated exactly by midpoint quadrature. This
/// is the same integral; the unfolding keeps every term resolved at large
/// flow times where a global grid could not see the narrow strips.
pub fn i_integral(
    f: &BumpFunction,
    psi: &TestFunction,
    g: &GroupElement,
    z: &Lattice,
    quad_points_per_axis: usize,
) -> Result<QuadValue> {
    if quad_points_per_axis < 8 {
        return Err(Error::InvalidArgument("need at least 8 quadrature points per axis".into()));
    }
    let dims = z.dims();
    let d = dims.m() * dims.n();
    if f.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "density lives on {} coordinates but the horospherical block has {}",
            f.dim(),
            d
        )));
    }
    if let TestFunction::Siegel(profile) = psi {
        if dims.n() == 1 && is_diagonal(g.mat()) {
            let per_term = (quad_points_per_axis / 8).clamp(16, 512);
            let coarse = unfolded_siegel_integral(f, profile, g, z, per_term)?;
            let fine = unfolded_siegel_integral(f, profile, g, z, per_term * 2)?;
            let refinement = (fine - coarse).abs() / fine.abs().max(1e-12);
            if refinement > 0.005 {
                return Err(Error::Accuracy(format!(
                    "unfolded quadrature refinements differ by {:.3}%",
                    refinement * 100.0
                )));
            }
            return Ok(QuadValue {
                value: fine,
                refinement,
                points_per_axis: per_term * 2,
            });
        }
    }
    if d >= 4 {
        // tensor grids are hopeless here; Monte Carlo with a reported
        // standard error stands in for the refinement certificate
        return mc_integral(f, psi, g, z, quad_points_per_axis);
    }
    let coarse = i_integral_at(f, psi, g, z, quad_points_per_axis)?;
    let fine = i_integral_at(f, psi, g, z, quad_points_per_axis * 2)?;
    let refinement = (fine - coarse).abs() / fine.abs().max(1e-12);
    if refinement > 0.005 {
        return Err(Error::Accuracy(format!(
            "quadrature refinements differ by {:.3}% at {} points per axis",
            refinement * 100.0,
            quad_points_per_axis * 2
        )));
    }
    Ok(QuadValue { value: fine, refinement, points_per_axis: quad_points_per_axis * 2 })
}

/// Monte Carlo estimate over the support box; `refinement` reports the
/// relative standard error.
fn mc_integral(
    f: &BumpFunction,
    psi: &TestFunction,
    g: &GroupElement,
    z: &Lattice,
    quad_points_per_axis: usize,
) -> Result<QuadValue> {
    let dims = z.dims();
    let d = dims.m() * dims.n();
    let r = f.radius();
    let samples = (quad_points_per_axis as u64).pow(2) * 64;
    let values: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            // fixed stream so the fallback stays deterministic
            let mut rng = crate::rng::derive_rng(0x51eb_851f, 30, i);
            let y: Vec<f64> = (0..d).map(|_| crate::rng::uniform_in(&mut rng, -r, r)).collect();
            let weight = f.eval(&y);
            if weight == 0.0 {
                return Ok(0.0);
            }
            let hp = HorosphericalPoint::from_slice(dims, &y)?;
            let basis = g.mat().mul(&make_u_y(dims, &hp).mat().mul(z.basis()));
            let lat = Lattice::new(dims, basis)
                .map_err(|e| Error::InvalidArgument(format!("translate left the space: {e}")))?;
            Ok(weight * psi.eval(&lat)?)
        })
        .collect();
    let mut vals = Vec::with_capacity(values.len());
    for v in values {
        vals.push(v?);
    }
    let vol = (2.0 * r).powi(d as i32);
    let n = vals.len() as f64;
    let mean = pairwise_sum(&vals) / n;
    let sq: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let se = vol * (pairwise_sum(&sq) / (n - 1.0) / n).sqrt();
    let value = mean * vol;
    Ok(QuadValue {
        value,
        refinement: se / value.abs().max(1e-12),
        points_per_axis: quad_points_per_axis,
    })
}

fn is_diagonal(m: &Mat) -> bool {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j && m[(i, j)].abs() > 1e-14 {
                return false;
            }
        }
    }
    true
}

/// Exact unfolding of the primitive-vector sum through the translate
/// integral for n = 1 and diagonal g: the term of a lattice vector
/// (v1, q) is supported on the box |v1_i + Y_i q| <= R / a_i, integrated
/// by a local midpoint grid.
fn unfolded_siegel_integral(
    f: &BumpFunction,
    profile: &RadialFunction,
    g: &GroupElement,
    z: &Lattice,
    per_term_axis: usize,
) -> Result<f64> {
    let dims = z.dims();
    let m = dims.m();
    let k = dims.k();
    let r_f = f.radius();
    let big_r = profile.support_radius();
    if big_r == 0.0 {
        return Ok(0.0);
    }
    let a: Vec<f64> = (0..m).map(|i| g.mat()[(i, i)]).collect();
    let b = g.mat()[(m, m)];
    // candidate box: |w_i| <= R/a_i + r |q| for i < m, |q| <= R/b
    let q_max = big_r / b;
    let mut scale = vec![0.0f64; k];
    for i in 0..m {
        scale[i] = 1.0 / (big_r / a[i] + r_f * q_max);
    }
    scale[m] = 1.0 / q_max;
    let w = Mat::from_fn(k, k, |i, j| if i == j { scale[i] } else { 0.0 });
    let scaled_basis = w.mul(z.basis());
    let candidates = crate::lattice::vectors_up_to_with_budget(
        &scaled_basis,
        (k as f64).sqrt() * (1.0 + 1e-12),
        crate::lattice::UNFOLD_BUDGET,
    )?;

    let values: Vec<f64> = candidates
        .par_iter()
        .map(|(coeffs, _scaled_vec, _n)| {
            if crate::lattice::coeffs_gcd(coeffs) != 1 {
                return 0.0;
            }
            let cf: Vec<f64> = coeffs.iter().map(|&c| c as f64).collect();
            let v = z.basis().mul_vec(&cf);
            let q = v[m];
            if (b * q).abs() > big_r {
                return 0.0;
            }
            term_integral(f, profile, &a, b, &v[..m], q, r_f, big_r, per_term_axis)
        })
        .collect();
    Ok(pairwise_sum(&values))
}

/// Integral over the sub-box of supp f where one lattice vector's term is
/// alive.
#[allow(clippy::too_many_arguments)]
fn term_integral(
    f: &BumpFunction,
    profile: &RadialFunction,
    a: &[f64],
    b: f64,
    v1: &[f64],
    q: f64,
    r_f: f64,
    big_r: f64,
    per_axis: usize,
) -> f64 {
    let m = a.len();
    let tail2 = (b * q) * (b * q);
    if q == 0.0 {
        // constant in Y: profile of the fixed vector times the unit mass of
        // f restricted to its support (the term exists only if inside)
        let n2: f64 = v1.iter().zip(a).map(|(vi, ai)| (ai * vi) * (ai * vi)).sum();
        let norm = (n2 + tail2).sqrt();
        if norm > big_r {
            return 0.0;
        }
        return profile.eval(norm);
    }
    // per-axis interval where |v1_i + Y_i q| <= R / a_i, clipped to supp f
    let mut lo = vec![0.0f64; m];
    let mut hi = vec![0.0f64; m];
    for i in 0..m {
        let half = big_r / (a[i] * q.abs());
        let center = -v1[i] / q;
        lo[i] = (center - half).max(-r_f);
        hi[i] = (center + half).min(r_f);
        if lo[i] >= hi[i] {
            return 0.0;
        }
    }
    let axes: Vec<Vec<f64>> = (0..m).map(|i| midpoints(lo[i], hi[i], per_axis)).collect();
    let cell: f64 = (0..m).map(|i| (hi[i] - lo[i]) / per_axis as f64).product();
    let mut total = 0.0;
    let counts = vec![per_axis; m];
    let mut y = vec![0.0f64; m];
    crate::quad::tensor_indices(&counts, |idx| {
        for (i, &ii) in idx.iter().enumerate() {
            y[i] = axes[i][ii];
        }
        let weight = f.eval(&y);
        if weight == 0.0 {
            return;
        }
        let mut n2 = tail2;
        for i in 0..m {
            let c = a[i] * (v1[i] + y[i] * q);
            n2 += c * c;
        }
        total += weight * profile.eval(n2.sqrt());
    });
    total * cell
}

fn i_integral_at(
    f: &BumpFunction,
    psi: &TestFunction,
    g: &GroupElement,
    z: &Lattice,
    per_axis: usize,
) -> Result<f64> {
    let dims = z.dims();
    let d = dims.m() * dims.n();
    let r = f.radius();
    let axes: Vec<Vec<f64>> = (0..d).map(|_| midpoints(-r, r, per_axis)).collect();
    let cell = (2.0 * r / per_axis as f64).powi(d as i32);
    let total: usize = per_axis.pow(d as u32);

    let values: Vec<Result<f64>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; d];
            let mut rem = flat;
            for axis in (0..d).rev() {
                idx[axis] = rem % per_axis;
                rem /= per_axis;
            }
            let y: Vec<f64> = (0..d).map(|i| axes[i][idx[i]]).collect();
            let weight = f.eval(&y);
            if weight == 0.0 {
                return Ok(0.0);
            }
            let hp = HorosphericalPoint::from_slice(dims, &y)?;
            let basis = g.mat().mul(&make_u_y(dims, &hp).mat().mul(z.basis()));
            let lat = Lattice::new(dims, basis)
                .map_err(|e| Error::InvalidArgument(format!("translate left the space: {e}")))?;
            Ok(weight * psi.eval(&lat)?)
        })
        .collect();
    let mut flat_vals = Vec::with_capacity(values.len());
    for v in values {
        flat_vals.push(v?);
    }
    Ok(pairwise_sum(&flat_vals) * cell)
}

/// Absolute difference between the translate integral and the exact mean of
/// the test function (which must be of the primitive-sum kind).
#[derive(Clone, Copy, Debug)]
pub struct EquidistPoint {
    pub floor_t: f64,
    pub i_value: f64,
    pub target: f64,
    pub error: f64,
    pub refinement: f64,
}

pub fn equidist_error(
    f: &BumpFunction,
    psi: &TestFunction,
    t: &ConeVector,
    z: &Lattice,
    quad_points_per_axis: usize,
) -> Result<EquidistPoint> {
    let target = psi.exact_mean(z.k())?;
    let g = crate::group::make_g_vt(t);
    let quad = i_integral(f, psi, &g, z, quad_points_per_axis)?;
    Ok(EquidistPoint {
        floor_t: t.floor(),
        i_value: quad.value,
        target,
        error: (quad.value - target).abs(),
        refinement: quad.refinement,
    })
}

pub use crate::fitting::{decay_fit, DecayFit};

// ---------------------------------------------------------------------------
// Exponent bookkeeping formulas

/// Dimension of the block-lower-triangular group: m^2 + mn + n^2 - 1.
pub fn thickening_dimension(dims: Dims) -> usize {
    dims.lower_triangular_dim()
}

/// The effective decay exponent produced by the balancing step:
/// gamma / (1 + m n k (k-1) (2 l + N/2)) with N = m^2 + mn + n^2 - 1.
pub fn gamma_tilde(gamma: f64, ell: usize, dims: Dims) -> f64 {
    let m = dims.m() as f64;
    let n = dims.n() as f64;
    let k = dims.k() as f64;
    let big_n = thickening_dimension(dims) as f64;
    gamma / (1.0 + m * n * k * (k - 1.0) * (2.0 * ell as f64 + big_n / 2.0))
}

/// The mixing-side error bound E (r |f|_1 + r^-(2l + N/2) |f|_l e^{-gamma t}).
#[allow(clippy::too_many_arguments)]
pub fn rhs_mixing_bound(
    e: f64,
    r: f64,
    f_l1: f64,
    f_sobolev: f64,
    ell: usize,
    big_n: usize,
    gamma: f64,
    t: f64,
) -> f64 {
    e * (r * f_l1 + r.powf(-(2.0 * ell as f64 + big_n as f64 / 2.0)) * f_sobolev * (-gamma * t).exp())
}

/// The Mahler-set scale chosen in the final balancing: ((2/c) e^{-beta t})^(1/k).
pub fn eps_of_balancing(c: f64, beta: f64, t: f64, k: usize) -> f64 {
    ((2.0 / c) * (-beta * t).exp()).powf(1.0 / k as f64)
}

/// The precomposed-and-localized density y -> f(contract(y) + y_h) theta(y)
/// used in the thickening bookkeeping: `u` contracts coordinates entrywise
/// with rates e^{-(u_i + u_{m+j})} and y_h shifts by the base point of the
/// outer integral.
pub fn contracted_localized_density(
    f: &Arc<BumpFunction>,
    theta: &Arc<BumpFunction>,
    u: &ConeVector,
    y_h: &[f64],
) -> Result<PointwiseProduct> {
    let dims = u.dims();
    let d = dims.m() * dims.n();
    if f.dim() != d || theta.dim() != d || y_h.len() != d {
        return Err(Error::InvalidArgument("dimension mismatch in density bookkeeping".into()));
    }
    // entrywise contraction rates of the inverse conjugation
    let ones = HorosphericalPoint::from_slice(dims, &vec![1.0; d])?;
    let rates = conj_phi(u, &ones, true);
    let scale: Vec<f64> = rates.coords().data().to_vec();
    let inner = AffineImage {
        inner: f.clone() as Arc<dyn SmoothFn>,
        scale,
        shift: y_h.to_vec(),
    };
    Ok(PointwiseProduct { a: Arc::new(inner), b: theta.clone() as Arc<dyn SmoothFn> })
}
