//! Compactly supported smooth functions: the fixed normalized bump family
//! with analytic derivatives up to third order, pointwise products, tensor
//! products, affine reparametrizations, and (2,l)-Sobolev / C^l norms with a
//! grid-refinement certificate.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::sphere_area;
use crate::quad::{integrate_1d, midpoints, tensor_indices};

/// A smooth compactly supported function on R^N. Derivatives default to
/// nested central differences; implementations override with analytic
/// formulas where available.
pub trait SmoothFn: Send + Sync {
    fn dim(&self) -> usize;
    /// Axis-aligned box (lower, upper) containing the support.
    fn support_box(&self) -> (Vec<f64>, Vec<f64>);
    fn eval(&self, x: &[f64]) -> f64;
    /// Mixed partial derivative for the multi-index beta.
    fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        central_difference(self_dyn(self), x, beta)
    }
}

// helper to get a &dyn out of &Self in the default method
fn self_dyn<T: SmoothFn + ?Sized>(f: &T) -> &T {
    f
}

/// Nested central differences; step sized for total orders up to 3.
pub fn central_difference<T: SmoothFn + ?Sized>(f: &T, x: &[f64], beta: &[usize]) -> f64 {
    let order: usize = beta.iter().sum();
    if order == 0 {
        return f.eval(x);
    }
    let axis = beta.iter().position(|&b| b > 0).unwrap();
    let (lo, hi) = f.support_box();
    let h = 5e-4 * (hi[axis] - lo[axis]).max(1e-6);
    let mut down = beta.to_vec();
    down[axis] -= 1;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[axis] += h;
    xm[axis] -= h;
    (f.partial(&xp, &down) - f.partial(&xm, &down)) / (2.0 * h)
}

/// All multi-indices of total order <= max_order, graded then lexicographic.
pub fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=max_order {
        let mut cur = vec![0usize; dim];
        fill(dim, total, 0, &mut cur, &mut out);
    }
    return out;

    fn fill(dim: usize, left: usize, axis: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis == dim - 1 {
            cur[axis] = left;
            out.push(cur.clone());
            return;
        }
        for take in 0..=left {
            cur[axis] = take;
            fill(dim, left - take, axis + 1, cur, out);
        }
    }
}

// ---------------------------------------------------------------------------
// The fixed bump family

/// Normalized radial bump c * exp(-1/(1 - |x/r|^2)) supported in the open
/// ball of radius r, with unit integral. The family satisfies
/// bump(N, r)(x) = r^-N bump(N, 1)(x/r) exactly.
#[derive(Clone, Debug)]
pub struct BumpFunction {
    dim: usize,
    radius: f64,
    normalization: f64,
}

impl BumpFunction {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("bump dimension must be >= 1".into()));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidArgument("bump radius must be positive".into()));
        }
        let unit_mass = unit_bump_mass(dim)?;
        Ok(BumpFunction { dim, radius, normalization: 1.0 / (unit_mass * radius.powi(dim as i32)) })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }
}

/// Integral of exp(-1/(1-|x|^2)) over the unit ball in R^N, by radial
/// quadrature; cached per dimension.
fn unit_bump_mass(dim: usize) -> Result<f64> {
    use std::sync::OnceLock;
    static CACHE: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, f64>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(std::collections::HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&dim) {
        return Ok(v);
    }
    let nm1 = (dim - 1) as i32;
    let radial = integrate_1d(
        &|s| {
            if s >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - s * s)).exp() * s.powi(nm1)
            }
        },
        0.0,
        1.0,
        1e-12,
        1e-300,
    )?;
    let v = if dim == 1 { 2.0 * radial } else { sphere_area(dim) * radial };
    cache.lock().unwrap().insert(dim, v);
    Ok(v)
}

/// G(s) = e^{-1/(1-s)} together with its first three derivatives in s,
/// evaluated safely near the boundary.
fn profile_derivatives(s: f64) -> [f64; 4] {
    if s >= 1.0 {
        return [0.0; 4];
    }
    let w = 1.0 / (1.0 - s);
    if w > 500.0 {
        return [0.0; 4]; // e^{-w} underflows any power of w
    }
    let g = (-w).exp();
    let g1 = -w * w * g;
    let g2 = (w.powi(4) - 2.0 * w.powi(3)) * g;
    let g3 = (-w.powi(6) + 6.0 * w.powi(5) - 6.0 * w.powi(4)) * g;
    [g, g1, g2, g3]
}

impl SmoothFn for BumpFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-self.radius; self.dim], vec![self.radius; self.dim])
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        self.normalization * profile_derivatives(s)[0]
    }

    fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        let order: usize = beta.iter().sum();
        if order > 3 {
            return central_difference(self, x, beta);
        }
        let r2 = self.radius * self.radius;
        let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / r2;
        let g = profile_derivatives(s);
        let c = self.normalization;
        // derivative axes with multiplicity
        let mut axes = Vec::with_capacity(order);
        for (i, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                axes.push(i);
            }
        }
        let d = |i: usize| 2.0 * x[i] / r2; // d s / d x_i
        let dd = 2.0 / r2; // d^2 s / d x_i^2 (diagonal only)
        match order {
            0 => c * g[0],
            1 => c * g[1] * d(axes[0]),
            2 => {
                let (i, j) = (axes[0], axes[1]);
                let kron = if i == j { dd } else { 0.0 };
                c * (g[2] * d(i) * d(j) + g[1] * kron)
            }
            3 => {
                let (i, j, l) = (axes[0], axes[1], axes[2]);
                let mut v = g[3] * d(i) * d(j) * d(l);
                if i == j {
                    v += g[2] * dd * d(l);
                }
                if i == l {
                    v += g[2] * dd * d(j);
                }
                if j == l {
                    v += g[2] * dd * d(i);
                }
                c * v
            }
            _ => unreachable!(),
        }
    }
}

// ---------------------------------------------------------------------------
// Combinators

/// factor * f.
pub struct ScaledFn {
    pub inner: Arc<dyn SmoothFn>,
    pub factor: f64,
}

impl SmoothFn for ScaledFn {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.support_box()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.eval(x)
    }
    fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        self.factor * self.inner.partial(x, beta)
    }
}

/// f(scale . x + shift) with positive per-axis scales.
pub struct AffineImage {
    pub inner: Arc<dyn SmoothFn>,
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl AffineImage {
    fn map(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &v)| self.scale[i] * v + self.shift[i]).collect()
    }
}

impl SmoothFn for AffineImage {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.inner.support_box();
        let mut out_lo = vec![0.0; lo.len()];
        let mut out_hi = vec![0.0; hi.len()];
        for i in 0..lo.len() {
            out_lo[i] = (lo[i] - self.shift[i]) / self.scale[i];
            out_hi[i] = (hi[i] - self.shift[i]) / self.scale[i];
        }
        (out_lo, out_hi)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.inner.eval(&self.map(x))
    }

    fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        let chain: f64 =
            beta.iter().enumerate().map(|(i, &b)| self.scale[i].powi(b as i32)).product();
        chain * self.inner.partial(&self.map(x), beta)
    }
}

/// Pointwise product of two functions on the same space; derivatives by the
/// general Leibniz rule over the factors' analytic partials.
pub struct PointwiseProduct {
    pub a: Arc<dyn SmoothFn>,
    pub b: Arc<dyn SmoothFn>,
}

impl SmoothFn for PointwiseProduct {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (alo, ahi) = self.a.support_box();
        let (blo, bhi) = self.b.support_box();
        let lo: Vec<f64> = alo.iter().zip(&blo).map(|(x, y)| x.max(*y)).collect();
        let hi: Vec<f64> = ahi.iter().zip(&bhi).map(|(x, y)| x.min(*y)).collect();
        (lo, hi)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.a.eval(x) * self.b.eval(x)
    }

    fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        let dim = beta.len();
        // sum over gamma <= beta of prod(C(beta_i, gamma_i)) d^gamma a d^(beta-gamma) b
        let mut total = 0.0;
        let mut gamma = vec![0usize; dim];
        loop {
            let mut coeff = 1.0;
            for i in 0..dim {
                coeff *= crate::exterior::binomial(beta[i], gamma[i]) as f64;
            }
            let rest: Vec<usize> = beta.iter().zip(&gamma).map(|(b, g)| b - g).collect();
            total += coeff * self.a.partial(x, &gamma) * self.b.partial(x, &rest);
            // next gamma <= beta
            let mut axis = 0;
            loop {
                if axis == dim {
                    return total;
                }
                if gamma[axis] < beta[axis] {
                    gamma[axis] += 1;
                    break;
                }
                gamma[axis] = 0;
                axis += 1;
            }
        }
    }
}

/// f(x1) g(x2) on the product space.
pub struct TensorProduct {
    pub a: Arc<dyn SmoothFn>,
    pub b: Arc<dyn SmoothFn>,
}

impl SmoothFn for TensorProduct {
    fn dim(&self) -> usize {
        self.a.dim() + self.b.dim()
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = self.a.support_box();
        let (blo, bhi) = self.b.support_box();
        lo.extend(blo);
        hi.extend(bhi);
        (lo, hi)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let na = self.a.dim();
        self.a.eval(&x[..na]) * self.b.eval(&x[na..])
    }

    fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        let na = self.a.dim();
        self.a.partial(&x[..na], &beta[..na]) * self.b.partial(&x[na..], &beta[na..])
    }
}

// ---------------------------------------------------------------------------
// Norms

/// (2,l)-Sobolev norm: sqrt of the sum over multi-indices of order <= l of
/// the squared L2 norms of partial derivatives, by midpoint tensor
/// quadrature. Two grid refinements must agree to 1 percent.
pub fn sobolev_norm(f: &dyn SmoothFn, ell: usize) -> Result<f64> {
    let coarse = sobolev_norm_at(f, ell, base_resolution(f.dim()))?;
    let fine = sobolev_norm_at(f, ell, 2 * base_resolution(f.dim()))?;
    let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
    if rel > 0.01 {
        return Err(Error::Accuracy(format!(
            "Sobolev norm refinements differ by {:.2}% (coarse {coarse:.6e}, fine {fine:.6e})",
            rel * 100.0
        )));
    }
    Ok(fine)
}

fn base_resolution(dim: usize) -> usize {
    match dim {
        1 => 2048,
        2 => 96,
        3 => 24,
        _ => 10,
    }
}

fn sobolev_norm_at(f: &dyn SmoothFn, ell: usize, per_axis: usize) -> Result<f64> {
    let dim = f.dim();
    let (lo, hi) = f.support_box();
    for i in 0..dim {
        if hi[i] <= lo[i] {
            return Ok(0.0); // empty support intersection
        }
    }
    let axes: Vec<Vec<f64>> = (0..dim).map(|i| midpoints(lo[i], hi[i], per_axis)).collect();
    let cell: f64 = (0..dim).map(|i| (hi[i] - lo[i]) / per_axis as f64).product();
    let betas = multi_indices(dim, ell);
    let mut sums = vec![0.0f64; betas.len()];
    let counts = vec![per_axis; dim];
    let mut x = vec![0.0f64; dim];
    tensor_indices(&counts, |idx| {
        for (i, &ii) in idx.iter().enumerate() {
            x[i] = axes[i][ii];
        }
        for (bi, beta) in betas.iter().enumerate() {
            let v = f.partial(&x, beta);
            sums[bi] += v * v;
        }
    });
    Ok((sums.iter().sum::<f64>() * cell).sqrt())
}

/// C^l norm: grid supremum of |d^beta f| over multi-indices of order <= l.
pub fn c_ell_norm(f: &dyn SmoothFn, ell: usize) -> f64 {
    let dim = f.dim();
    let per_axis = 2 * base_resolution(dim) + 1;
    let (lo, hi) = f.support_box();
    let axes: Vec<Vec<f64>> =
        (0..dim).map(|i| crate::quad::linspace(lo[i], hi[i], per_axis)).collect();
    let betas = multi_indices(dim, ell);
    let counts = vec![per_axis; dim];
    let mut best = 0.0f64;
    let mut x = vec![0.0f64; dim];
    tensor_indices(&counts, |idx| {
        for (i, &ii) in idx.iter().enumerate() {
            x[i] = axes[i][ii];
        }
        for beta in &betas {
            best = best.max(f.partial(&x, beta).abs());
        }
    });
    best
}

/// Plain integral of f over its support box by midpoint quadrature with one
/// refinement (used to verify bump normalization independently of the radial
/// construction).
pub fn integral(f: &dyn SmoothFn) -> Result<f64> {
    let run = |per_axis: usize| -> f64 {
        let dim = f.dim();
        let (lo, hi) = f.support_box();
        let axes: Vec<Vec<f64>> = (0..dim).map(|i| midpoints(lo[i], hi[i], per_axis)).collect();
        let cell: f64 = (0..dim).map(|i| (hi[i] - lo[i]) / per_axis as f64).product();
        let counts = vec![per_axis; dim];
        let mut total = 0.0;
        let mut x = vec![0.0f64; dim];
        tensor_indices(&counts, |idx| {
            for (i, &ii) in idx.iter().enumerate() {
                x[i] = axes[i][ii];
            }
            total += f.eval(&x);
        });
        total * cell
    };
    let coarse = run(base_resolution(f.dim()));
    let fine = run(2 * base_resolution(f.dim()));
    let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
    if rel > 0.01 {
        return Err(Error::Accuracy("integral refinements disagree".into()));
    }
    Ok(fine)
}
