//! Lattice layer: floating-point LLL reduction with an exact unimodular
//! transform, certified shortest vectors by depth-first enumeration, Mahler
//! set membership, an injectivity-radius sweep over bounded integer
//! unimodular matrices, and the primitive-vector transform with its exact
//! mean-value oracle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Dims, GroupElement};
use crate::matrix::{norm, Mat};
use crate::quad::integrate_1d;

/// Hard cap on enumeration nodes per query; exceeding it is an explicit
/// error, never a silent truncation.
pub const ENUM_BUDGET: u64 = 10_000_000;

/// LLL reduction parameter.
pub const LLL_DELTA: f64 = 0.99;

/// A unimodular lattice given by a column-generator basis.
#[derive(Clone, Debug)]
pub struct Lattice {
    dims: Dims,
    basis: Mat,
}

impl Lattice {
    pub fn new(dims: Dims, basis: Mat) -> Result<Self> {
        if !basis.is_square() || basis.rows() != dims.k() {
            return Err(Error::InvalidArgument("basis must be k x k".into()));
        }
        if basis.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite basis entry".into()));
        }
        let det = basis.det();
        if (det - 1.0).abs() > crate::group::DET_TOL {
            return Err(Error::InvalidArgument(format!(
                "basis determinant {det:.12e} is not 1 (columns generate, order them so det = +1)"
            )));
        }
        Ok(Lattice { dims, basis })
    }

    /// The integer lattice Z^k.
    pub fn standard(dims: Dims) -> Self {
        Lattice { dims, basis: Mat::identity(dims.k()) }
    }

    pub fn from_group_element(dims: Dims, g: &GroupElement) -> Self {
        Lattice { dims, basis: g.mat().clone() }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn k(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// Act by a group element on the left.
    pub fn translate(&self, g: &GroupElement) -> Lattice {
        Lattice { dims: self.dims, basis: g.mat().mul(&self.basis) }
    }

    pub fn shortest_vector(&self) -> Result<ShortVectorResult> {
        shortest_vector_of_basis(&self.basis)
    }

    /// Mahler set membership: no nonzero vector shorter than eps.
    pub fn in_k_eps(&self, eps: f64) -> Result<bool> {
        if eps <= 0.0 {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        Ok(self.shortest_vector()?.lambda1 >= eps)
    }

    pub fn lll_reduce(&self) -> Result<Lattice> {
        let (basis, _u) = lll_reduce_basis(&self.basis)?;
        Ok(Lattice { dims: self.dims, basis })
    }
}

/// A certified shortest nonzero vector.
#[derive(Clone, Debug)]
pub struct ShortVectorResult {
    /// The vector itself, basis * coeffs.
    pub vector: Vec<f64>,
    /// Integer coordinates in the basis the query was made with.
    pub coeffs: Vec<i64>,
    /// Euclidean length of `vector`.
    pub lambda1: f64,
}

/// Exact first minimum of an arbitrary nonsingular basis (unimodularity is
/// not required here; the nondivergence experiments feed general affine
/// images through this entry point).
pub fn shortest_vector_of_basis(basis: &Mat) -> Result<ShortVectorResult> {
    let k = basis.rows();
    if k > 8 {
        return Err(Error::InvalidArgument("shortest vector queries support k <= 8".into()));
    }
    let (reduced, u) = lll_reduce_basis(basis)?;
    let gs = gram_schmidt(&reduced)?;
    // initial radius: shortest reduced basis column
    let mut radius2 = f64::INFINITY;
    for j in 0..k {
        let c = reduced.column(j);
        radius2 = radius2.min(crate::matrix::dot(&c, &c));
    }
    let mut best: Option<(Vec<i64>, f64)> = None;
    let mut budget = ENUM_BUDGET;
    let res = enumerate_min(&gs, radius2 * (1.0 + 1e-12), &mut best, &mut budget);
    if let Err(e) = res {
        return Err(match e {
            Error::BudgetExceeded { visited, .. } => Error::BudgetExceeded {
                visited,
                best_so_far: best.as_ref().map(|b| b.1.sqrt()),
                context: "shortest vector enumeration".into(),
            },
            other => other,
        });
    }
    let (c_red, norm2) = best.expect("a reduced basis column is always a candidate");
    // map coefficients back through the unimodular transform
    let coeffs: Vec<i64> = (0..k).map(|i| (0..k).map(|j| u[i][j] * c_red[j]).sum()).collect();
    let vector = basis.mul_vec(&coeffs.iter().map(|&c| c as f64).collect::<Vec<_>>());
    Ok(ShortVectorResult { vector, coeffs, lambda1: norm2.sqrt() })
}

/// Budget for the internal enumerations backing unfolded integrals; far
/// larger than the per-query budget because a single integral touches every
/// contributing lattice vector once.
pub const UNFOLD_BUDGET: u64 = 400_000_000;

/// All lattice vectors of norm <= radius, as (coeffs in the query basis,
/// vector, norm). The zero vector is excluded.
pub fn vectors_up_to(basis: &Mat, radius: f64) -> Result<Vec<(Vec<i64>, Vec<f64>, f64)>> {
    vectors_up_to_with_budget(basis, radius, ENUM_BUDGET)
}

pub fn vectors_up_to_with_budget(
    basis: &Mat,
    radius: f64,
    node_budget: u64,
) -> Result<Vec<(Vec<i64>, Vec<f64>, f64)>> {
    let k = basis.rows();
    let (reduced, u) = lll_reduce_basis(basis)?;
    let gs = gram_schmidt(&reduced)?;
    let mut out = Vec::new();
    let mut budget = node_budget;
    enumerate_list(
        &gs,
        radius * radius * (1.0 + 1e-12),
        &mut |c_red, _n2| {
            let coeffs: Vec<i64> =
                (0..k).map(|i| (0..k).map(|j| u[i][j] * c_red[j]).sum()).collect();
            out.push(coeffs);
        },
        &mut budget,
    )
    .map_err(|e| match e {
        Error::BudgetExceeded { .. } => Error::BudgetExceeded {
            visited: node_budget,
            best_so_far: None,
            context: "lattice point enumeration".into(),
        },
        other => other,
    })?;
    let mut rows = Vec::with_capacity(out.len());
    for coeffs in out {
        let v = basis.mul_vec(&coeffs.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let n = norm(&v);
        rows.push((coeffs, v, n));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// LLL

/// Floating-point LLL (delta = 0.99) on column generators. Returns the
/// reduced basis together with the exact integer unimodular transform U such
/// that reduced = basis * U.
pub fn lll_reduce_basis(basis: &Mat) -> Result<(Mat, Vec<Vec<i64>>)> {
    let k = basis.rows();
    let mut b: Vec<Vec<f64>> = (0..k).map(|j| basis.column(j)).collect();
    let mut u: Vec<Vec<i64>> =
        (0..k).map(|i| (0..k).map(|j| if i == j { 1 } else { 0 }).collect()).collect();

    let mut mu = vec![vec![0.0f64; k]; k];
    let mut bstar_norm2 = vec![0.0f64; k];
    let scale: f64 = b.iter().map(|c| crate::matrix::dot(c, c)).sum::<f64>().max(1e-300);

    let recompute =
        |b: &Vec<Vec<f64>>, mu: &mut Vec<Vec<f64>>, bsn2: &mut Vec<f64>| -> Result<()> {
            let k = b.len();
            let d = b[0].len();
            let mut bstar = vec![vec![0.0f64; d]; k];
            for i in 0..k {
                bstar[i].copy_from_slice(&b[i]);
                for j in 0..i {
                    let num = crate::matrix::dot(&b[i], &bstar[j]);
                    mu[i][j] = if bsn2[j] == 0.0 { 0.0 } else { num / bsn2[j] };
                    for t in 0..d {
                        bstar[i][t] -= mu[i][j] * bstar[j][t];
                    }
                }
                bsn2[i] = crate::matrix::dot(&bstar[i], &bstar[i]);
                if bsn2[i] < 1e-24 * scale {
                    return Err(Error::RankDeficient(
                        "numerically dependent columns in lattice basis".into(),
                    ));
                }
            }
            Ok(())
        };

    recompute(&b, &mut mu, &mut bstar_norm2)?;
    let mut kk = 1usize;
    let mut steps = 0u64;
    while kk < k {
        steps += 1;
        if steps > 100_000 {
            return Err(Error::RankDeficient("reduction failed to terminate".into()));
        }
        for j in (0..kk).rev() {
            let r = mu[kk][j].round();
            if r != 0.0 {
                let ri = r as i64;
                for t in 0..k {
                    b[kk][t] -= r * b[j][t];
                    u[t][kk] -= ri * u[t][j];
                }
                recompute(&b, &mut mu, &mut bstar_norm2)?;
            }
        }
        if bstar_norm2[kk] + mu[kk][kk - 1].powi(2) * bstar_norm2[kk - 1]
            >= LLL_DELTA * bstar_norm2[kk - 1]
        {
            kk += 1;
        } else {
            b.swap(kk, kk - 1);
            for t in 0..k {
                u[t].swap(kk, kk - 1);
            }
            recompute(&b, &mut mu, &mut bstar_norm2)?;
            kk = kk.max(2) - 1;
        }
    }
    let mut reduced = Mat::zeros(k, k);
    for (j, col) in b.iter().enumerate() {
        reduced.set_column(j, col);
    }
    Ok((reduced, u))
}

struct GramSchmidt {
    k: usize,
    mu: Vec<Vec<f64>>,
    bstar_norm2: Vec<f64>,
}

fn gram_schmidt(basis: &Mat) -> Result<GramSchmidt> {
    let k = basis.rows();
    let b: Vec<Vec<f64>> = (0..k).map(|j| basis.column(j)).collect();
    let mut mu = vec![vec![0.0f64; k]; k];
    let mut bstar = vec![vec![0.0f64; k]; k];
    let mut bsn2 = vec![0.0f64; k];
    for i in 0..k {
        bstar[i].copy_from_slice(&b[i]);
        for j in 0..i {
            let num = crate::matrix::dot(&b[i], &bstar[j]);
            mu[i][j] = if bsn2[j] == 0.0 { 0.0 } else { num / bsn2[j] };
            for t in 0..k {
                bstar[i][t] -= mu[i][j] * bstar[j][t];
            }
        }
        bsn2[i] = crate::matrix::dot(&bstar[i], &bstar[i]);
        if bsn2[i] <= 0.0 {
            return Err(Error::RankDeficient("orthogonalization collapsed".into()));
        }
    }
    Ok(GramSchmidt { k, mu, bstar_norm2: bsn2 })
}

// Depth-first enumeration over the Gram-Schmidt cone. Levels go from the
// last coordinate down to the first; at each level the coordinate ranges
// over an interval determined by the remaining squared radius.

fn enumerate_min(
    gs: &GramSchmidt,
    radius2: f64,
    best: &mut Option<(Vec<i64>, f64)>,
    budget: &mut u64,
) -> Result<()> {
    let mut coeffs = vec![0i64; gs.k];
    let mut bound2 = radius2;
    walk(
        gs,
        gs.k,
        0.0,
        &mut coeffs,
        &mut |c, n2| {
            if n2 > 0.0 && best.as_ref().map_or(true, |b| n2 < b.1) {
                *best = Some((c.to_vec(), n2));
            }
        },
        &mut bound2,
        true,
        budget,
        "shortest vector enumeration",
    )
}

fn enumerate_list(
    gs: &GramSchmidt,
    radius2: f64,
    visit: &mut dyn FnMut(&[i64], f64),
    budget: &mut u64,
) -> Result<()> {
    let mut coeffs = vec![0i64; gs.k];
    let mut bound2 = radius2;
    walk(
        gs,
        gs.k,
        0.0,
        &mut coeffs,
        &mut |c, n2| {
            if n2 > 0.0 {
                visit(c, n2);
            }
        },
        &mut bound2,
        false,
        budget,
        "lattice point enumeration",
    )
}

#[allow(clippy::too_many_arguments)]
fn walk(
    gs: &GramSchmidt,
    level: usize,
    partial2: f64,
    coeffs: &mut Vec<i64>,
    emit: &mut dyn FnMut(&[i64], f64),
    bound2: &mut f64,
    shrink: bool,
    budget: &mut u64,
    context: &str,
) -> Result<()> {
    if level == 0 {
        emit(coeffs, partial2);
        if shrink && partial2 > 0.0 && partial2 < *bound2 {
            *bound2 = partial2;
        }
        return Ok(());
    }
    let j = level - 1;
    // center of the allowed interval for coordinate j given choices above
    let center: f64 = -(j + 1..gs.k).map(|i| gs.mu[i][j] * coeffs[i] as f64).sum::<f64>();
    let room = *bound2 - partial2;
    if room < 0.0 {
        return Ok(());
    }
    let half_width = (room.max(0.0) / gs.bstar_norm2[j]).sqrt();
    let lo = (center - half_width - 1e-9).ceil() as i64;
    let hi = (center + half_width + 1e-9).floor() as i64;
    for c in lo..=hi {
        if *budget == 0 {
            return Err(Error::BudgetExceeded {
                visited: ENUM_BUDGET,
                best_so_far: None,
                context: context.into(),
            });
        }
        *budget -= 1;
        coeffs[j] = c;
        let offset = c as f64 - center;
        let add = gs.bstar_norm2[j] * offset * offset;
        if partial2 + add <= *bound2 * (1.0 + 1e-12) {
            walk(gs, j, partial2 + add, coeffs, emit, bound2, shrink, budget, context)?;
        }
    }
    coeffs[j] = 0;
    Ok(())
}

// ---------------------------------------------------------------------------
// Radial test functions and the primitive-vector transform

/// A bounded radial profile with compact support, evaluated on the
/// Euclidean norm.
#[derive(Clone)]
pub struct RadialFunction {
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support_radius: f64,
}

impl RadialFunction {
    pub fn new(
        profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support_radius: f64,
    ) -> Result<Self> {
        if !support_radius.is_finite() || support_radius < 0.0 {
            return Err(Error::InvalidArgument("support radius must be finite and >= 0".into()));
        }
        Ok(RadialFunction { profile, support_radius })
    }

    /// Sharp indicator of the closed ball of the given radius.
    pub fn ball_indicator(radius: f64) -> Self {
        RadialFunction {
            profile: Arc::new(move |r| if r <= radius { 1.0 } else { 0.0 }),
            support_radius: radius,
        }
    }

    /// Indicator of the ball mollified over a shell of relative width
    /// `delta` around the boundary. The transition is applied in the
    /// squared-radius variable with an odd-symmetric smoothstep, so in
    /// dimension 2 the total mass equals the sharp ball's mass exactly.
    pub fn smoothed_ball_indicator(radius: f64, delta: f64) -> Result<Self> {
        if radius <= 0.0 || delta <= 0.0 || 2.0 * delta > radius {
            return Err(Error::InvalidArgument(
                "need 0 < delta <= radius/2 for the smoothed indicator".into(),
            ));
        }
        let r2 = radius * radius;
        let width = 2.0 * radius * delta;
        let profile = move |r: f64| smoothstep((r2 - r * r) / width);
        Ok(RadialFunction { profile: Arc::new(profile), support_radius: (r2 + width).sqrt() })
    }

    pub fn zero() -> Self {
        RadialFunction { profile: Arc::new(|_| 0.0), support_radius: 0.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r > self.support_radius {
            0.0
        } else {
            (self.profile)(r)
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// C-infinity step: 0 for v <= -1, 1 for v >= 1, with h(v) + h(-v) = 1.
pub fn smoothstep(v: f64) -> f64 {
    if v <= -1.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else {
        let f = |w: f64| if w > 0.0 { (-1.0 / w).exp() } else { 0.0 };
        let a = f((v + 1.0) / 2.0);
        let b = f((1.0 - v) / 2.0);
        a / (a + b)
    }
}

/// Sum of f over the primitive nonzero lattice vectors (each sign counted).
/// Primitivity is exact integer gcd on the coefficient vector; it does not
/// depend on the basis used for enumeration.
pub fn siegel_transform(lattice: &Lattice, f: &RadialFunction) -> Result<f64> {
    siegel_transform_of_basis(lattice.basis(), f)
}

pub fn siegel_transform_of_basis(basis: &Mat, f: &RadialFunction) -> Result<f64> {
    if f.support_radius() == 0.0 {
        return Ok(0.0);
    }
    let vs = vectors_up_to(basis, f.support_radius())?;
    let mut total = 0.0;
    for (coeffs, _v, n) in vs {
        if coeffs_gcd(&coeffs) == 1 {
            total += f.eval(n);
        }
    }
    Ok(total)
}

pub fn coeffs_gcd(c: &[i64]) -> i64 {
    c.iter().fold(0i64, |acc, &x| gcd(acc, x.abs()))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Riemann zeta by direct series with a midpoint-corrected tail, accurate to
/// well below 1e-12 for k >= 2.
pub fn zeta(k: usize) -> f64 {
    assert!(k >= 2);
    let n = 10_000u64;
    let s = k as f64;
    let head: f64 = (1..=n).map(|j| (j as f64).powf(-s)).sum();
    let tail = (n as f64 + 0.5).powf(1.0 - s) / (s - 1.0);
    head + tail
}

/// Haar-average of the primitive-vector transform: (1/zeta(k)) * integral of
/// f over R^k, computed by one-dimensional radial quadrature. This is the
/// exact target for the equidistribution experiments.
pub fn siegel_mean(f: &RadialFunction, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument("need k >= 2".into()));
    }
    if f.support_radius() == 0.0 {
        return Ok(0.0);
    }
    let km1 = (k - 1) as i32;
    let radial =
        integrate_1d(&|r| f.eval(r) * r.powi(km1), 0.0, f.support_radius(), 1e-11, 1e-300)?;
    Ok(sphere_area(k) * radial / zeta(k))
}

/// Surface area of the unit sphere in R^k.
pub fn sphere_area(k: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(k as f64 / 2.0) / gamma_half_integer(k)
}

/// Gamma(k/2) for integer k >= 1.
fn gamma_half_integer(k: usize) -> f64 {
    let mut x = k as f64 / 2.0;
    let mut acc = 1.0;
    while x >= 1.5 {
        x -= 1.0;
        acc *= x;
    }
    if (x - 1.0).abs() < 1e-12 {
        acc
    } else {
        acc * std::f64::consts::PI.sqrt()
    }
}

// ---------------------------------------------------------------------------
// Injectivity radius sweep

#[derive(Clone, Debug)]
pub struct InjectivityReport {
    pub eps: f64,
    pub c: f64,
    pub entry_bound: i64,
    /// The claimed lower bound c * eps^k.
    pub lower_bound: f64,
    /// Minimum of dist(g gamma g^-1, e) over the enumerated gamma != I.
    pub min_dist: f64,
    /// An integer matrix achieving the minimum (row-major).
    pub argmin: Vec<i64>,
    pub num_unimodular: u64,
    pub passed: bool,
}

/// Enumerate gamma in the integer unimodular group with entries bounded by
/// `entry_bound` and verify dist(g gamma g^-1, e) >= c * eps^k.
pub fn injectivity_radius_check(
    g: &GroupElement,
    eps: f64,
    entry_bound: i64,
    c: f64,
) -> Result<InjectivityReport> {
    let k = g.k();
    if eps <= 0.0 || c <= 0.0 || entry_bound < 1 {
        return Err(Error::InvalidArgument("need eps > 0, c > 0, entry_bound >= 1".into()));
    }
    let lambda1 = shortest_vector_of_basis(g.mat())?.lambda1;
    if lambda1 < eps {
        return Err(Error::Precondition(format!(
            "lattice has a vector of length {lambda1:.6e} < eps = {eps:.6e}"
        )));
    }
    let width = (2 * entry_bound + 1) as u64;
    let cells = k * k;
    let mut total: u64 = 1;
    for _ in 0..cells {
        total =
            total.checked_mul(width).filter(|&t| t <= ENUM_BUDGET).ok_or(Error::BudgetExceeded {
                visited: 0,
                best_so_far: None,
                context: "integer unimodular enumeration".into(),
            })?;
    }
    let g_inv = g.inverse();
    let lower_bound = c * eps.powi(k as i32);
    let mut min_dist = f64::INFINITY;
    let mut argmin = vec![0i64; cells];
    let mut num_unimodular = 0u64;
    let mut entries = vec![-entry_bound; cells];
    'outer: loop {
        if let Some(gamma) = integer_unimodular(&entries, k) {
            let is_identity =
                entries.iter().enumerate().all(|(i, &e)| e == i64::from(i / k == i % k));
            if !is_identity {
                num_unimodular += 1;
                let conj = g.mul(&gamma).mul(&g_inv);
                let d = crate::group::dist_g(&conj, &GroupElement::identity(k));
                if d < min_dist {
                    min_dist = d;
                    argmin.copy_from_slice(&entries);
                }
            }
        }
        // odometer
        for e in entries.iter_mut() {
            if *e < entry_bound {
                *e += 1;
                continue 'outer;
            }
            *e = -entry_bound;
        }
        break;
    }
    if num_unimodular == 0 {
        return Err(Error::InvalidArgument("no unimodular matrix within the entry bound".into()));
    }
    Ok(InjectivityReport {
        eps,
        c,
        entry_bound,
        lower_bound,
        min_dist,
        argmin,
        num_unimodular,
        passed: min_dist >= lower_bound,
    })
}

/// Some(gamma) iff the integer matrix has determinant exactly 1.
fn integer_unimodular(entries: &[i64], k: usize) -> Option<GroupElement> {
    if integer_det(entries, k) != 1 {
        return None;
    }
    let mat = Mat::from_fn(k, k, |i, j| entries[i * k + j] as f64);
    Some(GroupElement::new(mat).expect("integer det 1 is exact in f64"))
}

/// Fraction-free (Bareiss) integer determinant.
fn integer_det(entries: &[i64], k: usize) -> i128 {
    let mut a: Vec<i128> = entries.iter().map(|&x| x as i128).collect();
    let mut sign = 1i128;
    let mut denom = 1i128;
    for col in 0..k - 1 {
        let pivot = (col..k).find(|&r| a[r * k + col] != 0);
        let pivot = match pivot {
            Some(p) => p,
            None => return 0,
        };
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            sign = -sign;
        }
        for r in col + 1..k {
            for j in col + 1..k {
                a[r * k + j] =
                    (a[r * k + j] * a[col * k + col] - a[r * k + col] * a[col * k + j]) / denom;
            }
            a[r * k + col] = 0;
        }
        denom = a[col * k + col];
    }
    sign * a[(k - 1) * k + (k - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, uniform_in};
    use rand::Rng;

    fn d11() -> Dims {
        Dims::new(1, 1).unwrap()
    }

    fn lat2(rows: &[Vec<f64>]) -> Lattice {
        Lattice::new(d11(), Mat::from_rows(rows).unwrap()).unwrap()
    }

    /// Brute-force first minimum over |c_i| <= bound.
    fn brute_force_lambda1(basis: &Mat, bound: i64) -> f64 {
        let k = basis.rows();
        let mut best = f64::INFINITY;
        let mut c = vec![-bound; k];
        'outer: loop {
            if c.iter().any(|&x| x != 0) {
                let v = basis.mul_vec(&c.iter().map(|&x| x as f64).collect::<Vec<_>>());
                best = best.min(norm(&v));
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
        best
    }

    #[test]
    fn shortest_vector_trivial_cases() {
        let z2 = Lattice::standard(d11());
        let r = z2.shortest_vector().unwrap();
        assert!((r.lambda1 - 1.0).abs() < 1e-14);

        let l = lat2(&[vec![2.0, 0.0], vec![0.0, 0.5]]);
        let r = l.shortest_vector().unwrap();
        assert!((r.lambda1 - 0.5).abs() < 1e-14);
        assert_eq!(r.coeffs[0], 0);
        assert_eq!(r.coeffs[1].abs(), 1);

        // columns (1, 0.5), (0, 1)
        let l = lat2(&[vec![1.0, 0.0], vec![0.5, 1.0]]);
        let r = l.shortest_vector().unwrap();
        assert!((r.lambda1 - brute_force_lambda1(l.basis(), 3)).abs() < 1e-12);
        assert!((r.lambda1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shortest_vector_matches_brute_force_on_random_lattices() {
        let mut rng = derive_rng(101, 0, 0);
        let mut checked = 0;
        while checked < 500 {
            let k = 2 + (checked % 3); // k in {2,3,4}
            let mut m = Mat::identity(k);
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] += uniform_in(&mut rng, -1.2, 1.2);
                }
            }
            let det = m.det();
            if det.abs() < 0.2 {
                continue;
            }
            let scale = 1.0 / det.abs().powf(1.0 / k as f64);
            let m = m.scale(scale);
            if m.condition_number() > 50.0 {
                continue; // keep brute force over |c| <= 5 an actual certificate
            }
            let got = shortest_vector_of_basis(&m).unwrap().lambda1;
            let want = brute_force_lambda1(&m, 5);
            assert!((got - want).abs() <= 1e-10 * want.max(1.0), "k={k} got {got} want {want}");
            checked += 1;
        }
    }

    #[test]
    fn lambda1_invariances() {
        let mut rng = derive_rng(103, 0, 0);
        for _ in 0..100 {
            let mut m = Mat::identity(2);
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] += uniform_in(&mut rng, -0.8, 0.8);
                }
            }
            if m.det().abs() < 0.2 {
                continue;
            }
            let m = m.scale(1.0 / m.det().abs().sqrt());
            let l1 = shortest_vector_of_basis(&m).unwrap().lambda1;

            // integer unimodular change of basis
            let s = Mat::from_rows(&[vec![1.0, 3.0], vec![1.0, 4.0]]).unwrap();
            let l1b = shortest_vector_of_basis(&m.mul(&s)).unwrap().lambda1;
            assert!((l1 - l1b).abs() < 1e-10 * l1.max(1.0));

            // rotation
            let th = uniform_in(&mut rng, 0.0, std::f64::consts::TAU);
            let q =
                Mat::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]).unwrap();
            let l1c = shortest_vector_of_basis(&q.mul(&m)).unwrap().lambda1;
            assert!((l1 - l1c).abs() < 1e-10 * l1.max(1.0));

            // operator bound under a further map
            let g = Mat::from_rows(&[vec![1.3, 0.4], vec![0.0, 1.0 / 1.3]]).unwrap();
            let l1d = shortest_vector_of_basis(&g.mul(&m)).unwrap().lambda1;
            assert!(l1d <= g.op_norm() * l1 * (1.0 + 1e-10));
        }
    }

    #[test]
    fn lll_examples() {
        let z3 = Lattice::standard(Dims::new(2, 1).unwrap());
        let red = z3.lll_reduce().unwrap();
        let mut norms: Vec<f64> = (0..3).map(|j| norm(&red.basis().column(j))).collect();
        norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((norms[0] - 1.0).abs() < 1e-12 && (norms[2] - 1.0).abs() < 1e-12);

        let skew = lat2(&[vec![1.0, 100.0], vec![0.0, 1.0]]);
        let red = skew.lll_reduce().unwrap();
        let first = norm(&red.basis().column(0));
        assert!(first <= norm(&skew.basis().column(0)) + 1e-12);
        assert!(first <= 1.0 + 1e-12);

        // idempotence: same Gram matrix after reducing twice
        let once = skew.lll_reduce().unwrap();
        let twice = once.lll_reduce().unwrap();
        let g1 = once.basis().transpose().mul(once.basis());
        let g2 = twice.basis().transpose().mul(twice.basis());
        assert!(g1.sub(&g2).frobenius_norm() < 1e-10);
    }

    #[test]
    fn k_eps_membership() {
        let z2 = Lattice::standard(d11());
        assert!(z2.in_k_eps(1.0).unwrap());
        let l = lat2(&[vec![2.0, 0.0], vec![0.0, 0.5]]);
        assert!(!l.in_k_eps(0.6).unwrap());
        assert!(l.in_k_eps(0.5).unwrap()); // boundary is inclusive

        // nesting
        let mut rng = derive_rng(107, 0, 0);
        for _ in 0..50 {
            let a = uniform_in(&mut rng, 0.5, 2.0);
            let l = lat2(&[vec![a, a * uniform_in(&mut rng, -1.0, 1.0)], vec![0.0, 1.0 / a]]);
            for (e1, e2) in [(0.3, 0.7), (0.1, 0.9)] {
                if l.in_k_eps(e2).unwrap() {
                    assert!(l.in_k_eps(e1).unwrap());
                }
            }
        }
    }

    #[test]
    fn siegel_transform_examples() {
        let z2 = Lattice::standard(d11());
        // support below the first minimum: empty sum
        let f = RadialFunction::ball_indicator(0.9);
        assert_eq!(siegel_transform(&z2, &f).unwrap(), 0.0);

        // unit-disc indicator slightly enlarged: (+-1,0),(0,+-1) only;
        // (+-1,+-1) has norm sqrt(2) > 1.1
        let f = RadialFunction::ball_indicator(1.1);
        assert_eq!(siegel_transform(&z2, &f).unwrap(), 4.0);

        // exactly radius 1 keeps the four unit vectors (closed ball)
        let f = RadialFunction::ball_indicator(1.0);
        assert_eq!(siegel_transform(&z2, &f).unwrap(), 4.0);

        // radius 2.2: adds (+-1,+-1); (+-2,0),(0,+-2) are imprimitive;
        // (+-2,+-1),(+-1,+-2) have norm sqrt(5) > 2.2: total 8
        let f = RadialFunction::ball_indicator(2.2);
        assert_eq!(siegel_transform(&z2, &f).unwrap(), 8.0);
    }

    #[test]
    fn siegel_transform_is_basis_invariant_and_matches_double_loop() {
        let mut rng = derive_rng(109, 0, 0);
        let f = RadialFunction::ball_indicator(1.7);
        let mut done = 0;
        while done < 100 {
            let k = if rng.random::<bool>() { 2 } else { 3 };
            let dims = if k == 2 { d11() } else { Dims::new(2, 1).unwrap() };
            let mut m = Mat::identity(k);
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] += uniform_in(&mut rng, -0.5, 0.5);
                }
            }
            if m.det() < 0.3 {
                continue;
            }
            let m = m.scale(1.0 / m.det().powf(1.0 / k as f64));
            let l = Lattice::new(dims, m.clone()).unwrap();
            let got = siegel_transform(&l, &f).unwrap();

            // naive double loop over coefficients
            let mut want = 0.0;
            let bound = 12i64;
            let mut c = vec![-bound; k];
            'outer: loop {
                if c.iter().any(|&x| x != 0) && coeffs_gcd(&c) == 1 {
                    let v = m.mul_vec(&c.iter().map(|&x| x as f64).collect::<Vec<_>>());
                    want += f.eval(norm(&v));
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
            assert_eq!(got, want, "transform mismatch at k={k}");

            // basis change invariance
            let s = if k == 2 {
                Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap()
            } else {
                Mat::from_rows(&[
                    vec![1.0, 1.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![1.0, 0.0, 1.0],
                ])
                .unwrap()
            };
            let l2 = Lattice::new(dims, m.mul(&s)).unwrap();
            assert_eq!(siegel_transform(&l2, &f).unwrap(), got);
            done += 1;
        }
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(2) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((zeta(3) - 1.2020569031595943).abs() < 1e-12);
        assert!((zeta(4) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
    }

    #[test]
    fn siegel_mean_oracle_values() {
        let f = RadialFunction::zero();
        assert_eq!(siegel_mean(&f, 2).unwrap(), 0.0);

        let disc = RadialFunction::ball_indicator(1.0);
        let got = siegel_mean(&disc, 2).unwrap();
        let want = std::f64::consts::PI / zeta(2); // = 6/pi
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
        assert!((want - 6.0 / std::f64::consts::PI).abs() < 1e-12);

        let ball = RadialFunction::ball_indicator(1.0);
        let got = siegel_mean(&ball, 3).unwrap();
        let want = (4.0 * std::f64::consts::PI / 3.0) / zeta(3);
        assert!((got - want).abs() < 1e-9);
        assert!((want - 3.4847).abs() < 1e-3);
    }

    #[test]
    fn smoothed_indicator_keeps_disc_mass_exactly() {
        let f = RadialFunction::smoothed_ball_indicator(1.0, 0.05).unwrap();
        // mass in dimension 2 equals pi, so the mean equals 6/pi
        let got = siegel_mean(&f, 2).unwrap();
        assert!((got - 6.0 / std::f64::consts::PI).abs() < 1e-8, "got {got}");
        // boundary behavior
        assert_eq!(f.eval(f.support_radius() + 1e-9), 0.0);
        assert!((f.eval(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn injectivity_check_identity_example() {
        let g = GroupElement::identity(2);
        let rep = injectivity_radius_check(&g, 1.0, 1, 0.5).unwrap();
        // gamma = [[1,1],[0,1]] gives dist exactly 1, nothing is closer
        assert!((rep.min_dist - 1.0).abs() < 1e-12);
        assert!(rep.passed);
        assert!(rep.num_unimodular > 0);

        // larger eps violates the precondition
        assert!(matches!(injectivity_radius_check(&g, 1.5, 1, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn injectivity_calibration_sweep() {
        let mut rng = derive_rng(113, 0, 0);
        let mut c_emp = f64::INFINITY;
        let mut count = 0;
        while count < 40 {
            let a = uniform_in(&mut rng, 0.8, 1.25);
            let y = uniform_in(&mut rng, -0.4, 0.4);
            let th = uniform_in(&mut rng, 0.0, std::f64::consts::TAU);
            let rot =
                Mat::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]).unwrap();
            let base = Mat::from_rows(&[vec![a, a * y], vec![0.0, 1.0 / a]]).unwrap();
            let g = GroupElement::new(rot.mul(&base)).unwrap();
            let lam = shortest_vector_of_basis(g.mat()).unwrap().lambda1;
            if lam < 0.5 {
                continue;
            }
            let rep = injectivity_radius_check(&g, 0.5, 2, 1e-6).unwrap();
            c_emp = c_emp.min(rep.min_dist / (0.5f64 * 0.5));
            count += 1;
        }
        assert!(c_emp > 0.0 && c_emp.is_finite());
    }

    #[test]
    fn budget_error_on_oversized_enumeration() {
        let g = GroupElement::identity(3);
        // (2*3+1)^9 = 40 million > budget
        assert!(matches!(
            injectivity_radius_check(&g, 0.9, 3, 0.5),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn non_unimodular_basis_is_rejected_but_internal_svp_accepts() {
        let m = Mat::from_rows(&[vec![10.0, 0.0], vec![0.0, 0.1]]).unwrap();
        assert!(Lattice::new(d11(), m.clone()).is_ok());
        let m2 = Mat::from_rows(&[vec![10.0, 0.0], vec![0.0, 0.2]]).unwrap();
        assert!(Lattice::new(d11(), m2.clone()).is_err());
        assert!((shortest_vector_of_basis(&m2).unwrap().lambda1 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_basis_is_an_error() {
        let m = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(lll_reduce_basis(&m), Err(Error::RankDeficient(_))));
    }
}
