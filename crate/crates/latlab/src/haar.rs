//! Monte Carlo verification of the Haar product formula on the open cell
//! where the group factors as (lower unipotent) x (block diagonal) x (upper
//! unipotent).
//!
//! Both sides are put in explicit coordinates: Lebesgue measure on the two
//! unipotent blocks and exponential-chart Haar measure on the block-diagonal
//! group. The direct ordering carries the modular factor |det A|^k; the
//! reversed ordering (used as the independent estimate of the same group
//! integral) carries |det A|^-k. Equality of the two estimates within Monte
//! Carlo error pins the sign convention of the modular factor.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{
    decompose_local, make_u_minus, make_u_y, modular_delta, Dims, GroupElement,
    HorosphericalPoint,
};
use crate::matrix::Mat;
use crate::rng::{derive_rng, pairwise_sum, uniform_in};

/// Orthonormal (Frobenius) basis of the block-diagonal trace-zero Lie
/// algebra: off-diagonal generators inside each block plus k-1 traceless
/// diagonal directions.
pub fn h0_lie_basis(dims: Dims) -> Vec<Mat> {
    let k = dims.k();
    let m = dims.m();
    let mut basis = Vec::new();
    // off-diagonal directions within each diagonal block
    for (lo, hi) in [(0usize, m), (m, k)] {
        for p in lo..hi {
            for q in lo..hi {
                if p != q {
                    let mut e = Mat::zeros(k, k);
                    e[(p, q)] = 1.0;
                    basis.push(e);
                }
            }
        }
    }
    // traceless diagonal directions, Gram-Schmidt orthonormalized
    let mut diag_dirs: Vec<Mat> = Vec::new();
    for i in 0..k - 1 {
        let mut d = Mat::zeros(k, k);
        d[(i, i)] = 1.0;
        d[(i + 1, i + 1)] = -1.0;
        diag_dirs.push(d);
    }
    for mut d in diag_dirs {
        for b in basis.iter().skip(basis.len().saturating_sub(k)) {
            let ip: f64 = d.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
            d = d.sub(&b.scale(ip));
        }
        let n = d.frobenius_norm();
        basis.push(d.scale(1.0 / n));
    }
    debug_assert_eq!(basis.len(), dims.lower_triangular_dim() - dims.m() * dims.n());
    basis
}

/// exp via scaling and squaring with a Taylor tail.
pub fn mat_exp(m: &Mat) -> Mat {
    let k = m.rows();
    let scale_pow = {
        let n = m.max_abs() * k as f64;
        if n <= 0.5 {
            0
        } else {
            (n / 0.5).log2().ceil() as i32
        }
    };
    let a = m.scale(0.5f64.powi(scale_pow));
    let mut term = Mat::identity(k);
    let mut sum = Mat::identity(k);
    for j in 1..40 {
        term = term.mul(&a).scale(1.0 / j as f64);
        sum = sum.sub(&term.scale(-1.0));
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..scale_pow {
        out = out.mul(&out);
    }
    out
}

/// Principal log by inverse scaling and squaring: repeated square roots
/// (Denman-Beavers) until the series log(I + E) converges fast.
pub fn mat_log(m: &Mat) -> Result<Mat> {
    let k = m.rows();
    let mut a = m.clone();
    let mut doublings = 0u32;
    while a.sub(&Mat::identity(k)).max_abs() * k as f64 > 0.3 {
        if doublings >= 40 {
            return Err(Error::Support("matrix log did not converge".into()));
        }
        a = mat_sqrt(&a)?;
        doublings += 1;
    }
    let e = a.sub(&Mat::identity(k));
    let mut power = e.clone();
    let mut sum = Mat::zeros(k, k);
    for j in 1..200 {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum = sum.sub(&power.scale(-sign / j as f64));
        power = power.mul(&e);
        if power.max_abs() < 1e-18 {
            break;
        }
    }
    Ok(sum.scale(2.0f64.powi(doublings as i32)))
}

/// Denman-Beavers square root; converges for matrices without eigenvalues
/// on the closed negative real axis.
fn mat_sqrt(a: &Mat) -> Result<Mat> {
    let k = a.rows();
    let mut y = a.clone();
    let mut z = Mat::identity(k);
    for _ in 0..80 {
        let y_inv = y
            .inverse()
            .map_err(|_| Error::Support("square-root iteration hit a singular step".into()))?;
        let z_inv = z
            .inverse()
            .map_err(|_| Error::Support("square-root iteration hit a singular step".into()))?;
        let yn = y.sub(&z_inv.scale(-1.0)).scale(0.5);
        let zn = z.sub(&y_inv.scale(-1.0)).scale(0.5);
        let delta = yn.sub(&y).max_abs();
        y = yn;
        z = zn;
        if delta < 1e-15 * y.max_abs().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::Support("square-root iteration did not converge".into()))
}

/// Coordinates of the block-diagonal element in the orthonormal Lie basis.
pub fn h0_coordinates(_dims: Dims, h0: &GroupElement, basis: &[Mat]) -> Result<Vec<f64>> {
    let log = mat_log(h0.mat())?;
    Ok(basis
        .iter()
        .map(|b| log.data().iter().zip(b.data()).map(|(x, y)| x * y).sum())
        .collect())
}

/// Block-diagonal element from Lie coordinates.
pub fn h0_from_coordinates(dims: Dims, z: &[f64], basis: &[Mat]) -> GroupElement {
    let k = dims.k();
    let mut gen = Mat::zeros(k, k);
    for (c, b) in z.iter().zip(basis) {
        gen = gen.sub(&b.scale(-c));
    }
    GroupElement::new(mat_exp(&gen)).expect("exp of traceless matrix has determinant one")
}

/// Haar density of the block-diagonal group in its exponential chart:
/// |det sum_j (-ad_Z)^j / (j+1)!|.
pub fn h0_haar_density(dims: Dims, z: &[f64], basis: &[Mat]) -> f64 {
    let d0 = basis.len();
    let k = dims.k();
    let mut zmat = Mat::zeros(k, k);
    for (c, b) in z.iter().zip(basis) {
        zmat = zmat.sub(&b.scale(-c));
    }
    // matrix of ad_Z in the orthonormal basis
    let mut ad = Mat::zeros(d0, d0);
    for (j, b) in basis.iter().enumerate() {
        let bracket = zmat.mul(b).sub(&b.mul(&zmat));
        for (i, bi) in basis.iter().enumerate() {
            ad[(i, j)] = bracket.data().iter().zip(bi.data()).map(|(x, y)| x * y).sum();
        }
    }
    // phi(ad) = sum (-ad)^j / (j+1)!
    let neg = ad.scale(-1.0);
    let mut term = Mat::identity(d0);
    let mut sum = Mat::identity(d0);
    let mut factorial = 1.0f64;
    for j in 1..40 {
        term = term.mul(&neg);
        factorial *= (j + 1) as f64;
        sum = sum.sub(&term.scale(-1.0 / factorial));
        if term.max_abs() / factorial < 1e-18 {
            break;
        }
    }
    sum.det().abs()
}

/// A test function on the group, given as a product of radial bumps in the
/// (lower, diagonal, upper) chart coordinates around a point near the
/// identity.
#[derive(Clone, Debug)]
pub struct HaarTestFn {
    pub dims: Dims,
    pub x_center: Vec<f64>,
    pub x_radius: f64,
    pub z_center: Vec<f64>,
    pub z_radius: f64,
    pub y_center: Vec<f64>,
    pub y_radius: f64,
    pub amplitude: f64,
}

impl HaarTestFn {
    /// Slightly off-center narrow bumps; asymmetric on purpose so that the
    /// check can discriminate the two sign conventions of the modular
    /// factor.
    pub fn default_near_identity(dims: Dims) -> Self {
        let nm = dims.n() * dims.m();
        let d0 = dims.lower_triangular_dim() - nm;
        let mut x_center = vec![0.0; nm];
        x_center[0] = 0.12;
        let mut z_center = vec![0.05; d0];
        z_center[0] = 0.15;
        let mut y_center = vec![0.0; nm];
        y_center[0] = -0.08;
        HaarTestFn {
            dims,
            x_center,
            x_radius: 0.35,
            z_center,
            z_radius: 0.30,
            y_center,
            y_radius: 0.35,
            amplitude: 1.0,
        }
    }

    fn bump(dist2: f64) -> f64 {
        if dist2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - dist2)).exp()
        }
    }

    /// phi in chart coordinates.
    pub fn eval_coords(&self, x: &[f64], z: &[f64], y: &[f64]) -> f64 {
        let dist2 = |v: &[f64], c: &[f64], r: f64| {
            v.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (r * r)
        };
        self.amplitude
            * Self::bump(dist2(x, &self.x_center, self.x_radius))
            * Self::bump(dist2(z, &self.z_center, self.z_radius))
            * Self::bump(dist2(y, &self.y_center, self.y_radius))
    }

    /// phi on a group element, through the chart. Points where the chart is
    /// undefined are outside the support and give zero.
    pub fn eval_group(&self, g: &GroupElement, basis: &[Mat]) -> f64 {
        let dec = match decompose_local(self.dims, g) {
            Ok(d) => d,
            Err(_) => return 0.0,
        };
        let m = self.dims.m();
        let k = self.dims.k();
        let mut x = Vec::with_capacity(self.dims.n() * m);
        for i in m..k {
            for j in 0..m {
                x.push(dec.h_minus.mat()[(i, j)]);
            }
        }
        let mut y = Vec::with_capacity(m * self.dims.n());
        for i in 0..m {
            for j in m..k {
                y.push(dec.h.mat()[(i, j)]);
            }
        }
        let z = match h0_coordinates(self.dims, &dec.h_zero, basis) {
            Ok(z) => z,
            Err(_) => return 0.0,
        };
        self.eval_coords(&x, &z, &y)
    }
}

#[derive(Clone, Debug)]
pub struct HaarCheckReport {
    /// Group integral estimated through the reversed (upper-diagonal-lower)
    /// chart.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Product-formula side in the direct chart with the modular factor.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub rel_discrepancy: f64,
    pub discrepancy_sigmas: f64,
    /// The same product-formula estimate with the flipped modular
    /// convention; kept in the report to show the convention matters.
    pub rhs_flipped: f64,
    pub flipped_sigmas: f64,
    /// Modular factor is |det A| to this power.
    pub delta_exponent: i32,
    pub samples: u64,
    pub passed: bool,
}

/// Monte Carlo check of the product formula. `passed` requires the two
/// estimates to agree within 3 combined standard errors.
pub fn mc_haar_check(phi: &HaarTestFn, samples: u64, seed: u64) -> Result<HaarCheckReport> {
    if samples < 100 {
        return Err(Error::InvalidArgument("need at least 100 samples".into()));
    }
    let dims = phi.dims;
    let basis = h0_lie_basis(dims);
    let nm = dims.n() * dims.m();
    let d0 = basis.len();

    // --- direct chart: sample (x, z, y) and weight with the modular factor
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (c, r) in [
        (&phi.x_center, phi.x_radius),
        (&phi.z_center, phi.z_radius),
        (&phi.y_center, phi.y_radius),
    ] {
        for &v in c.iter() {
            lo.push(v - r);
            hi.push(v + r);
        }
    }
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let total_dim = 2 * nm + d0;

    // reversed-chart box: probe the direct-chart support box through the
    // reversed chart, bound the image componentwise and widen; coverage is
    // then certified sample by sample below
    let mut lo2 = vec![f64::INFINITY; total_dim];
    let mut hi2 = vec![f64::NEG_INFINITY; total_dim];
    {
        let mut probe = |pt: &[f64]| -> Result<()> {
            let (x, rest) = pt.split_at(nm);
            let (z, y) = rest.split_at(d0);
            let g = chart_direct(dims, x, z, y, &basis);
            let rc = chart_reversed_coords(dims, &g, &basis).map_err(|_| {
                Error::Support(
                    "support of the test function touches the reversed-chart singular locus"
                        .into(),
                )
            })?;
            for (d, &v) in rc.iter().enumerate() {
                lo2[d] = lo2[d].min(v);
                hi2[d] = hi2[d].max(v);
            }
            Ok(())
        };
        // center, corners, and a spray of random interior points
        let center: Vec<f64> =
            lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        probe(&center)?;
        if total_dim <= 12 {
            for mask in 0..(1u32 << total_dim) {
                let pt: Vec<f64> = (0..total_dim)
                    .map(|d| if mask >> d & 1 == 1 { hi[d] } else { lo[d] })
                    .collect();
                probe(&pt)?;
            }
        }
        let mut rng = derive_rng(seed, 3, 0);
        for _ in 0..4096 {
            let pt: Vec<f64> =
                (0..total_dim).map(|d| uniform_in(&mut rng, lo[d], hi[d])).collect();
            probe(&pt)?;
        }
        for d in 0..total_dim {
            let margin = 0.08 * (hi2[d] - lo2[d]) + 0.01;
            lo2[d] -= margin;
            hi2[d] += margin;
        }
    }
    let vol2: f64 = lo2.iter().zip(&hi2).map(|(a, b)| b - a).product();

    let k_exp = dims.k() as i32;

    // direct-side samples; also certify that the reversed box covers the
    // support
    let direct: Vec<(f64, f64, bool)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(seed, 1, i);
            let pt: Vec<f64> =
                (0..total_dim).map(|d| uniform_in(&mut rng, lo[d], hi[d])).collect();
            let (x, rest) = pt.split_at(nm);
            let (z, y) = rest.split_at(d0);
            let f = phi.eval_coords(x, z, y);
            if f == 0.0 {
                return (0.0, 0.0, true);
            }
            let h0 = h0_from_coordinates(dims, z, &basis);
            let delta = modular_delta(dims, &h0).expect("chart produces block-diagonal");
            let dens = h0_haar_density(dims, z, &basis);
            let w = f * delta * dens;
            let w_flipped = f * delta.powi(-1) * dens;
            // coverage of the reversed chart box
            let g = chart_direct(dims, x, z, y, &basis);
            let covered = match chart_reversed_coords(dims, &g, &basis) {
                Ok(rc) => rc.iter().enumerate().all(|(d, &v)| v > lo2[d] && v < hi2[d]),
                Err(_) => false,
            };
            (w, w_flipped, covered)
        })
        .collect();
    if direct.iter().any(|t| !t.2) {
        return Err(Error::Support(
            "support of the test function leaves the reversed-chart sampling box".into(),
        ));
    }
    let rhs_vals: Vec<f64> = direct.iter().map(|t| t.0).collect();
    let rhs_flipped_vals: Vec<f64> = direct.iter().map(|t| t.1).collect();
    let (rhs, rhs_stderr) = mc_mean(&rhs_vals, vol);
    let (rhs_flipped, rhs_flipped_stderr) = mc_mean(&rhs_flipped_vals, vol);

    // reversed-chart samples estimate the same group integral
    let reversed: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(seed, 2, i);
            let pt: Vec<f64> =
                (0..total_dim).map(|d| uniform_in(&mut rng, lo2[d], hi2[d])).collect();
            let (y, rest) = pt.split_at(nm);
            let (z, x) = rest.split_at(d0);
            let h0 = h0_from_coordinates(dims, z, &basis);
            let u_up = make_u_y(dims, &hp_from_flat(dims, y));
            let u_lo = make_u_minus(dims, &x_block(dims, x));
            let g = u_up.mul(&h0).mul(&u_lo);
            let f = phi.eval_group(&g, &basis);
            if f == 0.0 {
                return 0.0;
            }
            let delta = modular_delta(dims, &h0).expect("block-diagonal by construction");
            let dens = h0_haar_density(dims, z, &basis);
            f * delta.powi(-1) * dens
        })
        .collect();
    let (lhs, lhs_stderr) = mc_mean(&reversed, vol2);

    let sigma = (lhs_stderr.powi(2) + rhs_stderr.powi(2)).sqrt();
    let diff = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs());
    let rel = if scale == 0.0 { 0.0 } else { diff / scale };
    let passed = if scale == 0.0 { true } else { diff <= 3.0 * sigma };
    let sigma_f = (lhs_stderr.powi(2) + rhs_flipped_stderr.powi(2)).sqrt();
    Ok(HaarCheckReport {
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        rel_discrepancy: rel,
        discrepancy_sigmas: if sigma == 0.0 { 0.0 } else { diff / sigma },
        rhs_flipped,
        flipped_sigmas: if sigma_f == 0.0 { 0.0 } else { (lhs - rhs_flipped).abs() / sigma_f },
        delta_exponent: k_exp,
        samples,
        passed,
    })
}

fn mc_mean(vals: &[f64], volume: f64) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = pairwise_sum(vals) / n;
    let sq: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean * volume, volume * (var / n).sqrt())
}

fn hp_from_flat(dims: Dims, flat: &[f64]) -> HorosphericalPoint {
    HorosphericalPoint::from_slice(dims, flat).expect("sampled coordinates are finite")
}

fn x_block(dims: Dims, flat: &[f64]) -> Mat {
    Mat::from_fn(dims.n(), dims.m(), |i, j| flat[i * dims.m() + j])
}

fn chart_direct(dims: Dims, x: &[f64], z: &[f64], y: &[f64], basis: &[Mat]) -> GroupElement {
    let u_lo = make_u_minus(dims, &x_block(dims, x));
    let h0 = h0_from_coordinates(dims, z, basis);
    let u_up = make_u_y(dims, &hp_from_flat(dims, y));
    u_lo.mul(&h0).mul(&u_up)
}

/// Coordinates of g in the reversed (upper, diagonal, lower) chart,
/// concatenated as (y, z, x). Requires the lower-right block of g to be
/// invertible.
fn chart_reversed_coords(dims: Dims, g: &GroupElement, basis: &[Mat]) -> Result<Vec<f64>> {
    let m = dims.m();
    let (a, b, c, d) = g.mat().to_blocks(m);
    let d_inv = d
        .inverse()
        .map_err(|_| Error::DecompositionUndefined("lower-right block singular".into()))?;
    let y = b.mul(&d_inv); // m x n
    let x = d_inv.mul(&c); // n x m
    let middle = a.sub(&b.mul(&d_inv).mul(&c));
    let h0 = GroupElement::new(Mat::from_blocks(
        &middle,
        &Mat::zeros(m, dims.n()),
        &Mat::zeros(dims.n(), m),
        &d,
    ))
    .map_err(|e| Error::DecompositionUndefined(format!("reversed middle factor: {e}")))?;
    let z = h0_coordinates(dims, &h0, basis)?;
    let mut out: Vec<f64> = y.data().to_vec();
    out.extend(z);
    out.extend(x.data().iter());
    Ok(out)
}
