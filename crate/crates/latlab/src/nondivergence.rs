//! Quantitative nondivergence laboratory: sub-level measure checks for
//! (C, alpha)-good functions, affine families of lattices, Monte Carlo
//! fractions outside Mahler sets with certified growth hypotheses, and the
//! uniformity sweep over cone directions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{enumerate_integer_multivectors, wedge_matrix};
use crate::fitting::fit_line;
use crate::group::{make_g_vt, ConeVector, Dims, GroupElement};
use crate::lattice::{shortest_vector_of_basis, Lattice};
use crate::matrix::{norm, Mat};
use crate::quad::linspace;
use crate::report::{Cell, Table};
use crate::rng::{derive_rng, uniform_in};

/// Slope slack used by the `passed` flags of the exponent checks.
pub const SLOPE_TOLERANCE: f64 = 0.15;

/// A sup-norm ball in parameter space.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius <= 0.0 || center.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("ball needs finite center, radius > 0".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.radius).powi(self.dim() as i32)
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        self.center
            .iter()
            .map(|&c| uniform_in(rng, c - self.radius, c + self.radius))
            .collect()
    }

    /// Uniform grid with `per_axis` points per axis, corners included.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .center
            .iter()
            .map(|&c| linspace(c - self.radius, c + self.radius, per_axis))
            .collect();
        let mut out = Vec::with_capacity(per_axis.pow(self.dim() as u32));
        let counts = vec![per_axis; self.dim()];
        crate::quad::tensor_indices(&counts, |idx| {
            out.push(idx.iter().enumerate().map(|(i, &ii)| axes[i][ii]).collect());
        });
        out
    }
}

/// An affine family of k x k matrices: x -> base + sum_i x_i directions[i].
#[derive(Clone, Debug)]
pub struct AffineLatticeMap {
    pub base: Mat,
    pub directions: Vec<Mat>,
}

impl AffineLatticeMap {
    pub fn new(base: Mat, directions: Vec<Mat>) -> Result<Self> {
        if !base.is_square() {
            return Err(Error::InvalidArgument("base matrix must be square".into()));
        }
        for d in &directions {
            if (d.rows(), d.cols()) != (base.rows(), base.cols()) {
                return Err(Error::InvalidArgument("direction shape mismatch".into()));
            }
        }
        Ok(AffineLatticeMap { base, directions })
    }

    /// phi(x) = g_left * u_x * g_right on horospherical coordinates.
    pub fn translate_family(
        dims: Dims,
        g_left: &GroupElement,
        g_right: &GroupElement,
    ) -> Self {
        let k = dims.k();
        let base = g_left.mat().mul(g_right.mat());
        let mut directions = Vec::with_capacity(dims.m() * dims.n());
        for i in 0..dims.m() {
            for j in 0..dims.n() {
                let mut e = Mat::zeros(k, k);
                e[(i, dims.m() + j)] = 1.0;
                directions.push(g_left.mat().mul(&e).mul(g_right.mat()));
            }
        }
        AffineLatticeMap { base, directions }
    }

    pub fn d(&self) -> usize {
        self.directions.len()
    }

    pub fn k(&self) -> usize {
        self.base.rows()
    }

    pub fn eval(&self, x: &[f64]) -> Mat {
        assert_eq!(x.len(), self.directions.len());
        let mut out = self.base.clone();
        for (xi, dir) in x.iter().zip(&self.directions) {
            if *xi != 0.0 {
                out = out.sub(&dir.scale(-xi));
            }
        }
        out
    }

    /// Check invertibility on a coarse grid of the ball; worst |det| is
    /// reported back.
    pub fn min_abs_det_on_grid(&self, ball: &Ball, per_axis: usize) -> f64 {
        ball.grid(per_axis)
            .iter()
            .map(|x| self.eval(x).det().abs())
            .fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// (C, alpha)-good sub-level measure checks

#[derive(Clone, Debug)]
pub struct CAlphaGoodReport {
    pub c: f64,
    pub alpha: f64,
    /// Worst ratio of measured sub-level fraction to the claimed bound.
    pub worst_ratio: f64,
    pub worst_eps: f64,
    pub worst_center: Vec<f64>,
    pub worst_radius: f64,
    pub checks: usize,
    pub passed: bool,
}

/// Empirically check the sub-level measure bound
/// lambda{ x in B' : |f(x)| < eps } <= C (eps / sup_B' |f|)^alpha lambda(B')
/// on random sub-balls B' of B, with grid measure. A grid-resolution
/// allowance of 2d/grid is added to the bound before flagging a violation.
pub fn is_c_alpha_good(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    ball: &Ball,
    c: f64,
    alpha: f64,
    subball_samples: usize,
    seed: u64,
) -> Result<CAlphaGoodReport> {
    if c <= 0.0 || alpha <= 0.0 {
        return Err(Error::InvalidArgument("need C > 0 and alpha > 0".into()));
    }
    let d = ball.dim();
    let per_axis = match d {
        1 => 4096,
        2 => 64,
        _ => 16,
    };
    let grid_slack = 2.0 * d as f64 / per_axis as f64;
    let rel_levels = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5];

    let mut worst_ratio = 0.0f64;
    let mut worst_eps = 0.0;
    let mut worst_center = ball.center.clone();
    let mut worst_radius = ball.radius;
    let mut checks = 0usize;
    let mut passed = true;

    let mut rng = derive_rng(seed, 10, 0);
    for sample_idx in 0..=subball_samples {
        // first pass: the full ball; then random sub-balls
        let sub = if sample_idx == 0 {
            ball.clone()
        } else {
            let center = ball.sample(&mut rng);
            let max_r = center
                .iter()
                .zip(&ball.center)
                .map(|(x, c)| ball.radius - (x - c).abs())
                .fold(f64::INFINITY, f64::min);
            let radius = uniform_in(&mut rng, 0.1 * max_r.max(1e-9), max_r.max(1e-9));
            Ball { center, radius }
        };
        let values: Vec<f64> = sub.grid(per_axis).iter().map(|x| f(x).abs()).collect();
        let sup = values.iter().cloned().fold(0.0, f64::max);
        if sup == 0.0 {
            return Err(Error::DegenerateFunction(format!(
                "f vanishes identically on the sub-ball centered at {:?}",
                sub.center
            )));
        }
        for &lvl in &rel_levels {
            let eps = lvl * sup;
            let fraction =
                values.iter().filter(|&&v| v < eps).count() as f64 / values.len() as f64;
            let bound = c * lvl.powf(alpha);
            let ratio = fraction / bound;
            checks += 1;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_eps = eps;
                worst_center = sub.center.clone();
                worst_radius = sub.radius;
            }
            if fraction > bound + grid_slack {
                passed = false;
            }
        }
    }
    Ok(CAlphaGoodReport {
        c,
        alpha,
        worst_ratio,
        worst_eps,
        worst_center,
        worst_radius,
        checks,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo fractions outside Mahler sets

/// Monte Carlo estimate over uniform x in B of the event that the lattice
/// phi(x) Z^k has a nonzero vector shorter than eps. Deterministic in the
/// seed; the binomial standard error is returned alongside.
pub fn nondivergence_fraction(
    phi: &AffineLatticeMap,
    ball: &Ball,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let hits: Vec<Result<u64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(seed, 20, i);
            let x = ball.sample(&mut rng);
            let basis = phi.eval(&x);
            let lambda1 = shortest_vector_of_basis(&basis)?.lambda1;
            Ok(u64::from(lambda1 < eps))
        })
        .collect();
    let mut count = 0u64;
    for h in hits {
        count += h?;
    }
    let fraction = count as f64 / samples as f64;
    let stderr = (fraction * (1.0 - fraction) / samples as f64).sqrt();
    Ok((fraction, stderr))
}

// ---------------------------------------------------------------------------
// Growth-hypothesis certification

/// Certify that for every degree j and every nonzero integer multivector w,
/// sup over x in B of |wedge^j(phi(x)) w| >= rho.
///
/// Enumerated w up to a threshold norm are checked by grid suprema; larger w
/// are covered by the smallest singular value of the induced action at the
/// best grid point. The certified rho (the weakest bound encountered) is
/// returned.
#[derive(Clone, Debug)]
pub struct HypothesisCertificate {
    pub rho: f64,
    pub rho_certified: f64,
    /// Enumeration threshold per degree.
    pub truncation_norms: Vec<f64>,
    pub words_checked: u64,
}

pub fn certify_growth_hypothesis(
    phi: &AffineLatticeMap,
    ball: &Ball,
    rho: f64,
    grid_per_axis: usize,
) -> Result<HypothesisCertificate> {
    if rho <= 0.0 || rho > 1.0 {
        return Err(Error::InvalidArgument("need 0 < rho <= 1".into()));
    }
    let k = phi.k();
    let grid = ball.grid(grid_per_axis.max(3));
    let mut truncation_norms = Vec::new();
    let mut words = 0u64;
    let mut rho_certified = f64::INFINITY;
    for j in 1..k {
        // best (largest) smallest-singular-value over the grid caps the
        // norms that need explicit enumeration
        let mut sigma_best = 0.0f64;
        let wedges: Vec<Mat> = grid.iter().map(|x| wedge_matrix(&phi.eval(x), j)).collect();
        for w in &wedges {
            let sv = w.singular_values();
            sigma_best = sigma_best.max(*sv.last().unwrap());
        }
        if sigma_best <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "induced action at degree {j} is singular on the whole grid"
            )));
        }
        let max_norm = (rho / sigma_best).max(1.0);
        truncation_norms.push(max_norm);
        for w in enumerate_integer_multivectors(k, j, max_norm)? {
            words += 1;
            let sup = wedges
                .iter()
                .map(|m| norm(&m.mul_vec(w.coords())))
                .fold(f64::NEG_INFINITY, f64::max);
            if sup < rho {
                return Err(Error::Hypothesis(format!(
                    "integer multivector {:?} at degree {j} has grid supremum {sup:.6e} < rho = {rho:.6e}",
                    w.coords()
                )));
            }
            rho_certified = rho_certified.min(sup);
        }
        rho_certified = rho_certified.min(sigma_best * max_norm);
    }
    Ok(HypothesisCertificate { rho, rho_certified, truncation_norms, words_checked: words })
}

// ---------------------------------------------------------------------------
// Exponent check for affine families

#[derive(Clone, Debug)]
pub struct NondivergenceReport {
    pub eps_values: Vec<f64>,
    pub fractions: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub fitted_slope: f64,
    pub rho: f64,
    pub passed: bool,
    /// Theoretical exponent 1/(d(k-1)).
    pub exponent: f64,
    /// Empirical domination constant: max fraction / (eps/rho)^exponent.
    pub c_emp: f64,
    pub certificate: HypothesisCertificate,
}

impl NondivergenceReport {
    /// CSV rows: eps, fraction, stderr, bound, passed.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["eps", "fraction", "stderr", "bound", "passed"]);
        for i in 0..self.eps_values.len() {
            let bound = self.c_emp * (self.eps_values[i] / self.rho).powf(self.exponent);
            t.push(vec![
                Cell::Num(self.eps_values[i]),
                Cell::Num(self.fractions[i]),
                Cell::Num(self.standard_errors[i]),
                Cell::Num(bound),
                Cell::Bool(self.passed),
            ]);
        }
        t
    }
}

/// Measure the fraction outside the Mahler set along an eps ladder, fit the
/// log-log slope, and compare with the exponent 1/(d(k-1)). `passed` asks
/// for slope >= exponent - SLOPE_TOLERANCE together with domination by the
/// reported empirical constant.
pub fn check_exponent_bound(
    phi: &AffineLatticeMap,
    ball: &Ball,
    rho: f64,
    eps_ladder: &[f64],
    samples: usize,
    seed: u64,
) -> Result<NondivergenceReport> {
    if eps_ladder.is_empty() {
        return Err(Error::InvalidArgument("empty eps ladder".into()));
    }
    if eps_ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("eps ladder must be strictly increasing".into()));
    }
    if eps_ladder.iter().any(|&e| e <= 0.0 || e > rho) {
        return Err(Error::InvalidArgument("eps ladder must satisfy 0 < eps <= rho".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let certificate = certify_growth_hypothesis(phi, ball, rho, 9)?;
    let d = phi.d();
    let k = phi.k();
    let exponent = 1.0 / (d * (k - 1)) as f64;

    let mut fractions = Vec::new();
    let mut stderrs = Vec::new();
    for (i, &eps) in eps_ladder.iter().enumerate() {
        let (f, se) = nondivergence_fraction(phi, ball, eps, samples, seed.wrapping_add(i as u64))?;
        fractions.push(f);
        stderrs.push(se);
    }

    let log_points: Vec<(f64, f64)> = eps_ladder
        .iter()
        .zip(&fractions)
        .filter(|(_, &f)| f > 0.0)
        .map(|(&e, &f)| (e.ln(), f.ln()))
        .collect();
    let fitted_slope = match fit_line(&log_points) {
        Ok(fit) => fit.slope,
        Err(_) => f64::NAN,
    };
    let c_emp = eps_ladder
        .iter()
        .zip(&fractions)
        .map(|(&e, &f)| f / (e / rho).powf(exponent))
        .fold(0.0f64, f64::max);
    let dominated = eps_ladder
        .iter()
        .zip(&fractions)
        .all(|(&e, &f)| f <= c_emp * (e / rho).powf(exponent) * (1.0 + 1e-12));
    let passed = fitted_slope >= exponent - SLOPE_TOLERANCE && dominated;
    Ok(NondivergenceReport {
        eps_values: eps_ladder.to_vec(),
        fractions,
        standard_errors: stderrs,
        fitted_slope,
        rho,
        passed,
        exponent,
        c_emp,
        certificate,
    })
}

// ---------------------------------------------------------------------------
// Uniformity of the bound along cone-direction sweeps

#[derive(Clone, Debug)]
pub struct UniformitySweepReport {
    pub floor_values: Vec<f64>,
    /// Per cone vector: the empirical constant dominating
    /// fraction / eps^(1/(mn(k-1))) over the ladder and base points.
    pub c_emp_per_t: Vec<f64>,
    pub eps_values: Vec<f64>,
    /// fractions[t_index][eps_index] averaged over base points.
    pub fractions: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    pub exponent: f64,
    /// max over successive C_emp ratios.
    pub max_growth_ratio: f64,
    /// (max - min) / min over the sweep.
    pub relative_spread: f64,
    pub passed: bool,
}

impl UniformitySweepReport {
    pub fn to_table(&self) -> Table {
        let mut t =
            Table::new(&["floor_t", "eps", "fraction", "stderr", "bound", "passed"]);
        for (ti, &ft) in self.floor_values.iter().enumerate() {
            for (ei, &eps) in self.eps_values.iter().enumerate() {
                let bound = self.c_emp_per_t[ti] * eps.powf(self.exponent);
                t.push(vec![
                    Cell::Num(ft),
                    Cell::Num(eps),
                    Cell::Num(self.fractions[ti][ei]),
                    Cell::Num(self.standard_errors[ti][ei]),
                    Cell::Num(bound),
                    Cell::Bool(self.passed),
                ]);
            }
        }
        t
    }
}

/// For each cone vector and eps, measure the fraction of horospherical
/// translates outside the Mahler set; the domination constants must stay
/// level along the sweep (successive ratios <= 1.1).
pub fn check_uniformity_sweep(
    ball_radius: f64,
    base_points: &[Lattice],
    t_list: &[ConeVector],
    eps_ladder: &[f64],
    samples: usize,
    seed: u64,
) -> Result<UniformitySweepReport> {
    if base_points.is_empty() || t_list.is_empty() {
        return Err(Error::InvalidArgument("need base points and cone vectors".into()));
    }
    if eps_ladder.iter().any(|&e| e <= 0.0 || e >= 1.0) {
        return Err(Error::InvalidArgument("eps ladder must lie in (0, 1)".into()));
    }
    let dims = t_list[0].dims();
    let d = dims.m() * dims.n();
    let exponent = 1.0 / (d * (dims.k() - 1)) as f64;
    let ball = Ball::new(vec![0.0; d], ball_radius)?;

    let mut fractions = Vec::new();
    let mut stderrs = Vec::new();
    let mut c_emp_per_t = Vec::new();
    let mut floor_values = Vec::new();
    for (ti, t) in t_list.iter().enumerate() {
        floor_values.push(t.floor());
        let g_t = make_g_vt(t);
        let mut row_f = Vec::new();
        let mut row_s = Vec::new();
        let mut c_emp = 0.0f64;
        for (ei, &eps) in eps_ladder.iter().enumerate() {
            // average the fraction over the base points
            let mut pooled = 0.0;
            let mut pooled_var = 0.0;
            for (zi, z) in base_points.iter().enumerate() {
                let g_z = GroupElement::new(z.basis().clone())
                    .map_err(|e| Error::InvalidArgument(format!("base point: {e}")))?;
                let phi = AffineLatticeMap::translate_family(dims, &g_t, &g_z);
                // hypothesis with rho = 1 must be certifiable at this floor
                certify_growth_hypothesis(&phi, &ball, 1.0, 7).map_err(|e| {
                    Error::Hypothesis(format!(
                        "floor {:.3} too small for rho = 1 at base point {zi}: {e}",
                        t.floor()
                    ))
                })?;
                let sub_seed = seed
                    .wrapping_add((ti as u64) << 40)
                    .wrapping_add((ei as u64) << 20)
                    .wrapping_add(zi as u64);
                let (f, se) = nondivergence_fraction(&phi, &ball, eps, samples, sub_seed)?;
                pooled += f;
                pooled_var += se * se;
            }
            let nz = base_points.len() as f64;
            let f = pooled / nz;
            let se = pooled_var.sqrt() / nz;
            c_emp = c_emp.max(f / eps.powf(exponent));
            row_f.push(f);
            row_s.push(se);
        }
        fractions.push(row_f);
        stderrs.push(row_s);
        c_emp_per_t.push(c_emp);
    }
    let mut max_growth_ratio = 0.0f64;
    for w in c_emp_per_t.windows(2) {
        if w[0] > 0.0 {
            max_growth_ratio = max_growth_ratio.max(w[1] / w[0]);
        }
    }
    let cmax = c_emp_per_t.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = c_emp_per_t.iter().cloned().fold(f64::MAX, f64::min);
    let relative_spread = if cmin > 0.0 { cmax / cmin - 1.0 } else { f64::INFINITY };
    let passed = max_growth_ratio <= 1.1;
    Ok(UniformitySweepReport {
        floor_values,
        c_emp_per_t,
        eps_values: eps_ladder.to_vec(),
        fractions,
        standard_errors: stderrs,
        exponent,
        max_growth_ratio,
        relative_spread,
        passed,
    })
}
