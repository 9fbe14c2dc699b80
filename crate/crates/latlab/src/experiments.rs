//! Experiment runners: translate parsed configs into module calls, CSV
//! tables and summary reports. The command-line front end and the
//! acceptance suite both drive these.

use std::sync::Arc;

use crate::config::Config;
use crate::equidist::{
    equidist_error, gamma_tilde, make_bump, DecayFit, EquidistPoint, TestFunction,
};
use crate::error::{Error, Result};
use crate::exterior::{binomial, sup_norm_over_ball, MultiVector};
use crate::fitting::{decay_fit, fit_line};
use crate::group::{ConeVector, Dims, GroupElement};
use crate::lattice::{Lattice, RadialFunction, ShortVectorResult};
use crate::matrix::Mat;
use crate::nondivergence::{
    check_exponent_bound, check_uniformity_sweep, AffineLatticeMap, Ball, NondivergenceReport,
    UniformitySweepReport,
};
use crate::report::{Cell, Table};
use crate::rng::{derive_rng, uniform_in};

fn dims_from(cfg: &Config) -> Result<Dims> {
    Dims::new(cfg.usize("m")?, cfg.usize("n")?)
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    Mat::from_rows(rows)
}

/// Basis files hold k*k whitespace-separated reals, row-major; columns of
/// the resulting matrix are the generators.
pub fn read_basis_file(path: &std::path::Path, k: usize) -> Result<Mat> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read basis file {}: {e}", path.display())))?;
    let nums: std::result::Result<Vec<f64>, _> =
        text.split_whitespace().map(|t| t.parse::<f64>()).collect();
    let nums = nums.map_err(|e| Error::Config(format!("bad basis entry: {e}")))?;
    if nums.len() != k * k {
        return Err(Error::Config(format!(
            "basis file has {} entries, expected {}",
            nums.len(),
            k * k
        )));
    }
    Ok(Mat::from_fn(k, k, |i, j| nums[i * k + j]))
}

// ---------------------------------------------------------------------------
// lambda1

pub struct Lambda1Outcome {
    pub shortest: ShortVectorResult,
    pub memberships: Vec<(f64, bool)>,
    pub table: Table,
}

pub fn run_lambda1(cfg: &Config, config_dir: &std::path::Path) -> Result<Lambda1Outcome> {
    let dims = dims_from(cfg)?;
    let basis = if cfg.has("basis_file") {
        read_basis_file(&config_dir.join(cfg.str("basis_file")?), dims.k())?
    } else {
        matrix_from_rows(&cfg.f64_matrix("basis")?)?
    };
    let lattice = Lattice::new(dims, basis)?;
    let shortest = lattice.shortest_vector()?;
    let ladder = if cfg.has("eps_ladder") {
        cfg.f64_array("eps_ladder")?
    } else {
        vec![0.25, 0.5, 0.75, 1.0]
    };
    let mut memberships = Vec::new();
    let mut table = Table::new(&["eps", "lambda1", "member_of_k_eps"]);
    for &eps in &ladder {
        let member = lattice.in_k_eps(eps)?;
        memberships.push((eps, member));
        table.push(vec![Cell::Num(eps), Cell::Num(shortest.lambda1), Cell::Bool(member)]);
    }
    Ok(Lambda1Outcome { shortest, memberships, table })
}

// ---------------------------------------------------------------------------
// nondivergence

pub enum NondivOutcome {
    Exponent(NondivergenceReport),
    Uniformity(UniformitySweepReport),
}

impl NondivOutcome {
    pub fn table(&self) -> Table {
        match self {
            NondivOutcome::Exponent(r) => r.to_table(),
            NondivOutcome::Uniformity(r) => r.to_table(),
        }
    }

    pub fn passed(&self) -> bool {
        match self {
            NondivOutcome::Exponent(r) => r.passed,
            NondivOutcome::Uniformity(r) => r.passed,
        }
    }
}

pub fn run_nondiv(cfg: &Config, seed: u64) -> Result<NondivOutcome> {
    let dims = dims_from(cfg)?;
    match cfg.str_or("mode", "exponent")? {
        "exponent" => {
            let phi = affine_family_from(cfg, dims)?;
            let center = if cfg.has("ball_center") {
                cfg.f64_array("ball_center")?
            } else {
                vec![0.0; phi.d()]
            };
            let ball = Ball::new(center, cfg.f64("ball_radius")?)?;
            let samples = cfg.usize("samples")?;
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be positive".into()));
            }
            let rep = check_exponent_bound(
                &phi,
                &ball,
                cfg.f64_or("rho", 1.0)?,
                &cfg.f64_array("eps_ladder")?,
                samples,
                seed,
            )?;
            Ok(NondivOutcome::Exponent(rep))
        }
        "uniformity" => {
            let ray = cfg.f64_array("ray")?;
            let floors = cfg.f64_array("floor_values")?;
            let t_list: Result<Vec<ConeVector>> = floors
                .iter()
                .map(|&fl| ConeVector::scaled_to_floor(dims, &ray, fl))
                .collect();
            let mut base_points = vec![Lattice::standard(dims)];
            if cfg.has("base_points") {
                for rows in cfg.f64_tensor3("base_points")? {
                    base_points.push(Lattice::new(dims, matrix_from_rows(&rows)?)?);
                }
            }
            let samples = cfg.usize("samples")?;
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be positive".into()));
            }
            let rep = check_uniformity_sweep(
                cfg.f64_or("ball_radius", 1.0)?,
                &base_points,
                &t_list?,
                &cfg.f64_array("eps_ladder")?,
                samples,
                seed,
            )?;
            Ok(NondivOutcome::Uniformity(rep))
        }
        other => Err(Error::Config(format!("unknown nondiv mode `{other}`"))),
    }
}

fn affine_family_from(cfg: &Config, dims: Dims) -> Result<AffineLatticeMap> {
    match cfg.str_or("family", "diag_shear")? {
        "diag_shear" => {
            let diag = cfg.f64_array("diag")?;
            if diag.len() != dims.k() {
                return Err(Error::Config("diag length must be k".into()));
            }
            let g = GroupElement::new(Mat::from_fn(dims.k(), dims.k(), |i, j| {
                if i == j {
                    diag[i]
                } else {
                    0.0
                }
            }))?;
            Ok(AffineLatticeMap::translate_family(dims, &g, &GroupElement::identity(dims.k())))
        }
        "custom" => {
            let base = matrix_from_rows(&cfg.f64_matrix("base")?)?;
            let dirs: Result<Vec<Mat>> =
                cfg.f64_tensor3("directions")?.iter().map(|rows| matrix_from_rows(rows)).collect();
            AffineLatticeMap::new(base, dirs?)
        }
        other => Err(Error::Config(format!("unknown family `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// equidistribution sweep

pub struct EquidistOutcome {
    pub table: Table,
    /// Per-ray decay fits; None when every error sat below the noise floor.
    pub fits: Vec<Option<DecayFit>>,
    pub ray_labels: Vec<String>,
    pub below_noise: bool,
    pub min_gamma_hat: Option<f64>,
    /// Bookkeeping value of the effective exponent at the placeholder
    /// inputs (the spectral constants are not measured here).
    pub gamma_tilde_placeholder: f64,
    pub gamma_placeholder: f64,
    pub ell_placeholder: usize,
}

pub fn run_equidist(cfg: &Config, seed: u64) -> Result<EquidistOutcome> {
    let dims = dims_from(cfg)?;
    let bump_radius = cfg.f64_or("bump_radius", 0.3)?;
    let f = make_bump(dims.m() * dims.n(), bump_radius)?;
    let psi = match cfg.str_or("psi", "smoothed_disc")? {
        "smoothed_disc" => TestFunction::Siegel(RadialFunction::smoothed_ball_indicator(
            cfg.f64_or("psi_radius", 1.0)?,
            cfg.f64_or("psi_smoothing", 0.05)?,
        )?),
        "disc" => {
            TestFunction::Siegel(RadialFunction::ball_indicator(cfg.f64_or("psi_radius", 1.0)?))
        }
        "zero" => TestFunction::Siegel(RadialFunction::zero()),
        other => return Err(Error::Config(format!("unknown psi kind `{other}`"))),
    };
    let z = if cfg.has("z_basis") {
        Lattice::new(dims, matrix_from_rows(&cfg.f64_matrix("z_basis")?)?)?
    } else {
        Lattice::standard(dims)
    };
    let rays = cfg.f64_matrix("rays")?;
    let floors = cfg.f64_array("floor_values")?;
    let quad = cfg.usize_or("quad_points", 1024)?;

    let mut table = Table::new(&[
        "m",
        "n",
        "ray",
        "floor_t",
        "I_value",
        "target",
        "error",
        "quad_refinement",
        "seed",
    ]);
    let mut fits = Vec::new();
    let mut ray_labels = Vec::new();
    let mut min_gamma: Option<f64> = None;
    let mut all_below_noise = true;
    for ray in &rays {
        let label = ray
            .iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join("|");
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut noise_floor = 0.0f64;
        for &fl in &floors {
            let t = ConeVector::scaled_to_floor(dims, ray, fl)?;
            let p: EquidistPoint = equidist_error(&f, &psi, &t, &z, quad)?;
            noise_floor = noise_floor.max(p.refinement * p.target.abs().max(1e-12));
            table.push(vec![
                Cell::Int(dims.m() as i64),
                Cell::Int(dims.n() as i64),
                Cell::Str(label.clone()),
                Cell::Num(p.floor_t),
                Cell::Num(p.i_value),
                Cell::Num(p.target),
                Cell::Num(p.error),
                Cell::Num(p.refinement),
                Cell::Int(seed as i64),
            ]);
            points.push((p.floor_t, p.error));
        }
        let below_noise = points.iter().all(|&(_, e)| e <= noise_floor.max(1e-12));
        if below_noise {
            fits.push(None);
        } else {
            all_below_noise = false;
            let fit = decay_fit(&points)?;
            min_gamma = Some(match min_gamma {
                Some(g) => g.min(fit.gamma_hat),
                None => fit.gamma_hat,
            });
            fits.push(Some(fit));
        }
        ray_labels.push(label);
    }
    let gamma_placeholder = cfg.f64_or("gamma_placeholder", 1.0)?;
    let ell_placeholder = cfg.usize_or("ell_placeholder", 1)?;
    Ok(EquidistOutcome {
        table,
        fits,
        ray_labels,
        below_noise: all_below_noise,
        min_gamma_hat: min_gamma,
        gamma_tilde_placeholder: gamma_tilde(gamma_placeholder, ell_placeholder, dims),
        gamma_placeholder,
        ell_placeholder,
    })
}

// ---------------------------------------------------------------------------
// cone-direction growth sweep

pub struct ConesweepOutcome {
    pub table: Table,
    pub ray_labels: Vec<String>,
    pub per_ray_slopes: Vec<f64>,
    pub pooled_slope: f64,
    /// Fitted growth rate (pooled slope) and the matching prefactor such
    /// that sup >= b_fit e^{alpha_fit floor} |w| holds at every sweep point.
    pub alpha_fit: f64,
    pub b_fit: f64,
    pub pointwise_holds: bool,
    /// Worst relative change of any sup when the grid is doubled.
    pub worst_grid_refinement: f64,
    pub min_slope: f64,
}

pub fn run_conesweep(cfg: &Config, seed: u64) -> Result<ConesweepOutcome> {
    let dims = dims_from(cfg)?;
    let k = dims.k();
    let rays = cfg.f64_matrix("rays")?;
    let floors = cfg.f64_array("floor_values")?;
    if floors.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sweep floors".into()));
    }
    let ball_radius = cfg.f64_or("ball_radius", 1.0)?;
    let grid = cfg.usize_or("grid_per_axis", 17)?;
    let degrees: Vec<usize> = if cfg.has("degrees") {
        cfg.f64_array("degrees")?.iter().map(|&d| d as usize).collect()
    } else {
        (1..k).collect()
    };
    let g = if cfg.has("g_basis") {
        GroupElement::new(matrix_from_rows(&cfg.f64_matrix("g_basis")?)?)?
    } else {
        GroupElement::identity(k)
    };

    // sample multivectors: random unit vectors across the requested degrees
    // or all integer ones up to a norm bound
    let mut words: Vec<MultiVector> = Vec::new();
    match cfg.str_or("w_source", "random_unit")? {
        "random_unit" => {
            let count = cfg.usize_or("num_random_w", 200)?;
            let mut rng = derive_rng(seed, 40, 0);
            for i in 0..count {
                let j = degrees[i % degrees.len()];
                let dim = binomial(k, j);
                let coords: Vec<f64> =
                    (0..dim).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
                let w = MultiVector::new(k, j, coords)?;
                let n = w.norm();
                if n < 1e-6 {
                    continue;
                }
                words.push(w.scale(1.0 / n));
            }
        }
        "integer" => {
            let max_norm = cfg.f64_or("max_norm", 1.5)?;
            for &j in &degrees {
                words.extend(crate::exterior::enumerate_integer_multivectors(k, j, max_norm)?);
            }
        }
        other => return Err(Error::Config(format!("unknown w_source `{other}`"))),
    }
    if words.is_empty() {
        return Err(Error::InvalidArgument("no multivectors to sweep".into()));
    }

    let mut table =
        Table::new(&["ray", "floor_t", "degree", "w_index", "sup_norm", "log_sup_over_norm"]);
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut per_ray_slopes = Vec::new();
    let mut ray_labels = Vec::new();
    let mut worst_refinement = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut sweep_points: Vec<(f64, f64)> = Vec::new(); // (floor, log sup/|w|)
    for ray in &rays {
        let label = ray.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join("|");
        let mut ray_points: Vec<(f64, f64)> = Vec::new();
        for &fl in &floors {
            let t = ConeVector::scaled_to_floor(dims, ray, fl)?;
            for (wi, w) in words.iter().enumerate() {
                let sup = sup_norm_over_ball(&t, &g, w, ball_radius, grid)?;
                // refinement spot check on the first word of each sweep point
                if wi == 0 {
                    let fine = sup_norm_over_ball(&t, &g, w, ball_radius, 2 * grid - 1)?;
                    worst_refinement = worst_refinement.max((fine - sup).abs() / fine);
                }
                let log_ratio = (sup / w.norm()).ln();
                table.push(vec![
                    Cell::Str(label.clone()),
                    Cell::Num(t.floor()),
                    Cell::Int(w.degree() as i64),
                    Cell::Int(wi as i64),
                    Cell::Num(sup),
                    Cell::Num(log_ratio),
                ]);
                ray_points.push((t.floor(), log_ratio));
                pooled.push((t.floor(), log_ratio));
                sweep_points.push((t.floor(), log_ratio));
            }
        }
        per_ray_slopes.push(fit_line(&ray_points)?.slope);
        ray_labels.push(label);
    }
    let pooled_fit = fit_line(&pooled)?;
    let alpha_fit = pooled_fit.slope;
    // prefactor making the pointwise bound hold across the entire sweep
    for &(fl, logr) in &sweep_points {
        min_ratio = min_ratio.min(logr - alpha_fit * fl);
    }
    let b_fit = min_ratio.exp();
    let pointwise_holds = sweep_points
        .iter()
        .all(|&(fl, logr)| logr + 1e-9 >= b_fit.ln() + alpha_fit * fl);
    let min_slope = per_ray_slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ConesweepOutcome {
        table,
        ray_labels,
        per_ray_slopes,
        pooled_slope: pooled_fit.slope,
        alpha_fit,
        b_fit,
        pointwise_holds,
        worst_grid_refinement: worst_refinement,
        min_slope,
    })
}

// ---------------------------------------------------------------------------
// self test

pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub metric: f64,
    pub detail: String,
}

fn check(name: &str, passed: bool, metric: f64, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, metric, detail }
}

pub fn selftest_table(results: &[CheckResult]) -> Table {
    let mut t = Table::new(&["check", "passed", "metric", "detail"]);
    for r in results {
        t.push(vec![
            Cell::Str(r.name.clone()),
            Cell::Bool(r.passed),
            Cell::Num(r.metric),
            Cell::Str(r.detail.clone()),
        ]);
    }
    t
}

/// Reduced-size invariant suite across every module. The optional injection
/// hook (environment variable LATLAB_SELFTEST_INJECT=det_perturbation)
/// deliberately corrupts a determinant so the suite visibly fails.
pub fn run_selftest(seed: u64) -> Vec<CheckResult> {
    use crate::group::{self, conj_phi, decompose_local, dist_g, make_g_t, make_g_vt, make_u_y};
    use crate::group::HorosphericalPoint;

    let inject_det = std::env::var("LATLAB_SELFTEST_INJECT")
        .map(|v| v == "det_perturbation")
        .unwrap_or(false);
    let mut out = Vec::new();
    let d11 = Dims::new(1, 1).unwrap();
    let d21 = Dims::new(2, 1).unwrap();

    // determinant preservation across constructors
    {
        let mut rng = derive_rng(seed, 50, 0);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let t = random_cone(d21, &mut rng);
            let mut m = make_g_vt(&t).mat().clone();
            if inject_det {
                m[(0, 0)] *= 1.0 + 1e-6;
            }
            worst = worst.max((m.det() - 1.0).abs());
        }
        out.push(check(
            "determinant_preservation",
            worst <= group::DET_TOL,
            worst,
            format!("max |det - 1| over 200 flows = {worst:.3e}"),
        ));
    }

    // flow additivity
    {
        let mut rng = derive_rng(seed, 51, 0);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let (t1, t2) = (uniform_in(&mut rng, -2.0, 2.0), uniform_in(&mut rng, -2.0, 2.0));
            let lhs = make_g_t(d21, t1).unwrap().mul(&make_g_t(d21, t2).unwrap());
            let rhs = make_g_t(d21, t1 + t2).unwrap();
            worst = worst
                .max(lhs.mat().sub(rhs.mat()).frobenius_norm() / rhs.mat().frobenius_norm());
        }
        out.push(check("flow_additivity", worst < 1e-12, worst, format!("max rel {worst:.3e}")));
    }

    // splitting identity
    {
        let mut rng = derive_rng(seed, 52, 0);
        let mut worst = 0.0f64;
        let mut floor_ok = true;
        for _ in 0..200 {
            let t = random_cone(d21, &mut rng);
            let (ts, u) = t.split();
            let lhs = make_g_vt(&t);
            let rhs = make_g_t(d21, ts).unwrap().mul(&make_g_vt(&u));
            worst = worst
                .max(lhs.mat().sub(rhs.mat()).frobenius_norm() / lhs.mat().frobenius_norm());
            floor_ok &= u.floor() >= t.floor() / 2.0 - 1e-14;
        }
        out.push(check(
            "splitting_identity",
            worst < 1e-12 && floor_ok,
            worst,
            format!("max rel {worst:.3e}, floors ok = {floor_ok}"),
        ));
    }

    // conjugation consistency and contraction
    {
        let mut rng = derive_rng(seed, 53, 0);
        let mut worst = 0.0f64;
        let mut contraction_ok = true;
        for _ in 0..200 {
            let t = random_cone(d11, &mut rng);
            let y = HorosphericalPoint::from_slice(d11, &[uniform_in(&mut rng, -2.0, 2.0)])
                .unwrap();
            let direct = make_u_y(d11, &conj_phi(&t, &y, false));
            let g = make_g_vt(&t);
            let explicit = g.mul(&make_u_y(d11, &y)).mul(&g.inverse());
            worst = worst.max(
                direct.mat().sub(explicit.mat()).frobenius_norm()
                    / explicit.mat().frobenius_norm(),
            );
            let e = GroupElement::identity(2);
            let contracted = make_u_y(d11, &conj_phi(&t, &y, true));
            contraction_ok &= dist_g(&e, &contracted)
                <= (-2.0 * t.floor()).exp() * dist_g(&e, &make_u_y(d11, &y)) * (1.0 + 1e-12);
        }
        out.push(check(
            "conjugation_and_contraction",
            worst < 1e-12 && contraction_ok,
            worst,
            format!("max rel {worst:.3e}, contraction ok = {contraction_ok}"),
        ));
    }

    // local decomposition round trip
    {
        let mut rng = derive_rng(seed, 54, 0);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 200 {
            let g = match random_near_identity(d11, &mut rng, 0.5) {
                Some(g) => g,
                None => continue,
            };
            if let Ok(dec) = decompose_local(d11, &g) {
                if dec.top_left_condition < 1e6 {
                    let prod = dec.h_minus.mul(&dec.h_zero).mul(&dec.h);
                    worst = worst
                        .max(prod.mat().sub(g.mat()).frobenius_norm() / g.mat().frobenius_norm());
                    done += 1;
                }
            }
        }
        out.push(check(
            "decomposition_roundtrip",
            worst < group::DECOMP_TOL,
            worst,
            format!("max rel {worst:.3e} over 200 elements"),
        ));
    }

    // wedge functoriality
    {
        let mut rng = derive_rng(seed, 55, 0);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let a = loop {
                if let Some(g) = random_near_identity(d21, &mut rng, 0.4) {
                    break g;
                }
            };
            let b = loop {
                if let Some(g) = random_near_identity(d21, &mut rng, 0.4) {
                    break g;
                }
            };
            for j in 1..3 {
                let lhs = crate::exterior::wedge_matrix(a.mul(&b).mat(), j);
                let rhs = crate::exterior::wedge_matrix(a.mat(), j)
                    .mul(&crate::exterior::wedge_matrix(b.mat(), j));
                worst =
                    worst.max(lhs.sub(&rhs).frobenius_norm() / rhs.frobenius_norm().max(1.0));
            }
        }
        out.push(check("wedge_functoriality", worst < 1e-10, worst, format!("max rel {worst:.3e}")));
    }

    // shortest vector against brute force
    {
        let mut rng = derive_rng(seed, 56, 0);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 100 {
            let k = 2 + done % 2;
            let mut m = Mat::identity(k);
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] += uniform_in(&mut rng, -1.0, 1.0);
                }
            }
            if m.det().abs() < 0.25 || m.condition_number() > 40.0 {
                continue;
            }
            let m = m.scale(1.0 / m.det().abs().powf(1.0 / k as f64));
            let got = crate::lattice::shortest_vector_of_basis(&m).unwrap().lambda1;
            let want = brute_force_lambda1(&m, 5);
            worst = worst.max((got - want).abs() / want);
            done += 1;
        }
        out.push(check(
            "shortest_vector_vs_brute_force",
            worst < 1e-10,
            worst,
            format!("max rel dev {worst:.3e} over 100 lattices"),
        ));
    }

    // primitive-sum transform against a double loop
    {
        let mut rng = derive_rng(seed, 57, 0);
        let f = RadialFunction::ball_indicator(1.6);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 20 {
            let mut m = Mat::identity(2);
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] += uniform_in(&mut rng, -0.4, 0.4);
                }
            }
            if m.det() < 0.4 {
                continue;
            }
            let m = m.scale(1.0 / m.det().sqrt());
            let got =
                crate::lattice::siegel_transform_of_basis(&m, &f).unwrap();
            let mut want = 0.0;
            for p in -10i64..=10 {
                for q in -10i64..=10 {
                    if (p, q) == (0, 0) || crate::lattice::coeffs_gcd(&[p, q]) != 1 {
                        continue;
                    }
                    let v = m.mul_vec(&[p as f64, q as f64]);
                    want += f.eval(crate::matrix::norm(&v));
                }
            }
            worst = worst.max((got - want).abs());
            done += 1;
        }
        out.push(check(
            "primitive_sum_vs_double_loop",
            worst == 0.0,
            worst,
            format!("max abs dev {worst:.3e} over 20 lattices"),
        ));
    }

    // mean-value oracle
    {
        let disc = RadialFunction::ball_indicator(1.0);
        let got = crate::lattice::siegel_mean(&disc, 2).unwrap();
        let want = 6.0 / std::f64::consts::PI;
        let dev = (got - want).abs();
        out.push(check(
            "mean_value_oracle",
            dev < 1e-8,
            dev,
            format!("disc mean {got:.12} vs 6/pi"),
        ));
    }

    // bump normalization and scaling law
    {
        let mut worst_mass = 0.0f64;
        for dim in [1usize, 2] {
            for r in [0.5, 0.25] {
                let b = make_bump(dim, r).unwrap();
                let mass = crate::smooth::integral(&b).unwrap();
                worst_mass = worst_mass.max((mass - 1.0).abs());
            }
        }
        out.push(check(
            "bump_normalization",
            worst_mass < 1e-8,
            worst_mass,
            format!("max |mass - 1| = {worst_mass:.3e}"),
        ));

        let mut worst_spread = 0.0f64;
        for dim in [1usize, 2] {
            for ell in [0usize, 1] {
                let mut vals = Vec::new();
                for r in [0.5f64, 0.25] {
                    let b = make_bump(dim, r).unwrap();
                    let s = crate::smooth::sobolev_norm(&b, ell).unwrap();
                    vals.push(r.powf(ell as f64 + dim as f64 / 2.0) * s);
                }
                worst_spread = worst_spread.max(vals[0].max(vals[1]) / vals[0].min(vals[1]) - 1.0);
            }
        }
        out.push(check(
            "sobolev_scaling_law",
            worst_spread < 0.05,
            worst_spread,
            format!("max spread {:.2}%", worst_spread * 100.0),
        ));
    }

    // Haar product formula at reduced samples
    {
        let phi = crate::haar::HaarTestFn::default_near_identity(d11);
        match crate::haar::mc_haar_check(&phi, 200_000, seed ^ 0x9a7) {
            Ok(rep) => {
                out.push(check(
                    "haar_product_formula",
                    rep.passed && rep.flipped_sigmas > 5.0,
                    rep.discrepancy_sigmas,
                    format!(
                        "two-chart discrepancy {:.2} sigmas, flipped convention {:.1} sigmas off",
                        rep.discrepancy_sigmas, rep.flipped_sigmas
                    ),
                ));
            }
            Err(e) => out.push(check("haar_product_formula", false, f64::NAN, e.to_string())),
        }
    }

    // sub-level measure bounds
    {
        let ball = Ball::new(vec![0.0], 1.0).unwrap();
        let lin =
            crate::nondivergence::is_c_alpha_good(&|x: &[f64]| x[0], &ball, 2.0, 1.0, 10, seed)
                .unwrap();
        let sq = crate::nondivergence::is_c_alpha_good(
            &|x: &[f64]| x[0] * x[0],
            &ball,
            2.0,
            0.5,
            10,
            seed,
        )
        .unwrap();
        out.push(check(
            "sublevel_measure_bounds",
            lin.passed && sq.passed,
            lin.worst_ratio.max(sq.worst_ratio),
            format!("worst ratios: linear {:.3}, square {:.3}", lin.worst_ratio, sq.worst_ratio),
        ));
    }

    // nondivergence closed-form oracle
    {
        let g = GroupElement::new(Mat::from_rows(&[vec![10.0, 0.0], vec![0.0, 0.1]]).unwrap())
            .unwrap();
        let phi = AffineLatticeMap::translate_family(d11, &g, &GroupElement::identity(2));
        let ball = Ball::new(vec![0.5], 0.5).unwrap();
        let (f0, _) =
            crate::nondivergence::nondivergence_fraction(&phi, &ball, 0.1, 20_000, seed).unwrap();
        let (f2, se2) =
            crate::nondivergence::nondivergence_fraction(&phi, &ball, 0.2, 20_000, seed).unwrap();
        let want = 2.0 * (0.0003f64).sqrt();
        let dev_sigmas = (f2 - want).abs() / se2.max(1e-12);
        out.push(check(
            "nondivergence_closed_form",
            f0 == 0.0 && dev_sigmas <= 3.0,
            dev_sigmas,
            format!("fraction(0.1) = {f0}, fraction(0.2) = {f2:.5} vs {want:.5} ({dev_sigmas:.2} se)"),
        ));
    }

    // decay fit on synthetic data
    {
        let pts: Vec<(f64, f64)> =
            (1..=8).map(|s| (s as f64, 3.0 * (-0.4 * s as f64).exp())).collect();
        let fit = decay_fit(&pts).unwrap();
        let dev = (fit.gamma_hat - 0.4).abs();
        out.push(check(
            "decay_fit_recovery",
            dev < 1e-12 && fit.residual < 1e-12,
            dev,
            format!("gamma_hat {:.12}", fit.gamma_hat),
        ));
    }

    // bookkeeping formulas
    {
        let a = (gamma_tilde(1.0, 1, d11) - 1.0 / 7.0).abs();
        let b = (gamma_tilde(1.0, 1, d21) - 1.0 / 61.0).abs();
        let c = (crate::equidist::rhs_mixing_bound(1.0, 0.1, 1.0, 10.0, 1, 2, 1.0, 10.0)
            - (0.1 + 1.0e4 * (-10.0f64).exp()))
        .abs();
        let d = (crate::equidist::eps_of_balancing(0.5, 1.0, 2.0, 2)
            - (4.0 * (-2.0f64).exp()).sqrt())
        .abs();
        let worst = a.max(b).max(c).max(d);
        out.push(check(
            "bookkeeping_formulas",
            worst < 1e-14,
            worst,
            format!("max formula deviation {worst:.3e}"),
        ));
    }

    // injectivity sweep identity example
    {
        match crate::lattice::injectivity_radius_check(&GroupElement::identity(2), 1.0, 1, 0.5) {
            Ok(rep) => out.push(check(
                "injectivity_radius_sweep",
                rep.passed && (rep.min_dist - 1.0).abs() < 1e-12,
                rep.min_dist,
                format!("min dist {:.6} over {} unimodular", rep.min_dist, rep.num_unimodular),
            )),
            Err(e) => out.push(check("injectivity_radius_sweep", false, f64::NAN, e.to_string())),
        }
    }

    // integer-multivector infimum examples
    {
        let e = crate::exterior::delta_l(&GroupElement::identity(2), 2.0).unwrap();
        let g = GroupElement::new(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap())
            .unwrap();
        let h = crate::exterior::delta_l(&g, 2.0).unwrap();
        let worst = (e.value - 1.0).abs().max((h.value - 0.5).abs());
        out.push(check(
            "integer_multivector_infimum",
            worst < 1e-12 && e.certified_exact,
            worst,
            format!("identity {:.6}, diagonal {:.6}", e.value, h.value),
        ));
    }

    // translate integral normalization
    {
        let f = make_bump(1, 0.3).unwrap();
        let c = 1.7;
        let psi = TestFunction::Lambda1Profile(Arc::new(move |_| c));
        let z = Lattice::standard(d11);
        let q =
            crate::equidist::i_integral(&f, &psi, &GroupElement::identity(2), &z, 16).unwrap();
        let dev = (q.value - c).abs() / c;
        out.push(check(
            "translate_integral_normalization",
            dev < 1e-2,
            dev,
            format!("constant test function recovered to {:.3e}", dev),
        ));
    }

    // determinism of seeded runs
    {
        let g = GroupElement::new(Mat::from_rows(&[vec![10.0, 0.0], vec![0.0, 0.1]]).unwrap())
            .unwrap();
        let phi = AffineLatticeMap::translate_family(d11, &g, &GroupElement::identity(2));
        let ball = Ball::new(vec![0.5], 0.5).unwrap();
        let a = crate::nondivergence::nondivergence_fraction(&phi, &ball, 0.2, 5_000, seed)
            .unwrap();
        let b = crate::nondivergence::nondivergence_fraction(&phi, &ball, 0.2, 5_000, seed)
            .unwrap();
        out.push(check(
            "seeded_determinism",
            a == b,
            (a.0 - b.0).abs(),
            "identical seeds reproduce identical fractions".into(),
        ));
    }

    out
}

fn random_cone(dims: Dims, rng: &mut impl rand::Rng) -> ConeVector {
    loop {
        let mut t: Vec<f64> = (0..dims.k()).map(|_| uniform_in(rng, 0.2, 3.0)).collect();
        let sm: f64 = t[..dims.m()].iter().sum();
        let sn: f64 = t[dims.m()..].iter().sum();
        for x in t[dims.m()..].iter_mut() {
            *x *= sm / sn;
        }
        if let Ok(cv) = ConeVector::new(dims, t) {
            return cv;
        }
    }
}

fn random_near_identity(dims: Dims, rng: &mut impl rand::Rng, spread: f64) -> Option<GroupElement> {
    let k = dims.k();
    let mut mat = Mat::identity(k);
    for i in 0..k {
        for j in 0..k {
            mat[(i, j)] += uniform_in(rng, -spread, spread);
        }
    }
    let det = mat.det();
    if det < 1e-6 {
        return None;
    }
    GroupElement::new(mat.scale(1.0 / det.powf(1.0 / k as f64))).ok()
}

fn brute_force_lambda1(basis: &Mat, bound: i64) -> f64 {
    let k = basis.rows();
    let mut best = f64::INFINITY;
    let mut c = vec![-bound; k];
    'outer: loop {
        if c.iter().any(|&x| x != 0) {
            let v = basis.mul_vec(&c.iter().map(|&x| x as f64).collect::<Vec<_>>());
            best = best.min(crate::matrix::norm(&v));
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
