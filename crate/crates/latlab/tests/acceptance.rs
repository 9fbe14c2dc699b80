//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one PASS/FAIL line (visible under `cargo test -- --nocapture`,
//! and in the failure report when a criterion does not hold).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use latlab::config::Config;
use latlab::equidist::{
    equidist_error, eps_of_balancing, gamma_tilde, make_bump, rhs_mixing_bound, TestFunction,
};
use latlab::experiments::{run_conesweep, run_nondiv, NondivOutcome};
use latlab::fitting::decay_fit;
use latlab::group::{
    conj_phi, decompose_local, dist_g, make_g_t, make_g_vt, make_u_y, ConeVector, Dims,
    GroupElement, HorosphericalPoint,
};
use latlab::haar::{mc_haar_check, HaarTestFn};
use latlab::lattice::{
    shortest_vector_of_basis, siegel_mean, Lattice, RadialFunction,
};
use latlab::matrix::{norm, Mat};
use latlab::nondivergence::{nondivergence_fraction, AffineLatticeMap, Ball};
use latlab::rng::{derive_rng, uniform_in};
use latlab::smooth::{sobolev_norm, BumpFunction};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn verdict(n: usize, name: &str, passed: bool, detail: &str) {
    println!("ACCEPTANCE {n:02} ({name}): {} -- {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "acceptance criterion {n} ({name}) failed: {detail}");
}

fn d11() -> Dims {
    Dims::new(1, 1).unwrap()
}

/// Criterion 1: the Monte Carlo fraction outside the Mahler set for
/// diag(10, 0.1) u_x on [0, 1] matches the closed form 2 sqrt(0.0003) at
/// eps = 0.2 within 3 standard errors of 1e5 samples, and vanishes exactly
/// at eps = 0.1.
#[test]
fn acceptance_01_exact_oracle_nondivergence() {
    let dims = d11();
    let g = GroupElement::new(Mat::from_rows(&[vec![10.0, 0.0], vec![0.0, 0.1]]).unwrap())
        .unwrap();
    let phi = AffineLatticeMap::translate_family(dims, &g, &GroupElement::identity(2));
    let ball = Ball::new(vec![0.5], 0.5).unwrap();
    let (f1, _) = nondivergence_fraction(&phi, &ball, 0.1, 100_000, 2024).unwrap();
    let (f2, se2) = nondivergence_fraction(&phi, &ball, 0.2, 100_000, 2024).unwrap();
    let want = 2.0 * (0.0003f64).sqrt();
    let sigmas = (f2 - want).abs() / se2;
    verdict(
        1,
        "exact-oracle nondivergence",
        f1 == 0.0 && sigmas <= 3.0,
        &format!("fraction(0.1) = {f1} (want exactly 0), fraction(0.2) = {f2:.6} vs {want:.6} at {sigmas:.2} standard errors"),
    );
}

/// Criterion 2: the log-log slope of the measured fraction against eps over
/// the ladder in [0.12, 0.2] must be 1.0 +- 0.15.
///
/// The exact fraction for this family is 0.2 sqrt(eps^2 - 0.01), whose
/// least-squares log-log slope over any ladder inside [0.12, 0.2] lies
/// above 1.33 (the local slope is eps^2/(eps^2 - 0.01) >= 1.33 on the whole
/// window, and a least-squares slope is a convex combination of chord
/// slopes). The criterion is therefore expected to fail against the same
/// closed form that criterion 1 pins; the measurement is reported honestly.
#[test]
fn acceptance_02_exponent_window() {
    let cfg = Config::load(&configs_dir().join("nondiv_k2.toml")).unwrap();
    let outcome = run_nondiv(&cfg, 2024).unwrap();
    let rep = match outcome {
        NondivOutcome::Exponent(r) => r,
        _ => unreachable!(),
    };
    let dev = (rep.fitted_slope - 1.0).abs();
    verdict(
        2,
        "exponent window",
        dev <= 0.15,
        &format!(
            "fitted log-log slope {:.4}, |slope - 1| = {:.4} (tolerance 0.15); closed form 0.2 sqrt(eps^2 - 0.01) makes any slope below 1.33 unattainable on this window",
            rep.fitted_slope, dev
        ),
    );
}

/// Criterion 3: domination constants along the diagonal cone sweep at
/// floors {3, 4, 5, 6} vary by at most 10 percent.
#[test]
fn acceptance_03_uniformity_across_the_sweep() {
    let cfg = Config::load(&configs_dir().join("cor34_k2.toml")).unwrap();
    let outcome = run_nondiv(&cfg, 7).unwrap();
    let rep = match outcome {
        NondivOutcome::Uniformity(r) => r,
        _ => unreachable!(),
    };
    verdict(
        3,
        "uniformity across the sweep",
        rep.relative_spread <= 0.10,
        &format!(
            "C_emp per floor {:?}, relative spread {:.2}%",
            rep.c_emp_per_t, rep.relative_spread * 100.0
        ),
    );
}

/// Criterion 4: growth of translate sups for 200 random unit multivectors
/// at m = 2, n = 1 along three rays: every per-ray fitted slope >= 0.5 and
/// the pointwise bound with the fitted constants holds at every sweep
/// point.
#[test]
fn acceptance_04_translate_growth() {
    let cfg = Config::load(&configs_dir().join("conesweep_m2n1.toml")).unwrap();
    let out = run_conesweep(&cfg, 11).unwrap();
    verdict(
        4,
        "translate growth",
        out.min_slope >= 0.5 && out.pointwise_holds,
        &format!(
            "per-ray slopes {:?}, pointwise bound with b = {:.3e}, alpha = {:.3} holds: {}",
            out.per_ray_slopes, out.b_fit, out.alpha_fit, out.pointwise_holds
        ),
    );
}

/// Criterion 5: the headline decay experiment at floors 2..8 against the
/// exact mean 6/pi: positive fitted rate, log-residual below 0.5, and the
/// floor-8 error below 0.05.
///
/// The fitted rate and the floor-8 error hold with orders of magnitude to
/// spare. The log-residual clause is expected to fail: the true error
/// sequence oscillates through a near-zero crossing around floor 7
/// (verified against a 2^20-point direct grid), so no accurate measurement
/// of these seven points is log-linear to RMS 0.5.
#[test]
fn acceptance_05_equidistribution_decay() {
    let dims = d11();
    let f = make_bump(1, 0.3).unwrap();
    let psi =
        TestFunction::Siegel(RadialFunction::smoothed_ball_indicator(1.0, 0.05).unwrap());
    let z = Lattice::standard(dims);
    let mut pts = Vec::new();
    let mut err8 = f64::NAN;
    for s in 2..=8 {
        let t = ConeVector::new(dims, vec![s as f64, s as f64]).unwrap();
        let p = equidist_error(&f, &psi, &t, &z, 1024).unwrap();
        assert!((p.target - 6.0 / std::f64::consts::PI).abs() < 1e-8);
        if s == 8 {
            err8 = p.error;
        }
        pts.push((p.floor_t, p.error));
    }
    let fit = decay_fit(&pts).unwrap();
    verdict(
        5,
        "equidistribution decay",
        fit.gamma_hat > 0.0 && fit.residual < 0.5 && err8 < 0.05,
        &format!(
            "gamma_hat = {:.4} (want > 0), log-residual = {:.4} (want < 0.5), floor-8 error = {:.3e} (want < 0.05); the residual reflects a genuine near-zero crossing of the error at floor 7",
            fit.gamma_hat, fit.residual, err8
        ),
    );
}

/// Criterion 6: r^(l + N/2) |theta_r|_l constant within 5 percent over
/// r in {0.5, 0.25, 0.125} for (N, l) in {1,2} x {0,1}.
#[test]
fn acceptance_06_sobolev_scaling() {
    let radii = [0.5f64, 0.25, 0.125];
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for dim in [1usize, 2] {
        for ell in [0usize, 1] {
            let vals: Vec<f64> = radii
                .iter()
                .map(|&r| {
                    let b = BumpFunction::new(dim, r).unwrap();
                    r.powf(ell as f64 + dim as f64 / 2.0) * sobolev_norm(&b, ell).unwrap()
                })
                .collect();
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let min = vals.iter().cloned().fold(f64::MAX, f64::min);
            let spread = max / min - 1.0;
            worst = worst.max(spread);
            detail.push_str(&format!("(N={dim},l={ell}): {:.2}% ", spread * 100.0));
        }
    }
    verdict(6, "sobolev scaling", worst < 0.05, &format!("spreads {detail}"));
}

/// Criterion 7: the Haar product-formula check at m = n = 1 with narrow
/// bumps passes within 3 standard errors at 1e6 samples, pinning the
/// modular-factor convention.
#[test]
fn acceptance_07_haar_product_formula() {
    let phi = HaarTestFn::default_near_identity(d11());
    let rep = mc_haar_check(&phi, 1_000_000, 4242).unwrap();
    verdict(
        7,
        "haar product formula",
        rep.passed && rep.flipped_sigmas > 10.0,
        &format!(
            "two-chart discrepancy {:.2} sigmas (rel {:.2e}); flipped modular convention rejected at {:.0} sigmas; factor |det A|^{}",
            rep.discrepancy_sigmas, rep.rel_discrepancy, rep.flipped_sigmas, rep.delta_exponent
        ),
    );
}

/// Criterion 8: structural identities at their stated tolerances.
#[test]
fn acceptance_08_structural_identities() {
    let mut rng = derive_rng(881, 0, 0);
    let d21 = Dims::new(2, 1).unwrap();

    // split reconstruction on 1000 random cone vectors, 1e-12 relative
    let mut worst_split = 0.0f64;
    for i in 0..1000 {
        let dims = if i % 2 == 0 { d11() } else { d21 };
        let t = random_cone(dims, &mut rng);
        let (ts, u) = t.split();
        let lhs = make_g_vt(&t);
        let rhs = make_g_t(dims, ts).unwrap().mul(&make_g_vt(&u));
        worst_split = worst_split
            .max(lhs.mat().sub(rhs.mat()).frobenius_norm() / lhs.mat().frobenius_norm());
        assert!(u.floor() >= t.floor() / 2.0 - 1e-14);
    }

    // conjugation against explicit matrix conjugation, 1e-12 relative
    let mut worst_conj = 0.0f64;
    for _ in 0..300 {
        let t = random_cone(d11(), &mut rng);
        let y = HorosphericalPoint::from_slice(d11(), &[uniform_in(&mut rng, -2.0, 2.0)])
            .unwrap();
        let direct = make_u_y(d11(), &conj_phi(&t, &y, false));
        let g = make_g_vt(&t);
        let explicit = g.mul(&make_u_y(d11(), &y)).mul(&g.inverse());
        worst_conj = worst_conj.max(
            direct.mat().sub(explicit.mat()).frobenius_norm() / explicit.mat().frobenius_norm(),
        );
    }

    // decomposition round trip, 1e-10 relative
    let mut worst_dec = 0.0f64;
    let mut done = 0;
    while done < 300 {
        let g = match random_near_identity(d11(), &mut rng, 0.5) {
            Some(g) => g,
            None => continue,
        };
        if let Ok(dec) = decompose_local(d11(), &g) {
            if dec.top_left_condition < 1e6 {
                let prod = dec.h_minus.mul(&dec.h_zero).mul(&dec.h);
                worst_dec = worst_dec
                    .max(prod.mat().sub(g.mat()).frobenius_norm() / g.mat().frobenius_norm());
                done += 1;
            }
        }
    }

    // wedge functoriality, 1e-10
    let mut worst_wedge = 0.0f64;
    for _ in 0..50 {
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
            let lhs = latlab::exterior::wedge_matrix(a.mul(&b).mat(), j);
            let rhs = latlab::exterior::wedge_matrix(a.mat(), j)
                .mul(&latlab::exterior::wedge_matrix(b.mat(), j));
            worst_wedge =
                worst_wedge.max(lhs.sub(&rhs).frobenius_norm() / rhs.frobenius_norm().max(1.0));
        }
    }

    // shortest vector against brute force on 500 lattices, k in {2, 3, 4}
    let mut worst_svp = 0.0f64;
    let mut checked = 0;
    while checked < 500 {
        let k = 2 + checked % 3;
        let mut m = Mat::identity(k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] += uniform_in(&mut rng, -1.0, 1.0);
            }
        }
        if m.det().abs() < 0.2 || m.condition_number() > 50.0 {
            continue;
        }
        let m = m.scale(1.0 / m.det().abs().powf(1.0 / k as f64));
        let got = shortest_vector_of_basis(&m).unwrap().lambda1;
        let want = brute_force_lambda1(&m, 5);
        worst_svp = worst_svp.max((got - want).abs() / want);
        checked += 1;
    }

    let passed = worst_split < 1e-12
        && worst_conj < 1e-12
        && worst_dec < 1e-10
        && worst_wedge < 1e-10
        && worst_svp < 1e-12;
    verdict(
        8,
        "structural identities",
        passed,
        &format!(
            "split {worst_split:.2e} (<1e-12), conj {worst_conj:.2e} (<1e-12), decomposition {worst_dec:.2e} (<1e-10), wedge {worst_wedge:.2e} (<1e-10), svp-vs-brute-force {worst_svp:.2e}"
        ),
    );
}

/// Criterion 9: the bookkeeping formulas reproduce their worked values.
#[test]
fn acceptance_09_formula_evaluators() {
    let gt = gamma_tilde(1.0, 1, d11());
    let rhs = rhs_mixing_bound(1.0, 0.1, 1.0, 10.0, 1, 2, 1.0, 10.0);
    let want_rhs = 0.1 + 1000.0 * 10.0 * (-10.0f64).exp();
    let eps = eps_of_balancing(0.5, 1.0, 2.0, 2);
    let ok = (gt - 1.0 / 7.0).abs() < 1e-15
        && (rhs - want_rhs).abs() < 1e-15
        && (rhs - 0.554).abs() < 1e-3
        && (eps - (4.0 * (-2.0f64).exp()).sqrt()).abs() < 1e-15;
    verdict(
        9,
        "formula evaluators",
        ok,
        &format!("gamma_tilde(1,1) = {gt:.12} (want 1/7), mixing bound {rhs:.6} (want ~0.554)"),
    );
}

/// Criterion 10: the self test and every bundled config produce
/// byte-identical CSV across two seeded runs of the real binary.
#[test]
fn acceptance_10_byte_determinism() {
    let dir = std::env::temp_dir().join("latlab-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let bin = env!("CARGO_BIN_EXE_latlab");
    let mut all_ok = true;
    let mut detail = String::new();
    let jobs: Vec<(&str, Option<&str>)> = vec![
        ("selftest", None),
        ("lambda1", Some("lambda1_k2.toml")),
        ("nondiv", Some("nondiv_k2.toml")),
        ("nondiv", Some("cor34_k2.toml")),
        ("conesweep", Some("conesweep_m2n1.toml")),
        ("equidist", Some("equidist_k2.toml")),
    ];
    for (i, (sub, cfg)) in jobs.iter().enumerate() {
        let out_a = dir.join(format!("run{i}_a.csv"));
        let out_b = dir.join(format!("run{i}_b.csv"));
        for out in [&out_a, &out_b] {
            let mut cmd = std::process::Command::new(bin);
            cmd.arg(sub);
            if let Some(c) = cfg {
                cmd.arg("--config").arg(configs_dir().join(c));
            }
            cmd.arg("--seed").arg("31").arg("--out").arg(out);
            let status = cmd.status().unwrap();
            assert!(
                status.code().is_some(),
                "{sub} terminated without an exit code"
            );
        }
        let same = std::fs::read(&out_a).unwrap() == std::fs::read(&out_b).unwrap();
        all_ok &= same;
        detail.push_str(&format!("{}{} {}; ", sub, cfg.map(|c| format!("({c})")).unwrap_or_default(), if same { "identical" } else { "DIFFERS" }));
    }
    verdict(10, "byte determinism", all_ok, &detail);
}

// helpers shared by the structural criterion

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

// keep the unused-import lint honest about what the suite actually touches
#[allow(dead_code)]
fn _silence(_: Option<(Arc<f64>, f64)>) {
    let _ = siegel_mean(&RadialFunction::zero(), 2);
    let _ = dist_g(&GroupElement::identity(2), &GroupElement::identity(2));
}
