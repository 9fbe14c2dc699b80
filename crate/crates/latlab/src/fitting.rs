//! Least-squares line fits and the exponential decay-rate fit used by the
//! equidistribution and nondivergence experiments.

use crate::error::{Error, Result};

/// Ordinary least squares y = intercept + slope * x.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 points for a line fit, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(LineFit { slope, intercept, rms_residual: (ss / n).sqrt() })
}

/// Result of fitting err ~ C e^{-gamma s} on the points (s, err).
#[derive(Clone, Debug)]
pub struct DecayFit {
    /// The (s, err) pairs actually used (err > 0).
    pub points: Vec<(f64, f64)>,
    pub gamma_hat: f64,
    pub log_c_hat: f64,
    /// RMS residual of the fit in log scale.
    pub residual: f64,
}

/// Log-linear least squares on (s, log err). Points with err <= 0 are
/// dropped; fewer than 3 usable points is an error.
pub fn decay_fit(points: &[(f64, f64)]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, e)| e > 0.0).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs >= 3 points with positive error, got {}",
            usable.len()
        )));
    }
    let logged: Vec<(f64, f64)> = usable.iter().map(|&(s, e)| (s, e.ln())).collect();
    let line = fit_line(&logged)?;
    Ok(DecayFit {
        points: usable,
        gamma_hat: -line.slope + 0.0, // normalize -0.0 to 0.0
        log_c_hat: line.intercept,
        residual: line.rms_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, uniform_in};

    #[test]
    fn exact_log_linear_data_is_recovered() {
        let pts: Vec<(f64, f64)> =
            (1..=10).map(|s| (s as f64, 5.0 * (-0.3 * s as f64).exp())).collect();
        let fit = decay_fit(&pts).unwrap();
        assert!((fit.gamma_hat - 0.3).abs() < 1e-12);
        assert!((fit.log_c_hat.exp() - 5.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn noisy_data_recovers_rate_to_two_percent() {
        let mut rng = derive_rng(5, 0, 0);
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|s| {
                let noise = 1.0 + uniform_in(&mut rng, -0.01, 0.01);
                (s as f64, 5.0 * (-0.3 * s as f64).exp() * noise)
            })
            .collect();
        let fit = decay_fit(&pts).unwrap();
        assert!((fit.gamma_hat - 0.3).abs() < 0.02, "gamma_hat = {}", fit.gamma_hat);
    }

    #[test]
    fn constant_errors_give_zero_rate() {
        let pts = vec![(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)];
        let fit = decay_fit(&pts).unwrap();
        assert_eq!(fit.gamma_hat, 0.0);
    }

    #[test]
    fn too_few_positive_points_is_an_error() {
        let pts = vec![(1.0, 0.5), (2.0, 0.0), (3.0, -1.0)];
        assert!(matches!(decay_fit(&pts), Err(Error::InsufficientData(_))));
    }
}
