//! Quadrature helpers: refining composite Simpson in one dimension and
//! midpoint tensor grids in several.

use crate::error::{Error, Result};
use crate::rng::pairwise_sum;

/// Composite Simpson on [a, b], doubling the panel count until two
/// refinements agree to `rel_tol` (or `abs_floor` absolutely).
pub fn integrate_1d(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument("bad integration interval".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut panels = 64usize;
    let mut prev = simpson(f, a, b, panels);
    for _ in 0..16 {
        panels *= 2;
        let cur = simpson(f, a, b, panels);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(prev.abs()) + abs_floor {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!(
        "1-D quadrature did not converge to rel {rel_tol:e} after {panels} panels"
    )))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut terms = Vec::with_capacity(panels + 1);
    for i in 0..=panels {
        let x = a + i as f64 * h;
        let w = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        terms.push(w * f(x));
    }
    pairwise_sum(&terms) * h / 3.0
}

/// Midpoint nodes of an axis split into `count` cells over [lo, hi].
pub fn midpoints(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let h = (hi - lo) / count as f64;
    (0..count).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Uniform grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let h = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + i as f64 * h).collect()
}

/// Iterate the full tensor grid {0..counts[0]} x ... x {0..counts[d-1]} in
/// row-major order, calling `f` with the multi-index.
pub fn tensor_indices(counts: &[usize], mut f: impl FnMut(&[usize])) {
    let d = counts.len();
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; d];
    for flat in 0..total {
        let mut rem = flat;
        for axis in (0..d).rev() {
            idx[axis] = rem % counts[axis];
            rem /= counts[axis];
        }
        f(&idx);
    }
}

/// Total number of points in a tensor grid, guarding against overflow.
pub fn tensor_size(counts: &[usize]) -> Option<usize> {
    counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c))
}
