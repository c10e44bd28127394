//! One-dimensional searches used by the design solvers.

use crate::error::{domain, Result};

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `f` on `[a, b]` until `b - a <= tol`.
pub fn golden_section_max<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<GoldenResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a < b && tol > 0.0) {
        return domain(format!("golden section needs a < b and tol > 0, got [{a}, {b}], {tol}"));
    }
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(GoldenResult {
        x,
        value,
        lower: a,
        upper: b,
        evaluations,
    })
}

/// Result of a bisection on a predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    /// Largest probed point where the predicate is false.
    pub lower: f64,
    /// Smallest probed point where the predicate is true.
    pub upper: f64,
    pub evaluations: usize,
}

/// Bisects in `ln x` between `lo` (predicate false) and `hi` (predicate
/// true) until `hi / lo <= 1 + rel`.
pub fn log_bisect<F>(mut pred: F, lo: f64, hi: f64, rel: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(lo > 0.0 && hi > lo && rel > 0.0) {
        return domain(format!("log bisection needs 0 < lo < hi, got [{lo}, {hi}]"));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut evaluations = 0;
    while hi / lo > 1.0 + rel {
        let mid = (lo * hi).sqrt();
        evaluations += 1;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Bracket {
        lower: lo,
        upper: hi,
        evaluations,
    })
}

/// Index of the maximum, and whether the sequence rises then falls at most
/// once (plateaus allowed within `tol` relative).
pub fn unimodal_argmax(values: &[f64], tol: f64) -> (usize, bool) {
    let (mut best, mut best_v) = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    let slack = |v: f64| tol * v.abs().max(f64::MIN_POSITIVE);
    let rising = values[..=best].windows(2).all(|w| w[1] >= w[0] - slack(w[0]));
    let falling = values[best..].windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    (best, rising && falling)
}
