//! Globally adaptive Gauss–Kronrod integration.
//!
//! Each panel is evaluated with the nested 7-point Gauss / 15-point Kronrod
//! pair; the difference between the two rules is the panel's error estimate.
//! The panel with the largest error is halved until the summed error meets
//! `max(abs_tol, rel_tol * |estimate|)` or the subdivision budget runs out.
//!
//! Semi-infinite integrals are handled by [`integrate_semi_infinite`]: finite
//! panels out to a geometrically growing cut-off, then a caller-supplied
//! closed-form remainder for everything beyond it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the abscissae XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances shared by every integral the analytic layer evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Relative size below which the closed-form tail of a semi-infinite
    /// integral is accepted in place of further panels.
    pub truncation_tail: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-300,
            max_subdivisions: 2000,
            truncation_tail: 1e-7,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.truncation_tail > 0.0) {
            return Err(Error::Domain(
                "quadrature tolerances must be positive".to_string(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    /// Same spec with a tighter relative tolerance.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            truncation_tail: self.truncation_tail * factor,
            max_subdivisions: self.max_subdivisions * 2,
            ..*self
        }
    }
}

/// Value of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Integral {
    fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }
    }

    fn add(self, other: Integral) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if a == b {
        return Ok(Integral::zero());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("finite bounds required, got [{a}, {b}]")));
    }
    let first = kronrod_panel(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 15;
    let mut subdivisions = 1;

    loop {
        let tolerance = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tolerance || !value.is_finite() {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                estimate: value,
                error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel is at floating-point resolution; nothing more to gain.
            heap.push(worst);
            break;
        }
        let left = kronrod_panel(&f, worst.a, mid);
        let right = kronrod_panel(&f, mid, worst.b);
        evaluations += 30;
        subdivisions += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

/// Integrates over consecutive pieces `[p0, p1], [p1, p2], ...`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    points.windows(2).try_fold(Integral::zero(), |acc, w| {
        Ok(acc.add(integrate(&f, w[0], w[1], spec)?))
    })
}

/// Integrates `f` over `[points[0], ∞)`.
///
/// The finite breakpoints in `points` split the integral where the integrand
/// has kinks or jumps. Past the last breakpoint, panels `[U, 2U]` are added
/// until `remainder(U)`, a closed-form bound on `∫_U^∞ f`, falls below
/// `truncation_tail` times the accumulated value; that remainder is then added
/// as the tail estimate and also counted in the reported error.
pub fn integrate_semi_infinite<F, R>(
    f: F,
    points: &[f64],
    remainder: R,
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    let mut cut = match points.last() {
        Some(&p) if p > 0.0 => p,
        _ => {
            return Err(Error::Domain(
                "semi-infinite integration needs a positive last breakpoint".into(),
            ))
        }
    };
    let mut total = integrate_pieces(&f, points, spec)?;
    for _ in 0..200 {
        let tail = remainder(cut);
        if !tail.is_finite() {
            return Err(Error::Divergent(format!(
                "tail bound is not finite beyond {cut}"
            )));
        }
        if tail <= spec.truncation_tail * total.value.abs() || tail == 0.0 {
            return Ok(Integral {
                value: total.value + tail,
                error: total.error + spec.truncation_tail * tail.abs(),
                evaluations: total.evaluations,
            });
        }
        total = total.add(integrate(&f, cut, 2.0 * cut, spec)?);
        cut *= 2.0;
    }
    Err(Error::Divergent(format!(
        "tail bound still {:e} at cut-off {cut:e}",
        remainder(cut)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomials_are_exact() {
        let spec = QuadratureSpec::default();
        for deg in 0..=21 {
            let r = integrate(|x: f64| x.powi(deg), 0.0, 1.0, &spec).unwrap();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((r.value - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn adapts_to_a_peak() {
        let spec = QuadratureSpec::default();
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, &spec).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn semi_infinite_power_tail() {
        // ∫_1^∞ x^-3 dx = 1/2, remainder beyond U is U^-2 / 2.
        let spec = QuadratureSpec::default();
        let r = integrate_semi_infinite(
            |x: f64| x.powi(-3),
            &[1.0, 2.0],
            |u| 0.5 / (u * u),
            &spec,
        )
        .unwrap();
        assert!((r.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let spec = QuadratureSpec {
            max_subdivisions: 3,
            ..QuadratureSpec::default()
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn divergent_tail_is_reported() {
        let spec = QuadratureSpec::default();
        let err = integrate_semi_infinite(|x: f64| 1.0 / x, &[1.0], |_| f64::INFINITY, &spec)
            .unwrap_err();
        assert!(matches!(err, Error::Divergent(_)));
    }
}
