//! Area spectral efficiency and the two network design problems.
//!
//! ASE is computed from the coverage CCDF:
//! `λ̃/ln2 · ∫_{γ₀}^∞ p(γ)/(1+γ) dγ + λ̃·log₂(1+γ₀)·p(γ₀)`.

use std::cell::RefCell;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::analytic::{coverage_limit, coverage_with_density};
use crate::channel::PathLossModel;
use crate::deployment::NetworkParams;
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::search::{golden_section_max, log_bisect, unimodal_argmax};
use crate::simulator::{simulate_trials, MonteCarloConfig};
use crate::units::log_space;

/// Coverage below which a curve is considered to have reached its floor.
pub const CURVE_FLOOR: f64 = 1e-4;
/// Points of the γ grid used for tabulated ASE.
pub const ASE_GRID_POINTS: usize = 120;

/// Tabulated coverage probability against linear SINR thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    gammas: Vec<f64>,
    values: Vec<f64>,
    errors: Option<Vec<f64>>,
}

impl CoverageCurve {
    pub fn new(gammas: Vec<f64>, values: Vec<f64>, errors: Option<Vec<f64>>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != values.len() {
            return domain("a curve needs equally many thresholds and values, at least one");
        }
        if errors.as_ref().is_some_and(|e| e.len() != values.len()) {
            return domain("error bars must match the values");
        }
        if !(gammas[0] > 0.0) || gammas.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("thresholds must be positive and strictly increasing");
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return domain("coverage values must lie in [0, 1]");
        }
        if values.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return domain("coverage values must be non-increasing");
        }
        Ok(Self {
            gammas,
            values,
            errors,
        })
    }

    /// Tabulates `p` on `gammas`.
    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(gammas: Vec<f64>, mut p: F) -> Result<Self> {
        let mut values = Vec::with_capacity(gammas.len());
        let mut prev = 1.0f64;
        for &g in &gammas {
            // quadrature noise can lift a value by ~1e-12; keep the curve monotone
            let v = p(g)?.clamp(0.0, 1.0).min(prev);
            values.push(v);
            prev = v;
        }
        Self::new(gammas, values, None)
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn errors(&self) -> Option<&[f64]> {
        self.errors.as_deref()
    }

    /// The curve starting exactly at `gamma0`, interpolating linearly in
    /// `ln γ` when `gamma0` falls between grid points.
    fn starting_at(&self, gamma0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if gamma0 < self.gammas[0] * (1.0 - 1e-12) {
            return domain(format!(
                "curve starts at {} but the ASE needs it from {gamma0}",
                self.gammas[0]
            ));
        }
        let j = self.gammas.partition_point(|&g| g <= gamma0 * (1.0 + 1e-12));
        if j == self.gammas.len() {
            return domain(format!("curve ends before gamma0 = {gamma0}"));
        }
        let mut g = vec![gamma0];
        let mut v = vec![if (self.gammas[j - 1] / gamma0 - 1.0).abs() <= 1e-12 {
            self.values[j - 1]
        } else {
            let (a, b) = (self.gammas[j - 1].ln(), self.gammas[j].ln());
            let t = (gamma0.ln() - a) / (b - a);
            self.values[j - 1] + t * (self.values[j] - self.values[j - 1])
        }];
        g.extend_from_slice(&self.gammas[j..]);
        v.extend_from_slice(&self.values[j..]);
        Ok((g, v))
    }
}

/// Parts of an ASE value, each already multiplied by the SSR density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AseBreakdown {
    pub value: f64,
    /// `λ̃·log₂(1+γ₀)·p(γ₀)`
    pub atom: f64,
    /// Integral over the tabulated or integrated range.
    pub body: f64,
    /// Estimate of the integral beyond the last threshold.
    pub tail: f64,
    /// Whether the curve fell below [`CURVE_FLOOR`] by its last threshold.
    pub floor_reached: bool,
}

/// Weights `w_i` with `Σ w_i·p_i ≈ log₂(1+γ₀)·p₀ + (1/ln2)∫ p/(1+γ) dγ`
/// over the grid, using the trapezoid rule in `ln γ`.
fn curve_weights(gammas: &[f64]) -> Vec<f64> {
    let n = gammas.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (gammas[i + 1].ln() - gammas[i].ln());
        w[i] += h;
        w[i + 1] += h;
    }
    for (wi, &g) in w.iter_mut().zip(gammas) {
        *wi *= g / (1.0 + g) / LN_2;
    }
    w[0] += (1.0 + gammas[0]).log2();
    w
}

/// Tail beyond the last threshold assuming `p ∝ γ^(−k)` with `k` taken from
/// the last two points: `p_max / (k·ln2)`.
fn tail_estimate(gammas: &[f64], values: &[f64]) -> Result<f64> {
    let n = values.len();
    let last = values[n - 1];
    if last == 0.0 {
        return Ok(0.0);
    }
    let slope = if n >= 2 && values[n - 2] > 0.0 {
        -(last.ln() - values[n - 2].ln()) / (gammas[n - 1].ln() - gammas[n - 2].ln())
    } else {
        0.0
    };
    if !(slope > 0.0) {
        return Err(Error::CurveTail {
            gamma_max: gammas[n - 1],
            value: last,
        });
    }
    Ok(last / (slope * LN_2))
}

/// ASE from a tabulated coverage curve.
///
/// A curve that has not decayed at its last point leaves an unbounded tail
/// and is rejected; one that decays but stays above [`CURVE_FLOOR`] is
/// accepted with `floor_reached = false`.
pub fn ase_from_curve(curve: &CoverageCurve, ssr_density: f64, gamma0: f64) -> Result<AseBreakdown> {
    if !(ssr_density >= 0.0 && gamma0 > 0.0) {
        return domain(format!(
            "need a non-negative SSR density and positive gamma0, got {ssr_density}, {gamma0}"
        ));
    }
    let (gammas, values) = curve.starting_at(gamma0)?;
    let weights = curve_weights(&gammas);
    let atom = (1.0 + gamma0).log2() * values[0];
    let total: f64 = weights.iter().zip(&values).map(|(w, p)| w * p).sum();
    let tail = tail_estimate(&gammas, &values)?;
    let last = *values.last().unwrap();
    Ok(AseBreakdown {
        value: ssr_density * (total + tail),
        atom: ssr_density * atom,
        body: ssr_density * (total - atom),
        tail: ssr_density * tail,
        floor_reached: last < CURVE_FLOOR,
    })
}

/// Floor used to end the integration range of a CCDF given as a function.
const CCDF_FLOOR: f64 = 1e-12;

/// ASE of a CCDF given as a function, integrated adaptively in `ln γ`.
///
/// The range ends at the first 1 dB step where `p` falls below 10⁻¹²; the
/// rest is estimated from the local power-law slope.
pub fn ase_from_ccdf<F>(
    ccdf: F,
    ssr_density: f64,
    gamma0: f64,
    quad: &QuadratureSpec,
) -> Result<AseBreakdown>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(ssr_density >= 0.0 && gamma0 > 0.0 && gamma0.is_finite()) {
        return domain(format!(
            "need a non-negative SSR density and positive gamma0, got {ssr_density}, {gamma0}"
        ));
    }
    let p0 = ccdf(gamma0)?;
    let step = 10f64.powf(0.1);
    let mut gmax = gamma0;
    let mut pmax = p0;
    let mut prev = (gamma0, p0);
    while pmax >= CCDF_FLOOR {
        prev = (gmax, pmax);
        gmax *= step;
        pmax = ccdf(gmax)?;
        if gmax > 1e30 {
            return Err(Error::CurveTail {
                gamma_max: gmax,
                value: pmax,
            });
        }
    }
    let failure = RefCell::new(None);
    let integrand = |t: f64| {
        let g = t.exp();
        match ccdf(g) {
            Ok(p) => p * g / (1.0 + g),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let body = if gmax > gamma0 {
        integrate(integrand, gamma0.ln(), gmax.ln(), quad)?.value / LN_2
    } else {
        0.0
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let tail = if pmax > 0.0 && prev.1 > pmax {
        tail_estimate(&[prev.0, gmax], &[prev.1, pmax])?
    } else {
        0.0
    };
    let atom = (1.0 + gamma0).log2() * p0;
    Ok(AseBreakdown {
        value: ssr_density * (atom + body + tail),
        atom: ssr_density * atom,
        body: ssr_density * body,
        tail: ssr_density * tail,
        floor_reached: true,
    })
}

/// ASE in the limit λ → ∞, where the SSR density equals ρ.
pub fn ase_limit(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma0: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    Ok(ase_from_ccdf(|g| coverage_limit(params, model, g, quad), params.rho, gamma0, quad)?.value)
}

/// Thresholds from `gamma0` to where the limit coverage drops below
/// [`CURVE_FLOOR`], log-spaced.
pub fn ase_gamma_grid(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma0: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    if !(gamma0 > 0.0) {
        return domain(format!("gamma0 must be positive, got {gamma0}"));
    }
    let step = 10f64.powf(0.1);
    let mut gmax = gamma0 * 10.0;
    while coverage_limit(params, model, gmax, quad)? >= CURVE_FLOOR {
        gmax *= step;
        if gmax > 1e30 {
            return Err(Error::CurveTail {
                gamma_max: gmax,
                value: coverage_limit(params, model, gmax, quad)?,
            });
        }
    }
    Ok(log_space(gamma0, gmax, ASE_GRID_POINTS))
}

/// How finite-λ coverage is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "kebab-case")]
pub enum Engine {
    /// The limit formula with the active-BS density in place of ρ.
    DenseApprox,
    /// Shared-sample Monte Carlo.
    MonteCarlo(MonteCarloConfig),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::DenseApprox => "dense-approx",
            Engine::MonteCarlo(_) => "monte-carlo",
        }
    }
}

/// ASE at finite λ with its standard error (zero for analytic engines).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AseEstimate {
    pub value: f64,
    pub uncertainty: f64,
    pub ssr_density: f64,
}

/// ASE at finite λ with the SSR density from the idle-mode law.
///
/// The Monte Carlo engine tabulates the shared-sample curve on the
/// [`ase_gamma_grid`] and adds, per sample, the exact contribution of SINRs
/// beyond its last threshold. The estimate is then a mean of independent
/// per-trial values, whose spread gives the reported standard error.
pub fn ase_finite(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma0: f64,
    engine: &Engine,
    quad: &QuadratureSpec,
) -> Result<AseEstimate> {
    params.validate()?;
    let ssr = params.active_density()?;
    match engine {
        Engine::DenseApprox => {
            let b = ase_from_ccdf(
                |g| coverage_with_density(params, model, g, ssr, quad),
                ssr,
                gamma0,
                quad,
            )?;
            Ok(AseEstimate {
                value: b.value,
                uncertainty: 0.0,
                ssr_density: ssr,
            })
        }
        Engine::MonteCarlo(cfg) => {
            let grid = ase_gamma_grid(params, model, gamma0, quad)?;
            let weights = curve_weights(&grid);
            let gmax = *grid.last().unwrap();
            let batch = simulate_trials(params, model, cfg)?;
            let per_trial: Vec<f64> = batch
                .records
                .iter()
                .map(|r| {
                    let s = r.sample.sinr;
                    let body: f64 = grid
                        .iter()
                        .zip(&weights)
                        .take_while(|(g, _)| s > **g)
                        .map(|(_, w)| w)
                        .sum();
                    let beyond = if s > gmax {
                        ((1.0 + s) / (1.0 + gmax)).log2()
                    } else {
                        0.0
                    };
                    ssr * (body + beyond)
                })
                .collect();
            let (mean, se) = mean_and_se(&per_trial);
            Ok(AseEstimate {
                value: mean,
                uncertainty: se,
                ssr_density: ssr,
            })
        }
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Independent re-check of a located design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub ase: f64,
    pub std_error: f64,
    /// Relative gap to the limit ASE.
    pub gap: f64,
    pub passed: bool,
    pub trials: usize,
    pub seed: u64,
}

/// ASE evaluated at a bracket endpoint by a second engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointCheck {
    pub density: f64,
    pub ase: f64,
    pub std_error: f64,
}

/// Output of either design solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    /// λ* for deployment, ρ* for scheduling.
    pub located_value: f64,
    pub achieved_ase: f64,
    /// `(1 − ε)·ASE_limit` for deployment.
    pub target: Option<f64>,
    pub ase_limit: Option<f64>,
    pub iterations: usize,
    pub bracket: (f64, f64),
    /// Active-BS density at the located point.
    pub implied_ssr_density: f64,
    pub unimodal: Option<bool>,
    pub verification: Option<Verification>,
    pub endpoint_checks: Vec<EndpointCheck>,
    /// `(density, ASE)` pairs of the coarse scan.
    pub scan: Vec<(f64, f64)>,
}

/// Range of the coarse λ scan for deployment, BSs/km².
pub const DEPLOY_SCAN: (f64, f64) = (1e2, 1e6);
/// Scan points per decade.
pub const SCAN_PER_DECADE: usize = 4;

fn scan_grid(lo: f64, hi: f64) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * SCAN_PER_DECADE as f64).round() as usize + 1;
    log_space(lo, hi, n.max(2))
}

/// Smallest λ beyond which the ASE stays within `ε` of its limit.
///
/// A log scan over [`DEPLOY_SCAN`] finds the last λ whose gap exceeds ε;
/// bisection in `ln λ` then narrows the crossing to 1 %. With a Monte Carlo
/// engine the same seed is used at every λ. The result is always re-checked
/// by simulation with an independent seed and twice the trials (of the
/// engine's config, or the default one for the dense engine), accepting a
/// gap up to `ε + 3σ/ASE_limit`.
pub fn solve_bs_deployment(
    params: &NetworkParams,
    model: &PathLossModel,
    engine: &Engine,
    quad: &QuadratureSpec,
) -> Result<DesignSolution> {
    params.validate()?;
    let gamma0 = params.gamma0;
    let eps = params.epsilon;
    let limit = ase_limit(params, model, gamma0, quad)?;
    let target = (1.0 - eps) * limit;
    let mut iterations = 0;
    let mut eval = |lambda: f64| -> Result<AseEstimate> {
        iterations += 1;
        ase_finite(&params.with_lambda(lambda), model, gamma0, engine, quad)
    };
    let gap = |a: f64| ((limit - a) / limit).abs();

    let grid = scan_grid(DEPLOY_SCAN.0, DEPLOY_SCAN.1);
    let mut scan = Vec::with_capacity(grid.len());
    for &l in &grid {
        scan.push((l, eval(l)?.value));
    }
    let last_open = scan.iter().rposition(|&(_, a)| gap(a) > eps);
    let (located, bracket) = match last_open {
        None => (grid[0], (grid[0], grid[0])),
        Some(i) if i + 1 == grid.len() => {
            return Err(Error::NoSolution {
                lower: grid[0],
                upper: grid[i],
                residual_gap: gap(scan[i].1),
            })
        }
        Some(i) => {
            let b = log_bisect(|l| Ok(gap(eval(l)?.value) <= eps), grid[i], grid[i + 1], 0.01)?;
            (b.upper, (b.lower, b.upper))
        }
    };
    let achieved = eval(located)?;

    // the dense engine is checked by simulation at its default settings
    let base = match engine {
        Engine::MonteCarlo(cfg) => *cfg,
        Engine::DenseApprox => MonteCarloConfig::default(),
    };
    let check = MonteCarloConfig {
        trials: base.trials * 2,
        seed: base.seed ^ 0x5eed_5eed_5eed_5eed,
        ..base
    };
    let v = ase_finite(&params.with_lambda(located), model, gamma0, &Engine::MonteCarlo(check), quad)?;
    let g = gap(v.value);
    let verification = Some(Verification {
        ase: v.value,
        std_error: v.uncertainty,
        gap: g,
        passed: g <= eps + 3.0 * v.uncertainty / limit,
        trials: check.trials,
        seed: check.seed,
    });

    Ok(DesignSolution {
        located_value: located,
        achieved_ase: achieved.value,
        target: Some(target),
        ase_limit: Some(limit),
        iterations,
        bracket,
        implied_ssr_density: achieved.ssr_density,
        unimodal: None,
        verification,
        endpoint_checks: Vec::new(),
        scan,
    })
}

/// UE density in `(0, λ]` that maximizes the dense-regime ASE.
///
/// The objective is the ASE with the idle-mode SSR density, evaluated with
/// the analytic dense approximation. A log grid checks unimodality, then
/// golden-section search in `ln ρ` refines the peak to 0.5 %. If the grid is
/// not unimodal the grid argmax is returned without refinement. With a
/// Monte Carlo engine the final bracket endpoints are also simulated.
pub fn solve_ue_scheduling(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma0: f64,
    engine: &Engine,
    quad: &QuadratureSpec,
) -> Result<DesignSolution> {
    params.validate()?;
    let lambda = params.lambda;
    let objective = |rho: f64| -> Result<f64> {
        Ok(ase_finite(&params.with_rho(rho), model, gamma0, &Engine::DenseApprox, quad)?.value)
    };
    let lo = 1.0f64.min(lambda / 10.0);
    let grid = scan_grid(lo, lambda);
    let mut scan = Vec::with_capacity(grid.len());
    for &r in &grid {
        scan.push((r, objective(r)?));
    }
    let mut iterations = grid.len();
    let values: Vec<f64> = scan.iter().map(|s| s.1).collect();
    let (best, unimodal) = unimodal_argmax(&values, 1e-9);

    let (rho_star, ase_star, bracket) = if !unimodal {
        (grid[best], values[best], (grid[best], grid[best]))
    } else {
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(grid.len() - 1)];
        let r = golden_section_max(|t| objective(t.exp()), a.ln(), b.ln(), 1.005f64.ln())?;
        iterations += r.evaluations;
        let (rho, ase) = if r.value >= values[best] {
            (r.x.exp(), r.value)
        } else {
            (grid[best], values[best])
        };
        (rho, ase, (r.lower.exp(), r.upper.exp()))
    };

    let endpoint_checks = match engine {
        Engine::MonteCarlo(_) => [bracket.0, bracket.1]
            .iter()
            .map(|&rho| {
                let e = ase_finite(&params.with_rho(rho), model, gamma0, engine, quad)?;
                Ok(EndpointCheck {
                    density: rho,
                    ase: e.value,
                    std_error: e.uncertainty,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        Engine::DenseApprox => Vec::new(),
    };

    Ok(DesignSolution {
        located_value: rho_star,
        achieved_ase: ase_star,
        target: None,
        ase_limit: None,
        iterations,
        bracket,
        implied_ssr_density: params.with_rho(rho_star).active_density()?,
        unimodal: Some(unimodal),
        verification: None,
        endpoint_checks,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::three_gpp_case;
    use crate::quadrature::integrate_semi_infinite;
    use proptest::prelude::*;

    fn setup() -> (NetworkParams, PathLossModel, QuadratureSpec) {
        (
            NetworkParams::default(),
            three_gpp_case(),
            QuadratureSpec::default(),
        )
    }

    #[test]
    fn constant_curve_is_rejected() {
        let c = CoverageCurve::new(log_space(1.0, 100.0, 50), vec![1.0; 50], None).unwrap();
        assert!(matches!(ase_from_curve(&c, 10.0, 1.0), Err(Error::CurveTail { .. })));
    }

    #[test]
    fn step_curve_gives_shannon_rate() {
        // p = 1 up to γ₁ = 10, 0 beyond, on a fine grid
        let gammas = log_space(1.0, 1e3, 200_001);
        let values = gammas.iter().map(|&g| if g <= 10.0 { 1.0 } else { 0.0 }).collect();
        let c = CoverageCurve::new(gammas, values, None).unwrap();
        let b = ase_from_curve(&c, 3.0, 1.0).unwrap();
        let exact = 3.0 * 11f64.log2();
        assert!((b.value - exact).abs() / exact < 1e-4, "{} vs {exact}", b.value);
        assert!(b.floor_reached);
        assert_eq!(b.tail, 0.0);
    }

    #[test]
    fn curve_must_cover_gamma0() {
        let c = CoverageCurve::new(log_space(2.0, 100.0, 20), vec![0.0; 20], None).unwrap();
        assert!(ase_from_curve(&c, 1.0, 1.0).is_err());
        assert!(ase_from_curve(&c, 1.0, 3.0).is_ok());
    }

    #[test]
    fn malformed_curves() {
        assert!(CoverageCurve::new(vec![], vec![], None).is_err());
        assert!(CoverageCurve::new(vec![1.0, 1.0], vec![0.5, 0.4], None).is_err());
        assert!(CoverageCurve::new(vec![1.0, 2.0], vec![0.4, 0.5], None).is_err());
        assert!(CoverageCurve::new(vec![1.0, 2.0], vec![1.4, 0.5], None).is_err());
        assert!(CoverageCurve::new(vec![1.0, 2.0], vec![0.5, 0.4], Some(vec![0.1])).is_err());
    }

    #[test]
    fn power_law_tail_is_counted() {
        // p = min(1, γ^-2): exact ∫_1^∞ γ^-2/(1+γ) dγ = 1 − ln 2
        let gammas = log_space(1.0, 1e4, 4001);
        let values: Vec<f64> = gammas.iter().map(|g| g.powi(-2)).collect();
        let c = CoverageCurve::new(gammas, values, None).unwrap();
        let b = ase_from_curve(&c, 1.0, 1.0).unwrap();
        let exact = 1.0 + (1.0 - LN_2) / LN_2;
        assert!((b.value - exact).abs() / exact < 1e-5, "{}", b.value);
        assert!(b.tail > 0.0 && b.floor_reached);
    }

    #[test]
    fn integration_by_parts_identity() {
        // ∫ log₂(1+γ)·f(γ) dγ with f = −p' equals the CCDF form.
        let q = QuadratureSpec::default();
        for a in [0.05, 0.3, 2.0] {
            let gamma0 = 0.7;
            let pdf_form = integrate_semi_infinite(
                |g: f64| (1.0 + g).log2() * a * (-a * g).exp(),
                &[gamma0, gamma0 + 1.0 / a],
                |u| {
                    // log₂(1+γ) ≤ γ/ln2, so the tail is below e^{−au}(u + 1/a)/ln2
                    (-a * u).exp() * (u + 1.0 / a) / LN_2
                },
                &q,
            )
            .unwrap()
            .value;
            let ccdf_form = ase_from_ccdf(|g| Ok((-a * g).exp()), 1.0, gamma0, &q).unwrap().value;
            assert!((pdf_form - ccdf_form).abs() / pdf_form < 1e-6, "a = {a}: {pdf_form} vs {ccdf_form}");
        }
    }

    #[test]
    fn limit_and_tabulated_routes_agree() {
        let (p, m, q) = setup();
        let direct = ase_limit(&p, &m, 1.0, &q).unwrap();
        let grid = ase_gamma_grid(&p, &m, 1.0, &q).unwrap();
        assert_eq!(grid.len(), ASE_GRID_POINTS);
        let curve = CoverageCurve::from_fn(grid, |g| coverage_limit(&p, &m, g, &q)).unwrap();
        let tab = ase_from_curve(&curve, p.rho, 1.0).unwrap();
        assert!(tab.floor_reached);
        assert!((tab.value - direct).abs() / direct < 2e-3, "{} vs {direct}", tab.value);
    }

    #[test]
    fn ase_limit_vanishes_with_rho() {
        let (p, m, q) = setup();
        let small = ase_limit(&p.with_rho(1e-6), &m, 1.0, &q).unwrap();
        assert!(small > 0.0 && small < 1e-3);
    }

    #[test]
    fn dense_engine_reaches_the_limit() {
        let (p, m, q) = setup();
        let limit = ase_limit(&p, &m, 1.0, &q).unwrap();
        let dense = ase_finite(&p.with_lambda(1e9), &m, 1.0, &Engine::DenseApprox, &q).unwrap();
        assert!((dense.value - limit).abs() / limit < 5e-3);
        assert_eq!(dense.uncertainty, 0.0);
    }

    #[test]
    fn limit_ase_is_unimodal_in_rho() {
        let (p, m, q) = setup();
        let values: Vec<f64> = log_space(100.0, 2000.0, 14)
            .into_iter()
            .map(|r| ase_limit(&p.with_rho(r), &m, 1.0, &q).unwrap())
            .collect();
        let (best, unimodal) = unimodal_argmax(&values, 0.0);
        assert!(unimodal, "{values:?}");
        assert!(best > 0 && best < values.len() - 1);
    }

    #[test]
    fn deployment_scan_floor_for_loose_gap() {
        let (p, m, q) = setup();
        let p = NetworkParams { epsilon: 0.999, ..p };
        let s = solve_bs_deployment(&p, &m, &Engine::DenseApprox, &q).unwrap();
        assert_eq!(s.located_value, DEPLOY_SCAN.0);
        assert!(s.verification.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ase_is_linear_in_ssr_density(scale in 0.0f64..1e4, k in 0.2f64..4.0) {
            let gammas = log_space(1.0, 1e3, 60);
            let values: Vec<f64> = gammas.iter().map(|g| g.powf(-k)).collect();
            let c = CoverageCurve::new(gammas, values, None).unwrap();
            let one = ase_from_curve(&c, 1.0, 1.0).unwrap().value;
            let many = ase_from_curve(&c, scale, 1.0).unwrap().value;
            prop_assert!((many - scale * one).abs() <= 1e-12 * many.abs().max(1.0));
        }

        #[test]
        fn ase_is_monotone_in_the_curve(k in 0.5f64..3.0, lift in 0.0f64..0.5) {
            let gammas = log_space(1.0, 1e3, 60);
            let low: Vec<f64> = gammas.iter().map(|g| g.powf(-k) * 0.5).collect();
            let high: Vec<f64> = low.iter().map(|v| v * (1.0 + lift)).collect();
            let a = ase_from_curve(&CoverageCurve::new(gammas.clone(), low, None).unwrap(), 1.0, 1.0).unwrap();
            let b = ase_from_curve(&CoverageCurve::new(gammas, high, None).unwrap(), 1.0, 1.0).unwrap();
            prop_assert!(b.value >= a.value);
        }
    }
}
