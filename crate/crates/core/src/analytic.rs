//! Asymptotic coverage probability and the Laplace functional of the
//! aggregate interference.
//!
//! Every integral here is over the 2D distance `u` with the 3D distance
//! `w = √(u² + L²)` substituted inside the path-loss model.

use serde::{Deserialize, Serialize};

use crate::channel::{LinkState, PathLossModel};
use crate::deployment::{active_bs_density, NetworkParams};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_semi_infinite, Integral, QuadratureSpec};

/// The noise factor `c(γ)` and the per-unit-density base `g(γ)` such that
/// the coverage limit at UE density ρ equals `c·g^ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFactors {
    pub c: f64,
    pub g: f64,
}

impl PowerLawFactors {
    pub fn coverage(&self, rho: f64) -> f64 {
        self.c * self.g.powf(rho)
    }
}

/// Abscissae where the integrand in `u` may have kinks or jumps: the origin,
/// the height difference, and every segment break reachable above `L`.
fn breakpoints(model: &PathLossModel, height: f64, from: f64) -> Vec<f64> {
    let mut pts = vec![from];
    let knees = std::iter::once(height).chain(
        model
            .breaks()
            .into_iter()
            .filter(|&d| d > height)
            .map(|d| (d * d - height * height).sqrt()),
    );
    for p in knees {
        if p > *pts.last().unwrap() {
            pts.push(p);
        }
    }
    if pts.len() == 1 {
        // Need a positive cut-off to start the geometric tail panels from.
        pts.push(if from > 0.0 { 2.0 * from } else { 1e-3 });
    }
    pts
}

/// Outermost exponents must exceed 2 for the planar tails to converge.
fn check_tail(model: &PathLossModel) -> Result<()> {
    let outer = model.outermost();
    if outer.alpha_nlos <= 2.0 || outer.alpha_los <= 2.0 {
        return Err(Error::Divergent(format!(
            "outermost path-loss exponents must exceed 2, got LoS {} and NLoS {}",
            outer.alpha_los, outer.alpha_nlos
        )));
    }
    Ok(())
}

/// Upper bound on `∫_U^∞ scale·[Pr·ζ^L + (1 − Pr)·ζ^NL](w)·u du` in the
/// outermost segment, taking `w ≥ u` and `Pr(w) ≤ Pr(U)`.
fn tail_bound(model: &PathLossModel, height: f64, scale: f64, cut: f64) -> f64 {
    let outer = model.outermost();
    let p = model.los_prob_unchecked(cut.hypot(height)).clamp(0.0, 1.0);
    let los = p * scale * outer.a_los * cut.powf(2.0 - outer.alpha_los) / (outer.alpha_los - 2.0);
    let nlos = scale * outer.a_nlos * cut.powf(2.0 - outer.alpha_nlos) / (outer.alpha_nlos - 2.0);
    los + nlos
}

/// `∫_0^∞ E_state[u·x/(1 + x)] du` with `x = s·P·ζ(w)`.
///
/// This is the exponent of the Laplace functional per unit density and
/// per factor `2π`.
pub fn laplace_exponent(
    s: f64,
    model: &PathLossModel,
    height: f64,
    tx_power: f64,
    quad: &QuadratureSpec,
) -> Result<Integral> {
    if !(s >= 0.0 && s.is_finite()) {
        return domain(format!("s must be non-negative and finite, got {s}"));
    }
    if !(height >= 0.0 && tx_power > 0.0) {
        return domain(format!(
            "height must be non-negative and power positive, got L={height}, P={tx_power}"
        ));
    }
    quad.validate()?;
    check_tail(model)?;
    if s == 0.0 {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let sp = s * tx_power;
    let integrand = |u: f64| {
        let w = u.hypot(height);
        if w == 0.0 {
            return 0.0;
        }
        let seg = model.segment_for(w);
        let p = seg.los_prob.eval(w);
        let xl = sp * seg.gain(w, LinkState::Los);
        let xn = sp * seg.gain(w, LinkState::Nlos);
        u * (p * xl / (1.0 + xl) + (1.0 - p) * xn / (1.0 + xn))
    };
    integrate_semi_infinite(
        integrand,
        &breakpoints(model, height, 0.0),
        |cut| tail_bound(model, height, sp, cut),
        quad,
    )
}

/// Laplace transform `E[exp(−s·I)]` of the aggregate interference from a
/// Poisson field of interferers with the given density around a receiver at
/// height offset `L`, under unit-mean Rayleigh fading.
pub fn laplace_interference(
    s: f64,
    density: f64,
    model: &PathLossModel,
    height: f64,
    tx_power: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(density >= 0.0 && density.is_finite()) {
        return domain(format!("density must be non-negative, got {density}"));
    }
    let exponent = laplace_exponent(s, model, height, tx_power, quad)?;
    Ok((-std::f64::consts::TAU * density * exponent.value).exp())
}

/// `∫_from^∞ mean_path_gain(√(u² + L²))·u du`, the Campbell integral of the
/// mean interference per unit density and transmit power and per factor 2π.
pub fn campbell_gain_integral(
    model: &PathLossModel,
    height: f64,
    from: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(height >= 0.0 && from >= 0.0) {
        return domain(format!(
            "height and lower limit must be non-negative, got L={height}, from={from}"
        ));
    }
    if height == 0.0 && from == 0.0 {
        return Err(Error::Divergent(
            "mean interference is unbounded with zero height difference".into(),
        ));
    }
    check_tail(model)?;
    let integrand = |u: f64| u * model.mean_gain_unchecked(u.hypot(height));
    let r = integrate_semi_infinite(
        integrand,
        &breakpoints(model, height, from),
        |cut| tail_bound(model, height, 1.0, cut),
        quad,
    )?;
    Ok(r.value)
}

/// Mean aggregate interference `2π·density·P·∫ mean_path_gain(w)·u du`
/// from a Poisson field covering the whole plane.
pub fn mean_interference(
    density: f64,
    model: &PathLossModel,
    height: f64,
    tx_power: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(density >= 0.0 && density.is_finite()) {
        return domain(format!("density must be non-negative, got {density}"));
    }
    let integral = campbell_gain_integral(model, height, 0.0, quad)?;
    Ok(std::f64::consts::TAU * density * tx_power * integral)
}

/// Laplace argument `s = γ / (P·ζ₁^L(L))` for threshold `gamma`.
pub fn laplace_argument(params: &NetworkParams, model: &PathLossModel, gamma: f64) -> Result<f64> {
    if !(params.height_km > 0.0) {
        return domain("the coverage limit needs a positive height difference");
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return domain(format!("gamma must be non-negative and finite, got {gamma}"));
    }
    let peak = params.tx_power_mw * model.first().gain(params.height_km, LinkState::Los);
    Ok(gamma / peak)
}

/// True when the height difference lies beyond the first segment, outside
/// the regime where the first-piece LoS prefactor is exact.
pub fn height_beyond_first_piece(params: &NetworkParams, model: &PathLossModel) -> bool {
    model
        .first()
        .upper_break_km
        .is_some_and(|d| params.height_km > d)
}

/// `c(γ)` and `g(γ)` for the coverage limit's power law in ρ.
pub fn power_law_factors(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma: f64,
    quad: &QuadratureSpec,
) -> Result<PowerLawFactors> {
    params.validate()?;
    let s = laplace_argument(params, model, gamma)?;
    let c = (-params.noise_power_mw * s).exp();
    let g = laplace_interference(s, 1.0, model, params.height_km, params.tx_power_mw, quad)?;
    Ok(PowerLawFactors { c, g })
}

fn coverage_at_density(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma: f64,
    density: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let s = laplace_argument(params, model, gamma)?;
    let c = (-params.noise_power_mw * s).exp();
    let l = laplace_interference(s, density, model, params.height_km, params.tx_power_mw, quad)?;
    Ok(c * l)
}

/// Coverage probability at threshold `gamma` in the limit λ → ∞.
///
/// Depends on the UE density but not on λ, which is ignored.
pub fn coverage_limit(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    coverage_at_density(params, model, gamma, params.rho, quad)
}

/// Finite-λ approximation: the limit formula with the active-BS density in
/// place of ρ. It ignores the exclusion region around the typical UE and is
/// exact only as λ → ∞.
pub fn dense_coverage_approx(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    let density = params.active_density()?;
    coverage_at_density(params, model, gamma, density, quad)
}

/// Coverage limit evaluated with an explicit interferer density.
pub fn coverage_with_density(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma: f64,
    density: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    if !(density >= 0.0) {
        return domain(format!("density must be non-negative, got {density}"));
    }
    coverage_at_density(params, model, gamma, density, quad)
}

/// Active density used by [`dense_coverage_approx`].
pub fn dense_density(params: &NetworkParams) -> Result<f64> {
    active_bs_density(params.lambda, params.rho, params.idle_exponent)
}
