//! Scenario parameters, Poisson deployments and the idle-mode density law.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::channel::PathLossModel;
use crate::error::{domain, Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::units;

/// Default idle-mode exponent of the active-BS density law.
pub const DEFAULT_IDLE_EXPONENT: f64 = 3.5;

/// Scenario scalars in linear units: densities per km², lengths in km,
/// powers in mW, thresholds as linear ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub lambda: f64,
    pub rho: f64,
    pub height_km: f64,
    pub tx_power_mw: f64,
    pub noise_power_mw: f64,
    pub idle_exponent: f64,
    pub gamma0: f64,
    pub epsilon: f64,
}

impl Default for NetworkParams {
    /// 3GPP small-cell setting: λ = 10⁶, ρ = 300, L = 8.5 m, P = 24 dBm,
    /// P_N = −95 dBm, q = 3.5, γ₀ = 0 dB, ε = 5 %.
    fn default() -> Self {
        ScenarioConfig::default()
            .to_params()
            .expect("defaults are valid")
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("rho", self.rho),
            ("tx_power", self.tx_power_mw),
            ("noise_power", self.noise_power_mw),
            ("q", self.idle_exponent),
            ("gamma0", self.gamma0),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || v.is_nan() {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.height_km >= 0.0 && self.height_km.is_finite()) {
            return domain(format!("height must be non-negative, got {} km", self.height_km));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    pub fn with_height_m(self, height_m: f64) -> Self {
        Self {
            height_km: units::m_to_km(height_m),
            ..self
        }
    }

    pub fn with_tx_power_mw(self, tx_power_mw: f64) -> Self {
        Self { tx_power_mw, ..self }
    }

    /// Density of active base stations for these parameters.
    pub fn active_density(&self) -> Result<f64> {
        active_bs_density(self.lambda, self.rho, self.idle_exponent)
    }
}

/// Scenario as written in configuration files, in external units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub lambda_per_km2: f64,
    pub rho_per_km2: f64,
    pub height_m: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub q: f64,
    pub gamma0_db: f64,
    pub epsilon: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            lambda_per_km2: 1e6,
            rho_per_km2: 300.0,
            height_m: 8.5,
            tx_power_dbm: 24.0,
            noise_power_dbm: -95.0,
            q: DEFAULT_IDLE_EXPONENT,
            gamma0_db: 0.0,
            epsilon: 0.05,
        }
    }
}

impl ScenarioConfig {
    /// Converts to linear units; this is the only place unit conversion happens.
    pub fn to_params(&self) -> Result<NetworkParams> {
        let params = NetworkParams {
            lambda: self.lambda_per_km2,
            rho: self.rho_per_km2,
            height_km: units::m_to_km(self.height_m),
            tx_power_mw: units::dbm_to_mw(self.tx_power_dbm),
            noise_power_mw: units::dbm_to_mw(self.noise_power_dbm),
            idle_exponent: self.q,
            gamma0: units::db_to_linear(self.gamma0_db),
            epsilon: self.epsilon,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Points of a planar process inside a disk centred on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<[f64; 2]>,
    pub window_radius_km: f64,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Density of active base stations when each idle BS switches off:
/// `λ [1 − (1 + ρ/(qλ))^(−q)]`.
pub fn active_bs_density(lambda: f64, rho: f64, q: f64) -> Result<f64> {
    if !(lambda > 0.0 && rho > 0.0 && q > 0.0) {
        return domain(format!(
            "active density needs positive inputs, got lambda={lambda}, rho={rho}, q={q}"
        ));
    }
    // −expm1(−q·ln(1 + x)) keeps precision when ρ ≪ λ.
    let x = rho / (q * lambda);
    Ok(lambda * -(-q * x.ln_1p()).exp_m1())
}

/// 3D link distance from a 2D distance and the antenna height difference.
pub fn distance_3d(r: f64, height: f64) -> Result<f64> {
    if !(r >= 0.0 && height >= 0.0) {
        return domain(format!("distances must be non-negative, got r={r}, L={height}"));
    }
    Ok(r.hypot(height))
}

/// Uniform point on the disk of radius `radius`.
pub(crate) fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [r * theta.cos(), r * theta.sin()]
}

/// Poisson draw that accepts a zero mean.
pub(crate) fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    }
}

/// Homogeneous Poisson point process on the disk of radius `radius` km.
pub fn sample_hppp<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Result<PointSet> {
    if !(density >= 0.0 && density.is_finite()) {
        return domain(format!("density must be non-negative, got {density}"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return domain(format!("radius must be positive, got {radius}"));
    }
    let area = std::f64::consts::PI * radius * radius;
    let n = poisson_count(rng, density * area);
    let points = (0..n).map(|_| uniform_in_disk(rng, radius)).collect();
    Ok(PointSet {
        points,
        window_radius_km: radius,
    })
}

/// Lower bound on the simulation radius: ten mean BS spacings.
pub fn radius_floor(lambda: f64) -> f64 {
    10.0 / lambda.sqrt()
}

/// Smallest window radius whose excluded Campbell mean interference is at
/// most `tail_fraction` of the total, never below [`radius_floor`].
///
/// The fraction does not depend on the active density or the transmit power,
/// only on the path-loss model and the height difference.
pub fn required_sim_radius(
    params: &NetworkParams,
    model: &PathLossModel,
    tail_fraction: f64,
) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return domain(format!("tail_fraction must lie in (0, 1), got {tail_fraction}"));
    }
    params.validate()?;
    let quad = QuadratureSpec::default();
    let height = params.height_km;
    let total = analytic::campbell_gain_integral(model, height, 0.0, &quad)?;
    if !(total > 0.0) {
        return Err(Error::Model("mean interference integral vanishes".into()));
    }
    let fraction = |r: f64| -> Result<f64> {
        Ok(analytic::campbell_gain_integral(model, height, r, &quad)? / total)
    };
    let floor = radius_floor(params.lambda);
    if fraction(floor)? <= tail_fraction {
        return Ok(floor);
    }
    let (mut lo, mut hi) = (floor, floor.max(1e-3));
    while fraction(hi)? > tail_fraction {
        lo = hi;
        hi *= 2.0;
        if hi > 1e5 {
            return Err(Error::Divergent(
                "interference tail does not fall below the requested fraction".into(),
            ));
        }
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if fraction(mid)? > tail_fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
