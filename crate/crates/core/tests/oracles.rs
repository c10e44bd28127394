//! Analytic functionals against shot-noise sampling of a Poisson field.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use udn::analytic::{
    campbell_gain_integral, laplace_argument, laplace_interference, mean_interference,
};
use udn::channel::{three_gpp_case, PathLossModel};
use udn::deployment::{active_bs_density, sample_hppp, NetworkParams};
use udn::quadrature::QuadratureSpec;

/// One aggregate interference draw at the origin from every point of a
/// Poisson field on a disk, with independent link states and Rayleigh fading.
fn shot_noise(
    density: f64,
    radius: f64,
    model: &PathLossModel,
    params: &NetworkParams,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let field = sample_hppp(density, radius, rng).unwrap();
    field
        .points
        .iter()
        .map(|p| {
            let w = p[0].hypot(p[1]).hypot(params.height_km);
            let state = model.sample_link_state(w, rng).unwrap();
            let g: f64 = Exp1.sample(rng);
            params.tx_power_mw * model.gain(w, state) * g
        })
        .sum()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn laplace_functional_matches_sampled_fields() {
    let model = three_gpp_case();
    let params = NetworkParams::default();
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    // Beyond 2 km the exponent's remainder is far below the sampling error.
    let radius = 2.0;
    for gamma in [0.3, 1.0, 5.0] {
        let s = laplace_argument(&params, &model, gamma).unwrap();
        let exact = laplace_interference(s, 300.0, &model, params.height_km, params.tx_power_mw, &quad)
            .unwrap();
        let draws: Vec<f64> = (0..10_000)
            .map(|_| (-s * shot_noise(300.0, radius, &model, &params, &mut rng)).exp())
            .collect();
        let (m, se) = mean_se(&draws);
        assert!((m - exact).abs() < 3.0 * se, "γ={gamma}: mc {m} ± {se}, exact {exact}");
    }
}

#[test]
fn campbell_mean_matches_sampled_fields() {
    let model = three_gpp_case();
    let params = NetworkParams::default();
    let quad = QuadratureSpec::default();
    let density = active_bs_density(params.lambda, params.rho, params.idle_exponent).unwrap();
    // window holding 200 active BSs on average
    let radius = (200.0 / (std::f64::consts::PI * density)).sqrt();
    let whole = mean_interference(density, &model, params.height_km, params.tx_power_mw, &quad)
        .unwrap();
    let outside = std::f64::consts::TAU
        * density
        * params.tx_power_mw
        * campbell_gain_integral(&model, params.height_km, radius, &quad).unwrap();
    let expected = whole - outside;

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| shot_noise(density, radius, &model, &params, &mut rng))
        .collect();
    let (m, se) = mean_se(&draws);
    assert!((m - expected).abs() < 3.0 * se, "mc {m} ± {se}, campbell {expected}");
    assert!(outside < 0.05 * whole);
}

#[test]
fn laplace_decreases_in_s_and_density() {
    let model = three_gpp_case();
    let quad = QuadratureSpec::default();
    let l = 0.0085;
    let p = 251.188_643_150_958;
    let mut prev = 1.0;
    for s in [1e3, 1e4, 1e5, 1e6] {
        let v = laplace_interference(s, 300.0, &model, l, p, &quad).unwrap();
        assert!(v > 0.0 && v < prev);
        prev = v;
    }
    let mut prev = 1.0;
    for d in [10.0, 100.0, 1000.0] {
        let v = laplace_interference(1e4, d, &model, l, p, &quad).unwrap();
        assert!(v > 0.0 && v < prev);
        prev = v;
    }
}
