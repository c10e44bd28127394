//! Monte Carlo simulation of the downlink seen by a typical UE at the origin.
//!
//! Two entry points share the same model of one network:
//!
//! * [`realize_network`], [`associate`] and [`typical_ue_sinr`] build a full
//!   realization with an explicit UE-by-BS link-state matrix. They are meant
//!   for small instances and as the unpruned reference.
//! * [`simulate_trials`] and the estimators on top of it generate the BS field
//!   lazily, one grid cell at a time, and only look at cells that can still
//!   hold a better server than the current one. Link states and fading are
//!   pure functions of `(seed, trial, link)`, so a link's state is the same
//!   whichever phase looks at it.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::CoverageCurve;
use crate::channel::{LinkState, PathLossModel};
use crate::deployment::{
    poisson_count, radius_floor, required_sim_radius, sample_hppp, uniform_in_disk,
    NetworkParams, PointSet,
};
use crate::error::{domain, Error, Result};

/// Monte Carlo settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    /// Fraction of the Campbell mean interference allowed outside the window.
    pub tail_fraction: f64,
    /// Fixed window radius in km; derived from `tail_fraction` when `None`.
    pub radius_km: Option<f64>,
    /// Size of the worker pool; the global rayon pool when `None`.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 1,
            tail_fraction: 1e-3,
            radius_km: None,
            workers: None,
        }
    }
}

impl MonteCarloConfig {
    pub fn with_trials(self, trials: usize) -> Self {
        Self { trials, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("at least one trial is required");
        }
        if self.workers == Some(0) {
            return domain("workers must be at least 1");
        }
        Ok(())
    }

    /// Window radius for these parameters.
    pub fn window_radius(&self, params: &NetworkParams, model: &PathLossModel) -> Result<f64> {
        match self.radius_km {
            Some(r) if r > 0.0 && r.is_finite() => Ok(r),
            Some(r) => domain(format!("window radius must be positive, got {r}")),
            None => required_sim_radius(params, model, self.tail_fraction),
        }
    }
}

/// Signal, interference and SINR of the typical UE in one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub signal: f64,
    pub interference: f64,
    pub sinr: f64,
}

/// Coverage probability at one threshold with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub gamma: f64,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    /// Windows that held no BS and were redrawn.
    pub empty_windows: u64,
}

/// Mean active-BS density over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// One sampled network with an explicit link-state matrix.
///
/// UE 0 is the typical UE at the origin. `association[k]` is the serving BS
/// index of UE `k` once [`associate`] has run.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub bs_points: PointSet,
    pub ue_points: PointSet,
    /// `link_states[ue][bs]`
    pub link_states: Vec<Vec<LinkState>>,
    pub association: Vec<usize>,
    pub serving_bs: Option<usize>,
    pub active_set: Vec<usize>,
    /// Cell-grid identity of each BS when built from a simulated trial.
    pub bs_ids: Vec<BsId>,
    /// Number of redraws caused by an empty window.
    pub resamples: u64,
}

/// Identity of a BS in the lazily generated field: its grid cell and its
/// draw index inside that cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BsId {
    pub cell: (i32, i32),
    pub index: u32,
}

/// Outcome of one lazily simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sample: SinrSample,
    pub serving: BsId,
    /// Active BSs inside the window, including the serving one.
    pub active: Vec<BsId>,
    pub ues_processed: usize,
    pub attempts: u32,
}

/// All trials of one run, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub records: Vec<TrialRecord>,
    pub radius_km: f64,
    pub empty_windows: u64,
}

impl TrialBatch {
    pub fn sinrs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sample.sinr).collect()
    }

    pub fn coverage(&self, gamma: f64) -> CoverageEstimate {
        let hits = self.records.iter().filter(|r| r.sample.sinr > gamma).count();
        binomial(gamma, hits, self.records.len(), self.empty_windows)
    }

    /// Mean active-BS density over the window area, counting the BS switched
    /// on by the typical UE.
    pub fn active_density(&self) -> f64 {
        let area = std::f64::consts::PI * self.radius_km * self.radius_km;
        let total: usize = self.records.iter().map(|r| r.active.len()).sum();
        total as f64 / (area * self.records.len() as f64)
    }
}

fn binomial(gamma: f64, hits: usize, trials: usize, empty_windows: u64) -> CoverageEstimate {
    let mean = hits as f64 / trials as f64;
    CoverageEstimate {
        gamma,
        mean,
        std_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
        trials,
        empty_windows,
    }
}

// ---------------------------------------------------------------------------
// Deterministic streams

const TAG_UE: u64 = 0x5545_5f73_7472_6561;
const TAG_FADING: u64 = 0x6661_6469_6e67_0001;
const TAG_CELL: u64 = 0x6365_6c6c_0000_0002;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn trial_key(seed: u64, trial: u64, attempt: u32) -> u64 {
    combine(combine(seed, trial), attempt as u64)
}

impl BsId {
    fn hash(&self) -> u64 {
        let cell = ((self.cell.0 as u32 as u64) << 32) | self.cell.1 as u32 as u64;
        combine(cell, self.index as u64)
    }
}

fn link_uniform(key: u64, ue: usize, bs: &BsId) -> f64 {
    unit(combine(combine(key, ue as u64), bs.hash()))
}

/// Link state of UE `ue` to BS `bs`, drawn once per trial.
fn link_state(model: &PathLossModel, key: u64, ue: usize, bs: &BsId, w: f64) -> LinkState {
    model.link_state_from_uniform(w, link_uniform(key, ue, bs))
}

/// Rayleigh power fading from `bs` to the typical UE.
fn fading(key: u64, bs: &BsId) -> f64 {
    -(1.0 - unit(combine(combine(key, TAG_FADING), bs.hash()))).ln()
}

// ---------------------------------------------------------------------------
// Lazily generated BS field

#[derive(Debug, Clone, Copy)]
struct Site {
    id: BsId,
    pos: [f64; 2],
}

struct Field {
    radius: f64,
    side: f64,
    mean_per_cell: f64,
    key: u64,
    lo: i32,
    hi: i32,
    cells: Cells,
}

/// Generated cells: a flat grid for small windows, a map otherwise.
enum Cells {
    Dense(Vec<Option<Vec<Site>>>),
    Sparse(HashMap<(i32, i32), Vec<Site>>),
}

const DENSE_CELL_LIMIT: usize = 1 << 16;

impl Field {
    fn new(lambda: f64, radius: f64, key: u64) -> Self {
        // About four BSs per cell.
        let side = (4.0 / lambda).sqrt();
        let lo = (-radius / side).floor() as i32;
        let hi = (radius / side).floor() as i32;
        let width = (hi - lo + 1) as usize;
        let cells = if width * width <= DENSE_CELL_LIMIT {
            Cells::Dense(vec![None; width * width])
        } else {
            Cells::Sparse(HashMap::new())
        };
        Self {
            radius,
            side,
            mean_per_cell: 4.0,
            key,
            lo,
            hi,
            cells,
        }
    }

    fn cell_of(&self, p: [f64; 2]) -> (i32, i32) {
        (
            (p[0] / self.side).floor() as i32,
            (p[1] / self.side).floor() as i32,
        )
    }

    fn in_range(&self, c: (i32, i32)) -> bool {
        (self.lo..=self.hi).contains(&c.0) && (self.lo..=self.hi).contains(&c.1)
    }

    fn cell_count(&self) -> usize {
        let n = (self.hi - self.lo + 1) as usize;
        n * n
    }

    fn sites(&mut self, c: (i32, i32)) -> &[Site] {
        let (side, radius, key, mean) = (self.side, self.radius, self.key, self.mean_per_cell);
        let generate = || {
            let x0 = c.0 as f64 * side;
            let y0 = c.1 as f64 * side;
            let dx = 0f64.max(x0).max(-(x0 + side));
            let dy = 0f64.max(y0).max(-(y0 + side));
            if dx * dx + dy * dy > radius * radius {
                return Vec::new();
            }
            let code = ((c.0 as u32 as u64) << 32) | c.1 as u32 as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(combine(combine(key, TAG_CELL), code));
            let n = poisson_count(&mut rng, mean);
            (0..n)
                .filter_map(|k| {
                    let pos = [
                        x0 + side * rng.random::<f64>(),
                        y0 + side * rng.random::<f64>(),
                    ];
                    (pos[0] * pos[0] + pos[1] * pos[1] <= radius * radius).then_some(Site {
                        id: BsId {
                            cell: c,
                            index: k as u32,
                        },
                        pos,
                    })
                })
                .collect()
        };
        if !self.in_range(c) {
            return &[];
        }
        let width = (self.hi - self.lo + 1) as usize;
        let slot = (c.0 - self.lo) as usize * width + (c.1 - self.lo) as usize;
        match &mut self.cells {
            Cells::Dense(v) => v[slot].get_or_insert_with(generate),
            Cells::Sparse(m) => m.entry(c).or_insert_with(generate),
        }
    }

    /// Every site in the window, sorted by id.
    fn all_sites(&mut self) -> Vec<Site> {
        let mut out = Vec::new();
        for i in self.lo..=self.hi {
            for j in self.lo..=self.hi {
                out.extend_from_slice(self.sites((i, j)));
            }
        }
        out.sort_by_key(|s| s.id);
        out
    }

    /// Strongest-mean-power BS for the UE at `p`, searching rings of cells
    /// outward and skipping BSs that cannot beat the current best.
    ///
    /// Beyond the NLoS reach of the best gain only a LoS link can win, and a
    /// link is LoS only when its uniform falls below the LoS probability, so
    /// such BSs are dismissed on their uniform alone whenever it exceeds the
    /// supremum of that probability past the NLoS reach.
    fn associate(
        &mut self,
        p: [f64; 2],
        ue: usize,
        model: &PathLossModel,
        height: f64,
    ) -> Option<(Site, f64)> {
        let centre = self.cell_of(p);
        let max_ring = ((p[0].hypot(p[1]) + self.radius) / self.side).ceil() as i32 + 1;
        let key = self.key;
        let h2 = height * height;
        let mut best: Option<(f64, f64, Site)> = None;
        let mut limit_r2 = f64::INFINITY;
        let mut nlos_r2 = f64::INFINITY;
        let mut los_sup = 1.0;
        let mut cells = Vec::new();
        for k in 0..=max_ring {
            if k >= 2 {
                let gap = (k - 1) as f64 * self.side;
                if gap * gap > limit_r2 {
                    break;
                }
            }
            ring_into(centre, k, &mut cells);
            for &c in &cells {
                for site in self.sites(c) {
                    let r2 = (site.pos[0] - p[0]).powi(2) + (site.pos[1] - p[1]).powi(2);
                    if r2 > limit_r2 {
                        continue;
                    }
                    let u = link_uniform(key, ue, &site.id);
                    if r2 > nlos_r2 && u >= los_sup {
                        continue;
                    }
                    let w = (r2 + h2).sqrt();
                    let gain = model.gain(w, model.link_state_from_uniform(w, u));
                    if better(gain, r2, &site.id, best.as_ref().map(|b| (b.0, b.1, &b.2.id))) {
                        best = Some((gain, r2, *site));
                        let los = model.reach_in_state(gain, LinkState::Los);
                        let nlos = model.reach_in_state(gain, LinkState::Nlos);
                        let margin = 1.0 + 1e-9;
                        limit_r2 = (los.max(nlos) * margin).powi(2) - h2;
                        nlos_r2 = (nlos * margin).powi(2) - h2;
                        los_sup = model.max_los_prob_beyond(nlos);
                    }
                }
            }
        }
        best.map(|(gain, _, site)| (site, gain))
    }
}

/// Cells on the square ring at Chebyshev distance `k` from `c`.
fn ring_into(c: (i32, i32), k: i32, out: &mut Vec<(i32, i32)>) {
    out.clear();
    if k == 0 {
        out.push(c);
        return;
    }
    for d in -k..=k {
        out.push((c.0 + d, c.1 - k));
        out.push((c.0 + d, c.1 + k));
    }
    for d in -k + 1..k {
        out.push((c.0 - k, c.1 + d));
        out.push((c.0 + k, c.1 + d));
    }
}

/// Larger gain wins; ties go to the smaller 2D distance, then the lower id.
fn better<I: Ord>(gain: f64, r2: f64, id: I, best: Option<(f64, f64, I)>) -> bool {
    match best {
        None => true,
        Some((g, d, b)) => gain > g || (gain == g && (r2 < d || (r2 == d && id < b))),
    }
}

struct NetworkOutcome {
    typical: Option<(Site, f64)>,
    active: BTreeMap<BsId, [f64; 2]>,
    ues_processed: usize,
}

/// Associates the typical UE (when `typical`) and the Poisson UEs of one
/// trial, stopping early once every BS within `count_radius` is active.
fn run_network(
    params: &NetworkParams,
    model: &PathLossModel,
    field: &mut Field,
    ue_radius: f64,
    count_radius: f64,
    typical: bool,
) -> NetworkOutcome {
    let height = params.height_km;
    let mut active = BTreeMap::new();
    let mut served = None;
    if typical {
        match field.associate([0.0, 0.0], 0, model, height) {
            Some((site, gain)) => {
                active.insert(site.id, site.pos);
                served = Some((site, gain));
            }
            None => {
                return NetworkOutcome {
                    typical: None,
                    active,
                    ues_processed: 0,
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(combine(field.key, TAG_UE));
    let area = std::f64::consts::PI * ue_radius * ue_radius;
    let n_ue = poisson_count(&mut rng, params.rho * area);

    // Materialize the counting region when UEs far outnumber BSs there, so
    // the loop can stop as soon as nothing is left to switch on.
    let expected_bs = params.lambda * std::f64::consts::PI * count_radius * count_radius;
    let stop_at = if n_ue as f64 > 4.0 * expected_bs && field.cell_count() <= 4096 {
        let n = field
            .all_sites()
            .iter()
            .filter(|s| s.pos[0].hypot(s.pos[1]) <= count_radius)
            .count();
        Some(n)
    } else {
        None
    };
    let counted = |active: &BTreeMap<BsId, [f64; 2]>| {
        active
            .values()
            .filter(|p| p[0].hypot(p[1]) <= count_radius)
            .count()
    };
    let mut n_counted = counted(&active);

    let mut processed = 0;
    for ue in 1..=n_ue {
        if stop_at.is_some_and(|n| n_counted >= n) {
            break;
        }
        let p = uniform_in_disk(&mut rng, ue_radius);
        processed += 1;
        if let Some((site, _)) = field.associate(p, ue, model, height) {
            if active.insert(site.id, site.pos).is_none()
                && site.pos[0].hypot(site.pos[1]) <= count_radius
            {
                n_counted += 1;
            }
        }
    }
    NetworkOutcome {
        typical: served,
        active,
        ues_processed: processed,
    }
}

const MAX_ATTEMPTS: u32 = 1_000;

/// Simulates trial `trial` of a run with the given seed and window radius.
pub fn simulate_trial(
    params: &NetworkParams,
    model: &PathLossModel,
    radius: f64,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    for attempt in 0..MAX_ATTEMPTS {
        let key = trial_key(seed, trial, attempt);
        let mut field = Field::new(params.lambda, radius, key);
        let out = run_network(params, model, &mut field, radius, radius, true);
        let Some((serving, gain)) = out.typical else {
            continue;
        };
        let p = params.tx_power_mw;
        let signal = p * gain * fading(key, &serving.id);
        let interference: f64 = out
            .active
            .iter()
            .filter(|(id, _)| **id != serving.id)
            .map(|(id, pos)| {
                let w = pos[0].hypot(pos[1]).hypot(params.height_km);
                p * model.gain(w, link_state(model, key, 0, id, w)) * fading(key, id)
            })
            .sum();
        return Ok(TrialRecord {
            sample: SinrSample {
                signal,
                interference,
                sinr: signal / (interference + params.noise_power_mw),
            },
            serving: serving.id,
            active: out.active.keys().copied().collect(),
            ues_processed: out.ues_processed,
            attempts: attempt + 1,
        });
    }
    Err(Error::Simulation(format!(
        "no BS in a window of radius {radius} km after {MAX_ATTEMPTS} draws"
    )))
}

fn run_trials<T, F>(cfg: &MonteCarloConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    cfg.validate()?;
    let job = || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(&f)
            .collect::<Result<Vec<T>>>()
    };
    match cfg.workers {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Simulation(format!("cannot start worker pool: {e}")))?
            .install(job),
    }
}

fn check_radius(params: &NetworkParams, radius: f64) -> Result<()> {
    let floor = radius_floor(params.lambda);
    if radius < floor * (1.0 - 1e-12) {
        return domain(format!(
            "window radius {radius} km is below ten mean BS spacings ({floor} km)"
        ));
    }
    Ok(())
}

/// Runs `cfg.trials` independent trials. Results are in trial order and do
/// not depend on the number of workers.
pub fn simulate_trials(
    params: &NetworkParams,
    model: &PathLossModel,
    cfg: &MonteCarloConfig,
) -> Result<TrialBatch> {
    params.validate()?;
    let radius = cfg.window_radius(params, model)?;
    check_radius(params, radius)?;
    let records = run_trials(cfg, |t| simulate_trial(params, model, radius, cfg.seed, t))?;
    let empty_windows = records.iter().map(|r| (r.attempts - 1) as u64).sum();
    Ok(TrialBatch {
        records,
        radius_km: radius,
        empty_windows,
    })
}

/// Fraction of trials whose typical-UE SINR exceeds `gamma`.
pub fn estimate_coverage(
    params: &NetworkParams,
    model: &PathLossModel,
    gamma: f64,
    cfg: &MonteCarloConfig,
) -> Result<CoverageEstimate> {
    if !(gamma >= 0.0) {
        return domain(format!("gamma must be non-negative, got {gamma}"));
    }
    Ok(simulate_trials(params, model, cfg)?.coverage(gamma))
}

/// Coverage at every threshold of `gammas` from one shared set of trials.
pub fn estimate_coverage_curve(
    params: &NetworkParams,
    model: &PathLossModel,
    gammas: &[f64],
    cfg: &MonteCarloConfig,
) -> Result<CoverageCurve> {
    let batch = simulate_trials_for_curve(params, model, gammas, cfg)?;
    curve_from_batch(&batch, gammas)
}

pub(crate) fn simulate_trials_for_curve(
    params: &NetworkParams,
    model: &PathLossModel,
    gammas: &[f64],
    cfg: &MonteCarloConfig,
) -> Result<TrialBatch> {
    if gammas.is_empty() {
        return domain("the threshold grid is empty");
    }
    if gammas.windows(2).any(|w| !(w[1] > w[0])) || !(gammas[0] >= 0.0) {
        return domain("thresholds must be non-negative and strictly increasing");
    }
    simulate_trials(params, model, cfg)
}

/// Coverage curve built from the SINR samples of a batch.
pub fn curve_from_batch(batch: &TrialBatch, gammas: &[f64]) -> Result<CoverageCurve> {
    let estimates: Vec<CoverageEstimate> = gammas.iter().map(|&g| batch.coverage(g)).collect();
    CoverageCurve::new(
        gammas.to_vec(),
        estimates.iter().map(|e| e.mean).collect(),
        Some(estimates.iter().map(|e| e.std_error).collect()),
    )
}

/// Density of active BSs, counting only UEs from the Poisson population.
///
/// BSs are counted in an inner disk holding about 200 of the sparser of the
/// two populations; UEs are drawn over a margin of five BS spacings beyond it
/// so that BSs near the counting edge still see their UEs.
pub fn estimate_active_density(
    params: &NetworkParams,
    model: &PathLossModel,
    cfg: &MonteCarloConfig,
) -> Result<DensityEstimate> {
    params.validate()?;
    let inner = (200.0 / (std::f64::consts::PI * params.lambda.min(params.rho))).sqrt();
    let outer = inner + 5.0 / params.lambda.sqrt();
    let counts = run_trials(cfg, |t| {
        let key = trial_key(cfg.seed, t, 0);
        let mut field = Field::new(params.lambda, outer, key);
        let out = run_network(params, model, &mut field, outer, inner, false);
        Ok(out
            .active
            .values()
            .filter(|p| p[0].hypot(p[1]) <= inner)
            .count() as f64)
    })?;
    let area = std::f64::consts::PI * inner * inner;
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = if counts.len() > 1 {
        counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(DensityEstimate {
        mean: mean / area,
        std_error: (var / n).sqrt() / area,
        trials: counts.len(),
    })
}

/// Full realization of trial `trial`, identical to the network the lazy
/// engine samples for the same seed: every BS in the window, every UE and the
/// complete link-state matrix. Association is not yet performed.
pub fn trial_realization(
    params: &NetworkParams,
    model: &PathLossModel,
    radius: f64,
    seed: u64,
    trial: u64,
) -> Result<NetworkRealization> {
    params.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let key = trial_key(seed, trial, attempt);
        let mut field = Field::new(params.lambda, radius, key);
        let sites = field.all_sites();
        if sites.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(combine(key, TAG_UE));
        let n_ue = poisson_count(&mut rng, params.rho * std::f64::consts::PI * radius * radius);
        let mut ues = vec![[0.0, 0.0]];
        ues.extend((0..n_ue).map(|_| uniform_in_disk(&mut rng, radius)));
        let link_states = ues
            .iter()
            .enumerate()
            .map(|(k, u)| {
                sites
                    .iter()
                    .map(|s| {
                        let r = (s.pos[0] - u[0]).hypot(s.pos[1] - u[1]);
                        link_state(model, key, k, &s.id, r.hypot(params.height_km))
                    })
                    .collect()
            })
            .collect();
        return Ok(NetworkRealization {
            bs_points: PointSet {
                points: sites.iter().map(|s| s.pos).collect(),
                window_radius_km: radius,
            },
            ue_points: PointSet {
                points: ues,
                window_radius_km: radius,
            },
            link_states,
            association: Vec::new(),
            serving_bs: None,
            active_set: Vec::new(),
            bs_ids: sites.iter().map(|s| s.id).collect(),
            resamples: attempt as u64,
        });
    }
    Err(Error::Simulation("no BS in the window".into()))
}

/// Samples BSs and UEs as Poisson processes on the disk, adds the typical UE
/// at the origin and draws one link state per UE–BS pair. A window without
/// BSs is redrawn and counted in `resamples`.
pub fn realize_network<R: Rng + ?Sized>(
    params: &NetworkParams,
    model: &PathLossModel,
    radius: f64,
    rng: &mut R,
) -> Result<NetworkRealization> {
    params.validate()?;
    let mut resamples = 0;
    let bs_points = loop {
        let set = sample_hppp(params.lambda, radius, rng)?;
        if !set.is_empty() {
            break set;
        }
        resamples += 1;
        if resamples >= MAX_ATTEMPTS as u64 {
            return Err(Error::Simulation("no BS in the window".into()));
        }
    };
    let mut ue_points = sample_hppp(params.rho, radius, rng)?;
    ue_points.points.insert(0, [0.0, 0.0]);
    let mut link_states = Vec::with_capacity(ue_points.len());
    for u in &ue_points.points {
        let mut row = Vec::with_capacity(bs_points.len());
        for b in &bs_points.points {
            let r = (b[0] - u[0]).hypot(b[1] - u[1]);
            row.push(model.sample_link_state(r.hypot(params.height_km), rng)?);
        }
        link_states.push(row);
    }
    Ok(NetworkRealization {
        bs_ids: Vec::new(),
        bs_points,
        ue_points,
        link_states,
        association: Vec::new(),
        serving_bs: None,
        active_set: Vec::new(),
        resamples,
    })
}

/// Assigns every UE to the BS with the largest path gain under its drawn
/// link state, scanning all BSs. Ties go to the smaller 2D distance, then
/// the lower BS index. The active set is every BS with at least one UE.
pub fn associate(
    mut real: NetworkRealization,
    model: &PathLossModel,
    params: &NetworkParams,
) -> Result<NetworkRealization> {
    if real.bs_points.is_empty() {
        return Err(Error::Simulation("cannot associate without BSs".into()));
    }
    let mut association = Vec::with_capacity(real.ue_points.len());
    for (k, u) in real.ue_points.points.iter().enumerate() {
        let mut best: Option<(f64, f64, usize)> = None;
        for (i, b) in real.bs_points.points.iter().enumerate() {
            let r2 = (b[0] - u[0]).powi(2) + (b[1] - u[1]).powi(2);
            let w = (r2 + params.height_km * params.height_km).sqrt();
            let gain = model.gain(w, real.link_states[k][i]);
            if better(gain, r2, i, best) {
                best = Some((gain, r2, i));
            }
        }
        association.push(best.expect("at least one BS").2);
    }
    let mut active = association.clone();
    active.sort_unstable();
    active.dedup();
    real.serving_bs = association.first().copied();
    real.association = association;
    real.active_set = active;
    Ok(real)
}

/// SINR of the typical UE with unit-mean Rayleigh fading on every link.
/// Only active BSs other than the server interfere.
pub fn typical_ue_sinr<R: Rng + ?Sized>(
    real: &NetworkRealization,
    params: &NetworkParams,
    model: &PathLossModel,
    rng: &mut R,
) -> Result<SinrSample> {
    let serving = real
        .serving_bs
        .ok_or_else(|| Error::Simulation("network has not been associated".into()))?;
    let p = params.tx_power_mw;
    let gain_to_origin = |i: usize| {
        let b = real.bs_points.points[i];
        let w = b[0].hypot(b[1]).hypot(params.height_km);
        model.gain(w, real.link_states[0][i])
    };
    let h: f64 = Exp1.sample(rng);
    let signal = p * gain_to_origin(serving) * h;
    let mut interference = 0.0;
    for &i in real.active_set.iter().filter(|&&i| i != serving) {
        let g: f64 = Exp1.sample(rng);
        interference += p * gain_to_origin(i) * g;
    }
    Ok(SinrSample {
        signal,
        interference,
        sinr: signal / (interference + params.noise_power_mw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::three_gpp_case;

    fn small() -> (NetworkParams, PathLossModel) {
        (
            NetworkParams::default().with_lambda(2_000.0).with_rho(300.0),
            three_gpp_case(),
        )
    }

    #[test]
    fn stream_helpers() {
        assert_ne!(mix64(1), mix64(2));
        assert_ne!(combine(1, 2), combine(2, 1));
        for h in [0, 1, u64::MAX, mix64(42)] {
            let u = unit(h);
            assert!((0.0..1.0).contains(&u));
        }
        let id = BsId { cell: (-1, 3), index: 2 };
        assert!(fading(7, &id) > 0.0);
        assert_eq!(fading(7, &id), fading(7, &id));
    }

    #[test]
    fn ring_enumerates_each_cell_once() {
        let mut r = Vec::new();
        for k in 0..5 {
            ring_into((3, -2), k, &mut r);
            assert_eq!(r.len(), if k == 0 { 1 } else { 8 * k as usize });
            let mut s = r.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), r.len());
            assert!(r.iter().all(|c| (c.0 - 3).abs().max((c.1 + 2).abs()) == k));
        }
    }

    #[test]
    fn tie_breaking() {
        assert!(better(2.0, 5.0, 9, Some((1.0, 0.1, 0))));
        assert!(better(1.0, 0.1, 9, Some((1.0, 0.2, 0))));
        assert!(better(1.0, 0.1, 1, Some((1.0, 0.1, 2))));
        assert!(!better(1.0, 0.1, 3, Some((1.0, 0.1, 2))));
    }

    #[test]
    fn cell_generation_is_stable() {
        let mut a = Field::new(1e4, 0.1, 99);
        let mut b = Field::new(1e4, 0.1, 99);
        // visit in different orders
        let x: Vec<_> = [(0, 0), (1, 2), (-3, -1)].iter().flat_map(|&c| a.sites(c).to_vec()).collect();
        let _ = b.sites((-3, -1)).to_vec();
        let y: Vec<_> = [(0, 0), (1, 2), (-3, -1)].iter().flat_map(|&c| b.sites(c).to_vec()).collect();
        assert_eq!(x.len(), y.len());
        assert!(x.iter().zip(&y).all(|(s, t)| s.id == t.id && s.pos == t.pos));
        // far outside the window
        assert!(a.sites((1000, 1000)).is_empty());
    }

    #[test]
    fn lazy_association_matches_full_scan() {
        let (params, model) = small();
        for trial in 0..20 {
            let real = trial_realization(&params, &model, 0.25, 5, trial).unwrap();
            let full = associate(real.clone(), &model, &params).unwrap();
            let record = simulate_trial(&params, &model, 0.25, 5, trial).unwrap();
            let serving = full.serving_bs.unwrap();
            assert_eq!(full.bs_ids[serving], record.serving, "trial {trial}");
            let mut active: Vec<BsId> = full.active_set.iter().map(|&i| full.bs_ids[i]).collect();
            active.sort();
            assert_eq!(active, record.active, "trial {trial}");
        }
    }

    #[test]
    fn lazy_association_matches_full_scan_when_sparse() {
        // Far links are mostly settled by the LoS-probability shortcut here.
        let (params, model) = small();
        let params = params.with_lambda(5.0);
        let radius = radius_floor(5.0);
        for trial in 0..3 {
            let real = trial_realization(&params, &model, radius, 11, trial).unwrap();
            let full = associate(real, &model, &params).unwrap();
            let record = simulate_trial(&params, &model, radius, 11, trial).unwrap();
            assert_eq!(full.bs_ids[full.serving_bs.unwrap()], record.serving);
            let mut active: Vec<BsId> = full.active_set.iter().map(|&i| full.bs_ids[i]).collect();
            active.sort();
            assert_eq!(active, record.active);
        }
    }

    #[test]
    fn single_bs_serves_everyone() {
        let (params, model) = small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut real = realize_network(&params, &model, 0.05, &mut rng).unwrap();
        real.bs_points.points = vec![[0.01, 0.02]];
        real.link_states.iter_mut().for_each(|row| row.truncate(1));
        let real = associate(real, &model, &params).unwrap();
        assert!(real.association.iter().all(|&b| b == 0));
        assert_eq!(real.active_set, vec![0]);
        let s = typical_ue_sinr(&real, &params, &model, &mut rng).unwrap();
        assert_eq!(s.interference, 0.0);
        assert!((s.sinr - s.signal / params.noise_power_mw).abs() <= 1e-12 * s.sinr);
    }

    #[test]
    fn farther_los_bs_beats_nearer_nlos() {
        let (params, model) = small();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut real = realize_network(&params, &model, 0.5, &mut rng).unwrap();
        // near NLoS at 20 m, far LoS at 40 m: 10^-10.38·w^-2.09 wins easily
        real.bs_points.points = vec![[0.02, 0.0], [0.0, 0.04]];
        real.ue_points.points.truncate(1);
        real.link_states = vec![vec![LinkState::Nlos, LinkState::Los]];
        let real = associate(real, &model, &params).unwrap();
        assert_eq!(real.serving_bs, Some(1));
        assert_eq!(real.active_set, vec![1]);
    }

    #[test]
    fn typical_ue_always_activates_its_server() {
        let (params, model) = small();
        let batch = simulate_trials(
            &params,
            &model,
            &MonteCarloConfig::default().with_trials(50).with_seed(3),
        )
        .unwrap();
        for r in &batch.records {
            assert!(r.active.contains(&r.serving));
            assert!(r.sample.sinr > 0.0);
        }
    }

    #[test]
    fn vanishing_ue_density_leaves_one_active_bs() {
        let (params, model) = small();
        let params = params.with_rho(1e-9);
        let batch = simulate_trials(&params, &model, &MonteCarloConfig::default().with_trials(20)).unwrap();
        for r in &batch.records {
            assert_eq!(r.active, vec![r.serving]);
            assert_eq!(r.sample.interference, 0.0);
        }
    }

    #[test]
    fn low_density_stops_early() {
        let (params, model) = small();
        let params = params.with_lambda(1.0);
        let r = simulate_trial(&params, &model, radius_floor(1.0), 1, 0).unwrap();
        let expected_ues = 300.0 * std::f64::consts::PI * 100.0;
        assert!((r.ues_processed as f64) < expected_ues / 2.0, "{}", r.ues_processed);
    }

    #[test]
    fn curve_is_monotone_and_singleton_consistent() {
        let (params, model) = small();
        let cfg = MonteCarloConfig::default().with_trials(200).with_seed(8);
        let gammas: Vec<f64> = (-10..=20).step_by(2).map(|d| crate::units::db_to_linear(d as f64)).collect();
        let curve = estimate_coverage_curve(&params, &model, &gammas, &cfg).unwrap();
        assert!(curve.values().windows(2).all(|w| w[1] <= w[0]));
        let single = estimate_coverage(&params, &model, gammas[5], &cfg).unwrap();
        assert_eq!(single.mean, curve.values()[5]);
        assert!(estimate_coverage_curve(&params, &model, &[], &cfg).is_err());
        assert!(estimate_coverage_curve(&params, &model, &[2.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let (params, model) = small();
        let cfg = MonteCarloConfig::default();
        assert!(simulate_trials(&params, &model, &cfg.with_trials(0)).is_err());
        let tiny = MonteCarloConfig {
            radius_km: Some(1e-4),
            ..cfg
        };
        assert!(simulate_trials(&params, &model, &tiny).is_err());
    }
}
