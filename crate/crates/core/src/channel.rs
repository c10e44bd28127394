//! Multi-piece probabilistic LoS/NLoS path-loss model.
//!
//! Distances are 3D BS-to-UE distances in kilometres. Each piece carries a
//! LoS and an NLoS power law `A·w^-α` plus a LoS probability; the piece that
//! owns a distance is the first one whose upper break is `>= w`, so a break
//! belongs to the piece below it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// LoS branch constants of the 3GPP small-cell model.
pub const THREE_GPP_A_LOS: f64 = 4.168_693_834_703_354e-11; // 10^-10.38
pub const THREE_GPP_ALPHA_LOS: f64 = 2.09;
/// NLoS branch constants of the 3GPP small-cell model.
pub const THREE_GPP_A_NLOS: f64 = 2.884_031_503_126_606e-15; // 10^-14.54
pub const THREE_GPP_ALPHA_NLOS: f64 = 3.75;
/// Scale of the near-range LoS probability piece, km.
pub const THREE_GPP_R1_KM: f64 = 0.156;
/// Scale of the far-range LoS probability piece, km.
pub const THREE_GPP_R2_KM: f64 = 0.030;

/// Name under which [`three_gpp_case`] is selectable in configuration files.
pub const THREE_GPP_NAME: &str = "3gpp-36828";

/// Propagation state of one BS-to-UE link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
}

/// Distance-to-probability law for the LoS branch of one piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LosProbability {
    /// The same probability at every distance.
    Constant { value: f64 },
    /// `1 - coeff·exp(-range_km / w)`
    InverseExpComplement { coeff: f64, range_km: f64 },
    /// `coeff·exp(-w / range_km)`
    ExpDecay { coeff: f64, range_km: f64 },
    /// `1 - w / cutoff_km`, and zero beyond the cut-off.
    Linear { cutoff_km: f64 },
}

impl LosProbability {
    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            LosProbability::Constant { value } => value,
            LosProbability::InverseExpComplement { coeff, range_km } => {
                1.0 - coeff * (-range_km / w).exp()
            }
            LosProbability::ExpDecay { coeff, range_km } => coeff * (-w / range_km).exp(),
            LosProbability::Linear { cutoff_km } => (1.0 - w / cutoff_km).max(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LosProbability::Constant { value } => (0.0..=1.0).contains(&value),
            LosProbability::InverseExpComplement { coeff, range_km }
            | LosProbability::ExpDecay { coeff, range_km } => coeff >= 0.0 && range_km > 0.0,
            LosProbability::Linear { cutoff_km } => cutoff_km > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Model(format!("invalid LoS probability law {self:?}")))
        }
    }
}

/// One piece of the path-loss model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSegment {
    /// Upper end of the piece in km; `None` for the unbounded last piece.
    #[serde(default, rename = "break_km")]
    pub upper_break_km: Option<f64>,
    pub a_los: f64,
    pub a_nlos: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub los_prob: LosProbability,
}

impl PathLossSegment {
    pub fn gain(&self, w: f64, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.a_los * w.powf(-self.alpha_los),
            LinkState::Nlos => self.a_nlos * w.powf(-self.alpha_nlos),
        }
    }
}

/// Ordered pieces covering `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub name: String,
    segments: Vec<PathLossSegment>,
}

/// Number of log-spaced points used by [`PathLossModel::los_monotonicity_violations`].
pub const MONOTONICITY_GRID_POINTS: usize = 10_000;

impl PathLossModel {
    pub fn new(name: impl Into<String>, segments: Vec<PathLossSegment>) -> Result<Self> {
        let model = Self {
            name: name.into(),
            segments,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let n = self.segments.len();
        if n == 0 {
            return Err(Error::Model("at least one segment is required".into()));
        }
        let mut previous = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            let params = [seg.a_los, seg.a_nlos, seg.alpha_los, seg.alpha_nlos];
            if params.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Model(format!(
                    "segment {i}: gains and exponents must be positive and finite"
                )));
            }
            seg.los_prob.validate()?;
            match (seg.upper_break_km, i + 1 == n) {
                (None, true) => {}
                (Some(b), false) => {
                    if !(b > previous && b.is_finite()) {
                        return Err(Error::Model(format!(
                            "segment {i}: break {b} km must exceed {previous} km"
                        )));
                    }
                    previous = b;
                }
                (Some(_), true) => {
                    return Err(Error::Model("the last segment must be unbounded".into()))
                }
                (None, false) => {
                    return Err(Error::Model(format!(
                        "segment {i}: only the last segment may omit its break"
                    )))
                }
            }
        }
        // LoS probability must stay a probability on every piece.
        for w in crate::units::log_space(1e-6, 1e3, 2_000) {
            let p = self.los_prob_unchecked(w);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Model(format!(
                    "LoS probability {p} at {w} km is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[PathLossSegment] {
        &self.segments
    }

    pub fn n_pieces(&self) -> usize {
        self.segments.len()
    }

    /// Finite breakpoints `d_1 < d_2 < ...` in km.
    pub fn breaks(&self) -> Vec<f64> {
        self.segments.iter().filter_map(|s| s.upper_break_km).collect()
    }

    pub fn outermost(&self) -> &PathLossSegment {
        self.segments.last().expect("validated non-empty")
    }

    pub fn first(&self) -> &PathLossSegment {
        &self.segments[0]
    }

    pub fn segment_for(&self, w: f64) -> &PathLossSegment {
        self.segments
            .iter()
            .find(|s| s.upper_break_km.is_none_or(|b| w <= b))
            .expect("last segment is unbounded")
    }

    /// Path gain without the domain check; callers guarantee `w > 0`.
    #[inline]
    pub fn gain(&self, w: f64, state: LinkState) -> f64 {
        self.segment_for(w).gain(w, state)
    }

    #[inline]
    pub fn los_prob_unchecked(&self, w: f64) -> f64 {
        self.segment_for(w).los_prob.eval(w)
    }

    pub fn eval_pathloss(&self, w: f64, state: LinkState) -> Result<f64> {
        check_distance(w)?;
        Ok(self.gain(w, state))
    }

    pub fn los_probability(&self, w: f64) -> Result<f64> {
        check_distance(w)?;
        Ok(self.los_prob_unchecked(w))
    }

    /// Link state whose LoS branch is taken when `uniform < Pr^L(w)`.
    #[inline]
    pub fn link_state_from_uniform(&self, w: f64, uniform: f64) -> LinkState {
        if uniform < self.los_prob_unchecked(w) {
            LinkState::Los
        } else {
            LinkState::Nlos
        }
    }

    pub fn sample_link_state<R: Rng + ?Sized>(&self, w: f64, rng: &mut R) -> Result<LinkState> {
        check_distance(w)?;
        Ok(self.link_state_from_uniform(w, rng.random::<f64>()))
    }

    /// Expected path gain over the LoS/NLoS mixture at distance `w`.
    pub fn mean_path_gain(&self, w: f64) -> Result<f64> {
        check_distance(w)?;
        Ok(self.mean_gain_unchecked(w))
    }

    #[inline]
    pub fn mean_gain_unchecked(&self, w: f64) -> f64 {
        let seg = self.segment_for(w);
        let p = seg.los_prob.eval(w);
        p * seg.gain(w, LinkState::Los) + (1.0 - p) * seg.gain(w, LinkState::Nlos)
    }

    /// Largest distance at which either branch of any piece still reaches
    /// `gain`. Every link longer than this has a strictly smaller gain.
    pub fn reach(&self, gain: f64) -> f64 {
        let mut lower = 0.0;
        let mut reach: f64 = 0.0;
        for seg in &self.segments {
            let upper = seg.upper_break_km.unwrap_or(f64::INFINITY);
            for (a, alpha) in [(seg.a_los, seg.alpha_los), (seg.a_nlos, seg.alpha_nlos)] {
                let w = (a / gain).powf(1.0 / alpha);
                if w > lower {
                    reach = reach.max(w.min(upper));
                }
            }
            lower = upper;
        }
        reach
    }

    /// Largest distance at which the given branch of any piece still
    /// reaches `gain`.
    pub fn reach_in_state(&self, gain: f64, state: LinkState) -> f64 {
        let mut lower = 0.0;
        let mut reach: f64 = 0.0;
        for seg in &self.segments {
            let upper = seg.upper_break_km.unwrap_or(f64::INFINITY);
            let (a, alpha) = match state {
                LinkState::Los => (seg.a_los, seg.alpha_los),
                LinkState::Nlos => (seg.a_nlos, seg.alpha_nlos),
            };
            let w = (a / gain).powf(1.0 / alpha);
            if w > lower {
                reach = reach.max(w.min(upper));
            }
            lower = upper;
        }
        reach
    }

    /// Supremum of the LoS probability over all distances `>= w`, using the
    /// monotone shape of each probability law.
    pub fn max_los_prob_beyond(&self, w: f64) -> f64 {
        let mut lower = 0.0;
        let mut best: f64 = 0.0;
        for seg in &self.segments {
            let upper = seg.upper_break_km.unwrap_or(f64::INFINITY);
            if upper >= w {
                let from = w.max(lower);
                // every form is non-increasing in w
                let p = seg.los_prob.eval(from.max(f64::MIN_POSITIVE));
                best = best.max(p);
            }
            lower = upper;
        }
        best.min(1.0)
    }

    /// Supremum of both branches over all distances `>= w`.
    pub fn max_gain_beyond(&self, w: f64) -> f64 {
        let mut lower = 0.0;
        let mut best: f64 = 0.0;
        for seg in &self.segments {
            let upper = seg.upper_break_km.unwrap_or(f64::INFINITY);
            if upper >= w {
                let at = w.max(lower);
                if at > 0.0 {
                    best = best
                        .max(seg.gain(at, LinkState::Los))
                        .max(seg.gain(at, LinkState::Nlos));
                }
            }
            lower = upper;
        }
        best
    }

    /// Points of a log-spaced grid on `[from, to]` where the stitched LoS
    /// probability increases, as `(w, jump)` pairs.
    pub fn los_monotonicity_violations(&self, from: f64, to: f64) -> Vec<(f64, f64)> {
        let grid = crate::units::log_space(from, to, MONOTONICITY_GRID_POINTS);
        grid.windows(2)
            .filter_map(|w| {
                let jump = self.los_prob_unchecked(w[1]) - self.los_prob_unchecked(w[0]);
                (jump > 1e-12).then_some((w[1], jump))
            })
            .collect()
    }
}

fn check_distance(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        domain(format!("distance must be positive and finite, got {w} km"))
    }
}

/// The two-piece 3GPP small-cell path-loss model.
///
/// Both pieces share `A^L w^-2.09` and `A^NL w^-3.75` with `A^L = 10^-10.38`
/// and `A^NL = 10^-14.54` (w in km). The LoS probability is
/// `1 - 5 exp(-R1/w)` up to `d1 = R1 / ln 10` and `5 exp(-w/R2)` beyond,
/// with `R1 = 156 m` and `R2 = 30 m`.
///
/// The two probability pieces do not meet at `d1`: the first ends at 0.5 and
/// the second starts at about 0.5226. They are kept as defined.
pub fn three_gpp_case() -> PathLossModel {
    let d1 = THREE_GPP_R1_KM / std::f64::consts::LN_10;
    let piece = |upper_break_km, los_prob| PathLossSegment {
        upper_break_km,
        a_los: THREE_GPP_A_LOS,
        a_nlos: THREE_GPP_A_NLOS,
        alpha_los: THREE_GPP_ALPHA_LOS,
        alpha_nlos: THREE_GPP_ALPHA_NLOS,
        los_prob,
    };
    PathLossModel::new(
        THREE_GPP_NAME,
        vec![
            piece(
                Some(d1),
                LosProbability::InverseExpComplement {
                    coeff: 5.0,
                    range_km: THREE_GPP_R1_KM,
                },
            ),
            piece(
                None,
                LosProbability::ExpDecay {
                    coeff: 5.0,
                    range_km: THREE_GPP_R2_KM,
                },
            ),
        ],
    )
    .expect("preset is valid")
}

/// Looks up a preset model by its configuration name.
pub fn preset(name: &str) -> Option<PathLossModel> {
    (name == THREE_GPP_NAME).then(three_gpp_case)
}
