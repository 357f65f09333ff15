use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RegularityQuery;
use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::linalg::Vector;
use crate::multimap::{directional_membership, preimage_distance, MultiMap, SearchRegion};
use crate::sampling::{in_ball, sample_rng, stream};
use crate::slopes::{global_slope, ScalarField};

/// One sampled pair `(x, y)` from the product ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub x: Vector,
    pub y: Vector,
    pub image_dist: f64,
    /// Only computed for admissible pairs.
    pub preimage_dist: Option<ExtReal>,
    pub ratio: Option<ExtReal>,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub sup_ratio: ExtReal,
    pub worst_witness: Option<(Vector, Vector)>,
    pub tried: usize,
    pub admissible: usize,
    /// Some preimage distance was a local-solver upper bound.
    pub heuristic: bool,
    #[serde(skip)]
    pub samples: Vec<PairSample>,
}

/// Pair `i` of the product ball `B(x₀, r) × B(y₀, r)` (max norm on `X × Y`).
fn draw_pair(q: &RegularityQuery, stream_id: u64, i: u64, radius: f64) -> (Vector, Vector) {
    let mut rng = sample_rng(q.region.seed, stream_id, i);
    let x = in_ball(&mut rng, &q.x0, radius);
    let y = in_ball(&mut rng, &q.y0, radius);
    (x, y)
}

/// `tol_feas < d(y, F(x)) < bound` and `y ∈ F(x) + cone B(ȳ, δ)`.
fn screen(q: &RegularityQuery, x: &[f64], y: &[f64], bound: f64) -> Result<(f64, bool)> {
    let phi = q.map.image_distance(x, y)?;
    if !(phi > q.tol.feas && phi < bound) {
        return Ok((phi, false));
    }
    let m = directional_membership(&q.map, x, y, &q.dc, q.tol.member)?;
    Ok((phi, m.member))
}

/// Supremum of `d(x, F⁻¹(y)) / d(y, F(x))` over admissible sampled pairs.
///
/// A lower bound of the directional modulus when preimage distances are
/// exact; `+∞` as soon as an admissible pair has an empty preimage.
pub fn empirical_directional_modulus(q: &RegularityQuery) -> Result<ModulusEstimate> {
    q.validate()?;
    let budget = q.region.sample_budget;
    let samples: Vec<PairSample> = (0..budget as u64)
        .into_par_iter()
        .map(|i| -> Result<PairSample> {
            let (x, y) = draw_pair(q, stream::PAIRS, i, q.epsilon);
            let (phi, admissible) = screen(q, &x, &y, q.epsilon)?;
            let (preimage_dist, ratio) = if admissible {
                let p = preimage_distance(&q.map, &y, &x, &q.region)?;
                let ratio = match p.value {
                    ExtReal::Finite(d) => ExtReal::Finite(d / phi),
                    ExtReal::Infinity => ExtReal::Infinity,
                };
                (Some((p.value, p.heuristic)), Some(ratio))
            } else {
                (None, None)
            };
            Ok(PairSample {
                x,
                y,
                image_dist: phi,
                preimage_dist: preimage_dist.map(|(v, _)| v),
                ratio,
                admissible,
            })
        })
        .collect::<Result<_>>()?;
    let heuristic = !q.map.f.is_affine() || !q.map.k.is_polyhedral();
    summarize(samples, heuristic)
}

fn summarize(samples: Vec<PairSample>, heuristic: bool) -> Result<ModulusEstimate> {
    let mut sup = ExtReal::ZERO;
    let mut worst = None;
    let mut admissible = 0;
    for s in &samples {
        if let Some(r) = s.ratio {
            admissible += 1;
            if worst.is_none() || r > sup {
                sup = r;
                worst = Some((s.x.clone(), s.y.clone()));
            }
        }
    }
    if admissible == 0 {
        return Err(Error::NoAdmissibleSamples { tried: samples.len() });
    }
    Ok(ModulusEstimate {
        sup_ratio: sup,
        worst_witness: worst,
        tried: samples.len(),
        admissible,
        heuristic,
        samples,
    })
}

/// Relative shortfall allowed below `1/τ` in [`slope_criterion`].
pub const SLOPE_SLACK: f64 = 0.05;
/// Admissible pairs examined by the slope-based checks.
const SLOPE_PAIRS: usize = 24;
const PAIRS_PER_LEVEL: usize = 8;
const SLOPE_LEVELS: i32 = 5;
const SLOPE_TAIL: usize = 3;
/// Half-width of the search box, in units of `d(y, F(x))`, for the ladder.
const LADDER_BOX: f64 = 8.0;

fn slope_region(x: &[f64], half: f64, seed: u64) -> Result<SearchRegion> {
    SearchRegion::around(x, half.max(1e-12), 5, 64, seed)
}

/// Global slope of `u ↦ φ_V(u, y)` at `x`, searched in `x ± half`.
fn envelope_slope(q: &RegularityQuery, x: &[f64], y: &[f64], half: f64) -> Result<f64> {
    let field = ScalarField::envelope_section(&q.map, &q.dc, y, q.tol.member)?;
    let region = slope_region(x, half, q.region.seed)?;
    Ok(global_slope(&field, x, &region)?.value.to_f64())
}

/// First `count` admissible pairs of the stream, in index order.
fn admissible_pairs(
    q: &RegularityQuery,
    stream_id: u64,
    base: u64,
    radius: f64,
    count: usize,
) -> Result<(Vec<(Vector, Vector, f64)>, usize)> {
    let mut out = Vec::new();
    let mut tried = 0;
    let chunk = 64;
    while out.len() < count && tried < q.region.sample_budget {
        let hi = (tried + chunk).min(q.region.sample_budget);
        let batch: Vec<Option<(Vector, Vector, f64)>> = (tried..hi)
            .into_par_iter()
            .map(|i| -> Result<_> {
                let (x, y) = draw_pair(q, stream_id, base | i as u64, radius);
                let (phi, ok) = screen(q, &x, &y, radius)?;
                Ok(ok.then_some((x, y, phi)))
            })
            .collect::<Result<_>>()?;
        out.extend(batch.into_iter().flatten());
        tried = hi;
    }
    out.truncate(count);
    Ok((out, tried))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeViolator {
    pub x: Vector,
    pub y: Vector,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeCriterion {
    pub holds: bool,
    pub min_slope: f64,
    pub tau: f64,
    pub slack: f64,
    pub evaluated: usize,
    pub violators: Vec<SlopeViolator>,
}

/// Checks `|Γφ_V(·, y)|(x) ≥ 1/τ` on sampled admissible pairs.
///
/// A ratio of at least `1/τ` needs `‖x − u‖ ≤ τ·φ_V(x, y)`, so each slope is
/// searched in a box of half-width `1.05·τ·φ_V(x, y)`.
pub fn slope_criterion(q: &RegularityQuery, tau: f64) -> Result<SlopeCriterion> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    q.validate()?;
    let (pairs, tried) = admissible_pairs(q, stream::SLOPE_PAIRS, 0, q.epsilon, SLOPE_PAIRS)?;
    if pairs.is_empty() {
        return Err(Error::NoAdmissibleSamples { tried });
    }
    let slopes: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y, phi)| envelope_slope(q, x, y, 1.05 * tau * phi))
        .collect::<Result<_>>()?;
    let threshold = (1.0 - SLOPE_SLACK) / tau;
    let min_slope = slopes.iter().fold(f64::INFINITY, |m, s| m.min(*s));
    let violators = pairs
        .iter()
        .zip(&slopes)
        .filter(|(_, s)| **s < threshold)
        .map(|((x, y, _), s)| SlopeViolator {
            x: x.clone(),
            y: y.clone(),
            slope: *s,
        })
        .collect();
    Ok(SlopeCriterion {
        holds: min_slope >= threshold,
        min_slope,
        tau,
        slack: SLOPE_SLACK,
        evaluated: pairs.len(),
        violators,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeModulus {
    /// `1 / min_slope`.
    pub value: ExtReal,
    pub min_slope: f64,
    /// `(radius, smallest slope at that radius, pairs used)`.
    pub ladder: Vec<(f64, f64, usize)>,
}

/// `1 / liminf` of envelope slopes over shrinking neighbourhoods
/// `ε·2⁻ᵏ`, aggregated over the last three levels.
pub fn modulus_from_slopes(q: &RegularityQuery) -> Result<SlopeModulus> {
    q.validate()?;
    let mut ladder = Vec::new();
    let mut tried_total = 0;
    for k in 0..SLOPE_LEVELS {
        let r = q.epsilon * 2f64.powi(-k);
        let (pairs, tried) = admissible_pairs(q, stream::SLOPE_PAIRS, (k as u64 + 1) << 40, r, PAIRS_PER_LEVEL)?;
        tried_total += tried;
        let slopes: Vec<f64> = pairs
            .par_iter()
            .map(|(x, y, phi)| envelope_slope(q, x, y, LADDER_BOX * phi))
            .collect::<Result<_>>()?;
        let min = slopes.iter().fold(f64::INFINITY, |m, s| m.min(*s));
        ladder.push((r, min, pairs.len()));
    }
    let tail: Vec<&(f64, f64, usize)> = ladder
        .iter()
        .rev()
        .filter(|(_, _, n)| *n > 0)
        .take(SLOPE_TAIL)
        .collect();
    if tail.is_empty() {
        return Err(Error::NoAdmissibleSamples { tried: tried_total });
    }
    let min_slope = tail.iter().fold(f64::INFINITY, |m, (_, s, _)| m.min(*s));
    let value = if min_slope > 0.0 {
        ExtReal::Finite(1.0 / min_slope)
    } else {
        ExtReal::Infinity
    };
    Ok(SlopeModulus {
        value,
        min_slope,
        ladder,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub sup_ratio: ExtReal,
    pub admissible: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Largest modulus over the grid; a uniform modulus must dominate it.
    pub uniform_modulus: ExtReal,
    pub per_p: Vec<SweepPoint>,
}

/// Runs [`empirical_directional_modulus`] for every `p`, reusing the
/// template's base point, direction, radius and region.
pub fn parametric_sweep(
    family: &(dyn Fn(f64) -> Result<MultiMap> + Sync),
    p_grid: &[f64],
    template: &RegularityQuery,
) -> Result<SweepResult> {
    let mut per_p = Vec::with_capacity(p_grid.len());
    let mut uniform = ExtReal::ZERO;
    for &p in p_grid {
        let at = |e: Error| Error::AtParameter {
            param: p,
            source: Box::new(e),
        };
        let map = family(p).map_err(at)?;
        let q = RegularityQuery {
            map,
            ..template.clone()
        };
        let est = empirical_directional_modulus(&q).map_err(at)?;
        uniform = uniform.max(est.sup_ratio);
        per_p.push(SweepPoint {
            p,
            sup_ratio: est.sup_ratio,
            admissible: est.admissible,
        });
    }
    Ok(SweepResult {
        uniform_modulus: uniform,
        per_p,
    })
}

/// Distance-ratio of a single pair, exposed for audits of reported witnesses.
pub fn pair_ratio(q: &RegularityQuery, x: &[f64], y: &[f64]) -> Result<ExtReal> {
    let phi = q.map.image_distance(x, y)?;
    let p = preimage_distance(&q.map, y, x, &q.region)?;
    Ok(match p.value {
        ExtReal::Finite(d) if phi > 0.0 => ExtReal::Finite(d / phi),
        ExtReal::Finite(d) if d == 0.0 => ExtReal::ZERO,
        _ => ExtReal::Infinity,
    })
}
