use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RegularityQuery;
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::sampling::{in_ball, sample_rng, stream, unit_sphere};

/// `(y₁*, y₂*)` with `y₁* ∈ S(ȳ, δ)`, `y₂* ∈ C(ȳ, δ)` and `‖y₁* + y₂*‖ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub y1star: Vector,
    pub y2star: Vector,
    pub delta: f64,
}

/// Tolerance for re-validating emitted pairs.
pub const DUAL_TOL: f64 = 1e-9;

/// `|⟨y*, ȳ⟩| ≤ δ`.
pub fn in_c(ystar: &[f64], ybar: &[f64], delta: f64, tol: f64) -> bool {
    linalg::dot(ystar, ybar).abs() <= delta + tol
}

/// `‖y*‖ ≤ 1 + δ` and `⟨y*, ȳ⟩ ≤ δ`.
pub fn in_s(ystar: &[f64], ybar: &[f64], delta: f64, tol: f64) -> bool {
    linalg::norm(ystar) <= 1.0 + delta + tol && linalg::dot(ystar, ybar) <= delta + tol
}

impl DualPair {
    pub fn sum(&self) -> Vector {
        linalg::add(&self.y1star, &self.y2star)
    }

    /// Membership in `T(ȳ, δ)`.
    pub fn is_valid(&self, ybar: &[f64], tol: f64) -> bool {
        self.y1star.len() == ybar.len()
            && self.y2star.len() == ybar.len()
            && in_s(&self.y1star, ybar, self.delta, tol)
            && in_c(&self.y2star, ybar, self.delta, tol)
            && (linalg::norm(&self.sum()) - 1.0).abs() <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSample {
    pub pairs: Vec<DualPair>,
    pub tried: usize,
    pub rejected: usize,
}

const SLAB_TRIES: usize = 32;

/// Point of `C(ȳ, δ) ∩ B(0, 1 + δ)`: rejection first, then clamping the
/// `ȳ`-component into the slab (which keeps the point in the ball).
fn slab_point(rng: &mut impl rand::Rng, ybar: &[f64], delta: f64) -> Vector {
    let origin = vec![0.0; ybar.len()];
    let mut p = in_ball(rng, &origin, 1.0 + delta);
    for _ in 0..SLAB_TRIES {
        if in_c(&p, ybar, delta, 0.0) {
            return p;
        }
        p = in_ball(rng, &origin, 1.0 + delta);
    }
    let nb2 = linalg::dot(ybar, ybar);
    let t = linalg::dot(&p, ybar);
    let target = t.clamp(-delta, delta);
    linalg::axpy(&p, (target - t) / nb2, ybar)
}

/// Samples `T(ȳ, δ)` through the sum: `w` uniform on the unit sphere,
/// `y₂* ∈ C ∩ B(0, 1 + δ)`, `y₁* = w − y₂*`, kept when `y₁* ∈ S`.
pub fn sample_dual_pairs(ybar: &[f64], delta: f64, budget: usize, seed: u64) -> Result<Vec<DualPair>> {
    Ok(sample_dual_pairs_counted(ybar, delta, budget, seed)?.pairs)
}

/// [`sample_dual_pairs`] with rejection counts.
pub fn sample_dual_pairs_counted(ybar: &[f64], delta: f64, budget: usize, seed: u64) -> Result<DualSample> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be ≥ 0, got {delta}")));
    }
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be ≥ 1".into()));
    }
    let n = ybar.len();
    let pairs: Vec<Option<DualPair>> = (0..budget as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, stream::DUAL, i);
            let w = unit_sphere(&mut rng, n);
            let y2 = slab_point(&mut rng, ybar, delta);
            let pair = DualPair {
                y1star: linalg::sub(&w, &y2),
                y2star: y2,
                delta,
            };
            pair.is_valid(ybar, DUAL_TOL).then_some(pair)
        })
        .collect();
    let kept: Vec<DualPair> = pairs.into_iter().flatten().collect();
    Ok(DualSample {
        rejected: budget - kept.len(),
        tried: budget,
        pairs: kept,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoderivativeWitness {
    pub x: Vector,
    pub k1: Vector,
    pub k2: Vector,
    pub pair: DualPair,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoderivativeResult {
    /// Smallest sampled `‖J(x)ᵀ(y₁* + y₂*)‖`; an upper bound of the infimum.
    pub inf_value: f64,
    /// `(δ, smallest value at δ)`.
    pub per_delta: Vec<(f64, f64)>,
    pub tried: usize,
    pub valid: usize,
    pub witness: Option<CoderivativeWitness>,
}

impl CoderivativeResult {
    pub fn holds_for(&self, m: f64) -> bool {
        self.inf_value > m
    }
}

/// Fraction of `ε` used for the neighbourhoods of `x₀` and `k₀`.
const LOCAL_FRACTION: f64 = 0.01;

/// Samples `‖J(x)ᵀ(y₁* + y₂*)‖` over `x` near `x₀`, `k₁, k₂ ∈ K` near
/// `k₀ = f(x₀) − y₀` and `(y₁*, y₂*) ∈ T(ȳ, δ) ∩ N(K, k₁) × N(K, k₂)`.
///
/// Normal-cone membership is generated by projecting onto `N(K, kᵢ)`, then
/// the pair is rescaled to unit sum and re-validated.
pub fn coderivative_criterion(q: &RegularityQuery, delta_ladder: &[f64]) -> Result<CoderivativeResult> {
    q.validate()?;
    let k = q.map.k.as_polyhedron().ok_or(Error::NotPolyhedral)?;
    if delta_ladder.is_empty() {
        return Err(Error::InvalidParameter("delta ladder is empty".into()));
    }
    let ybar = q.dc.ybar();
    let rho = LOCAL_FRACTION * q.epsilon;
    let k0 = k.project(&q.map.residual(&q.x0, &q.y0)?)?;
    let budget = q.region.sample_budget as u64;
    let tol_active = q.tol.active;

    let mut per_delta = Vec::new();
    let mut best: Option<CoderivativeWitness> = None;
    let mut valid = 0;
    for (di, &delta) in delta_ladder.iter().enumerate() {
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be ≥ 0, got {delta}")));
        }
        let found: Vec<Option<CoderivativeWitness>> = (0..budget)
            .into_par_iter()
            .map(|i| -> Result<_> {
                let mut rng = sample_rng(q.region.seed, stream::CODERIV, (di as u64) << 40 | i);
                let (x, k1, k2) = if i == 0 {
                    (q.x0.clone(), k0.clone(), k0.clone())
                } else {
                    let x = in_ball(&mut rng, &q.x0, rho);
                    let k1 = k.project(&in_ball(&mut rng, &k0, rho))?;
                    let k2 = k.project(&in_ball(&mut rng, &k0, rho))?;
                    (x, k1, k2)
                };
                let w = unit_sphere(&mut rng, ybar.len());
                let y2 = if i % 2 == 0 {
                    vec![0.0; ybar.len()]
                } else {
                    k.project_onto_normal_cone(&k2, &slab_point(&mut rng, ybar, delta), tol_active)?
                };
                let y1 = k.project_onto_normal_cone(&k1, &linalg::sub(&w, &y2), tol_active)?;
                let s = linalg::norm(&linalg::add(&y1, &y2));
                if s < 1e-12 {
                    return Ok(None);
                }
                let pair = DualPair {
                    y1star: linalg::scale(&y1, 1.0 / s),
                    y2star: linalg::scale(&y2, 1.0 / s),
                    delta,
                };
                if !pair.is_valid(ybar, DUAL_TOL) {
                    return Ok(None);
                }
                let jac = q.map.f.jacobian(&x)?;
                let value = linalg::norm(&jac.tr_matvec(&pair.sum()));
                Ok(Some(CoderivativeWitness { x, k1, k2, pair, value }))
            })
            .collect::<Result<_>>()?;
        let mut level_min = f64::INFINITY;
        for w in found.into_iter().flatten() {
            valid += 1;
            level_min = level_min.min(w.value);
            if best.as_ref().map_or(true, |b| w.value < b.value) {
                best = Some(w);
            }
        }
        per_delta.push((delta, level_min));
    }
    Ok(CoderivativeResult {
        inf_value: best.as_ref().map_or(f64::INFINITY, |w| w.value),
        per_delta,
        tried: budget as usize * delta_ladder.len(),
        valid,
        witness: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let ybar = [0.0, 1.0];
        let ok = |y1: [f64; 2], y2: [f64; 2]| {
            DualPair {
                y1star: y1.to_vec(),
                y2star: y2.to_vec(),
                delta: 0.1,
            }
            .is_valid(&ybar, DUAL_TOL)
        };
        assert!(ok([0.0, -1.0], [0.0, 0.0]));
        assert!(ok([1.0, 0.0], [0.0, 0.0]));
        assert!(!ok([0.0, 1.0], [0.0, 0.0]));
    }

    #[test]
    fn sampled_pairs_are_valid() {
        for (ybar, delta) in [(vec![0.0, 1.0], 0.1), (vec![1.0, 1.0, -2.0], 0.5), (vec![3.0], 0.0)] {
            let s = sample_dual_pairs_counted(&ybar, delta, 500, 9).unwrap();
            assert_eq!(s.pairs.len() + s.rejected, 500);
            assert!(!s.pairs.is_empty());
            assert!(s.pairs.iter().all(|p| p.is_valid(&ybar, DUAL_TOL)));
        }
    }
}
