//! The conic hull `cone B(ȳ, δ) = ⋃_{λ≥0} λ B(ȳ, δ)`.
//!
//! Two independent routes are provided: [`DirectionalCone::distance`]
//! minimizes `λ ↦ [‖p − λȳ‖ − λδ]₊` by golden-section search, while
//! [`DirectionalCone::project`] uses the closed form for a circular cone of
//! half-angle `asin(δ/‖ȳ‖)`. The tests check one against the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_dim, Vector};

const GOLDEN_ITERS: usize = 300;

/// The pair `(ȳ, δ)` standing for `cone B(ȳ, δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCone")]
pub struct DirectionalCone {
    ybar: Vector,
    delta: f64,
}

#[derive(Deserialize)]
struct RawCone {
    ybar: Vector,
    delta: f64,
}

impl TryFrom<RawCone> for DirectionalCone {
    type Error = Error;
    fn try_from(raw: RawCone) -> Result<Self> {
        DirectionalCone::new(raw.ybar, raw.delta)
    }
}

impl DirectionalCone {
    pub fn new(ybar: Vector, delta: f64) -> Result<Self> {
        if !linalg::all_finite(&ybar) {
            return Err(Error::InvalidInput("cone direction must be finite".into()));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cone radius must be finite and nonnegative, got {delta}"
            )));
        }
        Ok(DirectionalCone { ybar, delta })
    }

    /// A cone with `‖ȳ‖ < δ`, which covers the whole space. Using it as the
    /// direction filter turns directional regularity into plain regularity.
    pub fn whole_space(dim: usize) -> Self {
        DirectionalCone {
            ybar: vec![0.0; dim],
            delta: 1.0,
        }
    }

    pub fn ybar(&self) -> &[f64] {
        &self.ybar
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.ybar.len()
    }

    pub fn is_whole_space(&self) -> bool {
        linalg::norm(&self.ybar) < self.delta
    }

    /// Upper end of the golden-section bracket. Beyond it the objective grows
    /// with slope at least `‖ȳ‖ − δ`, so the minimizer lies inside.
    fn lambda_max(&self, p: &[f64]) -> f64 {
        let gap = (linalg::norm(&self.ybar) - self.delta).max(1e-12);
        10.0 * (linalg::norm(p) + 1.0) / gap
    }

    /// `[‖p − λȳ‖ − λδ]₊`, the distance from `p` to the ball `λ B(ȳ, δ)`.
    pub fn ball_gap(&self, p: &[f64], lambda: f64) -> f64 {
        let shifted = linalg::axpy(p, -lambda, &self.ybar);
        (linalg::norm(&shifted) - lambda * self.delta).max(0.0)
    }

    /// Distance from `p` to the cone, computed by golden-section search over
    /// `λ ∈ [0, λ_max]`.
    pub fn distance(&self, p: &[f64]) -> Result<f64> {
        check_dim(self.dim(), p.len())?;
        if self.is_whole_space() {
            return Ok(0.0);
        }
        // Minimize the unclamped convex function; clamping commutes with min.
        let h = |lambda: f64| {
            linalg::norm(&linalg::axpy(p, -lambda, &self.ybar)) - lambda * self.delta
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0, self.lambda_max(p));
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut hc, mut hd) = (h(c), h(d));
        for _ in 0..GOLDEN_ITERS {
            if b - a <= 1e-15 * (1.0 + b) {
                break;
            }
            if hc <= hd {
                b = d;
                d = c;
                hd = hc;
                c = b - inv_phi * (b - a);
                hc = h(c);
            } else {
                a = c;
                c = d;
                hc = hd;
                d = a + inv_phi * (b - a);
                hd = h(d);
            }
        }
        let best = hc.min(hd).min(h(0.0)).min(h(0.5 * (a + b)));
        Ok(best.max(0.0))
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(p)? <= tol)
    }

    /// Euclidean projection onto the closed cone.
    pub fn project(&self, p: &[f64]) -> Result<Vector> {
        check_dim(self.dim(), p.len())?;
        if self.is_whole_space() {
            return Ok(p.to_vec());
        }
        let s = linalg::norm(&self.ybar);
        if s == 0.0 {
            // δ = 0 and ȳ = 0: the cone is {0}.
            return Ok(vec![0.0; p.len()]);
        }
        let axis = linalg::scale(&self.ybar, 1.0 / s);
        let sin = (self.delta / s).min(1.0);
        let cos = (1.0 - sin * sin).max(0.0).sqrt();
        let t = linalg::dot(p, &axis);
        let radial = linalg::axpy(p, -t, &axis);
        let r = linalg::norm(&radial);
        if r * cos <= t * sin {
            return Ok(p.to_vec());
        }
        // Project onto the boundary ray lying in span{axis, radial}.
        let c = t * cos + r * sin;
        if c <= 0.0 {
            return Ok(vec![0.0; p.len()]);
        }
        let mut gen = linalg::scale(&axis, cos);
        if r > 0.0 {
            gen = linalg::axpy(&gen, sin / r, &radial);
        }
        Ok(linalg::scale(&gen, c))
    }
}

/// Distance from `p` to `cone B(ȳ, δ)`; zero when `‖ȳ‖ < δ`.
pub fn cone_distance(dc: &DirectionalCone, p: &[f64]) -> Result<f64> {
    dc.distance(p)
}

pub fn cone_contains(dc: &DirectionalCone, p: &[f64], tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be ≥ 0, got {tol}")));
    }
    dc.contains(p, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(delta: f64) -> DirectionalCone {
        DirectionalCone::new(vec![0.0, 1.0], delta).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert!(cone_distance(&up(0.5), &[0.2, 1.0]).unwrap() < 1e-12);
        let d = cone_distance(&up(0.5), &[1.0, 0.0]).unwrap();
        assert!((d - 3f64.sqrt() / 2.0).abs() < 1e-9, "{d}");
        assert_eq!(cone_distance(&up(2.0), &[-5.0, -7.0]).unwrap(), 0.0);
    }

    #[test]
    fn contains_examples() {
        assert!(cone_contains(&up(0.5), &[0.0, 0.0], 1e-7).unwrap());
        assert!(!cone_contains(&up(0.5), &[1.0, 0.0], 1e-7).unwrap());
        assert!(cone_contains(&up(0.5), &[0.2, 1.0], 1e-7).unwrap());
        assert!(cone_contains(&up(0.5), &[0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn projection_matches_golden_section() {
        let cones = [
            up(0.0),
            up(0.2),
            up(0.9),
            DirectionalCone::new(vec![1.0, 1.0, 0.5], 0.3).unwrap(),
            DirectionalCone::new(vec![0.0, 0.0], 0.0).unwrap(),
            DirectionalCone::new(vec![2.0, 0.0], 2.0).unwrap(),
        ];
        let pts: [&[f64]; 6] = [
            &[1.0, 0.0],
            &[-1.0, -2.0],
            &[0.3, 5.0],
            &[0.0, 0.0],
            &[-3.0, 0.1],
            &[0.05, -0.01],
        ];
        for c in &cones {
            for p in &pts {
                let p: Vec<f64> = p.iter().cycle().take(c.dim()).copied().collect();
                let q = c.project(&p).unwrap();
                let via_proj = linalg::dist(&p, &q);
                let via_golden = c.distance(&p).unwrap();
                assert!(
                    (via_proj - via_golden).abs() < 1e-7,
                    "{c:?} {p:?}: {via_proj} vs {via_golden}"
                );
                assert!(c.distance(&q).unwrap() < 1e-7);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            up(0.1).distance(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn rejects_negative_radius() {
        assert!(DirectionalCone::new(vec![1.0], -0.1).is_err());
    }
}
