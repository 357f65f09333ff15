//! Convex-set primitives: membership, projection, distance, polyhedral
//! normal cones, the directional cone `cone B(ȳ, δ)` and a small LP solver.

mod cone;
pub mod lp;
mod polyhedron;

use serde::{Deserialize, Serialize};

pub use cone::{cone_contains, cone_distance, DirectionalCone};
pub use lp::{solve_lp, LinearProgram, LpOutcome, Relation};
pub use polyhedron::{normal_cone_generators, PolyProjection, Polyhedron, PolyhedronData};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::linalg::{self, check_dim, Vector};

/// A closed convex set with projection support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ConvexSet {
    Polyhedron(Polyhedron),
    Ball { center: Vector, radius: f64 },
    Singleton { point: Vector },
    DirectionalCone(DirectionalCone),
    Product { factors: Vec<ConvexSet> },
}

impl ConvexSet {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() || !linalg::all_finite(&center) {
            return Err(Error::InvalidInput(format!("invalid ball radius {radius}")));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn singleton(point: Vector) -> Result<Self> {
        if !linalg::all_finite(&point) {
            return Err(Error::InvalidInput("singleton point must be finite".into()));
        }
        Ok(ConvexSet::Singleton { point })
    }

    pub fn origin(dim: usize) -> Self {
        ConvexSet::Singleton {
            point: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Polyhedron(p) => p.dim(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Singleton { point } => point.len(),
            ConvexSet::DirectionalCone(c) => c.dim(),
            ConvexSet::Product { factors } => factors.iter().map(ConvexSet::dim).sum(),
        }
    }

    /// Checks internal consistency after deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Ball { center, radius } => {
                ConvexSet::ball(center.clone(), *radius).map(|_| ())
            }
            ConvexSet::Singleton { point } => ConvexSet::singleton(point.clone()).map(|_| ()),
            ConvexSet::Product { factors } => factors.iter().try_for_each(ConvexSet::validate),
            ConvexSet::Polyhedron(_) | ConvexSet::DirectionalCone(_) => Ok(()),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        match self {
            ConvexSet::Polyhedron(p) => p.is_empty(),
            ConvexSet::Product { factors } => {
                for f in factors {
                    if f.is_empty()? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            _ => Ok(false),
        }
    }

    /// Euclidean projection. Fails with [`Error::EmptySet`] on an empty set.
    pub fn project(&self, p: &[f64]) -> Result<Vector> {
        check_dim(self.dim(), p.len())?;
        match self {
            ConvexSet::Polyhedron(poly) => poly.project(p),
            ConvexSet::Ball { center, radius } => {
                let off = linalg::sub(p, center);
                let r = linalg::norm(&off);
                if r <= *radius {
                    Ok(p.to_vec())
                } else {
                    Ok(linalg::axpy(center, radius / r, &off))
                }
            }
            ConvexSet::Singleton { point } => Ok(point.clone()),
            ConvexSet::DirectionalCone(c) => c.project(p),
            ConvexSet::Product { factors } => {
                let mut out = Vec::with_capacity(p.len());
                let mut at = 0;
                for f in factors {
                    let n = f.dim();
                    out.extend(f.project(&p[at..at + n])?);
                    at += n;
                }
                Ok(out)
            }
        }
    }

    /// Euclidean distance; `+∞` exactly when the set is empty.
    pub fn distance(&self, p: &[f64]) -> Result<ExtReal> {
        check_dim(self.dim(), p.len())?;
        match self.project(p) {
            Ok(q) => Ok(ExtReal::Finite(linalg::dist(p, &q))),
            Err(Error::EmptySet) => Ok(ExtReal::Infinity),
            Err(e) => Err(e),
        }
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(p)? <= ExtReal::Finite(tol))
    }

    /// The polyhedral description when one exists exactly.
    pub fn as_polyhedron(&self) -> Option<Polyhedron> {
        match self {
            ConvexSet::Polyhedron(p) => Some(p.clone()),
            ConvexSet::Singleton { point } => Some(Polyhedron::point(point)),
            ConvexSet::Ball { center, radius } if *radius == 0.0 => Some(Polyhedron::point(center)),
            ConvexSet::Ball { .. } => None,
            ConvexSet::DirectionalCone(c) if c.is_whole_space() => {
                Some(Polyhedron::whole_space(c.dim()))
            }
            ConvexSet::DirectionalCone(c) if c.delta() == 0.0 => Some(ray_polyhedron(c.ybar())),
            ConvexSet::DirectionalCone(_) => None,
            ConvexSet::Product { factors } => {
                let mut acc: Option<Polyhedron> = None;
                for f in factors {
                    let p = f.as_polyhedron()?;
                    acc = Some(match acc {
                        None => p,
                        Some(a) => a.cartesian(&p),
                    });
                }
                Some(acc.unwrap_or_else(|| Polyhedron::whole_space(0)))
            }
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.as_polyhedron().is_some()
    }
}

/// `{λ ȳ : λ ≥ 0}` (or `{0}` for `ȳ = 0`) as a polyhedron.
fn ray_polyhedron(ybar: &[f64]) -> Polyhedron {
    let n = ybar.len();
    let s = linalg::norm(ybar);
    if s == 0.0 {
        return Polyhedron::point(&vec![0.0; n]);
    }
    let axis = linalg::scale(ybar, 1.0 / s);
    let mut candidates: Vec<Vector> = vec![axis.clone()];
    candidates.extend((0..n).map(|i| linalg::unit(n, i)));
    let refs: Vec<&[f64]> = candidates.iter().map(|v| v.as_slice()).collect();
    let keep = linalg::independent_rows(&refs, 1e-8);
    let mut rows = vec![linalg::scale(&axis, -1.0)];
    let mut basis: Vec<Vector> = vec![axis.clone()];
    for &k in keep.iter().skip(1) {
        // Orthogonalize the complement directions against the axis.
        let mut v = candidates[k].clone();
        for b in &basis {
            let c = linalg::dot(&v, b);
            v = linalg::axpy(&v, -c, b);
        }
        let vn = linalg::norm(&v);
        let v = linalg::scale(&v, 1.0 / vn);
        rows.push(v.clone());
        rows.push(linalg::scale(&v, -1.0));
        basis.push(v);
    }
    let zeros = vec![0.0; rows.len()];
    Polyhedron::from_rows(&rows, zeros, n).expect("valid")
}

pub fn project(set: &ConvexSet, p: &[f64]) -> Result<Vector> {
    set.project(p)
}

pub fn distance(set: &ConvexSet, p: &[f64]) -> Result<ExtReal> {
    set.distance(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn projection_examples() {
        let half = ConvexSet::Polyhedron(Polyhedron::from_rows(&[vec![1.0]], vec![0.0], 1).unwrap());
        assert_eq!(project(&half, &[2.0]).unwrap(), vec![0.0]);
        let quad = ConvexSet::Polyhedron(Polyhedron::nonpositive_orthant(2));
        assert!(linalg::norm(&project(&quad, &[1.0, 1.0]).unwrap()) < 1e-12);
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let q = project(&ball, &[3.0, 4.0]).unwrap();
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let half = ConvexSet::Polyhedron(Polyhedron::from_rows(&[vec![1.0]], vec![0.0], 1).unwrap());
        assert_eq!(distance(&half, &[2.0]).unwrap(), ExtReal::Finite(2.0));
        let s = ConvexSet::singleton(vec![1.0, 1.0]).unwrap();
        assert_eq!(distance(&s, &[1.0, 1.0]).unwrap(), ExtReal::Finite(0.0));
        let quad = ConvexSet::Polyhedron(Polyhedron::nonpositive_orthant(2));
        let d = distance(&quad, &[3.0, 4.0]).unwrap().to_f64();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_set_distance_is_infinite() {
        let e = ConvexSet::Polyhedron(
            Polyhedron::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, -1.0], 1).unwrap(),
        );
        assert_eq!(distance(&e, &[0.0]).unwrap(), ExtReal::Infinity);
        assert_eq!(project(&e, &[0.0]), Err(Error::EmptySet));
    }

    #[test]
    fn dimension_mismatch() {
        let s = ConvexSet::origin(2);
        assert_eq!(
            s.distance(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn product_splits_coordinates() {
        let prod = ConvexSet::Product {
            factors: vec![
                ConvexSet::origin(1),
                ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            ],
        };
        assert_eq!(prod.dim(), 3);
        let q = prod.project(&[2.0, 0.0, 3.0]).unwrap();
        assert_eq!(q, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn polyhedral_forms_agree() {
        let sets = vec![
            ConvexSet::singleton(vec![1.0, -2.0]).unwrap(),
            ConvexSet::DirectionalCone(DirectionalCone::new(vec![1.0, 1.0], 0.0).unwrap()),
            ConvexSet::Product {
                factors: vec![
                    ConvexSet::origin(1),
                    ConvexSet::Polyhedron(Polyhedron::nonpositive_orthant(1)),
                ],
            },
        ];
        for s in sets {
            let p = s.as_polyhedron().unwrap();
            for pt in [[3.0, 0.5], [-1.0, -1.0], [0.2, 4.0]] {
                let a = s.distance(&pt).unwrap().to_f64();
                let b = p.distance(&pt).unwrap();
                assert!((a - b).abs() < 1e-9, "{s:?} {pt:?}: {a} vs {b}");
            }
        }
        assert!(ConvexSet::ball(vec![0.0], 1.0).unwrap().as_polyhedron().is_none());
    }

    #[test]
    fn serde_tags() {
        let k = ConvexSet::Polyhedron(
            Polyhedron::new(Matrix::from_rows(&[vec![0.0, 1.0]], 2).unwrap(), vec![0.0]).unwrap(),
        );
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"kind":"polyhedron","payload":{"c":[[0.0,1.0]],"d":[0.0],"dim":2}}"#);
        let back: ConvexSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        let b: ConvexSet =
            serde_json::from_str(r#"{"kind":"ball","payload":{"center":[0,0],"radius":2}}"#).unwrap();
        assert_eq!(b.dim(), 2);
    }
}
