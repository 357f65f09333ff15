//! Small hand-analysed instances with known answers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::{ConvexSet, DirectionalCone, Polyhedron};
use crate::linalg::{Matrix, Vector};
use crate::multimap::{MultiMap, SearchRegion, SmoothMap, Term};
use crate::regularity::RegularityQuery;
use crate::slopes::ScalarField;

/// Ground truth shipped with an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Known {
    /// Directional modulus at `(x₀, y₀)` toward the instance's `ȳ`.
    pub modulus: ExtReal,
    /// Robinson-type condition toward `ȳ`.
    pub robinson: bool,
    /// Robinson-type condition toward `−ȳ`.
    pub robinson_reverse: bool,
    /// How the values were obtained.
    pub notes: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedInstance {
    pub name: String,
    #[serde(rename = "F")]
    pub map: MultiMap,
    pub x0: Vector,
    pub y0: Vector,
    pub dc: DirectionalCone,
    pub epsilon: f64,
    pub known: Option<Known>,
}

impl NamedInstance {
    /// `[−5, 5]ⁿ`, 11 nodes per axis, 2000 samples, seed 42.
    pub fn default_region(&self) -> SearchRegion {
        SearchRegion::default_for(self.map.dim_in())
    }

    pub fn query(&self) -> RegularityQuery {
        self.query_in(self.default_region())
    }

    pub fn query_in(&self, region: SearchRegion) -> RegularityQuery {
        RegularityQuery::new(
            self.map.clone(),
            self.x0.clone(),
            self.y0.clone(),
            self.dc.clone(),
            self.epsilon,
            region,
        )
        .expect("registry instances are consistent")
    }

    /// `u ↦ d(y₀, F(u))`, whose zero set is `F⁻¹(y₀)`.
    pub fn residual_field(&self) -> ScalarField {
        ScalarField::residual(&self.map, &self.y0).expect("registry instances are consistent")
    }
}

pub const NAMES: [&str; 6] = [
    "identity2",
    "diag_2_05",
    "halfplane_directional",
    "hoffman_2d",
    "parabola_eb",
    "param_scale",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

pub fn all() -> Vec<NamedInstance> {
    NAMES.iter().map(|n| builtin(n).expect("registered")).collect()
}

fn cone(ybar: Vector, delta: f64) -> DirectionalCone {
    DirectionalCone::new(ybar, delta).expect("valid cone")
}

fn known(modulus: ExtReal, robinson: bool, robinson_reverse: bool, notes: &str) -> Option<Known> {
    Some(Known {
        modulus,
        robinson,
        robinson_reverse,
        notes: notes.to_string(),
    })
}

/// `f(x) = (x, 0)`, `K = {z₁ = 0, z₂ ≤ 0}`, so `F(x) = {(x, s) : s ≥ 0}`.
pub fn halfplane_map() -> MultiMap {
    let f = SmoothMap::affine(Matrix::from_rows(&[vec![1.0], vec![0.0]], 1).expect("rows"), vec![0.0, 0.0])
        .expect("affine");
    let k = Polyhedron::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 3], 2)
        .expect("polyhedron");
    MultiMap::new(f, ConvexSet::Polyhedron(k)).expect("consistent")
}

/// `f(x) = p·x` on `ℝ`, `K = {0}`.
pub fn param_scale_family(p: f64) -> Result<MultiMap> {
    let f = SmoothMap::affine(Matrix::from_rows(&[vec![p]], 1)?, vec![0.0])?;
    MultiMap::new(f, ConvexSet::origin(1))
}

/// `f(x) = diag(p, 0.5)·x` on `ℝ²`, `K = {0}`.
pub fn diag_family(p: f64) -> Result<MultiMap> {
    MultiMap::new(SmoothMap::linear(Matrix::diag(&[p, 0.5])), ConvexSet::origin(2))
}

pub fn builtin(name: &str) -> Result<NamedInstance> {
    let inst = match name {
        "identity2" => NamedInstance {
            name: name.into(),
            map: MultiMap::new(SmoothMap::linear(Matrix::identity(2)), ConvexSet::origin(2))?,
            x0: vec![0.0, 0.0],
            y0: vec![0.0, 0.0],
            dc: cone(vec![1.0, 0.0], 0.5),
            epsilon: 0.5,
            known: known(ExtReal::Finite(1.0), true, true, "isometry: both distances equal ‖x − y‖"),
        },
        "diag_2_05" => NamedInstance {
            name: name.into(),
            map: diag_family(2.0)?,
            x0: vec![0.0, 0.0],
            y0: vec![0.0, 0.0],
            dc: cone(vec![0.0, 1.0], 0.1),
            epsilon: 0.5,
            known: known(
                ExtReal::Finite(2.0),
                true,
                true,
                "1/σ_min of diag(2, 0.5); residuals along e₂ are admissible",
            ),
        },
        "halfplane_directional" => NamedInstance {
            name: name.into(),
            map: halfplane_map(),
            x0: vec![0.0],
            y0: vec![0.0, 0.0],
            dc: cone(vec![0.0, 1.0], 0.2),
            epsilon: 0.5,
            known: known(
                ExtReal::Finite(1.0),
                true,
                false,
                "admissible pairs have y₂ ≥ 0 and both distances equal |x − y₁|; \
                 y₂ < 0 has an empty preimage, so plain regularity fails",
            ),
        },
        "hoffman_2d" => NamedInstance {
            name: name.into(),
            map: MultiMap::new(
                SmoothMap::linear(Matrix::identity(2)),
                ConvexSet::Polyhedron(Polyhedron::nonpositive_orthant(2)),
            )?,
            x0: vec![0.0, 0.0],
            y0: vec![0.0, 0.0],
            dc: cone(vec![1.0, 0.0], 0.2),
            epsilon: 0.5,
            known: known(
                ExtReal::Finite(1.0),
                true,
                true,
                "both distances equal ‖(x − y)₊‖; the range x − K is the whole plane",
            ),
        },
        "parabola_eb" => NamedInstance {
            name: name.into(),
            map: MultiMap::new(
                SmoothMap::polynomial(1, vec![vec![Term { coef: 1.0, powers: vec![2] }]])?,
                ConvexSet::origin(1),
            )?,
            x0: vec![0.0],
            y0: vec![0.0],
            dc: cone(vec![1.0], 0.5),
            epsilon: 0.5,
            known: known(
                ExtReal::Infinity,
                false,
                false,
                "d(x, F⁻¹(y)) ~ √y against d(y, F(x)) = y near 0; f′(0) = 0 so the image \
                 f(0) + Im f′(0) − K is {0}",
            ),
        },
        "param_scale" => NamedInstance {
            name: name.into(),
            map: param_scale_family(1.0)?,
            x0: vec![0.0],
            y0: vec![0.0],
            dc: cone(vec![1.0], 0.5),
            epsilon: 0.5,
            known: known(ExtReal::Finite(1.0), true, true, "member p = 1 of the family p·x; modulus 1/p"),
        },
        _ => return Err(Error::UnknownInstance(name.to_string())),
    };
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete() {
        for n in names() {
            let inst = builtin(n).unwrap();
            assert_eq!(&inst.name, n);
            inst.query().validate().unwrap();
            assert!(inst.known.is_some());
        }
        assert_eq!(builtin("nope").unwrap_err(), Error::UnknownInstance("nope".into()));
    }

    #[test]
    fn known_moduli() {
        assert_eq!(builtin("identity2").unwrap().known.unwrap().modulus, ExtReal::Finite(1.0));
        assert_eq!(builtin("diag_2_05").unwrap().known.unwrap().modulus, ExtReal::Finite(2.0));
        let h = builtin("halfplane_directional").unwrap().known.unwrap();
        assert!(h.robinson && !h.robinson_reverse);
    }
}
