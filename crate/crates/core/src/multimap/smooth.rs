use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_dim, Matrix, Vector};

/// One monomial `coef · Π x_i^{powers_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Smooth base map `f : ℝⁿ → ℝᵐ` with an analytic Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapData", into = "MapData")]
pub struct SmoothMap {
    dim_in: usize,
    dim_out: usize,
    kind: MapKind,
}

#[derive(Clone, Debug, PartialEq)]
enum MapKind {
    Affine { a: Matrix, b: Vector },
    /// One term list per output coordinate.
    Polynomial { outputs: Vec<Vec<Term>> },
}

/// Serialized form: `{"kind": "affine", "payload": {"a": rows, "b": [...]}}`
/// or `{"kind": "polynomial", "payload": {"dim_in": n, "outputs": [[term, ...], ...]}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum MapData {
    Affine {
        a: Vec<Vector>,
        b: Vector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim_in: Option<usize>,
    },
    Polynomial {
        dim_in: usize,
        outputs: Vec<Vec<Term>>,
    },
}

impl TryFrom<MapData> for SmoothMap {
    type Error = Error;
    fn try_from(data: MapData) -> Result<Self> {
        match data {
            MapData::Affine { a, b, dim_in } => {
                let n = match (dim_in, a.first()) {
                    (Some(n), _) => n,
                    (None, Some(r)) => r.len(),
                    (None, None) => {
                        return Err(Error::InvalidInput(
                            "affine map without rows needs `dim_in`".into(),
                        ))
                    }
                };
                SmoothMap::affine(Matrix::from_rows(&a, n)?, b)
            }
            MapData::Polynomial { dim_in, outputs } => SmoothMap::polynomial(dim_in, outputs),
        }
    }
}

impl From<SmoothMap> for MapData {
    fn from(m: SmoothMap) -> Self {
        match m.kind {
            MapKind::Affine { a, b } => MapData::Affine {
                a: a.row_vecs(),
                b,
                dim_in: Some(m.dim_in),
            },
            MapKind::Polynomial { outputs } => MapData::Polynomial {
                dim_in: m.dim_in,
                outputs,
            },
        }
    }
}

impl SmoothMap {
    /// `x ↦ A x + b`.
    pub fn affine(a: Matrix, b: Vector) -> Result<Self> {
        check_dim(a.rows(), b.len())?;
        if !a.is_finite() || !linalg::all_finite(&b) {
            return Err(Error::InvalidInput("affine map data must be finite".into()));
        }
        Ok(SmoothMap {
            dim_in: a.cols(),
            dim_out: a.rows(),
            kind: MapKind::Affine { a, b },
        })
    }

    /// `x ↦ A x`.
    pub fn linear(a: Matrix) -> Self {
        let b = vec![0.0; a.rows()];
        SmoothMap::affine(a, b).expect("consistent dimensions")
    }

    pub fn polynomial(dim_in: usize, outputs: Vec<Vec<Term>>) -> Result<Self> {
        for (j, terms) in outputs.iter().enumerate() {
            for t in terms {
                if t.powers.len() != dim_in {
                    return Err(Error::InvalidInput(format!(
                        "output {j}: term has {} powers, expected {dim_in}",
                        t.powers.len()
                    )));
                }
                if !t.coef.is_finite() {
                    return Err(Error::InvalidInput(format!("output {j}: non-finite coefficient")));
                }
            }
        }
        Ok(SmoothMap {
            dim_in,
            dim_out: outputs.len(),
            kind: MapKind::Polynomial { outputs },
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn as_affine(&self) -> Option<(&Matrix, &[f64])> {
        match &self.kind {
            MapKind::Affine { a, b } => Some((a, b)),
            MapKind::Polynomial { .. } => None,
        }
    }

    pub fn is_affine(&self) -> bool {
        self.as_affine().is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vector> {
        check_dim(self.dim_in, x.len())?;
        Ok(match &self.kind {
            MapKind::Affine { a, b } => linalg::add(&a.matvec(x), b),
            MapKind::Polynomial { outputs } => outputs
                .iter()
                .map(|terms| terms.iter().map(|t| monomial(t, x)).sum())
                .collect(),
        })
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        check_dim(self.dim_in, x.len())?;
        Ok(match &self.kind {
            MapKind::Affine { a, .. } => a.clone(),
            MapKind::Polynomial { outputs } => {
                let mut jac = Matrix::zeros(self.dim_out, self.dim_in);
                for (j, terms) in outputs.iter().enumerate() {
                    for t in terms {
                        for i in 0..self.dim_in {
                            jac[(j, i)] += monomial_partial(t, x, i);
                        }
                    }
                }
                jac
            }
        })
    }
}

fn monomial(t: &Term, x: &[f64]) -> f64 {
    t.powers
        .iter()
        .zip(x)
        .fold(t.coef, |acc, (&p, &xi)| acc * xi.powi(p as i32))
}

fn monomial_partial(t: &Term, x: &[f64], i: usize) -> f64 {
    let p = t.powers[i];
    if p == 0 {
        return 0.0;
    }
    t.powers
        .iter()
        .zip(x)
        .enumerate()
        .fold(t.coef * p as f64, |acc, (k, (&pk, &xk))| {
            if k == i {
                acc * xk.powi(pk as i32 - 1)
            } else {
                acc * xk.powi(pk as i32)
            }
        })
}
