use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LinearProgram, LpOutcome, Polyhedron, Relation};
use crate::linalg::{self, check_dim, Matrix};
use crate::multimap::MultiMap;
use crate::tolerances::TOL_FEAS;

/// Box bounds that keep the interiority LP bounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpBounds {
    pub lambda_max: f64,
    pub u_max: f64,
}

impl Default for LpBounds {
    fn default() -> Self {
        LpBounds {
            lambda_max: 10.0,
            u_max: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorResult {
    pub holds: bool,
    /// Optimal `ε`: radius of the ℓ1-ball around `λȳ` inside the image set.
    pub margin: f64,
    pub lambda: f64,
    pub bounds: LpBounds,
}

/// Largest `ε` such that `λȳ ± ε eᵢ ∈ c + J·[−u_max, u_max]ⁿ − K` for all
/// `i`, with one shared `λ ∈ [0, λ_max]`. Containing the `2m` signed axis
/// points puts the ℓ1-ball of radius `ε` around `λȳ` inside the convex set.
fn interior_lp(c: &[f64], j: &Matrix, k: &Polyhedron, ybar: &[f64], bounds: LpBounds) -> Result<InteriorResult> {
    let (m, n) = (j.rows(), j.cols());
    check_dim(m, ybar.len())?;
    check_dim(m, k.dim())?;
    if !(bounds.lambda_max >= 0.0 && bounds.u_max >= 0.0) {
        return Err(Error::InvalidParameter("LP bounds must be nonnegative".into()));
    }
    let points = 2 * m;
    let block = n + m;
    let nvar = 2 + points * block;
    let (eps, lam) = (0, 1);
    let u_at = |p: usize, t: usize| 2 + p * block + t;
    let k_at = |p: usize, r: usize| 2 + p * block + n + r;

    let mut obj = vec![0.0; nvar];
    obj[eps] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    lp.bounds(eps, 0.0, bounds.lambda_max.max(bounds.u_max));
    lp.bounds(lam, 0.0, bounds.lambda_max);
    for p in 0..points {
        let (axis, sign) = (p / 2, if p % 2 == 0 { 1.0 } else { -1.0 });
        for t in 0..n {
            lp.bounds(u_at(p, t), -bounds.u_max, bounds.u_max);
        }
        // J u − k − λȳ − ε σ e_axis = −c
        for r in 0..m {
            let mut row = vec![0.0; nvar];
            for t in 0..n {
                row[u_at(p, t)] = j[(r, t)];
            }
            row[k_at(p, r)] = -1.0;
            row[lam] = -ybar[r];
            if r == axis {
                row[eps] = -sign;
            }
            lp.constraint(row, Relation::Eq, -c[r])?;
        }
        // k ∈ K
        for q in 0..k.num_rows() {
            let mut row = vec![0.0; nvar];
            for r in 0..m {
                row[k_at(p, r)] = k.normal(q)[r];
            }
            lp.constraint(row, Relation::Le, k.offset(q))?;
        }
    }
    Ok(match lp.solve()? {
        LpOutcome::Optimal { point, value } => InteriorResult {
            holds: value > TOL_FEAS,
            margin: value.max(0.0),
            lambda: point[lam],
            bounds,
        },
        LpOutcome::Infeasible | LpOutcome::Unbounded => InteriorResult {
            holds: false,
            margin: 0.0,
            lambda: 0.0,
            bounds,
        },
    })
}

/// `cone{ȳ} ∩ int(f(x₀) + Im f′(x₀) − K) ≠ ∅`, checked by LP.
pub fn robinson_condition(map: &MultiMap, x0: &[f64], ybar: &[f64], bounds: LpBounds) -> Result<InteriorResult> {
    let k = map.k.as_polyhedron().ok_or(Error::NotPolyhedral)?;
    let c = map.f.eval(x0)?;
    let j = map.f.jacobian(x0)?;
    interior_lp(&c, &j, &k, ybar, bounds)
}

/// `cone{ȳ} ∩ int(F(X) − y₀) ≠ ∅` for affine `f`, with `u` boxed by `u_max`.
pub fn convex_range_condition(map: &MultiMap, y0: &[f64], ybar: &[f64], bounds: LpBounds) -> Result<InteriorResult> {
    let (a, b) = map.f.as_affine().ok_or(Error::NotAffine)?;
    let k = map.k.as_polyhedron().ok_or(Error::NotPolyhedral)?;
    check_dim(map.dim_out(), y0.len())?;
    interior_lp(&linalg::sub(b, y0), a, &k, ybar, bounds)
}
