//! Brute-force ground truth on small lattices.
//!
//! Nothing here calls the projection or membership routines of the fast
//! estimators: distances to constraint sets are recomputed from the set data
//! (per-coordinate clamps for axis-aligned polyhedra, active-set enumeration
//! otherwise, closed forms for balls and cones).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::{ConvexSet, DirectionalCone, LinearProgram, LpOutcome, Polyhedron, Relation};
use crate::linalg::{self, check_dim, Matrix, Vector};
use crate::multimap::MultiMap;
use crate::regularity::RegularityQuery;
use crate::slopes::ScalarField;

pub const MAX_POINTS_PER_AXIS: usize = 201;
pub const MAX_LATTICE: u128 = 10_000_000;
/// Largest `dim_in` and `dim_out` accepted by [`grid_modulus`].
pub const MAX_ORACLE_DIM: usize = 3;
/// Admissible pairs need `d(y, F(x))` of at least this many refined steps.
pub const FLOOR_STEPS: f64 = 4.0;
/// Points per preimage solve in [`grid_modulus`].
const REFINED_BUDGET: usize = 40_401;
/// Rows beyond which active-set enumeration is refused.
const MAX_ENUM_ROWS: usize = 16;

/// Uniform lattice on a box, `points_per_axis` nodes per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lower: Vector,
    upper: Vector,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(lower: Vector, upper: Vector, points_per_axis: usize) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one axis".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::InvalidInput("grid bounds must be finite with lower ≤ upper".into()));
        }
        if !(2..=MAX_POINTS_PER_AXIS).contains(&points_per_axis) {
            return Err(Error::InvalidParameter(format!(
                "points_per_axis must lie in [2, {MAX_POINTS_PER_AXIS}], got {points_per_axis}"
            )));
        }
        let points = (points_per_axis as u128).checked_pow(lower.len() as u32).unwrap_or(u128::MAX);
        if points > MAX_LATTICE {
            return Err(Error::GridTooLarge {
                points,
                cap: MAX_LATTICE,
            });
        }
        Ok(Grid {
            lower,
            upper,
            points_per_axis,
        })
    }

    /// `center ± half` in every coordinate.
    pub fn cube(center: &[f64], half: f64, points_per_axis: usize) -> Result<Self> {
        Grid::new(
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
            points_per_axis,
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points_per_axis - 1) as f64
    }

    pub fn max_step(&self) -> f64 {
        (0..self.dim()).map(|i| self.step(i)).fold(0.0, f64::max)
    }

    /// Lattice point number `idx`, first coordinate varying fastest.
    pub fn point(&self, mut idx: usize) -> Vector {
        let m = self.points_per_axis;
        let last = (m - 1) as f64;
        (0..self.dim())
            .map(|i| {
                let k = (idx % m) as f64;
                idx /= m;
                self.lower[i] + (self.upper[i] - self.lower[i]) * k / last
            })
            .collect()
    }

    pub fn points(&self) -> Vec<Vector> {
        (0..self.len()).into_par_iter().map(|i| self.point(i)).collect()
    }

    /// Same box with `points_per_axis` doubled (minus one, so old nodes
    /// stay on the lattice), capped at [`MAX_POINTS_PER_AXIS`].
    pub fn refined(&self) -> Result<Grid> {
        let m = (2 * self.points_per_axis - 1).min(MAX_POINTS_PER_AXIS);
        Grid::new(self.lower.clone(), self.upper.clone(), m)
    }
}

/// Distance from `z` to `k`, computed from the set description alone.
pub fn set_distance(k: &ConvexSet, z: &[f64]) -> Result<ExtReal> {
    check_dim(k.dim(), z.len())?;
    Ok(match k {
        ConvexSet::Polyhedron(p) => polyhedron_distance(p, z)?,
        ConvexSet::Ball { center, radius } => ExtReal::Finite((linalg::dist(z, center) - radius).max(0.0)),
        ConvexSet::Singleton { point } => ExtReal::Finite(linalg::dist(z, point)),
        ConvexSet::DirectionalCone(c) => ExtReal::Finite(cone_distance(c, z)),
        ConvexSet::Product { factors } => {
            let mut sq = 0.0;
            let mut at = 0;
            for f in factors {
                let n = f.dim();
                match set_distance(f, &z[at..at + n])? {
                    ExtReal::Finite(d) => sq += d * d,
                    ExtReal::Infinity => return Ok(ExtReal::Infinity),
                }
                at += n;
            }
            ExtReal::Finite(sq.sqrt())
        }
    })
}

/// Circular cone with axis `ȳ/‖ȳ‖` and half-angle `asin(δ/‖ȳ‖)`.
fn cone_distance(c: &DirectionalCone, z: &[f64]) -> f64 {
    let s = linalg::norm(c.ybar());
    let nz = linalg::norm(z);
    if s < c.delta() {
        return 0.0;
    }
    if s == 0.0 {
        return nz;
    }
    let t = linalg::dot(z, c.ybar()) / s;
    let r = (nz * nz - t * t).max(0.0).sqrt();
    let theta = (c.delta() / s).min(1.0).asin();
    let psi = r.atan2(t);
    if psi <= theta {
        0.0
    } else if psi >= theta + std::f64::consts::FRAC_PI_2 {
        nz
    } else {
        nz * (psi - theta).sin()
    }
}

/// Per-coordinate interval when every row has at most one nonzero entry.
fn clamp_box(p: &Polyhedron) -> Option<(Vector, Vector)> {
    let n = p.dim();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for i in 0..p.num_rows() {
        let row = p.normal(i);
        let nz: Vec<usize> = (0..n).filter(|&j| row[j] != 0.0).collect();
        match nz.as_slice() {
            [] => {}
            [j] => {
                let bound = p.offset(i) / row[*j];
                if row[*j] > 0.0 {
                    hi[*j] = hi[*j].min(bound);
                } else {
                    lo[*j] = lo[*j].max(bound);
                }
            }
            _ => return None,
        }
    }
    Some((lo, hi))
}

fn polyhedron_distance(p: &Polyhedron, z: &[f64]) -> Result<ExtReal> {
    if let Some((lo, hi)) = clamp_box(p) {
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Ok(ExtReal::Infinity);
        }
        let sq: f64 = z
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, h))| {
                let d = v - v.clamp(*l, *h);
                d * d
            })
            .sum();
        return Ok(ExtReal::Finite(sq.sqrt()));
    }
    enumerate_active_sets(p, z)
}

/// Tries every independent active set of at most `dim` rows; the point
/// `z − Cₛᵀμ` with `Cₛ u = dₛ`, `μ ≥ 0` and all rows satisfied is the
/// projection.
fn enumerate_active_sets(p: &Polyhedron, z: &[f64]) -> Result<ExtReal> {
    let (n, r) = (p.dim(), p.num_rows());
    if r > MAX_ENUM_ROWS {
        return Err(Error::InvalidParameter(format!(
            "active-set enumeration supports at most {MAX_ENUM_ROWS} rows, got {r}"
        )));
    }
    let feasible = |u: &[f64]| (0..r).all(|i| linalg::dot(p.normal(i), u) <= p.offset(i) + 1e-9 * (1.0 + p.offset(i).abs()));
    if feasible(z) {
        return Ok(ExtReal::Finite(0.0));
    }
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << r) {
        let set: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
        if set.len() > n {
            continue;
        }
        let rows: Vec<Vector> = set.iter().map(|&i| p.normal(i).to_vec()).collect();
        let c = Matrix::from_rows(&rows, n)?;
        let gram = c.matmul(&c.transpose());
        let rhs: Vector = set.iter().zip(c.matvec(z)).map(|(&i, cz)| cz - p.offset(i)).collect();
        let Some(mu) = linalg::solve(&gram, &rhs) else {
            continue;
        };
        if mu.iter().any(|m| *m < -1e-10) {
            continue;
        }
        let u = linalg::sub(z, &c.tr_matvec(&mu));
        if feasible(&u) {
            best = best.min(linalg::dist(z, &u));
        }
    }
    Ok(if best.is_finite() {
        ExtReal::Finite(best)
    } else {
        ExtReal::Infinity
    })
}

/// `d(y, F(x)) = d(f(x) − y, K)`.
pub fn image_distance(map: &MultiMap, x: &[f64], y: &[f64]) -> Result<ExtReal> {
    set_distance(&map.k, &linalg::sub(&map.f.eval(x)?, y))
}

/// `y ∈ F(x) + cone B(ȳ, δ)` up to `tol`, by minimizing the convex gap
/// `[d_K(w + λȳ) − λδ]₊` over `λ ≥ 0` with `w = f(x) − y`.
pub fn directional_member(map: &MultiMap, x: &[f64], y: &[f64], dc: &DirectionalCone, tol: f64) -> Result<bool> {
    let w = linalg::sub(&map.f.eval(x)?, y);
    let gap = |lambda: f64| -> Result<f64> {
        let d = set_distance(&map.k, &linalg::axpy(&w, lambda, dc.ybar()))?.to_f64();
        Ok((d - lambda * dc.delta()).max(0.0))
    };
    if gap(0.0)? <= tol {
        return Ok(true);
    }
    let s = linalg::norm(dc.ybar());
    if s == 0.0 {
        return Ok(false);
    }
    let unit = (linalg::norm(&w) + 1.0) / s;
    let ladder: Vec<f64> = (-30..=40).map(|k| unit * 2f64.powi(k)).collect();
    let vals = ladder.iter().map(|&l| gap(l)).collect::<Result<Vec<_>>>()?;
    let arg = (0..vals.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    if vals[arg] <= tol {
        return Ok(true);
    }
    let mut a = if arg == 0 { 0.0 } else { ladder[arg - 1] };
    let mut b = ladder[(arg + 1).min(ladder.len() - 1)];
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        let (g1, g2) = (gap(m1)?, gap(m2)?);
        if g1.min(g2) <= tol {
            return Ok(true);
        }
        if g1 <= g2 {
            b = m2;
        } else {
            a = m1;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    Ok(false)
}

/// Lattice points `u` with `d(f(u) − y, K) ≤ tol_feas`.
fn feasible_lattice(map: &MultiMap, y: &[f64], g: &Grid, tol_feas: f64) -> Result<Vec<Vector>> {
    let hits = (0..g.len())
        .into_par_iter()
        .map(|i| -> Result<Option<Vector>> {
            let u = g.point(i);
            let d = image_distance(map, &u, y)?;
            Ok(matches!(d, ExtReal::Finite(v) if v <= tol_feas).then_some(u))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.into_iter().flatten().collect())
}

/// `{u ∈ box : f(u) − y ∈ K}` is nonempty, by LP; only for affine `f` and
/// polyhedral `K`.
fn preimage_meets_box(map: &MultiMap, y: &[f64], g: &Grid) -> Result<bool> {
    let (Some((a, b)), Some(k)) = (map.f.as_affine(), map.k.as_polyhedron()) else {
        return Ok(false);
    };
    let n = map.dim_in();
    let mut lp = LinearProgram::maximize(vec![0.0; n]);
    for i in 0..n {
        lp.bounds(i, g.lower()[i], g.upper()[i]);
    }
    // C(Au + b − y) ≤ d
    for q in 0..k.num_rows() {
        let c = k.normal(q);
        let row = a.tr_matvec(c);
        let shift = linalg::dot(c, &linalg::sub(b, y));
        lp.constraint(row, Relation::Le, k.offset(q) - shift)?;
    }
    Ok(matches!(lp.solve()?, LpOutcome::Optimal { .. }))
}

/// `min ‖x − u‖` over lattice `u` with `d(f(u) − y, K) ≤ tol_feas`.
///
/// `+∞` when no lattice point qualifies. For affine `f` with polyhedral `K`
/// an empty lattice set is an error if the preimage does meet the box.
pub fn grid_preimage_distance(map: &MultiMap, y: &[f64], x: &[f64], g: &Grid, tol_feas: f64) -> Result<ExtReal> {
    check_dim(map.dim_out(), y.len())?;
    check_dim(map.dim_in(), x.len())?;
    check_dim(map.dim_in(), g.dim())?;
    let feasible = feasible_lattice(map, y, g, tol_feas)?;
    if feasible.is_empty() {
        if preimage_meets_box(map, y, g)? {
            return Err(Error::GridTooCoarse(format!(
                "no lattice point within {tol_feas:e} of the preimage, which meets the box"
            )));
        }
        return Ok(ExtReal::Infinity);
    }
    Ok(ExtReal::Finite(nearest(&feasible, x)))
}

fn nearest(points: &[Vector], x: &[f64]) -> f64 {
    points
        .iter()
        .map(|u| u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// `max (f(x) − f(u))₊ / ‖x − u‖` over lattice points `u ≠ x`.
pub fn grid_global_slope(f: &ScalarField, x: &[f64], g: &Grid) -> Result<f64> {
    check_dim(f.dim(), x.len())?;
    check_dim(f.dim(), g.dim())?;
    let fx = match f.eval(x) {
        ExtReal::Finite(v) => v,
        ExtReal::Infinity => return Err(Error::InvalidParameter("slope at a point where f = +∞".into())),
    };
    let ratios: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let u = g.point(i);
            let d = linalg::dist(x, &u);
            match f.eval(&u) {
                ExtReal::Finite(fu) if d > 0.0 => (fx - fu).max(0.0) / d,
                _ => 0.0,
            }
        })
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Largest Frobenius norm of `f′` over the lattice, a Lipschitz bound for
/// `u ↦ d(f(u) − y, K)` on the box up to lattice effects.
fn jacobian_bound(map: &MultiMap, g: &Grid) -> Result<f64> {
    if let Some((a, _)) = map.f.as_affine() {
        return Ok(a.frobenius());
    }
    let norms = (0..g.len())
        .into_par_iter()
        .map(|i| Ok(map.f.jacobian(&g.point(i))?.frobenius()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

/// Lattice supremum of `d(x, F⁻¹(y)) / d(y, F(x))` over pairs with
/// `‖x − x₀‖ < ε`, `‖y − y₀‖ < ε`, `FLOOR_STEPS·h ≤ d(y, F(x)) < ε` and
/// `y ∈ F(x) + cone B(ȳ, δ)`.
///
/// Preimage distances come from [`grid_preimage_distance`] on a lattice over
/// `g_x`'s box doubled about its center; `h` is that lattice's step and the
/// feasibility tolerance is `L·h·√n / 2` with `L` from [`jacobian_bound`].
pub fn grid_modulus(q: &RegularityQuery, g_x: &Grid, g_y: &Grid) -> Result<ExtReal> {
    q.validate()?;
    let (n, m) = (q.map.dim_in(), q.map.dim_out());
    for d in [n, m] {
        if d > MAX_ORACLE_DIM {
            return Err(Error::DimensionCap { dim: d, cap: MAX_ORACLE_DIM });
        }
    }
    check_dim(n, g_x.dim())?;
    check_dim(m, g_y.dim())?;

    let center: Vector = g_x.lower().iter().zip(g_x.upper()).map(|(l, u)| 0.5 * (l + u)).collect();
    let lower = g_x.lower().iter().zip(&center).map(|(l, c)| c - 2.0 * (c - l)).collect();
    let upper = g_x.upper().iter().zip(&center).map(|(u, c)| c + 2.0 * (u - c)).collect();
    let per_axis = ((REFINED_BUDGET as f64).powf(1.0 / n as f64).floor() as usize).clamp(2, MAX_POINTS_PER_AXIS);
    let fine = Grid::new(lower, upper, per_axis)?;
    let h = fine.max_step();
    let lip = jacobian_bound(&q.map, &fine)?;
    let tol_feas = 0.5 * lip * h * (n as f64).sqrt() + 1e-12;
    let floor = FLOOR_STEPS * h;

    let xs: Vec<Vector> = g_x.points().into_iter().filter(|x| linalg::dist(x, &q.x0) < q.epsilon).collect();
    let ys: Vec<Vector> = g_y.points().into_iter().filter(|y| linalg::dist(y, &q.y0) < q.epsilon).collect();

    let mut sup: Option<ExtReal> = None;
    for y in &ys {
        let mut admissible = Vec::new();
        for x in &xs {
            let phi = image_distance(&q.map, x, y)?.to_f64();
            if phi >= floor && phi < q.epsilon && directional_member(&q.map, x, y, &q.dc, 1e-9 * (1.0 + phi))? {
                admissible.push((x, phi));
            }
        }
        if admissible.is_empty() {
            continue;
        }
        let feasible = feasible_lattice(&q.map, y, &fine, tol_feas)?;
        let best = if feasible.is_empty() {
            if preimage_meets_box(&q.map, y, &fine)? {
                return Err(Error::GridTooCoarse(format!("preimage of {y:?} missed by the lattice")));
            }
            ExtReal::Infinity
        } else {
            let r = admissible
                .par_iter()
                .map(|(x, phi)| nearest(&feasible, x) / phi)
                .collect::<Vec<f64>>()
                .into_iter()
                .fold(0.0, f64::max);
            ExtReal::Finite(r)
        };
        sup = Some(sup.map_or(best, |s| s.max(best)));
    }
    sup.ok_or_else(|| Error::GridTooCoarse("no admissible lattice pairs".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{builtin, halfplane_map};
    use crate::multimap::SmoothMap;

    #[test]
    fn grid_validation() {
        assert!(Grid::cube(&[0.0], 1.0, 202).is_err());
        assert!(Grid::cube(&[0.0], 1.0, 1).is_err());
        assert!(matches!(
            Grid::cube(&[0.0; 4], 1.0, 201),
            Err(Error::GridTooLarge { .. })
        ));
        let g = Grid::cube(&[0.0, 0.0], 5.0, 201).unwrap();
        assert_eq!(g.len(), 40_401);
        assert_eq!(g.point(0), vec![-5.0, -5.0]);
        assert_eq!(g.point(200), vec![5.0, -5.0]);
        assert_eq!(g.point(140), vec![2.0, -5.0]);
        assert!((g.step(0) - 0.05).abs() < 1e-15);
        assert_eq!(g.refined().unwrap().points_per_axis(), 201);
        assert_eq!(Grid::cube(&[0.0], 1.0, 11).unwrap().refined().unwrap().points_per_axis(), 21);
    }

    #[test]
    fn halfplane_preimages() {
        let m = halfplane_map();
        let g = Grid::cube(&[0.0], 5.0, 201).unwrap();
        let d = grid_preimage_distance(&m, &[2.0, 1.0], &[0.0], &g, 1e-9).unwrap();
        assert!((d.to_f64() - 2.0).abs() <= g.step(0), "{d:?}");
        let d = grid_preimage_distance(&m, &[2.0, -1.0], &[0.0], &g, 1e-9).unwrap();
        assert_eq!(d, ExtReal::Infinity);
        let d = grid_preimage_distance(&m, &[-3.0, 0.5], &[-3.0], &g, 1e-9).unwrap();
        assert_eq!(d, ExtReal::Finite(0.0));
        // 2.01 falls between lattice nodes.
        assert!(matches!(
            grid_preimage_distance(&m, &[2.01, 1.0], &[0.0], &g, 1e-9),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn slopes_on_lattice() {
        let g = Grid::cube(&[0.0], 3.0, 61).unwrap();
        let sq = ScalarField::finite(1, |u| u[0] * u[0]);
        let s = grid_global_slope(&sq, &[1.0], &g).unwrap();
        assert!(s < 2.0 && s > 2.0 - 2.0 * g.step(0), "{s}");
        let abs = ScalarField::finite(1, |u| u[0].abs());
        assert!((grid_global_slope(&abs, &[1.0], &g).unwrap() - 1.0).abs() < 1e-12);
        let c = ScalarField::finite(1, |_| 4.0);
        assert_eq!(grid_global_slope(&c, &[1.0], &g).unwrap(), 0.0);
    }

    #[test]
    fn set_distances() {
        let p = Polyhedron::from_rows(&[vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]], vec![1.0, 0.0, 0.0], 2).unwrap();
        let k = ConvexSet::Polyhedron(p);
        assert!((set_distance(&k, &[1.0, 1.0]).unwrap().to_f64() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((set_distance(&k, &[-1.0, -2.0]).unwrap().to_f64() - 5f64.sqrt()).abs() < 1e-12);
        assert!((set_distance(&k, &[3.0, -1.0]).unwrap().to_f64() - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(set_distance(&k, &[0.2, 0.2]).unwrap(), ExtReal::Finite(0.0));
        let c = ConvexSet::DirectionalCone(DirectionalCone::new(vec![0.0, 1.0], 1.0 / 2f64.sqrt()).unwrap());
        assert!(set_distance(&c, &[1.0, 1.0]).unwrap().to_f64() < 1e-12);
        assert!((set_distance(&c, &[1.0, 0.0]).unwrap().to_f64() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((set_distance(&c, &[0.0, -2.0]).unwrap().to_f64() - 2.0).abs() < 1e-12);
        let empty = ConvexSet::Polyhedron(Polyhedron::from_rows(&[vec![1.0], vec![-1.0]], vec![-1.0, -1.0], 1).unwrap());
        assert_eq!(set_distance(&empty, &[0.0]).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn membership_matches_hand_cases() {
        let inst = builtin("halfplane_directional").unwrap();
        let (m, dc) = (&inst.map, &inst.dc);
        assert!(directional_member(m, &[0.0], &[0.0, 1.0], dc, 1e-9).unwrap());
        assert!(directional_member(m, &[0.0], &[0.1, 1.0], dc, 1e-9).unwrap());
        assert!(!directional_member(m, &[0.0], &[1.0, 1.0], dc, 1e-9).unwrap());
        assert!(!directional_member(m, &[0.0], &[0.0, -0.1], dc, 1e-9).unwrap());
    }

    #[test]
    fn moduli_of_registry_instances() {
        for (name, want) in [("identity2", 1.0), ("diag_2_05", 2.0), ("halfplane_directional", 1.0)] {
            let inst = builtin(name).unwrap();
            let q = inst.query();
            let gx = Grid::cube(&inst.x0, inst.epsilon, 21).unwrap();
            let gy = Grid::cube(&inst.y0, inst.epsilon, 21).unwrap();
            let v = grid_modulus(&q, &gx, &gy).expect(name).to_f64();
            assert!((v - want).abs() <= 0.05 * want, "{name}: {v}");
        }
    }

    #[test]
    fn dimension_guard() {
        let m = MultiMap::new(SmoothMap::linear(Matrix::identity(4)), ConvexSet::origin(4)).unwrap();
        let q = RegularityQuery::new(
            m,
            vec![0.0; 4],
            vec![0.0; 4],
            DirectionalCone::new(vec![1.0, 0.0, 0.0, 0.0], 0.5).unwrap(),
            0.5,
            crate::multimap::SearchRegion::default_for(4),
        )
        .unwrap();
        let g = Grid::cube(&[0.0; 4], 0.5, 3).unwrap();
        let err = grid_modulus(&q, &g, &g).unwrap_err();
        assert!(err.is_guard(), "{err:?}");
    }
}
