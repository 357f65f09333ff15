use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::lp::{solve_lp, LpOutcome};
use crate::linalg::{self, check_dim, Matrix, Vector};
use crate::tolerances::{DYKSTRA_MAX_SWEEPS, DYKSTRA_RESIDUAL, TOL_FEAS};

/// `{z : C z ≤ d}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PolyhedronData", into = "PolyhedronData")]
pub struct Polyhedron {
    normals: Matrix,
    offsets: Vector,
    empty: OnceLock<bool>,
    axis_box: OnceLock<Option<(Vector, Vector)>>,
}

/// Serialized form: `c` as a list of rows, `d`, and the ambient dimension
/// (needed when there are no rows).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyhedronData {
    pub c: Vec<Vector>,
    pub d: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl TryFrom<PolyhedronData> for Polyhedron {
    type Error = Error;
    fn try_from(data: PolyhedronData) -> Result<Self> {
        let dim = match (data.dim, data.c.first()) {
            (Some(n), _) => n,
            (None, Some(r)) => r.len(),
            (None, None) => {
                return Err(Error::InvalidInput(
                    "polyhedron without rows needs an explicit `dim`".into(),
                ))
            }
        };
        Polyhedron::new(Matrix::from_rows(&data.c, dim)?, data.d)
    }
}

impl From<Polyhedron> for PolyhedronData {
    fn from(p: Polyhedron) -> Self {
        PolyhedronData {
            c: p.normals.row_vecs(),
            d: p.offsets,
            dim: Some(p.normals.cols()),
        }
    }
}

impl PartialEq for Polyhedron {
    fn eq(&self, other: &Self) -> bool {
        self.normals == other.normals && self.offsets == other.offsets
    }
}

/// Result of a polyhedral projection together with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyProjection {
    pub point: Vector,
    pub sweeps: usize,
    /// Stationarity residual `‖p − q − Cᵀμ‖` of the certifying multipliers,
    /// or `None` when the active-set polish could not certify the point.
    pub kkt_residual: Option<f64>,
}

impl Polyhedron {
    /// Rows with a zero normal and a negative offset would encode the empty
    /// set implicitly; they are rejected.
    pub fn new(normals: Matrix, offsets: Vector) -> Result<Self> {
        check_dim(normals.rows(), offsets.len())?;
        if !normals.is_finite() || !linalg::all_finite(&offsets) {
            return Err(Error::InvalidInput("polyhedron data must be finite".into()));
        }
        for (i, &d) in offsets.iter().enumerate() {
            if linalg::norm(normals.row(i)) == 0.0 && d < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "row {i} has a zero normal and offset {d} < 0"
                )));
            }
        }
        Ok(Polyhedron {
            normals,
            offsets,
            empty: OnceLock::new(),
            axis_box: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vector], offsets: Vector, dim: usize) -> Result<Self> {
        Polyhedron::new(Matrix::from_rows(rows, dim)?, offsets)
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron::new(Matrix::zeros(0, dim), Vec::new()).expect("no rows")
    }

    /// `{z : z ≤ 0}`.
    pub fn nonpositive_orthant(dim: usize) -> Self {
        Polyhedron::new(Matrix::identity(dim), vec![0.0; dim]).expect("valid")
    }

    /// `{point}` as `z ≤ point, −z ≤ −point`.
    pub fn point(point: &[f64]) -> Self {
        let n = point.len();
        let mut rows = Vec::with_capacity(2 * n);
        let mut d = Vec::with_capacity(2 * n);
        for (i, v) in point.iter().enumerate() {
            rows.push(linalg::unit(n, i));
            d.push(*v);
            rows.push(linalg::scale(&linalg::unit(n, i), -1.0));
            d.push(-v);
        }
        Polyhedron::from_rows(&rows, d, n).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.normals.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.normals.rows()
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        self.normals.row(i)
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn normals(&self) -> &Matrix {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Largest constraint violation `max_i [c_i·z − d_i]₊`.
    /// Coordinate bounds when every row has at most one nonzero entry and
    /// the bounds are consistent; projection is then a clamp.
    fn axis_box(&self) -> Option<&(Vector, Vector)> {
        self.axis_box
            .get_or_init(|| {
                let n = self.dim();
                let mut lo = vec![f64::NEG_INFINITY; n];
                let mut hi = vec![f64::INFINITY; n];
                for i in 0..self.num_rows() {
                    let row = self.normal(i);
                    let mut nz = row.iter().enumerate().filter(|(_, a)| **a != 0.0);
                    match (nz.next(), nz.next()) {
                        (None, _) => {}
                        (Some((j, &a)), None) => {
                            let b = self.offsets[i] / a;
                            if a > 0.0 {
                                hi[j] = hi[j].min(b);
                            } else {
                                lo[j] = lo[j].max(b);
                            }
                        }
                        _ => return None,
                    }
                }
                lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some((lo, hi))
            })
            .as_ref()
    }

    pub fn violation(&self, z: &[f64]) -> f64 {
        (0..self.num_rows()).fold(0.0, |m, i| {
            m.max(linalg::dot(self.normal(i), z) - self.offsets[i])
        })
    }

    /// Emptiness via an LP feasibility phase; cached after the first call.
    pub fn is_empty(&self) -> Result<bool> {
        if let Some(e) = self.empty.get() {
            return Ok(*e);
        }
        let e = solve_lp(&vec![0.0; self.dim()], self)? == LpOutcome::Infeasible;
        let _ = self.empty.set(e);
        Ok(e)
    }

    /// Product with another polyhedron: `{(a, b) : a ∈ self, b ∈ other}`.
    pub fn cartesian(&self, other: &Polyhedron) -> Polyhedron {
        let (n1, n2) = (self.dim(), other.dim());
        let mut rows = Vec::with_capacity(self.num_rows() + other.num_rows());
        for i in 0..self.num_rows() {
            let mut r = self.normal(i).to_vec();
            r.resize(n1 + n2, 0.0);
            rows.push(r);
        }
        for i in 0..other.num_rows() {
            let mut r = vec![0.0; n1];
            r.extend_from_slice(other.normal(i));
            rows.push(r);
        }
        let mut d = self.offsets.clone();
        d.extend_from_slice(&other.offsets);
        Polyhedron::from_rows(&rows, d, n1 + n2).expect("valid blocks")
    }

    /// `{u : C (A u + shift) ≤ d}`, the preimage under an affine map.
    pub fn pullback(&self, a: &Matrix, shift: &[f64]) -> Result<Polyhedron> {
        check_dim(self.dim(), a.rows())?;
        check_dim(self.dim(), shift.len())?;
        let normals = self.normals.matmul(a);
        let c_shift = self.normals.matvec(shift);
        let offsets: Vector = self
            .offsets
            .iter()
            .zip(&c_shift)
            .map(|(d, cs)| d - cs)
            .collect();
        // A pulled-back row can lose its normal entirely; it is then either
        // trivially satisfied (dropped) or the preimage is empty.
        let mut rows = Vec::new();
        let mut kept = Vec::new();
        let mut infeasible = false;
        for (i, &off) in offsets.iter().enumerate() {
            let r = normals.row(i);
            if linalg::norm_inf(r) <= 1e-14 * (1.0 + linalg::norm_inf(self.normal(i))) {
                if off < -TOL_FEAS {
                    infeasible = true;
                }
                continue;
            }
            rows.push(r.to_vec());
            kept.push(off);
        }
        if infeasible {
            // Encode emptiness explicitly: 0 ≤ -1 is not allowed, so use an
            // inconsistent pair of halfspaces instead.
            let n = a.cols();
            let mut e = vec![0.0; n];
            if n > 0 {
                e[0] = 1.0;
            }
            rows = vec![e.clone(), linalg::scale(&e, -1.0)];
            kept = vec![-1.0, -1.0];
        }
        Polyhedron::from_rows(&rows, kept, a.cols())
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        if self.violation(z) <= 0.0 {
            return Ok(true);
        }
        if self.is_empty()? {
            return Ok(false);
        }
        Ok(linalg::dist(z, &self.project(z)?) <= tol)
    }

    pub fn project(&self, p: &[f64]) -> Result<Vector> {
        Ok(self.project_detailed(p)?.point)
    }

    /// Dykstra's alternating projection over the halfspaces, followed by an
    /// active-set polish whose multipliers certify the KKT conditions.
    pub fn project_detailed(&self, p: &[f64]) -> Result<PolyProjection> {
        check_dim(self.dim(), p.len())?;
        if !linalg::all_finite(p) {
            return Err(Error::InvalidInput("projection of a non-finite point".into()));
        }
        if self.violation(p) <= 0.0 {
            return Ok(PolyProjection {
                point: p.to_vec(),
                sweeps: 0,
                kkt_residual: Some(0.0),
            });
        }
        if let Some((lo, hi)) = self.axis_box() {
            let point = p.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect();
            return Ok(PolyProjection {
                point,
                sweeps: 0,
                kkt_residual: Some(0.0),
            });
        }
        if self.is_empty()? {
            return Err(Error::EmptySet);
        }
        let (x, sweeps) = self.dykstra(p);
        match self.polish(p, &x) {
            Some((q, res)) => Ok(PolyProjection {
                point: q,
                sweeps,
                kkt_residual: Some(res),
            }),
            None => match self.least_distance(p) {
                Some((q, res)) => Ok(PolyProjection {
                    point: q,
                    sweeps,
                    kkt_residual: Some(res),
                }),
                None => Ok(PolyProjection {
                    point: x,
                    sweeps,
                    kkt_residual: None,
                }),
            },
        }
    }

    fn dykstra(&self, p: &[f64]) -> (Vector, usize) {
        let m = self.num_rows();
        let sq: Vec<f64> = (0..m).map(|i| linalg::dot(self.normal(i), self.normal(i))).collect();
        let mut x = p.to_vec();
        let mut incr = vec![vec![0.0; p.len()]; m];
        let scale = 1.0 + linalg::norm(p);
        for sweep in 1..=DYKSTRA_MAX_SWEEPS {
            let start = x.clone();
            for i in 0..m {
                if sq[i] == 0.0 {
                    continue;
                }
                let y = linalg::add(&x, &incr[i]);
                let excess = linalg::dot(self.normal(i), &y) - self.offsets[i];
                let next = if excess > 0.0 {
                    linalg::axpy(&y, -excess / sq[i], self.normal(i))
                } else {
                    y.clone()
                };
                incr[i] = linalg::sub(&y, &next);
                x = next;
            }
            let moved = linalg::dist(&start, &x);
            if moved <= DYKSTRA_RESIDUAL * scale && self.violation(&x) <= DYKSTRA_RESIDUAL * scale
            {
                return (x, sweep);
            }
        }
        (x, DYKSTRA_MAX_SWEEPS)
    }

    /// Primal active-set refinement seeded with the rows active at the
    /// Dykstra iterate. Returns the certified projection and its stationarity
    /// residual.
    fn polish(&self, p: &[f64], x: &[f64]) -> Option<(Vector, f64)> {
        let m = self.num_rows();
        let scale = 1.0 + linalg::norm_inf(p) + linalg::norm_inf(&self.offsets);
        let act_tol = 1e-7 * scale;
        let mut working: Vec<usize> = (0..m)
            .filter(|&i| {
                linalg::norm(self.normal(i)) > 0.0
                    && linalg::dot(self.normal(i), x) >= self.offsets[i] - act_tol
            })
            .collect();
        for _ in 0..(4 * m + 8) {
            let refs: Vec<&[f64]> = working.iter().map(|&i| self.normal(i)).collect();
            let keep = linalg::independent_rows(&refs, 1e-10);
            working = keep.iter().map(|&k| working[k]).collect();
            let (q, mu) = self.equality_projection(p, &working)?;
            if let Some((pos, _)) = mu
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < -1e-12 * scale)
                .min_by(|a, b| a.1.total_cmp(b.1))
            {
                working.remove(pos);
                continue;
            }
            let viol = (0..m)
                .filter(|i| !working.contains(i))
                .map(|i| (i, linalg::dot(self.normal(i), &q) - self.offsets[i]))
                .filter(|(_, v)| *v > TOL_FEAS * scale * 1e-3)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, _)) = viol {
                working.push(i);
                continue;
            }
            let mut r = linalg::sub(p, &q);
            for (k, &i) in working.iter().enumerate() {
                r = linalg::axpy(&r, -mu[k], self.normal(i));
            }
            return Some((q, linalg::norm(&r)));
        }
        None
    }

    /// Projection as a least-distance program: with `u = q − p`, minimize
    /// `‖u‖` subject to `−C u ≥ C p − d`, solved through nonnegative least
    /// squares on `[−Cᵀ; (Cp − d)ᵀ]` against `e_{n+1}`. Robust to nearly
    /// dependent active rows, where the active-set polish can cycle.
    fn least_distance(&self, p: &[f64]) -> Option<(Vector, f64)> {
        let (n, m) = (self.dim(), self.num_rows());
        let cols: Vec<Vector> = (0..m)
            .map(|i| {
                let c = self.normal(i);
                let mut col: Vector = c.iter().map(|v| -v).collect();
                col.push(linalg::dot(c, p) - self.offsets[i]);
                col
            })
            .collect();
        let mut target = vec![0.0; n + 1];
        target[n] = 1.0;
        let w = linalg::nnls(&cols, &target);
        let mut r: Vector = target.iter().map(|t| -t).collect();
        for (c, wj) in cols.iter().zip(&w) {
            r = linalg::axpy(&r, *wj, c);
        }
        if r[n].abs() <= 1e-14 {
            return None;
        }
        let u: Vector = r[..n].iter().map(|v| -v / r[n]).collect();
        let q = linalg::add(p, &u);
        let scale = 1.0 + linalg::norm_inf(p) + linalg::norm_inf(&self.offsets);
        if self.violation(&q) > TOL_FEAS * scale {
            return None;
        }
        // Multipliers μ = w / (−r_{n+1}) give p − q = Cᵀμ.
        let mut res = linalg::sub(p, &q);
        for (i, wj) in w.iter().enumerate() {
            res = linalg::axpy(&res, wj / r[n], self.normal(i));
        }
        Some((q, linalg::norm(&res)))
    }

    /// Projection onto `{z : c_i·z = d_i, i ∈ rows}` for independent rows,
    /// with the multipliers `μ` such that `p − q = Σ μ_i c_i`.
    fn equality_projection(&self, p: &[f64], rows: &[usize]) -> Option<(Vector, Vector)> {
        if rows.is_empty() {
            return Some((p.to_vec(), Vec::new()));
        }
        let k = rows.len();
        let mut gram = Matrix::zeros(k, k);
        let mut rhs = vec![0.0; k];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                gram[(a, b)] = linalg::dot(self.normal(i), self.normal(j));
            }
            rhs[a] = linalg::dot(self.normal(i), p) - self.offsets[i];
        }
        let mu = linalg::solve(&gram, &rhs)?;
        let mut q = p.to_vec();
        for (a, &i) in rows.iter().enumerate() {
            q = linalg::axpy(&q, -mu[a], self.normal(i));
        }
        Some((q, mu))
    }

    pub fn distance(&self, p: &[f64]) -> Result<f64> {
        Ok(linalg::dist(p, &self.project(p)?))
    }

    /// Rows active at `k`, whose conic hull is the normal cone `N(P, k)`.
    pub fn normal_cone_generators(&self, k: &[f64], tol_active: f64) -> Result<Vec<Vector>> {
        check_dim(self.dim(), k.len())?;
        if self.violation(k) > 0.0 {
            let d = if self.is_empty()? {
                f64::INFINITY
            } else {
                self.distance(k)?
            };
            if d > tol_active {
                return Err(Error::NotInSet {
                    distance: d,
                    tol: tol_active,
                });
            }
        }
        Ok((0..self.num_rows())
            .filter(|&i| {
                linalg::norm(self.normal(i)) > 0.0
                    && linalg::dot(self.normal(i), k) >= self.offsets[i] - tol_active
            })
            .map(|i| self.normal(i).to_vec())
            .collect())
    }

    /// The tangent cone `{v : c_i·v ≤ 0, i active at k}` as a polyhedron.
    pub fn tangent_cone(&self, k: &[f64], tol_active: f64) -> Result<Polyhedron> {
        let gens = self.normal_cone_generators(k, tol_active)?;
        let n = self.dim();
        let zeros = vec![0.0; gens.len()];
        Polyhedron::from_rows(&gens, zeros, n)
    }

    /// Projection onto `N(P, k)` by Moreau's decomposition: `p − Π_T(p)`
    /// where `T` is the tangent cone, the polar of the normal cone.
    pub fn project_onto_normal_cone(&self, k: &[f64], p: &[f64], tol_active: f64) -> Result<Vector> {
        let t = self.tangent_cone(k, tol_active)?;
        Ok(linalg::sub(p, &t.project(p)?))
    }
}

/// `normal_cone_generators` as a free function.
pub fn normal_cone_generators(p: &Polyhedron, k: &[f64], tol_active: f64) -> Result<Vec<Vector>> {
    p.normal_cone_generators(k, tol_active)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrant() -> Polyhedron {
        Polyhedron::nonpositive_orthant(2)
    }

    #[test]
    fn halfspace_clamp() {
        let p = Polyhedron::from_rows(&[vec![1.0]], vec![0.0], 1).unwrap();
        assert_eq!(p.project(&[2.0]).unwrap(), vec![0.0]);
        assert_eq!(p.distance(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn orthant_corner() {
        let q = quadrant().project(&[1.0, 1.0]).unwrap();
        assert!(linalg::norm(&q) < 1e-12);
        assert!((quadrant().distance(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn oblique_constraints_are_certified() {
        // Two nearly parallel halfspaces make plain Dykstra slow; the polish
        // still lands on the exact vertex.
        let p = Polyhedron::from_rows(
            &[vec![1.0, 0.01], vec![1.0, -0.01]],
            vec![0.0, 0.0],
            2,
        )
        .unwrap();
        let proj = p.project_detailed(&[5.0, 0.0]).unwrap();
        assert!(proj.kkt_residual.unwrap() < 1e-9);
        assert!(linalg::norm(&proj.point) < 1e-9, "{:?}", proj.point);
    }

    #[test]
    fn empty_polyhedron() {
        let p = Polyhedron::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, -1.0], 1).unwrap();
        assert!(p.is_empty().unwrap());
        assert_eq!(p.project(&[0.5]), Err(Error::EmptySet));
    }

    #[test]
    fn zero_row_with_negative_offset_rejected() {
        assert!(Polyhedron::from_rows(&[vec![0.0, 0.0]], vec![-1.0], 2).is_err());
        assert!(Polyhedron::from_rows(&[vec![0.0, 0.0]], vec![1.0], 2).is_ok());
    }

    #[test]
    fn normal_cone_examples() {
        let q = quadrant();
        assert_eq!(q.normal_cone_generators(&[0.0, -1.0], 1e-7).unwrap(), vec![vec![1.0, 0.0]]);
        assert!(q.normal_cone_generators(&[-1.0, -1.0], 1e-7).unwrap().is_empty());
        assert_eq!(
            q.normal_cone_generators(&[0.0, 0.0], 1e-7).unwrap(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        );
        assert!(matches!(
            q.normal_cone_generators(&[1.0, 0.0], 1e-7),
            Err(Error::NotInSet { .. })
        ));
    }

    #[test]
    fn normal_cone_projection() {
        let q = quadrant();
        // At the corner N = nonnegative orthant.
        let v = q.project_onto_normal_cone(&[0.0, 0.0], &[1.0, -2.0], 1e-7).unwrap();
        assert!(linalg::dist(&v, &[1.0, 0.0]) < 1e-12);
        // On the face z1 = 0, N = cone{e1}.
        let v = q.project_onto_normal_cone(&[0.0, -1.0], &[-1.0, 3.0], 1e-7).unwrap();
        assert!(linalg::norm(&v) < 1e-12);
    }

    #[test]
    fn pullback_drops_vanishing_rows() {
        // K = {z1 = 0, z2 ≤ 0}, f(x) = (x, 0) - y with y = (2, 1).
        let k = Polyhedron::from_rows(
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0, 0.0],
            2,
        )
        .unwrap();
        let a = Matrix::from_rows(&[vec![1.0], vec![0.0]], 1).unwrap();
        let pre = k.pullback(&a, &[-2.0, -1.0]).unwrap();
        assert!((pre.distance(&[0.0]).unwrap() - 2.0).abs() < 1e-12);
        let pre = k.pullback(&a, &[-2.0, 1.0]).unwrap();
        assert!(pre.is_empty().unwrap());
    }

    #[test]
    fn serde_round_trip() {
        let p = quadrant();
        let s = serde_json::to_string(&p).unwrap();
        let back: Polyhedron = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
