//! Set-valued maps `F(x) = f(x) − K` with smooth `f` and closed convex `K`.
//!
//! With this representation `y ∈ F(x)` exactly when `f(x) − y ∈ K`, so
//! `d(y, F(x)) = d(f(x) − y, K)` and all distance questions reduce to
//! projections onto `K`.

mod region;
mod smooth;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use region::{SearchRegion, MAX_GRID_NODES};
pub use smooth::{MapData, SmoothMap, Term};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::{ConvexSet, DirectionalCone};
use crate::linalg::{self, check_dim, Matrix, Vector};
use crate::sampling::{sample_rng, stream, unit_sphere};
use crate::tolerances::TOL_MEMBER;

const ALTERNATION_CAP: usize = 500;
const FALLBACK_LAMBDAS: usize = 64;
const CLOSURE_LEVELS: i32 = 5;
const CLOSURE_POINTS: u64 = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiMap {
    pub f: SmoothMap,
    #[serde(rename = "K")]
    pub k: ConvexSet,
}

impl MultiMap {
    pub fn new(f: SmoothMap, k: ConvexSet) -> Result<Self> {
        check_dim(f.dim_out(), k.dim())?;
        k.validate()?;
        Ok(MultiMap { f, k })
    }

    pub fn dim_in(&self) -> usize {
        self.f.dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.f.dim_out()
    }

    /// `f(x) − y`, the point whose distance to `K` is `d(y, F(x))`.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> Result<Vector> {
        check_dim(self.dim_out(), y.len())?;
        Ok(linalg::sub(&self.f.eval(x)?, y))
    }

    pub fn image_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self.k.distance(&self.residual(x, y)?)? {
            ExtReal::Finite(d) => Ok(d),
            ExtReal::Infinity => Err(Error::EmptySet),
        }
    }

    pub fn contains(&self, x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
        Ok(self.image_distance(x, y)? <= tol)
    }
}

/// `d(y, F(x))`.
pub fn image_distance(map: &MultiMap, x: &[f64], y: &[f64]) -> Result<f64> {
    map.image_distance(x, y)
}

/// Estimate of `d(x, F⁻¹(y))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageEstimate {
    pub value: ExtReal,
    /// Nearest preimage point found, if any.
    pub witness: Option<Vector>,
    /// `true` when `value` is only an upper bound from local solves.
    pub heuristic: bool,
}

/// `d(x, F⁻¹(y))`. Exact (up to projection tolerance) for affine `f` with a
/// polyhedral `K`; otherwise a multi-start Gauss-Newton upper bound flagged
/// `heuristic`.
pub fn preimage_distance(
    map: &MultiMap,
    y: &[f64],
    x: &[f64],
    region: &SearchRegion,
) -> Result<PreimageEstimate> {
    check_dim(map.dim_in(), x.len())?;
    check_dim(map.dim_out(), y.len())?;
    if let (Some((a, b)), Some(poly)) = (map.f.as_affine(), map.k.as_polyhedron()) {
        let pulled = poly.pullback(a, &linalg::sub(b, y))?;
        if pulled.is_empty()? {
            return Ok(PreimageEstimate {
                value: ExtReal::Infinity,
                witness: None,
                heuristic: false,
            });
        }
        let u = pulled.project(x)?;
        return Ok(PreimageEstimate {
            value: ExtReal::Finite(linalg::dist(x, &u)),
            witness: Some(u),
            heuristic: false,
        });
    }
    nonlinear_preimage(map, y, x, region)
}

fn feasibility_gap(map: &MultiMap, u: &[f64], y: &[f64]) -> Result<f64> {
    map.image_distance(u, y)
}

fn nonlinear_preimage(
    map: &MultiMap,
    y: &[f64],
    x: &[f64],
    region: &SearchRegion,
) -> Result<PreimageEstimate> {
    check_dim(map.dim_in(), region.dim())?;
    let scale = 1.0 + linalg::norm_inf(y);
    let feas_tol = 1e-9 * scale;
    let mut starts: Vec<Vector> = vec![x.to_vec()];
    starts.extend(region.corners());
    // Feasible lattice nodes close to x make good extra starts.
    let nodes = region.grid_nodes();
    let mut feasible_nodes: Vec<(f64, Vector)> = nodes
        .into_iter()
        .filter_map(|u| {
            let gap = feasibility_gap(map, &u, y).ok()?;
            (gap <= TOL_MEMBER * scale).then(|| (linalg::dist(x, &u), u))
        })
        .collect();
    feasible_nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.extend(feasible_nodes.iter().take(4).map(|(_, u)| u.clone()));
    for i in 0..8u64 {
        let mut rng = sample_rng(region.seed, stream::PREIMAGE, i);
        let h = region.half_width();
        starts.push(linalg::axpy(x, h * 0.25, &unit_sphere(&mut rng, x.len())));
    }

    let results: Vec<Option<Vector>> = starts
        .par_iter()
        .map(|s| local_preimage(map, y, x, s, feas_tol).ok().flatten())
        .collect();
    let mut best: Option<(f64, Vector)> = None;
    for u in results.into_iter().flatten().chain(feasible_nodes.into_iter().map(|(_, u)| u)) {
        let d = linalg::dist(x, &u);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, u));
        }
    }
    Ok(match best {
        Some((d, u)) => PreimageEstimate {
            value: ExtReal::Finite(d),
            witness: Some(u),
            heuristic: true,
        },
        None => PreimageEstimate {
            value: ExtReal::Infinity,
            witness: None,
            heuristic: true,
        },
    })
}

/// Minimum-norm Gauss-Newton correction toward `f(u) − y ∈ K`, holding the
/// projection target fixed per step.
fn restore(map: &MultiMap, y: &[f64], start: &[f64], feas_tol: f64) -> Result<Option<Vector>> {
    let mut u = start.to_vec();
    for _ in 0..60 {
        let r = map.residual(&u, y)?;
        let target = match map.k.project(&r) {
            Ok(t) => t,
            Err(Error::EmptySet) => return Ok(None),
            Err(e) => return Err(e),
        };
        let g = linalg::sub(&r, &target);
        let gn = linalg::norm(&g);
        if gn <= feas_tol {
            return Ok(Some(u));
        }
        let jac = map.f.jacobian(&u)?;
        let step = min_norm_step(&jac, &g);
        // Backtrack on the gap.
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand = linalg::axpy(&u, -t, &step);
            if feasibility_gap(map, &cand, y)? < gn {
                u = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return Ok(None);
        }
    }
    Ok((feasibility_gap(map, &u, y)? <= feas_tol).then_some(u))
}

/// `Jᵀ (J Jᵀ + μ I)⁻¹ g`, a damped minimum-norm solution of `J s = g`.
fn min_norm_step(jac: &Matrix, g: &[f64]) -> Vector {
    let m = jac.rows();
    let jjt = jac.matmul(&jac.transpose());
    let trace: f64 = (0..m).map(|i| jjt[(i, i)]).sum();
    let mut damped = jjt.clone();
    let mu = 1e-10 * (1.0 + trace);
    for i in 0..m {
        damped[(i, i)] += mu;
    }
    match linalg::solve(&damped, g) {
        Some(z) => jac.tr_matvec(&z),
        None => jac.tr_matvec(g),
    }
}

/// Restores feasibility from `start`, then repeatedly steps toward `x` and
/// restores again while the distance to `x` decreases.
fn local_preimage(
    map: &MultiMap,
    y: &[f64],
    x: &[f64],
    start: &[f64],
    feas_tol: f64,
) -> Result<Option<Vector>> {
    let Some(mut u) = restore(map, y, start, feas_tol)? else {
        return Ok(None);
    };
    let mut best = linalg::dist(&u, x);
    let mut alpha = 1.0;
    for _ in 0..200 {
        if alpha < 1e-12 || best == 0.0 {
            break;
        }
        let trial = linalg::axpy(&u, alpha, &linalg::sub(x, &u));
        match restore(map, y, &trial, feas_tol)? {
            Some(v) if linalg::dist(&v, x) < best * (1.0 - 1e-14) => {
                best = linalg::dist(&v, x);
                u = v;
                alpha = (alpha * 2.0).min(1.0);
            }
            _ => alpha *= 0.5,
        }
    }
    Ok(Some(u))
}

/// Outcome of the test `y ∈ F(x) + cone B(ȳ, δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// Smallest `d(f(x) − y + z, K)` found over `z` in the cone.
    pub gap: f64,
    /// Alternating projections and the λ-grid fallback reach the same verdict.
    pub certified: bool,
}

/// Decides `y ∈ F(x) + cone B(ȳ, δ)` within `tol`.
///
/// Writing `w = f(x) − y`, membership means `w + z ∈ K` for some `z` in the
/// cone, i.e. the sets `K` and `w + cone` meet. Alternating projections
/// between them give an upper bound on their distance; a fallback scans 64
/// log-spaced multipliers using `min_{z ∈ λB(ȳ,δ)} d(w + z, K) = [d(w + λȳ, K) − λδ]₊`.
pub fn directional_membership(
    map: &MultiMap,
    x: &[f64],
    y: &[f64],
    dc: &DirectionalCone,
    tol: f64,
) -> Result<Membership> {
    check_dim(map.dim_out(), dc.dim())?;
    let w = map.residual(x, y)?;
    if map.k.is_empty()? {
        return Ok(Membership {
            member: false,
            gap: f64::INFINITY,
            certified: true,
        });
    }
    if dc.is_whole_space() {
        return Ok(Membership {
            member: true,
            gap: 0.0,
            certified: true,
        });
    }

    // Alternating projections: a ∈ K, b ∈ w + cone.
    let mut a = map.k.project(&w)?;
    let mut gap_alt = linalg::dist(&a, &w);
    if gap_alt > tol {
        for it in 0..ALTERNATION_CAP {
            let b = linalg::add(&w, &dc.project(&linalg::sub(&a, &w))?);
            let a_next = map.k.project(&b)?;
            let gap = linalg::dist(&a_next, &b);
            let moved = linalg::dist(&a_next, &a);
            a = a_next;
            let gain = gap_alt - gap;
            gap_alt = gap_alt.min(gap);
            if gap_alt <= tol || moved <= 1e-12 * (1.0 + linalg::norm(&a)) {
                break;
            }
            // Linear convergence only slows down: stop once the current
            // rate cannot reach `tol` within the remaining iterations.
            if gap_alt - gain.max(0.0) * (ALTERNATION_CAP - it) as f64 > tol {
                break;
            }
        }
    }

    let gap_fb = fallback_gap(map, &w, dc, tol)?;
    let gap = gap_alt.min(gap_fb);
    Ok(Membership {
        member: gap <= tol,
        gap,
        certified: (gap_alt <= tol) == (gap_fb <= tol),
    })
}

fn fallback_gap(map: &MultiMap, w: &[f64], dc: &DirectionalCone, tol: f64) -> Result<f64> {
    let gap_at = |lambda: f64| -> Result<f64> {
        let p = linalg::axpy(w, lambda, dc.ybar());
        let d = map.k.distance(&p)?.to_f64();
        Ok((d - lambda * dc.delta()).max(0.0))
    };
    let spread = (linalg::norm(dc.ybar()) - dc.delta()).max(1e-12);
    let hi = 10.0 * (linalg::norm(w) + 1.0) / spread;
    let lo = hi * 1e-9;
    let ratio = (hi / lo).powf(1.0 / (FALLBACK_LAMBDAS - 1) as f64);
    let mut grid = vec![0.0];
    let mut lambda = lo;
    for _ in 0..FALLBACK_LAMBDAS {
        grid.push(lambda);
        lambda *= ratio;
    }
    let vals = grid.iter().map(|&l| gap_at(l)).collect::<Result<Vec<f64>>>()?;
    let (arg, mut best) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(i, b), (j, &v)| if v < b { (j, v) } else { (i, b) });
    if best == 0.0 {
        return Ok(0.0);
    }
    // The objective is convex in λ; refine between the grid neighbours.
    let (mut a, mut b) = (grid[arg.saturating_sub(1)], grid[(arg + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (gap_at(c)?, gap_at(d)?);
    // The gap is Lipschitz in λ with constant ‖ȳ‖ + δ.
    let lip = linalg::norm(dc.ybar()) + dc.delta();
    for _ in 0..60 {
        if fc.min(fd) <= tol || lip * (b - a) <= 0.01 * tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = gap_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = gap_at(d)?;
        }
    }
    best = best.min(fc).min(fd);
    Ok(best)
}

/// Relative lower semicontinuous envelope `φ_V(x, y)` for `V = V(ȳ, δ)`.
///
/// Equals `d(y, F(x))` when `x` lies in the closure of `V_y`, probed through
/// membership at `x` and on spheres of radii `tol·2⁻ᵏ`, and `+∞` otherwise.
pub fn envelope(
    map: &MultiMap,
    dc: &DirectionalCone,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<ExtReal> {
    if in_closure(map, dc, x, y, tol)? {
        Ok(ExtReal::Finite(map.image_distance(x, y)?))
    } else {
        Ok(ExtReal::Infinity)
    }
}

/// `x ∈ cl V_y`, probed numerically.
pub fn in_closure(
    map: &MultiMap,
    dc: &DirectionalCone,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<bool> {
    let at_x = directional_membership(map, x, y, dc, tol)?;
    if at_x.member {
        return Ok(true);
    }
    // The gap is Lipschitz in x with the constant of f, so probes within
    // `tol` cannot close a gap much larger than `tol`.
    let lip = map.f.jacobian(x)?.frobenius() + 1.0;
    if at_x.gap > tol * (1.0 + 2.0 * lip) {
        return Ok(false);
    }
    let n = x.len();
    for k in 0..CLOSURE_LEVELS {
        let radius = tol * 2f64.powi(-k);
        for i in 0..CLOSURE_POINTS {
            let dir = if n == 1 {
                vec![if i % 2 == 0 { 1.0 } else { -1.0 }]
            } else {
                unit_sphere(&mut sample_rng(0, stream::CLOSURE, i), n)
            };
            let u = linalg::axpy(x, radius, &dir);
            if directional_membership(map, &u, y, dc, tol)?.member {
                return Ok(true);
            }
            if n == 1 && i >= 1 {
                break;
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polyhedron;

    /// f(x) = (x, 0), K = {z₁ = 0, z₂ ≤ 0}: F(x) = {(x, s) : s ≥ 0}.
    fn halfplane() -> MultiMap {
        let f = SmoothMap::affine(Matrix::from_rows(&[vec![1.0], vec![0.0]], 1).unwrap(), vec![0.0, 0.0])
            .unwrap();
        let k = Polyhedron::from_rows(
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0; 3],
            2,
        )
        .unwrap();
        MultiMap::new(f, ConvexSet::Polyhedron(k)).unwrap()
    }

    fn up(delta: f64) -> DirectionalCone {
        DirectionalCone::new(vec![0.0, 1.0], delta).unwrap()
    }

    #[test]
    fn image_distance_examples() {
        let m = halfplane();
        assert!((image_distance(&m, &[0.0], &[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((image_distance(&m, &[0.0], &[1.0, -2.0]).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert!(image_distance(&m, &[2.0], &[2.0, 5.0]).unwrap() < 1e-12);
    }

    #[test]
    fn preimage_distance_examples() {
        let m = halfplane();
        let r = SearchRegion::default_for(1);
        let p = preimage_distance(&m, &[2.0, 1.0], &[0.0], &r).unwrap();
        assert!((p.value.to_f64() - 2.0).abs() < 1e-12);
        assert!(!p.heuristic);
        let p = preimage_distance(&m, &[2.0, -1.0], &[0.0], &r).unwrap();
        assert_eq!(p.value, ExtReal::Infinity);
        let p = preimage_distance(&m, &[0.0, 0.0], &[0.0], &r).unwrap();
        assert_eq!(p.value, ExtReal::Finite(0.0));
    }

    #[test]
    fn membership_examples() {
        let m = halfplane();
        let dc = up(0.2);
        let yes = directional_membership(&m, &[0.0], &[0.05, 0.5], &dc, TOL_MEMBER).unwrap();
        assert!(yes.member && yes.certified);
        let no = directional_membership(&m, &[0.0], &[0.3, 0.5], &dc, TOL_MEMBER).unwrap();
        assert!(!no.member && no.certified);
        let no = directional_membership(&m, &[0.0], &[0.0, -0.1], &dc, TOL_MEMBER).unwrap();
        assert!(!no.member);
    }

    #[test]
    fn envelope_examples() {
        let m = halfplane();
        let dc = up(0.2);
        let v = envelope(&m, &dc, &[0.0], &[0.05, 0.5], TOL_MEMBER).unwrap();
        assert!((v.to_f64() - 0.05).abs() < 1e-12);
        assert_eq!(envelope(&m, &dc, &[0.0], &[0.0, -0.1], TOL_MEMBER).unwrap(), ExtReal::Infinity);
        assert_eq!(envelope(&m, &dc, &[1.0], &[1.0, 2.0], TOL_MEMBER).unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn nonlinear_preimage_upper_bound() {
        // f(x) = x², K = {0}: F⁻¹(y) = {±√y}.
        let f = SmoothMap::polynomial(1, vec![vec![Term { coef: 1.0, powers: vec![2] }]]).unwrap();
        let m = MultiMap::new(f, ConvexSet::origin(1)).unwrap();
        let r = SearchRegion::default_for(1);
        let p = preimage_distance(&m, &[4.0], &[1.0], &r).unwrap();
        assert!(p.heuristic);
        assert!((p.value.to_f64() - 1.0).abs() < 1e-6, "{p:?}");
        let p = preimage_distance(&m, &[-1.0], &[1.0], &r).unwrap();
        assert_eq!(p.value, ExtReal::Infinity);
    }

    #[test]
    fn ball_constraint_uses_local_solver() {
        // f = identity on ℝ², K = unit ball: F⁻¹(y) = B(-y... ) i.e. {u : ‖u − y‖ ≤ 1}.
        let m = MultiMap::new(
            SmoothMap::linear(Matrix::identity(2)),
            ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
        )
        .unwrap();
        let r = SearchRegion::default_for(2);
        let p = preimage_distance(&m, &[3.0, 0.0], &[0.0, 0.0], &r).unwrap();
        assert!((p.value.to_f64() - 2.0).abs() < 1e-6, "{p:?}");
    }
}
