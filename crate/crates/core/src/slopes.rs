//! Strong-slope estimators and the error-bound certificate.
//!
//! The local slope `|∇f|(x)` is a limsup and the global slope `|Γf|(x)` a
//! supremum of `[f(x) − f(y)]₊ / ‖x − y‖`. Both are estimated from below by
//! sampling followed by a short coordinate-ascent polish.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::DirectionalCone;
use crate::linalg::{self, Vector};
use crate::multimap::{envelope, MultiMap, SearchRegion};
use crate::sampling::{in_ball, in_box, sample_rng, stream, unit_sphere};

const POLISH_STEPS: usize = 20;
const TAIL_LEVELS: usize = 3;
const LADDER_DEPTH: i32 = 30;
const LADDER_RANDOM_DIRS: u64 = 16;
const MAX_WITNESSES: usize = 10;

type FieldFn = dyn Fn(&[f64]) -> ExtReal + Send + Sync;

/// Extended-real function on `ℝ^dim`.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: Arc<FieldFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> ExtReal + Send + Sync + 'static) -> Self {
        ScalarField {
            dim,
            eval: Arc::new(eval),
        }
    }

    /// Wraps a real-valued function.
    pub fn finite(dim: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::new(dim, move |x| ExtReal::Finite(eval(x)))
    }

    /// `u ↦ d(y, F(u))`.
    pub fn residual(map: &MultiMap, y: &[f64]) -> Result<Self> {
        linalg::check_dim(map.dim_out(), y.len())?;
        let (map, y) = (map.clone(), y.to_vec());
        Ok(ScalarField::new(map.dim_in(), move |u| {
            map.image_distance(u, &y)
                .map(ExtReal::Finite)
                .unwrap_or(ExtReal::Infinity)
        }))
    }

    /// `u ↦ φ_V(u, y)` for `V = V(ȳ, δ)`.
    pub fn envelope_section(
        map: &MultiMap,
        dc: &DirectionalCone,
        y: &[f64],
        tol: f64,
    ) -> Result<Self> {
        linalg::check_dim(map.dim_out(), y.len())?;
        linalg::check_dim(map.dim_out(), dc.dim())?;
        let (map, dc, y) = (map.clone(), dc.clone(), y.to_vec());
        Ok(ScalarField::new(map.dim_in(), move |u| {
            envelope(&map, &dc, u, &y, tol).unwrap_or(ExtReal::Infinity)
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> ExtReal {
        (self.eval)(x)
    }

    /// `c · f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        ScalarField::new(self.dim, move |x| match inner(x) {
            ExtReal::Finite(v) => ExtReal::Finite(c * v),
            ExtReal::Infinity => ExtReal::Infinity,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMode {
    Local,
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeWitness {
    pub point: Vector,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub value: ExtReal,
    /// `(radius, best ratio at that radius)`.
    pub radius_ladder: Vec<(f64, f64)>,
    /// Best points found, highest ratio first.
    pub witnesses: Vec<SlopeWitness>,
    pub mode: SlopeMode,
}

impl SlopeEstimate {
    fn infinite(mode: SlopeMode) -> Self {
        SlopeEstimate {
            value: ExtReal::Infinity,
            radius_ladder: Vec::new(),
            witnesses: Vec::new(),
            mode,
        }
    }
}

/// `[f(x) − f(y)]₊ / ‖x − y‖`, or 0 when `f(y) = +∞` or `y = x`.
pub fn slope_ratio(fx: f64, fy: ExtReal, x: &[f64], y: &[f64]) -> f64 {
    let d = linalg::dist(x, y);
    match fy {
        ExtReal::Finite(v) if d > 0.0 => (fx - v).max(0.0) / d,
        _ => 0.0,
    }
}

/// Coordinate ascent on the ratio, keeping iterates inside `admissible`.
fn polish(
    f: &ScalarField,
    x: &[f64],
    fx: f64,
    start: Vector,
    start_ratio: f64,
    mut step: f64,
    admissible: &dyn Fn(&[f64]) -> bool,
) -> SlopeWitness {
    let mut best = SlopeWitness {
        point: start,
        ratio: start_ratio,
    };
    let n = x.len();
    for _ in 0..POLISH_STEPS {
        let mut improved: Option<SlopeWitness> = None;
        for j in 0..2 * n {
            let mut y = best.point.clone();
            y[j / 2] += if j % 2 == 0 { step } else { -step };
            if !admissible(&y) {
                continue;
            }
            let r = slope_ratio(fx, f.eval(&y), x, &y);
            let bar = improved.as_ref().map_or(best.ratio, |w| w.ratio);
            if r > bar {
                improved = Some(SlopeWitness { point: y, ratio: r });
            }
        }
        match improved {
            Some(w) => best = w,
            None => step *= 0.5,
        }
    }
    best
}

fn finite_at(f: &ScalarField, x: &[f64]) -> Result<Option<f64>> {
    linalg::check_dim(f.dim(), x.len())?;
    Ok(match f.eval(x) {
        ExtReal::Finite(v) => Some(v),
        ExtReal::Infinity => None,
    })
}

fn sphere_point(seed: u64, stream_id: u64, index: u64, x: &[f64], radius: f64) -> Vector {
    let n = x.len();
    let dir = if n == 1 {
        vec![if index % 2 == 0 { 1.0 } else { -1.0 }]
    } else {
        unit_sphere(&mut sample_rng(seed, stream_id, index), n)
    };
    linalg::axpy(x, radius, &dir)
}

/// Local strong slope over the radius ladder `r₀·2⁻ᵏ`, `k < levels`.
///
/// Each level keeps its best sphere sample, polished inside the annulus
/// `r/2 ≤ ‖y − x‖ ≤ r`; the value is the maximum over the last three levels.
pub fn local_slope(
    f: &ScalarField,
    x: &[f64],
    r0: f64,
    levels: usize,
    samples_per_level: usize,
    seed: u64,
) -> Result<SlopeEstimate> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidParameter(format!("r0 must be positive, got {r0}")));
    }
    if levels < TAIL_LEVELS {
        return Err(Error::InvalidParameter(format!("need at least {TAIL_LEVELS} levels, got {levels}")));
    }
    if samples_per_level == 0 {
        return Err(Error::InvalidParameter("samples_per_level must be ≥ 1".into()));
    }
    let Some(fx) = finite_at(f, x)? else {
        return Ok(SlopeEstimate::infinite(SlopeMode::Local));
    };
    let per_level = if x.len() == 1 { samples_per_level.min(2) } else { samples_per_level };

    let level_best: Vec<SlopeWitness> = (0..levels)
        .into_par_iter()
        .map(|k| {
            let r = r0 * 2f64.powi(-(k as i32));
            let mut best = SlopeWitness {
                point: sphere_point(seed, stream::LOCAL_SLOPE, (k * per_level) as u64, x, r),
                ratio: f64::NEG_INFINITY,
            };
            for i in 0..per_level {
                let y = sphere_point(seed, stream::LOCAL_SLOPE, (k * per_level + i) as u64, x, r);
                let ratio = slope_ratio(fx, f.eval(&y), x, &y);
                if ratio > best.ratio {
                    best = SlopeWitness { point: y, ratio };
                }
            }
            let annulus = |y: &[f64]| {
                let d = linalg::dist(x, y);
                0.5 * r <= d && d <= r
            };
            polish(f, x, fx, best.point, best.ratio, 0.25 * r, &annulus)
        })
        .collect();

    let radius_ladder: Vec<(f64, f64)> = level_best
        .iter()
        .enumerate()
        .map(|(k, w)| (r0 * 2f64.powi(-(k as i32)), w.ratio))
        .collect();
    let tail = &level_best[levels - TAIL_LEVELS..];
    let value = tail.iter().fold(0.0f64, |m, w| m.max(w.ratio));
    let mut witnesses = level_best.clone();
    witnesses.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    witnesses.truncate(MAX_WITNESSES);
    Ok(SlopeEstimate {
        value: ExtReal::Finite(value),
        radius_ladder,
        witnesses,
        mode: SlopeMode::Local,
    })
}

/// Ladder parameters that [`global_slope`] also runs internally, so the
/// local estimate never exceeds the global one for the same region and seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalParams {
    pub r0: f64,
    pub levels: usize,
    pub samples_per_level: usize,
}

impl LocalParams {
    pub fn for_region(region: &SearchRegion) -> Self {
        LocalParams {
            r0: 0.05 * region.half_width(),
            levels: 12,
            samples_per_level: 16,
        }
    }
}

/// [`local_slope`] with [`LocalParams::for_region`].
pub fn local_slope_in(f: &ScalarField, x: &[f64], region: &SearchRegion) -> Result<SlopeEstimate> {
    let p = LocalParams::for_region(region);
    local_slope(f, x, p.r0, p.levels, p.samples_per_level, region.seed)
}

/// Global strong slope, a lower bound of `sup_{y ≠ x}` over the region box.
///
/// Candidates, in order: lattice nodes, the local ladder witnesses, a radial
/// ladder around `x`, then `sample_budget` uniform box samples. Every running
/// record in that order is polished, so a larger budget with the same seed
/// never lowers the value.
pub fn global_slope(f: &ScalarField, x: &[f64], region: &SearchRegion) -> Result<SlopeEstimate> {
    linalg::check_dim(f.dim(), region.dim())?;
    let Some(fx) = finite_at(f, x)? else {
        return Ok(SlopeEstimate::infinite(SlopeMode::Global));
    };
    let n = x.len();
    let h = region.half_width();

    let local = local_slope_in(f, x, region)?;
    let mut cands: Vec<Vector> = region.grid_nodes();
    cands.extend(local.witnesses.iter().map(|w| w.point.clone()));

    let mut dirs: Vec<Vector> = (0..2 * n)
        .map(|j| linalg::scale(&linalg::unit(n, j / 2), if j % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    if n > 1 {
        dirs.extend((0..LADDER_RANDOM_DIRS).map(|i| unit_sphere(&mut sample_rng(region.seed, stream::LADDER, i), n)));
    }
    let ladder_start = cands.len();
    for k in 0..=LADDER_DEPTH {
        let r = h * 2f64.powi(-k);
        for d in &dirs {
            cands.push(region.clamp(&linalg::axpy(x, r, d)));
        }
    }
    let ladder_end = cands.len();
    cands.extend(
        (0..region.sample_budget as u64)
            .map(|i| in_box(&mut sample_rng(region.seed, stream::GLOBAL_SLOPE, i), &region.lower, &region.upper)),
    );

    // Closer than this the difference quotient is dominated by rounding in
    // `f(x) − f(y)`; lattice nodes can land a few ulps from `x`.
    let floor = 1e-8 * (1.0 + linalg::norm(x));
    let ratios: Vec<f64> = cands
        .par_iter()
        .map(|y| if linalg::dist(x, y) < floor { 0.0 } else { slope_ratio(fx, f.eval(y), x, y) })
        .collect();

    let radius_ladder: Vec<(f64, f64)> = (0..=LADDER_DEPTH)
        .map(|k| {
            let lo = ladder_start + k as usize * dirs.len();
            let best = ratios[lo..lo + dirs.len()].iter().fold(0.0f64, |m, r| m.max(*r));
            (h * 2f64.powi(-k), best)
        })
        .collect();
    debug_assert_eq!(ladder_start + radius_ladder.len() * dirs.len(), ladder_end);

    let mut records = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for (i, &r) in ratios.iter().enumerate() {
        if r > running {
            running = r;
            records.push(i);
        }
    }
    let admissible = |y: &[f64]| region.contains(y) && linalg::dist(x, y) >= floor;
    let mut polished: Vec<SlopeWitness> = records
        .par_iter()
        .map(|&i| {
            let step = 0.25 * linalg::dist(x, &cands[i]).max(floor);
            polish(f, x, fx, cands[i].clone(), ratios[i], step, &admissible)
        })
        .collect();
    polished.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    polished.truncate(MAX_WITNESSES);
    let value = polished.first().map_or(0.0, |w| w.ratio.max(0.0));
    Ok(SlopeEstimate {
        value: ExtReal::Finite(value),
        radius_ladder,
        witnesses: polished,
        mode: SlopeMode::Global,
    })
}

/// Sampled check of `m(x̄)·d(x̄, S) ≤ f(x̄)` for `S = {f ≤ 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundCertificate {
    /// Distance from `x̄` to the nearest sampled point of `S`.
    pub d_s: f64,
    /// Smallest sampled global slope over the ball `‖x − x̄‖ < d_S`, `f(x) ≤ f(x̄)`.
    pub m_hat: f64,
    pub f_val: f64,
    pub holds: bool,
    /// `m_hat` comes from samples and slope lower bounds.
    pub estimate: bool,
    pub nearest: Vector,
    pub m_witness: Vector,
}

const BISECT_STEPS: usize = 60;
const CERT_BALL_POINTS: u64 = 16;
const CERT_CLOUD_POINTS: u64 = 8;
const DESCENT_STEPS: usize = 256;
/// Relative drop of the difference quotient tolerated along a witness ray.
const RAY_SLACK: f64 = 1e-4;

fn sublevel(f: &ScalarField, u: &[f64]) -> bool {
    matches!(f.eval(u), ExtReal::Finite(v) if v <= 0.0)
}

/// Feasible point nearest to `xbar` on the segment `[xbar, p]`, `p ∈ S`.
fn pull(f: &ScalarField, xbar: &[f64], p: &[f64]) -> Vector {
    let (mut lo, mut hi) = (0.0, 1.0);
    let seg = linalg::sub(p, xbar);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if sublevel(f, &linalg::axpy(xbar, mid, &seg)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    linalg::axpy(xbar, hi, &seg)
}

/// Pattern search for the point of `S` nearest `xbar`. Trial moves are
/// tangent to the sphere through the current point; feasible trials are
/// pulled back toward `xbar`. The step grows after a success.
fn nearest_in_sublevel(f: &ScalarField, xbar: &[f64], start: Vector, seed: u64) -> Vector {
    let n = xbar.len();
    let mut best = pull(f, xbar, &start);
    let mut best_d = linalg::dist(xbar, &best);
    if n == 1 || best_d == 0.0 {
        return best;
    }
    let mut step = 0.25 * best_d;
    let floor = 1e-13 * (1.0 + best_d);
    let mut round = 0u64;
    while step > floor && round < 4000 {
        let e = linalg::scale(&linalg::sub(&best, xbar), 1.0 / best_d);
        let mut dirs: Vec<Vector> = (0..2 * n)
            .map(|j| linalg::scale(&linalg::unit(n, j / 2), if j % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        dirs.extend((0..16).map(|i| unit_sphere(&mut sample_rng(seed, stream::SUBLEVEL, 1 << 40 | round << 4 | i), n)));
        let mut moved = false;
        for d in dirs {
            let t = linalg::axpy(&d, -linalg::dot(&d, &e), &e);
            let tn = linalg::norm(&t);
            if tn < 1e-12 {
                continue;
            }
            let c = linalg::axpy(&best, step / tn, &t);
            if !sublevel(f, &c) {
                continue;
            }
            let q = pull(f, xbar, &c);
            let dq = linalg::dist(xbar, &q);
            if dq < best_d {
                best = q;
                best_d = dq;
                moved = true;
                break;
            }
        }
        step = if moved { (2.0 * step).min(0.25 * best_d) } else { 0.5 * step };
        round += 1;
    }
    best
}

/// Largest `t ∈ [t0, t_max]` with `keeps(t)`, assuming `keeps(t0)` and
/// that `keeps` fails past its first failure.
fn longest_step(t0: f64, t_max: f64, keeps: &dyn Fn(f64) -> bool) -> f64 {
    let mut lo = t0;
    let mut hi = loop {
        if lo >= t_max {
            return t_max;
        }
        let next = (2.0 * lo).min(t_max);
        if !keeps(next) {
            break next;
        }
        lo = next;
    };
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if keeps(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `t ≥ 0` where the ray `x + t·dir` (unit `dir`) leaves `B(c, r)`.
fn ray_exit(x: &[f64], dir: &[f64], c: &[f64], r: f64) -> f64 {
    let v = linalg::sub(x, c);
    let b = linalg::dot(&v, dir);
    let disc = b * b - (linalg::dot(&v, &v) - r * r);
    (-b + disc.max(0.0).sqrt()).max(0.0)
}

/// Theorem-style error bound check at `xbar` with `f(xbar) > 0`.
pub fn error_bound_certificate(
    f: &ScalarField,
    xbar: &[f64],
    region: &SearchRegion,
) -> Result<ErrorBoundCertificate> {
    linalg::check_dim(f.dim(), region.dim())?;
    let f_val = match finite_at(f, xbar)? {
        Some(v) if v > 0.0 => v,
        Some(v) => return Err(Error::InSet { value: v }),
        None => {
            return Err(Error::InvalidInput("f(x̄) must be finite".into()));
        }
    };

    // Sublevel candidates: lattice, box samples, rays from x̄.
    let mut cands = region.grid_nodes();
    cands.extend(
        (0..region.sample_budget as u64)
            .map(|i| in_box(&mut sample_rng(region.seed, stream::SUBLEVEL, i), &region.lower, &region.upper)),
    );
    let feasible: Vec<Vector> = cands.into_par_iter().filter(|u| sublevel(f, u)).collect();
    let Some(start) = feasible
        .iter()
        .min_by(|a, b| linalg::dist(xbar, a).total_cmp(&linalg::dist(xbar, b)))
        .cloned()
    else {
        return Ok(ErrorBoundCertificate {
            d_s: f64::INFINITY,
            m_hat: 0.0,
            f_val,
            holds: true,
            estimate: true,
            nearest: Vec::new(),
            m_witness: xbar.to_vec(),
        });
    };
    let mut nearest = nearest_in_sublevel(f, xbar, start, region.seed);
    let mut d_s = linalg::dist(xbar, &nearest);

    // Descent path: from each point, follow the global-slope witness ray
    // while the difference quotient keeps the witness ratio. The quotients
    // sum to the drop in f over a path of length ≥ d_S once S or the sphere
    // is reached, so some path point has slope about f(x̄)/d_S or less.
    let mut path: Vec<(f64, Vector)> = Vec::new();
    let mut x = xbar.to_vec();
    for _ in 0..DESCENT_STEPS {
        let est = global_slope(f, &x, region)?;
        let Some(w) = est.witnesses.first().filter(|w| w.ratio > 0.0).cloned() else {
            path.push((0.0, x));
            break;
        };
        path.push((w.ratio, x.clone()));
        let Some(fx) = f.eval(&x).finite() else { break };
        let t0 = linalg::dist(&x, &w.point);
        let dir = linalg::scale(&linalg::sub(&w.point, &x), 1.0 / t0);
        let t_exit = ray_exit(&x, &dir, xbar, d_s);
        let keeps = |t: f64| match f.eval(&linalg::axpy(&x, t, &dir)) {
            ExtReal::Finite(v) => (fx - v) / t >= w.ratio * (1.0 - RAY_SLACK),
            ExtReal::Infinity => false,
        };
        let t = longest_step(t0.min(t_exit), t_exit, &keeps);
        let u = linalg::axpy(&x, t, &dir);
        if sublevel(f, &u) {
            let b = pull(f, &x, &u);
            let db = linalg::dist(xbar, &b);
            if db < d_s {
                nearest = b;
                d_s = db;
            }
            break;
        }
        if t >= t_exit * (1.0 - 1e-12) {
            break;
        }
        x = u;
    }

    // Points of the open ball where f ≤ f(x̄).
    let radius = d_s * (1.0 - 1e-9);
    let mut pts = Vec::new();
    let seg = linalg::sub(&nearest, xbar);
    for t in [0.25, 0.5, 0.75, 0.9, 0.99, 0.999] {
        pts.push(linalg::axpy(xbar, t * (1.0 - 1e-9), &seg));
    }
    pts.extend((0..CERT_BALL_POINTS).map(|i| in_ball(&mut sample_rng(region.seed, stream::CERT_BALL, i), xbar, radius)));
    let near = linalg::axpy(xbar, 0.99, &seg);
    pts.extend((0..CERT_CLOUD_POINTS).map(|i| {
        in_ball(&mut sample_rng(region.seed, stream::CERT_BALL, 1 << 32 | i), &near, 0.01 * d_s)
    }));
    let in_ball_below = |p: &[f64]| {
        linalg::dist(p, xbar) <= radius.max(0.0) && matches!(f.eval(p), ExtReal::Finite(v) if v <= f_val)
    };
    let pts: Vec<Vector> = pts.into_iter().filter(|p| in_ball_below(p)).collect();

    let mut slopes: Vec<(f64, Vector)> = pts
        .into_iter()
        .map(|p| global_slope(f, &p, region).map(|s| (s.value.to_f64(), p)))
        .collect::<Result<_>>()?;
    slopes.extend(path.into_iter().filter(|(_, p)| p.as_slice() == xbar || in_ball_below(p)));
    let (m_hat, m_witness) = slopes
        .into_iter()
        .fold((f64::INFINITY, xbar.to_vec()), |(m, w), (s, p)| if s < m { (s, p) } else { (m, w) });
    Ok(ErrorBoundCertificate {
        d_s,
        m_hat,
        f_val,
        holds: m_hat * d_s <= f_val * (1.0 + 1e-6),
        estimate: true,
        nearest,
        m_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq() -> ScalarField {
        ScalarField::finite(1, |x| x[0] * x[0])
    }

    fn region1(half: f64) -> SearchRegion {
        SearchRegion::around(&[0.0], half, 11, 400, 42).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn local_slope_examples() {
        let v = local_slope(&sq(), &[1.0], 0.1, 10, 8, 1).unwrap().value.to_f64();
        assert!(close(v, 2.0, 0.05), "{v}");
        assert_eq!(local_slope(&sq(), &[0.0], 0.1, 10, 8, 1).unwrap().value, ExtReal::ZERO);
        let abs = ScalarField::finite(1, |x| x[0].abs());
        let v = local_slope(&abs, &[1.0], 0.1, 10, 8, 1).unwrap().value.to_f64();
        assert!(close(v, 1.0, 0.05), "{v}");
    }

    #[test]
    fn local_slope_rejects_bad_parameters() {
        assert!(local_slope(&sq(), &[1.0], 0.0, 10, 8, 1).is_err());
        assert!(local_slope(&sq(), &[1.0], 0.1, 2, 8, 1).is_err());
        let inf = ScalarField::new(1, |_| ExtReal::Infinity);
        assert_eq!(local_slope(&inf, &[0.0], 0.1, 5, 4, 1).unwrap().value, ExtReal::Infinity);
    }

    #[test]
    fn global_slope_examples() {
        let v = global_slope(&sq(), &[1.0], &region1(3.0)).unwrap().value.to_f64();
        assert!(close(v, 2.0, 0.05), "{v}");
        let hinge = ScalarField::finite(1, |x| (x[0].abs() - 1.0).max(0.0));
        let v = global_slope(&hinge, &[3.0], &region1(5.0)).unwrap().value.to_f64();
        assert!(close(v, 1.0, 0.05), "{v}");
        let c = ScalarField::finite(2, |_| 4.0);
        let r = SearchRegion::default_for(2);
        assert_eq!(global_slope(&c, &[0.3, 0.1], &r).unwrap().value, ExtReal::ZERO);
    }

    #[test]
    fn witnesses_reproduce_ratios() {
        let f = ScalarField::finite(2, |x| (x[0] - 1.0).abs() + 0.5 * x[1] * x[1]);
        let x = [2.0, 1.0];
        let est = global_slope(&f, &x, &SearchRegion::default_for(2)).unwrap();
        let fx = f.eval(&x).to_f64();
        for w in &est.witnesses {
            let r = slope_ratio(fx, f.eval(&w.point), &x, &w.point);
            assert!((r - w.ratio).abs() <= 1e-9);
        }
        assert_eq!(est.value.to_f64(), est.witnesses[0].ratio);
    }

    #[test]
    fn certificate_examples() {
        let hinge = ScalarField::finite(1, |x| (x[0].abs() - 1.0).max(0.0));
        let c = error_bound_certificate(&hinge, &[3.0], &region1(5.0)).unwrap();
        assert!((c.d_s - 2.0).abs() < 1e-9 && c.f_val == 2.0 && c.holds, "{c:?}");
        assert!(close(c.m_hat, 1.0, 0.05));

        let norm = ScalarField::finite(2, |x| linalg::norm(x));
        let r = SearchRegion::default_for(2).with_budget(200);
        let c = error_bound_certificate(&norm, &[3.0, 4.0], &r).unwrap();
        assert!((c.d_s - 5.0).abs() < 1e-9 && c.holds, "{c:?}");
        assert!(close(c.m_hat, 1.0, 0.05));

        let c = error_bound_certificate(&sq(), &[1.0], &region1(5.0)).unwrap();
        assert!((c.d_s - 1.0).abs() < 1e-9 && c.m_hat <= 1.0 && c.holds, "{c:?}");

        assert!(matches!(error_bound_certificate(&sq(), &[0.0], &region1(5.0)), Err(Error::InSet { .. })));
    }
}
