//! Strategies and invariant checks shared by the property suite and the
//! acceptance harness.
#![allow(dead_code)]

use metreg::geometry::{solve_lp, ConvexSet, DirectionalCone, LpOutcome, Polyhedron};
use metreg::instances;
use metreg::linalg::{self, Matrix};
use metreg::multimap::{directional_membership, envelope, preimage_distance, MultiMap, SearchRegion};
use metreg::regularity::{sample_dual_pairs, DUAL_TOL};
use metreg::slopes::{global_slope, local_slope_in, ScalarField};
use metreg::tolerances::{TOL_ACTIVE, TOL_MEMBER};
use metreg::ExtReal;
use proptest::prelude::*;
use proptest::test_runner::TestCaseResult;

pub const CASES: u32 = 1000;

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        ..ProptestConfig::default()
    }
}

pub fn vec_in(dim: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, dim)
}

pub fn unit_rows(dim: usize, rows: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(vec_in(dim, 1.0), rows).prop_filter("nonzero rows", |rs| {
        rs.iter().all(|r| linalg::norm(r) > 0.1)
    })
}

/// Nonempty by construction: the offsets are nonnegative, so 0 is inside.
pub fn polyhedron(dim: usize) -> impl Strategy<Value = Polyhedron> {
    unit_rows(dim, 1..6).prop_flat_map(move |rows| {
        let n = rows.len();
        (Just(rows), prop::collection::vec(0.0..1.5f64, n))
            .prop_map(move |(rows, d)| Polyhedron::from_rows(&rows, d, dim).unwrap())
    })
}

pub fn convex_set(dim: usize) -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        3 => polyhedron(dim).prop_map(ConvexSet::Polyhedron),
        1 => (vec_in(dim, 2.0), 0.0..2.0f64).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        1 => (vec_in(dim, 1.0), 0.0..1.2f64)
            .prop_filter("direction", |(y, _)| linalg::norm(y) > 0.2)
            .prop_map(|(y, d)| ConvexSet::DirectionalCone(DirectionalCone::new(y, d).unwrap())),
    ]
}

pub fn set_and_points() -> impl Strategy<Value = (ConvexSet, Vec<f64>, Vec<f64>)> {
    (2usize..=3).prop_flat_map(|n| (convex_set(n), vec_in(n, 5.0), vec_in(n, 5.0)))
}



/// Small deterministic family of nonsmooth and smooth test functions.
pub fn field(kind: u8, w: Vec<f64>) -> ScalarField {
    let n = w.len();
    match kind % 4 {
        0 => ScalarField::finite(n, move |x| linalg::dot(&w, x).abs()),
        1 => ScalarField::finite(n, move |x| x.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum()),
        2 => ScalarField::finite(n, move |x| x.iter().zip(&w).map(|(a, b)| (a - b).abs().max(0.5 * a)).fold(0.0, f64::max)),
        _ => ScalarField::finite(n, move |x| (linalg::norm(x) - linalg::norm(&w)).max(0.0)),
    }
}

pub fn slope_case() -> impl Strategy<Value = (u8, Vec<f64>, Vec<f64>, u64)> {
    (1usize..=2).prop_flat_map(|n| (any::<u8>(), vec_in(n, 2.0), vec_in(n, 2.0), any::<u64>()))
}

pub fn small_region(x: &[f64], seed: u64) -> SearchRegion {
    SearchRegion::around(x, 2.0, 3, 48, seed).unwrap()
}



pub fn registry_pairs() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, bool)> {
    (0..instances::NAMES.len()).prop_flat_map(|i| {
        let inst = instances::builtin(instances::NAMES[i]).unwrap();
        let (n, m) = (inst.map.dim_in(), inst.map.dim_out());
        (Just(i), vec_in(n, 1.0), vec_in(m, 1.0), any::<bool>())
    })
}

/// `y ∈ F(x)` when `on_graph`: `y = f(x) − k` with `k = P_K(v)`.
pub fn pair_for(map: &MultiMap, x: &[f64], v: &[f64], on_graph: bool) -> Vec<f64> {
    if on_graph {
        let k = map.k.project(v).unwrap();
        linalg::sub(&map.f.eval(x).unwrap(), &k)
    } else {
        v.to_vec()
    }
}



/// Every vertex of a bounded polyhedron, by solving each `dim`-row subsystem.
pub fn vertices(p: &Polyhedron) -> Vec<Vec<f64>> {
    let (n, r) = (p.dim(), p.num_rows());
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| p.normal(i).to_vec()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| p.offset(i)).collect();
        if let Some(v) = linalg::solve(&Matrix::from_rows(&rows, n).unwrap(), &rhs) {
            if (0..r).all(|i| linalg::dot(p.normal(i), &v) <= p.offset(i) + 1e-9) {
                out.push(v);
            }
        }
        // next combination
        let mut k = n;
        while k > 0 && idx[k - 1] == r - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return out;
        }
        idx[k - 1] += 1;
        for j in k..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A box `|zᵢ| ≤ 3` keeps the polyhedron bounded; the extra rows may empty it.
pub fn boxed_polyhedron() -> impl Strategy<Value = (Polyhedron, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|n| {
        let extra = 8 - 2 * n;
        (
            prop::collection::vec(vec_in(n, 1.0), 0..=extra),
            prop::collection::vec(-2.0..2.0f64, extra),
            vec_in(n, 1.0),
        )
            .prop_map(move |(rows, offs, c)| {
                let mut all = Vec::new();
                let mut d = Vec::new();
                for i in 0..n {
                    all.push(linalg::unit(n, i));
                    all.push(linalg::scale(&linalg::unit(n, i), -1.0));
                    d.extend([3.0, 3.0]);
                }
                for (r, o) in rows.iter().zip(&offs) {
                    all.push(r.clone());
                    d.push(*o);
                }
                (Polyhedron::from_rows(&all, d, n).unwrap(), c)
            })
    })
}

pub fn projection_case((s, a, b): (ConvexSet, Vec<f64>, Vec<f64>)) -> TestCaseResult {
    let pa = s.project(&a).unwrap();
    let pb = s.project(&b).unwrap();
    let ppa = s.project(&pa).unwrap();
    prop_assert!(linalg::dist(&pa, &ppa) <= 1e-8, "{:?} vs {:?}", pa, ppa);
    prop_assert!(linalg::dist(&pa, &pb) <= linalg::dist(&a, &b) + 1e-8);
    let d = s.distance(&a).unwrap().to_f64();
    prop_assert_eq!(d <= TOL_MEMBER, s.contains(&a, TOL_MEMBER).unwrap());
    prop_assert!(s.distance(&pa).unwrap().to_f64() <= 1e-8);
    Ok(())
}

pub fn cone_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..=3).prop_flat_map(|n| (unit_rows(n, 1..6), vec_in(n, 5.0)))
}

/// Generators of `N(C, P_C(p))` are orthogonal to the projection on a cone.
pub fn orthogonality_case((rows, p): (Vec<Vec<f64>>, Vec<f64>)) -> TestCaseResult {
    let n = p.len();
    let cone = Polyhedron::from_rows(&rows, vec![0.0; rows.len()], n).unwrap();
    let z = cone.project(&p).unwrap();
    let nz = linalg::norm(&z);
    prop_assume!(nz > 1e-3);
    for g in cone.normal_cone_generators(&z, TOL_ACTIVE).unwrap() {
        let ip = linalg::dot(&g, &z).abs();
        prop_assert!(ip <= 1e-8 * linalg::norm(&g) * nz, "<g, z> = {ip:e}");
    }
    Ok(())
}

pub fn dual_case() -> impl Strategy<Value = (Vec<f64>, f64, u64)> {
    (
        vec_in(3, 2.0).prop_filter("nonzero", |y| linalg::norm(y) > 0.05),
        0.0..0.5f64,
        any::<u64>(),
    )
}

pub fn dual_pairs_case((ybar, delta, seed): (Vec<f64>, f64, u64)) -> TestCaseResult {
    let pairs = sample_dual_pairs(&ybar, delta, 16, seed).unwrap();
    for p in &pairs {
        prop_assert!(p.is_valid(&ybar, DUAL_TOL), "{:?}", p);
        prop_assert!((linalg::norm(&p.sum()) - 1.0).abs() <= DUAL_TOL);
    }
    Ok(())
}

pub fn slope_ordering_case((kind, w, x, seed): (u8, Vec<f64>, Vec<f64>, u64)) -> TestCaseResult {
    let f = field(kind, w);
    let region = small_region(&x, seed);
    let local = local_slope_in(&f, &x, &region).unwrap().value.to_f64();
    let global = global_slope(&f, &x, &region).unwrap().value.to_f64();
    prop_assert!(local <= global + 1e-9, "local {local} > global {global}");
    Ok(())
}

pub fn envelope_case((i, x, v, on_graph): (usize, Vec<f64>, Vec<f64>, bool)) -> TestCaseResult {
    let inst = instances::builtin(instances::NAMES[i]).unwrap();
    let map = &inst.map;
    let y = pair_for(map, &x, &v, on_graph);
    let region = SearchRegion::around(&x, 3.0, 5, 64, 1).unwrap();
    let env = envelope(map, &inst.dc, &x, &y, TOL_MEMBER).unwrap();
    let pre = preimage_distance(map, &y, &x, &region).unwrap().value;
    let member = directional_membership(map, &x, &y, &inst.dc, TOL_MEMBER).unwrap().member;
    let zero = matches!(env, ExtReal::Finite(e) if e <= TOL_MEMBER);
    let rhs = matches!(pre, ExtReal::Finite(p) if p <= TOL_MEMBER) && env.is_finite();
    prop_assert_eq!(zero, rhs, "env {:?} pre {:?} member {}", env, pre, member);
    if member {
        prop_assert_eq!(env, ExtReal::Finite(map.image_distance(&x, &y).unwrap()));
    }
    if on_graph {
        prop_assert!(zero);
    }
    Ok(())
}

pub fn lp_case((p, c): (Polyhedron, Vec<f64>)) -> TestCaseResult {
    let vs = vertices(&p);
    match solve_lp(&c, &p).unwrap() {
        LpOutcome::Optimal { point, value } => {
            prop_assert!(!vs.is_empty());
            let best = vs.iter().map(|v| linalg::dot(&c, v)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((value - best).abs() <= 1e-9 * (1.0 + best.abs()), "{value} vs {best}");
            prop_assert!((linalg::dot(&c, &point) - value).abs() <= 1e-9 * (1.0 + value.abs()));
            prop_assert!(p.violation(&point) <= 1e-9);
        }
        LpOutcome::Infeasible => prop_assert!(vs.is_empty(), "missed {:?}", vs),
        LpOutcome::Unbounded => prop_assert!(false, "bounded polyhedron reported unbounded"),
    }
    Ok(())
}
