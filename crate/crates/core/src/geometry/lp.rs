//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are small (tens of variables), so the tableau is kept dense and
//! reduced costs are recomputed from scratch on every pivot. Bland's rule
//! (lowest-index entering column, lowest-index leaving basic variable on ratio
//! ties) makes the pivot sequence deterministic and rules out cycling.

use crate::error::{Error, Result};
use crate::geometry::Polyhedron;
use crate::linalg::{check_dim, Vector};

const PIVOT_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { point: Vector, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// `maximize c·x  s.t.  rows (≤ | ≥ | =) rhs,  lower ≤ x ≤ upper`.
///
/// Bounds may be infinite. Finite bounds are eliminated by shifting and
/// reflecting variables; free variables are split into two nonnegative parts.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vector,
    rows: Vec<(Vector, Relation, f64)>,
    lower: Vector,
    upper: Vector,
}

impl LinearProgram {
    /// A program over `objective.len()` free variables.
    pub fn maximize(objective: Vector) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            rows: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constraint(&mut self, coeffs: Vector, rel: Relation, rhs: f64) -> Result<&mut Self> {
        check_dim(self.num_vars(), coeffs.len())?;
        self.rows.push((coeffs, rel, rhs));
        Ok(self)
    }

    pub fn bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.num_vars();
        // Column layout of the transformed variables: each original variable
        // maps to one or two nonnegative columns.
        enum Map {
            Shift(usize, f64),   // x = l + x'
            Reflect(usize, f64), // x = u - x'
            Split(usize, usize), // x = x+ - x-
        }
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0;
        let mut extra_rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l > u {
                return Ok(LpOutcome::Infeasible);
            }
            if l.is_finite() {
                maps.push(Map::Shift(ncols, l));
                if u.is_finite() {
                    extra_rows.push((vec![(ncols, 1.0)], Relation::Le, u - l));
                }
                ncols += 1;
            } else if u.is_finite() {
                maps.push(Map::Reflect(ncols, u));
                ncols += 1;
            } else {
                maps.push(Map::Split(ncols, ncols + 1));
                ncols += 2;
            }
        }

        let mut obj = vec![0.0; ncols];
        let mut obj_const = 0.0;
        let mut rows: Vec<(Vector, Relation, f64)> = Vec::new();
        for (j, m) in maps.iter().enumerate() {
            let c = self.objective[j];
            match *m {
                Map::Shift(k, l) => {
                    obj[k] += c;
                    obj_const += c * l;
                }
                Map::Reflect(k, u) => {
                    obj[k] -= c;
                    obj_const += c * u;
                }
                Map::Split(p, q) => {
                    obj[p] += c;
                    obj[q] -= c;
                }
            }
        }
        for (coeffs, rel, rhs) in &self.rows {
            let mut row = vec![0.0; ncols];
            let mut b = *rhs;
            for (j, m) in maps.iter().enumerate() {
                let a = coeffs[j];
                if a == 0.0 {
                    continue;
                }
                match *m {
                    Map::Shift(k, l) => {
                        row[k] += a;
                        b -= a * l;
                    }
                    Map::Reflect(k, u) => {
                        row[k] -= a;
                        b -= a * u;
                    }
                    Map::Split(p, q) => {
                        row[p] += a;
                        row[q] -= a;
                    }
                }
            }
            rows.push((row, *rel, b));
        }
        for (entries, rel, b) in extra_rows {
            let mut row = vec![0.0; ncols];
            for (k, v) in entries {
                row[k] = v;
            }
            rows.push((row, rel, b));
        }

        match solve_standard(&obj, &rows)? {
            Standard::Infeasible => Ok(LpOutcome::Infeasible),
            Standard::Unbounded => Ok(LpOutcome::Unbounded),
            Standard::Optimal(xs) => {
                let point: Vector = maps
                    .iter()
                    .map(|m| match *m {
                        Map::Shift(k, l) => l + xs[k],
                        Map::Reflect(k, u) => u - xs[k],
                        Map::Split(p, q) => xs[p] - xs[q],
                    })
                    .collect();
                let value = crate::linalg::dot(&self.objective, &point);
                debug_assert!(obj_const.is_finite());
                Ok(LpOutcome::Optimal { point, value })
            }
        }
    }
}

enum Standard {
    Optimal(Vector),
    Infeasible,
    Unbounded,
}

struct Tableau {
    t: Vec<Vector>,
    rhs: Vector,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::CycleLimit(MAX_PIVOTS));
        }
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        let prow = self.t[row].clone();
        let prhs = self.rhs[row];
        for i in 0..self.t.len() {
            if i == row {
                continue;
            }
            let f = self.t[i][col];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.t[i].iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.t[i][col] = 0.0;
            self.rhs[i] -= f * prhs;
        }
        self.basis[row] = col;
        Ok(())
    }

    /// Runs simplex iterations maximizing `cost` over the columns allowed by
    /// `allowed`. Returns `false` on unboundedness.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        let ncols = cost.len();
        loop {
            let mut entering = None;
            for j in 0..ncols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    r -= cost[b] * self.t[i][j];
                }
                if r > PIVOT_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][col];
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs[i] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col)?;
        }
    }
}

/// `maximize c·x  s.t. rows, x ≥ 0`.
fn solve_standard(c: &[f64], rows: &[(Vector, Relation, f64)]) -> Result<Standard> {
    let n = c.len();
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    // Columns: structural | slacks | artificials (one per row, unused ones
    // simply never enter).
    let art0 = n + n_slack;
    let ncols = art0 + m;
    let mut t = vec![vec![0.0; ncols]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut slack = n;
    let mut needs_art = vec![false; m];
    for (i, (coeffs, rel, b)) in rows.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * coeffs[j];
        }
        rhs[i] = sign * b;
        let slack_coef = match rel {
            Relation::Le => Some(1.0),
            Relation::Ge => Some(-1.0),
            Relation::Eq => None,
        };
        if let Some(sc) = slack_coef {
            t[i][slack] = sign * sc;
            if sign * sc > 0.0 {
                basis[i] = slack;
            } else {
                needs_art[i] = true;
            }
            slack += 1;
        } else {
            needs_art[i] = true;
        }
        if needs_art[i] {
            t[i][art0 + i] = 1.0;
            basis[i] = art0 + i;
        }
    }
    let mut tab = Tableau {
        t,
        rhs,
        basis,
        pivots: 0,
    };

    if needs_art.iter().any(|&a| a) {
        let mut phase1 = vec![0.0; ncols];
        for (i, &a) in needs_art.iter().enumerate() {
            if a {
                phase1[art0 + i] = -1.0;
            }
        }
        let allowed = |j: usize| j < art0 || (j >= art0 && needs_art[j - art0]);
        tab.optimize(&phase1, &allowed)?;
        let infeas: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(b, _)| **b >= art0)
            .map(|(_, r)| *r)
            .sum();
        let scale = 1.0 + tab.rhs.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        if infeas > 1e-9 * scale {
            return Ok(Standard::Infeasible);
        }
        // Drive remaining (zero-level) artificials out of the basis; rows
        // where that is impossible are redundant and get dropped.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= art0 {
                let col = (0..art0).find(|&j| tab.t[i][j].abs() > PIVOT_EPS);
                match col {
                    Some(j) => tab.pivot(i, j)?,
                    None => {
                        tab.t.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(c);
    if !tab.optimize(&cost, &|j| j < art0)? {
        return Ok(Standard::Unbounded);
    }
    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[i].max(0.0);
        }
    }
    Ok(Standard::Optimal(x))
}

/// Maximizes `objective · z` over the polyhedron.
pub fn solve_lp(objective: &[f64], poly: &Polyhedron) -> Result<LpOutcome> {
    check_dim(poly.dim(), objective.len())?;
    let mut lp = LinearProgram::maximize(objective.to_vec());
    for i in 0..poly.num_rows() {
        lp.constraint(poly.normal(i).to_vec(), Relation::Le, poly.offset(i))?;
    }
    lp.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn poly(rows: &[&[f64]], d: &[f64]) -> Polyhedron {
        let n = rows[0].len();
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Polyhedron::new(Matrix::from_rows(&rows, n).unwrap(), d.to_vec()).unwrap()
    }

    #[test]
    fn bounded_interval() {
        let p = poly(&[&[1.0], &[-1.0]], &[1.0, 0.0]);
        assert_eq!(
            solve_lp(&[1.0], &p).unwrap(),
            LpOutcome::Optimal {
                point: vec![1.0],
                value: 1.0
            }
        );
    }

    #[test]
    fn unbounded_ray() {
        let p = poly(&[&[-1.0]], &[0.0]);
        assert_eq!(solve_lp(&[1.0], &p).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn box_corner() {
        let p = poly(
            &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]],
            &[1.0, 2.0, 0.0, 0.0],
        );
        match solve_lp(&[1.0, 1.0], &p).unwrap() {
            LpOutcome::Optimal { point, value } => {
                assert!((point[0] - 1.0).abs() < 1e-12 && (point[1] - 2.0).abs() < 1e-12);
                assert!((value - 3.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_pair() {
        let p = poly(&[&[1.0], &[-1.0]], &[0.0, -1.0]);
        assert_eq!(solve_lp(&[1.0], &p).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn equality_and_bounds() {
        // max x + y  s.t. x - y = 1, 0 ≤ x ≤ 3, y ≤ 5
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.constraint(vec![1.0, -1.0], Relation::Eq, 1.0).unwrap();
        lp.bounds(0, 0.0, 3.0).bounds(1, f64::NEG_INFINITY, 5.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { point, value } => {
                assert!((point[0] - 3.0).abs() < 1e-12);
                assert!((point[1] - 2.0).abs() < 1e-12);
                assert!((value - 5.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Several constraints meet at the optimum (1, 1).
        let p = poly(
            &[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[2.0, 1.0], &[1.0, 2.0]],
            &[1.0, 1.0, 2.0, 3.0, 3.0],
        );
        assert!((solve_lp(&[1.0, 1.0], &p).unwrap().value().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ge_rows_and_redundancy() {
        // x ≥ 1 written twice, max -x
        let mut lp = LinearProgram::maximize(vec![-1.0]);
        lp.constraint(vec![1.0], Relation::Ge, 1.0).unwrap();
        lp.constraint(vec![2.0], Relation::Ge, 2.0).unwrap();
        assert!((lp.solve().unwrap().value().unwrap() + 1.0).abs() < 1e-12);
    }
}
