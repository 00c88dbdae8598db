//! Exact rational linear programming.
//!
//! A dense two-phase tableau simplex with Bland's rule. Variables are free;
//! internally each is split as `x = u - v` with `u, v >= 0`. Sizes here are
//! tiny (a handful of variables, at most a few hundred rows), so a dense
//! tableau over big rationals is fast enough and keeps every answer exact.
//!
//! Strict inequalities are decided with a margin variable `t`: every strict
//! row `a·x < b` becomes `a·x + t <= b`, we add `t <= 1` and maximise `t`.
//! The system is strictly feasible iff the optimum is positive.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{dot, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

/// `normal · x  (sense)  offset`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    #[serde(with = "crate::rational::vec")]
    pub normal: Vec<Rational>,
    #[serde(with = "crate::rational")]
    pub offset: Rational,
    pub sense: Sense,
}

impl LinearConstraint {
    pub fn new(normal: Vec<Rational>, offset: Rational, sense: Sense) -> Self {
        Self { normal, offset, sense }
    }

    pub fn le(normal: Vec<Rational>, offset: Rational) -> Self {
        Self::new(normal, offset, Sense::Le)
    }

    pub fn lt(normal: Vec<Rational>, offset: Rational) -> Self {
        Self::new(normal, offset, Sense::Lt)
    }

    pub fn eq(normal: Vec<Rational>, offset: Rational) -> Self {
        Self::new(normal, offset, Sense::Eq)
    }

    /// `normal · x >= offset`, stored as `-normal · x <= -offset`.
    pub fn ge(normal: Vec<Rational>, offset: Rational) -> Self {
        Self::le(normal.into_iter().map(|q| -q).collect(), -offset)
    }

    pub fn gt(normal: Vec<Rational>, offset: Rational) -> Self {
        Self::lt(normal.into_iter().map(|q| -q).collect(), -offset)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.normal.iter().all(Zero::is_zero)
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        let lhs = dot(&self.normal, x);
        match self.sense {
            Sense::Le => lhs <= self.offset,
            Sense::Lt => lhs < self.offset,
            Sense::Eq => lhs == self.offset,
        }
    }

    pub fn relaxed(&self) -> Self {
        let sense = if self.sense == Sense::Lt { Sense::Le } else { self.sense };
        Self { sense, ..self.clone() }
    }

    /// Same constraint with a strict sense (equalities are left alone).
    pub fn strict(&self) -> Self {
        let sense = if self.sense == Sense::Le { Sense::Lt } else { self.sense };
        Self { sense, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&[Rational]> {
        match self {
            Feasibility::Feasible(x) => Some(x),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpSolution {
    Optimal { point: Vec<Rational>, value: Rational },
    Unbounded,
    Infeasible,
}

/// Decides (strict) feasibility of a constraint system over `Q^dim`.
pub fn lp_feasible(dim: usize, constraints: &[LinearConstraint]) -> Feasibility {
    let Some(rows) = prune_trivial(constraints) else {
        return Feasibility::Infeasible;
    };
    if !rows.iter().any(|c| c.sense == Sense::Lt) {
        return match solve(dim, &vec![Rational::zero(); dim], &rows) {
            LpSolution::Optimal { point, .. } => Feasibility::Feasible(point),
            LpSolution::Unbounded => unreachable!("zero objective cannot be unbounded"),
            LpSolution::Infeasible => Feasibility::Infeasible,
        };
    }
    let mut lifted: Vec<LinearConstraint> = rows
        .iter()
        .map(|c| {
            let mut normal = c.normal.clone();
            normal.push(if c.sense == Sense::Lt { Rational::one() } else { Rational::zero() });
            LinearConstraint::new(normal, c.offset.clone(), c.relaxed().sense)
        })
        .collect();
    let mut cap = vec![Rational::zero(); dim + 1];
    cap[dim] = Rational::one();
    lifted.push(LinearConstraint::le(cap.clone(), Rational::one()));
    match solve(dim + 1, &cap, &lifted) {
        LpSolution::Optimal { mut point, value } if value.is_positive() => {
            point.truncate(dim);
            Feasibility::Feasible(point)
        }
        LpSolution::Optimal { .. } | LpSolution::Infeasible => Feasibility::Infeasible,
        LpSolution::Unbounded => unreachable!("margin is capped at one"),
    }
}

/// Maximises `objective · x`; strict rows are treated as non-strict.
pub fn lp_maximize(dim: usize, objective: &[Rational], constraints: &[LinearConstraint]) -> LpSolution {
    let Some(rows) = prune_trivial(constraints) else {
        return LpSolution::Infeasible;
    };
    let rows: Vec<_> = rows.iter().map(LinearConstraint::relaxed).collect();
    solve(dim, objective, &rows)
}

/// Drops constraints with an all-zero normal; `None` if one of them is false.
fn prune_trivial(constraints: &[LinearConstraint]) -> Option<Vec<LinearConstraint>> {
    let mut out = Vec::with_capacity(constraints.len());
    for c in constraints {
        if c.is_trivial() {
            let ok = match c.sense {
                Sense::Le => !c.offset.is_negative(),
                Sense::Lt => c.offset.is_positive(),
                Sense::Eq => c.offset.is_zero(),
            };
            if !ok {
                return None;
            }
        } else {
            out.push(c.clone());
        }
    }
    Some(out)
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Objective row: reduced costs followed by the current objective value.
    obj: Vec<Rational>,
    width: usize,
}

enum Pivoting {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    if !pv.is_zero() {
                        *v -= &f * pv;
                    }
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule over the first `active` columns.
    fn run(&mut self, active: usize) -> Pivoting {
        loop {
            let Some(enter) = (0..active).find(|&j| self.obj[j].is_negative()) else {
                return Pivoting::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter].is_positive() {
                    let ratio = &row[self.width] / &row[enter];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Pivoting::Unbounded,
            }
        }
    }
}

fn solve(dim: usize, objective: &[Rational], constraints: &[LinearConstraint]) -> LpSolution {
    let m = constraints.len();
    let n_slack = constraints.iter().filter(|c| c.sense != Sense::Eq).count();
    let n_struct = 2 * dim + n_slack;
    let width = n_struct + m;

    let mut rows = Vec::with_capacity(m);
    let mut slack = 2 * dim;
    for (i, c) in constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); width + 1];
        for (j, a) in c.normal.iter().enumerate() {
            row[j] = a.clone();
            row[dim + j] = -a;
        }
        if c.sense != Sense::Eq {
            row[slack] = Rational::one();
            slack += 1;
        }
        row[width] = c.offset.clone();
        if row[width].is_negative() {
            for v in row.iter_mut() {
                *v = -&*v;
            }
        }
        row[n_struct + i] = Rational::one();
        rows.push(row);
    }

    // Phase one: maximise minus the sum of artificials.
    let mut obj = vec![Rational::zero(); width + 1];
    for row in &rows {
        for (o, v) in obj.iter_mut().zip(row) {
            *o -= v;
        }
    }
    for o in obj.iter_mut().skip(n_struct).take(m) {
        *o = Rational::zero();
    }
    let mut t = Tableau { rows, basis: (n_struct..width).collect(), obj, width };
    t.run(width);
    if t.obj[width].is_negative() {
        return LpSolution::Infeasible;
    }

    // Drive remaining (zero-valued) artificials out of the basis.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n_struct {
            match (0..n_struct).find(|&j| !t.rows[r][j].is_zero()) {
                Some(j) => {
                    t.pivot(r, j);
                    r += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    // Phase two on the structural columns only.
    let mut obj = vec![Rational::zero(); width + 1];
    for (j, c) in objective.iter().enumerate() {
        obj[j] = -c;
        obj[dim + j] = c.clone();
    }
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if !obj[b].is_zero() {
            let f = obj[b].clone();
            for (o, v) in obj.iter_mut().zip(row) {
                if !v.is_zero() {
                    *o -= &f * v;
                }
            }
        }
    }
    t.obj = obj;
    if let Pivoting::Unbounded = t.run(n_struct) {
        return LpSolution::Unbounded;
    }

    let mut point = vec![Rational::zero(); dim];
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if b < dim {
            point[b] += &row[width];
        } else if b < 2 * dim {
            point[b - dim] -= &row[width];
        }
    }
    let value = dot(objective, &point);
    LpSolution::Optimal { point, value }
}
