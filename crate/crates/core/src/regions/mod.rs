//! Linear regions of ReLU networks on `R^n`.
//!
//! Cells are built by splitting a bounding box neuron by neuron: on the
//! current cell every pre-activation is affine, so its zero hyperplane cuts
//! the cell in at most two full-dimensional children. Children are kept only
//! when strictly feasible. Pieces are then obtained by merging cells that
//! share a facet and carry the same affine functional.

mod lp;

pub use lp::{lp_feasible, lp_maximize, Feasibility, LinearConstraint, LpSolution, Sense};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::network::{AffineMap, ReluNetwork};
use crate::rational::{dot, int, Rational};

/// Half-width `B` of the default box `[-B, B]^n`.
pub const DEFAULT_BOX_HALF_WIDTH: i64 = 1024;

/// Cells allowed before enumeration gives up.
pub const DEFAULT_CELL_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

impl BoundingBox {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() || lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::Invalid("bounding box needs lo < hi in every coordinate".into()));
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^n`
    pub fn cube(n: usize, lo: Rational, hi: Rational) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn default_for(n: usize) -> Self {
        let b = int(DEFAULT_BOX_HALF_WIDTH);
        Self::cube(n, -b.clone(), b).expect("nonempty")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn constraints(&self) -> Vec<LinearConstraint> {
        let n = self.dim();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let e: Vec<Rational> = (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect();
            out.push(LinearConstraint::ge(e.clone(), self.lo[i].clone()));
            out.push(LinearConstraint::le(e, self.hi[i].clone()));
        }
        out
    }
}

/// A full-dimensional activation cell.
///
/// `constraints` describe the closed cell (box faces first, then one row
/// per neuron whose hyperplane actually cuts its parent). `pattern` holds
/// one bit per hidden unit, layer by layer. `interior` is a rational point
/// strictly inside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionCell {
    pub constraints: Vec<LinearConstraint>,
    pub affine: AffineMap,
    pub pattern: Vec<bool>,
    pub interior: Vec<Rational>,
}

impl RegionCell {
    pub fn pattern_string(&self) -> String {
        self.pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn to_json(&self) -> CellJson {
        CellJson { pattern: self.pattern_string(), constraints: self.constraints.clone(), affine: self.affine.clone() }
    }
}

/// One line of the JSON-lines cell export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellJson {
    pub pattern: String,
    pub constraints: Vec<LinearConstraint>,
    pub affine: AffineMap,
}

/// Affine function of the input, `c · x + d`.
#[derive(Clone, Debug)]
struct Form {
    coef: Vec<Rational>,
    constant: Rational,
}

impl Form {
    fn zero(n: usize) -> Self {
        Self { coef: vec![Rational::zero(); n], constant: Rational::zero() }
    }

    fn eval(&self, x: &[Rational]) -> Rational {
        dot(&self.coef, x) + &self.constant
    }

    fn combine(row: &[Rational], bias: &Rational, inputs: &[Form], n: usize) -> Self {
        let mut out = Self { coef: vec![Rational::zero(); n], constant: bias.clone() };
        for (w, f) in row.iter().zip(inputs) {
            if w.is_zero() {
                continue;
            }
            for (c, fc) in out.coef.iter_mut().zip(&f.coef) {
                *c += w * fc;
            }
            out.constant += w * &f.constant;
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Partial {
    constraints: Vec<LinearConstraint>,
    pattern: Vec<bool>,
    interior: Vec<Rational>,
    /// Post-activation forms of the last finished layer.
    post: Vec<Form>,
    /// Pre-activation forms of the layer being split.
    pre: Vec<Form>,
}

#[derive(Clone, Debug)]
pub struct EnumerateOptions {
    pub bounding_box: Option<BoundingBox>,
    pub cell_budget: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self { bounding_box: None, cell_budget: DEFAULT_CELL_BUDGET }
    }
}

impl EnumerateOptions {
    pub fn with_box(bounding_box: BoundingBox) -> Self {
        Self { bounding_box: Some(bounding_box), ..Self::default() }
    }
}

/// All full-dimensional activation cells of a scalar network inside the box
/// (default `[-1024, 1024]^n`), sorted by pattern.
///
/// Runs on the current rayon pool; the result does not depend on the
/// number of threads.
pub fn enumerate_cells(net: &ReluNetwork, opts: &EnumerateOptions) -> Result<Vec<RegionCell>> {
    check_dim(1, net.output_dim())?;
    let n = net.input_dim();
    let bbox = opts.bounding_box.clone().unwrap_or_else(|| BoundingBox::default_for(n));
    check_dim(n, bbox.dim())?;
    let constraints = bbox.constraints();
    let interior: Vec<Rational> = bbox.lo.iter().zip(&bbox.hi).map(|(l, h)| (l + h) / int(2)).collect();
    let identity: Vec<Form> = (0..n)
        .map(|i| Form { coef: (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect(), constant: int(0) })
        .collect();
    let mut frontier = vec![Partial { constraints, pattern: vec![], interior, post: identity, pre: vec![] }];

    for layer in net.hidden() {
        for cell in &mut frontier {
            cell.pre = layer.weights.iter().zip(&layer.bias).map(|(row, b)| Form::combine(row, b, &cell.post, n)).collect();
            cell.post = Vec::with_capacity(layer.out_dim());
        }
        for unit in 0..layer.out_dim() {
            let next: Vec<Vec<Partial>> = frontier.into_par_iter().map(|cell| split(cell, unit)).collect();
            frontier = next.into_iter().flatten().collect();
            if frontier.len() > opts.cell_budget {
                return Err(Error::BudgetExceeded(format!(
                    "more than {} cells while splitting; raise the budget or shrink the box",
                    opts.cell_budget
                )));
            }
        }
    }

    let out = net.output();
    let mut cells: Vec<RegionCell> = frontier
        .into_iter()
        .map(|cell| {
            let f = Form::combine(&out.weights[0], &out.bias[0], &cell.post, n);
            RegionCell {
                constraints: cell.constraints,
                affine: AffineMap { weights: vec![f.coef], bias: vec![f.constant] },
                pattern: cell.pattern,
                interior: cell.interior,
            }
        })
        .collect();
    cells.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    Ok(cells)
}

/// Children of `cell` for the given unit, inactive side first.
fn split(mut cell: Partial, unit: usize) -> Vec<Partial> {
    let n = cell.interior.len();
    let z = cell.pre[unit].clone();
    if z.coef.iter().all(Zero::is_zero) {
        let active = z.constant.is_positive();
        cell.pattern.push(active);
        cell.post.push(if active { z } else { Form::zero(n) });
        return vec![cell];
    }
    // z(x) <= 0  <=>  coef · x <= -constant
    let off = LinearConstraint::le(z.coef.clone(), -z.constant.clone());
    let on = LinearConstraint::ge(z.coef.clone(), -z.constant.clone());
    let at = z.eval(&cell.interior);
    let off_point = if at.is_negative() { Some(cell.interior.clone()) } else { strict_point(&cell.constraints, &off) };
    let on_point = if at.is_positive() { Some(cell.interior.clone()) } else { strict_point(&cell.constraints, &on) };

    let mut out = Vec::with_capacity(2);
    let both = off_point.is_some() && on_point.is_some();
    for (active, point, row) in [(false, off_point, off), (true, on_point, on)] {
        let Some(point) = point else { continue };
        let mut child = cell.clone();
        if both {
            child.constraints.push(row);
        }
        child.interior = point;
        child.pattern.push(active);
        child.post.push(if active { z.clone() } else { Form::zero(n) });
        out.push(child);
    }
    out
}

fn strict_point(constraints: &[LinearConstraint], extra: &LinearConstraint) -> Option<Vec<Rational>> {
    let rows: Vec<LinearConstraint> = constraints.iter().chain(std::iter::once(extra)).map(LinearConstraint::strict).collect();
    match lp_feasible(extra.dim(), &rows) {
        Feasibility::Feasible(x) => Some(x),
        Feasibility::Infeasible => None,
    }
}

/// Cells plus their grouping into pieces.
#[derive(Clone, Debug)]
pub struct PieceCount {
    pub cells: Vec<RegionCell>,
    /// Piece index of every cell; pieces are numbered by first cell.
    pub piece_of: Vec<usize>,
    pub pieces: usize,
}

/// Number of maximal connected regions on which the network is affine.
pub fn count_pieces(net: &ReluNetwork, opts: &EnumerateOptions) -> Result<usize> {
    Ok(analyze_pieces(net, opts)?.pieces)
}

pub fn analyze_pieces(net: &ReluNetwork, opts: &EnumerateOptions) -> Result<PieceCount> {
    let cells = enumerate_cells(net, opts)?;
    let n = net.input_dim();
    let box_rows = opts.bounding_box.as_ref().map_or(2 * n, |b| 2 * b.dim());

    let mut pairs = Vec::new();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            if cells[i].affine == cells[j].affine {
                pairs.push((i, j));
            }
        }
    }
    let adjacent: Vec<bool> =
        pairs.par_iter().map(|&(i, j)| share_facet(&cells[i], &cells[j], box_rows)).collect();

    let mut parent: Vec<usize> = (0..cells.len()).collect();
    for (&(i, j), adj) in pairs.iter().zip(adjacent) {
        if adj {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![usize::MAX; cells.len()];
    let mut piece_of = Vec::with_capacity(cells.len());
    let mut pieces = 0;
    for i in 0..cells.len() {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = pieces;
            pieces += 1;
        }
        piece_of.push(label[root]);
    }
    Ok(PieceCount { cells, piece_of, pieces })
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// True when the closed cells meet in an `(n-1)`-dimensional set.
fn share_facet(a: &RegionCell, b: &RegionCell, box_rows: usize) -> bool {
    for h in a.constraints.iter().skip(box_rows) {
        let mut rows = vec![LinearConstraint::eq(h.normal.clone(), h.offset.clone())];
        for c in a.constraints.iter().chain(&b.constraints) {
            if !same_hyperplane(c, h) {
                rows.push(c.strict());
            }
        }
        if lp_feasible(h.dim(), &rows).is_feasible() {
            return true;
        }
    }
    false
}

/// `c` and `h` describe the same hyperplane, in either orientation.
fn same_hyperplane(c: &LinearConstraint, h: &LinearConstraint) -> bool {
    let Some(k) = h.normal.iter().position(|q| !q.is_zero()) else {
        return false;
    };
    if c.normal[k].is_zero() {
        return false;
    }
    let ratio = &c.normal[k] / &h.normal[k];
    c.normal.iter().zip(&h.normal).all(|(x, y)| *x == y * &ratio) && c.offset == &h.offset * &ratio
}
