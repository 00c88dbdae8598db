//! Globally optimal empirical risk minimization for one-hidden-layer ReLU
//! networks `f(x) = Σ s_i σ(ãⁱ · x + b̃_i)`.
//!
//! The search fixes the output signs and, for every unit, which data points
//! it is active on. Each guess leaves a convex problem in the unit weights;
//! the best solution over all guesses is a global optimum. The combinatorial
//! shell is exact (rational LPs decide which splits are realizable); the
//! convex subproblems run in `f64`.

mod global;
mod oned;
mod qp;

pub use global::{train_global, train_global_1d_units};
pub use oned::train_global_1d;
pub use qp::{solve_subproblem, ConvexSubproblem, SubproblemSolution, QP_MAX_ITER};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ReluNetwork;
use crate::rational::{from_f64, to_f64, Rational};
use crate::regions::{lp_feasible, LinearConstraint};

/// Data sets larger than this are rejected by the `2^D` split enumeration.
pub const MAX_DICHOTOMY_POINTS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Invalid("dataset needs at least one point".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
        }
        let n = xs[0].len();
        if n == 0 {
            return Err(Error::Invalid("points need at least one coordinate".into()));
        }
        for x in &xs {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
        }
        if xs.iter().flatten().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("dataset values must be finite".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Points `(x, y)` with a scalar input.
    pub fn from_pairs_1d(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|p| vec![p.0]).collect(), points.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs[0].len()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Multiplies every target by `c`.
    pub fn scaled_targets(&self, c: f64) -> Self {
        Self { xs: self.xs.clone(), ys: self.ys.iter().map(|y| y * c).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `(p - y)²`
    Squared,
    /// `max{0, 1 - p y}`
    Hinge,
}

impl LossKind {
    pub fn eval(self, prediction: f64, target: f64) -> f64 {
        match self {
            LossKind::Squared => (prediction - target).powi(2),
            LossKind::Hinge => (1.0 - prediction * target).max(0.0),
        }
    }

    /// A subgradient in the prediction.
    pub fn subgradient(self, prediction: f64, target: f64) -> f64 {
        match self {
            LossKind::Squared => 2.0 * (prediction - target),
            LossKind::Hinge => {
                if 1.0 - prediction * target > 0.0 {
                    -target
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Squared => "squared",
            LossKind::Hinge => "hinge",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(LossKind::Squared),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::Parse(format!("unknown loss {other:?} (expected squared or hinge)"))),
        }
    }
}

/// Mean loss of the given predictions.
pub fn empirical_loss(predictions: &[f64], data: &Dataset, loss: LossKind) -> Result<f64> {
    if predictions.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: predictions.len() });
    }
    let total: f64 = predictions.iter().zip(data.ys()).map(|(p, y)| loss.eval(*p, *y)).sum();
    Ok(total / data.len() as f64)
}

/// Mean loss of a scalar network, evaluated exactly and rounded once per point.
pub fn network_loss(net: &ReluNetwork, data: &Dataset, loss: LossKind) -> Result<f64> {
    let preds = data
        .xs()
        .iter()
        .map(|x| {
            let q = x.iter().map(|v| from_f64(*v)).collect::<Result<Vec<_>>>()?;
            Ok(to_f64(&net.eval(&q)?))
        })
        .collect::<Result<Vec<_>>>()?;
    empirical_loss(&preds, data, loss)
}

/// An ordered split of the data: unit active on `positive`, inactive on `negative`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dichotomy {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

impl Dichotomy {
    pub fn from_mask(mask: u64, d: usize) -> Self {
        let (positive, negative) = (0..d).partition(|&j| mask >> j & 1 == 1);
        Self { positive, negative }
    }

    pub fn mask(&self) -> u64 {
        self.positive.iter().fold(0, |m, &j| m | 1 << j)
    }

    pub fn is_positive(&self, j: usize) -> bool {
        self.positive.contains(&j)
    }
}

/// Every split `(P₊, P₋)` realizable by a hyperplane with `c·x + δ > 0` on
/// `P₊` and `<= 0` on `P₋`, decided by an exact LP per split. Sorted by the
/// bitmask of `P₊`.
pub fn enumerate_dichotomies(data: &Dataset) -> Result<Vec<Dichotomy>> {
    let d = data.len();
    if d > MAX_DICHOTOMY_POINTS {
        return Err(Error::BudgetExceeded(format!(
            "split enumeration supports at most {MAX_DICHOTOMY_POINTS} points, got {d}"
        )));
    }
    let n = data.dim();
    let points: Vec<Vec<Rational>> =
        data.xs().iter().map(|x| x.iter().map(|v| from_f64(*v)).collect()).collect::<Result<_>>()?;
    let lifted: Vec<Vec<Rational>> = points
        .into_iter()
        .map(|mut p| {
            p.push(Rational::from_integer(1.into()));
            p
        })
        .collect();
    let keep: Vec<Option<Dichotomy>> = (0u64..1 << d)
        .into_par_iter()
        .map(|mask| {
            let rows: Vec<LinearConstraint> = (0..d)
                .map(|j| {
                    let zero = Rational::from_integer(0.into());
                    if mask >> j & 1 == 1 {
                        LinearConstraint::gt(lifted[j].clone(), zero)
                    } else {
                        LinearConstraint::le(lifted[j].clone(), zero)
                    }
                })
                .collect();
            lp_feasible(n + 1, &rows).is_feasible().then(|| Dichotomy::from_mask(mask, d))
        })
        .collect();
    Ok(keep.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    /// Stationarity tolerance of the convex solver.
    pub tol: f64,
    /// Largest number of subproblems the enumeration may visit.
    pub budget: u64,
    /// Disables symmetry pruning so every tuple is solved.
    pub verify: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { tol: 1e-8, budget: 5_000_000, verify: false }
    }
}

/// What the search covered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    /// Sign vectors `s` tried.
    pub sign_vectors: u64,
    /// Per-unit choices (dichotomies, or breakpoint-interval tuples in 1-D).
    pub choices: u64,
    /// `sign_vectors × tuples`: the full grid.
    pub grid: u64,
    pub solved: u64,
    /// Skipped by symmetry (only when verification is off).
    pub pruned: u64,
    pub failures: u64,
    pub verify: bool,
}

/// One hidden unit `s σ(a · x + b)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Unit {
    pub a: Vec<f64>,
    pub b: f64,
    pub s: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainResult {
    pub method: String,
    pub width: usize,
    pub input_dim: usize,
    pub loss_kind: LossKind,
    pub units: Vec<Unit>,
    /// Output constant (zero for the unit-family trainers).
    pub output_bias: f64,
    /// Per-unit splits of the winning guess (unit-family trainers).
    pub dichotomies: Vec<Dichotomy>,
    /// Breakpoint intervals `i_j` (1-based into the sorted data) and slope
    /// orders `S_j` of the winning guess (piecewise trainer).
    pub intervals: Vec<usize>,
    pub slope_signs: Vec<i8>,
    /// Mean loss of the returned network.
    pub loss: f64,
    /// Subproblem objective (sum, not mean) at the winning guess.
    pub objective: f64,
    pub tol: f64,
    pub certificate: Certificate,
    #[serde(skip_serializing)]
    pub network: ReluNetwork,
}

impl TrainResult {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// `Σ s_i σ(a_i · x + b_i) + output_bias` in floating point.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.units
            .iter()
            .map(|u| f64::from(u.s) * (u.a.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + u.b).max(0.0))
            .sum::<f64>()
            + self.output_bias
    }
}

/// Search cell outcome, reduced deterministically by `(objective, index)`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Reduction {
    pub solved: u64,
    pub pruned: u64,
    pub failures: u64,
    pub best: Option<(f64, u64, Vec<f64>)>,
}

impl Reduction {
    pub fn merge(mut self, other: Self) -> Self {
        self.solved += other.solved;
        self.pruned += other.pruned;
        self.failures += other.failures;
        self.best = match (self.best, other.best) {
            (None, b) | (b, None) => b,
            (Some(a), Some(b)) => {
                if (b.0, b.1) < (a.0, a.1) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        };
        self
    }

    pub fn record(mut self, outcome: Outcome, index: u64) -> Self {
        match outcome {
            Outcome::Pruned => self.pruned += 1,
            Outcome::Failed => self.failures += 1,
            Outcome::Solved(sol) => {
                self.solved += 1;
                if sol.objective.is_nan() {
                    self.failures += 1;
                    self.solved -= 1;
                } else {
                    self = self.merge(Reduction { best: Some((sol.objective, index, sol.z)), ..Default::default() });
                }
            }
        }
        self
    }
}

pub(crate) enum Outcome {
    Pruned,
    Failed,
    Solved(SubproblemSolution),
}

/// Runs `solve` on every index of the grid in parallel.
pub(crate) fn search<F>(grid: u64, solve: F) -> Reduction
where
    F: Fn(u64) -> Outcome + Sync,
{
    (0..grid)
        .into_par_iter()
        .fold(Reduction::default, |acc, idx| acc.record(solve(idx), idx))
        .reduce(Reduction::default, Reduction::merge)
}
