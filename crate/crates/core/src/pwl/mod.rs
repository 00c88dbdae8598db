//! Exact continuous piecewise-linear functions `R -> R`.
//!
//! A [`PwlFunction1D`] is kept in normalized form: breakpoints are strictly
//! increasing and neighbouring pieces have different slopes, so the number
//! of pieces is always `breakpoints + 1`. Every binary operation works the
//! same way: collect a candidate set of abscissae that contains all
//! breakpoints of the result, evaluate the result there exactly, and
//! normalize.

mod flaps;
mod gap;
mod sawtooth;

pub use flaps::{decompose_flaps, FlapDecomposition, FlapSide, FlapSpec};
pub use gap::{gap_closed_form, gap_lower_bound, gap_size_threshold, l1_distance, triangle_l1_error};
pub use sawtooth::{hinge_layer, sawtooth, SawtoothParams};

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PwlFunction1D {
    breakpoints: Vec<Rational>,
    /// Value at each breakpoint.
    values: Vec<Rational>,
    /// One slope per piece, left to right.
    slopes: Vec<Rational>,
    /// Value at zero; only meaningful when there are no breakpoints.
    intercept: Rational,
}

impl fmt::Debug for PwlFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bps: Vec<String> = self.breakpoints.iter().map(format_rational).collect();
        let sl: Vec<String> = self.slopes.iter().map(format_rational).collect();
        write!(f, "Pwl {{ breakpoints: [{}], slopes: [{}], ", bps.join(", "), sl.join(", "))?;
        match self.values.first() {
            Some(v) => write!(f, "f({}) = {} }}", bps[0], format_rational(v)),
            None => write!(f, "f(0) = {} }}", format_rational(&self.intercept)),
        }
    }
}

impl PwlFunction1D {
    pub fn affine(slope: Rational, intercept: Rational) -> Self {
        Self { breakpoints: vec![], values: vec![], slopes: vec![slope], intercept }
    }

    pub fn constant(c: Rational) -> Self {
        Self::affine(Rational::zero(), c)
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn identity() -> Self {
        Self::affine(Rational::one(), Rational::zero())
    }

    /// `max{0, x - a}`
    pub fn relu_at(a: Rational) -> Self {
        Self::from_knots(Rational::zero(), vec![(a, Rational::zero())], Rational::one()).expect("single knot")
    }

    /// Builds from breakpoints, per-piece slopes and the value at the first
    /// breakpoint (or at zero when there are none). Collinear neighbours are
    /// merged.
    pub fn from_parts(breakpoints: Vec<Rational>, slopes: Vec<Rational>, anchor_value: Rational) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::Invalid(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        if breakpoints.is_empty() {
            return Ok(Self::affine(slopes[0].clone(), anchor_value));
        }
        let mut values = Vec::with_capacity(breakpoints.len());
        values.push(anchor_value);
        for i in 1..breakpoints.len() {
            let v = &values[i - 1] + &slopes[i] * (&breakpoints[i] - &breakpoints[i - 1]);
            values.push(v);
        }
        Ok(Self::normalized(breakpoints, values, slopes))
    }

    /// Builds from interpolation knots plus the slopes of the two unbounded pieces.
    pub fn from_knots(left_slope: Rational, knots: Vec<(Rational, Rational)>, right_slope: Rational) -> Result<Self> {
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Invalid("knot abscissae must be strictly increasing".into()));
        }
        if knots.is_empty() {
            if left_slope != right_slope {
                return Err(Error::Invalid("without knots both slopes must agree".into()));
            }
            return Err(Error::Invalid("at least one knot is needed to fix the intercept".into()));
        }
        let mut slopes = Vec::with_capacity(knots.len() + 1);
        slopes.push(left_slope);
        for w in knots.windows(2) {
            slopes.push((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0));
        }
        slopes.push(right_slope);
        let (xs, ys) = knots.into_iter().unzip();
        Ok(Self::normalized(xs, ys, slopes))
    }

    fn normalized(xs: Vec<Rational>, ys: Vec<Rational>, slopes: Vec<Rational>) -> Self {
        debug_assert_eq!(slopes.len(), xs.len() + 1);
        debug_assert!(!xs.is_empty());
        let intercept = &ys[0] - &slopes[0] * &xs[0];
        let mut breakpoints = Vec::with_capacity(xs.len());
        let mut values = Vec::with_capacity(xs.len());
        let mut kept = Vec::with_capacity(slopes.len());
        kept.push(slopes[0].clone());
        for (i, (x, y)) in xs.into_iter().zip(ys).enumerate() {
            if slopes[i + 1] != *kept.last().unwrap() {
                breakpoints.push(x);
                values.push(y);
                kept.push(slopes[i + 1].clone());
            }
        }
        if breakpoints.is_empty() {
            return Self::affine(kept.pop().unwrap(), intercept);
        }
        Self { breakpoints, values, slopes: kept, intercept: Rational::zero() }
    }

    /// Exact value at `x`.
    pub fn eval(&self, x: &Rational) -> Rational {
        if self.breakpoints.is_empty() {
            return &self.slopes[0] * x + &self.intercept;
        }
        // Index of the first breakpoint strictly greater than x.
        let i = self.breakpoints.partition_point(|b| b <= x);
        if i == 0 {
            &self.values[0] + &self.slopes[0] * (x - &self.breakpoints[0])
        } else {
            &self.values[i - 1] + &self.slopes[i] * (x - &self.breakpoints[i - 1])
        }
    }

    pub fn pieces(&self) -> usize {
        self.slopes.len()
    }

    /// Number of pieces meeting the open interval `(lo, hi)`.
    pub fn pieces_in(&self, lo: &Rational, hi: &Rational) -> usize {
        1 + self.breakpoints.iter().filter(|b| *b > lo && *b < hi).count()
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[Rational] {
        &self.slopes
    }

    /// Values at the breakpoints.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn left_slope(&self) -> &Rational {
        &self.slopes[0]
    }

    pub fn right_slope(&self) -> &Rational {
        self.slopes.last().unwrap()
    }

    /// `(x, f(x))` at the first breakpoint, or at zero for an affine function.
    pub fn anchor(&self) -> (Rational, Rational) {
        match self.breakpoints.first() {
            Some(x) => (x.clone(), self.values[0].clone()),
            None => (Rational::zero(), self.intercept.clone()),
        }
    }

    pub fn is_affine(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// The affine function the piece with index `i` lies on, as `(slope, intercept)`.
    pub fn piece_affine(&self, i: usize) -> (Rational, Rational) {
        let s = self.slopes[i].clone();
        if self.breakpoints.is_empty() {
            return (s, self.intercept.clone());
        }
        let (x, y) = if i == 0 { (&self.breakpoints[0], &self.values[0]) } else { (&self.breakpoints[i - 1], &self.values[i - 1]) };
        let b = y - &s * x;
        (s, b)
    }

    /// Closed interval of piece `i`; `None` stands for an infinite end.
    pub fn piece_interval(&self, i: usize) -> (Option<&Rational>, Option<&Rational>) {
        let lo = if i == 0 { None } else { self.breakpoints.get(i - 1) };
        let hi = self.breakpoints.get(i);
        (lo, hi)
    }

    /// One rational point strictly inside every piece.
    pub fn piece_probes(&self) -> Vec<Rational> {
        let one = Rational::one();
        let n = self.breakpoints.len();
        if n == 0 {
            return vec![Rational::zero()];
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push(&self.breakpoints[0] - &one);
        for w in self.breakpoints.windows(2) {
            out.push((&w[0] + &w[1]) / Rational::from_integer(2.into()));
        }
        out.push(&self.breakpoints[n - 1] + &one);
        out
    }

    /// Probe set used for equality checks: every piece midpoint, every
    /// breakpoint, and every breakpoint shifted by `±offset`.
    pub fn probe_set(&self, offset: &Rational) -> Vec<Rational> {
        let mut out = self.piece_probes();
        for b in &self.breakpoints {
            out.push(b - offset);
            out.push(b.clone());
            out.push(b + offset);
        }
        out.sort();
        out.dedup();
        out
    }

    /// Rebuilds a function from a superset of its breakpoints and an exact
    /// evaluator that is affine between (and beyond) consecutive candidates.
    pub fn from_candidates<F>(mut xs: Vec<Rational>, eval: F) -> Self
    where
        F: Fn(&Rational) -> Rational,
    {
        xs.sort();
        xs.dedup();
        let one = Rational::one();
        if xs.is_empty() {
            let y0 = eval(&Rational::zero());
            let y1 = eval(&one);
            return Self::affine(&y1 - &y0, y0);
        }
        let ys: Vec<Rational> = xs.iter().map(&eval).collect();
        let left = &ys[0] - eval(&(&xs[0] - &one));
        let right = eval(&(xs.last().unwrap() + &one)) - ys.last().unwrap();
        let mut slopes = Vec::with_capacity(xs.len() + 1);
        slopes.push(left);
        for i in 1..xs.len() {
            slopes.push((&ys[i] - &ys[i - 1]) / (&xs[i] - &xs[i - 1]));
        }
        slopes.push(right);
        Self::normalized(xs, ys, slopes)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            slopes: self.slopes.iter().map(|s| s * c).collect(),
            intercept: &self.intercept * c,
        }
    }

    pub fn add_constant(&self, c: &Rational) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            slopes: self.slopes.clone(),
            intercept: if self.is_affine() { &self.intercept + c } else { Rational::zero() },
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let xs = merged(&self.breakpoints, &other.breakpoints);
        Self::from_candidates(xs, |x| self.eval(x) + other.eval(x))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// `bias + Σ c_i f_i`.
    pub fn linear_combination(terms: &[(Rational, &Self)], bias: &Rational) -> Self {
        let mut xs = Vec::new();
        for (c, f) in terms {
            if !c.is_zero() {
                xs.extend(f.breakpoints.iter().cloned());
            }
        }
        Self::from_candidates(xs, |x| {
            terms.iter().filter(|(c, _)| !c.is_zero()).fold(bias.clone(), |acc, (c, f)| acc + c * f.eval(x))
        })
    }

    /// Points where the function takes the value `level` on a non-constant piece.
    pub fn preimages(&self, level: &Rational) -> Vec<Rational> {
        let mut out = Vec::new();
        for i in 0..self.pieces() {
            let (s, b) = self.piece_affine(i);
            if s.is_zero() {
                continue;
            }
            let x = (level - &b) / &s;
            let (lo, hi) = self.piece_interval(i);
            if lo.is_none_or(|lo| &x >= lo) && hi.is_none_or(|hi| &x <= hi) {
                out.push(x);
            }
        }
        out.dedup();
        out
    }

    pub fn zeros(&self) -> Vec<Rational> {
        self.preimages(&Rational::zero())
    }

    /// `outer ∘ inner`, i.e. `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut xs = inner.breakpoints.clone();
        for c in &self.breakpoints {
            xs.extend(inner.preimages(c));
        }
        Self::from_candidates(xs, |x| self.eval(&inner.eval(x)))
    }

    /// Pointwise maximum; crossing points are computed exactly.
    pub fn max(&self, other: &Self) -> Self {
        let diff = self.sub(other);
        let mut xs = merged(&self.breakpoints, &other.breakpoints);
        xs.extend(diff.zeros());
        Self::from_candidates(xs, |x| {
            let a = self.eval(x);
            let b = other.eval(x);
            if a >= b {
                a
            } else {
                b
            }
        })
    }

    pub fn min(&self, other: &Self) -> Self {
        self.neg().max(&other.neg()).neg()
    }

    /// `max{0, f}`.
    pub fn relu(&self) -> Self {
        self.max(&Self::zero())
    }

    pub fn to_json(&self) -> PwlJson {
        let (x, y) = self.anchor();
        PwlJson {
            format: PWL_FORMAT.to_string(),
            left_slope: self.left_slope().clone(),
            anchor: AnchorJson { x, y },
            breakpoints: self.breakpoints.clone(),
            slopes: self.slopes.clone(),
        }
    }

    pub fn from_json(json: &PwlJson) -> Result<Self> {
        if json.format != PWL_FORMAT {
            return Err(Error::Parse(format!("expected format {PWL_FORMAT:?}, got {:?}", json.format)));
        }
        if json.slopes.first() != Some(&json.left_slope) {
            return Err(Error::Parse("left_slope must equal the first slope".into()));
        }
        let expected_x = json.breakpoints.first().cloned().unwrap_or_else(Rational::zero);
        if json.anchor.x != expected_x {
            return Err(Error::Parse("anchor must sit at the first breakpoint (or at 0 when there are none)".into()));
        }
        let f = Self::from_parts(json.breakpoints.clone(), json.slopes.clone(), json.anchor.y.clone())
            .map_err(|e| Error::Parse(e.to_string()))?;
        if f.breakpoints.len() != json.breakpoints.len() {
            return Err(Error::Parse("function is not normalized: neighbouring slopes coincide".into()));
        }
        Ok(f)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: PwlJson = serde_json::from_str(text)?;
        Self::from_json(&json)
    }
}

fn merged(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut xs: Vec<Rational> = a.iter().chain(b).cloned().collect();
    xs.sort();
    xs.dedup();
    xs
}

pub const PWL_FORMAT: &str = "pwl-v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorJson {
    #[serde(with = "crate::rational")]
    pub x: Rational,
    #[serde(with = "crate::rational")]
    pub y: Rational,
}

/// Wire form of a [`PwlFunction1D`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PwlJson {
    pub format: String,
    #[serde(with = "crate::rational")]
    pub left_slope: Rational,
    pub anchor: AnchorJson,
    #[serde(with = "crate::rational::vec")]
    pub breakpoints: Vec<Rational>,
    #[serde(with = "crate::rational::vec")]
    pub slopes: Vec<Rational>,
}
