use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::PwlFunction1D;
use crate::error::{Error, Result};
use crate::rational::{int, Rational};

/// Parameters of the composed sawtooth `h_{a^k} ∘ … ∘ h_{a^1}`.
///
/// `height` is the range bound `M`; every layer vector is strictly
/// increasing inside `(0, M)` and all layers have the same length `w - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SawtoothParams {
    #[serde(with = "crate::rational")]
    pub height: Rational,
    #[serde(with = "crate::rational::matrix")]
    pub layers: Vec<Vec<Rational>>,
}

impl SawtoothParams {
    pub fn new(height: Rational, layers: Vec<Vec<Rational>>) -> Result<Self> {
        let p = Self { height, layers };
        p.validate()?;
        Ok(p)
    }

    /// Equally spaced layers `a = (M/w, 2M/w, …, (w-1)M/w)` repeated `k` times.
    pub fn uniform(width: usize, depth: usize, height: Rational) -> Result<Self> {
        if width < 2 {
            return Err(Error::Invalid(format!("sawtooth width must be at least 2, got {width}")));
        }
        let w = int(width as i64);
        let layer: Vec<Rational> = (1..width).map(|i| &height * int(i as i64) / &w).collect();
        Self::new(height, vec![layer; depth])
    }

    pub fn validate(&self) -> Result<()> {
        if !self.height.is_positive() {
            return Err(Error::Invalid("sawtooth height M must be positive".into()));
        }
        let Some(first) = self.layers.first() else {
            return Err(Error::Invalid("sawtooth needs at least one layer (k >= 1)".into()));
        };
        if first.is_empty() {
            return Err(Error::Invalid("each layer needs at least one interior point (w >= 2)".into()));
        }
        for (i, a) in self.layers.iter().enumerate() {
            if a.len() != first.len() {
                return Err(Error::Invalid(format!("layer {} has length {}, expected {}", i + 1, a.len(), first.len())));
            }
            let inside = a.first().is_some_and(|x| x.is_positive()) && a.last().is_some_and(|x| *x < self.height);
            if !inside || a.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!(
                    "layer {} must satisfy 0 < a_1 < ... < a_{} < M",
                    i + 1,
                    a.len()
                )));
            }
        }
        Ok(())
    }

    /// `w`: pieces of a single layer inside `[0, M]`.
    pub fn width(&self) -> usize {
        self.layers.first().map_or(0, |a| a.len() + 1)
    }

    /// `k`: number of composed layers.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `w^k`
    pub fn predicted_pieces(&self) -> u128 {
        (self.width() as u128).pow(self.depth() as u32)
    }
}

/// The single oscillating layer `h_a`: zero on `(-∞, 0]`, alternating
/// between `0` and `M` at the points of `a`, reaching `M - h_a(a_p)` at `M`
/// and continuing linearly beyond.
pub fn hinge_layer(height: &Rational, a: &[Rational]) -> Result<PwlFunction1D> {
    SawtoothParams::new(height.clone(), vec![a.to_vec()])?;
    let mut knots = Vec::with_capacity(a.len() + 2);
    knots.push((Rational::zero(), Rational::zero()));
    for (i, x) in a.iter().enumerate() {
        let y = if (i + 1) % 2 == 1 { height.clone() } else { Rational::zero() };
        knots.push((x.clone(), y));
    }
    let last = knots.last().unwrap().clone();
    let end = height - &last.1;
    let right = (&end - &last.1) / (height - &last.0);
    knots.push((height.clone(), end));
    PwlFunction1D::from_knots(Rational::zero(), knots, right)
}

/// `H_{a^1..a^k} = h_{a^k} ∘ … ∘ h_{a^1}`.
pub fn sawtooth(params: &SawtoothParams) -> Result<PwlFunction1D> {
    params.validate()?;
    let mut acc = PwlFunction1D::identity();
    for a in &params.layers {
        let h = hinge_layer(&params.height, a)?;
        acc = h.compose(&acc);
    }
    Ok(acc)
}
