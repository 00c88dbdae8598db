use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::PwlFunction1D;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlapSide {
    /// `slope · (x - a)` for `x <= a`, zero to the right.
    Left,
    /// zero for `x <= a`, `slope · (x - a)` to the right.
    Right,
}

/// A one-breakpoint function that vanishes on one side of its breakpoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlapSpec {
    pub side: FlapSide,
    #[serde(with = "crate::rational")]
    pub breakpoint: Rational,
    #[serde(with = "crate::rational")]
    pub slope: Rational,
}

impl FlapSpec {
    pub fn eval(&self, x: &Rational) -> Rational {
        let active = match self.side {
            FlapSide::Left => *x <= self.breakpoint,
            FlapSide::Right => *x > self.breakpoint,
        };
        if active {
            &self.slope * (x - &self.breakpoint)
        } else {
            Rational::zero()
        }
    }

    pub fn to_pwl(&self) -> PwlFunction1D {
        let (l, r) = match self.side {
            FlapSide::Left => (self.slope.clone(), Rational::zero()),
            FlapSide::Right => (Rational::zero(), self.slope.clone()),
        };
        PwlFunction1D::from_knots(l, vec![(self.breakpoint.clone(), Rational::zero())], r).expect("one knot")
    }
}

/// `f = constant + Σ flaps`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlapDecomposition {
    pub flaps: Vec<FlapSpec>,
    #[serde(with = "crate::rational")]
    pub constant: Rational,
}

impl FlapDecomposition {
    pub fn eval(&self, x: &Rational) -> Rational {
        self.flaps.iter().fold(self.constant.clone(), |acc, f| acc + f.eval(x))
    }

    pub fn len(&self) -> usize {
        self.flaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flaps.is_empty()
    }
}

/// Writes a normalized `p`-piece function as a constant plus at most `p`
/// flaps whose breakpoints are breakpoints of `f`.
///
/// The standard layout uses one right flap at the last breakpoint (slope
/// `s_R`) and left flaps at every breakpoint, shifting `f` so it vanishes
/// at the last breakpoint. When `s_R = 0` the right flap disappears. When
/// only `s_L = 0` the mirrored layout is used instead (one left flap with
/// slope `s_L`, dropped, plus right flaps), so either flat end saves a flap.
///
/// A single affine piece with nonzero slope needs two flaps at the origin.
pub fn decompose_flaps(f: &PwlFunction1D) -> FlapDecomposition {
    let bps = f.breakpoints();
    let slopes = f.slopes();
    let m = bps.len();
    if m == 0 {
        let (slope, intercept) = f.piece_affine(0);
        let flaps = if slope.is_zero() {
            vec![]
        } else {
            vec![
                FlapSpec { side: FlapSide::Left, breakpoint: Rational::zero(), slope: slope.clone() },
                FlapSpec { side: FlapSide::Right, breakpoint: Rational::zero(), slope },
            ]
        };
        return FlapDecomposition { flaps, constant: intercept };
    }

    let mirrored = !f.right_slope().is_zero() && f.left_slope().is_zero();
    let mut flaps = Vec::with_capacity(m + 1);
    if !mirrored {
        // slope of piece i (0-based, i < m) = Σ_{j >= i} t_j
        for i in 0..m {
            let t = if i + 1 < m { &slopes[i] - &slopes[i + 1] } else { slopes[m - 1].clone() };
            if !t.is_zero() {
                flaps.push(FlapSpec { side: FlapSide::Left, breakpoint: bps[i].clone(), slope: t });
            }
        }
        let r = f.right_slope().clone();
        if !r.is_zero() {
            flaps.push(FlapSpec { side: FlapSide::Right, breakpoint: bps[m - 1].clone(), slope: r });
        }
        FlapDecomposition { flaps, constant: f.values()[m - 1].clone() }
    } else {
        // slope of piece i + 1 = Σ_{j <= i} r_j
        for i in 0..m {
            let r = if i == 0 { slopes[1].clone() } else { &slopes[i + 1] - &slopes[i] };
            if !r.is_zero() {
                flaps.push(FlapSpec { side: FlapSide::Right, breakpoint: bps[i].clone(), slope: r });
            }
        }
        FlapDecomposition { flaps, constant: f.values()[0].clone() }
    }
}
