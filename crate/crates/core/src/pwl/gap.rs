use num_traits::{Signed, Zero};

use super::PwlFunction1D;
use crate::error::{Error, Result};
use crate::rational::{int, rat, Rational};

/// Exact `∫_lo^hi |f - g| dx`.
///
/// The difference is piecewise linear; splitting at its breakpoints and
/// zero crossings leaves subintervals where it has constant sign, and each
/// of those integrates exactly by the trapezoid rule.
pub fn l1_distance(f: &PwlFunction1D, g: &PwlFunction1D, lo: &Rational, hi: &Rational) -> Result<Rational> {
    if lo > hi {
        return Err(Error::Invalid("l1_distance needs lo <= hi".into()));
    }
    let d = f.sub(g);
    let mut cuts: Vec<Rational> = d
        .breakpoints()
        .iter()
        .cloned()
        .chain(d.zeros())
        .filter(|x| x > lo && x < hi)
        .collect();
    cuts.push(lo.clone());
    cuts.push(hi.clone());
    cuts.sort();
    cuts.dedup();
    let two = int(2);
    let mut total = Rational::zero();
    for w in cuts.windows(2) {
        let mid = (d.eval(&w[0]) + d.eval(&w[1])) / &two;
        total += mid.abs() * (&w[1] - &w[0]);
    }
    Ok(total)
}

/// Certified lower bound on `‖s_{w^k} - g‖₁` over `[0,1]` for any comparator
/// `g` with `p` pieces: `max(0, (⌊w^k/2⌋ - (p-1)) / (2 w^k))`.
pub fn gap_lower_bound(w: u32, k: u32, p: u32) -> Rational {
    let q = (w as i64).pow(k);
    let protected = q / 2 - (p as i64 - 1);
    if protected <= 0 {
        Rational::zero()
    } else {
        rat(protected, 2 * q)
    }
}

/// The looser closed form `1/4 - (2p-1)/(4 w^k)`; may be negative.
pub fn gap_closed_form(w: u32, k: u32, p: u32) -> Rational {
    let q = (w as i64).pow(k);
    rat(1, 4) - rat(2 * p as i64 - 1, 4 * q)
}

/// Size below which depth-`k'+1` networks stay at `L1` distance more than
/// `delta` from the depth-`k+1` width-`w` sawtooth:
/// `k' · w^{k/k'} · (1 - 4δ)^{1/k'} / 2^{1 + 1/k'}`.
pub fn gap_size_threshold(k_shallow: u32, w: u32, k: u32, delta: f64) -> f64 {
    let kp = k_shallow as f64;
    kp * (w as f64).powf(k as f64 / kp) * (1.0 - 4.0 * delta).powf(1.0 / kp) / 2f64.powf(1.0 + 1.0 / kp)
}

/// `L1` error of the line through `(left, y1)`, `(right, y2)` against one
/// unit-height triangle of `s_q`, where the triangle occupies `[0, 2/q]`.
pub fn triangle_l1_error(y1: &Rational, y2: &Rational, q: u32) -> Rational {
    let q = int(q as i64);
    let width = int(2) / &q;
    let tri = PwlFunction1D::from_knots(
        Rational::zero(),
        vec![(Rational::zero(), Rational::zero()), (int(1) / &q, int(1)), (width.clone(), Rational::zero())],
        Rational::zero(),
    )
    .expect("increasing knots");
    let line = PwlFunction1D::affine((y2 - y1) / &width, y1.clone());
    l1_distance(&tri, &line, &Rational::zero(), &width).expect("ordered interval")
}
