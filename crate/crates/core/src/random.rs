//! Seeded generators for rational test objects.
//!
//! All draws go through [`ChaCha8Rng`], so a seed fixes every output on
//! every platform.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::network::{AffineMap, ReluNetwork};
use crate::pwl::PwlFunction1D;
use crate::rational::{rat, Rational};
use crate::zonotope::Zonotope;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Numerator uniform in `[-num, num]`, denominator uniform in `[1, den]`.
pub fn rational<R: Rng>(rng: &mut R, num: i64, den: i64) -> Rational {
    rat(rng.gen_range(-num..=num), rng.gen_range(1..=den.max(1)))
}

pub fn nonzero_rational<R: Rng>(rng: &mut R, num: i64, den: i64) -> Rational {
    loop {
        let q = rational(rng, num, den);
        if q != Rational::from_integer(0.into()) {
            return q;
        }
    }
}

/// A normalized function with exactly `pieces` pieces.
pub fn pwl<R: Rng>(rng: &mut R, pieces: usize) -> PwlFunction1D {
    let pieces = pieces.max(1);
    let mut bps: Vec<Rational> = Vec::with_capacity(pieces - 1);
    while bps.len() < pieces - 1 {
        let x = rational(rng, 40, 4);
        if !bps.contains(&x) {
            bps.push(x);
        }
    }
    bps.sort();
    let mut slopes: Vec<Rational> = Vec::with_capacity(pieces);
    while slopes.len() < pieces {
        let s = rational(rng, 6, 3);
        if slopes.last() != Some(&s) {
            slopes.push(s);
        }
    }
    let anchor = rational(rng, 10, 3);
    PwlFunction1D::from_parts(bps, slopes, anchor).expect("valid parts")
}

pub fn affine_map<R: Rng>(rng: &mut R, out_dim: usize, in_dim: usize, with_bias: bool) -> AffineMap {
    let weights = (0..out_dim).map(|_| (0..in_dim).map(|_| nonzero_rational(rng, 4, 3)).collect()).collect();
    let bias = (0..out_dim)
        .map(|_| if with_bias { rational(rng, 4, 3) } else { Rational::from_integer(0.into()) })
        .collect();
    AffineMap { weights, bias }
}

/// Scalar-output network with the given hidden widths and a linear output.
pub fn network<R: Rng>(rng: &mut R, input_dim: usize, widths: &[usize]) -> ReluNetwork {
    let mut hidden = Vec::with_capacity(widths.len());
    let mut prev = input_dim;
    for &w in widths {
        hidden.push(affine_map(rng, w, prev, true));
        prev = w;
    }
    let output = affine_map(rng, 1, prev, false);
    ReluNetwork::new(input_dim, hidden, output, false).expect("consistent shapes")
}

pub fn zonotope<R: Rng>(rng: &mut R, n: usize, m: usize) -> Zonotope {
    let generators = (0..m).map(|_| (0..n).map(|_| rational(rng, 8, 4)).collect()).collect();
    Zonotope::new(n, generators).expect("valid shape")
}
