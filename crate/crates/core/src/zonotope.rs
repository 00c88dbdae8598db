//! Zonotopes `Z(b¹..bᵐ) = {Σ λ_i bⁱ : |λ_i| <= 1}` and the hard family
//! `H ∘ γ_Z` built from their support functions.

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::network::{compose_nets, sawtooth_net, AffineMap, ReluNetwork};
use crate::pwl::{sawtooth, SawtoothParams};
use crate::random;
use crate::rational::{dot, Rational};
use crate::regions::{lp_feasible, LinearConstraint};

/// Largest generator count accepted by [`Zonotope::vertices`].
pub const MAX_VERTEX_GENERATORS: usize = 20;

pub const ZONOTOPE_FORMAT: &str = "zonotope-v1";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Zonotope {
    n: usize,
    generators: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZonotopeJson {
    pub format: String,
    pub n: usize,
    #[serde(with = "crate::rational::matrix")]
    pub generators: Vec<Vec<Rational>>,
}

impl Zonotope {
    pub fn new(n: usize, generators: Vec<Vec<Rational>>) -> Result<Self> {
        if n == 0 || generators.is_empty() {
            return Err(Error::Invalid("a zonotope needs n >= 1 and at least one generator".into()));
        }
        for g in &generators {
            check_dim(n, g.len())?;
        }
        Ok(Self { n, generators })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Vec<Rational>] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// `γ_Z(r) = Σ |⟨r, bⁱ⟩|`
    pub fn support(&self, r: &[Rational]) -> Result<Rational> {
        check_dim(self.n, r.len())?;
        Ok(self.generators.iter().map(|b| dot(r, b).abs()).sum())
    }

    /// Exact vertex set, sorted lexicographically.
    ///
    /// For each sign vector `λ` the point `Σ λ_i bⁱ` is a vertex iff some
    /// direction `c` has `λ_i ⟨c, bⁱ⟩ > 0` for every nonzero generator; that
    /// direction then exposes it. Zero generators are fixed to `+1`.
    pub fn vertices(&self) -> Result<Vec<Vec<Rational>>> {
        let m = self.generators.len();
        if m > MAX_VERTEX_GENERATORS {
            return Err(Error::BudgetExceeded(format!(
                "vertex enumeration supports at most {MAX_VERTEX_GENERATORS} generators, got {m}"
            )));
        }
        let active: Vec<usize> = (0..m).filter(|&i| self.generators[i].iter().any(|q| !q.is_zero())).collect();
        let fixed: Vec<Rational> = (0..self.n)
            .map(|j| (0..m).filter(|i| !active.contains(i)).map(|i| self.generators[i][j].clone()).sum())
            .collect();
        let found: Vec<Option<Vec<Rational>>> = (0u64..1 << active.len())
            .into_par_iter()
            .map(|mask| {
                let signs: Vec<bool> = (0..active.len()).map(|t| mask >> t & 1 == 1).collect();
                let rows: Vec<LinearConstraint> = active
                    .iter()
                    .zip(&signs)
                    .map(|(&i, &pos)| {
                        let b = &self.generators[i];
                        if pos {
                            LinearConstraint::gt(b.clone(), Rational::zero())
                        } else {
                            LinearConstraint::lt(b.clone(), Rational::zero())
                        }
                    })
                    .collect();
                if !lp_feasible(self.n, &rows).is_feasible() {
                    return None;
                }
                let mut p = fixed.clone();
                for (&i, &pos) in active.iter().zip(&signs) {
                    for (pj, bj) in p.iter_mut().zip(&self.generators[i]) {
                        if pos {
                            *pj += bj;
                        } else {
                            *pj -= bj;
                        }
                    }
                }
                Some(p)
            })
            .collect();
        let mut verts: Vec<Vec<Rational>> = found.into_iter().flatten().collect();
        verts.sort();
        verts.dedup();
        Ok(verts)
    }

    /// Whether the vertex count reaches the generic maximum for `(n, m)`.
    pub fn is_extremal(&self) -> Result<bool> {
        Ok(self.vertices()?.len() == generic_vertex_count(self.n, self.generators.len())?)
    }

    pub fn to_json(&self) -> ZonotopeJson {
        ZonotopeJson { format: ZONOTOPE_FORMAT.into(), n: self.n, generators: self.generators.clone() }
    }

    pub fn from_json(json: ZonotopeJson) -> Result<Self> {
        if json.format != ZONOTOPE_FORMAT {
            return Err(Error::Parse(format!("expected format {ZONOTOPE_FORMAT:?}, got {:?}", json.format)));
        }
        Self::new(json.n, json.generators)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(text)?)
    }
}

/// Trials used to estimate the generic vertex count.
const GENERIC_TRIALS: u64 = 8;

/// Largest vertex count seen over seeded random generator sets of shape
/// `(n, m)`. Random rational generators are generic with probability one, so
/// this is the count every extremal zonotope attains.
pub fn generic_vertex_count(n: usize, m: usize) -> Result<usize> {
    let mut best = 0;
    for seed in 0..GENERIC_TRIALS {
        let mut rng = random::seeded(0x5eed_0000 + seed);
        let z = random::zonotope(&mut rng, n, m);
        best = best.max(z.vertices()?.len());
    }
    Ok(best)
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `Σ_{i=0}^{n-1} C(m-1, i)`
pub fn vertex_formula_half(n: usize, m: usize) -> BigUint {
    (0..n as u64).map(|i| binomial(m as u64 - 1, i)).sum()
}

/// `2 Σ_{i=0}^{n-1} C(m-1, i)`, the classical count for generic generators.
pub fn vertex_formula_classical(n: usize, m: usize) -> BigUint {
    vertex_formula_half(n, m) * 2u32
}

/// `(m-1)^{n-1} w^k`
pub fn family_pieces_power_formula(n: usize, m: usize, w: usize, k: usize) -> BigUint {
    BigUint::from(m - 1).pow(n as u32 - 1) * BigUint::from(w).pow(k as u32)
}

/// `(Σ_{i=0}^{n-1} C(m-1, i)) w^k`
pub fn family_pieces_sum_formula(n: usize, m: usize, w: usize, k: usize) -> BigUint {
    vertex_formula_half(n, m) * BigUint::from(w).pow(k as u32)
}

/// `γ_Z` as a depth-2 network of size `2m`: `Σ σ(⟨r,bⁱ⟩) + σ(-⟨r,bⁱ⟩)`.
pub fn support_net(z: &Zonotope) -> ReluNetwork {
    let mut weights = Vec::with_capacity(2 * z.generators.len());
    for b in &z.generators {
        weights.push(b.clone());
        weights.push(b.iter().map(|q| -q).collect());
    }
    let hidden = AffineMap::linear(weights).expect("rectangular");
    let output = AffineMap::linear(vec![vec![Rational::one(); 2 * z.generators.len()]]).expect("rectangular");
    ReluNetwork::new(z.n, vec![hidden], output, false).expect("consistent shapes")
}

/// Generators plus sawtooth layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZonotopeFamilyParams {
    pub zonotope: Zonotope,
    pub sawtooth: SawtoothParams,
}

impl ZonotopeFamilyParams {
    pub fn new(zonotope: Zonotope, sawtooth: SawtoothParams) -> Result<Self> {
        sawtooth.validate()?;
        Ok(Self { zonotope, sawtooth })
    }

    /// Exact value `H(γ_Z(r))`.
    pub fn eval(&self, r: &[Rational]) -> Result<Rational> {
        let h = sawtooth(&self.sawtooth)?;
        Ok(h.eval(&self.zonotope.support(r)?))
    }
}

/// `H_{a¹..aᵏ} ∘ γ_Z`: depth `k + 2`, size `2m + wk`.
pub fn zonotope_family_net(p: &ZonotopeFamilyParams) -> Result<ReluNetwork> {
    let outer = sawtooth_net(&p.sawtooth)?;
    compose_nets(&outer, &support_net(&p.zonotope))
}
