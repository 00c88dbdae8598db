//! Layered ReLU networks `x ↦ T_{k+1}(σ(T_k(… σ(T_1(x)))))` with exact
//! rational weights.
//!
//! Depth is the number of affine maps (`k + 1`), size is the total number of
//! hidden units. A network with no hidden layer is a plain affine map of
//! depth one; builders use such nets as leaves.

mod bounds;
mod builders;
mod extract;

pub use bounds::{depth_gap_size_bound, pieces_cap, pieces_upper_bound, size_lower_bound};
pub use builders::{
    add_nets, affine_leaf, affine_net, compose_nets, from_hinge, from_pwl_2layer, max_gadget, max_nets, pad_to_depth,
    parallel, sawtooth_net, scale_output,
};
pub use extract::{extract_pwl, EXTRACT_BREAKPOINT_CAP};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rational::{dot, Rational};

/// `x ↦ W x + b`, `W` stored row-major as `out_dim × in_dim`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(with = "crate::rational::matrix")]
    pub weights: Vec<Vec<Rational>>,
    #[serde(with = "crate::rational::vec")]
    pub bias: Vec<Rational>,
}

impl AffineMap {
    pub fn new(weights: Vec<Vec<Rational>>, bias: Vec<Rational>) -> Result<Self> {
        let map = Self { weights, bias };
        map.validate()?;
        Ok(map)
    }

    /// Column count for an `out × in` map; an empty map has zero rows so
    /// the input dimension is passed separately where it matters.
    fn validate(&self) -> Result<()> {
        check_dim(self.weights.len(), self.bias.len())?;
        if let Some(first) = self.weights.first() {
            for row in &self.weights {
                check_dim(first.len(), row.len())?;
            }
        }
        Ok(())
    }

    pub fn linear(weights: Vec<Vec<Rational>>) -> Result<Self> {
        let bias = vec![Rational::zero(); weights.len()];
        Self::new(weights, bias)
    }

    pub fn identity(n: usize) -> Self {
        let weights = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Self { weights, bias: vec![Rational::zero(); n] }
    }

    pub fn zero(out_dim: usize, in_dim: usize) -> Self {
        Self { weights: vec![vec![Rational::zero(); in_dim]; out_dim], bias: vec![Rational::zero(); out_dim] }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    /// Input dimension, or `None` for a map with no rows.
    pub fn in_dim(&self) -> Option<usize> {
        self.weights.first().map(Vec::len)
    }

    pub fn is_linear(&self) -> bool {
        self.bias.iter().all(Zero::is_zero)
    }

    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.weights.iter().zip(&self.bias).map(|(row, b)| dot(row, x) + b).collect()
    }

    /// `self ∘ inner`
    pub fn after(&self, inner: &AffineMap) -> AffineMap {
        let in_dim = inner.in_dim().unwrap_or(0);
        let weights = self
            .weights
            .iter()
            .map(|row| {
                (0..in_dim)
                    .map(|j| row.iter().zip(&inner.weights).fold(Rational::zero(), |acc, (w, r)| acc + w * &r[j]))
                    .collect()
            })
            .collect();
        let bias = self.weights.iter().zip(&self.bias).map(|(row, b)| dot(row, &inner.bias) + b).collect();
        AffineMap { weights, bias }
    }

    pub fn scaled(&self, c: &Rational) -> AffineMap {
        AffineMap {
            weights: self.weights.iter().map(|r| r.iter().map(|w| w * c).collect()).collect(),
            bias: self.bias.iter().map(|b| b * c).collect(),
        }
    }

    /// Rows of `self` followed by rows of `other` (same input).
    pub fn stacked(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            weights: self.weights.iter().chain(&other.weights).cloned().collect(),
            bias: self.bias.iter().chain(&other.bias).cloned().collect(),
        }
    }

    /// Block-diagonal map acting on the concatenated inputs.
    pub fn block_diag(&self, self_in: usize, other: &AffineMap, other_in: usize) -> AffineMap {
        let z = Rational::zero();
        let mut weights = Vec::with_capacity(self.out_dim() + other.out_dim());
        for row in &self.weights {
            let mut r = row.clone();
            r.extend(std::iter::repeat_n(z.clone(), other_in));
            weights.push(r);
        }
        for row in &other.weights {
            let mut r = vec![z.clone(); self_in];
            r.extend(row.iter().cloned());
            weights.push(r);
        }
        AffineMap { weights, bias: self.bias.iter().chain(&other.bias).cloned().collect() }
    }

    /// Same output, input vector `[x_self, x_other]`, summing both maps.
    pub fn side_by_side_sum(&self, self_in: usize, other: &AffineMap, other_in: usize) -> AffineMap {
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| {
                let mut r = a.clone();
                debug_assert_eq!(a.len(), self_in);
                debug_assert_eq!(b.len(), other_in);
                r.extend(b.iter().cloned());
                r
            })
            .collect();
        let bias = self.bias.iter().zip(&other.bias).map(|(a, b)| a + b).collect();
        AffineMap { weights, bias }
    }
}

/// A feed-forward ReLU network.
///
/// `output_bias_allowed` records whether the final map is permitted to be
/// affine rather than linear; constructions that need an output constant
/// set it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReluNetwork {
    input_dim: usize,
    hidden: Vec<AffineMap>,
    output: AffineMap,
    output_bias_allowed: bool,
}

impl ReluNetwork {
    pub fn new(input_dim: usize, hidden: Vec<AffineMap>, output: AffineMap, output_bias_allowed: bool) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Invalid("input dimension must be positive".into()));
        }
        let mut prev = input_dim;
        for (i, layer) in hidden.iter().chain(std::iter::once(&output)).enumerate() {
            layer.validate()?;
            if layer.out_dim() == 0 {
                return Err(Error::Invalid(format!("layer {} has no units", i + 1)));
            }
            check_dim(prev, layer.in_dim().unwrap_or(prev))?;
            prev = layer.out_dim();
        }
        if !output_bias_allowed && !output.is_linear() {
            return Err(Error::Invalid("output map has a bias but output_bias_allowed is false".into()));
        }
        Ok(Self { input_dim, hidden, output, output_bias_allowed })
    }

    /// Depth-one network computing an affine map directly.
    pub fn affine(input_dim: usize, map: AffineMap) -> Result<Self> {
        let allowed = !map.is_linear();
        Self::new(input_dim, vec![], map, allowed)
    }

    /// `x ↦ 0 ∈ R^out` with one hidden layer of a single dead unit.
    pub fn zero(input_dim: usize, out_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![AffineMap::zero(1, input_dim)],
            output: AffineMap::zero(out_dim, 1),
            output_bias_allowed: false,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output.out_dim()
    }

    pub fn hidden(&self) -> &[AffineMap] {
        &self.hidden
    }

    pub fn output(&self) -> &AffineMap {
        &self.output
    }

    pub fn output_bias_allowed(&self) -> bool {
        self.output_bias_allowed
    }

    /// Number of affine maps, `k + 1`.
    pub fn depth(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn widths(&self) -> Vec<usize> {
        self.hidden.iter().map(AffineMap::out_dim).collect()
    }

    pub fn width(&self) -> usize {
        self.widths().into_iter().max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        self.widths().into_iter().sum()
    }

    pub fn forward(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        check_dim(self.input_dim, x.len())?;
        let mut cur = x.to_vec();
        for layer in &self.hidden {
            cur = layer.apply(&cur).into_iter().map(relu).collect();
        }
        Ok(self.output.apply(&cur))
    }

    /// Scalar output convenience; errors if the output is not one-dimensional.
    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        check_dim(1, self.output_dim())?;
        Ok(self.forward(x)?.pop().unwrap())
    }

    /// Per hidden layer, which units are strictly active at `x`.
    pub fn activation_pattern(&self, x: &[Rational]) -> Result<Vec<Vec<bool>>> {
        check_dim(self.input_dim, x.len())?;
        let mut cur = x.to_vec();
        let mut pattern = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let pre = layer.apply(&cur);
            pattern.push(pre.iter().map(Signed::is_positive).collect());
            cur = pre.into_iter().map(relu).collect();
        }
        Ok(pattern)
    }

    pub fn with_output_bias_allowed(mut self, allowed: bool) -> Result<Self> {
        if !allowed && !self.output.is_linear() {
            return Err(Error::Invalid("output map has a bias".into()));
        }
        self.output_bias_allowed = allowed;
        Ok(self)
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            format: NETWORK_FORMAT.to_string(),
            input_dim: self.input_dim,
            layers: self.hidden.clone(),
            output: self.output.clone(),
            output_bias_allowed: self.output_bias_allowed,
        }
    }

    pub fn from_json(json: NetworkJson) -> Result<Self> {
        if json.format != NETWORK_FORMAT {
            return Err(Error::Parse(format!("expected format {NETWORK_FORMAT:?}, got {:?}", json.format)));
        }
        Self::new(json.input_dim, json.layers, json.output, json.output_bias_allowed)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(text)?)
    }

    pub(crate) fn from_parts_unchecked(
        input_dim: usize,
        hidden: Vec<AffineMap>,
        output: AffineMap,
        output_bias_allowed: bool,
    ) -> Self {
        let net = Self { input_dim, hidden, output, output_bias_allowed };
        debug_assert!(Self::new(net.input_dim, net.hidden.clone(), net.output.clone(), net.output_bias_allowed).is_ok());
        net
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<AffineMap>, AffineMap, bool) {
        (self.input_dim, self.hidden, self.output, self.output_bias_allowed)
    }
}

pub(crate) fn relu(z: Rational) -> Rational {
    if z.is_positive() {
        z
    } else {
        Rational::zero()
    }
}

pub const NETWORK_FORMAT: &str = "relu-net-v1";

/// Wire form of a [`ReluNetwork`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub format: String,
    pub input_dim: usize,
    pub layers: Vec<AffineMap>,
    pub output: AffineMap,
    pub output_bias_allowed: bool,
}

/// One signed term `s · max_i ℓ_i(x)` of a hinge form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HingeTerm {
    pub sign: i8,
    /// Each entry is a `1 × n` affine map.
    pub affines: Vec<AffineMap>,
}

/// `f(x) = Σ_j s_j max_{i ∈ S_j} ℓ_i(x)`, each max over at most `n + 1` affines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HingeForm {
    pub input_dim: usize,
    pub terms: Vec<HingeTerm>,
}

pub const HINGE_FORMAT: &str = "hinge-v1";

#[derive(Serialize, Deserialize)]
struct HingeJson {
    format: String,
    #[serde(flatten)]
    form: HingeForm,
}

impl HingeForm {
    pub fn new(input_dim: usize, terms: Vec<HingeTerm>) -> Result<Self> {
        let h = Self { input_dim, terms };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Invalid("hinge form needs n >= 1".into()));
        }
        if self.terms.is_empty() {
            return Err(Error::Invalid("hinge form needs at least one term".into()));
        }
        for (j, t) in self.terms.iter().enumerate() {
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::Invalid(format!("term {j}: sign must be +1 or -1")));
            }
            if t.affines.is_empty() || t.affines.len() > self.input_dim + 1 {
                return Err(Error::Invalid(format!(
                    "term {j}: needs between 1 and n + 1 = {} affine functions, got {}",
                    self.input_dim + 1,
                    t.affines.len()
                )));
            }
            for a in &t.affines {
                a.validate()?;
                check_dim(1, a.out_dim())?;
                check_dim(self.input_dim, a.in_dim().unwrap_or(0))?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        check_dim(self.input_dim, x.len())?;
        let mut total = Rational::zero();
        for t in &self.terms {
            let best = t.affines.iter().map(|a| a.apply(x).pop().unwrap()).max().unwrap();
            if t.sign > 0 {
                total += best;
            } else {
                total -= best;
            }
        }
        Ok(total)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&HingeJson { format: HINGE_FORMAT.into(), form: self.clone() }).expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: HingeJson = serde_json::from_str(text)?;
        if json.format != HINGE_FORMAT {
            return Err(Error::Parse(format!("expected format {HINGE_FORMAT:?}, got {:?}", json.format)));
        }
        json.form.validate()?;
        Ok(json.form)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn row(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn forward_max_gadget() {
        let net = max_gadget();
        assert_eq!(net.forward(&[int(3), int(5)]).unwrap(), vec![int(5)]);
        assert_eq!(net.forward(&[rat(-7, 2), int(-4)]).unwrap(), vec![rat(-7, 2)]);
        assert_eq!(net.size(), 4);
        assert_eq!(net.depth(), 2);
    }

    #[test]
    fn zero_network() {
        let net = ReluNetwork::zero(2, 1);
        for x in [[int(0), int(0)], [int(-5), rat(1, 3)]] {
            assert_eq!(net.eval(&x).unwrap(), int(0));
        }
    }

    #[test]
    fn validates_shapes() {
        let l1 = AffineMap::new(vec![row(&[1, 2]), row(&[3, 4])], row(&[0, 0])).unwrap();
        let bad_out = AffineMap::linear(vec![row(&[1, 1, 1])]).unwrap();
        assert!(ReluNetwork::new(2, vec![l1.clone()], bad_out, false).is_err());
        let biased = AffineMap::new(vec![row(&[1, 1])], row(&[1])).unwrap();
        assert!(ReluNetwork::new(2, vec![l1.clone()], biased.clone(), false).is_err());
        let net = ReluNetwork::new(2, vec![l1], biased, true).unwrap();
        assert!(net.forward(&[int(1)]).is_err());
        assert!(AffineMap::new(vec![row(&[1])], vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let l1 = AffineMap::new(vec![row(&[1]), row(&[-1])], vec![rat(1, 3), rat(-2, 5)]).unwrap();
        let out = AffineMap::new(vec![vec![rat(1, 2), rat(-3, 7)]], vec![rat(9, 4)]).unwrap();
        let net = ReluNetwork::new(1, vec![l1], out, true).unwrap();
        let text = net.to_json_string();
        assert!(text.contains("relu-net-v1"));
        let back = ReluNetwork::from_json_str(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json_string(), text);
        assert!(ReluNetwork::from_json_str(&text.replace("relu-net-v1", "relu-net-v0")).is_err());
    }

    #[test]
    fn hinge_validation_and_eval() {
        let x1 = AffineMap::linear(vec![row(&[1, 0])]).unwrap();
        let nx1 = AffineMap::linear(vec![row(&[-1, 0])]).unwrap();
        let h = HingeForm::new(2, vec![HingeTerm { sign: 1, affines: vec![x1.clone(), nx1.clone()] }]).unwrap();
        assert_eq!(h.eval(&[int(-3), int(9)]).unwrap(), int(3));
        assert!(HingeForm::new(2, vec![HingeTerm { sign: 2, affines: vec![x1.clone()] }]).is_err());
        assert!(HingeForm::new(1, vec![HingeTerm { sign: 1, affines: vec![x1.clone(), nx1, x1] }]).is_err());
        let text = h.to_json_string();
        assert_eq!(HingeForm::from_json_str(&text).unwrap(), h);
    }
}
