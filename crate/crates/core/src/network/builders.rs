//! Constructive representation results as network builders.

use num_traits::{One, Zero};

use super::{AffineMap, HingeForm, ReluNetwork};
use crate::error::{check_dim, Error, Result};
use crate::pwl::{decompose_flaps, hinge_layer, FlapSide, PwlFunction1D, SawtoothParams};
use crate::rational::{half, Rational};

/// Depth-one network computing `map` directly (no hidden layer).
pub fn affine_leaf(input_dim: usize, map: AffineMap) -> Result<ReluNetwork> {
    ReluNetwork::affine(input_dim, map)
}

/// `T = I∘σ∘T - I∘σ∘(-T)`: a 2-layer network of size `2m` for `T: R^n -> R^m`.
pub fn affine_net(input_dim: usize, map: &AffineMap) -> Result<ReluNetwork> {
    check_dim(input_dim, map.in_dim().unwrap_or(input_dim))?;
    let m = map.out_dim();
    let hidden = map.stacked(&map.scaled(&-Rational::one()));
    let output = identity_pair(m);
    ReluNetwork::new(input_dim, vec![hidden], output, false)
}

/// `[I, -I]` of shape `m × 2m`.
fn identity_pair(m: usize) -> AffineMap {
    let weights = (0..m)
        .map(|i| {
            (0..2 * m)
                .map(|j| {
                    if j == i {
                        Rational::one()
                    } else if j == i + m {
                        -Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    AffineMap { weights, bias: vec![Rational::zero(); m] }
}

/// Two-input max: hidden `σ(x₁+x₂), σ(-x₁-x₂), σ(x₁-x₂), σ(-x₁+x₂)`,
/// output `(x₁+x₂)/2 + |x₁-x₂|/2`.
pub fn max_gadget() -> ReluNetwork {
    let one = Rational::one;
    let neg = || -Rational::one();
    let hidden = AffineMap {
        weights: vec![vec![one(), one()], vec![neg(), neg()], vec![one(), neg()], vec![neg(), one()]],
        bias: vec![Rational::zero(); 4],
    };
    let h = half();
    let output = AffineMap { weights: vec![vec![h.clone(), -h.clone(), h.clone(), h]], bias: vec![Rational::zero()] };
    ReluNetwork::from_parts_unchecked(2, vec![hidden], output, false)
}

/// A 2-layer network equal to `f`, built from its flap decomposition.
///
/// Size is at most `p` for a `p`-piece function with `p >= 2`, and `p - 1`
/// when either unbounded piece is flat. The flap constant becomes the output
/// bias.
pub fn from_pwl_2layer(f: &PwlFunction1D) -> ReluNetwork {
    let d = decompose_flaps(f);
    let mut weights = Vec::with_capacity(d.len());
    let mut bias = Vec::with_capacity(d.len());
    let mut out = Vec::with_capacity(d.len());
    for flap in &d.flaps {
        match flap.side {
            // σ(x - a) · r
            FlapSide::Right => {
                weights.push(vec![Rational::one()]);
                bias.push(-&flap.breakpoint);
                out.push(flap.slope.clone());
            }
            // σ(a - x) · (-t)
            FlapSide::Left => {
                weights.push(vec![-Rational::one()]);
                bias.push(flap.breakpoint.clone());
                out.push(-&flap.slope);
            }
        }
    }
    if weights.is_empty() {
        weights.push(vec![Rational::zero()]);
        bias.push(Rational::zero());
        out.push(Rational::zero());
    }
    let hidden = AffineMap { weights, bias };
    let output = AffineMap { weights: vec![out], bias: vec![d.constant] };
    ReluNetwork::from_parts_unchecked(1, vec![hidden], output, true)
}

/// The composed sawtooth as `k` stacked 2-layer layer nets: depth `k + 1`,
/// size `wk`.
pub fn sawtooth_net(params: &SawtoothParams) -> Result<ReluNetwork> {
    params.validate()?;
    let mut acc: Option<ReluNetwork> = None;
    for a in &params.layers {
        let layer = from_pwl_2layer(&hinge_layer(&params.height, a)?);
        acc = Some(match acc {
            None => layer,
            Some(inner) => compose_nets(&layer, &inner)?,
        });
    }
    Ok(acc.expect("validated non-empty"))
}

/// `outer ∘ inner`. The inner output map is fused into the outer input map,
/// so depth is `depth(outer) + depth(inner) - 1` and sizes add.
pub fn compose_nets(outer: &ReluNetwork, inner: &ReluNetwork) -> Result<ReluNetwork> {
    check_dim(outer.input_dim(), inner.output_dim())?;
    let (in_dim, mut hidden, inner_out, inner_flag) = inner.clone().into_parts();
    let (_, outer_hidden, outer_out, outer_flag) = outer.clone().into_parts();
    let mut outer_hidden = outer_hidden.into_iter();
    let (output, flag) = match outer_hidden.next() {
        Some(first) => {
            hidden.push(first.after(&inner_out));
            hidden.extend(outer_hidden);
            (outer_out, outer_flag)
        }
        None => {
            let fused = outer_out.after(&inner_out);
            let flag = outer_flag || inner_flag || !fused.is_linear();
            (fused, flag)
        }
    };
    ReluNetwork::new(in_dim, hidden, output, flag)
}

/// Appends identity blocks (`y = σ(y) - σ(-y)`, two units per output per
/// layer) until the network has the requested depth.
pub fn pad_to_depth(net: &ReluNetwork, depth: usize) -> Result<ReluNetwork> {
    if depth < net.depth() {
        return Err(Error::Invalid(format!("cannot pad depth {} down to {depth}", net.depth())));
    }
    let mut cur = net.clone();
    while cur.depth() < depth {
        let m = cur.output_dim();
        let (in_dim, mut hidden, out, _) = cur.into_parts();
        hidden.push(out.stacked(&out.scaled(&-Rational::one())));
        cur = ReluNetwork::new(in_dim, hidden, identity_pair(m), false)?;
    }
    Ok(cur)
}

/// Both networks side by side on the same input; output is the
/// concatenation `(f(x), g(x))`. Shallower network is padded first.
pub fn parallel(f: &ReluNetwork, g: &ReluNetwork) -> Result<ReluNetwork> {
    check_dim(f.input_dim(), g.input_dim())?;
    let depth = f.depth().max(g.depth());
    let (in_dim, fh, fo, ff) = pad_to_depth(f, depth)?.into_parts();
    let (_, gh, go, gf) = pad_to_depth(g, depth)?.into_parts();
    let mut hidden = Vec::with_capacity(fh.len());
    let mut f_in = in_dim;
    let mut g_in = in_dim;
    for (i, (a, b)) in fh.iter().zip(&gh).enumerate() {
        hidden.push(if i == 0 { a.stacked(b) } else { a.block_diag(f_in, b, g_in) });
        f_in = a.out_dim();
        g_in = b.out_dim();
    }
    let output = if hidden.is_empty() { fo.stacked(&go) } else { fo.block_diag(f_in, &go, g_in) };
    let flag = ff || gf || !output.is_linear();
    ReluNetwork::new(in_dim, hidden, output, flag)
}

/// Pointwise sum via parallel blocks and a summed output map.
pub fn add_nets(f: &ReluNetwork, g: &ReluNetwork) -> Result<ReluNetwork> {
    check_dim(f.input_dim(), g.input_dim())?;
    check_dim(f.output_dim(), g.output_dim())?;
    let depth = f.depth().max(g.depth());
    let (in_dim, fh, fo, ff) = pad_to_depth(f, depth)?.into_parts();
    let (_, gh, go, gf) = pad_to_depth(g, depth)?.into_parts();
    if fh.is_empty() {
        let output = AffineMap {
            weights: fo.weights.iter().zip(&go.weights).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
            bias: fo.bias.iter().zip(&go.bias).map(|(a, b)| a + b).collect(),
        };
        let flag = ff || gf || !output.is_linear();
        return ReluNetwork::new(in_dim, vec![], output, flag);
    }
    let mut hidden = Vec::with_capacity(fh.len());
    let mut f_in = in_dim;
    let mut g_in = in_dim;
    for (i, (a, b)) in fh.iter().zip(&gh).enumerate() {
        hidden.push(if i == 0 { a.stacked(b) } else { a.block_diag(f_in, b, g_in) });
        f_in = a.out_dim();
        g_in = b.out_dim();
    }
    let output = fo.side_by_side_sum(f_in, &go, g_in);
    let flag = ff || gf || !output.is_linear();
    ReluNetwork::new(in_dim, hidden, output, flag)
}

/// Multiplies the output map by `c`.
pub fn scale_output(net: &ReluNetwork, c: &Rational) -> ReluNetwork {
    let (in_dim, hidden, out, flag) = net.clone().into_parts();
    ReluNetwork::from_parts_unchecked(in_dim, hidden, out.scaled(c), flag)
}

/// Pointwise maximum of scalar networks by a balanced binary tree of
/// [`max_gadget`]s: split into the first `⌊m/2⌋` and the rest, recurse, then
/// put the two halves in parallel and compose the gadget on top.
pub fn max_nets(nets: &[ReluNetwork]) -> Result<ReluNetwork> {
    let Some(first) = nets.first() else {
        return Err(Error::Invalid("max of an empty list of networks".into()));
    };
    for n in nets {
        check_dim(first.input_dim(), n.input_dim())?;
        check_dim(1, n.output_dim())?;
    }
    if nets.len() == 1 {
        return Ok(first.clone());
    }
    let mid = nets.len() / 2;
    let left = max_nets(&nets[..mid])?;
    let right = max_nets(&nets[mid..])?;
    compose_nets(&max_gadget(), &parallel(&left, &right)?)
}

/// Network for `Σ_j s_j max_{i ∈ S_j} ℓ_i`: each max is a gadget tree over
/// affine leaves, terms are summed with their signs in the output map.
/// Depth is at most `⌈log₂(n+1)⌉ + 1`.
pub fn from_hinge(h: &HingeForm) -> Result<ReluNetwork> {
    h.validate()?;
    let mut total: Option<ReluNetwork> = None;
    for term in &h.terms {
        let leaves: Vec<ReluNetwork> =
            term.affines.iter().map(|a| affine_leaf(h.input_dim, a.clone())).collect::<Result<_>>()?;
        let tree = max_nets(&leaves)?;
        let signed = if term.sign < 0 { scale_output(&tree, &-Rational::one()) } else { tree };
        total = Some(match total {
            None => signed,
            Some(acc) => add_nets(&acc, &signed)?,
        });
    }
    let net = total.expect("validated non-empty");
    if net.depth() < 2 {
        pad_to_depth(&net, 2)
    } else {
        Ok(net)
    }
}
