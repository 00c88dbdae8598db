use super::{
    enumerate_dichotomies, search, solve_subproblem, Certificate, ConvexSubproblem, Dataset, Dichotomy, LossKind,
    Outcome, TrainOptions, TrainResult, Unit,
};
use crate::error::{Error, Result};
use crate::network::{AffineMap, ReluNetwork};
use crate::rational::{from_f64, int, Rational};

/// Global ERM over width-`w` networks `Σ s_i σ(ãⁱ·x + b̃_i)` on `R^n`.
///
/// Visits every sign vector and every `w`-tuple of hyperplane-separable
/// splits. Without `verify`, tuples that only permute units of equal sign
/// are skipped.
pub fn train_global(data: &Dataset, w: usize, loss: LossKind, opts: &TrainOptions) -> Result<TrainResult> {
    let dichotomies = enumerate_dichotomies(data)?;
    train_over(data, &dichotomies, w, loss, opts, "global")
}

/// The same family in one dimension, with the per-unit splits read off the
/// sorted data (a breakpoint between consecutive distinct inputs, unit
/// active to its right or to its left) instead of decided by LPs.
pub fn train_global_1d_units(data: &Dataset, w: usize, loss: LossKind, opts: &TrainOptions) -> Result<TrainResult> {
    if data.dim() != 1 {
        return Err(Error::Invalid(format!("1-D trainer needs scalar inputs, got dimension {}", data.dim())));
    }
    let d = data.len();
    let xs: Vec<f64> = data.xs().iter().map(|x| x[0]).collect();
    let mut values = xs.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut masks = Vec::with_capacity(2 * values.len() + 2);
    // threshold t_c: active on x >= t_c (c = values.len() means nowhere)
    for c in 0..=values.len() {
        let right: u64 = (0..d).filter(|&j| c < values.len() && xs[j] >= values[c]).fold(0, |m, j| m | 1 << j);
        let all = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
        masks.push(right);
        masks.push(all & !right);
    }
    masks.sort_unstable();
    masks.dedup();
    let dichotomies: Vec<Dichotomy> = masks.into_iter().map(|m| Dichotomy::from_mask(m, d)).collect();
    train_over(data, &dichotomies, w, loss, opts, "global-1d-units")
}

fn train_over(
    data: &Dataset,
    dichotomies: &[Dichotomy],
    w: usize,
    loss: LossKind,
    opts: &TrainOptions,
    method: &str,
) -> Result<TrainResult> {
    if w == 0 {
        return Err(Error::Invalid("width must be at least 1".into()));
    }
    let nd = dichotomies.len() as u64;
    let signs = 1u64.checked_shl(w as u32).filter(|_| w < 64);
    let tuples = nd.checked_pow(w as u32);
    let grid = match (signs, tuples) {
        (Some(s), Some(t)) => s.checked_mul(t),
        _ => None,
    };
    let grid = match grid {
        Some(g) if g <= opts.budget => g,
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "2^{w} sign vectors x {nd}^{w} split tuples exceeds the budget of {} subproblems",
                opts.budget
            )))
        }
    };
    let tuples = tuples.expect("checked above");
    let n = data.dim();
    let decode = |idx: u64| -> (Vec<i8>, Vec<usize>) {
        let sidx = idx / tuples;
        let mut t = idx % tuples;
        let s = (0..w).map(|i| if sidx >> (w - 1 - i) & 1 == 1 { -1 } else { 1 }).collect();
        let mut tuple = vec![0; w];
        for slot in tuple.iter_mut().rev() {
            *slot = (t % nd) as usize;
            t /= nd;
        }
        (s, tuple)
    };

    let red = search(grid, |idx| {
        let (s, tuple) = decode(idx);
        if !opts.verify && (0..w).any(|i| (i + 1..w).any(|k| s[i] == s[k] && tuple[i] > tuple[k])) {
            return Outcome::Pruned;
        }
        let picked: Vec<&Dichotomy> = tuple.iter().map(|&t| &dichotomies[t]).collect();
        match solve_subproblem(&subproblem(data, &s, &picked), loss, opts.tol) {
            Ok(sol) => Outcome::Solved(sol),
            Err(_) => Outcome::Failed,
        }
    });
    let Some((objective, idx, z)) = red.best else {
        return Err(Error::NonConvergence(format!("all {} subproblems failed", red.failures)));
    };
    let (s, tuple) = decode(idx);
    let units: Vec<Unit> = (0..w)
        .map(|i| {
            let base = i * (n + 1);
            Unit { a: z[base..base + n].to_vec(), b: z[base + n], s: s[i] }
        })
        .collect();
    let network = units_network(n, &units)?;
    let mut result = TrainResult {
        method: method.into(),
        width: w,
        input_dim: n,
        loss_kind: loss,
        units,
        output_bias: 0.0,
        dichotomies: tuple.iter().map(|&t| dichotomies[t].clone()).collect(),
        intervals: vec![],
        slope_signs: vec![],
        loss: 0.0,
        objective,
        tol: opts.tol,
        certificate: Certificate {
            sign_vectors: signs.expect("checked above"),
            choices: nd,
            grid,
            solved: red.solved,
            pruned: red.pruned,
            failures: red.failures,
            verify: opts.verify,
        },
        network,
    };
    result.loss = crate::trainer::network_loss(&result.network, data, loss)?;
    Ok(result)
}

/// Variables `(ãⁱ, b̃_i)` packed unit after unit.
pub(crate) fn subproblem(data: &Dataset, s: &[i8], picked: &[&Dichotomy]) -> ConvexSubproblem {
    let n = data.dim();
    let w = s.len();
    let nv = w * (n + 1);
    let mut terms = Vec::new();
    let mut zero_terms = Vec::new();
    let mut constraints = Vec::new();
    for (j, (x, y)) in data.xs().iter().zip(data.ys()).enumerate() {
        let mut g = vec![0.0; nv];
        let mut any = false;
        for (i, d) in picked.iter().enumerate() {
            let base = i * (n + 1);
            let positive = d.is_positive(j);
            let sign = if positive { -1.0 } else { 1.0 };
            let mut row = vec![0.0; nv];
            for (k, v) in x.iter().enumerate() {
                row[base + k] = sign * v;
            }
            row[base + n] = sign;
            constraints.push(row);
            if positive {
                any = true;
                let si = f64::from(s[i]);
                for (k, v) in x.iter().enumerate() {
                    g[base + k] = si * v;
                }
                g[base + n] = si;
            }
        }
        if any {
            terms.push((g, *y));
        } else {
            zero_terms.push(*y);
        }
    }
    ConvexSubproblem { num_vars: nv, terms, zero_terms, constraints }
}

/// Exact network image of float units.
pub(crate) fn units_network(n: usize, units: &[Unit]) -> Result<ReluNetwork> {
    let weights = units.iter().map(|u| u.a.iter().map(|v| from_f64(*v)).collect()).collect::<Result<Vec<Vec<Rational>>>>()?;
    let bias = units.iter().map(|u| from_f64(u.b)).collect::<Result<Vec<_>>>()?;
    let output = AffineMap::linear(vec![units.iter().map(|u| int(i64::from(u.s))).collect()])?;
    ReluNetwork::new(n, vec![AffineMap::new(weights, bias)?], output, false)
}
