use num_traits::{Signed, Zero};

use super::{search, solve_subproblem, Certificate, ConvexSubproblem, Dataset, LossKind, Outcome, TrainOptions, TrainResult, Unit};
use crate::error::{Error, Result};
use crate::network::from_pwl_2layer;
use crate::pwl::PwlFunction1D;
use crate::rational::{from_f64, to_f64, Rational};

/// Global ERM over continuous piecewise-linear functions with at most `w`
/// pieces on the real line.
///
/// Guesses, for every breakpoint `j`, the data interval `(x_{i_j}, x_{i_j+1})`
/// holding it (`i_j` non-decreasing in `1..=D`, 1-based into the sorted data)
/// and whether the slope goes up or down there (`S_j`). Each guess is a
/// per-block regression under the linear constraints
///
/// ```text
/// S_j φ_j(x_{i_j}) <= 0,   S_j φ_j(x_{i_j+1}) >= 0,   S_j (a_{j+1} - a_j) >= 0
/// ```
///
/// with `φ_j = piece_{j+1} - piece_j`; the middle row is dropped when
/// `i_j = D`. The winner is rebuilt as an exact PWL function and turned into
/// a 2-layer network from its flaps.
pub fn train_global_1d(data: &Dataset, w: usize, loss: LossKind, opts: &TrainOptions) -> Result<TrainResult> {
    if data.dim() != 1 {
        return Err(Error::Invalid(format!("1-D trainer needs scalar inputs, got dimension {}", data.dim())));
    }
    if w == 0 {
        return Err(Error::Invalid("number of pieces must be at least 1".into()));
    }
    let d = data.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| data.xs()[a][0].total_cmp(&data.xs()[b][0]).then(a.cmp(&b)));
    let xs: Vec<f64> = order.iter().map(|&i| data.xs()[i][0]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| data.ys()[i]).collect();

    let m = w - 1;
    let count = multichoose(d as u64, m as u64);
    let signs = 1u64.checked_shl(m as u32).filter(|_| m < 64);
    let grid = match (count, signs) {
        (Some(c), Some(s)) => c.checked_mul(s).filter(|&g| g <= opts.budget),
        _ => None,
    };
    let Some(grid) = grid else {
        return Err(Error::BudgetExceeded(format!(
            "interval tuples x 2^{m} slope orders exceeds the budget of {} subproblems",
            opts.budget
        )));
    };
    let tuples = nondecreasing_tuples(d, m);
    let per_sign = tuples.len() as u64;
    let decode = |idx: u64| -> (Vec<i8>, &[usize]) {
        let sidx = idx / per_sign;
        let s = (0..m).map(|j| if sidx >> (m - 1 - j) & 1 == 1 { -1 } else { 1 }).collect();
        (s, &tuples[(idx % per_sign) as usize])
    };

    let red = search(grid, |idx| {
        let (s, tuple) = decode(idx);
        match solve_subproblem(&subproblem(&xs, &ys, w, tuple, &s), loss, opts.tol) {
            Ok(sol) => Outcome::Solved(sol),
            Err(_) => Outcome::Failed,
        }
    });
    let Some((objective, idx, z)) = red.best else {
        return Err(Error::NonConvergence(format!("all {} subproblems failed", red.failures)));
    };
    let (s, tuple) = decode(idx);
    let f = rebuild(&xs, w, tuple, &z)?;
    let network = from_pwl_2layer(&f);
    let out = network.output();
    let layer = &network.hidden()[0];
    let units = layer
        .weights
        .iter()
        .zip(&layer.bias)
        .zip(&out.weights[0])
        .filter(|(_, c)| !c.is_zero())
        .map(|((row, b), c)| {
            let mag = c.abs();
            Unit { a: vec![to_f64(&(&row[0] * &mag))], b: to_f64(&(b * &mag)), s: if c.is_positive() { 1 } else { -1 } }
        })
        .collect();
    let mut result = TrainResult {
        method: "global-1d".into(),
        width: w,
        input_dim: 1,
        loss_kind: loss,
        units,
        output_bias: to_f64(&out.bias[0]),
        dichotomies: vec![],
        intervals: tuple.to_vec(),
        slope_signs: s,
        loss: 0.0,
        objective,
        tol: opts.tol,
        certificate: Certificate {
            sign_vectors: signs.expect("checked above"),
            choices: per_sign,
            grid,
            solved: red.solved,
            pruned: red.pruned,
            failures: red.failures,
            verify: opts.verify,
        },
        network,
    };
    result.loss = super::network_loss(&result.network, data, loss)?;
    Ok(result)
}

/// `C(d + m - 1, m)`, the number of non-decreasing `m`-tuples over `1..=d`.
fn multichoose(d: u64, m: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for i in 0..m {
        acc = acc.checked_mul(d + i)? / (i + 1);
    }
    Some(acc)
}

fn nondecreasing_tuples(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![1; m];
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..m).rev().find(|&p| cur[p] < d) else {
            return out;
        };
        let v = cur[pos] + 1;
        for c in &mut cur[pos..] {
            *c = v;
        }
    }
}

/// Block of sorted position `p` (0-based) under tuple `I`.
fn block_of(p: usize, tuple: &[usize]) -> usize {
    tuple.iter().filter(|&&i| p + 1 > i).count()
}

/// Variables `(a_j, b_j)` packed piece after piece.
fn subproblem(xs: &[f64], ys: &[f64], w: usize, tuple: &[usize], s: &[i8]) -> ConvexSubproblem {
    let nv = 2 * w;
    let d = xs.len();
    let terms = xs
        .iter()
        .zip(ys)
        .enumerate()
        .map(|(p, (x, y))| {
            let j = block_of(p, tuple);
            let mut g = vec![0.0; nv];
            g[2 * j] = *x;
            g[2 * j + 1] = 1.0;
            (g, *y)
        })
        .collect();
    let phi = |j: usize, x: f64, scale: f64| {
        let mut r = vec![0.0; nv];
        r[2 * j + 2] = scale * x;
        r[2 * j + 3] = scale;
        r[2 * j] = -scale * x;
        r[2 * j + 1] = -scale;
        r
    };
    let mut constraints = Vec::new();
    for (j, (&i, &sj)) in tuple.iter().zip(s).enumerate() {
        let sj = f64::from(sj);
        constraints.push(phi(j, xs[i - 1], sj));
        if i < d {
            constraints.push(phi(j, xs[i], -sj));
        }
        let mut r = vec![0.0; nv];
        r[2 * j + 2] = -sj;
        r[2 * j] = sj;
        constraints.push(r);
    }
    ConvexSubproblem { num_vars: nv, terms, zero_terms: vec![], constraints }
}

/// A continuous function with at most `w` pieces that agrees with the fitted
/// piece of each data-bearing block on that block.
fn rebuild(xs: &[f64], w: usize, tuple: &[usize], z: &[f64]) -> Result<PwlFunction1D> {
    let q = |v: f64| from_f64(v);
    let pieces: Vec<(Rational, Rational)> = (0..w).map(|j| Ok((q(z[2 * j])?, q(z[2 * j + 1])?))).collect::<Result<_>>()?;
    let at = |j: usize, x: &Rational| &pieces[j].0 * x + &pieces[j].1;
    let xq: Vec<Rational> = xs.iter().map(|v| q(*v)).collect::<Result<_>>()?;
    // (piece, first position, last position) of every non-empty block
    let mut blocks: Vec<(usize, usize, usize)> = Vec::new();
    for p in 0..xs.len() {
        let j = block_of(p, tuple);
        match blocks.last_mut() {
            Some(b) if b.0 == j => b.2 = p,
            _ => blocks.push((j, p, p)),
        }
    }
    let mut knots: Vec<(Rational, Rational)> = Vec::new();
    let push = |x: Rational, y: Rational, knots: &mut Vec<(Rational, Rational)>| {
        if knots.last().is_none_or(|k| k.0 < x) {
            knots.push((x, y));
        }
    };
    for pair in blocks.windows(2) {
        let (ja, _, last) = pair[0];
        let (jb, first, _) = pair[1];
        let (xl, xr) = (&xq[last], &xq[first]);
        let da = &pieces[jb].0 - &pieces[ja].0;
        let root = (!da.is_zero()).then(|| (&pieces[ja].1 - &pieces[jb].1) / &da);
        match root {
            Some(t) if jb == ja + 1 || (&t >= xl && &t <= xr) => {
                let t = t.max(xl.clone()).min(xr.clone());
                let y = at(ja, &t);
                push(t, y, &mut knots);
            }
            None if pieces[ja].1 == pieces[jb].1 => {}
            _ => {
                push(xl.clone(), at(ja, xl), &mut knots);
                if xl < xr {
                    push(xr.clone(), at(jb, xr), &mut knots);
                }
            }
        }
    }
    let (first, last) = (blocks[0].0, blocks[blocks.len() - 1].0);
    if knots.is_empty() {
        return Ok(PwlFunction1D::affine(pieces[first].0.clone(), pieces[first].1.clone()));
    }
    PwlFunction1D::from_knots(pieces[first].0.clone(), knots, pieces[last].0.clone())
}
