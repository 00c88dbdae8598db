//! Convex subproblems: a loss of linear predictions under homogeneous linear
//! inequality constraints `C z <= 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_traits::{One, Zero};

use super::LossKind;
use crate::error::{Error, Result};
use crate::rational::{from_f64, to_f64, Rational};
use crate::regions::{lp_maximize, LinearConstraint, LpSolution};

/// `min Σ_j ℓ(g_j · z, y_j) + Σ_k ℓ(0, c_k)  s.t.  C z <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSubproblem {
    pub num_vars: usize,
    /// `(g_j, y_j)`: design row and target of each point with a linear prediction.
    pub terms: Vec<(Vec<f64>, f64)>,
    /// Targets of points whose prediction is fixed at zero.
    pub zero_terms: Vec<f64>,
    /// Rows `c` of the constraints `c · z <= 0`.
    pub constraints: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSolution {
    pub z: Vec<f64>,
    pub objective: f64,
}

impl ConvexSubproblem {
    pub fn objective(&self, z: &[f64], loss: LossKind) -> f64 {
        let lin: f64 = self.terms.iter().map(|(g, y)| loss.eval(dot(g, z), *y)).sum();
        lin + self.zero_terms.iter().map(|y| loss.eval(0.0, *y)).sum::<f64>()
    }

    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.constraints.iter().map(|c| dot(c, z)).fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iterations allowed to the active-set method.
pub const QP_MAX_ITER: usize = 10_000;

/// Squared loss: primal active-set method. Hinge loss: exact LP.
///
/// `tol` bounds the multiplier sign test of the active-set method; the hinge
/// LP is solved exactly over the rational images of the inputs.
pub fn solve_subproblem(sp: &ConvexSubproblem, loss: LossKind, tol: f64) -> Result<SubproblemSolution> {
    for (g, _) in &sp.terms {
        if g.len() != sp.num_vars {
            return Err(Error::DimensionMismatch { expected: sp.num_vars, got: g.len() });
        }
    }
    for c in &sp.constraints {
        if c.len() != sp.num_vars {
            return Err(Error::DimensionMismatch { expected: sp.num_vars, got: c.len() });
        }
    }
    let z = match loss {
        LossKind::Squared => least_squares_cone(sp, tol)?,
        LossKind::Hinge => hinge_lp(sp)?,
    };
    let objective = sp.objective(&z, loss);
    Ok(SubproblemSolution { z, objective })
}

fn least_squares_cone(sp: &ConvexSubproblem, tol: f64) -> Result<Vec<f64>> {
    let nv = sp.num_vars;
    if sp.terms.is_empty() {
        // constant objective; the origin is feasible
        return Ok(vec![0.0; nv]);
    }
    let a = DMatrix::from_fn(sp.terms.len(), nv, |i, j| sp.terms[i].0[j]);
    let y = DVector::from_iterator(sp.terms.len(), sp.terms.iter().map(|t| t.1));
    // unit-norm rows; zero rows are always satisfied and dropped
    let rows: Vec<DVector<f64>> = sp
        .constraints
        .iter()
        .filter_map(|c| {
            let v = DVector::from_column_slice(c);
            let n = v.norm();
            (n > 0.0).then(|| v / n)
        })
        .collect();
    let scale = 1.0 + y.norm();
    let mut z = DVector::zeros(nv);
    let mut work: Vec<usize> = Vec::new();

    for _ in 0..QP_MAX_ITER {
        let basis = null_space(&rows, &work, nv);
        let p = if basis.ncols() == 0 {
            DVector::zeros(nv)
        } else {
            let an = &a * &basis;
            let r = &y - &a * &z;
            let u = SVD::new(an, true, true).solve(&r, 1e-12).map_err(|e| Error::NonConvergence(e.to_string()))?;
            &basis * u
        };
        if p.norm() <= 1e-12 * (1.0 + z.norm()) {
            if work.is_empty() {
                return Ok(z.iter().copied().collect());
            }
            let grad = 2.0 * a.transpose() * (&a * &z - &y);
            let ct = DMatrix::from_fn(nv, work.len(), |i, j| rows[work[j]][i]);
            let lambda = SVD::new(ct, true, true)
                .solve(&(-grad), 1e-12)
                .map_err(|e| Error::NonConvergence(e.to_string()))?;
            // lowest constraint index among negative multipliers
            let drop = (0..work.len()).filter(|&i| lambda[i] < -tol * scale).min_by_key(|&i| work[i]);
            let Some(pos) = drop else {
                return Ok(z.iter().copied().collect());
            };
            work.remove(pos);
            continue;
        }
        let mut alpha = 1.0;
        let mut block = None;
        for (k, c) in rows.iter().enumerate() {
            if work.contains(&k) {
                continue;
            }
            let cp = c.dot(&p);
            if cp > 1e-14 * p.norm() {
                let ratio = (-c.dot(&z)).max(0.0) / cp;
                if ratio < alpha || (ratio == alpha && block.is_some_and(|b| k < b)) {
                    alpha = ratio;
                    block = Some(k);
                }
            }
        }
        z += alpha * &p;
        if let Some(k) = block {
            work.push(k);
        }
    }
    Err(Error::NonConvergence(format!("active-set method did not converge in {QP_MAX_ITER} iterations")))
}

/// Orthonormal basis of `{p : c_k · p = 0, k ∈ work}` as matrix columns.
fn null_space(rows: &[DVector<f64>], work: &[usize], nv: usize) -> DMatrix<f64> {
    if work.is_empty() {
        return DMatrix::identity(nv, nv);
    }
    let c = DMatrix::from_fn(work.len(), nv, |i, j| rows[work[i]][j]);
    let gram = c.transpose() * &c;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cols: Vec<DVector<f64>> = (0..nv)
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * max.max(1.0))
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(nv, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// `min Σ e_j` with `e_j >= 0`, `e_j >= 1 - y_j g_j · z`, `C z <= 0`.
fn hinge_lp(sp: &ConvexSubproblem) -> Result<Vec<f64>> {
    let nv = sp.num_vars;
    let ne = sp.terms.len();
    let dim = nv + ne;
    let q = |x: f64| from_f64(x);
    let mut rows = Vec::with_capacity(2 * ne + sp.constraints.len());
    for (j, (g, y)) in sp.terms.iter().enumerate() {
        let y = q(*y)?;
        // -y g·z - e_j <= -1
        let mut normal = Vec::with_capacity(dim);
        for gi in g {
            normal.push(-(&y * q(*gi)?));
        }
        normal.extend((0..ne).map(|t| if t == j { -Rational::one() } else { Rational::zero() }));
        rows.push(LinearConstraint::le(normal, -Rational::one()));
        let mut nonneg = vec![Rational::zero(); dim];
        nonneg[nv + j] = -Rational::one();
        rows.push(LinearConstraint::le(nonneg, Rational::zero()));
    }
    for c in &sp.constraints {
        let mut normal = c.iter().map(|x| q(*x)).collect::<Result<Vec<_>>>()?;
        normal.resize(dim, Rational::zero());
        rows.push(LinearConstraint::le(normal, Rational::zero()));
    }
    let objective: Vec<Rational> = (0..dim).map(|i| if i < nv { Rational::zero() } else { -Rational::one() }).collect();
    match lp_maximize(dim, &objective, &rows) {
        LpSolution::Optimal { point, .. } => Ok(point[..nv].iter().map(to_f64).collect()),
        LpSolution::Unbounded => Err(Error::Invariant("hinge subproblem reported unbounded".into())),
        LpSolution::Infeasible => Err(Error::Invariant("hinge subproblem reported infeasible".into())),
    }
}
