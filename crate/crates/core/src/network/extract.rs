use super::ReluNetwork;
use crate::error::{check_dim, Error, Result};
use crate::pwl::PwlFunction1D;

/// Guardrail on the number of breakpoints carried by any single neuron
/// during extraction.
pub const EXTRACT_BREAKPOINT_CAP: usize = 1_000_000;

/// The exact function computed by a scalar network on the real line.
///
/// Every neuron's pre-activation is propagated as a [`PwlFunction1D`]:
/// affine combination of the previous layer, then clipping at zero.
pub fn extract_pwl(net: &ReluNetwork) -> Result<PwlFunction1D> {
    check_dim(1, net.input_dim())?;
    check_dim(1, net.output_dim())?;
    let x = PwlFunction1D::identity();
    let mut cur = vec![x];
    for layer in net.hidden() {
        cur = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, b)| combine(row, &cur, b).map(|f| f.relu()))
            .collect::<Result<_>>()?;
        for f in &cur {
            check_cap(f)?;
        }
    }
    let out = net.output();
    combine(&out.weights[0], &cur, &out.bias[0])
}

fn combine(
    row: &[crate::rational::Rational],
    inputs: &[PwlFunction1D],
    bias: &crate::rational::Rational,
) -> Result<PwlFunction1D> {
    let terms: Vec<_> = row.iter().cloned().zip(inputs).collect();
    let total: usize = inputs.iter().map(|f| f.breakpoints().len()).sum();
    if total > EXTRACT_BREAKPOINT_CAP {
        return Err(Error::BudgetExceeded(format!(
            "extraction needs {total} candidate breakpoints, cap is {EXTRACT_BREAKPOINT_CAP}"
        )));
    }
    let f = PwlFunction1D::linear_combination(&terms, bias);
    check_cap(&f)?;
    Ok(f)
}

fn check_cap(f: &PwlFunction1D) -> Result<()> {
    if f.breakpoints().len() > EXTRACT_BREAKPOINT_CAP {
        return Err(Error::BudgetExceeded(format!(
            "neuron has {} breakpoints, cap is {EXTRACT_BREAKPOINT_CAP}",
            f.breakpoints().len()
        )));
    }
    Ok(())
}
