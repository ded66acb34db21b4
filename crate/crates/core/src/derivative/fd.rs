use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default forward-difference step.
pub const DEFAULT_FD_EPSILON: f64 = 1e-6;

pub(crate) fn check_finite(input: &DVector<f64>, output: &DVector<f64>) -> Result<()> {
    if output.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteOutput {
            input: input.as_slice().to_vec(),
        })
    }
}

/// Evaluates `f` at `x`, failing on non-finite output.
pub fn evaluate<F>(f: &F, x: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    let y = f(x);
    check_finite(x, &y)?;
    Ok(y)
}

/// Forward-difference Jacobian-vector product `(f(x + eps*dir) - f(x)) / eps`.
///
/// `base` must already hold `f(x)`; exactly one evaluation of `f` is made.
pub fn fd_jvp<F>(
    f: &F,
    x: &DVector<f64>,
    base: &DVector<f64>,
    dir: &DVector<f64>,
    eps: f64,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    if x.len() != dir.len() {
        return Err(Error::InvalidDimension(format!(
            "direction has length {}, input has length {}",
            dir.len(),
            x.len()
        )));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "fd epsilon must be positive, got {eps}"
        )));
    }
    let perturbed = x + dir * eps;
    let y = evaluate(f, &perturbed)?;
    if y.len() != base.len() {
        return Err(Error::InvalidDimension(format!(
            "function returned {} outputs, base has {}",
            y.len(),
            base.len()
        )));
    }
    let jvp = (y - base) / eps;
    check_finite(&perturbed, &jvp)?;
    Ok(jvp)
}

/// Forward-difference Jacobian using the supplied base value `f(x)`.
/// Performs `n` evaluations of `f`.
pub fn fd_jacobian_with_base<F>(
    f: &F,
    x: &DVector<f64>,
    base: &DVector<f64>,
    eps: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(base.len(), n);
    let mut dir = DVector::zeros(n);
    for j in 0..n {
        dir[j] = 1.0;
        let col = fd_jvp(f, x, base, &dir, eps)?;
        jac.set_column(j, &col);
        dir[j] = 0.0;
    }
    Ok(jac)
}

/// Forward-difference Jacobian. Performs exactly `n + 1` evaluations of `f`.
pub fn fd_jacobian<F>(f: &F, x: &DVector<f64>, eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    let base = evaluate(f, x)?;
    fd_jacobian_with_base(f, x, &base, eps)
}
