use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fd::{evaluate, fd_jvp, DEFAULT_FD_EPSILON};
use super::tangent::TangentMatrix;
use crate::error::{Error, Result};

/// Zero-norm guard used by the norm test.
pub const NORM_GUARD: f64 = 1e-12;
/// A zero ground-truth JVP only matches a prediction at least this small.
pub const ZERO_TRUTH_ABS_TOL: f64 = 1e-10;

/// Accuracy knobs for one approximation instance.
///
/// Users set `frac` and `tol`; the JVP budget (`p_min`, `p_max`) and the
/// angle/norm thresholds (`p_theta`, `p_n`) are derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaspConfig {
    pub frac: f64,
    pub tol: f64,
    pub fd_epsilon: f64,
    pub p_max: usize,
    pub p_min: usize,
    pub p_theta: f64,
    pub p_n: f64,
}

impl WaspConfig {
    /// `dim` is the input dimension of the differentiated function.
    pub fn new(dim: usize, frac: f64, tol: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "input dimension must be >= 1".into(),
            ));
        }
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "frac must lie in (0, 1], got {frac}"
            )));
        }
        if !(0.0..=1.0).contains(&tol) {
            return Err(Error::InvalidArgument(format!(
                "tol must lie in [0, 1], got {tol}"
            )));
        }
        let p_max = dim;
        // The small offset keeps e.g. 0.3 * 10 = 3.0000000000000004 at 3.
        let p_min = ((frac * p_max as f64 - 1e-9).ceil() as usize).clamp(1, p_max);
        Ok(Self {
            frac,
            tol,
            fd_epsilon: DEFAULT_FD_EPSILON,
            p_max,
            p_min,
            p_theta: tol,
            p_n: tol,
        })
    }

    /// Settings under which the approximation degenerates to finite differencing.
    pub fn fd_equivalent(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0, 0.0)
    }

    pub fn with_epsilon(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fd epsilon must be positive, got {eps}"
            )));
        }
        self.fd_epsilon = eps;
        Ok(self)
    }

    /// Overrides the angle and norm thresholds independently of `tol`.
    pub fn with_thresholds(mut self, p_theta: f64, p_n: f64) -> Self {
        self.p_theta = p_theta;
        self.p_n = p_n;
        self
    }
}

/// Why the JVP loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Predicted and measured JVPs agreed in angle and norm.
    ToleranceMet,
    /// `p_max` JVPs were consumed.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEstimate {
    pub matrix: DMatrix<f64>,
    pub jvps_used: usize,
    pub dynamics_calls: usize,
    pub termination: Termination,
}

/// Constrained least-squares update of the Jacobian estimate.
///
/// Returns the minimizer `D` of `‖ΔXᵀDᵀ − ΔF̂ᵀ‖²_F` subject to `D·Δxᵢ = Δfᵢ`.
/// With an orthonormal tangent matrix the KKT system has the closed form
/// `D = ΔF̂·ΔXᵀ + (Δfᵢ − Δf̂ᵢ)·Δxᵢᵀ`.
pub fn kkt_solve(
    approx_jvps: &DMatrix<f64>,
    tangents: &TangentMatrix,
    i: usize,
    true_jvp: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = tangents.dim();
    if approx_jvps.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "approximate JVP matrix has {} columns, tangent matrix has dimension {n}",
            approx_jvps.ncols()
        )));
    }
    if true_jvp.len() != approx_jvps.nrows() {
        return Err(Error::InvalidArgument(format!(
            "JVP has length {}, expected {}",
            true_jvp.len(),
            approx_jvps.nrows()
        )));
    }
    if i >= n {
        return Err(Error::InvalidArgument(format!(
            "column index {i} out of range 0..{n}"
        )));
    }
    let dx = tangents.matrix();
    let residual = true_jvp - approx_jvps.column(i);
    let mut d = approx_jvps * dx.transpose();
    d.ger(1.0, &residual, &dx.column(i), 1.0);
    Ok(d)
}

fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom > 0.0 {
        a.dot(b) / denom
    } else {
        0.0
    }
}

/// Angle and norm agreement test between a predicted and a measured JVP.
pub fn termination_check(
    predicted: &DVector<f64>,
    truth: &DVector<f64>,
    config: &WaspConfig,
) -> bool {
    let truth_norm = truth.norm();
    let pred_norm = predicted.norm();
    if truth_norm <= NORM_GUARD {
        return pred_norm <= ZERO_TRUTH_ABS_TOL;
    }
    let angle_ok = 1.0 - cosine(predicted, truth) <= config.p_theta;
    let norm_ok = (pred_norm - truth_norm).abs() / truth_norm.max(NORM_GUARD) <= config.p_n;
    angle_ok && norm_ok
}

/// Persistent approximation state for one function along a sequence of
/// related evaluation points (one per horizon timestep and input axis).
#[derive(Debug, Clone)]
pub struct WaspInstance {
    jacobian: DMatrix<f64>,
    approx_jvps: DMatrix<f64>,
    cursor: usize,
    config: WaspConfig,
    tangents: Arc<TangentMatrix>,
    call_counter: u64,
    primed: bool,
}

impl WaspInstance {
    pub fn new(outputs: usize, tangents: Arc<TangentMatrix>, config: WaspConfig) -> Result<Self> {
        if config.p_max != tangents.dim() {
            return Err(Error::InvalidDimension(format!(
                "config expects {} inputs, tangent matrix has dimension {}",
                config.p_max,
                tangents.dim()
            )));
        }
        if outputs == 0 {
            return Err(Error::InvalidDimension(
                "output dimension must be >= 1".into(),
            ));
        }
        let n = tangents.dim();
        Ok(Self {
            jacobian: DMatrix::zeros(outputs, n),
            approx_jvps: DMatrix::zeros(outputs, n),
            cursor: 0,
            config,
            tangents,
            call_counter: 0,
            primed: false,
        })
    }

    /// Forgets all accumulated information. The next call performs a full sweep.
    pub fn reset(&mut self) {
        self.jacobian.fill(0.0);
        self.approx_jvps.fill(0.0);
        self.cursor = 0;
        self.primed = false;
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    pub fn approx_jvps(&self) -> &DMatrix<f64> {
        &self.approx_jvps
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn config(&self) -> &WaspConfig {
        &self.config
    }

    pub fn tangents(&self) -> &Arc<TangentMatrix> {
        &self.tangents
    }

    pub fn call_count(&self) -> u64 {
        self.call_counter
    }

    /// Whether at least one estimate has been produced since construction or reset.
    pub fn is_primed(&self) -> bool {
        self.primed
    }

    pub fn inputs(&self) -> usize {
        self.tangents.dim()
    }

    pub fn outputs(&self) -> usize {
        self.approx_jvps.nrows()
    }

    /// Estimates the Jacobian of `f` at `x`, evaluating `f(x)` itself.
    pub fn estimate<F>(&mut self, f: &F, x: &DVector<f64>) -> Result<JacobianEstimate>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
    {
        let base = evaluate(f, x)?;
        let mut est = self.estimate_with_base(f, x, &base)?;
        est.dynamics_calls += 1;
        self.call_counter += 1;
        Ok(est)
    }

    /// Estimates the Jacobian of `f` at `x` given the already-computed `f(x)`.
    ///
    /// Each iteration measures one JVP along the tangent column at the cursor,
    /// compares it with the stored prediction for that column, then folds the
    /// measurement in through the constrained least-squares update. Because
    /// the tangents are orthonormal, the update followed by realignment
    /// (`ΔF̂ ← D·ΔX`) amounts to replacing column `i` of `ΔF̂`, and `D` is
    /// recovered as `ΔF̂·ΔXᵀ` once the loop ends.
    ///
    /// On error the instance is left exactly as it was before the call.
    pub fn estimate_with_base<F>(
        &mut self,
        f: &F,
        x: &DVector<f64>,
        base: &DVector<f64>,
    ) -> Result<JacobianEstimate>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
    {
        let n = self.inputs();
        if x.len() != n || base.len() != self.outputs() {
            return Err(Error::InvalidDimension(format!(
                "instance is {}x{}, got input {} and output {}",
                self.outputs(),
                n,
                x.len(),
                base.len()
            )));
        }
        let min_jvps = if self.primed {
            self.config.p_min
        } else {
            self.config.p_max
        };
        let mut jvps = self.approx_jvps.clone();
        let mut cursor = self.cursor;
        let mut used = 0;
        let termination = loop {
            let dir = self.tangents.column(cursor);
            let truth = fd_jvp(f, x, base, &dir, self.config.fd_epsilon)?;
            used += 1;
            let converged = used >= min_jvps
                && termination_check(&jvps.column(cursor).into_owned(), &truth, &self.config);
            jvps.set_column(cursor, &truth);
            cursor = (cursor + 1) % n;
            if converged {
                break Termination::ToleranceMet;
            }
            if used >= self.config.p_max {
                break Termination::BudgetExhausted;
            }
        };
        self.jacobian = &jvps * self.tangents.matrix().transpose();
        self.approx_jvps = jvps;
        self.cursor = cursor;
        self.call_counter += used as u64;
        self.primed = true;
        Ok(JacobianEstimate {
            matrix: self.jacobian.clone(),
            jvps_used: used,
            dynamics_calls: used,
            termination,
        })
    }
}

/// Free-function form of [`WaspInstance::estimate`].
pub fn wasp_jacobian<F>(
    instance: &mut WaspInstance,
    f: &F,
    x: &DVector<f64>,
) -> Result<JacobianEstimate>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    instance.estimate(f, x)
}
