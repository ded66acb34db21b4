use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// Discrete-time dynamics `x_{i+1} = f(x_i, u_i)`.
///
/// Implementations must be pure; the derivative batch calls `step` from
/// several threads at once.
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// Closed-form `(∂f/∂x, ∂f/∂u)`, when the model has one.
    fn jacobians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }
}

/// Dynamics handle that counts every evaluation. Clones share the counter.
#[derive(Clone)]
pub struct CountedDynamics {
    inner: Arc<dyn Dynamics>,
    calls: Arc<AtomicU64>,
}

impl fmt::Debug for CountedDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CountedDynamics")
            .field("state_dim", &self.state_dim())
            .field("control_dim", &self.control_dim())
            .field("calls", &self.calls())
            .finish()
    }
}

impl CountedDynamics {
    pub fn new(inner: Arc<dyn Dynamics>) -> Self {
        Self {
            inner,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn from_model<D: Dynamics + 'static>(model: D) -> Self {
        Self::new(Arc::new(model))
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.step(x, u)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.inner.control_dim()
    }

    pub fn model(&self) -> &Arc<dyn Dynamics> {
        &self.inner
    }

    /// A handle on the same model with its own counter.
    pub fn fresh_counter(&self) -> Self {
        Self::new(self.inner.clone())
    }
}

/// Linear time-invariant dynamics `x' = A x + B u`.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Dynamics for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn jacobians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((self.a.clone(), self.b.clone()))
    }
}
