//! Receding-horizon bookkeeping: rollouts, cost evaluation and batched
//! model/cost derivatives with a pluggable derivative backend.

mod backend;
mod cost;
mod dynamics;
mod trajectory;

pub use backend::{
    model_derivatives, BackendKind, DerivativeBackend, ModelDerivatives, WaspSettings,
};
pub use cost::{ConstantCost, Cost, QuadraticCost, StageDerivatives, TerminalDerivatives};
pub use dynamics::{CountedDynamics, Dynamics, LinearDynamics};
pub use trajectory::{cost_derivatives, rollout, total_cost, CostDerivatives, Trajectory};
