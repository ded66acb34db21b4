//! Black-box Jacobian computation: plain forward differencing and the
//! coherence-based sequential approximation that reuses JVPs from earlier,
//! nearby evaluation points.

mod fd;
mod tangent;
mod wasp;

pub use fd::{evaluate, fd_jacobian, fd_jacobian_with_base, fd_jvp, DEFAULT_FD_EPSILON};
pub use tangent::{make_orthonormal_tangents, TangentMatrix};
pub use wasp::{
    kkt_solve, termination_check, wasp_jacobian, JacobianEstimate, Termination, WaspConfig,
    WaspInstance, NORM_GUARD, ZERO_TRUTH_ABS_TOL,
};
