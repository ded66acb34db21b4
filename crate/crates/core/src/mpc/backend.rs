use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use super::dynamics::CountedDynamics;
use super::trajectory::Trajectory;
use crate::derivative::{
    evaluate, fd_jacobian_with_base, make_orthonormal_tangents, TangentMatrix, WaspConfig,
    WaspInstance, DEFAULT_FD_EPSILON,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Fd,
    Wasp,
}

impl BackendKind {
    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::Fd => "fd",
            BackendKind::Wasp => "wasp",
        }
    }
}

/// Per-axis accuracy knobs plus tangent-basis options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaspSettings {
    pub frac_x: f64,
    pub tol_x: f64,
    pub frac_u: f64,
    pub tol_u: f64,
    pub tangent_seed: u64,
    /// Use the standard basis instead of a random orthonormal one.
    pub identity_tangents: bool,
    pub fd_epsilon: f64,
}

impl Default for WaspSettings {
    fn default() -> Self {
        Self {
            frac_x: 0.5,
            tol_x: 0.5,
            frac_u: 0.5,
            tol_u: 0.5,
            tangent_seed: 0,
            identity_tangents: false,
            fd_epsilon: DEFAULT_FD_EPSILON,
        }
    }
}

impl WaspSettings {
    pub fn new(frac_x: f64, tol_x: f64, frac_u: f64, tol_u: f64) -> Self {
        Self {
            frac_x,
            tol_x,
            frac_u,
            tol_u,
            ..Self::default()
        }
    }

    /// `frac = 1`, `tol = 0` on both axes with identity tangents.
    pub fn fd_equivalent() -> Self {
        Self {
            identity_tangents: true,
            ..Self::new(1.0, 0.0, 1.0, 0.0)
        }
    }
}

/// Per-timestep model Jacobians `A_i = ∂f/∂x_i`, `B_i = ∂f/∂u_i` for `i < T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDerivatives {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub dynamics_calls: u64,
    pub wall_time: f64,
    /// JVPs spent on each timestep's state axis (`d_x` under FD).
    pub jvps_x: Vec<usize>,
    pub jvps_u: Vec<usize>,
}

struct StepDerivatives {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    jvps_x: usize,
    jvps_u: usize,
}

/// Finite differencing, or one pair of persistent approximation instances per
/// timestep sharing a state-axis and a control-axis tangent matrix.
pub struct DerivativeBackend {
    kind: BackendKind,
    fd_epsilon: f64,
    settings: Option<WaspSettings>,
    tangents: Option<(Arc<TangentMatrix>, Arc<TangentMatrix>)>,
    state_axis: Vec<WaspInstance>,
    control_axis: Vec<WaspInstance>,
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for DerivativeBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DerivativeBackend")
            .field("kind", &self.kind)
            .field("settings", &self.settings)
            .field("horizon", &self.state_axis.len())
            .field("threads", &self.threads())
            .finish()
    }
}

impl DerivativeBackend {
    pub fn fd() -> Self {
        Self {
            kind: BackendKind::Fd,
            fd_epsilon: DEFAULT_FD_EPSILON,
            settings: None,
            tangents: None,
            state_axis: Vec::new(),
            control_axis: Vec::new(),
            pool: None,
        }
    }

    pub fn fd_with_epsilon(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fd epsilon must be positive, got {eps}"
            )));
        }
        Ok(Self {
            fd_epsilon: eps,
            ..Self::fd()
        })
    }

    pub fn wasp(
        settings: WaspSettings,
        state_dim: usize,
        control_dim: usize,
        horizon: usize,
    ) -> Result<Self> {
        let (tx, tu) = if settings.identity_tangents {
            (
                TangentMatrix::identity(state_dim)?,
                TangentMatrix::identity(control_dim)?,
            )
        } else {
            (
                make_orthonormal_tangents(state_dim, settings.tangent_seed)?,
                make_orthonormal_tangents(control_dim, settings.tangent_seed.wrapping_add(1))?,
            )
        };
        let tx = Arc::new(tx);
        let tu = Arc::new(tu);
        let cfg_x = WaspConfig::new(state_dim, settings.frac_x, settings.tol_x)?
            .with_epsilon(settings.fd_epsilon)?;
        let cfg_u = WaspConfig::new(control_dim, settings.frac_u, settings.tol_u)?
            .with_epsilon(settings.fd_epsilon)?;
        let state_axis = (0..horizon)
            .map(|_| WaspInstance::new(state_dim, tx.clone(), cfg_x))
            .collect::<Result<Vec<_>>>()?;
        let control_axis = (0..horizon)
            .map(|_| WaspInstance::new(state_dim, tu.clone(), cfg_u))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: BackendKind::Wasp,
            fd_epsilon: settings.fd_epsilon,
            settings: Some(settings),
            tangents: Some((tx, tu)),
            state_axis,
            control_axis,
            pool: None,
        })
    }

    /// `0` evaluates timesteps sequentially; otherwise a dedicated pool of
    /// `threads` workers splits the horizon.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        self.pool = if threads == 0 {
            None
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Some(Arc::new(pool))
        };
        Ok(self)
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(0, |p| p.current_num_threads())
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn settings(&self) -> Option<&WaspSettings> {
        self.settings.as_ref()
    }

    pub fn fd_epsilon(&self) -> f64 {
        self.fd_epsilon
    }

    pub fn tangents(&self) -> Option<&(Arc<TangentMatrix>, Arc<TangentMatrix>)> {
        self.tangents.as_ref()
    }

    pub fn state_instances(&self) -> &[WaspInstance] {
        &self.state_axis
    }

    pub fn control_instances(&self) -> &[WaspInstance] {
        &self.control_axis
    }

    /// Re-binds instances after the receding horizon advances one step:
    /// instance `k+1` becomes instance `k`, and the freed last slot is reset.
    pub fn shift_horizon(&mut self) {
        for axis in [&mut self.state_axis, &mut self.control_axis] {
            if axis.is_empty() {
                continue;
            }
            axis.rotate_left(1);
            axis.last_mut().expect("non-empty").reset();
        }
    }

    /// Clears all accumulated approximation state.
    pub fn reset(&mut self) {
        for inst in self
            .state_axis
            .iter_mut()
            .chain(self.control_axis.iter_mut())
        {
            inst.reset();
        }
    }

    /// Computes `(A_i, B_i)` for every `i < T`. One base evaluation
    /// `f(x_i, u_i)` per timestep is shared by both axes.
    pub fn model_derivatives(
        &mut self,
        f: &CountedDynamics,
        traj: &Trajectory,
    ) -> Result<ModelDerivatives> {
        let horizon = traj.horizon();
        if traj.states.len() != horizon + 1 {
            return Err(Error::InvalidDimension(format!(
                "trajectory has {} states for {} controls",
                traj.states.len(),
                horizon
            )));
        }
        if self.kind == BackendKind::Wasp && self.state_axis.len() != horizon {
            return Err(Error::InvalidDimension(format!(
                "backend holds {} timestep instances, trajectory horizon is {horizon}",
                self.state_axis.len()
            )));
        }
        let calls_before = f.calls();
        let start = Instant::now();
        let eps = self.fd_epsilon;
        let results: Vec<Result<StepDerivatives>> = match (self.kind, self.pool.clone()) {
            (BackendKind::Fd, None) => (0..horizon).map(|i| fd_step(f, traj, i, eps)).collect(),
            (BackendKind::Fd, Some(pool)) => pool.install(|| {
                (0..horizon)
                    .into_par_iter()
                    .map(|i| fd_step(f, traj, i, eps))
                    .collect()
            }),
            (BackendKind::Wasp, None) => self
                .state_axis
                .iter_mut()
                .zip(self.control_axis.iter_mut())
                .enumerate()
                .map(|(i, (sx, su))| wasp_step(f, traj, i, sx, su))
                .collect(),
            (BackendKind::Wasp, Some(pool)) => {
                let state_axis = &mut self.state_axis;
                let control_axis = &mut self.control_axis;
                pool.install(|| {
                    state_axis
                        .par_iter_mut()
                        .zip(control_axis.par_iter_mut())
                        .enumerate()
                        .map(|(i, (sx, su))| wasp_step(f, traj, i, sx, su))
                        .collect()
                })
            }
        };
        let wall_time = start.elapsed().as_secs_f64();
        let mut out = ModelDerivatives {
            a: Vec::with_capacity(horizon),
            b: Vec::with_capacity(horizon),
            dynamics_calls: 0,
            wall_time,
            jvps_x: Vec::with_capacity(horizon),
            jvps_u: Vec::with_capacity(horizon),
        };
        for (i, r) in results.into_iter().enumerate() {
            let step = r.map_err(|e| Error::at_timestep(i, e))?;
            out.a.push(step.a);
            out.b.push(step.b);
            out.jvps_x.push(step.jvps_x);
            out.jvps_u.push(step.jvps_u);
        }
        out.dynamics_calls = f.calls() - calls_before;
        Ok(out)
    }
}

fn fd_step(f: &CountedDynamics, traj: &Trajectory, i: usize, eps: f64) -> Result<StepDerivatives> {
    let x = &traj.states[i];
    let u = &traj.controls[i];
    let fx = |xx: &DVector<f64>| f.step(xx, u);
    let fu = |uu: &DVector<f64>| f.step(x, uu);
    let base = evaluate(&fx, x)?;
    let a = fd_jacobian_with_base(&fx, x, &base, eps)?;
    let b = fd_jacobian_with_base(&fu, u, &base, eps)?;
    Ok(StepDerivatives {
        a,
        b,
        jvps_x: x.len(),
        jvps_u: u.len(),
    })
}

fn wasp_step(
    f: &CountedDynamics,
    traj: &Trajectory,
    i: usize,
    state_inst: &mut WaspInstance,
    control_inst: &mut WaspInstance,
) -> Result<StepDerivatives> {
    let x = &traj.states[i];
    let u = &traj.controls[i];
    let fx = |xx: &DVector<f64>| f.step(xx, u);
    let fu = |uu: &DVector<f64>| f.step(x, uu);
    let base = evaluate(&fx, x)?;
    let ex = state_inst.estimate_with_base(&fx, x, &base)?;
    let eu = control_inst.estimate_with_base(&fu, u, &base)?;
    Ok(StepDerivatives {
        a: ex.matrix,
        b: eu.matrix,
        jvps_x: ex.jvps_used,
        jvps_u: eu.jvps_used,
    })
}

/// Free-function form of [`DerivativeBackend::model_derivatives`].
pub fn model_derivatives(
    backend: &mut DerivativeBackend,
    f: &CountedDynamics,
    traj: &Trajectory,
) -> Result<ModelDerivatives> {
    backend.model_derivatives(f, traj)
}
