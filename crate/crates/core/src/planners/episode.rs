use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Planner, Problem};
use crate::error::{Error, Result};
use crate::mpc::DerivativeBackend;
use crate::tasks::TaskSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOptions {
    pub sim_seconds: f64,
    /// Clear all approximation state before every replan instead of shifting it.
    pub reset_each_replan: bool,
    /// When false, timing fields are written as 0 so traces compare exactly.
    pub record_timing: bool,
    /// Overrides the task's initial state.
    pub initial_state: Option<DVector<f64>>,
}

impl EpisodeOptions {
    pub fn new(sim_seconds: f64) -> Self {
        Self {
            sim_seconds,
            reset_each_replan: false,
            record_timing: true,
            initial_state: None,
        }
    }

    pub fn steps(&self, dt: f64) -> Result<usize> {
        if !(self.sim_seconds > 0.0 && self.sim_seconds.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "simulated seconds must be positive, got {}",
                self.sim_seconds
            )));
        }
        Ok((self.sim_seconds / dt).round() as usize)
    }
}

/// Metrics of one plan-and-execute cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub replan_index: usize,
    pub seed: u64,
    pub planning_time_s: f64,
    pub md_time_s: f64,
    /// Dynamics calls spent inside model-derivative passes.
    pub md_calls: u64,
    /// Dynamics calls spent on rollouts and line searches.
    pub rollout_calls: u64,
    pub md_passes: usize,
    /// Stage cost `ℓ(x_k, u*_0)` of the executed step.
    pub executed_cost: f64,
    /// Planner's cost for the whole horizon.
    pub planned_cost: f64,
    pub jvps_x_min: usize,
    pub jvps_x_max: usize,
    pub jvps_u_min: usize,
    pub jvps_u_max: usize,
    pub degraded: bool,
}

impl ReplanRecord {
    pub fn dynamics_calls(&self) -> u64 {
        self.md_calls + self.rollout_calls
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub records: Vec<ReplanRecord>,
    /// Executed states, starting with the initial state.
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub requested_steps: usize,
    /// Set when the planner or the executed system diverged before the end.
    pub diverged: bool,
}

impl EpisodeTrace {
    pub fn executed_steps(&self) -> usize {
        self.controls.len()
    }

    pub fn average_executed_cost(&self) -> f64 {
        mean(self.records.iter().map(|r| r.executed_cost))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Drops the executed control and repeats the last one to keep the horizon.
pub fn shift_warm_start(controls: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut next: Vec<_> = controls.iter().skip(1).cloned().collect();
    if let Some(last) = controls.last() {
        next.push(last.clone());
    }
    next
}

fn min_max(values: &[usize]) -> (usize, usize) {
    values
        .iter()
        .fold(None, |acc: Option<(usize, usize)>, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .unwrap_or((0, 0))
}

/// Receding-horizon episode: plan, execute the first control on the task's
/// dynamics, shift the warm start and the backend's instances, repeat.
///
/// Steps executed on the "real" system are not counted against the planner.
pub fn replan_loop(
    task: &TaskSpec,
    planner: &mut Planner,
    backend: &mut DerivativeBackend,
    options: &EpisodeOptions,
) -> Result<EpisodeTrace> {
    let steps = options.steps(task.dt)?;
    let mut x = options
        .initial_state
        .clone()
        .unwrap_or_else(|| task.initial_state.clone());
    if x.len() != task.state_dim {
        return Err(Error::InvalidDimension(format!(
            "initial state has {} entries, task state dimension is {}",
            x.len(),
            task.state_dim
        )));
    }
    let model = task.counted();
    let mut warm = task.initial_warm_start();
    let mut trace = EpisodeTrace {
        records: Vec::with_capacity(steps),
        states: vec![x.clone()],
        controls: Vec::with_capacity(steps),
        requested_steps: steps,
        diverged: false,
    };

    for k in 0..steps {
        if options.reset_each_replan {
            backend.reset();
        }
        let problem = Problem {
            dynamics: &model,
            cost: task.cost.as_ref(),
            x0: &x,
            dt: task.dt,
        };
        let plan = match planner.plan(&problem, &warm, backend) {
            Ok(plan) => plan,
            Err(Error::RolloutDiverged { .. }) => {
                trace.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let u = plan.first_control().clone();
        let executed_cost = task.cost.stage(&x, &u);
        let next = task.dynamics.step(&x, &u);
        if !next.iter().all(|v| v.is_finite()) || !executed_cost.is_finite() {
            trace.diverged = true;
            break;
        }

        let (jvps_x_min, jvps_x_max) = min_max(&plan.jvps_x);
        let (jvps_u_min, jvps_u_max) = min_max(&plan.jvps_u);
        let (planning_time_s, md_time_s) = if options.record_timing {
            (plan.planning_time, plan.derivative_time)
        } else {
            (0.0, 0.0)
        };
        trace.records.push(ReplanRecord {
            replan_index: k,
            seed: planner.config.seed,
            planning_time_s,
            md_time_s,
            md_calls: plan.derivative_calls,
            rollout_calls: plan.dynamics_calls - plan.derivative_calls,
            md_passes: plan.derivative_passes,
            executed_cost,
            planned_cost: plan.cost,
            jvps_x_min,
            jvps_x_max,
            jvps_u_min,
            jvps_u_max,
            degraded: plan.degraded,
        });
        trace.controls.push(u);
        trace.states.push(next.clone());
        x = next;
        warm = shift_warm_start(&plan.controls);
        backend.shift_horizon();
    }
    Ok(trace)
}
