use std::time::Instant;

use nalgebra::DVector;

use super::{LineSearch, PlanResult, PlannerConfig, Problem};
use crate::error::Result;
use crate::mpc::{
    cost_derivatives, rollout, total_cost, CostDerivatives, DerivativeBackend, ModelDerivatives,
    Trajectory,
};

/// `∂J/∂u_i` by the adjoint recursion
/// `λ_T = ∂ℓ_T/∂x`, `λ_i = ℓ_x,i + A_iᵀλ_{i+1}`, `∂J/∂u_i = ℓ_u,i + B_iᵀλ_{i+1}`.
pub fn adjoint_gradient(md: &ModelDerivatives, cd: &CostDerivatives) -> Vec<DVector<f64>> {
    let horizon = cd.stages.len();
    let mut grad = vec![DVector::zeros(0); horizon];
    let mut lambda = cd.terminal.lx.clone();
    for i in (0..horizon).rev() {
        let stage = &cd.stages[i];
        grad[i] = &stage.lu + md.b[i].tr_mul(&lambda);
        lambda = &stage.lx + md.a[i].tr_mul(&lambda);
    }
    grad
}

/// Tries `U − α·direction` along the backtracking schedule and returns the
/// first candidate with strictly lower cost.
pub(crate) fn descend(
    problem: &Problem<'_>,
    controls: &[DVector<f64>],
    current_cost: f64,
    direction: &[DVector<f64>],
    schedule: &LineSearch,
) -> Option<(Trajectory, f64, f64)> {
    for alpha in schedule.steps() {
        let candidate: Vec<_> = controls
            .iter()
            .zip(direction)
            .map(|(u, d)| u - d * alpha)
            .collect();
        let Ok(traj) = rollout(problem.dynamics, problem.x0, &candidate, problem.dt) else {
            continue;
        };
        let cost = total_cost(&traj, problem.cost);
        if cost.is_finite() && cost < current_cost {
            return Some((traj, cost, alpha));
        }
    }
    None
}

pub(crate) fn max_norm(vs: &[DVector<f64>]) -> f64 {
    vs.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Gradient descent on the control sequence with adjoint gradients and a
/// backtracking line search that only accepts cost decreases.
pub fn gd_plan(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    backend: &mut DerivativeBackend,
    config: &PlannerConfig,
) -> Result<PlanResult> {
    let start = Instant::now();
    let calls_before = problem.dynamics.calls();
    let mut traj = rollout(problem.dynamics, problem.x0, warm, problem.dt)?;
    let mut cost = total_cost(&traj, problem.cost);
    let mut history = vec![cost];
    let mut derivative_time = 0.0;
    let mut derivative_calls = 0;
    let mut passes = 0;
    let (mut jvps_x, mut jvps_u) = (Vec::new(), Vec::new());
    let mut step_norm = 0.0;
    let mut degraded = false;

    for _ in 0..config.iterations {
        let md = match backend.model_derivatives(problem.dynamics, &traj) {
            Ok(md) => md,
            Err(_) => {
                degraded = true;
                break;
            }
        };
        derivative_time += md.wall_time;
        derivative_calls += md.dynamics_calls;
        passes += 1;
        jvps_x.extend_from_slice(&md.jvps_x);
        jvps_u.extend_from_slice(&md.jvps_u);
        let cd = cost_derivatives(&traj, problem.cost);
        let grad = adjoint_gradient(&md, &cd);
        step_norm = max_norm(&grad);
        if step_norm == 0.0 {
            break;
        }
        match descend(problem, &traj.controls, cost, &grad, &config.line_search) {
            Some((next, next_cost, _)) => {
                traj = next;
                cost = next_cost;
                history.push(cost);
            }
            None => break,
        }
    }

    Ok(PlanResult {
        controls: traj.controls.clone(),
        trajectory: traj,
        cost,
        planning_time: start.elapsed().as_secs_f64(),
        derivative_time,
        dynamics_calls: problem.dynamics.calls() - calls_before,
        derivative_calls,
        derivative_passes: passes,
        jvps_x,
        jvps_u,
        cost_history: history,
        step_norm,
        degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planners::PlannerKind;
    use crate::tasks::{lq_task, pendulum_task};
    use nalgebra::DVector;

    #[test]
    fn adjoint_matches_central_differences() {
        let task = lq_task(3, 2, 4).unwrap().with_horizon(20);
        let f = task.counted();
        let controls: Vec<_> = (0..20)
            .map(|i| DVector::from_element(2, 0.1 * (i as f64).cos()))
            .collect();
        let traj = rollout(&f, &task.initial_state, &controls, task.dt).unwrap();
        let md = DerivativeBackend::fd()
            .model_derivatives(&f, &traj)
            .unwrap();
        let grad = adjoint_gradient(&md, &cost_derivatives(&traj, task.cost.as_ref()));
        let h = 1e-5;
        for i in 0..20 {
            for k in 0..2 {
                let mut up = controls.clone();
                up[i][k] += h;
                let mut dn = controls.clone();
                dn[i][k] -= h;
                let jp = total_cost(
                    &rollout(&f, &task.initial_state, &up, task.dt).unwrap(),
                    task.cost.as_ref(),
                );
                let jm = total_cost(
                    &rollout(&f, &task.initial_state, &dn, task.dt).unwrap(),
                    task.cost.as_ref(),
                );
                let fd = (jp - jm) / (2.0 * h);
                assert!(
                    (fd - grad[i][k]).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "{i} {k}: {fd} vs {}",
                    grad[i][k]
                );
            }
        }
    }

    #[test]
    fn pendulum_costs_never_increase() {
        let task = pendulum_task();
        let f = task.counted();
        let problem = Problem {
            dynamics: &f,
            cost: task.cost.as_ref(),
            x0: &DVector::from_vec(vec![0.1, 0.0]),
            dt: task.dt,
        };
        let warm = vec![DVector::zeros(1); task.horizon];
        let cfg = PlannerConfig::new(PlannerKind::Gd).with_iterations(15);
        let res = gd_plan(&problem, &warm, &mut DerivativeBackend::fd(), &cfg).unwrap();
        assert!(res.cost_history.len() > 1);
        assert!(res.cost_history.windows(2).all(|w| w[1] < w[0]));
        assert!((res.cost - total_cost(&res.trajectory, task.cost.as_ref())).abs() <= 1e-10);
    }
}
