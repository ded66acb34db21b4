use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::gradient::max_norm;
use super::{PlanResult, PlannerConfig, Problem, Regularization};
use crate::error::Result;
use crate::mpc::{
    cost_derivatives, rollout, total_cost, CostDerivatives, DerivativeBackend, ModelDerivatives,
    Trajectory,
};

/// Feedforward and feedback gains from one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardPass {
    pub feedforward: Vec<DVector<f64>>,
    pub feedback: Vec<DMatrix<f64>>,
    /// Predicted first-order cost change `Σ k_iᵀ Q_u,i`.
    pub expected_decrease: f64,
}

/// Gauss-Newton Riccati recursion with `μ·I` added to `Q_uu`.
///
/// Returns `None` when a regularized `Q_uu` is not positive definite.
pub fn backward_pass(md: &ModelDerivatives, cd: &CostDerivatives, mu: f64) -> Option<BackwardPass> {
    let horizon = cd.stages.len();
    let mut vx = cd.terminal.lx.clone();
    let mut vxx = cd.terminal.lxx.clone();
    let mut feedforward = vec![DVector::zeros(0); horizon];
    let mut feedback = vec![DMatrix::zeros(0, 0); horizon];
    let mut expected = 0.0;
    for i in (0..horizon).rev() {
        let (a, b, s) = (&md.a[i], &md.b[i], &cd.stages[i]);
        let vxx_a = &vxx * a;
        let vxx_b = &vxx * b;
        let qx = &s.lx + a.tr_mul(&vx);
        let qu = &s.lu + b.tr_mul(&vx);
        let qxx = &s.lxx + a.tr_mul(&vxx_a);
        let quu = &s.luu + b.tr_mul(&vxx_b);
        let qux = &s.lux + b.tr_mul(&vxx_a);

        let nu = quu.nrows();
        let quu_reg = &quu + DMatrix::identity(nu, nu) * mu;
        let chol = quu_reg.cholesky()?;
        let k = -chol.solve(&qu);
        let gain = -chol.solve(&qux);

        expected += k.dot(&qu);
        vx = &qx + gain.tr_mul(&(&quu * &k)) + gain.tr_mul(&qu) + qux.tr_mul(&k);
        let v = &qxx + gain.tr_mul(&(&quu * &gain)) + gain.tr_mul(&qux) + qux.tr_mul(&gain);
        vxx = (&v + v.transpose()) * 0.5;
        feedforward[i] = k;
        feedback[i] = gain;
    }
    Some(BackwardPass {
        feedforward,
        feedback,
        expected_decrease: expected,
    })
}

fn forward_pass(
    problem: &Problem<'_>,
    nominal: &Trajectory,
    gains: &BackwardPass,
    alpha: f64,
) -> Option<Trajectory> {
    let horizon = nominal.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    states.push(problem.x0.clone());
    for i in 0..horizon {
        let dx = &states[i] - &nominal.states[i];
        let u = &nominal.controls[i] + &gains.feedforward[i] * alpha + &gains.feedback[i] * dx;
        let next = problem.dynamics.step(&states[i], &u);
        if u.iter().chain(next.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        controls.push(u);
        states.push(next);
    }
    Some(Trajectory {
        dt: nominal.dt,
        states,
        controls,
    })
}

fn increase(mu: f64, reg: &Regularization) -> f64 {
    (mu * reg.factor).max(reg.min)
}

fn decrease(mu: f64, reg: &Regularization) -> f64 {
    let next = mu / reg.factor;
    if next < reg.min {
        0.0
    } else {
        next
    }
}

/// Iterative LQG with a fresh regularization state.
pub fn ilqg_plan(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    backend: &mut DerivativeBackend,
    config: &PlannerConfig,
) -> Result<PlanResult> {
    let mut mu = config.regularization.initial;
    ilqg_plan_with_state(problem, warm, backend, config, &mut mu)
}

/// Iterative LQG; `mu` carries the regularization across calls.
pub(crate) fn ilqg_plan_with_state(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    backend: &mut DerivativeBackend,
    config: &PlannerConfig,
    mu: &mut f64,
) -> Result<PlanResult> {
    let start = Instant::now();
    let calls_before = problem.dynamics.calls();
    let reg = config.regularization;
    let mut traj = rollout(problem.dynamics, problem.x0, warm, problem.dt)?;
    let mut cost = total_cost(&traj, problem.cost);
    let mut history = vec![cost];
    let mut derivative_time = 0.0;
    let mut derivative_calls = 0;
    let mut passes = 0;
    let (mut jvps_x, mut jvps_u) = (Vec::new(), Vec::new());
    let mut step_norm = 0.0;
    let mut degraded = false;
    let mut cached: Option<(ModelDerivatives, CostDerivatives)> = None;

    for _ in 0..config.iterations {
        if cached.is_none() {
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
            cached = Some((md, cost_derivatives(&traj, problem.cost)));
        }
        let (md, cd) = cached.as_ref().expect("derivatives computed above");

        let gains = loop {
            match backward_pass(md, cd, *mu) {
                Some(g) => break Some(g),
                None => {
                    *mu = increase(*mu, &reg);
                    if *mu > reg.max {
                        break None;
                    }
                }
            }
        };
        let Some(gains) = gains else {
            *mu = reg.max;
            degraded = true;
            break;
        };
        step_norm = max_norm(&gains.feedforward);
        if step_norm <= 1e-12 {
            *mu = decrease(*mu, &reg);
            break;
        }

        let accepted = config.line_search.steps().find_map(|alpha| {
            let candidate = forward_pass(problem, &traj, &gains, alpha)?;
            let c = total_cost(&candidate, problem.cost);
            (c.is_finite() && c < cost).then_some((candidate, c))
        });
        match accepted {
            Some((next, next_cost)) => {
                traj = next;
                cost = next_cost;
                history.push(cost);
                cached = None;
                *mu = decrease(*mu, &reg);
            }
            None => {
                *mu = increase(*mu, &reg);
                if *mu > reg.max {
                    *mu = reg.max;
                    degraded = true;
                    break;
                }
            }
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
    use crate::tasks::{cartpole_task, lq_task};

    #[test]
    fn optimal_input_is_stationary() {
        let task = lq_task(3, 2, 9).unwrap().with_horizon(15);
        let f = task.counted();
        let problem = Problem {
            dynamics: &f,
            cost: task.cost.as_ref(),
            x0: &task.initial_state,
            dt: task.dt,
        };
        let cfg = PlannerConfig::new(PlannerKind::Ilqg);
        let warm = vec![DVector::zeros(2); 15];
        let first = ilqg_plan(&problem, &warm, &mut DerivativeBackend::fd(), &cfg).unwrap();
        let again = ilqg_plan(
            &problem,
            &first.controls,
            &mut DerivativeBackend::fd(),
            &cfg,
        )
        .unwrap();
        // FD Jacobians carry ~1e-9 error, which bounds how stationary the input can be.
        assert!(
            again.step_norm <= 1e-6 * first.step_norm.max(1.0),
            "{}",
            again.step_norm
        );
        assert!((again.cost - first.cost).abs() <= 1e-10 * first.cost);
    }

    #[test]
    fn cartpole_improves() {
        let task = cartpole_task();
        let f = task.counted();
        let problem = Problem {
            dynamics: &f,
            cost: task.cost.as_ref(),
            x0: &task.initial_state,
            dt: task.dt,
        };
        let cfg = PlannerConfig::new(PlannerKind::Ilqg).with_iterations(10);
        let warm = vec![DVector::zeros(1); task.horizon];
        let res = ilqg_plan(&problem, &warm, &mut DerivativeBackend::fd(), &cfg).unwrap();
        assert!(res.cost < res.cost_history[0]);
        assert!(res.cost_history.windows(2).all(|w| w[1] < w[0]));
    }
}
