//! One planning call of each sampling-based planner on the pendulum.

use wasp_mpc::mpc::{rollout, total_cost, DerivativeBackend};
use wasp_mpc::planners::{Planner, PlannerConfig, PlannerKind, Problem};
use wasp_mpc::tasks::pendulum_task;

pub fn run_example() -> wasp_mpc::Result<()> {
    let task = pendulum_task();
    let f = task.counted();
    let problem = Problem {
        dynamics: &f,
        cost: task.cost.as_ref(),
        x0: &task.initial_state,
        dt: task.dt,
    };
    let warm = task.initial_warm_start();
    let warm_cost = total_cost(
        &rollout(&f, &task.initial_state, &warm, task.dt)?,
        task.cost.as_ref(),
    );
    println!("warm start cost {warm_cost:.4}");
    for kind in PlannerKind::SAMPLING {
        let config = PlannerConfig::new(kind)
            .with_iterations(10)
            .with_samples(64);
        let result = Planner::new(config)?.plan(&problem, &warm, &mut DerivativeBackend::fd())?;
        println!(
            "{:<16} cost {:>9.4}  rollouts {:>5}  first control {:+.3}",
            kind.name(),
            result.cost,
            result.dynamics_calls / task.horizon as u64,
            result.first_control()[0]
        );
    }
    Ok(())
}

fn main() -> wasp_mpc::Result<()> {
    run_example()
}
