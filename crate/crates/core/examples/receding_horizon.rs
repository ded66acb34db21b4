//! Cartpole swing-up and recentring under iLQG with approximated model derivatives,
//! replanning every control step.

use wasp_mpc::mpc::{DerivativeBackend, WaspSettings};
use wasp_mpc::planners::{replan_loop, EpisodeOptions, Planner, PlannerConfig, PlannerKind};
use wasp_mpc::tasks::cartpole_task;

pub fn run_example() -> wasp_mpc::Result<()> {
    let task = cartpole_task();
    let mut planner = Planner::new(PlannerConfig::new(PlannerKind::Ilqg).with_iterations(2))?;
    let mut backend = DerivativeBackend::wasp(
        WaspSettings::new(0.5, 0.5, 1.0, 0.5),
        task.state_dim,
        task.control_dim,
        task.horizon,
    )?;
    let trace = replan_loop(
        &task,
        &mut planner,
        &mut backend,
        &EpisodeOptions::new(10.0),
    )?;

    for r in trace.records.iter().step_by(100) {
        let x = &trace.states[r.replan_index + 1];
        println!(
            "t={:>4.2}s  cart {:>6.3}  angle {:>6.3}  cost {:>8.4}  md calls {:>4}",
            r.replan_index as f64 * task.dt,
            x[0],
            x[1],
            r.executed_cost,
            r.md_calls
        );
    }
    println!(
        "{} steps, average executed cost {:.4}, diverged: {}",
        trace.executed_steps(),
        trace.average_executed_cost(),
        trace.diverged
    );
    Ok(())
}

fn main() -> wasp_mpc::Result<()> {
    run_example()
}
