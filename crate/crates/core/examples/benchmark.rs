//! Paired FD / WASP episodes on the chain task, the resulting metrics, and
//! the JSON + CSV reports. Reports go to `$WASP_MPC_OUT` or the temp dir.

use std::path::PathBuf;

use wasp_mpc::bench::{
    md_call_ratio, md_speedup, performance_ratio, run_episode, write_report, BenchOptions,
};
use wasp_mpc::mpc::{BackendKind, WaspSettings};
use wasp_mpc::planners::{PlannerConfig, PlannerKind};
use wasp_mpc::tasks::chain_task;

pub fn run_example() -> wasp_mpc::Result<()> {
    let task = chain_task();
    let options = BenchOptions {
        sim_seconds: 1.0,
        ..BenchOptions::default()
    };
    let planner = PlannerConfig::new(PlannerKind::Ilqg);
    let wasp = WaspSettings::new(0.5, 0.5, 0.5, 0.5);
    let fd = run_episode(
        "example",
        &task,
        planner,
        BackendKind::Fd,
        wasp,
        0,
        &options,
    )?;
    let approx = run_episode(
        "example",
        &task,
        planner,
        BackendKind::Wasp,
        wasp,
        0,
        &options,
    )?;

    println!("md speedup        {:.3}", md_speedup(&fd, &approx)?);
    println!("md call ratio     {:.3}", md_call_ratio(&fd, &approx)?);
    println!("performance ratio {:.4}", performance_ratio(&fd, &approx)?);

    let dir = std::env::var_os("WASP_MPC_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wasp-mpc-example"));
    for report in [&fd, &approx] {
        let (json, csv) = write_report(report, &dir)?;
        println!("wrote {} and {}", json.display(), csv.display());
    }
    Ok(())
}

fn main() -> wasp_mpc::Result<()> {
    run_example()
}
