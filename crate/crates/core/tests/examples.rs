#![allow(dead_code)]

#[path = "../examples/benchmark.rs"]
mod benchmark;
#[path = "../examples/jacobian_approximation.rs"]
mod jacobian_approximation;
#[path = "../examples/receding_horizon.rs"]
mod receding_horizon;
#[path = "../examples/sampling_planners.rs"]
mod sampling_planners;

#[test]
fn jacobian_approximation_runs() {
    jacobian_approximation::run_example().unwrap();
}

#[test]
fn receding_horizon_runs() {
    receding_horizon::run_example().unwrap();
}

#[test]
fn sampling_planners_run() {
    sampling_planners::run_example().unwrap();
}

#[test]
fn benchmark_runs() {
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var("WASP_MPC_OUT", dir.path());
    benchmark::run_example().unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
}
