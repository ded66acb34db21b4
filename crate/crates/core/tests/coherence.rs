mod common;

use std::sync::Arc;

use nalgebra::DVector;
use wasp_mpc::derivative::{
    fd_jacobian, make_orthonormal_tangents, WaspConfig, WaspInstance, DEFAULT_FD_EPSILON,
};
use wasp_mpc::mpc::{rollout, DerivativeBackend, WaspSettings};
use wasp_mpc::tasks::chain_task;

fn field(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(5, |i, _| {
        let a = x[i % x.len()];
        let b = x[(i + 2) % x.len()];
        (a + 0.3 * b).sin() + 0.2 * a * b * b
    })
}

/// Average JVPs per call and mean relative error along `x_k = x_0 + k·step·d`.
fn track(step: f64, tol: f64) -> (f64, f64) {
    let dim = 7;
    let tangents = Arc::new(make_orthonormal_tangents(dim, 3).unwrap());
    let mut wasp =
        WaspInstance::new(5, tangents, WaspConfig::new(dim, 0.15, tol).unwrap()).unwrap();
    let dir = DVector::from_fn(dim, |i, _| ((i as f64) * 1.3).cos()).normalize();
    let (mut jvps, mut err) = (0.0, 0.0);
    let calls = 40;
    for k in 0..=calls {
        let x = DVector::from_element(dim, 0.2) + &dir * (k as f64 * step);
        let est = wasp.estimate(&field, &x).unwrap();
        if k > 0 {
            let truth = fd_jacobian(&field, &x, DEFAULT_FD_EPSILON).unwrap();
            jvps += est.jvps_used as f64;
            err += (&est.matrix - truth).norm();
        }
    }
    (jvps / calls as f64, err / calls as f64)
}

#[test]
fn closer_points_need_no_more_jvps() {
    let steps = [0.3, 0.1, 0.03, 0.01, 0.001];
    let results: Vec<_> = steps.iter().map(|&s| track(s, 0.05)).collect();
    for w in results.windows(2) {
        assert!(w[1].0 <= w[0].0 + 1e-12, "{results:?}");
    }
    assert!(results.last().unwrap().0 < results[0].0, "{results:?}");
}

#[test]
fn closer_points_give_smaller_error_at_fixed_budget() {
    // tol = 1 accepts after p_min JVPs on every call past the first.
    let steps = [0.3, 0.1, 0.03, 0.01];
    let results: Vec<_> = steps.iter().map(|&s| track(s, 1.0)).collect();
    for w in results.windows(2) {
        assert!(w[1].1 < w[0].1, "{results:?}");
    }
}

#[test]
fn shifting_keeps_instances_aligned_with_time() {
    let task = chain_task();
    let f = task.counted();
    let controls = common::random_controls(&task, 1, 0.5);
    let traj = rollout(&f, &task.initial_state, &controls, task.dt).unwrap();
    let mut backend = DerivativeBackend::wasp(
        WaspSettings::new(0.25, 0.5, 0.25, 0.5),
        task.state_dim,
        task.control_dim,
        task.horizon,
    )
    .unwrap();
    backend.model_derivatives(&f, &traj).unwrap();
    backend.shift_horizon();

    let mut shifted = controls[1..].to_vec();
    shifted.push(controls[task.horizon - 1].clone());
    let next = rollout(&f, &traj.states[1], &shifted, task.dt).unwrap();
    let md = backend.model_derivatives(&f, &next).unwrap();
    let p_min_x = WaspConfig::new(task.state_dim, 0.25, 0.5).unwrap().p_min;
    // Every instance except the reset last one sees the point it saw before.
    assert!(
        md.jvps_x[..task.horizon - 1].iter().all(|&p| p == p_min_x),
        "{:?}",
        md.jvps_x
    );
    assert_eq!(md.jvps_x[task.horizon - 1], task.state_dim);
}
