//! Tracks the Jacobian of a smooth map along a slowly moving input and
//! compares the approximation against plain finite differencing.

use std::sync::Arc;

use nalgebra::DVector;
use wasp_mpc::derivative::{
    fd_jacobian, make_orthonormal_tangents, WaspConfig, WaspInstance, DEFAULT_FD_EPSILON,
};

fn field(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(4, |i, _| {
        let a = x[i % x.len()];
        let b = x[(i + 1) % x.len()];
        a.sin() * b + 0.5 * (a * b).cos() + 0.1 * a * a
    })
}

pub fn run_example() -> wasp_mpc::Result<()> {
    let dim = 6;
    let tangents = Arc::new(make_orthonormal_tangents(dim, 1)?);
    let mut wasp = WaspInstance::new(4, tangents, WaspConfig::new(dim, 0.3, 0.2)?)?;
    let mut x = DVector::from_fn(dim, |i, _| 0.1 * i as f64);
    let (mut wasp_calls, mut fd_calls) = (0, 0);
    println!("step  jvps  rel_error");
    for step in 0..20 {
        let est = wasp.estimate(&field, &x)?;
        let truth = fd_jacobian(&field, &x, DEFAULT_FD_EPSILON)?;
        wasp_calls += est.dynamics_calls;
        fd_calls += dim + 1;
        let err = (&est.matrix - &truth).norm() / truth.norm();
        println!("{step:>4}  {:>4}  {err:.2e}", est.jvps_used);
        x.add_scalar_mut(0.01);
    }
    println!("function calls: approximation {wasp_calls}, finite differences {fd_calls}");
    Ok(())
}

fn main() -> wasp_mpc::Result<()> {
    run_example()
}
