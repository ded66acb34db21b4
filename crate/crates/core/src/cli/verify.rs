//! Self-checks behind `wasp-mpc verify`. Each check compares library output
//! against an independent brute-force computation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::derivative::{kkt_solve, make_orthonormal_tangents};
use crate::error::Result;
use crate::mpc::{cost_derivatives, rollout, total_cost, DerivativeBackend, WaspSettings};
use crate::planners::adjoint_gradient;
use crate::tasks::{builtin_tasks, TaskSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: impl Into<String>, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn gaussian_vec(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// `|a − b| / max(|a|, |b|, 1)`
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Row-by-row dense solve of the equality-constrained least-squares problem
/// through its `(n+1)×(n+1)` KKT matrix.
fn dense_constrained_ls(
    fhat: &DMatrix<f64>,
    dx: &DMatrix<f64>,
    i: usize,
    df: &DVector<f64>,
) -> Option<DMatrix<f64>> {
    let (m, n) = fhat.shape();
    let mut kkt = DMatrix::zeros(n + 1, n + 1);
    kkt.view_mut((0, 0), (n, n))
        .copy_from(&(dx * dx.transpose() * 2.0));
    for a in 0..n {
        kkt[(a, n)] = dx[(a, i)];
        kkt[(n, a)] = dx[(a, i)];
    }
    let lu = kkt.lu();
    let mut d = DMatrix::zeros(m, n);
    for r in 0..m {
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n)
            .copy_from(&(dx * fhat.row(r).transpose() * 2.0));
        rhs[n] = df[r];
        let sol = lu.solve(&rhs)?;
        d.row_mut(r).copy_from(&sol.rows(0, n).transpose());
    }
    Some(d)
}

pub fn check_kkt(instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for k in 0..instances {
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=8);
        let tangents = make_orthonormal_tangents(n, k as u64)?;
        let fhat = DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
        let df = gaussian_vec(m, 1.0, &mut rng);
        let i = rng.random_range(0..n);
        let d = kkt_solve(&fhat, &tangents, i, &df)?;
        let Some(oracle) = dense_constrained_ls(&fhat, tangents.matrix(), i, &df) else {
            worst = f64::INFINITY;
            continue;
        };
        worst = worst.max((&d - oracle).norm());
        let residual = (&d * tangents.column(i) - &df).amax() / (1.0 + df.amax());
        worst_residual = worst_residual.max(residual);
    }
    let mut out = outcome(
        format!("kkt vs dense solve ({instances} instances)"),
        worst,
        1e-8,
    );
    out.passed &= worst_residual <= 1e-10;
    out.detail += &format!(", constraint residual {worst_residual:.3e}");
    Ok(out)
}

fn random_trajectory_controls(task: &TaskSpec, horizon: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon)
        .map(|_| &task.nominal_control + gaussian_vec(task.control_dim, 0.3, &mut rng))
        .collect()
}

pub fn check_fd_reduction(task: &TaskSpec, horizon: usize) -> Result<CheckOutcome> {
    let f = task.counted();
    let controls = random_trajectory_controls(task, horizon, 5);
    let traj = rollout(&f, &task.initial_state, &controls, task.dt)?;
    let fd = DerivativeBackend::fd().model_derivatives(&f, &traj)?;
    let mut wasp = DerivativeBackend::wasp(
        WaspSettings::fd_equivalent(),
        task.state_dim,
        task.control_dim,
        horizon,
    )?;
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let w = wasp.model_derivatives(&f, &traj)?;
        for (a, b) in fd.a.iter().zip(&w.a).chain(fd.b.iter().zip(&w.b)) {
            worst = worst.max((a - b).amax());
        }
        if w.dynamics_calls != fd.dynamics_calls {
            worst = f64::INFINITY;
        }
    }
    Ok(outcome(
        format!("fd reduction: {}", task.name),
        worst,
        1e-12,
    ))
}

pub fn check_adjoint(task: &TaskSpec, horizon: usize, seed: u64) -> Result<CheckOutcome> {
    let f = task.counted();
    let cost = task.cost.as_ref();
    let controls = random_trajectory_controls(task, horizon, seed);
    let traj = rollout(&f, &task.initial_state, &controls, task.dt)?;
    let md = DerivativeBackend::fd().model_derivatives(&f, &traj)?;
    let grad = adjoint_gradient(&md, &cost_derivatives(&traj, cost));
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..horizon {
        for k in 0..task.control_dim {
            let mut up = controls.clone();
            up[i][k] += h;
            let mut dn = controls.clone();
            dn[i][k] -= h;
            let jp = total_cost(&rollout(&f, &task.initial_state, &up, task.dt)?, cost);
            let jm = total_cost(&rollout(&f, &task.initial_state, &dn, task.dt)?, cost);
            worst = worst.max(rel_err((jp - jm) / (2.0 * h), grad[i][k]));
        }
    }
    Ok(outcome(
        format!("adjoint vs central FD: {}", task.name),
        worst,
        1e-5,
    ))
}

fn central_jacobian(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let base = f(x);
    let mut jac = DMatrix::zeros(base.len(), x.len());
    for j in 0..x.len() {
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        jac.set_column(j, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    jac
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| rel_err(p, q))
        .fold(0.0, f64::max)
}

pub fn check_analytic_jacobians(task: &TaskSpec, points: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..points {
        let x = &task.initial_state + gaussian_vec(task.state_dim, 0.5, &mut rng);
        let u = &task.nominal_control + gaussian_vec(task.control_dim, 0.5, &mut rng);
        let Some((a, b)) = task.analytic_jacobians(&x, &u) else {
            continue;
        };
        checked += 1;
        let fa = central_jacobian(|x| task.dynamics.step(x, &u), &x, 1e-6);
        let fb = central_jacobian(|u| task.dynamics.step(&x, u), &u, 1e-6);
        worst = worst
            .max(max_rel(a.as_slice(), fa.as_slice()))
            .max(max_rel(b.as_slice(), fb.as_slice()));
    }
    let mut out = outcome(format!("analytic jacobians: {}", task.name), worst, 1e-5);
    out.passed &= checked == points;
    Ok(out)
}

pub fn check_cost_derivatives(task: &TaskSpec, points: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cost = task.cost.as_ref();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = &task.initial_state + gaussian_vec(task.state_dim, 0.5, &mut rng);
        let u = &task.nominal_control + gaussian_vec(task.control_dim, 0.5, &mut rng);
        let d = cost.stage_derivatives(&x, &u);
        let gx = central_jacobian(|x| DVector::from_element(1, cost.stage(x, &u)), &x, h);
        let gu = central_jacobian(|u| DVector::from_element(1, cost.stage(&x, u)), &u, h);
        let hxx = central_jacobian(|x| cost.stage_derivatives(x, &u).lx, &x, h);
        let huu = central_jacobian(|u| cost.stage_derivatives(&x, u).lu, &u, h);
        let hux = central_jacobian(|x| cost.stage_derivatives(x, &u).lu, &x, h);
        worst = worst
            .max(max_rel(d.lx.as_slice(), gx.as_slice()))
            .max(max_rel(d.lu.as_slice(), gu.as_slice()))
            .max(max_rel(d.lxx.as_slice(), hxx.as_slice()))
            .max(max_rel(d.luu.as_slice(), huu.as_slice()))
            .max(max_rel(d.lux.as_slice(), hux.as_slice()));
        let t = cost.terminal_derivatives(&x);
        let tx = central_jacobian(|x| DVector::from_element(1, cost.terminal(x)), &x, h);
        let txx = central_jacobian(|x| cost.terminal_derivatives(x).lx, &x, h);
        worst = worst
            .max(max_rel(t.lx.as_slice(), tx.as_slice()))
            .max(max_rel(t.lxx.as_slice(), txx.as_slice()));
    }
    Ok(outcome(
        format!("cost derivatives: {}", task.name),
        worst,
        1e-5,
    ))
}

/// Runs every check on every builtin task.
pub fn run_all() -> Result<Vec<CheckOutcome>> {
    let mut out = vec![check_kkt(1000)?];
    for task in builtin_tasks() {
        out.push(check_fd_reduction(&task, 50)?);
        out.push(check_adjoint(&task, 20, 3)?);
        out.push(check_analytic_jacobians(&task, 100)?);
        out.push(check_cost_derivatives(&task, 10)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{chain_task, lq_task};

    #[test]
    fn dense_solver_satisfies_constraint() {
        let t = make_orthonormal_tangents(4, 1).unwrap();
        let fhat = DMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64);
        let df = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let d = dense_constrained_ls(&fhat, t.matrix(), 2, &df).unwrap();
        assert!((d * t.column(2) - df).amax() < 1e-12);
    }

    #[test]
    fn checks_pass_on_small_inputs() {
        assert!(check_kkt(50).unwrap().passed);
        let lq = lq_task(3, 2, 1).unwrap();
        for c in [
            check_fd_reduction(&lq, 10).unwrap(),
            check_adjoint(&lq, 10, 1).unwrap(),
            check_analytic_jacobians(&chain_task(), 10).unwrap(),
            check_cost_derivatives(&chain_task(), 3).unwrap(),
        ] {
            assert!(c.passed, "{c:?}");
        }
    }
}
