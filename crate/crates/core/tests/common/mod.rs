#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wasp_mpc::tasks::TaskSpec;

pub fn gaussian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_controls(task: &TaskSpec, seed: u64, scale: f64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..task.horizon)
        .map(|_| &task.nominal_control + gaussian(task.control_dim, scale, &mut rng))
        .collect()
}

/// Finite-horizon discrete Riccati recursion for
/// `Σ ½(xᵀQx + uᵀRu) + ½x_TᵀQ_f x_T`. Returns the optimal cost from `x0`
/// and the optimal open-loop control sequence.
pub fn lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    qf: &DMatrix<f64>,
    horizon: usize,
    x0: &DVector<f64>,
) -> (f64, Vec<DVector<f64>>) {
    let mut p = qf.clone();
    let mut gains = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let s = r + b.transpose() * &p * b;
        let k = s
            .lu()
            .solve(&(b.transpose() * &p * a))
            .expect("R + BᵀPB is positive definite");
        let closed = a - b * &k;
        p = q + k.transpose() * r * &k + closed.transpose() * &p * &closed;
        gains.push(k);
    }
    gains.reverse();
    let cost = 0.5 * x0.dot(&(&p * x0));
    let mut x = x0.clone();
    let mut controls = Vec::with_capacity(horizon);
    for k in &gains {
        let u = -(k * &x);
        x = a * &x + b * &u;
        controls.push(u);
    }
    (cost, controls)
}

/// Solves `min ‖D·X − F‖²_F  s.t.  D·X[:, i] = g` through the full
/// vectorized KKT system in the `m·n` unknowns of `D`.
pub fn dense_constrained_ls(
    f: &DMatrix<f64>,
    x: &DMatrix<f64>,
    i: usize,
    g: &DVector<f64>,
) -> DMatrix<f64> {
    let (m, n) = f.shape();
    let unknowns = m * n;
    // vec(D·X) = (Xᵀ ⊗ I_m) vec(D), column-major.
    let mut design = DMatrix::zeros(m * n, unknowns);
    for c in 0..n {
        for k in 0..n {
            for r in 0..m {
                design[(c * m + r, k * m + r)] = x[(k, c)];
            }
        }
    }
    let mut constraint = DMatrix::zeros(m, unknowns);
    for k in 0..n {
        for r in 0..m {
            constraint[(r, k * m + r)] = x[(k, i)];
        }
    }
    let size = unknowns + m;
    let mut kkt = DMatrix::zeros(size, size);
    kkt.view_mut((0, 0), (unknowns, unknowns))
        .copy_from(&(design.transpose() * &design));
    kkt.view_mut((0, unknowns), (unknowns, m))
        .copy_from(&constraint.transpose());
    kkt.view_mut((unknowns, 0), (m, unknowns))
        .copy_from(&constraint);
    let mut rhs = DVector::zeros(size);
    let vec_f = DVector::from_column_slice(f.as_slice());
    rhs.rows_mut(0, unknowns)
        .copy_from(&(design.transpose() * vec_f));
    rhs.rows_mut(unknowns, m).copy_from(g);
    let sol = kkt.lu().solve(&rhs).expect("KKT system is nonsingular");
    DMatrix::from_column_slice(m, n, &sol.as_slice()[..unknowns])
}

/// Central-difference Jacobian of `f` at `x`.
pub fn central_jacobian(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    for j in 0..x.len() {
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        jac.set_column(j, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    jac
}

/// `‖a − b‖_F / ‖b‖_F`, or the absolute error when `b` vanishes.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}
