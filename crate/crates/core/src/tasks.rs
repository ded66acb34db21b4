//! Analytic toy tasks with closed-form Jacobians.
//!
//! Every model integrates with explicit Euler at `dt = 0.01` and plans over
//! `T = 50` steps by default.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mpc::{Cost, CountedDynamics, Dynamics, LinearDynamics, QuadraticCost};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_HORIZON: usize = 50;

/// A named dynamics/cost pair with an initial state.
#[derive(Clone)]
pub struct TaskSpec {
    pub name: String,
    pub state_dim: usize,
    pub control_dim: usize,
    pub dt: f64,
    pub horizon: usize,
    pub dynamics: Arc<dyn Dynamics>,
    pub cost: Arc<dyn Cost>,
    pub initial_state: DVector<f64>,
    /// Control used to fill the first warm start (hover thrust, zero otherwise).
    pub nominal_control: DVector<f64>,
    /// Average executed stage cost below which an episode counts as solved.
    pub success_threshold: f64,
    /// Non-smooth stress variants are excluded from gated checks.
    pub stress: bool,
}

impl std::fmt::Debug for TaskSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TaskSpec")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("control_dim", &self.control_dim)
            .field("dt", &self.dt)
            .field("horizon", &self.horizon)
            .field("stress", &self.stress)
            .finish()
    }
}

impl TaskSpec {
    pub fn counted(&self) -> CountedDynamics {
        CountedDynamics::new(self.dynamics.clone())
    }

    pub fn analytic_jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        self.dynamics.jacobians(x, u)
    }

    /// Tasks large enough for derivative cost to matter (`d_x + d_u ≥ 10`).
    pub fn is_benchmark(&self) -> bool {
        self.state_dim + self.control_dim >= 10
    }

    /// `horizon` copies of the nominal control.
    pub fn initial_warm_start(&self) -> Vec<DVector<f64>> {
        vec![self.nominal_control.clone(); self.horizon]
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    /// Adds Gaussian noise of scale `sigma` to the initial state.
    pub fn perturbed_initial_state(&self, seed: u64, sigma: f64) -> DVector<f64> {
        if sigma == 0.0 {
            return self.initial_state.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.initial_state.map(|v| {
            v + sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        })
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `x' = (I + dt·M) x + dt·N u` with seeded Gaussian `M`, `N` and a quadratic
/// regulator cost.
pub fn lq_task(state_dim: usize, control_dim: usize, seed: u64) -> Result<TaskSpec> {
    lq_task_with_dt(state_dim, control_dim, seed, DEFAULT_DT)
}

fn lq_task_with_dt(state_dim: usize, control_dim: usize, seed: u64, dt: f64) -> Result<TaskSpec> {
    if state_dim == 0 || control_dim == 0 {
        return Err(Error::InvalidDimension(
            "LQ plant needs d_x, d_u >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = gaussian_matrix(state_dim, state_dim, &mut rng);
    let n = gaussian_matrix(state_dim, control_dim, &mut rng) * 5.0;
    let a = DMatrix::identity(state_dim, state_dim) + m * dt;
    let b = n * dt;
    let cost = QuadraticCost::new(
        DMatrix::identity(state_dim, state_dim),
        DMatrix::identity(control_dim, control_dim) * 0.1,
        DMatrix::identity(state_dim, state_dim) * 10.0,
        DVector::zeros(state_dim),
        DVector::zeros(control_dim),
    );
    Ok(TaskSpec {
        name: "lq".into(),
        state_dim,
        control_dim,
        dt,
        horizon: DEFAULT_HORIZON,
        dynamics: Arc::new(LinearDynamics { a, b }),
        cost: Arc::new(cost),
        initial_state: DVector::from_element(state_dim, 1.0),
        nominal_control: DVector::zeros(control_dim),
        success_threshold: 1.0,
        stress: false,
    })
}

/// Torque-driven pendulum, `θ̈ = (g/l)·sin θ + u/(m l²) − c·ω`.
///
/// With this sign convention `θ = 0` is the upright (unstable) equilibrium.
#[derive(Debug, Clone, Copy)]
pub struct Pendulum {
    pub g: f64,
    pub length: f64,
    pub mass: f64,
    pub damping: f64,
    pub dt: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            g: 9.81,
            length: 1.0,
            mass: 1.0,
            damping: 0.1,
            dt: DEFAULT_DT,
        }
    }
}

impl Pendulum {
    pub fn angular_acceleration(&self, theta: f64, omega: f64, u: f64) -> f64 {
        (self.g / self.length) * theta.sin() + u / (self.mass * self.length * self.length)
            - self.damping * omega
    }
}

impl Dynamics for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let acc = self.angular_acceleration(x[0], x[1], u[0]);
        DVector::from_vec(vec![x[0] + self.dt * x[1], x[1] + self.dt * acc])
    }

    fn jacobians(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let dt = self.dt;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0,
                dt,
                dt * (self.g / self.length) * x[0].cos(),
                1.0 - dt * self.damping,
            ],
        );
        let b = DMatrix::from_row_slice(2, 1, &[0.0, dt / (self.mass * self.length * self.length)]);
        Some((a, b))
    }
}

pub fn pendulum_task() -> TaskSpec {
    pendulum_task_with_dt(DEFAULT_DT)
}

fn pendulum_task_with_dt(dt: f64) -> TaskSpec {
    let model = Pendulum {
        dt,
        ..Pendulum::default()
    };
    TaskSpec {
        name: "pendulum".into(),
        state_dim: 2,
        control_dim: 1,
        dt: model.dt,
        horizon: DEFAULT_HORIZON,
        dynamics: Arc::new(model),
        cost: Arc::new(QuadraticCost::diagonal(
            &[10.0, 1.0],
            &[0.01],
            &[100.0, 10.0],
        )),
        initial_state: DVector::from_vec(vec![0.5, 0.0]),
        nominal_control: DVector::zeros(1),
        success_threshold: 0.5,
        stress: false,
    }
}

/// Cart-pole with the pole angle measured from the hanging position
/// (`θ = π` is upright). State `[p, θ, ṗ, θ̇]`, control is the cart force.
/// An optional one-sided spring wall at `p = wall_position` adds a kink.
#[derive(Debug, Clone, Copy)]
pub struct CartPole {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub length: f64,
    pub g: f64,
    pub dt: f64,
    pub wall: Option<(f64, f64)>,
}

impl Default for CartPole {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            length: 0.5,
            g: 9.81,
            dt: DEFAULT_DT,
            wall: None,
        }
    }
}

struct CartPoleTerms {
    acc: [f64; 2],
    d_theta: [f64; 2],
    d_omega: [f64; 2],
    d_force: [f64; 2],
}

impl CartPole {
    fn wall_force(&self, p: f64) -> (f64, f64) {
        match self.wall {
            Some((pos, k)) if p > pos => (-k * (p - pos), -k),
            _ => (0.0, 0.0),
        }
    }

    fn terms(&self, theta: f64, omega: f64, force: f64) -> CartPoleTerms {
        let (mc, mp, l, g) = (self.cart_mass, self.pole_mass, self.length, self.g);
        let (s, c) = theta.sin_cos();
        let den = mc + mp * s * s;
        let den_t = 2.0 * mp * s * c;

        let n1 = force + mp * s * (l * omega * omega + g * c);
        let n1_t = mp * (c * l * omega * omega + g * (c * c - s * s));
        let n1_w = 2.0 * mp * s * l * omega;

        let n2 = -force * c - mp * l * omega * omega * c * s - (mc + mp) * g * s;
        let n2_t = force * s - mp * l * omega * omega * (c * c - s * s) - (mc + mp) * g * c;
        let n2_w = -2.0 * mp * l * omega * c * s;

        CartPoleTerms {
            acc: [n1 / den, n2 / (l * den)],
            d_theta: [
                (n1_t * den - n1 * den_t) / (den * den),
                (n2_t * den - n2 * den_t) / (l * den * den),
            ],
            d_omega: [n1_w / den, n2_w / (l * den)],
            d_force: [1.0 / den, -c / (l * den)],
        }
    }
}

impl Dynamics for CartPole {
    fn state_dim(&self) -> usize {
        4
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (wall, _) = self.wall_force(x[0]);
        let t = self.terms(x[1], x[3], u[0] + wall);
        let dt = self.dt;
        DVector::from_vec(vec![
            x[0] + dt * x[2],
            x[1] + dt * x[3],
            x[2] + dt * t.acc[0],
            x[3] + dt * t.acc[1],
        ])
    }

    fn jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let (wall, wall_p) = self.wall_force(x[0]);
        let t = self.terms(x[1], x[3], u[0] + wall);
        let dt = self.dt;
        let mut a = DMatrix::identity(4, 4);
        a[(0, 2)] = dt;
        a[(1, 3)] = dt;
        for r in 0..2 {
            a[(2 + r, 0)] = dt * t.d_force[r] * wall_p;
            a[(2 + r, 1)] = dt * t.d_theta[r];
            a[(2 + r, 3)] += dt * t.d_omega[r];
        }
        let b = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, dt * t.d_force[0], dt * t.d_force[1]]);
        Some((a, b))
    }
}

fn cartpole_cost() -> QuadraticCost {
    QuadraticCost::diagonal(&[1.0, 10.0, 0.1, 0.1], &[0.01], &[10.0, 100.0, 1.0, 1.0])
        .with_goal(DVector::from_vec(vec![0.0, PI, 0.0, 0.0]))
}

pub fn cartpole_task() -> TaskSpec {
    cartpole_task_with_dt(DEFAULT_DT)
}

fn cartpole_task_with_dt(dt: f64) -> TaskSpec {
    let model = CartPole {
        dt,
        ..CartPole::default()
    };
    TaskSpec {
        name: "cartpole".into(),
        state_dim: 4,
        control_dim: 1,
        dt: model.dt,
        horizon: DEFAULT_HORIZON,
        dynamics: Arc::new(model),
        cost: Arc::new(cartpole_cost()),
        initial_state: DVector::zeros(4),
        nominal_control: DVector::zeros(1),
        success_threshold: 10.0,
        stress: false,
    }
}

/// Cart-pole with a stiff one-sided wall at `p = 0.5`.
pub fn cartpole_wall_task() -> TaskSpec {
    cartpole_wall_task_with_dt(DEFAULT_DT)
}

fn cartpole_wall_task_with_dt(dt: f64) -> TaskSpec {
    let model = CartPole {
        wall: Some((0.5, 200.0)),
        dt,
        ..CartPole::default()
    };
    TaskSpec {
        name: "cartpole-wall".into(),
        dynamics: Arc::new(model),
        stress: true,
        ..cartpole_task_with_dt(dt)
    }
}

/// Planar quadrotor. State `[p_x, p_y, φ, v_x, v_y, φ̇]`, controls are the
/// two rotor thrusts.
#[derive(Debug, Clone, Copy)]
pub struct PlanarQuadrotor {
    pub mass: f64,
    pub inertia: f64,
    pub arm: f64,
    pub g: f64,
    pub dt: f64,
}

impl Default for PlanarQuadrotor {
    fn default() -> Self {
        Self {
            mass: 1.0,
            inertia: 0.02,
            arm: 0.2,
            g: 9.81,
            dt: DEFAULT_DT,
        }
    }
}

impl PlanarQuadrotor {
    pub fn hover_thrust(&self) -> f64 {
        0.5 * self.mass * self.g
    }
}

impl Dynamics for PlanarQuadrotor {
    fn state_dim(&self) -> usize {
        6
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (s, c) = x[2].sin_cos();
        let thrust = u[0] + u[1];
        let dt = self.dt;
        DVector::from_vec(vec![
            x[0] + dt * x[3],
            x[1] + dt * x[4],
            x[2] + dt * x[5],
            x[3] + dt * (-thrust * s / self.mass),
            x[4] + dt * (thrust * c / self.mass - self.g),
            x[5] + dt * (self.arm * (u[0] - u[1]) / self.inertia),
        ])
    }

    fn jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let (s, c) = x[2].sin_cos();
        let thrust = u[0] + u[1];
        let dt = self.dt;
        let mut a = DMatrix::identity(6, 6);
        a[(0, 3)] = dt;
        a[(1, 4)] = dt;
        a[(2, 5)] = dt;
        a[(3, 2)] = -dt * thrust * c / self.mass;
        a[(4, 2)] = -dt * thrust * s / self.mass;
        let mut b = DMatrix::zeros(6, 2);
        let torque = dt * self.arm / self.inertia;
        for k in 0..2 {
            b[(3, k)] = -dt * s / self.mass;
            b[(4, k)] = dt * c / self.mass;
        }
        b[(5, 0)] = torque;
        b[(5, 1)] = -torque;
        Some((a, b))
    }
}

pub fn quadrotor_task() -> TaskSpec {
    quadrotor_task_with_dt(DEFAULT_DT)
}

fn quadrotor_task_with_dt(dt: f64) -> TaskSpec {
    let model = PlanarQuadrotor {
        dt,
        ..PlanarQuadrotor::default()
    };
    let hover = model.hover_thrust();
    let mut cost = QuadraticCost::diagonal(
        &[10.0, 10.0, 1.0, 0.1, 0.1, 0.1],
        &[0.01, 0.01],
        &[100.0, 100.0, 10.0, 1.0, 1.0, 1.0],
    )
    .with_goal(DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]));
    cost.u_goal = DVector::from_element(2, hover);
    TaskSpec {
        name: "quadrotor".into(),
        state_dim: 6,
        control_dim: 2,
        dt: model.dt,
        horizon: DEFAULT_HORIZON,
        dynamics: Arc::new(model),
        cost: Arc::new(cost),
        initial_state: DVector::zeros(6),
        nominal_control: DVector::from_element(2, hover),
        success_threshold: 2.0,
        stress: false,
    }
}

/// Chain of `n` torque-driven pendulum-like joints with nearest-neighbour
/// sinusoidal coupling (a swimmer surrogate). State `[q_0..q_n, v_0..v_n]`:
///
/// `v̇_j = −k·sin q_j − c·v_j + κ·Σ_{nb} sin(q_nb − q_j) + τ_j`
#[derive(Debug, Clone, Copy)]
pub struct Chain {
    pub links: usize,
    pub stiffness: f64,
    pub damping: f64,
    pub coupling: f64,
    pub dt: f64,
}

impl Default for Chain {
    fn default() -> Self {
        Self {
            links: 8,
            stiffness: 10.0,
            damping: 0.5,
            coupling: 2.0,
            dt: DEFAULT_DT,
        }
    }
}

impl Chain {
    fn neighbours(&self, j: usize) -> impl Iterator<Item = usize> {
        let n = self.links;
        [j.checked_sub(1), (j + 1 < n).then_some(j + 1)]
            .into_iter()
            .flatten()
    }
}

impl Dynamics for Chain {
    fn state_dim(&self) -> usize {
        2 * self.links
    }

    fn control_dim(&self) -> usize {
        self.links
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let n = self.links;
        let mut next = x.clone();
        for j in 0..n {
            let q = x[j];
            let v = x[n + j];
            let coupling: f64 = self.neighbours(j).map(|k| (x[k] - q).sin()).sum();
            let acc =
                -self.stiffness * q.sin() - self.damping * v + self.coupling * coupling + u[j];
            next[j] = q + self.dt * v;
            next[n + j] = v + self.dt * acc;
        }
        next
    }

    fn jacobians(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.links;
        let dt = self.dt;
        let mut a = DMatrix::identity(2 * n, 2 * n);
        let mut b = DMatrix::zeros(2 * n, n);
        for j in 0..n {
            let q = x[j];
            a[(j, n + j)] = dt;
            let mut diag = -self.stiffness * q.cos();
            for k in self.neighbours(j) {
                let c = self.coupling * (x[k] - q).cos();
                a[(n + j, k)] = dt * c;
                diag -= c;
            }
            a[(n + j, j)] = dt * diag;
            a[(n + j, n + j)] = 1.0 - dt * self.damping;
            b[(n + j, j)] = dt;
        }
        Some((a, b))
    }
}

/// Chain task: hold a fixed phase lag between neighbouring joints while
/// every joint spins at a target rate, which keeps the linearization moving.
pub fn chain_task() -> TaskSpec {
    chain_task_with_dt(DEFAULT_DT)
}

fn chain_task_with_dt(dt: f64) -> TaskSpec {
    let model = Chain {
        dt,
        ..Chain::default()
    };
    let n = model.links;
    let (phase_lag, spin_rate) = (0.5, 2.0);
    let (w_phase, w_spin) = (5.0, 1.0);
    let mut q = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n - 1 {
        q[(j, j)] += w_phase;
        q[(j + 1, j + 1)] += w_phase;
        q[(j, j + 1)] -= w_phase;
        q[(j + 1, j)] -= w_phase;
    }
    for j in 0..n {
        q[(n + j, n + j)] = w_spin;
    }
    let goal = DVector::from_fn(2 * n, |i, _| {
        if i < n {
            -(i as f64) * phase_lag
        } else {
            spin_rate
        }
    });
    let cost = QuadraticCost::new(
        q.clone(),
        DMatrix::identity(n, n) * 0.01,
        q * 10.0,
        goal,
        DVector::zeros(n),
    );
    TaskSpec {
        name: "chain".into(),
        state_dim: 2 * n,
        control_dim: n,
        dt: model.dt,
        horizon: DEFAULT_HORIZON,
        dynamics: Arc::new(model),
        cost: Arc::new(cost),
        initial_state: DVector::zeros(2 * n),
        nominal_control: DVector::zeros(n),
        success_threshold: 5.0,
        stress: false,
    }
}

pub const TASK_NAMES: [&str; 6] = [
    "lq",
    "pendulum",
    "cartpole",
    "quadrotor",
    "chain",
    "cartpole-wall",
];

/// Default LQ plant dimensions.
pub const LQ_STATE_DIM: usize = 8;
pub const LQ_CONTROL_DIM: usize = 4;
pub const LQ_SEED: u64 = 2024;

pub fn builtin_tasks() -> Vec<TaskSpec> {
    TASK_NAMES
        .iter()
        .map(|name| task_by_name(name).expect("registered task"))
        .collect()
}

pub fn task_by_name(name: &str) -> Result<TaskSpec> {
    task_by_name_with_dt(name, DEFAULT_DT)
}

/// Registry lookup with the integration step rebuilt into the model.
pub fn task_by_name_with_dt(name: &str, dt: f64) -> Result<TaskSpec> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    match name {
        "lq" => lq_task_with_dt(LQ_STATE_DIM, LQ_CONTROL_DIM, LQ_SEED, dt),
        "pendulum" => Ok(pendulum_task_with_dt(dt)),
        "cartpole" => Ok(cartpole_task_with_dt(dt)),
        "quadrotor" => Ok(quadrotor_task_with_dt(dt)),
        "chain" => Ok(chain_task_with_dt(dt)),
        "cartpole-wall" => Ok(cartpole_wall_task_with_dt(dt)),
        other => Err(Error::Unknown {
            kind: "task",
            name: other.to_string(),
            valid: TASK_NAMES.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivative::fd_jacobian;
    use rand::Rng;

    fn fd_pair(
        task: &TaskSpec,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let dynamics = &task.dynamics;
        let a = fd_jacobian(&|xx: &DVector<f64>| dynamics.step(xx, u), x, 1e-7).unwrap();
        let b = fd_jacobian(&|uu: &DVector<f64>| dynamics.step(x, uu), u, 1e-7).unwrap();
        (a, b)
    }

    #[test]
    fn pendulum_rest_is_fixed_point() {
        let p = Pendulum::default();
        let next = p.step(&DVector::zeros(2), &DVector::zeros(1));
        assert_eq!(next, DVector::zeros(2));
    }

    #[test]
    fn lq_analytic_is_fd() {
        let task = lq_task(8, 4, 1).unwrap();
        let x = DVector::from_element(8, 0.3);
        let u = DVector::from_element(4, -0.2);
        let (a, b) = task.analytic_jacobians(&x, &u).unwrap();
        let (fa, fb) = fd_pair(&task, &x, &u);
        assert!((a - fa).amax() < 1e-8);
        assert!((b - fb).amax() < 1e-8);
    }

    #[test]
    fn chain_dims() {
        let task = chain_task();
        assert_eq!(task.state_dim + task.control_dim, 24);
        assert!(task.is_benchmark());
        assert!(!pendulum_task().is_benchmark());
    }

    #[test]
    fn analytic_matches_fd_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for task in builtin_tasks() {
            for _ in 0..20 {
                let x = DVector::from_fn(task.state_dim, |_, _| rng.random_range(-2.0..2.0));
                let u = DVector::from_fn(task.control_dim, |_, _| rng.random_range(-2.0..2.0));
                let (a, b) = task.analytic_jacobians(&x, &u).unwrap();
                let (fa, fb) = fd_pair(&task, &x, &u);
                assert!((a - fa).amax() < 1e-5, "{}", task.name);
                assert!((b - fb).amax() < 1e-5, "{}", task.name);
            }
        }
    }

    #[test]
    fn unknown_task_rejected() {
        assert!(matches!(
            task_by_name("humanoid"),
            Err(Error::Unknown { .. })
        ));
    }

    #[test]
    fn dynamics_are_pure() {
        for task in builtin_tasks() {
            let x = DVector::from_element(task.state_dim, 0.1);
            let u = DVector::from_element(task.control_dim, 0.2);
            assert_eq!(task.dynamics.step(&x, &u), task.dynamics.step(&x, &u));
        }
    }
}
