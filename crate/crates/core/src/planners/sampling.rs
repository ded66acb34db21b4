use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::gradient::{descend, max_norm};
use super::{PlanResult, PlannerConfig, Problem};
use crate::error::{Error, Result};
use crate::mpc::{rollout, total_cost, Trajectory};

fn flatten(controls: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        controls.iter().map(|u| u.len()).sum(),
        controls.iter().flat_map(|u| u.iter().copied()),
    )
}

fn unflatten(flat: &DVector<f64>, horizon: usize, control_dim: usize) -> Vec<DVector<f64>> {
    (0..horizon)
        .map(|i| flat.rows(i * control_dim, control_dim).into_owned())
        .collect()
}

fn gaussian(len: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Rollout cost of a flattened control sequence; diverged rollouts cost `+∞`.
struct Evaluator<'a, 'p> {
    problem: &'a Problem<'p>,
    horizon: usize,
    control_dim: usize,
    parallel: bool,
}

impl Evaluator<'_, '_> {
    fn trajectory(&self, flat: &DVector<f64>) -> Result<Trajectory> {
        rollout(
            self.problem.dynamics,
            self.problem.x0,
            &unflatten(flat, self.horizon, self.control_dim),
            self.problem.dt,
        )
    }

    fn cost(&self, flat: &DVector<f64>) -> f64 {
        match self.trajectory(flat) {
            Ok(traj) => {
                let c = total_cost(&traj, self.problem.cost);
                if c.is_finite() {
                    c
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    }

    fn costs(&self, samples: &[DVector<f64>]) -> Vec<f64> {
        if self.parallel {
            samples.par_iter().map(|s| self.cost(s)).collect()
        } else {
            samples.iter().map(|s| self.cost(s)).collect()
        }
    }
}

fn argmin(costs: &[f64]) -> usize {
    costs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c < costs[best] { i } else { best })
}

struct Outcome {
    flat: DVector<f64>,
    history: Vec<f64>,
    step_norm: f64,
    degraded: bool,
}

fn finish(
    problem: &Problem<'_>,
    eval: &Evaluator<'_, '_>,
    outcome: Outcome,
    start: Instant,
    calls_before: u64,
) -> Result<PlanResult> {
    let trajectory = eval.trajectory(&outcome.flat)?;
    let cost = total_cost(&trajectory, problem.cost);
    Ok(PlanResult {
        controls: trajectory.controls.clone(),
        trajectory,
        cost,
        planning_time: start.elapsed().as_secs_f64(),
        derivative_time: 0.0,
        dynamics_calls: problem.dynamics.calls() - calls_before,
        derivative_calls: 0,
        derivative_passes: 0,
        jvps_x: Vec::new(),
        jvps_u: Vec::new(),
        cost_history: outcome.history,
        step_norm: outcome.step_norm,
        degraded: outcome.degraded,
    })
}

fn setup<'a, 'p>(
    problem: &'a Problem<'p>,
    warm: &[DVector<f64>],
    config: &PlannerConfig,
) -> Result<Evaluator<'a, 'p>> {
    config.validate()?;
    let control_dim = problem.dynamics.control_dim();
    if warm.is_empty() || warm.iter().any(|u| u.len() != control_dim) {
        return Err(Error::InvalidDimension(format!(
            "warm start must be a non-empty sequence of {control_dim}-vectors"
        )));
    }
    Ok(Evaluator {
        problem,
        horizon: warm.len(),
        control_dim,
        parallel: config.threads > 0,
    })
}

/// Gaussian perturbations of the nominal; the nominal itself is sample 0, so
/// the returned cost never exceeds the warm start's.
pub fn predictive_sampling_plan(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    config: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<PlanResult> {
    let start = Instant::now();
    let calls_before = problem.dynamics.calls();
    let eval = setup(problem, warm, config)?;
    let params = config.sampling;
    let mut nominal = flatten(warm);
    let mut nominal_cost = eval.cost(&nominal);
    if !nominal_cost.is_finite() {
        return Err(Error::RolloutDiverged { index: 0 });
    }
    let mut history = vec![nominal_cost];
    for _ in 0..config.iterations.max(1) {
        let mut samples = vec![nominal.clone()];
        for _ in 1..params.samples {
            samples.push(&nominal + gaussian(nominal.len(), rng) * params.noise);
        }
        let costs = eval.costs(&samples);
        let best = argmin(&costs);
        if best != 0 {
            nominal = samples.swap_remove(best);
            nominal_cost = costs[best];
            history.push(nominal_cost);
        }
    }
    let outcome = Outcome {
        flat: nominal,
        history,
        step_norm: 0.0,
        degraded: false,
    };
    finish(problem, &eval, outcome, start, calls_before)
}

/// Normalized weights `∝ exp(−(J_k − J_min)/λ)`. Infinite costs get weight 0.
pub fn softmin_weights(costs: &[f64], temperature: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if !c.is_finite() {
                0.0
            } else if temperature > 0.0 {
                (-(c - min) / temperature).exp()
            } else if c == min {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub fn weighted_average(samples: &[DVector<f64>], weights: &[f64]) -> DVector<f64> {
    samples
        .iter()
        .zip(weights)
        .fold(DVector::zeros(samples[0].len()), |acc, (s, &w)| acc + s * w)
}

/// Exponentially weighted average of Gaussian samples around the nominal.
/// Falls back to the best sample when the average rolls out worse than it.
pub fn robust_sampling_plan(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    config: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<PlanResult> {
    let start = Instant::now();
    let calls_before = problem.dynamics.calls();
    let eval = setup(problem, warm, config)?;
    let params = config.sampling;
    let mut nominal = flatten(warm);
    let mut nominal_cost = eval.cost(&nominal);
    if !nominal_cost.is_finite() {
        return Err(Error::RolloutDiverged { index: 0 });
    }
    let mut history = vec![nominal_cost];
    for _ in 0..config.iterations.max(1) {
        let mut samples = vec![nominal.clone()];
        for _ in 1..params.samples {
            samples.push(&nominal + gaussian(nominal.len(), rng) * params.noise);
        }
        let costs = eval.costs(&samples);
        let finite = costs.iter().copied().filter(|c| c.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c), hi.max(c))
        });
        let temperature = params.temperature.unwrap_or(0.1 * (hi - lo + 1e-12));
        let averaged = weighted_average(&samples, &softmin_weights(&costs, temperature));
        let averaged_cost = eval.cost(&averaged);
        let best = argmin(&costs);
        let (cand, cand_cost) = if averaged_cost <= costs[best] {
            (averaged, averaged_cost)
        } else {
            (samples.swap_remove(best), costs[best])
        };
        if cand_cost <= nominal_cost {
            nominal = cand;
            nominal_cost = cand_cost;
            history.push(nominal_cost);
        }
    }
    let outcome = Outcome {
        flat: nominal,
        history,
        step_norm: 0.0,
        degraded: false,
    };
    finish(problem, &eval, outcome, start, calls_before)
}

/// Indices of the `elites` lowest costs, ties broken by index.
fn elite_indices(costs: &[f64], elites: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order.truncate(elites);
    order
}

/// Mean and per-coordinate variance of the `elites` lowest-cost samples.
pub fn elite_statistics(
    samples: &[DVector<f64>],
    costs: &[f64],
    elites: usize,
) -> (DVector<f64>, DVector<f64>) {
    let chosen = elite_indices(costs, elites);
    let n = chosen.len() as f64;
    let dim = samples[0].len();
    let mean = chosen
        .iter()
        .fold(DVector::zeros(dim), |acc, &i| acc + &samples[i])
        / n;
    let var = chosen.iter().fold(DVector::zeros(dim), |acc, &i| {
        acc + (&samples[i] - &mean).map(|d| d * d)
    }) / n;
    (mean, var)
}

/// Cross-entropy method with a diagonal Gaussian, smoothed refits and
/// best-ever retention. The final mean is also evaluated.
pub fn cem_plan(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    config: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<PlanResult> {
    let start = Instant::now();
    let calls_before = problem.dynamics.calls();
    let eval = setup(problem, warm, config)?;
    let params = config.sampling;
    let mut mean = flatten(warm);
    let mut std = DVector::from_element(mean.len(), params.noise);
    let mut best = mean.clone();
    let mut best_cost = eval.cost(&best);
    if !best_cost.is_finite() {
        return Err(Error::RolloutDiverged { index: 0 });
    }
    let mut history = vec![best_cost];
    let s = params.smoothing;
    for _ in 0..config.iterations.max(1) {
        let mut samples = vec![mean.clone()];
        while samples.len() < params.samples {
            samples.push(&mean + gaussian(mean.len(), rng).component_mul(&std));
        }
        let costs = eval.costs(&samples);
        let (elite_mean, elite_var) = elite_statistics(&samples, &costs, params.elites);
        mean = &mean * (1.0 - s) + elite_mean * s;
        std = (std.map(|v| v * v) * (1.0 - s) + elite_var * s).map(f64::sqrt);
        let i = argmin(&costs);
        if costs[i] < best_cost {
            best = samples.swap_remove(i);
            best_cost = costs[i];
        }
        history.push(best_cost);
    }
    let mean_cost = eval.cost(&mean);
    if mean_cost < best_cost {
        best = mean;
        *history.last_mut().expect("non-empty") = mean_cost;
    }
    let outcome = Outcome {
        flat: best,
        history,
        step_norm: 0.0,
        degraded: false,
    };
    finish(problem, &eval, outcome, start, calls_before)
}

/// Antithetic Gaussian-smoothing gradient estimate
/// `ĝ = (1/K) Σ_k (J(U + σξ_k) − J(U − σξ_k)) / (2σ) · ξ_k`.
pub fn sample_gradient_estimate<F>(
    objective: F,
    at: &DVector<f64>,
    sigma: f64,
    directions: &[DVector<f64>],
) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let k = directions.len() as f64;
    directions.iter().fold(DVector::zeros(at.len()), |acc, xi| {
        let plus = objective(&(at + xi * sigma));
        let minus = objective(&(at - xi * sigma));
        acc + xi * ((plus - minus) / (2.0 * sigma * k))
    })
}

/// Descent along a sampled gradient estimate with the same line search as
/// gradient descent.
pub fn sample_gradient_plan(
    problem: &Problem<'_>,
    warm: &[DVector<f64>],
    config: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<PlanResult> {
    let start = Instant::now();
    let calls_before = problem.dynamics.calls();
    let eval = setup(problem, warm, config)?;
    let params = config.sampling;
    let mut current = flatten(warm);
    let mut current_cost = eval.cost(&current);
    if !current_cost.is_finite() {
        return Err(Error::RolloutDiverged { index: 0 });
    }
    let mut history = vec![current_cost];
    let mut step_norm = 0.0;
    for _ in 0..config.iterations.max(1) {
        if params.noise == 0.0 {
            break;
        }
        let directions: Vec<_> = (0..params.samples)
            .map(|_| gaussian(current.len(), rng))
            .collect();
        let pairs: Vec<DVector<f64>> = directions
            .iter()
            .flat_map(|xi| [&current + xi * params.noise, &current - xi * params.noise])
            .collect();
        let costs = eval.costs(&pairs);
        let grad = directions.iter().zip(costs.chunks(2)).fold(
            DVector::zeros(current.len()),
            |acc, (xi, c)| {
                let diff = c[0] - c[1];
                if diff.is_finite() {
                    acc + xi * (diff / (2.0 * params.noise * directions.len() as f64))
                } else {
                    acc
                }
            },
        );
        let direction = unflatten(&grad, eval.horizon, eval.control_dim);
        step_norm = max_norm(&direction);
        let controls = unflatten(&current, eval.horizon, eval.control_dim);
        match descend(
            problem,
            &controls,
            current_cost,
            &direction,
            &config.line_search,
        ) {
            Some((traj, cost, _)) => {
                current = flatten(&traj.controls);
                current_cost = cost;
                history.push(cost);
            }
            None => break,
        }
    }
    let outcome = Outcome {
        flat: current,
        history,
        step_norm,
        degraded: false,
    };
    finish(problem, &eval, outcome, start, calls_before)
}
