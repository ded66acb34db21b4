//! Derivative-based (gradient descent, iLQG) and sampling-based (predictive,
//! robust, cross-entropy, sample-gradient) planners over the MPC core.

mod episode;
mod gradient;
mod ilqg;
mod sampling;

use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpc::{Cost, CountedDynamics, DerivativeBackend, Trajectory};

pub use episode::{replan_loop, shift_warm_start, EpisodeOptions, EpisodeTrace, ReplanRecord};
pub use gradient::{adjoint_gradient, gd_plan};
pub use ilqg::{backward_pass, ilqg_plan, BackwardPass};
pub use sampling::{
    cem_plan, elite_statistics, predictive_sampling_plan, robust_sampling_plan,
    sample_gradient_estimate, sample_gradient_plan, softmin_weights, weighted_average,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Gd,
    Ilqg,
    Predictive,
    Robust,
    Cem,
    SampleGradient,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 6] = [
        PlannerKind::Gd,
        PlannerKind::Ilqg,
        PlannerKind::Predictive,
        PlannerKind::Robust,
        PlannerKind::Cem,
        PlannerKind::SampleGradient,
    ];

    pub const SAMPLING: [PlannerKind; 4] = [
        PlannerKind::Predictive,
        PlannerKind::Robust,
        PlannerKind::Cem,
        PlannerKind::SampleGradient,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::Gd => "gd",
            PlannerKind::Ilqg => "ilqg",
            PlannerKind::Predictive => "predictive",
            PlannerKind::Robust => "robust",
            PlannerKind::Cem => "cem",
            PlannerKind::SampleGradient => "sample-gradient",
        }
    }

    pub fn uses_derivatives(&self) -> bool {
        matches!(self, PlannerKind::Gd | PlannerKind::Ilqg)
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "planner",
                name: s.to_string(),
                valid: PlannerKind::ALL.map(|k| k.name()).join(", "),
            })
    }
}

/// Backtracking schedule `α_k = initial_step · shrink^k`, `k = 0..=max_backtracks`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub initial_step: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            max_backtracks: 10,
        }
    }
}

impl LineSearch {
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.max_backtracks).map(move |k| self.initial_step * self.shrink.powi(k as i32))
    }
}

/// Levenberg-style damping added to `Q_uu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub initial: f64,
    pub factor: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            initial: 0.0,
            factor: 2.0,
            min: 1e-6,
            max: 1e10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub samples: usize,
    pub noise: f64,
    pub elites: usize,
    pub smoothing: f64,
    /// Robust-sampling temperature; `None` picks `0.1·(J_max − J_min + 1e-12)`.
    pub temperature: Option<f64>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            samples: 32,
            noise: 0.5,
            elites: 8,
            smoothing: 0.5,
            temperature: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub iterations: usize,
    pub line_search: LineSearch,
    pub regularization: Regularization,
    pub sampling: SamplingParams,
    pub seed: u64,
    /// `0` evaluates sample rollouts sequentially.
    pub threads: usize,
}

impl PlannerConfig {
    pub fn new(kind: PlannerKind) -> Self {
        Self {
            kind,
            iterations: 1,
            line_search: LineSearch::default(),
            regularization: Regularization::default(),
            sampling: SamplingParams::default(),
            seed: 0,
            threads: 0,
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.sampling.samples = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ls = &self.line_search;
        if !(ls.initial_step > 0.0 && ls.initial_step <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "line-search step must lie in (0, 1], got {}",
                ls.initial_step
            )));
        }
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "shrink factor must lie in (0, 1), got {}",
                ls.shrink
            )));
        }
        if !self.kind.uses_derivatives() {
            let s = &self.sampling;
            if s.samples < 2 {
                return Err(Error::InvalidArgument(format!(
                    "need at least 2 samples, got {}",
                    s.samples
                )));
            }
            if s.elites == 0 || s.elites > s.samples {
                return Err(Error::InvalidArgument(format!(
                    "elite count must lie in 1..={}, got {}",
                    s.samples, s.elites
                )));
            }
            if s.noise.is_nan() || s.noise < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "noise scale must be >= 0, got {}",
                    s.noise
                )));
            }
        }
        Ok(())
    }
}

/// What a planner optimizes: dynamics, cost and the current state.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub dynamics: &'a CountedDynamics,
    pub cost: &'a dyn Cost,
    pub x0: &'a DVector<f64>,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub controls: Vec<DVector<f64>>,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub planning_time: f64,
    /// Time inside model-derivative batches; zero for sampling planners.
    pub derivative_time: f64,
    pub dynamics_calls: u64,
    pub derivative_calls: u64,
    pub derivative_passes: usize,
    /// JVP counts of every derivative pass, concatenated over passes.
    pub jvps_x: Vec<usize>,
    pub jvps_u: Vec<usize>,
    /// Cost after each accepted iteration, starting with the warm start.
    pub cost_history: Vec<f64>,
    /// Largest feedforward / step norm of the last iteration.
    pub step_norm: f64,
    /// Set when the planner hit divergence or a numerical failure and fell
    /// back to its best valid iterate.
    pub degraded: bool,
}

impl PlanResult {
    pub fn first_control(&self) -> &DVector<f64> {
        &self.controls[0]
    }
}

/// A planner together with the state it carries between replans (sampling
/// RNG, iLQG regularization).
#[derive(Debug, Clone)]
pub struct Planner {
    pub config: PlannerConfig,
    rng: ChaCha8Rng,
    mu: f64,
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            mu: config.regularization.initial,
            config,
        })
    }

    pub fn kind(&self) -> PlannerKind {
        self.config.kind
    }

    pub fn plan(
        &mut self,
        problem: &Problem<'_>,
        warm: &[DVector<f64>],
        backend: &mut DerivativeBackend,
    ) -> Result<PlanResult> {
        let cfg = self.config;
        match cfg.kind {
            PlannerKind::Gd => gd_plan(problem, warm, backend, &cfg),
            PlannerKind::Ilqg => {
                ilqg::ilqg_plan_with_state(problem, warm, backend, &cfg, &mut self.mu)
            }
            PlannerKind::Predictive => predictive_sampling_plan(problem, warm, &cfg, &mut self.rng),
            PlannerKind::Robust => robust_sampling_plan(problem, warm, &cfg, &mut self.rng),
            PlannerKind::Cem => cem_plan(problem, warm, &cfg, &mut self.rng),
            PlannerKind::SampleGradient => sample_gradient_plan(problem, warm, &cfg, &mut self.rng),
        }
    }
}
