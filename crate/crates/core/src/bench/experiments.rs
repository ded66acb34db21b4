use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{
    md_call_ratio, md_speedup, performance_ratio, speedup, PERFORMANCE_SUCCESS_THRESHOLD,
};
use super::report::{write_report, BenchReport, RunConfig};
use crate::derivative::{WaspConfig, DEFAULT_FD_EPSILON};
use crate::error::Result;
use crate::mpc::{BackendKind, DerivativeBackend, WaspSettings};
use crate::planners::{replan_loop, EpisodeOptions, Planner, PlannerConfig, PlannerKind};
use crate::tasks::{task_by_name_with_dt, TaskSpec, DEFAULT_DT};

/// The five `(frac_x, frac_u)` settings of the sensitivity sweep, `tol = 0.5`.
pub const EXP3_CONFIGS: [(f64, f64); 5] =
    [(0.5, 0.5), (0.5, 0.3), (0.5, 0.1), (0.3, 0.5), (0.1, 0.5)];

/// Settings shared by all experiment runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub tasks: Vec<String>,
    pub seeds: Vec<u64>,
    pub sim_seconds: f64,
    pub dt: f64,
    pub horizon: Option<usize>,
    /// frac/tol for WASP runs. Experiment 1 ignores the fracs unless
    /// `fixed_frac` is set and auto-tunes them from 0.3 instead.
    pub wasp: WaspSettings,
    pub fixed_frac: bool,
    pub planner_iterations: usize,
    pub samples: usize,
    /// Standard deviation of the seeded initial-state perturbation.
    pub initial_state_sigma: f64,
    pub reset_each_replan: bool,
    pub record_timing: bool,
    pub threads: usize,
    /// Experiment 1 also runs gradient descent.
    pub include_gd: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            tasks: vec!["chain".into()],
            seeds: vec![0],
            sim_seconds: 10.0,
            dt: DEFAULT_DT,
            horizon: None,
            wasp: WaspSettings::default(),
            fixed_frac: false,
            planner_iterations: 1,
            samples: 32,
            initial_state_sigma: 0.05,
            reset_each_replan: false,
            record_timing: true,
            threads: 0,
            include_gd: false,
            out_dir: None,
        }
    }
}

impl BenchOptions {
    fn task(&self, name: &str) -> Result<TaskSpec> {
        let task = task_by_name_with_dt(name, self.dt)?;
        Ok(match self.horizon {
            Some(h) => task.with_horizon(h),
            None => task,
        })
    }

    fn planner(&self, kind: PlannerKind) -> PlannerConfig {
        let mut cfg = PlannerConfig::new(kind).with_iterations(self.planner_iterations);
        cfg.sampling.samples = self.samples;
        cfg.threads = self.threads;
        cfg
    }
}

/// One seeded episode, written to `out_dir` when set.
pub fn run_episode(
    experiment: &str,
    task: &TaskSpec,
    planner: PlannerConfig,
    backend: BackendKind,
    wasp: WaspSettings,
    seed: u64,
    options: &BenchOptions,
) -> Result<BenchReport> {
    let planner = PlannerConfig { seed, ..planner };
    let wasp = WaspSettings {
        tangent_seed: seed,
        ..wasp
    };
    let mut derivatives = match backend {
        BackendKind::Fd => DerivativeBackend::fd_with_epsilon(wasp.fd_epsilon)?,
        BackendKind::Wasp => {
            DerivativeBackend::wasp(wasp, task.state_dim, task.control_dim, task.horizon)?
        }
    }
    .with_threads(options.threads)?;
    let x0 = task.perturbed_initial_state(seed, options.initial_state_sigma);
    let episode = EpisodeOptions {
        sim_seconds: options.sim_seconds,
        reset_each_replan: options.reset_each_replan,
        record_timing: options.record_timing,
        initial_state: Some(x0.clone()),
    };
    let trace = replan_loop(
        task,
        &mut Planner::new(planner)?,
        &mut derivatives,
        &episode,
    )?;
    let config = RunConfig {
        experiment: experiment.into(),
        task: task.name.clone(),
        state_dim: task.state_dim,
        control_dim: task.control_dim,
        planner,
        backend,
        wasp: (backend == BackendKind::Wasp).then_some(wasp),
        fd_epsilon: wasp.fd_epsilon,
        seed,
        horizon: task.horizon,
        dt: task.dt,
        sim_seconds: options.sim_seconds,
        initial_state: x0.iter().copied().collect(),
        initial_state_sigma: options.initial_state_sigma,
        reset_each_replan: options.reset_each_replan,
        record_timing: options.record_timing,
        threads: options.threads,
    };
    let report = BenchReport::new(config, &trace);
    if let Some(dir) = &options.out_dir {
        write_report(&report, dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Entry {
    pub task: String,
    pub planner: PlannerKind,
    pub seed: u64,
    /// `(frac, performance_ratio)` of every tried setting, in order.
    pub attempts: Vec<(f64, f64)>,
    pub frac: f64,
    pub md_speedup: f64,
    pub speedup: f64,
    pub performance_ratio: f64,
    /// WASP model-derivative calls over FD's.
    pub md_call_ratio: f64,
    pub success: bool,
    pub fd: BenchReport,
    pub wasp: BenchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Result {
    pub entries: Vec<Exp1Entry>,
}

fn frac_schedule(options: &BenchOptions) -> Vec<f64> {
    if options.fixed_frac {
        vec![options.wasp.frac_x]
    } else {
        (3..=10).map(|k| k as f64 / 10.0).collect()
    }
}

/// FD vs WASP with a derivative-based planner, `tol` fixed and `frac`
/// raised from 0.3 in steps of 0.1 until the performance ratio reaches 0.7.
pub fn experiment1(options: &BenchOptions) -> Result<Exp1Result> {
    let mut planners = vec![PlannerKind::Ilqg];
    if options.include_gd {
        planners.push(PlannerKind::Gd);
    }
    let mut entries = Vec::new();
    for name in &options.tasks {
        let task = options.task(name)?;
        for &kind in &planners {
            for &seed in &options.seeds {
                let planner = options.planner(kind);
                let fd = run_episode(
                    "exp1",
                    &task,
                    planner,
                    BackendKind::Fd,
                    options.wasp,
                    seed,
                    options,
                )?;
                let mut attempts = Vec::new();
                let mut chosen = None;
                for frac in frac_schedule(options) {
                    let (frac_x, frac_u) = if options.fixed_frac {
                        (options.wasp.frac_x, options.wasp.frac_u)
                    } else {
                        (frac, frac)
                    };
                    let settings = WaspSettings {
                        frac_x,
                        frac_u,
                        ..options.wasp
                    };
                    let wasp = run_episode(
                        "exp1",
                        &task,
                        planner,
                        BackendKind::Wasp,
                        settings,
                        seed,
                        options,
                    )?;
                    let ratio = performance_ratio(&fd, &wasp)?;
                    attempts.push((frac, ratio));
                    let done = ratio >= PERFORMANCE_SUCCESS_THRESHOLD && !wasp.diverged;
                    chosen = Some((frac, wasp));
                    if done {
                        break;
                    }
                }
                let (frac, wasp) = chosen.expect("schedule is non-empty");
                let ratio = performance_ratio(&fd, &wasp)?;
                entries.push(Exp1Entry {
                    task: task.name.clone(),
                    planner: kind,
                    seed,
                    attempts,
                    frac,
                    md_speedup: md_speedup(&fd, &wasp)?,
                    speedup: speedup(&fd, &wasp)?,
                    performance_ratio: ratio,
                    md_call_ratio: md_call_ratio(&fd, &wasp)?,
                    success: ratio >= PERFORMANCE_SUCCESS_THRESHOLD && !wasp.diverged,
                    fd,
                    wasp,
                });
            }
        }
    }
    Ok(Exp1Result { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp2Pair {
    pub planner: PlannerKind,
    /// Sampling planner's planning time over iLQG's.
    pub speedup: f64,
    /// Sampling planner's average executed cost over iLQG's.
    pub performance_ratio: f64,
    /// The sampling planner diverged, or its cost exceeded iLQG's by more
    /// than `1 / 0.7`.
    pub failed: bool,
    pub report: BenchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp2Entry {
    pub task: String,
    pub seed: u64,
    pub ilqg: BenchReport,
    pub pairs: Vec<Exp2Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp2Result {
    pub entries: Vec<Exp2Entry>,
}

/// iLQG on WASP derivatives against each sampling planner.
pub fn experiment2(options: &BenchOptions) -> Result<Exp2Result> {
    let mut entries = Vec::new();
    for name in &options.tasks {
        let task = options.task(name)?;
        for &seed in &options.seeds {
            let ilqg = run_episode(
                "exp2",
                &task,
                options.planner(PlannerKind::Ilqg),
                BackendKind::Wasp,
                options.wasp,
                seed,
                options,
            )?;
            let mut pairs = Vec::new();
            for kind in PlannerKind::SAMPLING {
                let report = run_episode(
                    "exp2",
                    &task,
                    options.planner(kind),
                    BackendKind::Fd,
                    options.wasp,
                    seed,
                    options,
                )?;
                let ratio = performance_ratio(&report, &ilqg)?;
                pairs.push(Exp2Pair {
                    planner: kind,
                    speedup: speedup(&report, &ilqg)?,
                    performance_ratio: ratio,
                    failed: report.diverged || ratio > 1.0 / PERFORMANCE_SUCCESS_THRESHOLD,
                    report,
                });
            }
            entries.push(Exp2Entry {
                task: task.name.clone(),
                seed,
                ilqg,
                pairs,
            });
        }
    }
    Ok(Exp2Result { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3Config {
    pub label: String,
    pub backend: BackendKind,
    pub wasp: Option<WaspSettings>,
}

impl Exp3Config {
    pub fn all(tol: f64) -> Vec<Exp3Config> {
        let mut configs: Vec<_> = EXP3_CONFIGS
            .iter()
            .map(|&(fx, fu)| Exp3Config {
                label: format!("wasp({fx},{fu})"),
                backend: BackendKind::Wasp,
                wasp: Some(WaspSettings::new(fx, tol, fu, tol)),
            })
            .collect();
        configs.push(Exp3Config {
            label: "fd".into(),
            backend: BackendKind::Fd,
            wasp: None,
        });
        configs
    }
}

/// One planning iteration of one configuration, long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: String,
    pub seed: u64,
    pub iteration: usize,
    pub executed_cost: f64,
    pub planned_cost: f64,
    pub md_time_s: f64,
    pub md_calls: u64,
    pub dynamics_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3Result {
    pub task: String,
    pub seed: u64,
    pub runs: Vec<(Exp3Config, BenchReport)>,
    pub sweep: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

impl Exp3Result {
    pub fn report(&self, label: &str) -> Option<&BenchReport> {
        self.runs
            .iter()
            .find(|(c, _)| c.label == label)
            .map(|(_, r)| r)
    }

    /// Descriptions of every record whose JVP counts leave `[p_min, p_max]`.
    pub fn call_bound_violations(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for (cfg, report) in &self.runs {
            let Some(w) = cfg.wasp else { continue };
            let c = &report.config;
            let px = WaspConfig::new(c.state_dim, w.frac_x, w.tol_x)?;
            let pu = WaspConfig::new(c.control_dim, w.frac_u, w.tol_u)?;
            for r in report.records.iter().filter(|r| r.md_passes > 0) {
                let ok = px.p_min <= r.jvps_x_min
                    && r.jvps_x_max <= px.p_max
                    && pu.p_min <= r.jvps_u_min
                    && r.jvps_u_max <= pu.p_max;
                if !ok {
                    out.push(format!(
                        "{} iteration {}: x in [{}, {}] (bounds [{}, {}]), u in [{}, {}] (bounds [{}, {}])",
                        cfg.label,
                        r.replan_index,
                        r.jvps_x_min,
                        r.jvps_x_max,
                        px.p_min,
                        px.p_max,
                        r.jvps_u_min,
                        r.jvps_u_max,
                        pu.p_min,
                        pu.p_max
                    ));
                }
            }
        }
        Ok(out)
    }
}

fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Sensitivity sweep: the five WASP settings plus FD on one task, each for
/// `sim_seconds / dt` planning iterations. Runs once per seed in `options`.
pub fn experiment3(options: &BenchOptions) -> Result<Vec<Exp3Result>> {
    let mut results = Vec::new();
    for name in &options.tasks {
        let task = options.task(name)?;
        for &seed in &options.seeds {
            let mut runs = Vec::new();
            let mut sweep = Vec::new();
            for cfg in Exp3Config::all(options.wasp.tol_x) {
                let wasp = cfg.wasp.unwrap_or(WaspSettings {
                    fd_epsilon: DEFAULT_FD_EPSILON,
                    ..options.wasp
                });
                let experiment = match cfg.backend {
                    BackendKind::Fd => "exp3".to_string(),
                    BackendKind::Wasp => format!("exp3-fx{}-fu{}", wasp.frac_x, wasp.frac_u),
                };
                let report = run_episode(
                    &experiment,
                    &task,
                    options.planner(PlannerKind::Ilqg),
                    cfg.backend,
                    wasp,
                    seed,
                    options,
                )?;
                sweep.extend(report.records.iter().map(|r| SweepRow {
                    config: cfg.label.clone(),
                    seed,
                    iteration: r.replan_index,
                    executed_cost: r.executed_cost,
                    planned_cost: r.planned_cost,
                    md_time_s: r.md_time_s,
                    md_calls: r.md_calls,
                    dynamics_calls: r.dynamics_calls(),
                }));
                runs.push((cfg, report));
            }
            let mut files = Vec::new();
            if let Some(dir) = &options.out_dir {
                fs::create_dir_all(dir)?;
                for (_, report) in &runs {
                    let stem = super::report::report_stem(&report.config);
                    files.push(dir.join(format!("{stem}.json")));
                    files.push(dir.join(format!("{stem}.csv")));
                }
                let path = dir.join(format!("exp3_{}_sweep_{seed}.csv", task.name));
                write_sweep(&sweep, &path)?;
                files.push(path);
            }
            results.push(Exp3Result {
                task: task.name.clone(),
                seed,
                runs,
                sweep,
                files,
            });
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(tasks: &[&str]) -> BenchOptions {
        BenchOptions {
            tasks: tasks.iter().map(|s| s.to_string()).collect(),
            sim_seconds: 0.2,
            horizon: Some(10),
            record_timing: false,
            ..BenchOptions::default()
        }
    }

    #[test]
    fn exp1_on_lq_is_near_exact() {
        let res = experiment1(&quick(&["lq"])).unwrap();
        let e = &res.entries[0];
        assert_eq!(e.frac, 0.3);
        assert!(
            (0.95..=1.05).contains(&e.performance_ratio),
            "{}",
            e.performance_ratio
        );
        assert!(e.success);
    }

    #[test]
    fn exp2_emits_all_pairs() {
        let mut opts = quick(&["pendulum"]);
        opts.samples = 8;
        let res = experiment2(&opts).unwrap();
        let kinds: Vec<_> = res.entries[0].pairs.iter().map(|p| p.planner).collect();
        assert_eq!(kinds, PlannerKind::SAMPLING.to_vec());
    }

    #[test]
    fn exp3_writes_six_report_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let mut opts = quick(&["pendulum"]);
        opts.out_dir = Some(dir.path().to_path_buf());
        let res = experiment3(&opts).unwrap();
        assert_eq!(res[0].runs.len(), 6);
        let json = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .path()
                    .extension()
                    .is_some_and(|x| x == "json")
            })
            .count();
        assert_eq!(json, 6);
        assert!(res[0].call_bound_violations().unwrap().is_empty());
        assert_eq!(res[0].sweep.len(), 6 * 20);
    }
}
