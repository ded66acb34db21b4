//! Command-line front end: `plan`, `bench exp1|exp2|exp3`, `verify`, `list`.
//!
//! Exit codes: 0 on success, 1 when a verification check or a run fails,
//! 2 on usage errors.

pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    experiment1, experiment2, experiment3, run_episode, write_report, BenchOptions,
    PERFORMANCE_SUCCESS_THRESHOLD,
};
use crate::error::Result;
use crate::mpc::{BackendKind, WaspSettings};
use crate::planners::{PlannerConfig, PlannerKind};
use crate::tasks::{task_by_name_with_dt, TASK_NAMES};

/// Environment variable that sets the output directory when `--out` is absent.
pub const OUT_ENV: &str = "WASP_MPC_OUT";
pub const DEFAULT_OUT_DIR: &str = "wasp-mpc-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "wasp-mpc",
    version,
    about = "Receding-horizon MPC with coherence-based Jacobian approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode, print a summary and write its report.
    Plan(RunArgs),
    /// Run one of the benchmark experiments.
    Bench {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated task list (overrides --task).
        #[arg(long, value_delimiter = ',', value_parser = PossibleValuesParser::new(TASK_NAMES))]
        tasks: Vec<String>,
        /// Comma-separated seed list (overrides --seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Experiment 1: keep --frac-x/--frac-u instead of auto-raising from 0.3.
        #[arg(long)]
        fixed_frac: bool,
        /// Experiment 1: also run gradient descent.
        #[arg(long)]
        gd: bool,
    },
    /// Run the oracle self-checks.
    Verify,
    /// List tasks and planners.
    List,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    Exp1,
    Exp2,
    Exp3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Fd,
    Wasp,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value = "chain", value_parser = PossibleValuesParser::new(TASK_NAMES))]
    task: String,
    #[arg(long, default_value = "ilqg", value_parser = PossibleValuesParser::new(PlannerKind::ALL.map(|k| k.name())))]
    planner: String,
    #[arg(long, value_enum, default_value = "wasp")]
    backend: BackendArg,
    /// Clamped to (0, 1].
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    frac_x: f64,
    /// Clamped to [0, 1].
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    tol_x: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    frac_u: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    tol_u: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planning horizon in steps (task default when absent).
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = crate::tasks::DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    sim_seconds: f64,
    /// Samples per iteration for sampling planners.
    #[arg(long, default_value_t = 32)]
    samples: usize,
    /// Planner iterations per replan.
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    /// Initial-state perturbation scale.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Output directory (falls back to $WASP_MPC_OUT, then ./wasp-mpc-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for derivative batches and sample rollouts; 0 is sequential.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Force sequential execution (same as --threads 0).
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    reset_wasp_each_replan: bool,
    /// Write zero timing columns so repeated runs produce identical files.
    #[arg(long)]
    no_timing: bool,
}

fn clamp_frac(name: &str, v: f64) -> std::result::Result<f64, String> {
    if v.is_nan() {
        return Err(format!("--{name} must be a number in (0, 1], got NaN"));
    }
    let c = v.clamp(f64::MIN_POSITIVE, 1.0);
    if c != v {
        eprintln!("warning: --{name} {v} clamped to {c}");
    }
    Ok(c)
}

fn clamp_tol(name: &str, v: f64) -> std::result::Result<f64, String> {
    if v.is_nan() {
        return Err(format!("--{name} must be a number in [0, 1], got NaN"));
    }
    let c = v.clamp(0.0, 1.0);
    if c != v {
        eprintln!("warning: --{name} {v} clamped to {c}");
    }
    Ok(c)
}

impl RunArgs {
    fn threads(&self) -> usize {
        if self.sequential {
            0
        } else {
            self.threads
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| {
                std::env::var_os(OUT_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            })
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn wasp(&self) -> std::result::Result<WaspSettings, String> {
        Ok(WaspSettings::new(
            clamp_frac("frac-x", self.frac_x)?,
            clamp_tol("tol-x", self.tol_x)?,
            clamp_frac("frac-u", self.frac_u)?,
            clamp_tol("tol-u", self.tol_u)?,
        ))
    }

    fn options(&self) -> std::result::Result<BenchOptions, String> {
        if !(self.sim_seconds > 0.0 && self.sim_seconds.is_finite()) {
            return Err(format!(
                "--sim-seconds must be positive, got {}",
                self.sim_seconds
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("--dt must be positive, got {}", self.dt));
        }
        if self.horizon == Some(0) {
            return Err("--horizon must be at least 1".into());
        }
        if self.samples < 2 {
            return Err(format!(
                "--samples must be at least 2, got {}",
                self.samples
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(format!("--sigma must be >= 0, got {}", self.sigma));
        }
        let threads = self.threads();
        if threads > 0 && !self.no_timing {
            eprintln!("warning: --threads {threads} runs work concurrently; timing columns include scheduling noise");
        }
        Ok(BenchOptions {
            tasks: vec![self.task.clone()],
            seeds: vec![self.seed],
            sim_seconds: self.sim_seconds,
            dt: self.dt,
            horizon: self.horizon,
            wasp: self.wasp()?,
            fixed_frac: false,
            planner_iterations: self.iterations,
            samples: self.samples,
            initial_state_sigma: self.sigma,
            reset_each_replan: self.reset_wasp_each_replan,
            record_timing: !self.no_timing,
            threads,
            include_gd: false,
            out_dir: Some(self.out_dir()),
        })
    }

    fn planner(&self, options: &BenchOptions) -> PlannerConfig {
        let kind: PlannerKind = self
            .planner
            .parse()
            .expect("validated by the argument parser");
        let mut cfg = PlannerConfig::new(kind).with_iterations(options.planner_iterations);
        cfg.sampling.samples = options.samples;
        cfg.sampling.elites = cfg.sampling.elites.min(options.samples);
        cfg.threads = options.threads;
        cfg
    }

    fn backend(&self) -> BackendKind {
        match self.backend {
            BackendArg::Fd => BackendKind::Fd,
            BackendArg::Wasp => BackendKind::Wasp,
        }
    }
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn failure(err: crate::Error) -> i32 {
    eprintln!("error: {err}");
    EXIT_FAILURE
}

fn cmd_plan(args: &RunArgs) -> i32 {
    let options = match args.options() {
        Ok(o) => o,
        Err(msg) => return usage(&msg),
    };
    let run = || -> Result<()> {
        let task = task_by_name_with_dt(&args.task, options.dt)?;
        let task = match options.horizon {
            Some(h) => task.with_horizon(h),
            None => task,
        };
        let planner = args.planner(&options);
        let report = run_episode(
            "plan",
            &task,
            planner,
            args.backend(),
            options.wasp,
            args.seed,
            &BenchOptions {
                out_dir: None,
                ..options.clone()
            },
        )?;
        let dir = options.out_dir.clone().expect("set by options()");
        let (json, csv) = write_report(&report, &dir)?;
        let a = &report.aggregates;
        println!("run               {}", report.config.label());
        println!(
            "task              {} (T={}, dt={})",
            task.name, task.horizon, task.dt
        );
        println!(
            "steps             {}/{}",
            report.executed_steps, report.requested_steps
        );
        println!("diverged          {}", report.diverged);
        println!("avg executed cost {:.6}", a.avg_executed_cost);
        println!("avg planning time {:.6} s", a.avg_planning_time_s);
        println!("avg md time       {:.6} s", a.avg_md_time_s);
        println!("md calls          {}", a.total_md_calls);
        println!("dynamics calls    {}", a.total_dynamics_calls);
        println!("report            {} {}", json.display(), csv.display());
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => failure(e),
    }
}

fn cmd_bench(
    experiment: Experiment,
    args: &RunArgs,
    tasks: &[String],
    seeds: &[u64],
    fixed_frac: bool,
    gd: bool,
) -> i32 {
    let mut options = match args.options() {
        Ok(o) => o,
        Err(msg) => return usage(&msg),
    };
    if !tasks.is_empty() {
        options.tasks = tasks.to_vec();
    }
    if !seeds.is_empty() {
        options.seeds = seeds.to_vec();
    }
    options.fixed_frac = fixed_frac;
    options.include_gd = gd;
    let dir = options.out_dir.clone().expect("set by options()");
    let run = || -> Result<()> {
        match experiment {
            Experiment::Exp1 => {
                let res = experiment1(&options)?;
                println!(
                    "task        planner seed frac  md_speedup speedup perf_ratio md_calls success"
                );
                for e in &res.entries {
                    println!(
                        "{:<11} {:<7} {:<4} {:<5} {:<10.3} {:<7.3} {:<10.4} {:<8.3} {}",
                        e.task,
                        e.planner.name(),
                        e.seed,
                        e.frac,
                        e.md_speedup,
                        e.speedup,
                        e.performance_ratio,
                        e.md_call_ratio,
                        e.success
                    );
                }
                std::fs::write(
                    dir.join("exp1_summary.json"),
                    serde_json::to_string_pretty(&res)?,
                )?;
            }
            Experiment::Exp2 => {
                let res = experiment2(&options)?;
                println!("task        seed planner          speedup perf_ratio failed");
                for e in &res.entries {
                    for p in &e.pairs {
                        println!(
                            "{:<11} {:<4} {:<16} {:<7.3} {:<10.4} {}",
                            e.task,
                            e.seed,
                            p.planner.name(),
                            p.speedup,
                            p.performance_ratio,
                            if p.failed { "x" } else { "" }
                        );
                    }
                }
                std::fs::write(
                    dir.join("exp2_summary.json"),
                    serde_json::to_string_pretty(&res)?,
                )?;
            }
            Experiment::Exp3 => {
                let results = experiment3(&options)?;
                println!("task        seed config          avg_cost   cost_var   avg_md_calls");
                for r in &results {
                    for (cfg, rep) in &r.runs {
                        let a = &rep.aggregates;
                        println!(
                            "{:<11} {:<4} {:<15} {:<10.5} {:<10.5} {:.1}",
                            r.task,
                            r.seed,
                            cfg.label,
                            a.avg_executed_cost,
                            a.executed_cost_variance,
                            a.avg_md_calls
                        );
                    }
                    for v in r.call_bound_violations()? {
                        println!("bound violation: {v}");
                    }
                }
            }
        }
        println!("reports in {}", dir.display());
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => failure(e),
    }
}

fn cmd_verify() -> i32 {
    match verify::run_all() {
        Ok(checks) => {
            let mut ok = true;
            for c in &checks {
                println!(
                    "[{}] {}: {}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            if ok {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(e) => failure(e),
    }
}

fn cmd_list() -> i32 {
    println!("tasks:");
    for name in TASK_NAMES {
        let t = task_by_name_with_dt(name, crate::tasks::DEFAULT_DT).expect("registered task");
        let tag = if t.stress { " (stress)" } else { "" };
        println!(
            "  {:<14} d_x={:<3} d_u={:<3} T={}{tag}",
            name, t.state_dim, t.control_dim, t.horizon
        );
    }
    println!("planners:");
    for kind in PlannerKind::ALL {
        let family = if kind.uses_derivatives() {
            "derivative"
        } else {
            "sampling"
        };
        println!("  {:<16} {family}", kind.name());
    }
    println!("backends:\n  fd\n  wasp");
    println!("success threshold for performance ratio: {PERFORMANCE_SUCCESS_THRESHOLD}");
    EXIT_OK
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Bench {
            experiment,
            run,
            tasks,
            seeds,
            fixed_frac,
            gd,
        } => cmd_bench(*experiment, run, tasks, seeds, *fixed_frac, *gd),
        Command::Verify => cmd_verify(),
        Command::List => cmd_list(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["wasp-mpc", "plan", "--task", "nope"]), EXIT_USAGE);
        assert_eq!(run(["wasp-mpc", "plan", "--planner", "mppi"]), EXIT_USAGE);
        assert_eq!(run(["wasp-mpc", "bench", "exp9"]), EXIT_USAGE);
        assert_eq!(run(["wasp-mpc", "plan", "--sim-seconds", "0"]), EXIT_USAGE);
        assert_eq!(run(["wasp-mpc"]), EXIT_USAGE);
    }

    #[test]
    fn list_and_help_exit_0() {
        assert_eq!(run(["wasp-mpc", "list"]), EXIT_OK);
        assert_eq!(run(["wasp-mpc", "--help"]), EXIT_OK);
    }

    #[test]
    fn fractions_are_clamped() {
        assert_eq!(clamp_frac("frac-x", 3.0).unwrap(), 1.0);
        assert_eq!(clamp_frac("frac-x", -1.0).unwrap(), f64::MIN_POSITIVE);
        assert_eq!(clamp_tol("tol-x", -0.5).unwrap(), 0.0);
        assert_eq!(clamp_tol("tol-x", 0.25).unwrap(), 0.25);
        assert!(clamp_frac("frac-x", f64::NAN).is_err());
    }
}
