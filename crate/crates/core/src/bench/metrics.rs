use serde::Serialize;

use super::report::BenchReport;
use crate::error::{Error, Result};
use crate::planners::PlannerKind;

/// Performance ratios at or above this count as task success.
pub const PERFORMANCE_SUCCESS_THRESHOLD: f64 = 0.7;

/// Settings two runs must share before their averages may be compared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingKey {
    pub task: String,
    pub planner: Option<PlannerKind>,
    pub seed: u64,
    pub horizon: usize,
    pub dt: f64,
    pub sim_seconds: f64,
    pub initial_state: Vec<f64>,
    pub requested_steps: usize,
}

impl PairingKey {
    pub fn of(report: &BenchReport, with_planner: bool) -> Self {
        let c = &report.config;
        Self {
            task: c.task.clone(),
            planner: with_planner.then_some(c.planner.kind),
            seed: c.seed,
            horizon: c.horizon,
            dt: c.dt,
            sim_seconds: c.sim_seconds,
            initial_state: c.initial_state.clone(),
            requested_steps: report.requested_steps,
        }
    }

    /// Human-readable list of differing fields.
    pub fn diff(&self, other: &Self) -> Vec<String> {
        let a = serde_json::to_value(self).expect("plain data");
        let b = serde_json::to_value(other).expect("plain data");
        let (Some(a), Some(b)) = (a.as_object(), b.as_object()) else {
            return Vec::new();
        };
        a.iter()
            .filter(|(k, v)| b.get(*k) != Some(v))
            .map(|(k, v)| format!("{k}: {v} vs {}", b[k]))
            .collect()
    }
}

fn check_pair(a: &BenchReport, b: &BenchReport, with_planner: bool) -> Result<()> {
    let (ka, kb) = (
        PairingKey::of(a, with_planner),
        PairingKey::of(b, with_planner),
    );
    if ka == kb {
        Ok(())
    } else {
        Err(Error::ConfigMismatch(ka.diff(&kb).join("; ")))
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

/// Average model-derivative time under FD over that under WASP.
pub fn md_speedup(fd: &BenchReport, wasp: &BenchReport) -> Result<f64> {
    check_pair(fd, wasp, true)?;
    Ok(ratio(
        fd.aggregates.avg_md_time_s,
        wasp.aggregates.avg_md_time_s,
    ))
}

/// Average planning time of `baseline` over that of `other`. The planners
/// may differ (sampling planner vs iLQG).
pub fn speedup(baseline: &BenchReport, other: &BenchReport) -> Result<f64> {
    check_pair(baseline, other, false)?;
    Ok(ratio(
        baseline.aggregates.avg_planning_time_s,
        other.aggregates.avg_planning_time_s,
    ))
}

/// Average executed cost of `baseline` over that of `other`.
pub fn performance_ratio(baseline: &BenchReport, other: &BenchReport) -> Result<f64> {
    check_pair(baseline, other, false)?;
    Ok(ratio(
        baseline.aggregates.avg_executed_cost,
        other.aggregates.avg_executed_cost,
    ))
}

/// Model-derivative dynamics calls of `wasp` over those of `fd`.
pub fn md_call_ratio(fd: &BenchReport, wasp: &BenchReport) -> Result<f64> {
    check_pair(fd, wasp, true)?;
    Ok(ratio(
        wasp.aggregates.total_md_calls as f64,
        fd.aggregates.total_md_calls as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::report::{Aggregates, RunConfig};
    use crate::mpc::{BackendKind, WaspSettings};
    use crate::planners::PlannerConfig;
    use proptest::prelude::*;

    fn report(backend: BackendKind, md: f64, plan: f64, cost: f64) -> BenchReport {
        let config = RunConfig {
            experiment: "exp1".into(),
            task: "chain".into(),
            state_dim: 16,
            control_dim: 8,
            planner: PlannerConfig::new(PlannerKind::Ilqg),
            backend,
            wasp: (backend == BackendKind::Wasp).then(WaspSettings::default),
            fd_epsilon: 1e-6,
            seed: 1,
            horizon: 50,
            dt: 0.01,
            sim_seconds: 10.0,
            initial_state: vec![0.0; 16],
            initial_state_sigma: 0.0,
            reset_each_replan: false,
            record_timing: true,
            threads: 0,
        };
        let mut aggregates = Aggregates::from_records(&[]);
        aggregates.avg_md_time_s = md;
        aggregates.avg_planning_time_s = plan;
        aggregates.avg_executed_cost = cost;
        BenchReport {
            schema_version: 1,
            cost_kind: "executed".into(),
            config,
            requested_steps: 1000,
            executed_steps: 1000,
            diverged: false,
            aggregates,
            records: Vec::new(),
        }
    }

    #[test]
    fn worked_values() {
        let fd = report(BackendKind::Fd, 2e-3, 10e-3, 0.9);
        let wasp = report(BackendKind::Wasp, 1e-3, 8e-3, 1.0);
        assert_eq!(md_speedup(&fd, &wasp).unwrap(), 2.0);
        assert_eq!(speedup(&fd, &wasp).unwrap(), 1.25);
        assert_eq!(performance_ratio(&fd, &wasp).unwrap(), 0.9);
        assert_eq!(md_speedup(&fd, &fd).unwrap(), 1.0);
        assert_eq!(performance_ratio(&wasp, &wasp).unwrap(), 1.0);
        let zero = report(BackendKind::Fd, 0.0, 0.0, 0.0);
        assert_eq!(md_speedup(&zero, &zero).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_pairs_are_refused() {
        let fd = report(BackendKind::Fd, 2e-3, 10e-3, 0.9);
        let mut other = report(BackendKind::Wasp, 1e-3, 8e-3, 1.0);
        other.config.seed = 2;
        other.config.horizon = 40;
        let Err(Error::ConfigMismatch(msg)) = md_speedup(&fd, &other) else {
            panic!("expected a mismatch");
        };
        assert!(msg.contains("seed") && msg.contains("horizon"), "{msg}");

        let mut sampler = report(BackendKind::Fd, 0.0, 8e-3, 1.0);
        sampler.config.planner = PlannerConfig::new(PlannerKind::Cem);
        assert!(md_speedup(&fd, &sampler).is_err());
        assert!(speedup(&sampler, &fd).is_ok());
    }

    proptest! {
        #[test]
        fn metrics_invert_under_swap(a in 1e-6f64..10.0, b in 1e-6f64..10.0) {
            let x = report(BackendKind::Fd, a, a, a);
            let y = report(BackendKind::Wasp, b, b, b);
            for f in [md_speedup, speedup, performance_ratio] {
                let (ab, ba) = (f(&x, &y).unwrap(), f(&y, &x).unwrap());
                prop_assert!((ab * ba - 1.0).abs() <= 1e-12);
            }
        }
    }
}
