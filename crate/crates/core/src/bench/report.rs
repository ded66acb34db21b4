use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpc::{BackendKind, WaspSettings};
use crate::planners::{EpisodeTrace, PlannerConfig, ReplanRecord};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 5] = [
    "replan_index",
    "planning_time_s",
    "md_time_s",
    "dynamics_calls",
    "executed_cost",
];

/// Fully resolved configuration of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: String,
    pub task: String,
    pub state_dim: usize,
    pub control_dim: usize,
    pub planner: PlannerConfig,
    pub backend: BackendKind,
    pub wasp: Option<WaspSettings>,
    pub fd_epsilon: f64,
    pub seed: u64,
    pub horizon: usize,
    pub dt: f64,
    pub sim_seconds: f64,
    pub initial_state: Vec<f64>,
    pub initial_state_sigma: f64,
    pub reset_each_replan: bool,
    pub record_timing: bool,
    pub threads: usize,
}

impl RunConfig {
    pub fn label(&self) -> String {
        match (&self.backend, &self.wasp) {
            (BackendKind::Wasp, Some(w)) => format!(
                "{}+wasp(frac_x={}, tol_x={}, frac_u={}, tol_u={})",
                self.planner.kind.name(),
                w.frac_x,
                w.tol_x,
                w.frac_u,
                w.tol_u
            ),
            _ => format!("{}+{}", self.planner.kind.name(), self.backend.name()),
        }
    }
}

/// Episode averages, always recomputed from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub replans: usize,
    pub avg_planning_time_s: f64,
    pub avg_md_time_s: f64,
    pub avg_md_calls: f64,
    pub avg_rollout_calls: f64,
    pub avg_dynamics_calls: f64,
    pub avg_executed_cost: f64,
    pub executed_cost_variance: f64,
    pub total_md_calls: u64,
    pub total_dynamics_calls: u64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl Aggregates {
    pub fn from_records(records: &[ReplanRecord]) -> Self {
        let avg_cost = mean(records.iter().map(|r| r.executed_cost));
        Self {
            replans: records.len(),
            avg_planning_time_s: mean(records.iter().map(|r| r.planning_time_s)),
            avg_md_time_s: mean(records.iter().map(|r| r.md_time_s)),
            avg_md_calls: mean(records.iter().map(|r| r.md_calls as f64)),
            avg_rollout_calls: mean(records.iter().map(|r| r.rollout_calls as f64)),
            avg_dynamics_calls: mean(records.iter().map(|r| r.dynamics_calls() as f64)),
            avg_executed_cost: avg_cost,
            executed_cost_variance: mean(
                records.iter().map(|r| (r.executed_cost - avg_cost).powi(2)),
            ),
            total_md_calls: records.iter().map(|r| r.md_calls).sum(),
            total_dynamics_calls: records.iter().map(|r| r.dynamics_calls()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    /// What the cost averages are taken over.
    pub cost_kind: String,
    pub config: RunConfig,
    pub requested_steps: usize,
    pub executed_steps: usize,
    pub diverged: bool,
    pub aggregates: Aggregates,
    pub records: Vec<ReplanRecord>,
}

impl BenchReport {
    pub fn new(config: RunConfig, trace: &EpisodeTrace) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            cost_kind: "executed".into(),
            config,
            requested_steps: trace.requested_steps,
            executed_steps: trace.executed_steps(),
            diverged: trace.diverged,
            aggregates: Aggregates::from_records(&trace.records),
            records: trace.records.clone(),
        }
    }

    pub fn executed_costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.executed_cost).collect()
    }
}

/// One row of the flat CSV report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub replan_index: usize,
    pub planning_time_s: f64,
    pub md_time_s: f64,
    pub dynamics_calls: u64,
    pub executed_cost: f64,
}

impl From<&ReplanRecord> for CsvRecord {
    fn from(r: &ReplanRecord) -> Self {
        Self {
            replan_index: r.replan_index,
            planning_time_s: r.planning_time_s,
            md_time_s: r.md_time_s,
            dynamics_calls: r.dynamics_calls(),
            executed_cost: r.executed_cost,
        }
    }
}

/// `{experiment}_{task}_{planner}_{backend}_{seed}`
pub fn report_stem(config: &RunConfig) -> String {
    format!(
        "{}_{}_{}_{}_{}",
        config.experiment,
        config.task,
        config.planner.kind.name(),
        config.backend.name(),
        config.seed
    )
}

pub fn write_json(report: &BenchReport, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<BenchReport> {
    let report: BenchReport = serde_json::from_str(&fs::read_to_string(path)?)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "{}: schema version {} (expected {SCHEMA_VERSION})",
            path.display(),
            report.schema_version
        )));
    }
    Ok(report)
}

pub fn write_csv(records: &[ReplanRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in records {
        w.serialize(CsvRecord::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_records(path: &Path) -> Result<Vec<CsvRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Format(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir`, returning both paths.
pub fn write_report(report: &BenchReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let stem = report_stem(&report.config);
    let json = dir.join(format!("{stem}.json"));
    let csv = dir.join(format!("{stem}.csv"));
    write_json(report, &json)?;
    write_csv(&report.records, &csv)?;
    Ok((json, csv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planners::{PlannerKind, ReplanRecord};
    use proptest::prelude::*;

    pub(crate) fn sample_config() -> RunConfig {
        RunConfig {
            experiment: "plan".into(),
            task: "lq".into(),
            state_dim: 2,
            control_dim: 1,
            planner: PlannerConfig::new(PlannerKind::Ilqg),
            backend: BackendKind::Wasp,
            wasp: Some(WaspSettings::default()),
            fd_epsilon: 1e-6,
            seed: 7,
            horizon: 10,
            dt: 0.01,
            sim_seconds: 0.1,
            initial_state: vec![1.0, -0.5],
            initial_state_sigma: 0.0,
            reset_each_replan: false,
            record_timing: true,
            threads: 0,
        }
    }

    fn record(i: usize, t: f64, md: f64, calls: u64, cost: f64) -> ReplanRecord {
        ReplanRecord {
            replan_index: i,
            seed: 7,
            planning_time_s: t,
            md_time_s: md,
            md_calls: calls / 2,
            rollout_calls: calls - calls / 2,
            md_passes: 1,
            executed_cost: cost,
            planned_cost: cost * 3.0,
            jvps_x_min: 1,
            jvps_x_max: 2,
            jvps_u_min: 1,
            jvps_u_max: 1,
            degraded: false,
        }
    }

    fn report(records: Vec<ReplanRecord>) -> BenchReport {
        let n = records.len();
        let trace = EpisodeTrace {
            records,
            states: Vec::new(),
            controls: Vec::new(),
            requested_steps: n,
            diverged: false,
        };
        BenchReport::new(sample_config(), &trace)
    }

    #[test]
    fn stem_follows_naming_scheme() {
        assert_eq!(report_stem(&sample_config()), "plan_lq_ilqg_wasp_7");
    }

    #[test]
    fn aggregates_recompute() {
        let r = report(vec![
            record(0, 1.0, 0.5, 10, 2.0),
            record(1, 3.0, 1.5, 20, 4.0),
        ]);
        assert_eq!(r.aggregates.avg_planning_time_s, 2.0);
        assert_eq!(r.aggregates.avg_dynamics_calls, 15.0);
        assert_eq!(r.aggregates.executed_cost_variance, 1.0);
        assert_eq!(r.aggregates.total_dynamics_calls, 30);
        assert!(r.records.iter().all(|rec| rec.seed == r.config.seed));
    }

    #[test]
    fn empty_csv_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&[], &path).unwrap();
        assert!(read_csv_records(&path).unwrap().is_empty());
        assert_eq!(
            fs::read_to_string(&path).unwrap().trim(),
            CSV_HEADER.join(",")
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reports_round_trip(rows in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0u64..100_000, -1e6f64..1e6), 0..20)) {
            let records: Vec<_> = rows.iter().enumerate().map(|(i, &(t, md, c, cost))| record(i, t, md, c, cost)).collect();
            let r = report(records);
            let dir = tempfile::tempdir().unwrap();
            let (json, csv) = write_report(&r, dir.path()).unwrap();
            prop_assert_eq!(read_json(&json).unwrap(), r.clone());
            let rows_back = read_csv_records(&csv).unwrap();
            let expected: Vec<CsvRecord> = r.records.iter().map(CsvRecord::from).collect();
            prop_assert_eq!(rows_back, expected);
        }
    }
}
