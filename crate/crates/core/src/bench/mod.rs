//! Benchmark harness: per-episode reports, the three FD/WASP comparison
//! metrics and desk-scale runs of the three experiments.

mod experiments;
mod metrics;
mod report;

pub use experiments::{
    experiment1, experiment2, experiment3, run_episode, BenchOptions, Exp1Entry, Exp1Result,
    Exp2Entry, Exp2Pair, Exp2Result, Exp3Config, Exp3Result, SweepRow, EXP3_CONFIGS,
};
pub use metrics::{
    md_call_ratio, md_speedup, performance_ratio, speedup, PairingKey,
    PERFORMANCE_SUCCESS_THRESHOLD,
};
pub use report::{
    read_csv_records, read_json, report_stem, write_csv, write_json, write_report, Aggregates,
    BenchReport, CsvRecord, RunConfig, CSV_HEADER, SCHEMA_VERSION,
};
