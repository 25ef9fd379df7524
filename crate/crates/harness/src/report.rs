//! CSV and JSON emission for run reports and sweep summaries.

use std::collections::HashMap;

use serde::Serialize;

use crate::replay::RunReport;
use crate::stats::{mean, median_f64, percentile};

pub const RUN_CSV_HEADER: &str =
    "run_id,trial,op_index,recourse,overload,cumulative_overload,max_load";

/// One CSV row per operation; load metrics appear on snapshot rows and are
/// empty elsewhere.
pub fn run_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let snaps: HashMap<usize, usize> = r
            .snapshots
            .iter()
            .enumerate()
            .map(|(i, s)| (s.op_index, i))
            .collect();
        for (i, &rec) in r.recourse.iter().enumerate() {
            let op_index = i + 1;
            match snaps.get(&op_index) {
                Some(&si) => {
                    let s = &r.snapshots[si];
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        r.run_id,
                        r.trial,
                        op_index,
                        rec,
                        s.overload,
                        s.cumulative_overload,
                        s.max_load
                    ));
                }
                None => {
                    out.push_str(&format!(
                        "{},{},{},{},,,\n",
                        r.run_id, r.trial, op_index, rec
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub run_id: String,
    pub alloc: String,
    pub n: usize,
    pub mu: u64,
    pub trials: usize,
    pub ops: usize,
    pub mean_recourse: f64,
    pub p50_recourse: u64,
    pub p95_recourse: u64,
    pub max_recourse: u64,
    pub median_overload: f64,
    pub median_cumulative_overload: f64,
    pub max_load: u64,
}

/// Aggregates the trials of one sweep point.
pub fn summarize_sweep_point(reports: &[RunReport]) -> SweepRow {
    let first = &reports[0];
    let all_recourse: Vec<u64> = reports
        .iter()
        .flat_map(|r| r.recourse.iter().copied())
        .collect();
    let recourse_f: Vec<f64> = all_recourse.iter().map(|&x| x as f64).collect();
    let overloads: Vec<f64> = reports.iter().map(|r| r.summary.final_overload).collect();
    let cumulative: Vec<f64> = reports
        .iter()
        .map(|r| r.summary.final_cumulative_overload)
        .collect();
    SweepRow {
        run_id: first.run_id.clone(),
        alloc: first.allocator.clone(),
        n: first.n,
        mu: (first.m / first.n) as u64,
        trials: reports.len(),
        ops: first.ops,
        mean_recourse: mean(&recourse_f),
        p50_recourse: percentile(&all_recourse, 50.0),
        p95_recourse: percentile(&all_recourse, 95.0),
        max_recourse: all_recourse.iter().copied().max().unwrap_or(0),
        median_overload: median_f64(&overloads),
        median_cumulative_overload: median_f64(&cumulative),
        max_load: reports
            .iter()
            .map(|r| r.summary.final_max_load)
            .max()
            .unwrap_or(0),
    }
}

pub const SWEEP_CSV_HEADER: &str = "run_id,alloc,n,mu,trials,ops,mean_recourse,p50_recourse,\
p95_recourse,max_recourse,median_overload,median_cumulative_overload,max_load";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.run_id,
            r.alloc,
            r.n,
            r.mu,
            r.trials,
            r.ops,
            r.mean_recourse,
            r.p50_recourse,
            r.p95_recourse,
            r.max_recourse,
            r.median_overload,
            r.median_cumulative_overload,
            r.max_load
        ));
    }
    out
}

pub fn reports_json(reports: &[RunReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}
