//! CSV reports.
//!
//! Relative latencies follow the step-2 convention: the baseline (step 2) is
//! 100% and later steps are a percentage of it.

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapper::H2HResult;
use crate::schedule::Schedule;

/// `summary.csv`: one row per executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub step: usize,
    pub sys_latency_s: f64,
    pub sys_energy_j: f64,
    pub comm_s: f64,
    pub compute_s: f64,
    /// Percent of the step-2 latency; empty when step 2 was not run.
    pub relative_latency_pct: Option<f64>,
    pub pinned: usize,
    pub fused: usize,
    /// Accepted step-4 moves (zero before step 4).
    pub remaps: usize,
    pub search_time_s: f64,
}

/// `sweep.csv`: one row per (bandwidth, step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bandwidth_bytes_per_s: f64,
    pub step: usize,
    pub sys_latency_s: f64,
    pub sys_energy_j: f64,
    pub comm_s: f64,
    pub compute_s: f64,
    pub relative_latency_pct: f64,
}

/// `compare.csv`: baseline (steps 1-2) against the full mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: String,
    pub baseline_latency_s: f64,
    pub h2h_latency_s: f64,
    pub latency_reduction_pct: f64,
    pub baseline_energy_j: f64,
    pub h2h_energy_j: f64,
    pub energy_reduction_pct: f64,
    pub baseline_comm_share: f64,
    pub baseline_compute_share: f64,
    pub h2h_comm_share: f64,
    pub h2h_compute_share: f64,
}

/// `oracle.csv`: exhaustive optimum against the heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub candidates: u128,
    pub oracle_latency_s: f64,
    pub h2h_latency_s: f64,
    pub gap_pct: f64,
}

pub fn relative_pct(latency: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        100.0 * latency / baseline
    } else {
        100.0
    }
}

pub fn reduction_pct(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        100.0 * (before - after) / before
    } else {
        0.0
    }
}

pub fn step_rows(r: &H2HResult) -> Vec<StepRow> {
    let baseline = r.steps.get(1).map(|s| s.schedule.sys_latency);
    r.steps
        .iter()
        .enumerate()
        .map(|(i, s)| StepRow {
            step: i + 1,
            sys_latency_s: s.schedule.sys_latency,
            sys_energy_j: s.schedule.sys_energy,
            comm_s: s.schedule.comm_seconds(),
            compute_s: s.schedule.compute_seconds(),
            relative_latency_pct: baseline.map(|b| relative_pct(s.schedule.sys_latency, b)),
            pinned: s.state.pinned_count(),
            fused: s.state.fused_count(),
            remaps: if i == 3 { r.remap_log.len() } else { 0 },
            search_time_s: r.search_time.as_secs_f64(),
        })
        .collect()
}

/// Rows for one bandwidth of a sweep; `r` must cover all four steps.
pub fn sweep_rows(bandwidth: f64, r: &H2HResult) -> Vec<SweepRow> {
    let baseline = r.step(2).schedule.sys_latency;
    r.steps
        .iter()
        .enumerate()
        .map(|(i, s)| SweepRow {
            bandwidth_bytes_per_s: bandwidth,
            step: i + 1,
            sys_latency_s: s.schedule.sys_latency,
            sys_energy_j: s.schedule.sys_energy,
            comm_s: s.schedule.comm_seconds(),
            compute_s: s.schedule.compute_seconds(),
            relative_latency_pct: relative_pct(s.schedule.sys_latency, baseline),
        })
        .collect()
}

pub fn compare_row(model: &str, baseline: &Schedule, h2h: &Schedule) -> CompareRow {
    CompareRow {
        model: model.to_string(),
        baseline_latency_s: baseline.sys_latency,
        h2h_latency_s: h2h.sys_latency,
        latency_reduction_pct: reduction_pct(baseline.sys_latency, h2h.sys_latency),
        baseline_energy_j: baseline.sys_energy,
        h2h_energy_j: h2h.sys_energy,
        energy_reduction_pct: reduction_pct(baseline.sys_energy, h2h.sys_energy),
        baseline_comm_share: 1.0 - baseline.compute_share(),
        baseline_compute_share: baseline.compute_share(),
        h2h_comm_share: 1.0 - h2h.compute_share(),
        h2h_compute_share: h2h.compute_share(),
    }
}

pub fn write_csv<T: Serialize>(w: impl io::Write, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(file, rows)
}

pub fn read_csv<T: DeserializeOwned>(r: impl io::Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn read_csv_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}
