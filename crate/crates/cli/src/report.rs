//! JSON run reports. Reports carry wall times and per-repetition records;
//! aggregates are always recomputable from the records.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Result;
use serde::Serialize;

use speclore::graph::AdjacencyMatrix;
use speclore::labels::LabelVector;
use speclore::pipeline::ClusterOutcome;
use speclore::provable::{align_records, leave_one_out_all_timed, ProvableConfig};

pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
pub struct ClusterReport {
    pub command: String,
    pub method: String,
    pub seed: u64,
    pub n: usize,
    pub edges: usize,
    pub k: usize,
    pub rounds: Option<usize>,
    pub unassigned_after_init: Option<usize>,
    pub init_seconds: Option<f64>,
    pub refine_seconds: Option<f64>,
    pub total_seconds: f64,
    /// Leave-one-out wall time per node, seconds (provable method only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node_seconds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node_seconds_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node_seconds_max: Option<f64>,
}

impl ClusterReport {
    pub fn speclore(
        args: &crate::ClusterArgs,
        a: &AdjacencyMatrix,
        out: &ClusterOutcome,
    ) -> Self {
        let unassigned = out.init_labels.unassigned_count();
        ClusterReport {
            command: command_echo(),
            method: "speclore".into(),
            seed: args.seed,
            n: a.n(),
            edges: a.edge_count(),
            k: args.k,
            rounds: Some(args.rounds),
            unassigned_after_init: Some(unassigned),
            init_seconds: Some(out.init_time.as_secs_f64()),
            refine_seconds: Some(out.refine_time.as_secs_f64()),
            total_seconds: (out.init_time + out.refine_time).as_secs_f64(),
            per_node_seconds: None,
            per_node_seconds_mean: None,
            per_node_seconds_max: None,
        }
    }

    pub fn provable(
        args: &crate::ClusterArgs,
        a: &AdjacencyMatrix,
        total: Duration,
        per_node: Vec<f64>,
    ) -> Self {
        let mean = per_node.iter().sum::<f64>() / per_node.len().max(1) as f64;
        let max = per_node.iter().cloned().fold(0.0f64, f64::max);
        ClusterReport {
            command: command_echo(),
            method: "provable".into(),
            seed: args.seed,
            n: a.n(),
            edges: a.edge_count(),
            k: args.k,
            rounds: None,
            unassigned_after_init: None,
            init_seconds: None,
            refine_seconds: None,
            total_seconds: total.as_secs_f64(),
            per_node_seconds: Some(per_node),
            per_node_seconds_mean: Some(mean),
            per_node_seconds_max: Some(max),
        }
    }
}

/// Leave-one-out clustering with per-node wall times.
pub fn timed_leave_one_out(
    a: &AdjacencyMatrix,
    k: usize,
    seed: u64,
) -> Result<(LabelVector, Vec<f64>)> {
    let cfg = ProvableConfig::default();
    let (records, times) = leave_one_out_all_timed(a, k, seed, &cfg)?;
    let per_node = times.iter().map(Duration::as_secs_f64).collect();
    let labels = align_records(&records, a.n(), k)?;
    Ok((labels, per_node))
}

pub fn command_echo() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}
