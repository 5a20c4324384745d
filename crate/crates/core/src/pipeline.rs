//! End-to-end estimators: spectral initialization and the full
//! initialize-then-refine pipeline.

use std::time::{Duration, Instant};

use crate::graph::AdjacencyMatrix;
use crate::kmedian::{weighted_kmedian_with, KMedianConfig};
use crate::labels::LabelVector;
use crate::refine::refine;
use crate::spectral::{spectral_embedding, EigenMethod};
use crate::Result;

/// Output of the initialization stage.
#[derive(Debug, Clone)]
pub struct InitOutcome {
    /// Labels in `[k]`, with 0 for zero-weight (J0) nodes.
    pub labels: LabelVector,
    /// Weighted k-median objective reached.
    pub kmedian_cost: f64,
    /// Number of J0 nodes left unassigned.
    pub unassigned: usize,
}

/// Spectral initialization: rank-k truncation, L1 row normalization, and
/// weighted k-median on the normalized rows.
pub fn initialize(a: &AdjacencyMatrix, k: usize, seed: u64) -> Result<InitOutcome> {
    initialize_with(
        a,
        k,
        EigenMethod::Auto,
        &KMedianConfig {
            seed,
            ..KMedianConfig::default()
        },
    )
}

pub fn initialize_with(
    a: &AdjacencyMatrix,
    k: usize,
    eigen: EigenMethod,
    kmedian: &KMedianConfig,
) -> Result<InitOutcome> {
    let embedding = spectral_embedding(a, k, eigen)?;
    if embedding.active_nodes.is_empty() {
        // Rank-k approximation vanished (e.g. an empty graph): every node
        // sits in J0 and stays unassigned.
        return Ok(InitOutcome {
            labels: LabelVector::zeros(a.n(), k),
            kmedian_cost: 0.0,
            unassigned: a.n(),
        });
    }
    let km = if embedding.active_nodes.len() <= k {
        // Fewer informative rows than communities: one cluster each.
        crate::kmedian::KMedianResult {
            labels: (0..embedding.active_nodes.len()).collect(),
            centers: embedding.normalized_rows.clone(),
            cost: 0.0,
            iterations: 0,
        }
    } else {
        let weights: Vec<f64> = embedding
            .active_nodes
            .iter()
            .map(|&i| embedding.row_weights[i])
            .collect();
        weighted_kmedian_with(&embedding.normalized_rows, &weights, k, kmedian)?
    };
    let mut labels = LabelVector::zeros(a.n(), k);
    for (pos, &node) in embedding.active_nodes.iter().enumerate() {
        labels.set(node, km.labels[pos] as u32 + 1);
    }
    Ok(InitOutcome {
        labels,
        kmedian_cost: km.cost,
        unassigned: embedding.j0.len(),
    })
}

/// Full pipeline output with stage wall times.
#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub labels: LabelVector,
    pub init_labels: LabelVector,
    pub init_time: Duration,
    pub refine_time: Duration,
}

/// Initialization followed by `rounds` refinement rounds.
pub fn cluster(a: &AdjacencyMatrix, k: usize, rounds: usize, seed: u64) -> Result<ClusterOutcome> {
    let t0 = Instant::now();
    let init = initialize(a, k, seed)?;
    let init_time = t0.elapsed();
    let t1 = Instant::now();
    let labels = if rounds == 0 {
        init.labels.clone()
    } else {
        refine(a, &init.labels, rounds)?
    };
    Ok(ClusterOutcome {
        labels,
        init_labels: init.labels,
        init_time,
        refine_time: t1.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques(s1: usize, s2: usize) -> (AdjacencyMatrix, LabelVector) {
        let n = s1 + s2;
        let mut edges = Vec::new();
        for i in 0..s1 {
            for j in (i + 1)..s1 {
                edges.push((i, j));
            }
        }
        for i in 0..s2 {
            for j in (i + 1)..s2 {
                edges.push((s1 + i, s1 + j));
            }
        }
        let a = AdjacencyMatrix::from_edges(n, edges).unwrap();
        let labels: Vec<u32> = (0..n).map(|i| if i < s1 { 1 } else { 2 }).collect();
        (a, LabelVector::new(labels, 2).unwrap())
    }

    #[test]
    fn recovers_two_cliques_exactly() {
        let (a, truth) = two_cliques(6, 6);
        for seed in 0..5 {
            let out = cluster(&a, 2, 1, seed).unwrap();
            let loss = crate::theory::misclustering_loss(&truth, &out.labels).unwrap();
            assert_eq!(loss, 0.0, "seed {seed}");
        }
    }

    #[test]
    fn zero_rounds_returns_raw_initialization() {
        let (a, _) = two_cliques(5, 5);
        let out = cluster(&a, 2, 0, 3).unwrap();
        assert_eq!(out.labels, out.init_labels);
    }
}
