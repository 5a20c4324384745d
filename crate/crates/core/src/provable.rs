//! Leave-one-out variant: per-node initialization on the matrix with that
//! node removed, a single-node vote to refine the held-out label, and
//! permutation alignment of the per-node runs.
//!
//! Each of the n initializations may land on a different permutation of
//! community labels. The first run's labeling anchors the output; every
//! other node's label is mapped through the largest intersection between
//! the anchor run's communities and the node's own refined community.
//!
//! The n runs are independent (each reuses one seed stream split per node)
//! and execute in parallel; alignment is a sequential reduction.

use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;

use crate::graph::AdjacencyMatrix;
use crate::kmedian::KMedianConfig;
use crate::labels::LabelVector;
use crate::pipeline::initialize_with;
use crate::refine::vote_single_node;
use crate::rng::{substream, StreamTag};
use crate::spectral::EigenMethod;
use crate::{Error, Result};

/// One per-node run: the initialization on `A^(-i)` augmented back to n
/// entries (0 at position i), plus the refined label for node i.
#[derive(Debug, Clone)]
pub struct LeaveOneOutRecord {
    pub node: usize,
    /// Length-n labels from initializing on the minor, with 0 inserted at
    /// `node` (and at any J0 node of the minor).
    pub labels_minus: LabelVector,
    /// The vote for node i against `labels_minus`, in `[k]`.
    pub refined_self: u32,
}

/// Tuning for the leave-one-out runs. The minors use the iterative
/// eigensolver (n dense decompositions would dominate the runtime) and a
/// lighter k-median search than the standalone pipeline.
#[derive(Debug, Clone)]
pub struct ProvableConfig {
    pub eigen: EigenMethod,
    pub kmedian: KMedianConfig,
}

impl Default for ProvableConfig {
    fn default() -> Self {
        ProvableConfig {
            eigen: EigenMethod::Lanczos,
            kmedian: KMedianConfig {
                max_swaps: 0,
                swap_candidates: 0,
                restarts: 1,
                max_iterations: 40,
                ..KMedianConfig::default()
            },
        }
    }
}

/// Initialization on `A^(-i)` plus the single-node refinement for `i`.
pub fn leave_one_out(
    a: &AdjacencyMatrix,
    k: usize,
    node: usize,
    seed: u64,
) -> Result<LeaveOneOutRecord> {
    let edges = a.edge_list();
    leave_one_out_on_edges(a, &edges, k, node, seed, &ProvableConfig::default())
}

fn leave_one_out_on_edges(
    a: &AdjacencyMatrix,
    parent_edges: &[(u32, u32)],
    k: usize,
    node: usize,
    seed: u64,
    cfg: &ProvableConfig,
) -> Result<LeaveOneOutRecord> {
    let n = a.n();
    if node >= n {
        return Err(Error::IndexOutOfBounds {
            index: node,
            size: n,
        });
    }
    if n < k + 1 {
        return Err(Error::InvalidInput(format!(
            "need n >= k + 1 (n = {n}, k = {k})"
        )));
    }
    // Minor built straight from the parent edge list; repeated dense scans
    // across the n runs would swamp everything else.
    let node32 = node as u32;
    let minor_edges = parent_edges.iter().filter_map(|&(x, y)| {
        if x == node32 || y == node32 {
            None
        } else {
            let shift = |v: u32| if v > node32 { v - 1 } else { v } as usize;
            Some((shift(x), shift(y)))
        }
    });
    let minor = AdjacencyMatrix::from_edges(n - 1, minor_edges)?;

    let run_seed = substream(seed, StreamTag::LeaveOneOut, node as u64, 0).next_u64();
    let km = KMedianConfig {
        seed: run_seed,
        ..cfg.kmedian.clone()
    };
    let init = initialize_with(&minor, k, cfg.eigen, &km)?;

    // Augment to n entries with 0 at the held-out position.
    let mut labels = Vec::with_capacity(n);
    for j in 0..n - 1 {
        if j == node {
            labels.push(0);
        }
        labels.push(init.labels.get(j));
    }
    if node == n - 1 {
        labels.push(0);
    }
    let labels_minus = LabelVector::new(labels, k)?;
    let refined_self = vote_single_node(a, &labels_minus, node)?;
    Ok(LeaveOneOutRecord {
        node,
        labels_minus,
        refined_self,
    })
}

/// All n leave-one-out runs, in parallel.
pub fn leave_one_out_all(
    a: &AdjacencyMatrix,
    k: usize,
    seed: u64,
    cfg: &ProvableConfig,
) -> Result<Vec<LeaveOneOutRecord>> {
    let edges = a.edge_list();
    (0..a.n())
        .into_par_iter()
        .map(|i| leave_one_out_on_edges(a, &edges, k, i, seed, cfg))
        .collect()
}

/// Like [`leave_one_out_all`], also reporting each run's wall time.
pub fn leave_one_out_all_timed(
    a: &AdjacencyMatrix,
    k: usize,
    seed: u64,
    cfg: &ProvableConfig,
) -> Result<(Vec<LeaveOneOutRecord>, Vec<std::time::Duration>)> {
    let edges = a.edge_list();
    let both: Result<Vec<(LeaveOneOutRecord, std::time::Duration)>> = (0..a.n())
        .into_par_iter()
        .map(|i| {
            let t = std::time::Instant::now();
            let rec = leave_one_out_on_edges(a, &edges, k, i, seed, cfg)?;
            Ok((rec, t.elapsed()))
        })
        .collect();
    Ok(both?.into_iter().unzip())
}

/// Align the per-run label permutations against the first run.
///
/// Node 0 takes its own refined label. Every other node i maps through
/// `argmax_u |{j: run_0 labels j = u} and {j: run_i labels j = refined_i}|`,
/// ties to the smallest u.
pub fn align_records(records: &[LeaveOneOutRecord], n: usize, k: usize) -> Result<LabelVector> {
    if records.len() != n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} records for n = {n}",
            records.len()
        )));
    }
    let anchor = &records[0].labels_minus;
    let mut out = LabelVector::zeros(n, k);
    out.set(0, records[0].refined_self);
    let mut overlap = vec![0usize; k + 1];
    for (i, rec) in records.iter().enumerate().skip(1) {
        debug_assert_eq!(rec.node, i);
        overlap.fill(0);
        let target = rec.refined_self;
        for j in 0..n {
            if rec.labels_minus.get(j) == target {
                overlap[anchor.get(j) as usize] += 1;
            }
        }
        // Smallest u wins ties; label 0 in the anchor never counts.
        let mut best_u = 1u32;
        let mut best = 0usize;
        for (u, &c) in overlap.iter().enumerate().skip(1) {
            if c > best {
                best = c;
                best_u = u as u32;
            }
        }
        out.set(i, best_u);
    }
    Ok(out)
}

/// The full leave-one-out estimator with alignment.
pub fn provable_cluster(a: &AdjacencyMatrix, k: usize, seed: u64) -> Result<LabelVector> {
    provable_cluster_with(a, k, seed, &ProvableConfig::default())
}

pub fn provable_cluster_with(
    a: &AdjacencyMatrix,
    k: usize,
    seed: u64,
    cfg: &ProvableConfig,
) -> Result<LabelVector> {
    let records = leave_one_out_all(a, k, seed, cfg)?;
    align_records(&records, a.n(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::misclustering_loss;

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
    fn refined_self_tracks_own_clique() {
        let (a, _) = two_cliques(5, 5);
        for node in [0usize, 2, 7] {
            let rec = leave_one_out(&a, 2, node, 42).unwrap();
            // The run's own label for i's clique-mates.
            let mate = if node < 5 { (node + 1) % 5 } else { 5 + (node - 4) % 5 };
            let mate_label = rec.labels_minus.get(mate);
            assert!(mate_label >= 1);
            assert_eq!(rec.refined_self, mate_label, "node {node}");
        }
    }

    #[test]
    fn isolated_node_gets_tie_break_label_one() {
        // Two cliques of 4 plus an isolated node 8.
        let (cl, _) = two_cliques(4, 4);
        let mut edges = cl.edge_list();
        let a = AdjacencyMatrix::from_edges(
            9,
            edges.drain(..).map(|(x, y)| (x as usize, y as usize)),
        )
        .unwrap();
        let rec = leave_one_out(&a, 2, 8, 7).unwrap();
        assert_eq!(rec.refined_self, 1);
    }

    #[test]
    fn recovers_two_cliques_up_to_permutation() {
        let (a, truth) = two_cliques(6, 6);
        let out = provable_cluster(&a, 2, 123).unwrap();
        let loss = misclustering_loss(&truth, &out).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn degenerate_smallest_instance_runs() {
        // n = k + 1 smoke test; correctness of labels is tie-break noise.
        let a = AdjacencyMatrix::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let out = provable_cluster(&a, 2, 5).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|&l| (1..=2).contains(&l)));
    }

    #[test]
    fn rejects_too_small_n() {
        let a = AdjacencyMatrix::from_edges(2, vec![(0, 1)]).unwrap();
        assert!(provable_cluster(&a, 2, 0).is_err());
    }

    #[test]
    fn one_record_per_node() {
        let (a, _) = two_cliques(4, 4);
        let records = leave_one_out_all(&a, 2, 9, &ProvableConfig::default()).unwrap();
        assert_eq!(records.len(), a.n());
        for (i, rec) in records.iter().enumerate() {
            assert_eq!(rec.node, i);
            assert_eq!(rec.labels_minus.get(i), 0);
            assert!(rec.refined_self >= 1);
        }
    }

    #[test]
    fn alignment_invariant_under_relabeling_one_run() {
        let (a, _) = two_cliques(5, 6);
        let n = a.n();
        let records = leave_one_out_all(&a, 2, 31, &ProvableConfig::default()).unwrap();
        let base = align_records(&records, n, 2).unwrap();

        // Permute a non-anchor run's labels (and its refined label): the
        // final labeling must not change at all.
        let mut permuted = records.clone();
        let swap = [2u32, 1u32];
        permuted[4].labels_minus = permuted[4].labels_minus.permuted(&swap).unwrap();
        permuted[4].refined_self = swap[permuted[4].refined_self as usize - 1];
        let out = align_records(&permuted, n, 2).unwrap();
        assert_eq!(out, base);

        // Permuting the anchor run permutes the output globally: the
        // partition is unchanged (zero loss against the original).
        let mut permuted0 = records.clone();
        permuted0[0].labels_minus = permuted0[0].labels_minus.permuted(&swap).unwrap();
        permuted0[0].refined_self = swap[permuted0[0].refined_self as usize - 1];
        let out0 = align_records(&permuted0, n, 2).unwrap();
        assert_eq!(misclustering_loss(&base, &out0).unwrap(), 0.0);
    }
}
