//! Synchronous majority-vote label refinement by normalized edge counting.
//!
//! One round recomputes every node's label as the community it connects to
//! with the highest relative frequency: `argmax_u (1/|{j: old_j = u}|) *
//! sum_{j: old_j = u} A[i][j]`, reading only the previous round's labels.
//! Rounds are sequential; within a round the per-node updates are
//! independent and order-free.
//!
//! Empty communities score minus infinity (the normalizer is undefined at
//! zero) and are never selected. Unassigned nodes (label 0) contribute to
//! no community's numerator or denominator but do get reassigned. Argmax
//! ties break toward the smallest label.

use crate::graph::AdjacencyMatrix;
use crate::labels::LabelVector;
use crate::{Error, Result};

/// One synchronous refinement round.
pub fn refine_once(a: &AdjacencyMatrix, labels: &LabelVector) -> Result<LabelVector> {
    refine_once_counted(a, labels).map(|(l, _)| l)
}

/// One round, also reporting the number of adjacency entries touched (for
/// cost accounting: n^2 on dense storage, n + 2|E| on sparse, plus n*k
/// argmax work).
pub fn refine_once_counted(
    a: &AdjacencyMatrix,
    labels: &LabelVector,
) -> Result<(LabelVector, u64)> {
    let n = a.n();
    let k = labels.k();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "labels length {} for n = {n}",
            labels.len()
        )));
    }
    let counts = labels.counts();
    if counts[1..].iter().all(|&c| c == 0) {
        return Err(Error::InvalidInput(
            "all communities are empty; nothing to vote on".into(),
        ));
    }
    let inv_size: Vec<f64> = counts[1..]
        .iter()
        .map(|&c| if c == 0 { f64::NAN } else { 1.0 / c as f64 })
        .collect();

    let mut out = LabelVector::zeros(n, k);
    let mut ops: u64 = 0;
    let mut edge_counts = vec![0u64; k + 1];
    for i in 0..n {
        edge_counts.fill(0);
        if let Some(row) = a.dense_row(i) {
            ops += n as u64;
            for (j, &b) in row.iter().enumerate() {
                if b != 0 {
                    edge_counts[labels.get(j) as usize] += 1;
                }
            }
        } else {
            for j in a.neighbors(i) {
                ops += 1;
                edge_counts[labels.get(j) as usize] += 1;
            }
        }
        ops += k as u64;
        out.set(i, best_label(&edge_counts[1..], &inv_size, &counts[1..]));
    }
    Ok((out, ops))
}

/// Argmax of `edge_count[u] / size[u]` over non-empty communities, ties to
/// the smallest label. Slices are indexed by `u - 1`.
pub(crate) fn best_label(edge_counts: &[u64], inv_size: &[f64], sizes: &[usize]) -> u32 {
    let mut best_u = 0u32;
    let mut best_score = f64::NEG_INFINITY;
    for (idx, (&c, &inv)) in edge_counts.iter().zip(inv_size).enumerate() {
        if sizes[idx] == 0 {
            continue;
        }
        let score = c as f64 * inv;
        if score > best_score {
            best_score = score;
            best_u = idx as u32 + 1;
        }
    }
    debug_assert!(best_u >= 1);
    best_u
}

/// `rounds` synchronous refinement rounds; `rounds = 0` returns the input
/// unchanged. Stops early at a fixed point (further rounds are identities).
pub fn refine(a: &AdjacencyMatrix, labels: &LabelVector, rounds: usize) -> Result<LabelVector> {
    let mut current = labels.clone();
    for _ in 0..rounds {
        let next = refine_once(a, &current)?;
        if next == current {
            break;
        }
        current = next;
    }
    Ok(current)
}

/// Vote for a single node against a frozen label vector, using the same
/// scoring rule as a refinement round. Used by the leave-one-out variant.
pub(crate) fn vote_single_node(
    a: &AdjacencyMatrix,
    labels: &LabelVector,
    node: usize,
) -> Result<u32> {
    let k = labels.k();
    let counts = labels.counts();
    if counts[1..].iter().all(|&c| c == 0) {
        // Degenerate leave-one-out instance (every node unassigned after
        // initialization): fall back to the smallest label.
        return Ok(1);
    }
    let inv_size: Vec<f64> = counts[1..]
        .iter()
        .map(|&c| if c == 0 { f64::NAN } else { 1.0 / c as f64 })
        .collect();
    let mut edge_counts = vec![0u64; k];
    for j in a.neighbors(node) {
        let l = labels.get(j);
        if l > 0 {
            edge_counts[l as usize - 1] += 1;
        }
    }
    Ok(best_label(&edge_counts, &inv_size, &counts[1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two disjoint cliques of the given sizes, nodes numbered
    /// consecutively, plus the matching ground-truth labels.
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
    fn correct_cliques_are_a_fixed_point() {
        let (a, truth) = two_cliques(4, 4);
        let out = refine_once(&a, &truth).unwrap();
        assert_eq!(out, truth);
    }

    #[test]
    fn single_mislabel_flips_back() {
        let (a, truth) = two_cliques(4, 4);
        let mut bad = truth.clone();
        bad.set(0, 2);
        let out = refine_once(&a, &bad).unwrap();
        assert_eq!(out, truth);
    }

    #[test]
    fn unassigned_node_adopts_its_neighborhood() {
        // Node 0 unassigned, connected only to community-2 nodes.
        let a = AdjacencyMatrix::from_edges(5, vec![(0, 3), (0, 4), (1, 2), (3, 4)]).unwrap();
        let labels = LabelVector::new(vec![0, 1, 1, 2, 2], 2).unwrap();
        let out = refine_once(&a, &labels).unwrap();
        assert_eq!(out.get(0), 2);
    }

    #[test]
    fn zero_rounds_is_identity() {
        let (a, truth) = two_cliques(3, 3);
        let mut start = truth.clone();
        start.set(2, 2);
        let out = refine(&a, &start, 0).unwrap();
        assert_eq!(out, start);
    }

    #[test]
    fn fixed_point_is_idempotent() {
        let (a, truth) = two_cliques(5, 4);
        let r1 = refine(&a, &truth, 1).unwrap();
        let r10 = refine(&a, &truth, 10).unwrap();
        assert_eq!(r1, r10);
    }

    #[test]
    fn all_empty_clusters_is_an_error() {
        let a = AdjacencyMatrix::from_edges(3, vec![(0, 1)]).unwrap();
        let labels = LabelVector::zeros(3, 2);
        assert!(matches!(
            refine_once(&a, &labels),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn relabel_equivariance() {
        let (a, truth) = two_cliques(4, 5);
        let mut start = truth.clone();
        start.set(1, 2);
        start.set(6, 0);
        let out = refine_once(&a, &start).unwrap();
        let perm = [2u32, 1u32];
        let permuted_in = start.permuted(&perm).unwrap();
        let permuted_out = refine_once(&a, &permuted_in).unwrap();
        assert_eq!(permuted_out, out.permuted(&perm).unwrap());
    }

    #[test]
    fn empty_cluster_is_never_selected() {
        // k = 3 but nobody carries label 3; the output must stay in {1,2}.
        let (a, _) = two_cliques(4, 4);
        let labels = LabelVector::new(vec![1, 1, 1, 1, 2, 2, 2, 2], 3).unwrap();
        let out = refine_once(&a, &labels).unwrap();
        assert!(out.iter().all(|&l| l == 1 || l == 2));
    }

    #[test]
    fn op_counts_are_quadratic_dense_linear_sparse() {
        // Dense storage touches every row entry: n^2 + n*k ops per round.
        let mut dense_ops = Vec::new();
        for &n in &[100usize, 200, 400] {
            let a = AdjacencyMatrix::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
            let labels =
                LabelVector::new((0..n).map(|i| 1 + (i % 2) as u32).collect(), 2).unwrap();
            let (_, ops) = refine_once_counted(&a, &labels).unwrap();
            assert_eq!(ops, (n * n + 2 * n) as u64);
            dense_ops.push(ops);
        }
        let ratio = dense_ops[2] as f64 / dense_ops[0] as f64;
        assert!((14.0..=18.0).contains(&ratio), "dense growth {ratio}");

        // Sparse storage touches each adjacency entry once: 2|E| + n*k.
        let mut sparse_ops = Vec::new();
        for &n in &[4200usize, 8400] {
            let a = AdjacencyMatrix::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
            let labels =
                LabelVector::new((0..n).map(|i| 1 + (i % 2) as u32).collect(), 2).unwrap();
            let (_, ops) = refine_once_counted(&a, &labels).unwrap();
            assert_eq!(ops, (2 * n + 2 * n) as u64);
            sparse_ops.push(ops);
        }
        let ratio = sparse_ops[1] as f64 / sparse_ops[0] as f64;
        assert!((1.8..=2.2).contains(&ratio), "sparse growth {ratio}");
    }
}
