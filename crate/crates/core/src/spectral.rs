//! Best rank-k approximation of the adjacency matrix and L1 row
//! normalization — the spectral half of the initialization stage.
//!
//! `P-hat = argmin_{rank <= k} ||A - P||_F` is realized by keeping the k
//! eigenpairs of the symmetric matrix A with largest absolute eigenvalue;
//! Frobenius-optimal truncation of an indefinite symmetric matrix keeps the
//! largest magnitudes, not the largest signed values.
//!
//! Rows whose L1 norm vanishes (below `1e-12 * max` — the exact-zero
//! condition is measure-zero in floating point) form the set J0 and are
//! left unassigned by initialization.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::AdjacencyMatrix;
use crate::{Error, Result};

/// Node counts up to this bound get a full symmetric eigendecomposition;
/// larger matrices use iterative extraction of the top eigenpairs.
pub const DENSE_EIG_THRESHOLD: usize = 2048;

/// Relative zero threshold for row L1 norms.
pub const ZERO_ROW_REL_TOL: f64 = 1e-12;

/// Eigensolver selection for [`best_rank_k_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense below [`DENSE_EIG_THRESHOLD`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Factorized rank-k approximation `P-hat = V diag(lambda) V'`.
#[derive(Debug, Clone)]
pub struct RankKFactor {
    n: usize,
    k: usize,
    /// Row-major n x k orthonormal basis.
    basis: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl RankKFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Basis coefficients of node `i` (length k).
    pub fn basis_row(&self, i: usize) -> &[f64] {
        &self.basis[i * self.k..(i + 1) * self.k]
    }

    /// Materialize row `i` of `P-hat` into `out` (length n).
    pub fn row_into(&self, i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        let k = self.k;
        let mut coeff = [0.0f64; 8];
        let coeff: &mut [f64] = if k <= 8 {
            &mut coeff[..k]
        } else {
            out.fill(0.0);
            // Rare path for large k; allocate.
            return self.row_into_alloc(i, out);
        };
        let bi = self.basis_row(i);
        for l in 0..k {
            coeff[l] = bi[l] * self.eigenvalues[l];
        }
        for (j, slot) in out.iter_mut().enumerate() {
            let bj = &self.basis[j * k..j * k + k];
            let mut acc = 0.0;
            for l in 0..k {
                acc += coeff[l] * bj[l];
            }
            *slot = acc;
        }
    }

    fn row_into_alloc(&self, i: usize, out: &mut [f64]) {
        let k = self.k;
        let coeff: Vec<f64> = self
            .basis_row(i)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&b, &l)| b * l)
            .collect();
        for (j, slot) in out.iter_mut().enumerate() {
            let bj = &self.basis[j * k..j * k + k];
            *slot = coeff.iter().zip(bj).map(|(&c, &b)| c * b).sum();
        }
    }

    /// Dense reconstruction of `P-hat`. Intended for diagnostics and tests.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n]; self.n];
        for (i, row) in rows.iter_mut().enumerate() {
            self.row_into(i, row);
        }
        rows
    }

    /// `||A - P-hat||_F^2` against the originating matrix.
    pub fn frobenius_error_sq(&self, a: &AdjacencyMatrix) -> f64 {
        let n = self.n;
        let mut row = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            self.row_into(i, &mut row);
            for (j, &p) in row.iter().enumerate() {
                let d = a.entry(i, j) as f64 - p;
                acc += d * d;
            }
        }
        acc
    }

    /// Same factorization with all of `P-hat` scaled by `c`.
    pub fn scaled(&self, c: f64) -> RankKFactor {
        RankKFactor {
            n: self.n,
            k: self.k,
            basis: self.basis.clone(),
            eigenvalues: self.eigenvalues.iter().map(|&l| c * l).collect(),
        }
    }
}

/// Rank-k row space of the adjacency matrix after L1 normalization.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub factor: RankKFactor,
    /// `w_i = ||P-hat_i||_1`, clamped to exactly 0 on J0.
    pub row_weights: Vec<f64>,
    /// Normalized rows for nodes outside J0, in increasing node order.
    pub normalized_rows: Vec<Vec<f64>>,
    /// Node ids corresponding to `normalized_rows`.
    pub active_nodes: Vec<usize>,
    /// Nodes whose row L1 norm vanished.
    pub j0: Vec<usize>,
}

impl SpectralEmbedding {
    /// Eigenvalues and per-node row weights as CSV, for diagnostics.
    pub fn dump_diagnostics_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,eigenvalue")?;
        for (l, v) in self.factor.eigenvalues().iter().enumerate() {
            writeln!(w, "{l},{v}")?;
        }
        writeln!(w, "node,row_weight")?;
        for (i, v) in self.row_weights.iter().enumerate() {
            writeln!(w, "{i},{v}")?;
        }
        Ok(())
    }
}

/// Top-k eigenpairs of A by absolute eigenvalue, as a rank-k factorization.
pub fn best_rank_k(a: &AdjacencyMatrix, k: usize) -> Result<RankKFactor> {
    best_rank_k_with(a, k, EigenMethod::Auto)
}

pub fn best_rank_k_with(a: &AdjacencyMatrix, k: usize, method: EigenMethod) -> Result<RankKFactor> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "rank k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    let dense = match method {
        EigenMethod::Auto => n <= DENSE_EIG_THRESHOLD,
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
    };
    if dense {
        dense_topk(a, k)
    } else {
        let edges = a.edge_list();
        lanczos_topk(n, &edges, k)
    }
}

fn dense_topk(a: &AdjacencyMatrix, k: usize) -> Result<RankKFactor> {
    let n = a.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in a.neighbors(i) {
            m[(i, j)] = 1.0;
        }
    }
    let eig = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(
        Error::EigenNonConvergence {
            iterations: 0,
            residual: f64::NAN,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (ai, aj) = (eig.eigenvalues[i].abs(), eig.eigenvalues[j].abs());
        aj.total_cmp(&ai)
            .then(eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]))
            .then(i.cmp(&j))
    });
    let mut basis = vec![0.0; n * k];
    let mut eigenvalues = Vec::with_capacity(k);
    for (l, &idx) in order.iter().take(k).enumerate() {
        eigenvalues.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        for i in 0..n {
            basis[i * k + l] = col[i];
        }
    }
    Ok(RankKFactor {
        n,
        k,
        basis,
        eigenvalues,
    })
}

/// Top-k by |eigenvalue| via restarted Lanczos with full
/// reorthogonalization and explicit deflation of converged pairs. Works
/// directly off an edge list so callers in hot loops avoid dense scans.
///
/// A single Krylov space cannot see eigenvalue multiplicities, so after k
/// pairs converge one more deflated sweep must confirm that no remaining
/// eigenvalue matches the kept magnitudes (two disjoint cliques are the
/// canonical offender).
pub(crate) fn lanczos_topk(n: usize, edges: &[(u32, u32)], k: usize) -> Result<RankKFactor> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "rank k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    let matvec = |x: &[f64], y: &mut [f64]| {
        y.fill(0.0);
        for &(i, j) in edges {
            let (i, j) = (i as usize, j as usize);
            y[i] += x[j];
            y[j] += x[i];
        }
    };

    // Ritz pairs are accepted on their ambient residual ||A v - theta v||,
    // then polished with a Rayleigh-quotient update.
    let accept_tol = 5e-8;
    let sweep_len = (2 * k + 32).min(n);
    let extend_cap = (8 * sweep_len).min(n);
    let max_steps = 4000 + 200 * k;
    let max_restarts = 6 * k + 16;
    let mut steps = 0usize;

    // Deterministic start vectors; no caller-facing seed is needed.
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee ^ n as u64);

    let mut conv_vecs: Vec<Vec<f64>> = Vec::new();
    let mut conv_vals: Vec<f64> = Vec::new();
    let mut scale = 1.0f64;
    let mut last_residual = f64::INFINITY;

    let kth_magnitude = |vals: &[f64]| -> f64 {
        let mut mags: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        mags[k - 1]
    };

    'restart: for _ in 0..max_restarts {
        if steps >= max_steps {
            break;
        }
        let had_k_at_start = conv_vals.len() >= k;
        let kth_before = if had_k_at_start {
            kth_magnitude(&conv_vals)
        } else {
            f64::INFINITY
        };

        // Fresh start vector, orthogonal to everything converged.
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &conv_vecs);
        orthogonalize(&mut v, &conv_vecs);
        let norm = norm2(&v);
        if norm < 1e-12 {
            break; // converged set spans the whole space
        }
        scale_vec(&mut v, 1.0 / norm);

        let mut q: Vec<Vec<f64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        let mut broke_down = false;

        // Grow one Krylov space in blocks until the sweep's top-k Ritz
        // pairs settle (or the sweep proves irrelevant for confirmation).
        let (teig, beta_last, m) = loop {
            let target = (alphas.len() + sweep_len).min(extend_cap);
            while alphas.len() < target && !broke_down && steps < max_steps {
                steps += 1;
                let j = alphas.len();
                matvec(&q[j], &mut w);
                orthogonalize(&mut w, &conv_vecs);
                let alpha = dot(&q[j], &w);
                alphas.push(alpha);
                // Full reorthogonalization, two passes.
                orthogonalize(&mut w, &q);
                orthogonalize(&mut w, &q);
                let beta = norm2(&w);
                if beta <= 1e-12 * scale {
                    broke_down = true;
                } else {
                    betas.push(beta);
                    let mut next = w.clone();
                    scale_vec(&mut next, 1.0 / beta);
                    q.push(next);
                }
            }
            let m = alphas.len();
            if m == 0 {
                continue 'restart;
            }

            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let teig = nalgebra::SymmetricEigen::try_new(t, f64::EPSILON, 0).ok_or(
                Error::EigenNonConvergence {
                    iterations: steps,
                    residual: f64::NAN,
                },
            )?;
            let beta_last = if broke_down || m >= n { 0.0 } else { betas[m - 1] };
            let mut sweep_top = 0.0f64;
            for &tv in teig.eigenvalues.iter() {
                scale = scale.max(tv.abs());
                sweep_top = sweep_top.max(tv.abs());
            }

            // During a confirmation sweep, a remaining magnitude clearly
            // below the kept k-th means no hidden multiplicity: stop early
            // (Ritz estimates approach extremes from below).
            if had_k_at_start && sweep_top <= 0.98 * kth_before - accept_tol * scale {
                break 'restart;
            }

            let can_extend = !broke_down && m < extend_cap && steps < max_steps;
            if can_extend {
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&i, &j| {
                    teig.eigenvalues[j]
                        .abs()
                        .total_cmp(&teig.eigenvalues[i].abs())
                });
                let top_unsettled = order.iter().take(k).any(|&ri| {
                    beta_last * teig.eigenvectors.column(ri)[m - 1].abs() > accept_tol * scale
                });
                if top_unsettled {
                    continue;
                }
            }
            break (teig, beta_last, m);
        };

        // Harvest: assemble settled Ritz vectors in ambient space, verify
        // the true residual, polish with a Rayleigh quotient.
        let mut ritz_order: Vec<usize> = (0..m).collect();
        ritz_order.sort_by(|&i, &j| {
            teig.eigenvalues[j]
                .abs()
                .total_cmp(&teig.eigenvalues[i].abs())
        });
        let mut sweep_top = 0.0f64;
        let mut av = vec![0.0; n];
        for &ri in &ritz_order {
            let theta = teig.eigenvalues[ri];
            sweep_top = sweep_top.max(theta.abs());
            let s = teig.eigenvectors.column(ri);
            let est = beta_last * s[m - 1].abs();
            if est > accept_tol * scale {
                last_residual = last_residual.min(est);
                continue;
            }
            let mut vec = vec![0.0; n];
            for (step, qv) in q.iter().take(m).enumerate() {
                let c = s[step];
                if c != 0.0 {
                    for (slot, &qi) in vec.iter_mut().zip(qv) {
                        *slot += c * qi;
                    }
                }
            }
            orthogonalize(&mut vec, &conv_vecs);
            let nv = norm2(&vec);
            if nv < 1e-6 {
                continue; // direction already represented
            }
            scale_vec(&mut vec, 1.0 / nv);
            matvec(&vec, &mut av);
            let rayleigh = dot(&vec, &av);
            let res_sq: f64 = av
                .iter()
                .zip(&vec)
                .map(|(&a, &v)| (a - rayleigh * v) * (a - rayleigh * v))
                .sum();
            let res = res_sq.sqrt();
            if res <= 10.0 * accept_tol * scale {
                conv_vecs.push(vec);
                conv_vals.push(rayleigh);
            } else {
                last_residual = last_residual.min(res);
            }
        }

        // Confirmed done: this sweep began with k pairs in hand and found
        // nothing beating the kept magnitudes, so no multiplicity hides in
        // the deflated space.
        if had_k_at_start && sweep_top <= kth_before + accept_tol * scale {
            break 'restart;
        }
    }

    if conv_vals.len() < k {
        return Err(Error::EigenNonConvergence {
            iterations: steps,
            residual: last_residual,
        });
    }

    let mut order: Vec<usize> = (0..conv_vals.len()).collect();
    order.sort_by(|&i, &j| {
        conv_vals[j]
            .abs()
            .total_cmp(&conv_vals[i].abs())
            .then(conv_vals[j].total_cmp(&conv_vals[i]))
    });
    let mut basis = vec![0.0; n * k];
    let mut eigenvalues = Vec::with_capacity(k);
    for (l, &idx) in order.iter().take(k).enumerate() {
        eigenvalues.push(conv_vals[idx]);
        for i in 0..n {
            basis[i * k + l] = conv_vecs[idx][i];
        }
    }
    Ok(RankKFactor {
        n,
        k,
        basis,
        eigenvalues,
    })
}

/// Compute row L1 norms, the zero-row set J0, and the normalized rows.
pub fn normalize_rows(factor: RankKFactor) -> SpectralEmbedding {
    let n = factor.n();
    let mut row = vec![0.0; n];
    let mut weights = Vec::with_capacity(n);
    let mut raw_rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut max_w = 0.0f64;
    for i in 0..n {
        factor.row_into(i, &mut row);
        let w: f64 = row.iter().map(|v| v.abs()).sum();
        max_w = max_w.max(w);
        weights.push(w);
        raw_rows.push(row.clone());
    }
    let tau_zero = ZERO_ROW_REL_TOL * max_w;
    let mut normalized_rows = Vec::new();
    let mut active_nodes = Vec::new();
    let mut j0 = Vec::new();
    for (i, mut r) in raw_rows.into_iter().enumerate() {
        if weights[i] <= tau_zero {
            weights[i] = 0.0;
            j0.push(i);
        } else {
            let inv = 1.0 / weights[i];
            for v in &mut r {
                *v *= inv;
            }
            normalized_rows.push(r);
            active_nodes.push(i);
        }
    }
    SpectralEmbedding {
        factor,
        row_weights: weights,
        normalized_rows,
        active_nodes,
        j0,
    }
}

/// Rank-k truncation plus row normalization in one call.
pub fn spectral_embedding(
    a: &AdjacencyMatrix,
    k: usize,
    method: EigenMethod,
) -> Result<SpectralEmbedding> {
    Ok(normalize_rows(best_rank_k_with(a, k, method)?))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale_vec(a: &mut [f64], c: f64) {
    for v in a {
        *v *= c;
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        if c != 0.0 {
            for (slot, &bi) in v.iter_mut().zip(b) {
                *slot -= c * bi;
            }
        }
    }
}
