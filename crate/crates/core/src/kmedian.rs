//! Approximate weighted k-median clustering under the L1 metric.
//!
//! The solver runs (a) weighted seeding proportional to weight times
//! distance, (b) alternating assignment / coordinate-wise weighted-median
//! center updates until the assignment is stable, and (c) a single-medoid
//! swap local search that accepts swaps improving cost by more than 1e-9
//! relative, up to a budget. Centers live in the full row space; only swap
//! moves propose medoid candidates. Everything is deterministic for a fixed
//! seed, independent of thread count.
//!
//! [`exact_kmedian_bruteforce`] enumerates all partitions of up to 14
//! points and serves as the optimality oracle.

use rand::Rng;

use crate::rng::{substream, StreamTag};
use crate::{Error, Result};

/// Relative improvement below which a swap is not accepted.
const SWAP_REL_TOL: f64 = 1e-9;

/// Instances with at most this many points propose every point as a swap
/// candidate; larger instances propose the worst-fitting few.
const EXHAUSTIVE_SWAP_LIMIT: usize = 256;

#[derive(Debug, Clone)]
pub struct KMedianConfig {
    /// Accepted-swap budget for the local search.
    pub max_swaps: usize,
    /// Swap proposals per round on large instances (ranked by weighted
    /// distance to the current center). Small instances always propose
    /// every point.
    pub swap_candidates: usize,
    /// Independent seedings; the best final cost wins.
    pub restarts: usize,
    /// Guard on alternation rounds per restart.
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for KMedianConfig {
    fn default() -> Self {
        KMedianConfig {
            max_swaps: 20,
            swap_candidates: 16,
            restarts: 3,
            max_iterations: 200,
            seed: 0,
        }
    }
}

/// Output of the k-median solver. Cluster ids are 0-based.
#[derive(Debug, Clone)]
pub struct KMedianResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// `sum_i w_i * ||x_i - c_{labels_i}||_1`, recomputed exactly at the end.
    pub cost: f64,
    /// Alternation rounds used, summed over restarts and swap refits.
    pub iterations: usize,
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum()
}

/// Exact weighted L1 objective for a given labeling and center set.
pub fn kmedian_cost(
    points: &[Vec<f64>],
    weights: &[f64],
    labels: &[usize],
    centers: &[Vec<f64>],
) -> Result<f64> {
    if points.len() != weights.len() || points.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "points {}, weights {}, labels {}",
            points.len(),
            weights.len(),
            labels.len()
        )));
    }
    let mut acc = 0.0;
    for ((p, &w), &l) in points.iter().zip(weights).zip(labels) {
        let c = centers.get(l).ok_or(Error::LabelOutOfRange {
            label: l as u32,
            k: centers.len(),
        })?;
        acc += w * l1_distance(p, c);
    }
    Ok(acc)
}

/// Constant-factor approximate weighted k-median.
pub fn weighted_kmedian(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
    max_swaps: usize,
    seed: u64,
) -> Result<KMedianResult> {
    weighted_kmedian_with(
        points,
        weights,
        k,
        &KMedianConfig {
            max_swaps,
            seed,
            ..KMedianConfig::default()
        },
    )
}

pub fn weighted_kmedian_with(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
    cfg: &KMedianConfig,
) -> Result<KMedianResult> {
    validate_instance(points, weights, k)?;

    let n = points.len();
    let dim = points[0].len();
    let mut points_t = vec![0.0f64; n * dim];
    for (i, p) in points.iter().enumerate() {
        for (d, &v) in p.iter().enumerate() {
            points_t[d * n + i] = v;
        }
    }
    let mut best: Option<KMedianResult> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = substream(cfg.seed, StreamTag::KMedian, restart as u64, 0);
        let mut state = State::seeded(points, &points_t, weights, k, &mut rng);
        state.alternate(cfg.max_iterations);
        state.swap_search(cfg);
        let result = state.into_result()?;
        match &best {
            Some(b) if b.cost <= result.cost => {}
            _ => best = Some(result),
        }
    }
    Ok(best.expect("at least one restart"))
}

fn validate_instance(points: &[Vec<f64>], weights: &[f64], k: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points to cluster".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("ragged point dimensions".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput("weights must be finite and >= 0".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for {} points",
            points.len()
        )));
    }
    if distinct_count(points, k) < k {
        return Err(Error::Degenerate(format!(
            "k = {k} exceeds the number of distinct points"
        )));
    }
    Ok(())
}

/// Counts distinct points, stopping once `need` are found.
fn distinct_count(points: &[Vec<f64>], need: usize) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !reps.iter().any(|r| r.as_slice() == p.as_slice()) {
            reps.push(p);
            if reps.len() >= need {
                break;
            }
        }
    }
    reps.len()
}

struct State<'a> {
    points: &'a [Vec<f64>],
    /// Column-major copy (dim x n) for the coordinate-wise median step.
    points_t: &'a [f64],
    weights: &'a [f64],
    k: usize,
    centers: Vec<Vec<f64>>,
    labels: Vec<usize>,
    /// Distance from every point to every center (n x k, row-major).
    dist: Vec<f64>,
    cost: f64,
    iterations: usize,
}

impl<'a> State<'a> {
    fn seeded(
        points: &'a [Vec<f64>],
        points_t: &'a [f64],
        weights: &'a [f64],
        k: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let centers = seed_centers(points, weights, k, rng);
        let labels = vec![0; points.len()];
        let mut s = State {
            points,
            points_t,
            weights,
            k,
            centers,
            labels,
            dist: vec![0.0; points.len() * k],
            cost: f64::INFINITY,
            iterations: 0,
        };
        s.assign();
        s
    }

    /// Nearest-center assignment; ties go to the lowest center index.
    /// Also refreshes the point-to-center distance cache.
    fn assign(&mut self) {
        let k = self.k;
        let mut cost = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            let row = &mut self.dist[i * k..(i + 1) * k];
            let mut best_l = 0usize;
            let mut best_d = f64::INFINITY;
            for (l, c) in self.centers.iter().enumerate() {
                let d = l1_distance(p, c);
                row[l] = d;
                if d < best_d {
                    best_d = d;
                    best_l = l;
                }
            }
            self.labels[i] = best_l;
            cost += self.weights[i] * best_d;
        }
        self.cost = cost;
    }

    /// Coordinate-wise weighted median per cluster; empty clusters are
    /// re-seeded on the point with the largest weighted distance.
    fn update_centers(&mut self) {
        let n = self.points.len();
        let dim = self.points[0].len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        let mut scratch: Vec<(f64, f64)> = Vec::new();
        for l in 0..self.k {
            if members[l].is_empty() {
                self.centers[l] = self.points[self.worst_fit_point()].clone();
                continue;
            }
            for d in 0..dim {
                let col = &self.points_t[d * n..(d + 1) * n];
                scratch.clear();
                scratch.extend(members[l].iter().map(|&i| (col[i], self.weights[i])));
                self.centers[l][d] = weighted_median(&mut scratch);
            }
        }
    }

    fn worst_fit_point(&self) -> usize {
        let mut best = 0usize;
        let mut best_score = f64::MIN;
        for i in 0..self.points.len() {
            let score = self.weights[i] * self.dist[i * self.k + self.labels[i]];
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }

    /// Medoid-relaxation cost of replacing center `l` with point `cand`,
    /// from the distance cache plus one fresh distance column.
    fn quick_swap_cost(&self, l: usize, cand: usize) -> f64 {
        let k = self.k;
        let cand_point = &self.points[cand];
        let mut cost = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            let d_new = l1_distance(p, cand_point);
            let row = &self.dist[i * k..(i + 1) * k];
            let mut best = d_new;
            for (l2, &d) in row.iter().enumerate() {
                if l2 != l && d < best {
                    best = d;
                }
            }
            cost += self.weights[i] * best;
        }
        cost
    }

    /// Assignment / median alternation until the labeling is stable.
    fn alternate(&mut self, max_iterations: usize) {
        let mut prev = self.labels.clone();
        for _ in 0..max_iterations {
            self.iterations += 1;
            self.update_centers();
            self.assign();
            if self.labels == prev {
                break;
            }
            prev.clone_from(&self.labels);
        }
    }

    /// First-improvement single-medoid swap search. Proposals are scored
    /// cheaply against the medoid relaxation (cached distances plus one
    /// fresh column); only accepted swaps pay for a median refit.
    fn swap_search(&mut self, cfg: &KMedianConfig) {
        if cfg.max_swaps == 0 {
            return;
        }
        let mut accepted = 0usize;
        'outer: while accepted < cfg.max_swaps {
            let candidates = self.swap_candidates(cfg);
            for &cand in &candidates {
                for l in 0..self.k {
                    let quick = self.quick_swap_cost(l, cand);
                    if quick < self.cost * (1.0 - SWAP_REL_TOL) {
                        self.centers[l] = self.points[cand].clone();
                        self.assign();
                        self.alternate(cfg.max_iterations);
                        accepted += 1;
                        continue 'outer;
                    }
                }
            }
            break;
        }
    }

    /// Every point on small instances; otherwise the worst-fitting few by
    /// weighted distance (deterministic order).
    fn swap_candidates(&self, cfg: &KMedianConfig) -> Vec<usize> {
        let n = self.points.len();
        if n <= EXHAUSTIVE_SWAP_LIMIT {
            return (0..n).collect();
        }
        let mut scored: Vec<(f64, usize)> = (0..n)
            .map(|i| (self.weights[i] * self.dist[i * self.k + self.labels[i]], i))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored
            .into_iter()
            .take(cfg.swap_candidates)
            .map(|(_, i)| i)
            .collect()
    }

    fn into_result(self) -> Result<KMedianResult> {
        let cost = kmedian_cost(self.points, self.weights, &self.labels, &self.centers)?;
        Ok(KMedianResult {
            labels: self.labels,
            centers: self.centers,
            cost,
            iterations: self.iterations,
        })
    }
}

/// k-median++ style seeding: first center by weight, later centers by
/// weight times distance to the nearest chosen center.
fn seed_centers(points: &[Vec<f64>], weights: &[f64], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let first = sample_by_mass(weights, rng).unwrap_or(0);
    let mut centers: Vec<Vec<f64>> = vec![points[first].clone()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| l1_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let masses: Vec<f64> = dist
            .iter()
            .zip(weights)
            .map(|(&d, &w)| w * d)
            .collect();
        let next = match sample_by_mass(&masses, rng) {
            Some(i) => i,
            // All remaining mass is zero: fall back to the first point not
            // coinciding with a chosen center.
            None => (0..n)
                .find(|&i| !centers.iter().any(|c| c.as_slice() == points[i].as_slice()))
                .unwrap_or(0),
        };
        let c = points[next].clone();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(l1_distance(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Index sampled proportionally to `mass`; None if the total is zero.
fn sample_by_mass(mass: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    for (i, &m) in mass.iter().enumerate() {
        cum += m;
        if cum > target && m > 0.0 {
            return Some(i);
        }
    }
    // Rounding pushed the target past the last positive entry.
    mass.iter().rposition(|&m| m > 0.0)
}

/// Lower weighted median: the smallest value whose cumulative weight
/// reaches half the total. Zero-weight collections fall back to the
/// unweighted median. Three-way quickselect, O(len) expected.
fn weighted_median(vals: &mut [(f64, f64)]) -> f64 {
    debug_assert!(!vals.is_empty());
    let total: f64 = vals.iter().map(|v| v.1).sum();
    if total <= 0.0 {
        let mid = vals.len() / 2;
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        return vals[mid].0;
    }
    let mut need = total / 2.0;
    let mut slice: &mut [(f64, f64)] = vals;
    loop {
        if slice.len() == 1 {
            return slice[0].0;
        }
        // Median-of-three pivot, deterministic.
        let pivot = {
            let a = slice[0].0;
            let b = slice[slice.len() / 2].0;
            let c = slice[slice.len() - 1].0;
            a.max(b).min(a.min(b).max(c))
        };
        // Three-way partition by value.
        let (mut lt, mut i, mut gt) = (0usize, 0usize, slice.len());
        let mut w_lt = 0.0f64;
        let mut w_eq = 0.0f64;
        while i < gt {
            let v = slice[i].0;
            if v < pivot {
                w_lt += slice[i].1;
                slice.swap(lt, i);
                lt += 1;
                i += 1;
            } else if v > pivot {
                gt -= 1;
                slice.swap(i, gt);
            } else {
                w_eq += slice[i].1;
                i += 1;
            }
        }
        if w_lt >= need {
            slice = &mut slice[..lt];
        } else if w_lt + w_eq >= need {
            return pivot;
        } else {
            need -= w_lt + w_eq;
            slice = &mut slice[gt..];
        }
    }
}

/// Globally optimal weighted k-median over all partitions into at most k
/// blocks, with coordinate-wise weighted-median centers.
pub fn exact_kmedian_bruteforce(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
) -> Result<KMedianResult> {
    validate_instance(points, weights, k)?;
    let n = points.len();
    if n > 14 {
        return Err(Error::TooLarge(format!(
            "brute force supports at most 14 points, got {n}"
        )));
    }
    let dim = points[0].len();

    let mut best_cost = f64::INFINITY;
    let mut best_labels: Vec<usize> = Vec::new();

    // Enumerate set partitions with at most k blocks as restricted growth
    // strings: labels[0] = 0, labels[i] <= max(labels[..i]) + 1 < k.
    let mut labels = vec![0usize; n];
    let mut scratch: Vec<(f64, f64)> = Vec::new();
    enumerate_rgs(&mut labels, 1, 0, k, &mut |labels| {
        let blocks = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut cost = 0.0;
        for b in 0..blocks {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == b).collect();
            for d in 0..dim {
                scratch.clear();
                scratch.extend(members.iter().map(|&i| (points[i][d], weights[i])));
                let c = weighted_median(&mut scratch);
                for &i in &members {
                    cost += weights[i] * (points[i][d] - c).abs();
                }
            }
        }
        if cost < best_cost {
            best_cost = cost;
            best_labels = labels.to_vec();
        }
    });

    let blocks = best_labels.iter().max().copied().unwrap_or(0) + 1;
    let mut centers = vec![vec![0.0; dim]; blocks];
    for (b, center) in centers.iter_mut().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| best_labels[i] == b).collect();
        for (d, slot) in center.iter_mut().enumerate() {
            let mut vals: Vec<(f64, f64)> =
                members.iter().map(|&i| (points[i][d], weights[i])).collect();
            *slot = weighted_median(&mut vals);
        }
    }
    let cost = kmedian_cost(points, weights, &best_labels, &centers)?;
    Ok(KMedianResult {
        labels: best_labels,
        centers,
        cost,
        iterations: 0,
    })
}

fn enumerate_rgs(
    labels: &mut Vec<usize>,
    pos: usize,
    max_used: usize,
    k: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos == labels.len() {
        visit(labels);
        return;
    }
    let cap = (max_used + 1).min(k - 1);
    for l in 0..=cap {
        labels[pos] = l;
        enumerate_rgs(labels, pos + 1, max_used.max(l), k, visit);
    }
}
