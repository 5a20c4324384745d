//! Loss metric, Bayes risk, the projection distance rho, Renyi divergence,
//! Monte-Carlo rate envelopes, and the one-node testing harness.
//!
//! The rate envelopes are the two-term expressions
//!
//! ```text
//! upper = E[ 1{z0 in B_eps} exp(-(n/2)(1-eps) I(alpha0, z0)) ] + exp(-(1-eps) rho^2 / (2 tau^2))
//! lower = E[ 1{z0 in B_eps} exp(-(n/2)(1+eps) I(alpha0, z0)) ] + exp(-(1+eps) rho^2 / (2 tau^2))
//! ```
//!
//! where the expectation runs over the null draw of `(alpha0, z0)`,
//! `B_eps = {z0 : ||z0 - mu|| <= sqrt(1 - eps/4) rho}`, and `I` is the
//! order-1/2 Renyi divergence between Bernoulli(p) and Bernoulli(q) at the
//! pair success probabilities `p(alpha0, z0)`, `q(alpha0, z0)`. Both
//! envelopes are estimated from the same samples, so `lower <= upper`
//! holds pointwise and the two coincide exactly at eps = 0.
//!
//! All Monte-Carlo loops draw one substream per outer sample and reduce in
//! fixed chunk order: results are bit-identical for any thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::genmodel::{sigmoid, LatentModelSpec};
use crate::labels::LabelVector;
use crate::rng::{substream, StreamTag};
use crate::{Error, Result};

/// Misclustering proportion: the fraction of mislabeled nodes minimized
/// over all permutations of the community labels.
///
/// Estimate label 0 (unassigned) always counts as an error. Computed via
/// optimal assignment on the k x k confusion matrix, which equals the
/// permutation minimum without the factorial blowup.
pub fn misclustering_loss(truth: &LabelVector, estimate: &LabelVector) -> Result<f64> {
    let n = truth.len();
    if estimate.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "truth has {n} nodes, estimate {}",
            estimate.len()
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if truth.iter().any(|&l| l == 0) {
        return Err(Error::InvalidInput(
            "ground truth labels must lie in [k]".into(),
        ));
    }
    let k = truth.k().max(estimate.k());
    let mut confusion = vec![vec![0u64; k]; k];
    for i in 0..n {
        let e = estimate.get(i);
        if e >= 1 {
            confusion[truth.get(i) as usize - 1][e as usize - 1] += 1;
        }
    }
    let agreement = max_agreement(&confusion);
    Ok(1.0 - agreement as f64 / n as f64)
}

/// Maximum total agreement over label permutations (assignment problem,
/// O(k^3) shortest augmenting paths).
fn max_agreement(counts: &[Vec<u64>]) -> u64 {
    let n = counts.len();
    if n == 0 {
        return 0;
    }
    const INF: i64 = i64::MAX / 4;
    // Minimize negated counts with row/column potentials.
    let cost = |i: usize, j: usize| -(counts[i][j] as i64);
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| counts[p[j] - 1][j - 1]).sum()
}

/// The clustering error if latent positions were observed directly:
/// the upper normal tail at `||mu|| / tau`.
pub fn bayes_risk(mu: &[f64], tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau must be > 0, got {tau}")));
    }
    let norm: f64 = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(std_normal.sf(norm / tau))
}

/// Projection distance from mu to the hyperplane `{z : z' H mu = 0}`:
/// `mu' H mu / sqrt(mu' H^2 mu)`. The sign follows `mu' H mu`.
pub fn rho(mu: &[f64], h: &[f64]) -> Result<f64> {
    let d = mu.len();
    if h.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "H has {} entries, expected {}",
            h.len(),
            d * d
        )));
    }
    let hmu: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| h[i * d + j] * mu[j]).sum())
        .collect();
    let denom_sq: f64 = hmu.iter().map(|v| v * v).sum();
    if denom_sq <= 0.0 {
        return Err(Error::Degenerate("H mu = 0; rho is undefined".into()));
    }
    let num: f64 = mu.iter().zip(&hmu).map(|(a, b)| a * b).sum();
    Ok(num / denom_sq.sqrt())
}

/// Order-1/2 Renyi divergence between Bernoulli(p) and Bernoulli(q):
/// `-2 log(sqrt(pq) + sqrt((1-p)(1-q)))`.
pub fn renyi_half(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!(
            "renyi_half needs p, q strictly inside (0,1); got p = {p}, q = {q}"
        )));
    }
    Ok(-2.0 * ((p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt()).ln())
}

/// Monte-Carlo estimate of the pair success probabilities at a fixed null
/// draw `(alpha0, z0)`:
///
/// `p = E[S(z0' H z1 + alpha0 + alpha1)]` with `z1 ~ N(mu, tau^2 I)`, and
/// `q` the same with `z1 ~ N(-mu, tau^2 I)`. Uses the reflection of z1
/// around its mean as an antithetic pair, and shares draws between p and q.
pub fn pq_at(
    alpha0: f64,
    z0: &[f64],
    spec: &LatentModelSpec,
    inner_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    spec.validate()?;
    require_two_symmetric_communities(spec)?;
    if inner_samples == 0 {
        return Err(Error::InvalidInput("inner_samples must be >= 1".into()));
    }
    let mut rng = substream(seed, StreamTag::MonteCarlo, 0, 0);
    Ok(pq_at_with_rng(alpha0, z0, spec, inner_samples, &mut rng))
}

fn require_two_symmetric_communities(spec: &LatentModelSpec) -> Result<()> {
    if spec.k != 2 || spec.means.is_some() {
        return Err(Error::InvalidInput(
            "rate and testing evaluations need the two-community model with means +/- mu".into(),
        ));
    }
    Ok(())
}

fn pq_at_with_rng(
    alpha0: f64,
    z0: &[f64],
    spec: &LatentModelSpec,
    inner_samples: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let d = spec.d;
    // z0' H z1 with z1 = mu + tau*eta splits into c + tau * <H z0, eta>.
    let hz0 = spec.h_apply(z0);
    let c: f64 = hz0.iter().zip(&spec.mu).map(|(a, b)| a * b).sum();
    let mut p_sum = 0.0;
    let mut q_sum = 0.0;
    for _ in 0..inner_samples {
        let omega1 = spec.omega.sample(rng);
        let mut s = 0.0;
        for item in hz0.iter().take(d) {
            let g: f64 = rng.sample(StandardNormal);
            s += item * g;
        }
        let shift = alpha0 + spec.alpha_bar + omega1;
        let t = c + spec.tau * s;
        let t_reflect = c - spec.tau * s;
        p_sum += sigmoid(t + shift) + sigmoid(t_reflect + shift);
        q_sum += sigmoid(-t + shift) + sigmoid(-t_reflect + shift);
    }
    let denom = (2 * inner_samples) as f64;
    (p_sum / denom, q_sum / denom)
}

/// Configuration of the rate-envelope estimator.
#[derive(Debug, Clone, Serialize)]
pub struct RateConfig {
    /// Slack in the exponents, in [0, 1/2). Zero collapses both envelopes
    /// to the same value.
    pub epsilon: f64,
    /// Network size entering the exponent; the testing problem uses
    /// m = (n-1)/2 labeled nodes per side.
    pub n: usize,
    /// Monte-Carlo draws of (alpha0, z0).
    pub outer_samples: usize,
    /// Draws of (alpha1, z1) per outer sample for the p/q estimates.
    pub inner_samples: usize,
}

impl RateConfig {
    pub fn new(epsilon: f64, n: usize, outer_samples: usize, inner_samples: usize) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in [0, 0.5), got {epsilon}"
            )));
        }
        if n < 3 || outer_samples == 0 || inner_samples == 0 {
            return Err(Error::InvalidInput(
                "need n >= 3 and positive sample counts".into(),
            ));
        }
        Ok(RateConfig {
            epsilon,
            n,
            outer_samples,
            inner_samples,
        })
    }

    /// Squared radius of the acceptance ball: `(1 - eps/4) rho^2`.
    pub fn ball_radius_sq(&self, rho: f64) -> f64 {
        (1.0 - self.epsilon / 4.0) * rho * rho
    }
}

/// One side of the rate estimate.
#[derive(Debug, Clone, Serialize)]
pub struct RateBound {
    pub total: f64,
    pub network_term: f64,
    pub latent_term: f64,
    pub network_std_error: f64,
}

/// Monte-Carlo estimates of the upper/lower error-rate envelopes.
#[derive(Debug, Clone, Serialize)]
pub struct RateEstimate {
    pub upper: RateBound,
    pub lower: RateBound,
    pub rho: f64,
    pub epsilon: f64,
    pub n: usize,
    pub outer_samples: usize,
    pub inner_samples: usize,
}

/// Estimate both envelopes with shared random numbers.
pub fn rate_bounds(spec: &LatentModelSpec, cfg: &RateConfig, seed: u64) -> Result<RateEstimate> {
    spec.validate()?;
    require_two_symmetric_communities(spec)?;
    let rho_val = rho(&spec.mu, &spec.h)?;
    if rho_val <= 0.0 {
        return Err(Error::Degenerate(
            "rate envelopes need assortative mu' H mu > 0".into(),
        ));
    }
    let ball_sq = cfg.ball_radius_sq(rho_val);
    let half_n = cfg.n as f64 / 2.0;
    let (em, ep) = (1.0 - cfg.epsilon, 1.0 + cfg.epsilon);

    // Per-sample contributions to (upper, lower), reduced chunk by chunk in
    // fixed order.
    let acc = run_mc2(cfg.outer_samples, |s| {
        let mut rng = substream(seed, StreamTag::MonteCarlo, s as u64, 0);
        let omega0 = spec.omega.sample(&mut rng);
        let alpha0 = spec.alpha_bar + omega0;
        let mut z0 = vec![0.0; spec.d];
        let mut dist_sq = 0.0;
        for (slot, m) in z0.iter_mut().zip(&spec.mu) {
            let g: f64 = rng.sample(StandardNormal);
            let dev = spec.tau * g;
            *slot = m + dev;
            dist_sq += dev * dev;
        }
        if dist_sq > ball_sq {
            return [0.0, 0.0];
        }
        let mut inner_rng = substream(seed, StreamTag::MonteCarlo, s as u64, 1);
        let (p, q) = pq_at_with_rng(alpha0, &z0, spec, cfg.inner_samples, &mut inner_rng);
        let i_div = renyi_half(p, q).unwrap_or(0.0);
        [
            (-half_n * em * i_div).exp(),
            (-half_n * ep * i_div).exp(),
        ]
    });

    let latent_u = (-em * rho_val * rho_val / (2.0 * spec.tau * spec.tau)).exp();
    let latent_l = (-ep * rho_val * rho_val / (2.0 * spec.tau * spec.tau)).exp();
    let (mean_u, se_u) = acc.mean_se(0);
    let (mean_l, se_l) = acc.mean_se(1);
    Ok(RateEstimate {
        upper: RateBound {
            total: mean_u + latent_u,
            network_term: mean_u,
            latent_term: latent_u,
            network_std_error: se_u,
        },
        lower: RateBound {
            total: mean_l + latent_l,
            network_term: mean_l,
            latent_term: latent_l,
            network_std_error: se_l,
        },
        rho: rho_val,
        epsilon: cfg.epsilon,
        n: cfg.n,
        outer_samples: cfg.outer_samples,
        inner_samples: cfg.inner_samples,
    })
}

/// Edge counts from the one-node testing problem: edges from node 0 into
/// the known community-1 block and the known community-2 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TestCounts {
    pub a_plus: u64,
    pub a_minus: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    AcceptH0,
    RejectH0,
}

/// The edge counting test: reject `sigma_0 = 1` exactly when
/// `A_{0,+} < A_{0,-}`. A tie keeps the null (the likelihoods coincide and
/// nothing differentiates the hypotheses).
pub fn edge_count_test(counts: TestCounts) -> Decision {
    if counts.a_plus < counts.a_minus {
        Decision::RejectH0
    } else {
        Decision::AcceptH0
    }
}

/// Numeric likelihood-ratio evaluation for one count pair.
#[derive(Debug, Clone, Serialize)]
pub struct LrTestResult {
    /// Full likelihood of the observed counts under the null.
    pub i_plus: f64,
    /// Full likelihood under the alternative.
    pub i_minus: f64,
    /// Monte-Carlo standard error of `i_plus - i_minus`.
    pub diff_std_error: f64,
    /// None when the difference is within 3 standard errors of zero.
    pub decision: Option<Decision>,
}

/// Evaluate the full likelihoods of both hypotheses by Monte Carlo and
/// decide by their comparison; reject when the null likelihood is smaller.
///
/// Common random numbers pair the hypotheses: the alternative reuses every
/// draw with the null's `z0` negated (valid because the latent law is
/// symmetric about its mean). Within a sample, each of the 2m pair
/// probabilities uses its own independent `(alpha_i, z_i)` draw, which
/// makes the product an unbiased estimate of the observed configuration's
/// likelihood.
pub fn lr_decision_numeric(
    counts: TestCounts,
    m: usize,
    spec: &LatentModelSpec,
    mc_samples: usize,
    seed: u64,
) -> Result<LrTestResult> {
    if counts.a_plus as usize > m || counts.a_minus as usize > m {
        return Err(Error::InvalidInput(format!(
            "counts {counts:?} exceed m = {m}"
        )));
    }
    let grid = lr_decision_grid(m, spec, mc_samples, seed)?;
    Ok(grid
        .into_iter()
        .find(|((ap, am), _)| *ap == counts.a_plus as usize && *am == counts.a_minus as usize)
        .expect("count pair inside grid")
        .1)
}

/// Likelihood-ratio decisions for every count pair `(a_plus, a_minus)` in
/// `{0..m}^2`, sharing one set of Monte-Carlo draws across the grid.
pub fn lr_decision_grid(
    m: usize,
    spec: &LatentModelSpec,
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<((usize, usize), LrTestResult)>> {
    spec.validate()?;
    require_two_symmetric_communities(spec)?;
    if m == 0 || mc_samples == 0 {
        return Err(Error::InvalidInput(
            "need m >= 1 and mc_samples >= 1".into(),
        ));
    }
    let pairs = (m + 1) * (m + 1);
    let chunks = chunk_ranges(mc_samples, MC_CHUNK);
    let partials: Vec<GridAccum> = chunks
        .par_iter()
        .map(|range| {
            let mut acc = GridAccum::new(pairs);
            let mut s_plus = vec![0.0f64; 2 * m]; // success prob, null z0
            let mut s_minus = vec![0.0f64; 2 * m]; // success prob, negated z0
            let mut pp_plus = vec![0.0f64; m + 1]; // prefix/suffix products
            let mut sp_plus = vec![0.0f64; m + 1];
            let mut pm_plus = vec![0.0f64; m + 1];
            let mut sm_plus = vec![0.0f64; m + 1];
            let mut pp_minus = vec![0.0f64; m + 1];
            let mut sp_minus = vec![0.0f64; m + 1];
            let mut pm_minus = vec![0.0f64; m + 1];
            let mut sm_minus = vec![0.0f64; m + 1];
            for s in range.clone() {
                let mut rng = substream(seed, StreamTag::MonteCarlo, s as u64, 2);
                let omega0 = spec.omega.sample(&mut rng);
                let alpha0 = spec.alpha_bar + omega0;
                let mut z0 = vec![0.0; spec.d];
                for (slot, mval) in z0.iter_mut().zip(&spec.mu) {
                    let g: f64 = rng.sample(StandardNormal);
                    *slot = mval + spec.tau * g;
                }
                let hz0 = spec.h_apply(&z0);
                // Labeled nodes: first m from N(mu, ..), last m from N(-mu, ..).
                for i in 0..2 * m {
                    let omega_i = spec.omega.sample(&mut rng);
                    let mut quad = 0.0;
                    for (d_idx, &h) in hz0.iter().enumerate() {
                        let g: f64 = rng.sample(StandardNormal);
                        let mean = if i < m { spec.mu[d_idx] } else { -spec.mu[d_idx] };
                        quad += h * (mean + spec.tau * g);
                    }
                    let shift = alpha0 + spec.alpha_bar + omega_i;
                    s_plus[i] = sigmoid(quad + shift);
                    s_minus[i] = sigmoid(-quad + shift);
                }
                // Representative configuration: the first a_plus nodes of
                // the + block carry edges (exchangeability makes any
                // configuration with the same counts equivalent).
                prefix_products(&s_plus[..m], &mut pp_plus, &mut sp_plus);
                prefix_products(&s_plus[m..], &mut pm_plus, &mut sm_plus);
                prefix_products(&s_minus[..m], &mut pp_minus, &mut sp_minus);
                prefix_products(&s_minus[m..], &mut pm_minus, &mut sm_minus);
                for ap in 0..=m {
                    for am in 0..=m {
                        let g_plus = pp_plus[ap] * sp_plus[ap] * pm_plus[am] * sm_plus[am];
                        let g_minus = pp_minus[ap] * sp_minus[ap] * pm_minus[am] * sm_minus[am];
                        acc.add(ap * (m + 1) + am, g_plus, g_minus);
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = GridAccum::new(pairs);
    for p in &partials {
        total.merge(p);
    }
    let samples = mc_samples as f64;
    let mut out = Vec::with_capacity(pairs);
    for ap in 0..=m {
        for am in 0..=m {
            let idx = ap * (m + 1) + am;
            let i_plus = total.sum_plus[idx] / samples;
            let i_minus = total.sum_minus[idx] / samples;
            let mean_diff = total.sum_diff[idx] / samples;
            let var = (total.sumsq_diff[idx] / samples - mean_diff * mean_diff).max(0.0);
            let se = (var / samples).sqrt();
            let decision = if (i_plus - i_minus).abs() < 3.0 * se {
                None
            } else if i_plus < i_minus {
                Some(Decision::RejectH0)
            } else {
                Some(Decision::AcceptH0)
            };
            out.push((
                (ap, am),
                LrTestResult {
                    i_plus,
                    i_minus,
                    diff_std_error: se,
                    decision,
                },
            ));
        }
    }
    Ok(out)
}

/// `out_p[a] = prod_{i<a} s_i`, `out_s[a] = prod_{i>=a} (1 - s_i)`.
fn prefix_products(s: &[f64], out_p: &mut [f64], out_s: &mut [f64]) {
    let m = s.len();
    out_p[0] = 1.0;
    for i in 0..m {
        out_p[i + 1] = out_p[i] * s[i];
    }
    out_s[m] = 1.0;
    for i in (0..m).rev() {
        out_s[i] = out_s[i + 1] * (1.0 - s[i]);
    }
}

struct GridAccum {
    sum_plus: Vec<f64>,
    sum_minus: Vec<f64>,
    sum_diff: Vec<f64>,
    sumsq_diff: Vec<f64>,
}

impl GridAccum {
    fn new(pairs: usize) -> Self {
        GridAccum {
            sum_plus: vec![0.0; pairs],
            sum_minus: vec![0.0; pairs],
            sum_diff: vec![0.0; pairs],
            sumsq_diff: vec![0.0; pairs],
        }
    }

    fn add(&mut self, idx: usize, g_plus: f64, g_minus: f64) {
        let d = g_plus - g_minus;
        self.sum_plus[idx] += g_plus;
        self.sum_minus[idx] += g_minus;
        self.sum_diff[idx] += d;
        self.sumsq_diff[idx] += d * d;
    }

    fn merge(&mut self, other: &GridAccum) {
        for i in 0..self.sum_plus.len() {
            self.sum_plus[i] += other.sum_plus[i];
            self.sum_minus[i] += other.sum_minus[i];
            self.sum_diff[i] += other.sum_diff[i];
            self.sumsq_diff[i] += other.sumsq_diff[i];
        }
    }
}

/// Empirical Type I + Type II error of the edge counting test on the
/// (2m+1)-node problem, simulated under the null.
#[derive(Debug, Clone, Serialize)]
pub struct TestingErrorEstimate {
    /// `2 P(A+ <= A-) - P(A+ = A-)` under the null; by symmetry this is
    /// the sum of both error probabilities of the deterministic test.
    pub nu_hat: f64,
    pub le_fraction: f64,
    pub tie_fraction: f64,
    pub reps: usize,
}

pub fn testing_error_mc(
    spec: &LatentModelSpec,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<TestingErrorEstimate> {
    spec.validate()?;
    require_two_symmetric_communities(spec)?;
    if m == 0 {
        return Err(Error::InvalidInput(
            "the testing problem needs m >= 1 labeled nodes per side".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be >= 1".into()));
    }
    let acc = run_mc2(reps, |s| {
        let mut rng = substream(seed, StreamTag::MonteCarlo, s as u64, 3);
        let omega0 = spec.omega.sample(&mut rng);
        let alpha0 = spec.alpha_bar + omega0;
        let mut z0 = vec![0.0; spec.d];
        for (slot, mval) in z0.iter_mut().zip(&spec.mu) {
            let g: f64 = rng.sample(StandardNormal);
            *slot = mval + spec.tau * g;
        }
        let hz0 = spec.h_apply(&z0);
        let mut a_plus = 0u64;
        let mut a_minus = 0u64;
        for i in 0..2 * m {
            let omega_i = spec.omega.sample(&mut rng);
            let mut quad = 0.0;
            for (d_idx, &h) in hz0.iter().enumerate() {
                let g: f64 = rng.sample(StandardNormal);
                let mean = if i < m { spec.mu[d_idx] } else { -spec.mu[d_idx] };
                quad += h * (mean + spec.tau * g);
            }
            let p = sigmoid(quad + alpha0 + spec.alpha_bar + omega_i);
            if rng.gen::<f64>() < p {
                if i < m {
                    a_plus += 1;
                } else {
                    a_minus += 1;
                }
            }
        }
        [
            (a_plus <= a_minus) as u8 as f64,
            (a_plus == a_minus) as u8 as f64,
        ]
    });
    let (le, _) = acc.mean_se(0);
    let (tie, _) = acc.mean_se(1);
    Ok(TestingErrorEstimate {
        nu_hat: 2.0 * le - tie,
        le_fraction: le,
        tie_fraction: tie,
        reps,
    })
}

const MC_CHUNK: usize = 4096;

fn chunk_ranges(total: usize, chunk: usize) -> Vec<std::ops::Range<usize>> {
    (0..total)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(total))
        .collect()
}

struct Mc2 {
    sum: [f64; 2],
    sumsq: [f64; 2],
    count: usize,
}

impl Mc2 {
    fn mean_se(&self, i: usize) -> (f64, f64) {
        let n = self.count as f64;
        let mean = self.sum[i] / n;
        let var = (self.sumsq[i] / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Parallel Monte-Carlo over per-sample substreams with a fixed chunked
/// reduction order (bit-identical for any thread count).
fn run_mc2(samples: usize, eval: impl Fn(usize) -> [f64; 2] + Sync) -> Mc2 {
    let partials: Vec<Mc2> = chunk_ranges(samples, MC_CHUNK)
        .par_iter()
        .map(|range| {
            let mut acc = Mc2 {
                sum: [0.0; 2],
                sumsq: [0.0; 2],
                count: 0,
            };
            for s in range.clone() {
                let v = eval(s);
                for i in 0..2 {
                    acc.sum[i] += v[i];
                    acc.sumsq[i] += v[i] * v[i];
                }
                acc.count += 1;
            }
            acc
        })
        .collect();
    let mut total = Mc2 {
        sum: [0.0; 2],
        sumsq: [0.0; 2],
        count: 0,
    };
    for p in partials {
        for i in 0..2 {
            total.sum[i] += p.sum[i];
            total.sumsq[i] += p.sumsq[i];
        }
        total.count += p.count;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodel::{preset_spec, OmegaLaw, Preset};

    fn lv(labels: &[u32], k: usize) -> LabelVector {
        LabelVector::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn loss_identity_and_swap() {
        let t = lv(&[1, 1, 2, 2], 2);
        assert_eq!(misclustering_loss(&t, &t).unwrap(), 0.0);
        let swapped = lv(&[2, 2, 1, 1], 2);
        assert_eq!(misclustering_loss(&t, &swapped).unwrap(), 0.0);
    }

    #[test]
    fn loss_counts_unassigned_as_errors() {
        let t = lv(&[1, 1, 2, 2], 2);
        let e = lv(&[1, 0, 2, 2], 2);
        assert_eq!(misclustering_loss(&t, &e).unwrap(), 0.25);
    }

    #[test]
    fn loss_matches_factorial_bruteforce() {
        use rand::Rng;
        let mut rng = substream(17, StreamTag::MonteCarlo, 0, 9);
        for trial in 0..200 {
            let k = rng.gen_range(2..=6usize);
            let n = rng.gen_range(k..30);
            let truth = lv(
                &(0..n)
                    .map(|_| rng.gen_range(1..=k as u32))
                    .collect::<Vec<_>>(),
                k,
            );
            let est = lv(
                &(0..n)
                    .map(|_| rng.gen_range(0..=k as u32))
                    .collect::<Vec<_>>(),
                k,
            );
            let fast = misclustering_loss(&truth, &est).unwrap();
            let brute = brute_force_loss(&truth, &est, k);
            assert!(
                (fast - brute).abs() < 1e-12,
                "trial {trial}: fast {fast} brute {brute}"
            );
        }
    }

    fn brute_force_loss(truth: &LabelVector, est: &LabelVector, k: usize) -> f64 {
        let mut perm: Vec<u32> = (1..=k as u32).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let wrong = (0..truth.len())
                .filter(|&i| {
                    let e = est.get(i);
                    e == 0 || e != p[truth.get(i) as usize - 1]
                })
                .count();
            best = best.min(wrong as f64 / truth.len() as f64);
        });
        best
    }

    fn permute(p: &mut Vec<u32>, at: usize, visit: &mut impl FnMut(&[u32])) {
        if at == p.len() {
            visit(p);
            return;
        }
        for i in at..p.len() {
            p.swap(at, i);
            permute(p, at + 1, visit);
            p.swap(at, i);
        }
    }

    #[test]
    fn loss_is_pseudo_metric_under_relabeling() {
        let t = lv(&[1, 2, 3, 1, 2, 3], 3);
        let e = lv(&[2, 2, 3, 1, 1, 3], 3);
        let base = misclustering_loss(&t, &e).unwrap();
        let perm = [3u32, 1, 2];
        let e2 = e.permuted(&perm).unwrap();
        assert_eq!(misclustering_loss(&t, &e2).unwrap(), base);
    }

    #[test]
    fn loss_rejects_length_mismatch() {
        let t = lv(&[1, 2], 2);
        let e = lv(&[1], 2);
        assert!(misclustering_loss(&t, &e).is_err());
    }

    #[test]
    fn bayes_risk_reference_values() {
        let mu = [0.5, 1.0, 0.0];
        let cases = [(0.75, 0.0680), (0.5, 0.0127), (0.25, 3.87e-6)];
        for (tau, want) in cases {
            let got = bayes_risk(&mu, tau).unwrap();
            assert!(
                (got - want).abs() / want < 5e-3,
                "tau {tau}: got {got:.6e}, want {want:.6e}"
            );
        }
    }

    #[test]
    fn bayes_risk_monotonicity() {
        let mu = [0.5, 1.0, 0.0];
        let mut prev = 0.0;
        for tau in [0.1, 0.25, 0.5, 0.75, 1.0, 2.0] {
            let r = bayes_risk(&mu, tau).unwrap();
            assert!(r > prev);
            prev = r;
        }
        // Decreasing in ||mu||.
        let mut prev = 1.0;
        for scale in [0.5, 1.0, 2.0, 4.0] {
            let mu_s: Vec<f64> = mu.iter().map(|v| v * scale).collect();
            let r = bayes_risk(&mu_s, 0.5).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn rho_eigenvector_gives_mu_norm() {
        let spec1 = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        let r = rho(&spec1.mu, &spec1.h).unwrap();
        assert!((r - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rho_shrinks_off_the_eigenvector() {
        let spec4 = preset_spec(Preset::Spec4 {
            tau: 0.5,
            alpha_bar: -2.49,
        })
        .unwrap();
        let r = rho(&spec4.mu, &spec4.h).unwrap();
        assert!((r - 1.0786).abs() < 1e-4);
        assert!(r < 1.25f64.sqrt());
    }

    #[test]
    fn rho_sign_follows_assortativity() {
        let mu = [1.0, 0.0];
        let h = [1.0, 0.0, 0.0, 1.0];
        let neg: Vec<f64> = h.iter().map(|v| -v).collect();
        let r_pos = rho(&mu, &h).unwrap();
        let r_neg = rho(&mu, &neg).unwrap();
        assert!((r_pos + r_neg).abs() < 1e-12);
    }

    #[test]
    fn rho_degenerate_error() {
        let mu = [1.0, 0.0];
        let h = [0.0, 0.0, 0.0, 1.0];
        assert!(matches!(rho(&mu, &h), Err(Error::Degenerate(_))));
    }

    #[test]
    fn renyi_reference_and_symmetry() {
        assert_eq!(renyi_half(0.3, 0.3).unwrap(), 0.0);
        let v = renyi_half(0.9, 0.1).unwrap();
        assert!((v - 1.0216512475).abs() < 1e-9);
        for p in [0.05, 0.3, 0.77] {
            for q in [0.12, 0.5, 0.9] {
                let a = renyi_half(p, q).unwrap();
                assert!((a - renyi_half(q, p).unwrap()).abs() < 1e-14);
                assert!((a - renyi_half(1.0 - p, 1.0 - q).unwrap()).abs() < 1e-14);
                assert!(a >= 0.0);
                if (p - q).abs() > 1e-12 {
                    assert!(a > 0.0);
                }
            }
        }
        assert!(renyi_half(0.0, 0.5).is_err());
        assert!(renyi_half(0.5, 1.0).is_err());
    }

    #[test]
    fn pq_symmetric_at_zero_z0() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        let (p, q) = pq_at(-2.49, &[0.0, 0.0, 0.0], &spec, 500, 3).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn pq_orders_with_alignment() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        // z0 aligned with mu: within-community success beats across.
        let (p, q) = pq_at(-2.49, &[0.5, 1.0, 0.0], &spec, 20_000, 4).unwrap();
        assert!(p > q, "p = {p}, q = {q}");
    }

    /// Gauss-Hermite quadrature oracle for the tau -> 0 limit, where
    /// p = E_omega[S(z0' H mu + alpha0 + alpha_bar + omega)].
    #[test]
    fn pq_tau_zero_limit_matches_quadrature() {
        let mut spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        spec.tau = 1e-8;
        let z0 = [0.4, 0.9, 0.1];
        let alpha0 = -2.0;
        let (p, q) = pq_at(alpha0, &z0, &spec, 60_000, 11).unwrap();

        let hz0 = spec.h_apply(&z0);
        let c: f64 = hz0.iter().zip(&spec.mu).map(|(a, b)| a * b).sum();
        let (nodes, weights) = gauss_hermite(48);
        let quad = |sign: f64| -> f64 {
            let mut acc = 0.0;
            for (&x, &w) in nodes.iter().zip(&weights) {
                let omega = std::f64::consts::SQRT_2 * x;
                acc += w * sigmoid(sign * c + alpha0 + spec.alpha_bar + omega);
            }
            acc / std::f64::consts::PI.sqrt()
        };
        let p_exact = quad(1.0);
        let q_exact = quad(-1.0);
        assert!((p - p_exact).abs() < 5e-4, "p {p:.6} vs {p_exact:.6}");
        assert!((q - q_exact).abs() < 5e-4, "q {q:.6} vs {q_exact:.6}");
    }

    /// Nodes and weights via the Golub-Welsch tridiagonal (physicists'
    /// Hermite); test-only oracle machinery.
    fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            let b = ((i + 1) as f64 / 2.0).sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
        let eig = nalgebra::SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let node = eig.eigenvalues[i];
                let w0 = eig.eigenvectors[(0, i)];
                (node, w0 * w0 * std::f64::consts::PI.sqrt())
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    #[test]
    fn rate_bounds_collapse_at_zero_epsilon() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 })
            .unwrap()
            .with_n(101)
            .unwrap();
        let cfg = RateConfig::new(0.0, 101, 2000, 64).unwrap();
        let est = rate_bounds(&spec, &cfg, 5).unwrap();
        assert_eq!(est.upper.total, est.lower.total);
        assert_eq!(est.upper.network_term, est.lower.network_term);
    }

    #[test]
    fn rate_bounds_order_and_latent_term() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        for eps in [0.05, 0.1, 0.2] {
            let cfg = RateConfig::new(eps, 1000, 1500, 64).unwrap();
            let est = rate_bounds(&spec, &cfg, 7).unwrap();
            assert!(est.lower.total <= est.upper.total);
            let rho_sq = est.rho * est.rho;
            let want_u = (-(1.0 - eps) * rho_sq / (2.0 * 0.25)).exp();
            assert!((est.upper.latent_term - want_u).abs() <= 1e-15);
            assert!(est.upper.total > 0.0 && est.upper.total < 1.0);
        }
    }

    #[test]
    fn rate_bounds_monotone_in_epsilon() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        let mut prev_upper = 0.0;
        for eps in [0.05, 0.1, 0.2] {
            let cfg = RateConfig::new(eps, 1000, 1500, 64).unwrap();
            let est = rate_bounds(&spec, &cfg, 7).unwrap();
            assert!(
                est.upper.total >= prev_upper,
                "upper envelope shrank at eps {eps}"
            );
            prev_upper = est.upper.total;
        }
    }

    #[test]
    fn edge_count_rules() {
        assert_eq!(
            edge_count_test(TestCounts { a_plus: 3, a_minus: 1 }),
            Decision::AcceptH0
        );
        assert_eq!(
            edge_count_test(TestCounts { a_plus: 1, a_minus: 3 }),
            Decision::RejectH0
        );
        assert_eq!(
            edge_count_test(TestCounts { a_plus: 2, a_minus: 2 }),
            Decision::AcceptH0
        );
    }

    #[test]
    fn lr_grid_small_agrees_with_edge_counting() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        let grid = lr_decision_grid(1, &spec, 150_000, 13).unwrap();
        for ((ap, am), res) in grid {
            let expected = edge_count_test(TestCounts {
                a_plus: ap as u64,
                a_minus: am as u64,
            });
            if ap == am {
                assert!(
                    res.decision.is_none(),
                    "tie ({ap},{am}) should be inconclusive, diff = {}",
                    res.i_plus - res.i_minus
                );
            } else {
                assert_eq!(res.decision, Some(expected), "({ap},{am})");
            }
        }
    }

    #[test]
    fn lr_counts_must_fit_m() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        assert!(lr_decision_numeric(
            TestCounts { a_plus: 3, a_minus: 0 },
            2,
            &spec,
            10,
            0
        )
        .is_err());
    }

    #[test]
    fn testing_error_no_signal_is_total() {
        let mut spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        spec.mu = vec![0.0, 0.0, 0.0];
        spec.omega = OmegaLaw::Zero;
        let est = testing_error_mc(&spec, 20, 4000, 3).unwrap();
        assert!((est.nu_hat - 1.0).abs() < 0.1, "nu_hat {}", est.nu_hat);
    }

    #[test]
    fn testing_error_guards_m_zero() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        assert!(testing_error_mc(&spec, 0, 10, 0).is_err());
    }

    #[test]
    fn testing_error_deterministic_across_threads() {
        let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let a = single.install(|| testing_error_mc(&spec, 9, 9000, 4).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let b = four.install(|| testing_error_mc(&spec, 9, 9000, 4).unwrap());
        assert_eq!(a.nu_hat.to_bits(), b.nu_hat.to_bits());
    }
}
