//! Generative simulator for the sparse latent eigenmodel.
//!
//! Edges form independently across pairs given the per-node degree
//! parameters and latent positions:
//!
//! ```text
//! logit(P_ij) = alpha_i + alpha_j + z_i' H z_j,     A_ij ~ Bernoulli(P_ij)
//! ```
//!
//! with `alpha_i = alpha_bar + omega_i` and, for two communities,
//! `z_i ~ N(+/-mu, tau^2 I_d)`. Every node and every pair draws from its
//! own counter-based substream, so generation is deterministic for a fixed
//! seed under any parallel schedule.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::AdjacencyMatrix;
use crate::labels::LabelVector;
use crate::rng::{substream, StreamTag};
use crate::{Error, Result};

/// Distribution of the degree-heterogeneity term `omega_i` (mean zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "params", rename_all = "lowercase")]
pub enum OmegaLaw {
    /// `N(0, sd^2)`. Unbounded: the boundedness diagnostic reports a
    /// violation, matching how the reference simulations are set up.
    Normal { sd: f64 },
    /// Uniform on `[lo, hi]`; lo + hi must be 0 to keep the mean at zero.
    Uniform { lo: f64, hi: f64 },
    /// Degenerate at zero (no degree heterogeneity).
    Zero,
}

impl OmegaLaw {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            OmegaLaw::Normal { sd } => {
                let g: f64 = rng.sample(StandardNormal);
                sd * g
            }
            OmegaLaw::Uniform { lo, hi } => {
                if hi > lo {
                    rng.gen_range(*lo..*hi)
                } else {
                    *lo
                }
            }
            OmegaLaw::Zero => 0.0,
        }
    }

    /// Upper bound `omega'` when the law is bounded.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            OmegaLaw::Normal { .. } => None,
            OmegaLaw::Uniform { hi, .. } => Some(*hi),
            OmegaLaw::Zero => Some(0.0),
        }
    }

    /// Lower bound magnitude `underline-omega` when bounded.
    pub fn lower_bound_magnitude(&self) -> Option<f64> {
        match self {
            OmegaLaw::Normal { .. } => None,
            OmegaLaw::Uniform { lo, .. } => Some(-*lo),
            OmegaLaw::Zero => Some(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OmegaLaw::Normal { sd } if !(sd.is_finite() && *sd >= 0.0) => Err(
                Error::InvalidInput(format!("omega sd must be finite and >= 0, got {sd}")),
            ),
            OmegaLaw::Uniform { lo, hi } if (lo + hi).abs() > 1e-12 || lo > hi => {
                Err(Error::InvalidInput(format!(
                    "uniform omega must be symmetric around 0 (lo = {lo}, hi = {hi})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Full generative parameterization.
///
/// For two communities the means are `+mu` and `-mu`; for k > 2 explicit
/// per-community means take over (beyond the two-community theory — the
/// estimators still apply).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModelSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub mu: Vec<f64>,
    pub tau: f64,
    /// Row-major d x d symmetric matrix.
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    pub alpha_bar: f64,
    pub omega: OmegaLaw,
    /// Community sizes, summing to n.
    pub sizes: Vec<usize>,
    /// Per-community means for k > 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
}

impl LatentModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidInput("n and d must be positive".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidInput("need at least two communities".into()));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.mu.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "mu has length {}, d = {}",
                self.mu.len(),
                self.d
            )));
        }
        if self.h.len() != self.d * self.d {
            return Err(Error::DimensionMismatch(format!(
                "H has {} entries, expected d^2 = {}",
                self.h.len(),
                self.d * self.d
            )));
        }
        for i in 0..self.d {
            for j in 0..self.d {
                if (self.h[i * self.d + j] - self.h[j * self.d + i]).abs() > 1e-12 {
                    return Err(Error::InvalidInput("H must be symmetric".into()));
                }
            }
        }
        if self.sizes.len() != self.k || self.sizes.iter().sum::<usize>() != self.n {
            return Err(Error::InvalidInput(format!(
                "sizes {:?} must have k = {} entries summing to n = {}",
                self.sizes, self.k, self.n
            )));
        }
        if let Some(means) = &self.means {
            if means.len() != self.k || means.iter().any(|m| m.len() != self.d) {
                return Err(Error::DimensionMismatch(
                    "means must be k vectors of length d".into(),
                ));
            }
        } else if self.k != 2 {
            return Err(Error::InvalidInput(
                "k > 2 requires explicit per-community means".into(),
            ));
        }
        self.omega.validate()
    }

    /// Mean latent position of each community.
    pub fn community_means(&self) -> Vec<Vec<f64>> {
        match &self.means {
            Some(m) => m.clone(),
            None => {
                let neg: Vec<f64> = self.mu.iter().map(|v| -v).collect();
                vec![self.mu.clone(), neg]
            }
        }
    }

    /// Ground-truth labels: the first `sizes[0]` nodes are community 1, and
    /// so on.
    pub fn truth_labels(&self) -> LabelVector {
        let mut labels = Vec::with_capacity(self.n);
        for (c, &s) in self.sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(c as u32 + 1).take(s));
        }
        LabelVector::new(labels, self.k).expect("sizes validated")
    }

    /// `H x`.
    pub fn h_apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|i| (0..d).map(|j| self.h[i * d + j] * x[j]).sum())
            .collect()
    }

    /// Spectral norm of H (largest |eigenvalue|; H is symmetric).
    pub fn h_spectral_norm(&self) -> f64 {
        let d = self.d;
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.h[i * d + j]);
        match nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, 0) {
            Some(e) => e.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
            None => f64::NAN,
        }
    }

    /// Rescale H to unit spectral norm; returns the previous norm.
    pub fn normalize_h(&mut self) -> f64 {
        let norm = self.h_spectral_norm();
        if norm.is_finite() && norm > 0.0 {
            for v in &mut self.h {
                *v /= norm;
            }
        }
        norm
    }

    /// Balanced-size copy with a different node count.
    pub fn with_n(mut self, n: usize) -> Result<Self> {
        let k = self.k;
        let base = n / k;
        let mut sizes = vec![base; k];
        for s in sizes.iter_mut().take(n % k) {
            *s += 1;
        }
        self.n = n;
        self.sizes = sizes;
        self.validate()?;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: LatentModelSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-node draws: degree parameters and latent positions.
#[derive(Debug, Clone)]
pub struct LatentDraw {
    pub alphas: Vec<f64>,
    pub latents: Vec<Vec<f64>>,
    pub truth: LabelVector,
}

/// One realization of the model.
#[derive(Debug, Clone)]
pub struct ModelDraw {
    pub alphas: Vec<f64>,
    pub latents: Vec<Vec<f64>>,
    pub adjacency: AdjacencyMatrix,
    pub truth: LabelVector,
}

impl ModelDraw {
    /// Conditional edge probability for a pair, from the stored draws.
    pub fn edge_probability(&self, spec: &LatentModelSpec, i: usize, j: usize) -> f64 {
        let hz = spec.h_apply(&self.latents[j]);
        let quad: f64 = self.latents[i].iter().zip(&hz).map(|(a, b)| a * b).sum();
        sigmoid(self.alphas[i] + self.alphas[j] + quad)
    }

    /// Dense probability matrix (zero diagonal).
    pub fn probs_dense(&self, spec: &LatentModelSpec) -> Vec<Vec<f64>> {
        let n = self.alphas.len();
        let mut p = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    p[i][j] = self.edge_probability(spec, i, j);
                }
            }
        }
        p
    }
}

/// Draw the per-node variables only.
pub fn draw_latents(spec: &LatentModelSpec, seed: u64) -> Result<LatentDraw> {
    spec.validate()?;
    let truth = spec.truth_labels();
    let means = spec.community_means();
    let alphas: Vec<f64> = (0..spec.n)
        .map(|i| {
            let mut rng = substream(seed, StreamTag::NodeAlpha, i as u64, 0);
            spec.alpha_bar + spec.omega.sample(&mut rng)
        })
        .collect();
    let latents: Vec<Vec<f64>> = (0..spec.n)
        .map(|i| {
            let mut rng = substream(seed, StreamTag::NodeLatent, i as u64, 0);
            let mean = &means[truth.get(i) as usize - 1];
            (0..spec.d)
                .map(|c| {
                    let g: f64 = rng.sample(StandardNormal);
                    mean[c] + spec.tau * g
                })
                .collect()
        })
        .collect();
    Ok(LatentDraw {
        alphas,
        latents,
        truth,
    })
}

/// Sample the adjacency matrix conditionally on the latent draw. Each
/// unordered pair flips its own substream coin.
pub fn sample_edges(
    spec: &LatentModelSpec,
    draw: &LatentDraw,
    seed: u64,
) -> Result<AdjacencyMatrix> {
    let n = spec.n;
    // Precompute H z_j once per node.
    let hz: Vec<Vec<f64>> = draw.latents.iter().map(|z| spec.h_apply(z)).collect();
    let mut row_edges: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut local = Vec::new();
            let zi = &draw.latents[i];
            let ai = draw.alphas[i];
            for j in (i + 1)..n {
                let quad: f64 = zi.iter().zip(&hz[j]).map(|(a, b)| a * b).sum();
                let p = sigmoid(ai + draw.alphas[j] + quad);
                let mut rng = substream(seed, StreamTag::Edge, i as u64, j as u64);
                if rng.gen::<f64>() < p {
                    local.push((i, j));
                }
            }
            local
        })
        .collect();
    let edges: Vec<(usize, usize)> = row_edges.drain(..).flatten().collect();
    AdjacencyMatrix::from_edges(n, edges)
}

/// Draw a full model realization.
pub fn draw_model(spec: &LatentModelSpec, seed: u64) -> Result<ModelDraw> {
    let latents = draw_latents(spec, seed)?;
    let adjacency = sample_edges(spec, &latents, seed)?;
    Ok(ModelDraw {
        alphas: latents.alphas,
        latents: latents.latents,
        adjacency,
        truth: latents.truth,
    })
}

/// The four reference parameterizations used throughout the simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// d=3, n=1000, balanced, mu=(0.5,1,0), H=diag(1,1,0.5),
    /// alpha_bar=-2.49, omega ~ N(0,1); tau varies.
    Spec1 { tau: f64 },
    /// Spec1 with H=diag(1,1,-0.5) (indefinite quadratic form).
    Spec2 { tau: f64 },
    /// Spec1 with tau=0.5 fixed; alpha_bar varies over sparsity levels.
    Spec3 { alpha_bar: f64 },
    /// H=diag(1,1,-0.5) and mu rotated off the eigenvector, same norm.
    Spec4 { tau: f64, alpha_bar: f64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Spec1 { .. } => "spec1",
            Preset::Spec2 { .. } => "spec2",
            Preset::Spec3 { .. } => "spec3",
            Preset::Spec4 { .. } => "spec4",
        }
    }
}

/// Build a preset parameterization.
pub fn preset_spec(preset: Preset) -> Result<LatentModelSpec> {
    let base = |mu: Vec<f64>, h_diag: [f64; 3], tau: f64, alpha_bar: f64| LatentModelSpec {
        n: 1000,
        d: 3,
        k: 2,
        mu,
        tau,
        h: vec![
            h_diag[0], 0.0, 0.0, //
            0.0, h_diag[1], 0.0, //
            0.0, 0.0, h_diag[2],
        ],
        alpha_bar,
        omega: OmegaLaw::Normal { sd: 1.0 },
        sizes: vec![500, 500],
        means: None,
    };
    let spec = match preset {
        Preset::Spec1 { tau } => base(vec![0.5, 1.0, 0.0], [1.0, 1.0, 0.5], tau, -2.49),
        Preset::Spec2 { tau } => base(vec![0.5, 1.0, 0.0], [1.0, 1.0, -0.5], tau, -2.49),
        Preset::Spec3 { alpha_bar } => {
            base(vec![0.5, 1.0, 0.0], [1.0, 1.0, 0.5], 0.5, alpha_bar)
        }
        Preset::Spec4 { tau, alpha_bar } => {
            let s = (1.25f64 / 1.29).sqrt();
            base(
                vec![0.5 * s, 1.0 * s, 0.2 * s],
                [1.0, 1.0, -0.5],
                tau,
                alpha_bar,
            )
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// The variant grid each preset sweeps in the reference tables.
pub fn preset_variants(name: &str) -> Result<Vec<LatentModelSpec>> {
    const TAUS: [f64; 3] = [0.75, 0.5, 0.25];
    const ALPHAS: [f64; 3] = [-2.14, -2.49, -2.83];
    let presets: Vec<Preset> = match name {
        "spec1" => TAUS.iter().map(|&tau| Preset::Spec1 { tau }).collect(),
        "spec2" => TAUS.iter().map(|&tau| Preset::Spec2 { tau }).collect(),
        "spec3" => ALPHAS
            .iter()
            .map(|&alpha_bar| Preset::Spec3 { alpha_bar })
            .collect(),
        "spec4" => {
            let mut v: Vec<Preset> = TAUS
                .iter()
                .map(|&tau| Preset::Spec4 {
                    tau,
                    alpha_bar: -2.49,
                })
                .collect();
            v.extend(ALPHAS.iter().map(|&alpha_bar| Preset::Spec4 {
                tau: 0.5,
                alpha_bar,
            }));
            v
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset {other:?}; expected spec1|spec2|spec3|spec4"
            )))
        }
    };
    presets.into_iter().map(preset_spec).collect()
}

/// Parse a preset by name with optional parameter overrides.
pub fn preset_by_name(name: &str, tau: Option<f64>, alpha_bar: Option<f64>) -> Result<LatentModelSpec> {
    let preset = match name {
        "spec1" => Preset::Spec1 {
            tau: tau.unwrap_or(0.5),
        },
        "spec2" => Preset::Spec2 {
            tau: tau.unwrap_or(0.5),
        },
        "spec3" => Preset::Spec3 {
            alpha_bar: alpha_bar.unwrap_or(-2.49),
        },
        "spec4" => Preset::Spec4 {
            tau: tau.unwrap_or(0.5),
            alpha_bar: alpha_bar.unwrap_or(-2.49),
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset {other:?}; expected spec1|spec2|spec3|spec4"
            )))
        }
    };
    let mut spec = preset_spec(preset)?;
    if let Some(t) = tau {
        spec.tau = t;
    }
    if let Some(ab) = alpha_bar {
        spec.alpha_bar = ab;
    }
    spec.validate()?;
    Ok(spec)
}

/// Best-effort diagnostics for the asymptotic model assumptions. Reported,
/// never enforced.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// Whether the omega law is bounded (the degree assumption wants it).
    pub omega_bounded: bool,
    /// `omega'` (exact for bounded laws, 3 sd surrogate for Gaussian).
    pub omega_upper: f64,
    /// `alpha_bar + omega'`; sparsity needs this well below zero.
    pub alpha_plus_omega_upper: f64,
    pub sparsity_ok: bool,
    /// `n e^{2 alpha_bar} / sqrt(log n)`; minimum-degree growth.
    pub min_degree_growth: f64,
    pub min_degree_ok: bool,
    /// `e^{omega'} / min(n e^{2 alpha_bar}, n / log n)`; degree spread.
    pub degree_spread: f64,
    pub degree_spread_ok: bool,
    /// `tau sqrt(log n)`; latent noise scale.
    pub tau_sqrt_log_n: f64,
    pub tau_ok: bool,
    /// `mu' H mu`; assortativity.
    pub assortativity: f64,
    pub assortativity_ok: bool,
    /// Whether mu is an eigenvector of H with positive eigenvalue.
    pub mu_eigenvector_of_h: bool,
    pub mu_eigenvalue: f64,
    /// Spectral norm of H (1 under the identifiability normalization).
    pub h_norm: f64,
    pub h_normalized: bool,
}

pub fn check_assumptions(spec: &LatentModelSpec) -> Result<AssumptionReport> {
    spec.validate()?;
    let n = spec.n as f64;
    let log_n = n.ln();
    let omega_bounded = spec.omega.upper_bound().is_some();
    let omega_upper = spec.omega.upper_bound().unwrap_or(match &spec.omega {
        OmegaLaw::Normal { sd } => 3.0 * sd,
        _ => 0.0,
    });
    let alpha_plus = spec.alpha_bar + omega_upper;
    // For unbounded laws there is no omega'; judge sparsity at the mean
    // level and let `omega_bounded = false` carry the caveat.
    let sparsity_ok = if omega_bounded {
        alpha_plus < 0.0
    } else {
        spec.alpha_bar < 0.0
    };
    let min_degree_growth = n * (2.0 * spec.alpha_bar).exp() / log_n.sqrt();
    let degree_spread =
        omega_upper.exp() / (n * (2.0 * spec.alpha_bar).exp()).min(n / log_n);
    let tau_sqrt_log_n = spec.tau * log_n.sqrt();

    let hmu = spec.h_apply(&spec.mu);
    let assortativity: f64 = spec.mu.iter().zip(&hmu).map(|(a, b)| a * b).sum();
    let mu_norm_sq: f64 = spec.mu.iter().map(|v| v * v).sum();
    let hmu_norm: f64 = hmu.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (mu_is_eig, eigval) = if mu_norm_sq > 0.0 {
        let lambda = assortativity / mu_norm_sq;
        let resid: f64 = hmu
            .iter()
            .zip(&spec.mu)
            .map(|(h, m)| (h - lambda * m) * (h - lambda * m))
            .sum::<f64>()
            .sqrt();
        (resid <= 1e-9 * hmu_norm.max(1e-300) && lambda > 0.0, lambda)
    } else {
        (false, 0.0)
    };
    let h_norm = spec.h_spectral_norm();

    Ok(AssumptionReport {
        omega_bounded,
        omega_upper,
        alpha_plus_omega_upper: alpha_plus,
        sparsity_ok,
        min_degree_growth,
        min_degree_ok: min_degree_growth >= 1.0,
        degree_spread,
        degree_spread_ok: degree_spread < 1.0,
        tau_sqrt_log_n,
        tau_ok: tau_sqrt_log_n <= 2.0,
        assortativity,
        assortativity_ok: assortativity > 0.0,
        mu_eigenvector_of_h: mu_is_eig,
        mu_eigenvalue: eigval,
        h_norm,
        h_normalized: (h_norm - 1.0).abs() <= 1e-9,
    })
}
