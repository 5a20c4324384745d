//! The `simulate` subcommand: repeated draw / cluster / score runs over a
//! preset's variant grid, written as a CSV table plus a JSON run report.
//!
//! The CSV holds only seed-determined quantities (errors, degrees, Bayes
//! risk), so its bytes are identical across thread counts for a fixed
//! seed. Wall times go to the JSON report.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use speclore::genmodel::{draw_model, preset_variants, LatentModelSpec};
use speclore::pipeline::initialize;
use speclore::provable::provable_cluster;
use speclore::refine::refine_once;
use speclore::rng::derived_seed;
use speclore::theory::{bayes_risk, misclustering_loss};

use crate::report::{command_echo, with_suffix};

#[derive(Args)]
pub struct SimulateArgs {
    /// Preset grid to sweep: spec1 | spec2 | spec3 | spec4.
    #[arg(long)]
    preset: String,
    /// Repetitions per variant.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Refinement round counts to report, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    rounds: Vec<usize>,
    /// Methods to run: speclore and/or provable, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "speclore")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node count override (handy for quick runs).
    #[arg(long)]
    n: Option<usize>,
    /// Output prefix; writes PREFIX.csv and PREFIX.report.json.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Serialize, Clone)]
struct RepRecord {
    rep: usize,
    seed: u64,
    avg_degree: f64,
    init_error: f64,
    init_seconds: f64,
    /// (rounds, error, cumulative refine seconds) per requested R.
    by_round: Vec<(usize, f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provable_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provable_seconds: Option<f64>,
}

#[derive(Serialize)]
struct VariantReport {
    tau: f64,
    alpha_bar: f64,
    bayes_risk: f64,
    avg_degree_mean: f64,
    init_error_mean: f64,
    init_error_sd: Option<f64>,
    reps: Vec<RepRecord>,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    preset: String,
    seed: u64,
    reps: usize,
    rounds: Vec<usize>,
    methods: Vec<String>,
    csv_path: PathBuf,
    variants: Vec<VariantReport>,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let run_provable = args.methods.iter().any(|m| m == "provable");
    let run_speclore = args.methods.iter().any(|m| m == "speclore");
    if let Some(bad) = args
        .methods
        .iter()
        .find(|m| *m != "provable" && *m != "speclore")
    {
        bail!("unknown method {bad:?}; expected speclore|provable");
    }
    let mut rounds = args.rounds.clone();
    rounds.sort_unstable();
    rounds.dedup();
    if run_speclore && rounds.is_empty() {
        bail!("--rounds must name at least one round count");
    }

    let mut variants = preset_variants(&args.preset)?;
    if let Some(n) = args.n {
        variants = variants
            .into_iter()
            .map(|v| v.with_n(n))
            .collect::<speclore::Result<Vec<_>>>()?;
    }

    let mut variant_reports = Vec::new();
    for (v_idx, spec) in variants.iter().enumerate() {
        let records: Vec<RepRecord> = (0..args.reps)
            .into_par_iter()
            .map(|rep| run_rep(spec, &rounds, run_speclore, run_provable, args.seed, v_idx, rep))
            .collect::<Result<Vec<_>>>()?;
        let bayes = bayes_risk(&spec.mu, spec.tau)?;
        let (init_mean, init_sd) = mean_sd(records.iter().map(|r| r.init_error));
        variant_reports.push(VariantReport {
            tau: spec.tau,
            alpha_bar: spec.alpha_bar,
            bayes_risk: bayes,
            avg_degree_mean: mean_sd(records.iter().map(|r| r.avg_degree)).0,
            init_error_mean: init_mean,
            init_error_sd: init_sd,
            reps: records,
        });
    }

    let csv_path = with_suffix(&args.out, ".csv");
    let csv = render_csv(&args, &variants, &variant_reports, &rounds, run_speclore, run_provable);
    std::fs::write(&csv_path, &csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let report = RunReport {
        command: command_echo(),
        preset: args.preset.clone(),
        seed: args.seed,
        reps: args.reps,
        rounds: rounds.clone(),
        methods: args.methods.clone(),
        csv_path: csv_path.clone(),
        variants: variant_reports,
    };
    let report_path = with_suffix(&args.out, ".report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;

    print!("{csv}");
    println!("wrote {} and {}", csv_path.display(), report_path.display());
    Ok(())
}

fn run_rep(
    spec: &LatentModelSpec,
    rounds: &[usize],
    run_speclore: bool,
    run_provable: bool,
    master_seed: u64,
    v_idx: usize,
    rep: usize,
) -> Result<RepRecord> {
    let seed = derived_seed(master_seed, v_idx as u64, rep as u64);
    let draw = draw_model(spec, seed)?;
    let avg_degree = draw.adjacency.degree_stats().avg_degree;

    let mut init_error = f64::NAN;
    let mut init_seconds = 0.0;
    let mut by_round = Vec::new();
    if run_speclore {
        let t0 = std::time::Instant::now();
        let init = initialize(&draw.adjacency, spec.k, seed)?;
        init_seconds = t0.elapsed().as_secs_f64();
        init_error = misclustering_loss(&draw.truth, &init.labels)?;

        let max_round = rounds.iter().copied().max().unwrap_or(0);
        let mut labels = init.labels;
        let t1 = std::time::Instant::now();
        for r in 1..=max_round {
            labels = refine_once(&draw.adjacency, &labels)?;
            if rounds.contains(&r) {
                let err = misclustering_loss(&draw.truth, &labels)?;
                by_round.push((r, err, t1.elapsed().as_secs_f64()));
            }
        }
        if rounds.contains(&0) {
            by_round.insert(0, (0, init_error, 0.0));
        }
    }

    let (provable_error, provable_seconds) = if run_provable {
        let t = std::time::Instant::now();
        let labels = provable_cluster(&draw.adjacency, spec.k, seed)?;
        let secs = t.elapsed().as_secs_f64();
        (
            Some(misclustering_loss(&draw.truth, &labels)?),
            Some(secs),
        )
    } else {
        (None, None)
    };

    Ok(RepRecord {
        rep,
        seed,
        avg_degree,
        init_error,
        init_seconds,
        by_round,
        provable_error,
        provable_seconds,
    })
}

fn render_csv(
    args: &SimulateArgs,
    variants: &[LatentModelSpec],
    reports: &[VariantReport],
    rounds: &[usize],
    run_speclore: bool,
    run_provable: bool,
) -> String {
    let mut out = String::new();
    out.push_str(
        "preset,tau,alpha_bar,method,rounds,reps,avg_degree,bayes_risk,initial_error,initial_error_sd,error,error_sd\n",
    );
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for (spec, rep) in variants.iter().zip(reports) {
        let prefix = |method: &str, rounds_field: &str| {
            format!(
                "{},{:.6},{:.6},{},{},{},{:.6},{:.6e}",
                args.preset,
                spec.tau,
                spec.alpha_bar,
                method,
                rounds_field,
                args.reps,
                rep.avg_degree_mean,
                rep.bayes_risk,
            )
        };
        if run_speclore {
            for &r in rounds {
                let (err_mean, err_sd) = mean_sd(rep.reps.iter().filter_map(|rr| {
                    rr.by_round
                        .iter()
                        .find(|(rnd, _, _)| *rnd == r)
                        .map(|(_, e, _)| *e)
                }));
                out.push_str(&format!(
                    "{},{:.6},{},{:.6},{}\n",
                    prefix("speclore", &r.to_string()),
                    rep.init_error_mean,
                    fmt_opt(rep.init_error_sd),
                    err_mean,
                    fmt_opt(err_sd),
                ));
            }
        }
        if run_provable {
            let (err_mean, err_sd) =
                mean_sd(rep.reps.iter().filter_map(|rr| rr.provable_error));
            out.push_str(&format!(
                "{},,,{:.6},{}\n",
                prefix("provable", ""),
                err_mean,
                fmt_opt(err_sd),
            ));
        }
    }
    out
}

/// Mean and sample standard deviation; the sd is None for one value.
fn mean_sd(values: impl Iterator<Item = f64>) -> (f64, Option<f64>) {
    let vals: Vec<f64> = values.collect();
    if vals.is_empty() {
        return (f64::NAN, None);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, None);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}
