//! `speclore` — command-line front end for latent space community
//! detection: data generation, the clustering pipelines, loss evaluation,
//! simulation tables, and theoretical rate estimates.
//!
//! Every command is deterministic given `--seed`, independent of
//! `--threads`. Wall times are reported in the JSON run reports only, so
//! table outputs compare byte-for-byte across runs and thread counts.

mod report;
mod simulate;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use speclore::genmodel::{
    check_assumptions, draw_model, preset_by_name, LatentModelSpec,
};
use speclore::graph::load_edge_list_path;
use speclore::labels::LabelVector;
use speclore::theory::{bayes_risk, misclustering_loss, rate_bounds, RateConfig};

#[derive(Parser)]
#[command(
    name = "speclore",
    about = "Community detection for sparse latent space network models",
    version
)]
struct Cli {
    /// Worker threads (default: all cores; env LC_COMMUNE_THREADS as
    /// fallback). Results never depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a network from a preset or a JSON model spec and write the
    /// edge list, ground-truth labels, and optionally the latent draws.
    Generate(GenerateArgs),
    /// Cluster an edge list with the spectral+refinement pipeline or the
    /// leave-one-out variant.
    Cluster(ClusterArgs),
    /// Misclustering proportion between two label files.
    Evaluate(EvaluateArgs),
    /// Repeatedly draw, cluster, and score a preset; write the results
    /// table as CSV plus a JSON run report.
    Simulate(simulate::SimulateArgs),
    /// Monte-Carlo estimates of the theoretical error-rate envelopes.
    Rates(RatesArgs),
}

#[derive(Args)]
struct SpecSource {
    /// Preset name: spec1 | spec2 | spec3 | spec4.
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,
    /// Path to a JSON model spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Latent noise scale override (presets).
    #[arg(long)]
    tau: Option<f64>,
    /// Degree offset override (presets).
    #[arg(long, allow_hyphen_values = true)]
    alpha_bar: Option<f64>,
    /// Node count override.
    #[arg(long)]
    n: Option<usize>,
    /// Rescale H to unit spectral norm before drawing.
    #[arg(long)]
    normalize_h: bool,
}

impl SpecSource {
    fn load(&self) -> Result<LatentModelSpec> {
        let mut spec = match (&self.preset, &self.spec) {
            (Some(name), None) => preset_by_name(name, self.tau, self.alpha_bar)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading model spec {}", path.display()))?;
                let mut s = LatentModelSpec::from_json(&text)?;
                if let Some(t) = self.tau {
                    s.tau = t;
                }
                if let Some(ab) = self.alpha_bar {
                    s.alpha_bar = ab;
                }
                s
            }
            _ => bail!("exactly one of --preset or --spec is required"),
        };
        if let Some(n) = self.n {
            spec = spec.with_n(n)?;
        }
        if self.normalize_h {
            let prev = spec.normalize_h();
            eprintln!("note: H rescaled from spectral norm {prev:.6} to 1");
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: SpecSource,
    /// Output prefix; writes PREFIX.edges and PREFIX.labels.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write PREFIX.latents.csv with alphas and latent positions.
    #[arg(long)]
    latents: bool,
    /// Print the assumption diagnostics for the spec.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args)]
struct ClusterArgs {
    /// Edge list file (one `i j` pair per line).
    #[arg(long)]
    edges: PathBuf,
    /// Number of communities.
    #[arg(long, short)]
    k: usize,
    /// Refinement rounds (0 = raw initialization, may leave 0 labels).
    #[arg(long, short, default_value_t = 10)]
    rounds: usize,
    /// speclore (init + refinement) or provable (leave-one-out variant).
    #[arg(long, default_value = "speclore")]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node count (otherwise inferred from the max node id).
    #[arg(long)]
    n_hint: Option<usize>,
    /// Treat node ids as 1-based.
    #[arg(long)]
    one_indexed: bool,
    /// Output label file.
    #[arg(long, short)]
    out: PathBuf,
    /// JSON run report path (default: OUT with .report.json appended).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long, short)]
    k: usize,
    /// Optional JSON output path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    source: SpecSource,
    /// Exponent slack in [0, 0.5).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Outer Monte-Carlo samples of the null draw.
    #[arg(long, default_value_t = 20_000)]
    outer: usize,
    /// Inner samples per outer draw for the pair probabilities.
    #[arg(long, default_value_t = 512)]
    inner: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON output path (stdout if omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Rates(args) => cmd_rates(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn init_threads(flag: Option<usize>) {
    let from_env = std::env::var("LC_COMMUNE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(t) = flag.or(from_env) {
        if t > 0 {
            // Ignore failure: the global pool can only be set once (tests).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let spec = args.source.load()?;
    if args.diagnostics {
        let report = check_assumptions(&spec)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    let draw = draw_model(&spec, args.seed)?;

    let edges_path = args.out.with_extension("edges");
    let labels_path = args.out.with_extension("labels");
    draw.adjacency.save_edge_list(&edges_path, false)?;
    draw.truth.save(&labels_path)?;
    let spec_path = args.out.with_extension("spec.json");
    std::fs::write(&spec_path, spec.to_json()?)?;

    if args.latents {
        let latents_path = args.out.with_extension("latents.csv");
        let mut w = String::new();
        w.push_str("node,label,alpha");
        for c in 0..spec.d {
            w.push_str(&format!(",z{c}"));
        }
        w.push('\n');
        for i in 0..spec.n {
            w.push_str(&format!("{i},{},{}", draw.truth.get(i), draw.alphas[i]));
            for c in 0..spec.d {
                w.push_str(&format!(",{}", draw.latents[i][c]));
            }
            w.push('\n');
        }
        std::fs::write(&latents_path, w)?;
    }

    let stats = draw.adjacency.degree_stats();
    println!(
        "wrote {} ({} nodes, {} edges, avg degree {:.2})",
        edges_path.display(),
        spec.n,
        draw.adjacency.edge_count(),
        stats.avg_degree
    );
    println!("wrote {}", labels_path.display());
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let loaded = load_edge_list_path(&args.edges, args.n_hint, args.one_indexed)?;
    if loaded.self_loops_dropped > 0 {
        eprintln!(
            "warning: dropped {} self-loop line(s)",
            loaded.self_loops_dropped
        );
    }
    let a = loaded.matrix;
    let report = match args.method.as_str() {
        "speclore" => {
            let out = speclore::pipeline::cluster(&a, args.k, args.rounds, args.seed)?;
            out.labels.save(&args.out)?;
            report::ClusterReport::speclore(&args, &a, &out)
        }
        "provable" => {
            let t0 = std::time::Instant::now();
            let (labels, per_node) = report::timed_leave_one_out(&a, args.k, args.seed)?;
            labels.save(&args.out)?;
            report::ClusterReport::provable(&args, &a, t0.elapsed(), per_node)
        }
        other => bail!("unknown method {other:?}; expected speclore|provable"),
    };

    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| report::with_suffix(&args.out, ".report.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    println!(
        "wrote {} and {}",
        args.out.display(),
        report_path.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let truth = LabelVector::load(&args.truth, args.k)?;
    let estimate = LabelVector::load(&args.estimate, args.k)?;
    let loss = misclustering_loss(&truth, &estimate)?;
    let payload = serde_json::json!({
        "truth": args.truth,
        "estimate": args.estimate,
        "k": args.k,
        "misclustering_proportion": loss,
    });
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&payload)?)?;
    }
    println!("misclustering proportion: {loss}");
    Ok(())
}

fn cmd_rates(args: RatesArgs) -> Result<()> {
    let spec = args.source.load()?;
    let n = args.source.n.unwrap_or(spec.n);
    let cfg = RateConfig::new(args.epsilon, n, args.outer, args.inner)?;
    let est = rate_bounds(&spec, &cfg, args.seed)?;
    let bayes = bayes_risk(&spec.mu, spec.tau)?;
    let payload = serde_json::json!({
        "rate_estimate": est,
        "bayes_risk": bayes,
        "seed": args.seed,
    });
    let text = serde_json::to_string_pretty(&payload)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!(
                "nu_upper = {:.6e}, nu_lower = {:.6e} (wrote {})",
                est.upper.total,
                est.lower.total,
                path.display()
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}
