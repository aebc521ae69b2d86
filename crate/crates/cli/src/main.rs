use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use infoclus::bench::{bench_size, BenchRecord};
use infoclus::dataset::{load_dataset, load_embedding};
use infoclus::hierarchy::{annotate_stats, build_dendrogram, load_dendrogram, Linkage};
use infoclus::kmeans::kmeans_generate;
use infoclus::report::{explanations_svg, scatter_svg, ConfigEcho, RunResult};
use infoclus::search::{greedy_search, Generator, SearchConfig};
use infoclus::stats::ScoreParams;

#[derive(Parser)]
#[command(
    name = "infoclus",
    version,
    about = "Informative clusters with explanations for 2-D embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the most informative partitioning of an embedding.
    Run(RunArgs),
    /// Time initialization, iterations and candidate scoring on synthetic data.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Ward,
    Single,
    Complete,
    Average,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Ward => Linkage::Ward,
            LinkageArg::Single => Linkage::Single,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Average => Linkage::Average,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Hierarchical,
    Kmeans,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Two-column embedding CSV, row-aligned with the dataset.
    #[arg(long)]
    embedding: PathBuf,
    /// Complexity offset. Values between n/10 and n work well; defaults to n/2.
    #[arg(long)]
    alpha: Option<f64>,
    /// Complexity exponent (>= 1). Values around 1.5 work well.
    #[arg(long, default_value_t = 1.5)]
    beta: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_att: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    max_att: u64,
    /// Wall-clock budget in seconds, checked between iterations.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, value_enum, default_value = "ward")]
    linkage: LinkageArg,
    #[arg(long, value_enum, default_value = "hierarchical")]
    generator: GeneratorArg,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    min_cluster_size: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Merge-order dendrogram CSV used instead of clustering the embedding.
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    #[arg(long, default_value = "./infoclus-out")]
    out_dir: PathBuf,
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated dataset sizes.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(16..))]
    sizes: Vec<u64>,
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u64).range(2..))]
    features: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search iterations timed per size.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    #[arg(long, default_value = "./infoclus-out")]
    out_dir: PathBuf,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<infoclus::Error> for Failure {
    fn from(e: infoclus::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see `infoclus --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    if args.min_att > args.max_att {
        return Err(Failure::Usage(format!(
            "--min-att {} exceeds --max-att {}",
            args.min_att, args.max_att
        )));
    }
    let generator = match args.generator {
        GeneratorArg::Hierarchical => Generator::Hierarchical,
        GeneratorArg::Kmeans => Generator::Kmeans,
    };
    if generator == Generator::Hierarchical
        && args.time_budget.is_none()
        && args.max_iterations.is_none()
    {
        return Err(Failure::Usage(
            "set --time-budget and/or --max-iterations".into(),
        ));
    }
    if generator == Generator::Kmeans && (args.k_min < 2 || args.k_min > args.k_max) {
        return Err(Failure::Usage(format!(
            "invalid k range {}..={}",
            args.k_min, args.k_max
        )));
    }

    let started = Instant::now();
    let dataset = load_dataset(&args.data, None)?;
    let embedding = load_embedding(&args.embedding, dataset.n())?;

    let alpha = args.alpha.unwrap_or(dataset.n() as f64 / 2.0);
    let score = ScoreParams::new(alpha, args.beta).map_err(|e| Failure::Usage(e.to_string()))?;
    let config = SearchConfig {
        score,
        min_att: args.min_att as usize,
        max_att: args.max_att as usize,
        time_budget: args.time_budget,
        max_iterations: args.max_iterations,
        min_cluster_size: args.min_cluster_size as usize,
        generator,
        k_min: args.k_min,
        k_max: args.k_max.min(dataset.n()),
        seed: args.seed,
    };
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let linkage: Linkage = args.linkage.into();

    let init_started = Instant::now();
    let (pwx, log, initialization_seconds) = match generator {
        Generator::Hierarchical => {
            let tree = match &args.dendrogram {
                Some(path) => load_dendrogram(path)?,
                None => build_dendrogram(&embedding, linkage)?,
            };
            let tree = annotate_stats(tree, &dataset)?;
            let init = init_started.elapsed().as_secs_f64();
            let (pwx, log) = greedy_search(&tree, &config)?;
            (pwx, log, init)
        }
        Generator::Kmeans => {
            let (pwx, log) = kmeans_generate(&embedding, &dataset, &config)?;
            (pwx, log, 0.0)
        }
    };

    let result = RunResult::new(
        ConfigEcho::new(&config, linkage, args.dendrogram.is_some()),
        &dataset,
        &pwx,
        &log,
        initialization_seconds,
        started.elapsed().as_secs_f64(),
    );
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Run(format!("cannot create {}: {e}", args.out_dir.display())))?;
    write_file(&args.out_dir.join("result.json"), &result.to_json())?;
    if !args.no_plots {
        write_file(
            &args.out_dir.join("scatter.svg"),
            &scatter_svg(&embedding, &result),
        )?;
        write_file(
            &args.out_dir.join("explanations.svg"),
            &explanations_svg(&result, &dataset),
        )?;
    }

    println!(
        "{} clusters, ratio {:.6}, {} attributes selected, {} iterations",
        result.clusters.len(),
        result.ratio,
        result
            .clusters
            .iter()
            .map(|c| c.attributes.len())
            .sum::<usize>(),
        result.iterations.len()
    );
    for c in &result.clusters {
        let names: Vec<&str> = c.attributes.iter().map(|a| a.name.as_str()).collect();
        println!(
            "  cluster {}{} n={}: {}",
            c.id,
            if c.is_remainder { " (rest)" } else { "" },
            c.size,
            names.join(", ")
        );
    }
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct BenchReport {
    features: usize,
    seed: u64,
    iterations: usize,
    records: Vec<BenchRecord>,
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let mut records = Vec::with_capacity(args.sizes.len());
    for &n in &args.sizes {
        let r = bench_size(
            n as usize,
            args.features as usize,
            args.seed,
            args.iterations as usize,
        )?;
        println!(
            "n={:>7}  init {:>10.4}s  per iteration {:>10.4}s  per partitioning {:>12.3e}s",
            r.n, r.initialization_seconds, r.per_iteration_seconds, r.per_partitioning_seconds
        );
        records.push(r);
    }
    let report = BenchReport {
        features: args.features as usize,
        seed: args.seed,
        iterations: args.iterations as usize,
        records,
    };
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Run(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let json = serde_json::to_string_pretty(&report).expect("serializable report") + "\n";
    write_file(&args.out_dir.join("bench.json"), &json)?;
    Ok(())
}
