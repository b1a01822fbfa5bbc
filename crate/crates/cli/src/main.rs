use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use shallow_lab::adversary::{build_instance, instance_report, ReportOptions};
use shallow_lab::experiment::{default_grid, experiment_svg, instance_svg, run_grid, to_csv};
use shallow_lab::io::{read_instance, read_json, to_json, write_instance};
use shallow_lab::partition::{
    baseline_partition, coloring_from_partition, crossing_number, oracle_min_crossing,
    validate_partition, KPartition,
};
use shallow_lab::treecolor::{
    greedy_colorful_path, slice_bound, tree_from_instance, validate_coloring, MultiColoredTree,
};
use shallow_lab::{Error, Point};

mod sampler;

#[derive(Parser)]
#[command(name = "shallow-lab", version, about = "Shallow partitions of planar point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a (padded) lower-bound instance.
    GenInstance(GenArgs),
    /// Exact crossing number of a partition of an instance.
    EvalPartition(EvalArgs),
    /// Check a tree multi-coloring against node sizes and a class cap.
    TreeCheck(TreeCheckArgs),
    /// Greedy colorful root-leaf path of a tree.
    TreePath(TreePathArgs),
    /// Growth experiment over a grid of (n, k).
    Experiment(ExperimentArgs),
    /// Minimum crossing number over all partitions of a tiny point set.
    Oracle(OracleArgs),
    /// Draw an instance and optionally a partition as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: usize,
    /// Chain size; builds the raw instance for (m, k) without parameter
    /// selection or padding.
    #[arg(long, conflicts_with = "n")]
    m: Option<usize>,
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    no_padding: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Partition file; the baseline partition is used when omitted.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    k: usize,
    /// Also report the best of this many random k-shallow lines.
    #[arg(long)]
    sample_oracle: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Certificate output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Writes the instance tree colored by the partition.
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

#[derive(Args)]
struct TreeCheckArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    cap: usize,
}

#[derive(Args)]
struct TreePathArgs {
    #[arg(long)]
    tree: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Explicit grid as `n:k` pairs, e.g. `64:8,128:7`.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["lo", "hi"])]
    grid: Option<Vec<String>>,
    /// Smallest exponent of the default grid `n = 2^e`, `k = e`.
    #[arg(long, default_value_t = 6)]
    lo: u32,
    #[arg(long, default_value_t = 12)]
    hi: u32,
    #[arg(long, default_value = "experiment.csv")]
    csv: PathBuf,
    #[arg(long, default_value = "experiment.svg")]
    svg: PathBuf,
    /// Writes 0 in the runtime column so that runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// JSON list of points.
    #[arg(long, conflicts_with = "instance")]
    points: Option<PathBuf>,
    /// Uses the instance points (with padding).
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    k: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

/// Failure with a fixed exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code, _)) = err.downcast_ref::<Exit>() {
        return *code;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::ParameterRange(_) | Error::InvalidDepth { .. } | Error::OracleTooLarge(_)) => 3,
        Some(
            Error::InvalidPartition(_)
            | Error::InvalidInput(_)
            | Error::DegenerateInput(_)
            | Error::PaddingUnverifiable(_)
            | Error::EpsilonTooLarge { .. },
        ) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Ok(v) = std::env::var("SHALLOW_LAB_THREADS") {
        match v.parse::<usize>() {
            Ok(t) if t > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("error: SHALLOW_LAB_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(3);
            }
        }
    }
    let result = match cli.command {
        Command::GenInstance(a) => gen_instance(a),
        Command::EvalPartition(a) => eval_partition(a),
        Command::TreeCheck(a) => tree_check(a),
        Command::TreePath(a) => tree_path(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit<T: Serialize + ?Sized>(value: &T, output: Option<&Path>) -> anyhow::Result<()> {
    let text = to_json(value);
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen_instance(a: GenArgs) -> anyhow::Result<()> {
    let inst = match (a.n, a.m) {
        (_, Some(m)) => build_instance(m, a.k)?,
        (Some(n), None) => {
            let opts = ReportOptions {
                pad: !(a.no_padding || a.raw),
                ..Default::default()
            };
            let (inst, report) = instance_report(n, a.k, opts)?;
            eprintln!(
                "n={} k={} beta={} m={} n'={} padding={} lower bound={}",
                report.n, report.k, report.beta, report.m, report.n_prime, report.padding,
                report.crossing_lower_bound
            );
            inst
        }
        (None, None) => bail!(Exit(3, "either --n or --m is required".into())),
    };
    match &a.output {
        Some(p) => write_instance(p, &inst)?,
        None => print!("{}", to_json(&shallow_lab::io::InstanceFile::from(&inst))),
    }
    let failed: Vec<&str> = inst.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        bail!(Exit(2, format!("construction checks failed: {}", failed.join(", "))));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    k: usize,
    points: usize,
    parts: usize,
    certificate: &'a shallow_lab::partition::CrossingCertificate,
    max_distinct_colors: usize,
    inequality_holds: bool,
    coloring_violations: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    sampler_max: Option<usize>,
}

fn eval_partition(a: EvalArgs) -> anyhow::Result<()> {
    let inst = read_instance(&a.instance)?;
    let points = inst.all_points();
    let partition: KPartition = match &a.partition {
        Some(p) => read_json(p)?,
        None => baseline_partition(&points, a.k)?,
    };
    let cert = crossing_number(&points, &partition, a.k)?;
    let coloring = coloring_from_partition(&inst, &partition, a.k)?;
    let holds = coloring.max_distinct <= cert.value + 1;
    let sampled = a
        .sample_oracle
        .map(|s| sampler::best_sampled(&points, &partition, a.k, s, a.seed));

    println!(
        "crossing number {} (witness {}, {} points below); max distinct colors {} <= {} + 1: {}",
        cert.value,
        cert.witness,
        cert.below_count,
        coloring.max_distinct,
        cert.value,
        if holds { "holds" } else { "VIOLATED" }
    );
    if let Some(s) = sampled {
        println!("random sampler best {s} (exact {})", cert.value);
    }
    let out = EvalOutput {
        k: a.k,
        points: points.len(),
        parts: partition.parts.len(),
        certificate: &cert,
        max_distinct_colors: coloring.max_distinct,
        inequality_holds: holds,
        coloring_violations: &coloring.violations,
        sampler_max: sampled,
    };
    if let Some(p) = &a.output {
        emit(&out, Some(p))?;
    }
    if let Some(p) = &a.tree_out {
        let tree = tree_from_instance(&inst, Some(&coloring.colors))?;
        emit(&tree, Some(p))?;
    }
    if !holds || !coloring.ok() || sampled.is_some_and(|s| s > cert.value) {
        bail!(Exit(2, "partition checks failed".into()));
    }
    Ok(())
}

fn tree_check(a: TreeCheckArgs) -> anyhow::Result<()> {
    let tree: MultiColoredTree = read_json(&a.tree)?;
    let tree = MultiColoredTree::new(tree.beta, tree.colors)?;
    let report = validate_coloring(&tree, a.k, a.cap);
    emit(&report, None)?;
    if !report.ok() {
        bail!(Exit(2, format!("{} violations", report.violations.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct PathOutput {
    beta: u32,
    slice_bound: usize,
    #[serde(flatten)]
    path: shallow_lab::treecolor::GreedyPath,
}

fn tree_path(a: TreePathArgs) -> anyhow::Result<()> {
    let tree: MultiColoredTree = read_json(&a.tree)?;
    let tree = MultiColoredTree::new(tree.beta, tree.colors)?;
    let path = greedy_colorful_path(&tree);
    emit(
        &PathOutput {
            beta: tree.beta,
            slice_bound: slice_bound(tree.beta),
            path,
        },
        None,
    )
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let grid: Vec<(usize, usize)> = match &a.grid {
        Some(pairs) => pairs
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                let (n, k) = s
                    .split_once(':')
                    .ok_or_else(|| Exit(3, format!("grid entry {s:?} is not n:k")))?;
                Ok((
                    n.trim().parse().map_err(|_| Exit(3, format!("bad n in {s:?}")))?,
                    k.trim().parse().map_err(|_| Exit(3, format!("bad k in {s:?}")))?,
                ))
            })
            .collect::<Result<_, Exit>>()?,
        None => default_grid(a.lo, a.hi),
    };
    let rows = run_grid(&grid, !a.no_timing);
    fs::write(&a.csv, to_csv(&rows)).with_context(|| format!("writing {}", a.csv.display()))?;
    fs::write(&a.svg, experiment_svg(&rows)).with_context(|| format!("writing {}", a.svg.display()))?;
    for r in &rows {
        eprintln!(
            "n={:>6} k={:>4} beta={:>2} n'={:>5} crossing={}{} lower={} {}",
            r.n,
            r.k,
            r.beta,
            r.n_prime,
            r.measured_crossing,
            if r.measured_exact { "" } else { "+" },
            r.lower_bound,
            r.status
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    k: usize,
    minimum: usize,
    certificate: shallow_lab::partition::CrossingCertificate,
    partition: KPartition,
}

fn oracle(a: OracleArgs) -> anyhow::Result<()> {
    let points: Vec<Point> = match (&a.points, &a.instance) {
        (Some(p), None) => read_json(p)?,
        (None, Some(i)) => read_instance(i)?.all_points(),
        _ => bail!(Exit(3, "one of --points or --instance is required".into())),
    };
    let (certificate, partition) = oracle_min_crossing(&points, a.k)?;
    debug_assert!(validate_partition(&points, &partition, a.k).is_valid());
    emit(
        &OracleOutput {
            k: a.k,
            minimum: certificate.value,
            certificate,
            partition,
        },
        a.output.as_deref(),
    )
}

fn render(a: RenderArgs) -> anyhow::Result<()> {
    let inst = read_instance(&a.instance)?;
    let partition: Option<KPartition> = a.partition.as_ref().map(read_json).transpose()?;
    let svg = instance_svg(&inst.points, &inst.padding, partition.as_ref());
    fs::write(&a.output, svg).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}
