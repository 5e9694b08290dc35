//! Command-line harness: reduce, cluster, export pairs and sweep parameters.
//!
//! Every command is a deterministic function of its [`RunConfig`]. Metric
//! tables are CSV with a leading `#` line echoing the configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::data::{gen_synthetic, load_csv, PointSet, Seed, Synthetic};
use crate::error::{Error, Result};
use crate::graph_io::write_graph;
use crate::knn::{build_knn, default_k_max, NeighborTable};
use crate::metrics::{acc, ari, edge_percentage};
use crate::pairs::{export_pairs, write_pairs};
use crate::reduce::{affinity_rows, mutual_knn_graph, reduce_with_scales, ReducedGraph};
use crate::scale::{compute_scales, fd_bin_width, LocalScales};
use crate::spectral::spectral_cluster;

#[derive(Debug, Parser)]
#[command(name = "graph-reduce", version, about = "Sparse mutual similarity graphs and spectral clustering with self-tuned scales")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the reduced graph and write it as an edge list.
    Reduce {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write a Freedman–Diaconis histogram of all k-NN affinities.
        #[arg(long)]
        histogram: bool,
    },
    /// Reduce and cluster, reporting ACC, ARI and E% per repeat.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export positive/negative training pairs as JSON lines.
    Pairs {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the pipeline over a grid of k_max or baseline-k values.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values and inclusive ranges, e.g. `2..20` or `20,30,40`.
        #[arg(long)]
        values: String,
    },
    /// Cluster an unweighted mutual k-NN graph (no reduction) for comparison.
    BaselineKnn {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    KMax,
    BaselineK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ScaleRule {
    /// Histogram density break (default).
    #[default]
    Histogram,
    /// Distance to the 7th neighbor, for comparison with fixed-neighbor scaling.
    Seventh,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// CSV point file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Synthetic recipe, e.g. `circles:per=200,radii=1/3,noise=0.05`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// 0-based column holding class labels in the CSV.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Candidate neighborhood size; defaults to min(N - 1, 50).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Number of clusters; defaults to the number of label classes.
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ScaleRule::Histogram)]
    pub scale: ScaleRule,
    /// Add a per-repeat wall-time column (makes output run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    Csv { path: PathBuf, label_column: Option<usize> },
    Synthetic(String),
}

impl std::fmt::Display for InputSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InputSpec::Csv { path, label_column } => {
                write!(f, "csv:{}", path.display())?;
                if let Some(c) = label_column {
                    write!(f, "@{c}")?;
                }
                Ok(())
            }
            InputSpec::Synthetic(s) => write!(f, "synthetic:{s}"),
        }
    }
}

/// Everything a command needs; see [`CommonArgs`] for meanings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSpec,
    pub k_max: Option<usize>,
    pub clusters: Option<usize>,
    pub seed: Seed,
    pub repeats: usize,
    pub out: PathBuf,
    pub scale: ScaleRule,
    pub timings: bool,
}

impl RunConfig {
    pub fn synthetic(recipe: &str, seed: u64, repeats: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            input: InputSpec::Synthetic(recipe.to_string()),
            k_max: None,
            clusters: None,
            seed: Seed(seed),
            repeats,
            out: out.into(),
            scale: ScaleRule::Histogram,
            timings: false,
        }
    }

    fn stamp(&self, command: &str, extra: &str) -> String {
        let k = self.k_max.map_or("auto".to_string(), |k| k.to_string());
        let c = self.clusters.map_or("auto".to_string(), |c| c.to_string());
        format!(
            "# graph-reduce {command} input={} k_max={k} clusters={c} seed={} repeats={} scale={:?}{extra}\n",
            self.input, self.seed.0, self.repeats, self.scale
        )
    }
}

impl TryFrom<CommonArgs> for RunConfig {
    type Error = Error;

    fn try_from(a: CommonArgs) -> Result<Self> {
        let input = match (a.input, a.synthetic) {
            (Some(path), None) => InputSpec::Csv {
                path,
                label_column: a.label_column,
            },
            (None, Some(s)) => InputSpec::Synthetic(s),
            _ => return Err(Error::input("pass exactly one of --input or --synthetic")),
        };
        if a.repeats < 1 {
            return Err(Error::input("--repeats must be at least 1"));
        }
        Ok(Self {
            input,
            k_max: a.k_max,
            clusters: a.clusters,
            seed: Seed(a.seed),
            repeats: a.repeats,
            out: a.out,
            scale: a.scale,
            timings: a.timings,
        })
    }
}

/// The point set named by the config. Synthetic data is drawn once from the
/// base seed; repeats only reseed the clustering.
pub fn load_input(cfg: &RunConfig) -> Result<PointSet> {
    match &cfg.input {
        InputSpec::Csv { path, label_column } => load_csv(path, *label_column),
        InputSpec::Synthetic(recipe) => gen_synthetic(&recipe.parse::<Synthetic>()?, cfg.seed),
    }
}

fn resolve_k_max(cfg: &RunConfig, ps: &PointSet) -> usize {
    cfg.k_max.unwrap_or_else(|| default_k_max(ps.len()))
}

fn resolve_clusters(cfg: &RunConfig, ps: &PointSet) -> Result<usize> {
    let c = match cfg.clusters {
        Some(c) => c,
        None => ps
            .n_classes()
            .ok_or_else(|| Error::input("--clusters is required for unlabeled input"))?,
    };
    if c < 2 {
        return Err(Error::input(format!("cluster count must be at least 2, got {c}")));
    }
    Ok(c)
}

fn truth(ps: &PointSet) -> Result<&[usize]> {
    ps.labels()
        .ok_or_else(|| Error::input("metrics need ground-truth labels (use --label-column)"))
}

/// σ_p as the distance to the 7th neighbor (or the last one if k_max < 7).
pub fn seventh_neighbor_scales(nt: &NeighborTable) -> Result<LocalScales> {
    let k = nt.k_max().min(7);
    let all: Vec<f64> = nt.distances().iter().copied().collect();
    let bin_width = fd_bin_width(&all)?;
    let sigma = (0..nt.len())
        .map(|p| {
            let row = nt.row_distances(p);
            let d = row[k - 1];
            if d > 0.0 {
                d
            } else {
                row.iter().copied().find(|&d| d > 0.0).unwrap_or(bin_width)
            }
        })
        .collect();
    Ok(LocalScales {
        sigma,
        kth: vec![k; nt.len()],
        bin_width,
    })
}

fn build_graph(cfg: &RunConfig, nt: &NeighborTable) -> Result<ReducedGraph> {
    let scales = match cfg.scale {
        ScaleRule::Histogram => compute_scales(nt)?,
        ScaleRule::Seventh => seventh_neighbor_scales(nt)?,
    };
    reduce_with_scales(nt, &scales)
}

/// One clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub repeat: usize,
    pub seed: u64,
    pub acc: f64,
    pub ari: f64,
    pub edge_pct: f64,
    pub n_components: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub runs: Vec<RunMetrics>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl MetricsTable {
    /// Mean and population standard deviation of (ACC, ARI, E%).
    pub fn summary(&self) -> [(f64, f64); 3] {
        [
            mean_std(self.runs.iter().map(|r| r.acc)),
            mean_std(self.runs.iter().map(|r| r.ari)),
            mean_std(self.runs.iter().map(|r| r.edge_pct)),
        ]
    }

    pub fn median_ari(&self) -> f64 {
        median(self.runs.iter().map(|r| r.ari).collect())
    }

    pub fn to_csv(&self, stamp: &str, timings: bool) -> String {
        let mut out = stamp.to_string();
        out.push_str("row,repeat,seed,acc,ari,edge_pct,n_components");
        out.push_str(if timings { ",wall_ms\n" } else { "\n" });
        for r in &self.runs {
            let _ = write!(
                out,
                "run,{},{},{},{},{},{}",
                r.repeat, r.seed, r.acc, r.ari, r.edge_pct, r.n_components
            );
            if timings {
                let _ = write!(out, ",{:.3}", r.wall_ms);
            }
            out.push('\n');
        }
        let [a, b, e] = self.summary();
        let comps = mean_std(self.runs.iter().map(|r| r.n_components as f64));
        let trail = if timings { "," } else { "" };
        let _ = writeln!(out, "mean,,,{},{},{},{}{trail}", a.0, b.0, e.0, comps.0);
        let _ = writeln!(out, "std,,,{},{},{},{}{trail}", a.1, b.1, e.1, comps.1);
        out
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Clusters `graph_for_repeat`'s output once per repeat with seed `base + r`.
fn cluster_repeats(
    cfg: &RunConfig,
    ps: &PointSet,
    c: usize,
    mut graph_for_repeat: impl FnMut() -> Result<ReducedGraph>,
) -> Result<MetricsTable> {
    let truth = truth(ps)?;
    let mut runs = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let start = Instant::now();
        let seed = cfg.seed.derive(r as u64);
        let g = graph_for_repeat()?;
        let result = spectral_cluster(&g, c, seed)?;
        runs.push(RunMetrics {
            repeat: r,
            seed: seed.0,
            acc: acc(truth, &result.labels)?,
            ari: ari(truth, &result.labels)?,
            edge_pct: edge_percentage(&g),
            n_components: result.n_components,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(MetricsTable { runs })
}

/// Reduce and cluster `repeats` times; writes `cluster_metrics.csv`.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<MetricsTable> {
    let ps = load_input(cfg)?;
    let table = cluster_table(cfg, &ps)?;
    let k_max = resolve_k_max(cfg, &ps);
    let stamp = cfg.stamp("cluster", &format!(" n={} resolved_k_max={k_max}", ps.len()));
    write_text(&cfg.out.join("cluster_metrics.csv"), &table.to_csv(&stamp, cfg.timings))?;
    Ok(table)
}

/// The metrics behind [`cmd_cluster`] without file output.
pub fn cluster_table(cfg: &RunConfig, ps: &PointSet) -> Result<MetricsTable> {
    truth(ps)?;
    let c = resolve_clusters(cfg, ps)?;
    let k_max = resolve_k_max(cfg, ps);
    cluster_repeats(cfg, ps, c, || {
        let nt = build_knn(ps, k_max)?;
        build_graph(cfg, &nt)
    })
}

/// Unweighted mutual k-NN graph with the same clustering and metrics.
pub fn cmd_baseline_knn(cfg: &RunConfig, k: usize) -> Result<MetricsTable> {
    let ps = load_input(cfg)?;
    let table = baseline_table(cfg, &ps, k)?;
    let stamp = cfg.stamp("baseline-knn", &format!(" n={} k={k}", ps.len()));
    write_text(&cfg.out.join("baseline_knn_metrics.csv"), &table.to_csv(&stamp, cfg.timings))?;
    Ok(table)
}

pub fn baseline_table(cfg: &RunConfig, ps: &PointSet, k: usize) -> Result<MetricsTable> {
    truth(ps)?;
    let c = resolve_clusters(cfg, ps)?;
    cluster_repeats(cfg, ps, c, || mutual_knn_graph(&build_knn(ps, k)?, k))
}

/// Writes `graph.txt` (and `affinity_histogram.csv` when asked).
pub fn cmd_reduce(cfg: &RunConfig, histogram: bool) -> Result<ReducedGraph> {
    let ps = load_input(cfg)?;
    let k_max = resolve_k_max(cfg, &ps);
    let nt = build_knn(&ps, k_max)?;
    let g = build_graph(cfg, &nt)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_graph(&g, Some(k_max), Some(cfg.seed.0), cfg.out.join("graph.txt"))?;
    if histogram {
        let scales = match cfg.scale {
            ScaleRule::Histogram => compute_scales(&nt)?,
            ScaleRule::Seventh => seventh_neighbor_scales(&nt)?,
        };
        let values: Vec<f64> = affinity_rows(&nt, &scales)?.iter().copied().collect();
        write_text(&cfg.out.join("affinity_histogram.csv"), &affinity_histogram_csv(&values)?)?;
    }
    Ok(g)
}

/// Freedman–Diaconis histogram of affinity values as `lo,hi,count` rows.
pub fn affinity_histogram_csv(values: &[f64]) -> Result<String> {
    let width = fd_bin_width(values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = (((hi - lo) / width).floor() as usize + 1).max(1);
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[(((v - lo) / width).floor() as usize).min(bins - 1)] += 1;
    }
    let mut out = String::from("lo,hi,count\n");
    for (i, c) in counts.iter().enumerate() {
        let a = lo + i as f64 * width;
        let _ = writeln!(out, "{},{},{}", a, a + width, c);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairsSummary {
    pub positives: usize,
    pub negatives: usize,
    pub exhausted: usize,
}

/// Writes `pairs.jsonl`.
pub fn cmd_pairs(cfg: &RunConfig) -> Result<PairsSummary> {
    let ps = load_input(cfg)?;
    let nt = build_knn(&ps, resolve_k_max(cfg, &ps))?;
    let g = build_graph(cfg, &nt)?;
    let pairs = export_pairs(&g, &nt, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_pairs(&pairs, cfg.out.join("pairs.jsonl"))?;
    Ok(PairsSummary {
        positives: pairs.positives.len(),
        negatives: pairs.negatives.len(),
        exhausted: pairs.exhausted.len(),
    })
}

/// Parses `2..5,8,10` into `[2, 3, 4, 5, 8, 10]`.
pub fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::input(format!("grid value {s:?} is not a positive integer")))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(Error::input(format!("empty range {part:?}")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    if out.is_empty() {
        return Err(Error::input("the sweep grid is empty"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: &'static str,
    pub param: usize,
    pub run: RunMetrics,
}

/// Long-format sweep. For `KMax` each grid value is the proposed method's
/// k_max. For `BaselineK` each value is the baseline's k and the proposed
/// method, which has no such parameter, is rerun unchanged at every value.
pub fn sweep_rows(cfg: &RunConfig, param: SweepParam, grid: &[usize]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::input("the sweep grid is empty"));
    }
    let ps = load_input(cfg)?;
    let mut rows = Vec::new();
    for &value in grid {
        let push = |rows: &mut Vec<SweepRow>, method, table: MetricsTable| {
            rows.extend(table.runs.into_iter().map(|run| SweepRow { method, param: value, run }));
        };
        match param {
            SweepParam::KMax => {
                let sub = RunConfig {
                    k_max: Some(value),
                    ..cfg.clone()
                };
                push(&mut rows, "proposed", cluster_table(&sub, &ps)?);
            }
            SweepParam::BaselineK => {
                push(&mut rows, "proposed", cluster_table(cfg, &ps)?);
                push(&mut rows, "baseline-knn", baseline_table(cfg, &ps, value)?);
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(stamp: &str, param: SweepParam, rows: &[SweepRow]) -> String {
    let name = match param {
        SweepParam::KMax => "k_max",
        SweepParam::BaselineK => "baseline_k",
    };
    let mut out = stamp.to_string();
    let _ = writeln!(out, "method,{name},repeat,seed,acc,ari,edge_pct,n_components");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method, r.param, r.run.repeat, r.run.seed, r.run.acc, r.run.ari, r.run.edge_pct, r.run.n_components
        );
    }
    out
}

/// Writes `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, param: SweepParam, grid: &[usize]) -> Result<Vec<SweepRow>> {
    let rows = sweep_rows(cfg, param, grid)?;
    let stamp = cfg.stamp("sweep", &format!(" param={param:?} grid={grid:?}"));
    write_text(&cfg.out.join("sweep.csv"), &sweep_csv(&stamp, param, &rows))?;
    Ok(rows)
}

fn print_summary(label: &str, table: &MetricsTable) {
    let [a, b, e] = table.summary();
    println!(
        "{label}: {} runs  ACC {:.4} ± {:.4}  ARI {:.4} ± {:.4}  E% {:.4} ± {:.4}",
        table.runs.len(),
        a.0,
        a.1,
        b.0,
        b.1,
        100.0 * e.0,
        100.0 * e.1
    );
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Reduce { common, histogram } => {
            let cfg = RunConfig::try_from(common)?;
            let g = cmd_reduce(&cfg, histogram)?;
            println!(
                "reduced graph: {} vertices, {} edges, E% {:.4}, {} components -> {}",
                g.n(),
                g.edge_count(),
                100.0 * edge_percentage(&g),
                g.n_components(),
                cfg.out.join("graph.txt").display()
            );
        }
        Command::Cluster { common } => {
            let cfg = RunConfig::try_from(common)?;
            print_summary("cluster", &cmd_cluster(&cfg)?);
        }
        Command::Pairs { common } => {
            let cfg = RunConfig::try_from(common)?;
            let s = cmd_pairs(&cfg)?;
            println!(
                "pairs: {} positive, {} negative ({} rows needed sampled negatives) -> {}",
                s.positives,
                s.negatives,
                s.exhausted,
                cfg.out.join("pairs.jsonl").display()
            );
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let cfg = RunConfig::try_from(common)?;
            let grid = parse_grid(&values)?;
            let rows = cmd_sweep(&cfg, param, &grid)?;
            println!("sweep: {} rows -> {}", rows.len(), cfg.out.join("sweep.csv").display());
        }
        Command::BaselineKnn { common, k } => {
            let cfg = RunConfig::try_from(common)?;
            print_summary(&format!("baseline mutual {k}-NN"), &cmd_baseline_knn(&cfg, k)?);
        }
    }
    Ok(())
}
