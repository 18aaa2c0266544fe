//! `egocr`: file-in/file-out driver for ego-cluster randomized experiments.
//!
//! Typical pipeline:
//!
//! ```text
//! egocr generate er --n 500 --p 0.03 --seed 1 --out edges.txt
//! egocr design --edges edges.txt --method ego_cr --seed 2 --out clustering.tsv
//! egocr randomize --clustering clustering.tsv --seed 3 --out assignment.tsv
//! egocr estimate --edges edges.txt --clustering clustering.tsv \
//!     --assignment assignment.tsv --outcomes outcomes.tsv --out result.json
//! ```
//!
//! Every command is a pure function of its input files, flags, and seed; all
//! outputs are written atomically (temp file plus rename).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use egocr::design::{baselines, ClusteringRows, EgoClustering};
use egocr::randomize;
use egocr::seeds::rng_from_seed;
use egocr::simlab::{self, ReportFormat, SimConfig};
use egocr::Graph;

#[derive(Parser)]
#[command(
    name = "egocr",
    version,
    about = "Design, randomize, and analyze network experiments under interference",
    after_help = "FILE FORMATS:\n\
    \x20 edge list      lines `u v` (one undirected edge per line, nonnegative integer\n\
    \x20                ids); `#` comments and blank lines ignored; optional header\n\
    \x20                `nodes: N` pins the unit count so isolated units survive.\n\
    \x20 clustering     TSV `unit<TAB>cluster<TAB>ego` (ego flag 0/1); cluster labels\n\
    \x20                are the ego's unit id. Stats sidecar TSV: K_n, r_bar, b_n,\n\
    \x20                objective, lambda, seed, design.\n\
    \x20 assignment     TSV `unit<TAB>treatment` (0/1).\n\
    \x20 outcomes       TSV `unit<TAB>outcome` (decimal).\n\
    \x20 exposures      TSV `unit<TAB>rho` (treated-neighbor fraction).\n\
    \x20 sim config     JSON; see `egocr simulate --help`.\n\
    \x20 estimate out   JSON with estimates, standard errors, confidence intervals,\n\
    \x20                test statistics, p-values, and the design statistics."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random network as an edge list (plus a Z sidecar for community graphs)
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Build a clustering from an edge list and write it with a stats sidecar
    Design(DesignArgs),
    /// Draw cluster-level treatments for an existing clustering
    Randomize(RandomizeArgs),
    /// Estimate treatment and spillover effects from a completed experiment
    Estimate(EstimateArgs),
    /// Report dependency-graph diagnostics for a clustering
    Diagnose(DiagnoseArgs),
    /// Run a replication study from a JSON config
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Erdos-Renyi: each pair is an edge with probability p
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Barabasi-Albert preferential attachment with m edges per arrival
    Ba {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Small-world communities joined by sparse cross edges
    Community {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        communities: usize,
        /// Within- to cross-community edge probability ratio
        #[arg(long, default_value_t = 8.0)]
        ratio: f64,
        #[arg(long)]
        target_avg_degree: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the community covariate Z (default: <out>.z.tsv)
        #[arg(long)]
        z_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[clap(rename_all = "snake_case")]
enum Method {
    EgoCr,
    Cr,
    ThreeNet,
    RandomEgo,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Objective weight in (0, 1] (ego_cr only)
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Required for every method with randomness (all but cr)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Stats sidecar path (default: <out with .stats.tsv extension>)
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct RandomizeArgs {
    #[arg(long)]
    clustering: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    clustering: PathBuf,
    #[arg(long)]
    assignment: PathBuf,
    #[arg(long)]
    outcomes: PathBuf,
    /// Two-sided significance level for intervals and tests
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
    /// Optionally write the computed exposures as a TSV
    #[arg(long)]
    rho_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    clustering: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config: {"network": {"kind": "er"|"ba"|"community", ...},
    /// "designs": ["ego_cr","cr","three_net","random_ego"],
    /// "outcome": {"alpha":..,"beta":..,"gamma":..,"error_model":
    /// {"kind":"iid_normal","sigma":..} | {"kind":"correlated"} |
    /// {"kind":"confounded","eta":..}}, "reps": N, "base_seed": S,
    /// "level": 0.05, "lambda": 1.0}. Unknown keys are rejected.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.csv and report.md
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads (default: available parallelism); results do not
    /// depend on this
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { kind } => generate(kind),
        Command::Design(args) => design(args),
        Command::Randomize(args) => randomize_cmd(args),
        Command::Estimate(args) => estimate(args),
        Command::Diagnose(args) => diagnose(args),
        Command::Simulate(args) => simulate(args),
    }
}

/// Writes via a temp file in the destination directory plus an atomic rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .with_context(|| format!("creating temp file next to {}", path.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph> {
    let text = read_to_string(path)?;
    Graph::load_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn generate(kind: GenerateKind) -> Result<()> {
    match kind {
        GenerateKind::Er { n, p, seed, out } => {
            if !(p > 0.0 && p < 1.0) {
                bail!("edge probability must lie in (0, 1), got {p}");
            }
            let g = simlab::gen_er(n, p, &mut rng_from_seed(seed));
            write_atomic(&out, &g.emit_edge_list())
        }
        GenerateKind::Ba { n, m, seed, out } => {
            if m < 1 || n <= m {
                bail!("ba needs 1 <= m < n, got n={n}, m={m}");
            }
            let g = simlab::gen_ba(n, m, &mut rng_from_seed(seed));
            write_atomic(&out, &g.emit_edge_list())
        }
        GenerateKind::Community {
            n,
            communities,
            ratio,
            target_avg_degree,
            seed,
            out,
            z_out,
        } => {
            if communities < 2 || n < communities {
                bail!("community graph needs communities >= 2 and n >= communities");
            }
            if ratio <= 0.0 || target_avg_degree <= 0.0 {
                bail!("ratio and target average degree must be positive");
            }
            let (g, z) =
                simlab::gen_community(n, communities, ratio, target_avg_degree, &mut rng_from_seed(seed));
            write_atomic(&out, &g.emit_edge_list())?;
            let z_path = z_out.unwrap_or_else(|| sidecar_path(&out, "z.tsv"));
            let mut table = String::from("unit\tz\n");
            for (i, value) in z.iter().enumerate() {
                table.push_str(&format!("{}\t{}\n", g.external_id(i), value));
            }
            write_atomic(&z_path, &table)
        }
    }
}

fn sidecar_path(out: &Path, extension: &str) -> PathBuf {
    out.with_extension(extension)
}

fn design(args: DesignArgs) -> Result<()> {
    let g = load_graph(&args.edges)?;
    let need_seed = || {
        args.seed
            .ok_or_else(|| anyhow::anyhow!("--seed is required for this method"))
    };
    let clustering = match args.method {
        Method::EgoCr => egocr::build_design(&g, args.lambda, need_seed()?)?,
        Method::Cr => baselines::complete_randomization(&g),
        Method::ThreeNet => baselines::three_net_seeded(&g, need_seed()?),
        Method::RandomEgo => baselines::random_ego_clusters(&g, need_seed()?),
    };
    write_atomic(&args.out, &clustering.to_tsv(&g))?;
    let stats_path = args
        .stats_out
        .unwrap_or_else(|| sidecar_path(&args.out, "stats.tsv"));
    write_atomic(&stats_path, &clustering.stats_tsv(args.seed))
}

fn randomize_cmd(args: RandomizeArgs) -> Result<()> {
    let rows = ClusteringRows::parse(&read_to_string(&args.clustering)?)?;
    if rows.is_empty() {
        bail!("clustering file has no rows");
    }
    let table = randomize::assign_rows_tsv(&rows, &mut rng_from_seed(args.seed));
    write_atomic(&args.out, &table)
}

fn parse_outcomes(g: &Graph, text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "unit\toutcome" => {}
        _ => bail!("outcomes file must start with header `unit\\toutcome`"),
    }
    let mut values = vec![None; g.n()];
    for (idx, raw) in lines {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let unit: u64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .with_context(|| format!("outcomes line {}: bad unit id", idx + 1))?;
        let value: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .with_context(|| format!("outcomes line {}: bad outcome value", idx + 1))?;
        let internal = g
            .internal_id(unit)
            .with_context(|| format!("outcomes file names unit {unit}, which is not a graph unit"))?;
        if values[internal].replace(value).is_some() {
            bail!("outcomes file lists unit {unit} twice");
        }
    }
    if let Some(missing) = values.iter().position(Option::is_none) {
        bail!(
            "graph unit {} is missing from the outcomes file",
            g.external_id(missing)
        );
    }
    Ok(values.into_iter().map(Option::unwrap).collect())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let g = load_graph(&args.edges)?;
    let clustering = EgoClustering::parse_tsv(&g, &read_to_string(&args.clustering)?)?;
    let treatments = randomize::parse_assignment_tsv(&g, &read_to_string(&args.assignment)?)?;
    let outcomes = parse_outcomes(&g, &read_to_string(&args.outcomes)?)?;
    let rho = randomize::exposures(&g, &treatments)?;
    if let Some(rho_out) = &args.rho_out {
        write_atomic(rho_out, &randomize::exposures_tsv(&g, &rho))?;
    }
    let fit = egocr::fit_ols(&treatments, &rho, &outcomes)?;
    let est = egocr::effect_inference(
        &fit,
        clustering.r_bar(),
        clustering.b(),
        clustering.k_n(),
        args.level,
    )?;
    write_atomic(&args.out, &format!("{}\n", serde_json::to_string_pretty(&est)?))?;
    print!("{}", est.table());
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let g = load_graph(&args.edges)?;
    let clustering = EgoClustering::parse_tsv(&g, &read_to_string(&args.clustering)?)?;
    let diag = egocr::dependency_diagnostics(&g, &clustering);
    write_atomic(&args.out, &format!("{}\n", serde_json::to_string_pretty(&diag)?))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = SimConfig::from_json(&read_to_string(&args.config)?)?;
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;
    let report = pool.install(|| simlab::run_study(&cfg))?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let csv = simlab::emit_report(&report, ReportFormat::Csv)?;
    let markdown = simlab::emit_report(&report, ReportFormat::Markdown)?;
    write_atomic(&args.out_dir.join("report.csv"), &csv)?;
    write_atomic(&args.out_dir.join("report.md"), &markdown)?;
    print!("{markdown}");
    Ok(())
}
