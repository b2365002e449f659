use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use trevhc::comparisons::{
    flip_noise, parse_comparisons, parse_query_csv, quadruplets_from_similarity,
    sample_pairs_bernoulli, sample_quadruplets_uniform, sample_triplets_uniform,
    triplets_from_similarity, triplets_from_tree, write_comparisons,
};
use trevhc::harness::{rows_to_csv, run, ExperimentConfig, ExperimentKind};
use trevhc::oracle::{brute_force_max_trev_capped, DEFAULT_CAP};
use trevhc::planted::{planted_similarity, PlantedParams};
use trevhc::similarity::{parse_embedding_csv, parse_similarity_csv, LoadedSimilarity};
use trevhc::{
    aari, adds3, adds4, average_linkage, cosine, dcost, drev, qrev, trev, Dendrogram, QuadrupletSet,
    TripletSet,
};

/// Hierarchical clustering from triplet and quadruplet comparisons.
#[derive(Parser)]
#[command(name = "trev-hc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a planted similarity matrix and its ground-truth tree.
    GenPlanted(GenPlanted),
    /// Write a random, caterpillar or planted tree as a merge list.
    GenTree(GenTree),
    /// All triplets implied by a tree or a similarity matrix.
    Triplets(AllTriplets),
    /// All quadruplets implied by a similarity matrix.
    Quadruplets(AllQuadruplets),
    /// Sample comparisons uniformly from a similarity, or pairs of triplets
    /// from a complete triplet set.
    Sample(Sample),
    /// Flip each comparison independently.
    Noise(Noise),
    /// AddS3 similarity of a triplet file.
    Adds3(Adds3),
    /// AddS4 similarity of a quadruplet file.
    Adds4(Adds4),
    /// Average linkage on a similarity matrix or embedding.
    Cluster(Cluster),
    /// Score a tree against comparisons or a similarity matrix.
    Revenue(Revenue),
    /// Averaged adjusted Rand index between a tree and a reference tree.
    Aari(Aari),
    /// Exhaustive revenue maximiser for a small triplet set.
    Oracle(Oracle),
    /// Turn query answers into triplets.
    Convert(Convert),
    /// Planted-model experiment; writes a results CSV.
    Sweep(Experiment),
    /// Latent-tree recovery experiment; writes a results CSV.
    Recover(Experiment),
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Seed {
    #[arg(long, env = "TREVHC_SEED", default_value_t = 0)]
    seed: u64,
}

impl Seed {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Args)]
struct GenPlanted {
    #[arg(long, default_value_t = 30)]
    cluster_size: usize,
    #[arg(long, default_value_t = 3)]
    levels: u32,
    #[arg(long, default_value_t = 0.8)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.15)]
    separation: f64,
    /// Where to write the ground-truth merge list.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeShape {
    Random,
    Caterpillar,
    Planted,
}

#[derive(Args)]
struct GenTree {
    /// Number of leaves (random and caterpillar shapes).
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, value_enum, default_value_t = TreeShape::Random)]
    shape: TreeShape,
    #[arg(long, default_value_t = 2)]
    cluster_size: usize,
    #[arg(long, default_value_t = 3)]
    levels: u32,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["tree", "similarity"])))]
struct AllTriplets {
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct AllQuadruplets {
    #[arg(long)]
    similarity: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["similarity", "triplets"])))]
struct Sample {
    /// Draw `--m` comparisons uniformly from the comparisons this similarity implies.
    #[arg(long, requires = "m")]
    similarity: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    /// Sample quadruplets instead of triplets.
    #[arg(long)]
    quadruplets: bool,
    /// Keep each pair {(i,j,k), (j,i,k)} of this triplet file with probability `--p`.
    #[arg(long, requires = "p", conflicts_with_all = ["m", "quadruplets"])]
    triplets: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["triplets", "quadruplets"])))]
struct Noise {
    #[arg(long)]
    triplets: Option<PathBuf>,
    #[arg(long)]
    quadruplets: Option<PathBuf>,
    #[arg(long)]
    flip_prob: f64,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Adds3 {
    #[arg(long)]
    triplets: PathBuf,
    /// Number of objects; read from the file header by default.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Adds4 {
    #[arg(long)]
    quadruplets: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["similarity", "embedding"])))]
struct Cluster {
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// One vector per row; clustered on cosine similarity.
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
#[command(group(ArgGroup::new("against").required(true).args(["triplets", "quadruplets", "similarity"])))]
struct Revenue {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    triplets: Option<PathBuf>,
    #[arg(long)]
    quadruplets: Option<PathBuf>,
    /// Report Dasgupta revenue and cost instead.
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Aari {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 3)]
    levels: u32,
}

#[derive(Args)]
struct Oracle {
    #[arg(long)]
    triplets: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Largest number of leaves to enumerate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Convert {
    /// Query CSV whose first line names the format: central, oddout or rank2of8.
    #[arg(long)]
    queries: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Experiment {
    /// File of `key = value` lines; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; falls back to the config file, then TREVHC_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated list of adds3-al, adds4-al, cosine-al.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    cluster_size: Option<usize>,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated separations.
    #[arg(long)]
    separations: Option<String>,
    /// Comma-separated budgets, as multiples of n^2.
    #[arg(long)]
    budgets: Option<String>,
    /// Tree size for recovery runs.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated pair-sampling probabilities for recovery runs.
    #[arg(long)]
    probabilities: Option<String>,
    #[arg(long)]
    flip_prob: Option<f64>,
    #[arg(long)]
    aari_levels: Option<u32>,
    /// Fill the wall_ms column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    out: Output,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_tree(path: &Path) -> Result<Dendrogram> {
    Dendrogram::parse_merge_list(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_similarity(path: &Path) -> Result<LoadedSimilarity> {
    parse_similarity_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_triplets(path: &Path, n: Option<usize>) -> Result<TripletSet> {
    parse_comparisons(&read(path)?, n).with_context(|| format!("parsing {}", path.display()))
}

fn load_quadruplets(path: &Path, n: Option<usize>) -> Result<QuadrupletSet> {
    parse_comparisons(&read(path)?, n).with_context(|| format!("parsing {}", path.display()))
}

fn gen_planted(a: &GenPlanted) -> Result<()> {
    let params = PlantedParams::new(a.cluster_size, a.levels, a.mu, a.sigma, a.separation)?;
    let (s, truth) = planted_similarity(&params, &mut a.seed.rng())?;
    if let Some(path) = &a.truth {
        fs::write(path, truth.to_merge_list()).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&a.out, &s.to_csv())
}

fn gen_tree(a: &GenTree) -> Result<()> {
    let tree = match a.shape {
        TreeShape::Random => Dendrogram::random(a.n, &mut a.seed.rng())?,
        TreeShape::Caterpillar => Dendrogram::caterpillar(a.n)?,
        TreeShape::Planted => Dendrogram::complete_planted(a.cluster_size, a.levels)?,
    };
    emit(&a.out, &tree.to_merge_list())
}

fn all_triplets(a: &AllTriplets) -> Result<()> {
    let set = match (&a.tree, &a.similarity) {
        (Some(path), _) => triplets_from_tree(&load_tree(path)?),
        (_, Some(path)) => match load_similarity(path)? {
            LoadedSimilarity::Integer(s) => triplets_from_similarity(&s),
            LoadedSimilarity::Real(s) => triplets_from_similarity(&s),
        },
        _ => unreachable!("clap requires a source"),
    };
    emit(&a.out, &write_comparisons(&set))
}

fn all_quadruplets(a: &AllQuadruplets) -> Result<()> {
    let set = match load_similarity(&a.similarity)? {
        LoadedSimilarity::Integer(s) => quadruplets_from_similarity(&s),
        LoadedSimilarity::Real(s) => quadruplets_from_similarity(&s),
    };
    emit(&a.out, &write_comparisons(&set))
}

fn sample(a: &Sample) -> Result<()> {
    let mut rng = a.seed.rng();
    let text = if let Some(path) = &a.triplets {
        let full = load_triplets(path, None)?;
        write_comparisons(&sample_pairs_bernoulli(&full, a.p.expect("clap requires p"), &mut rng)?)
    } else {
        let path = a.similarity.as_ref().expect("clap requires a source");
        let m = a.m.expect("clap requires m");
        let s = load_similarity(path)?;
        match (s, a.quadruplets) {
            (LoadedSimilarity::Integer(s), false) => write_comparisons(&sample_triplets_uniform(&s, m, &mut rng)?),
            (LoadedSimilarity::Real(s), false) => write_comparisons(&sample_triplets_uniform(&s, m, &mut rng)?),
            (LoadedSimilarity::Integer(s), true) => write_comparisons(&sample_quadruplets_uniform(&s, m, &mut rng)?),
            (LoadedSimilarity::Real(s), true) => write_comparisons(&sample_quadruplets_uniform(&s, m, &mut rng)?),
        }
    };
    emit(&a.out, &text)
}

fn noise(a: &Noise) -> Result<()> {
    let mut rng = a.seed.rng();
    let text = match (&a.triplets, &a.quadruplets) {
        (Some(path), _) => write_comparisons(&flip_noise(&load_triplets(path, None)?, a.flip_prob, &mut rng)?),
        (_, Some(path)) => write_comparisons(&flip_noise(&load_quadruplets(path, None)?, a.flip_prob, &mut rng)?),
        _ => unreachable!("clap requires a source"),
    };
    emit(&a.out, &text)
}

fn cluster(a: &Cluster) -> Result<()> {
    let tree = match (&a.similarity, &a.embedding) {
        (Some(path), _) => match load_similarity(path)? {
            LoadedSimilarity::Integer(s) => average_linkage(&s)?,
            LoadedSimilarity::Real(s) => average_linkage(&s)?,
        },
        (_, Some(path)) => {
            let points = parse_embedding_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            average_linkage(&cosine(&points)?)?
        }
        _ => unreachable!("clap requires a source"),
    };
    emit(&a.out, &tree.to_merge_list())
}

fn revenue(a: &Revenue) -> Result<()> {
    let tree = load_tree(&a.tree)?;
    let n = tree.n();
    let (value, report) = if let Some(path) = &a.triplets {
        let t = load_triplets(path, Some(n))?;
        let r = trev(&tree, &t)?;
        (r.to_string(), json!({"revenue": r, "kind": "triplet", "n": n, "comparisons": t.len()}))
    } else if let Some(path) = &a.quadruplets {
        let q = load_quadruplets(path, Some(n))?;
        let r = qrev(&tree, &q)?;
        (r.to_string(), json!({"revenue": r, "kind": "quadruplet", "n": n, "comparisons": q.len()}))
    } else {
        let path = a.similarity.as_ref().expect("clap requires a source");
        match load_similarity(path)? {
            LoadedSimilarity::Integer(s) => {
                let (r, c) = (drev(&tree, &s)?, dcost(&tree, &s)?);
                (r.to_string(), json!({"revenue": r, "cost": c, "kind": "dasgupta", "n": n}))
            }
            LoadedSimilarity::Real(s) => {
                let (r, c) = (drev(&tree, &s)?, dcost(&tree, &s)?);
                (r.to_string(), json!({"revenue": r, "cost": c, "kind": "dasgupta", "n": n}))
            }
        }
    };
    if a.json {
        println!("{report}");
    } else {
        println!("{value}");
    }
    Ok(())
}

fn run_aari(a: &Aari) -> Result<()> {
    let score = aari(&load_tree(&a.tree)?, &load_tree(&a.truth)?, a.levels)?;
    println!("{score}");
    Ok(())
}

fn oracle(a: &Oracle) -> Result<()> {
    let t = load_triplets(&a.triplets, a.n)?;
    let best = brute_force_max_trev_capped(&t, t.n(), a.cap)?;
    let text = format!(
        "# revenue {}\n# unique {}\n{}",
        best.value,
        best.unique,
        best.tree.to_merge_list()
    );
    emit(&a.out, &text)
}

fn convert(a: &Convert) -> Result<()> {
    let answers = parse_query_csv(&read(&a.queries)?).with_context(|| format!("parsing {}", a.queries.display()))?;
    emit(&a.out, &write_comparisons(&answers.to_triplets()?))
}

fn experiment(a: &Experiment, kind: ExperimentKind) -> Result<()> {
    let mut config = ExperimentConfig::from_env()?;
    config.kind = kind;
    if let Some(path) = &a.config {
        config
            .apply_text(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        let is_sweep = config.kind == ExperimentKind::PlantedSweep;
        if is_sweep != (kind == ExperimentKind::PlantedSweep) {
            bail!("config file names experiment {}, which this command does not run", config.kind.name());
        }
    }
    let lists = [
        ("methods", &a.methods),
        ("separations", &a.separations),
        ("budgets", &a.budgets),
        ("probabilities", &a.probabilities),
    ];
    for (key, value) in lists {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    let scalars = [
        ("seed", a.seed.map(|x| x.to_string())),
        ("trials", a.trials.map(|x| x.to_string())),
        ("jobs", a.jobs.map(|x| x.to_string())),
        ("cluster_size", a.cluster_size.map(|x| x.to_string())),
        ("levels", a.levels.map(|x| x.to_string())),
        ("mu", a.mu.map(|x| x.to_string())),
        ("sigma", a.sigma.map(|x| x.to_string())),
        ("n", a.n.map(|x| x.to_string())),
        ("flip_prob", a.flip_prob.map(|x| x.to_string())),
        ("aari_levels", a.aari_levels.map(|x| x.to_string())),
    ];
    for (key, value) in scalars {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    if a.timing {
        config.timing = true;
    }
    if config.kind == ExperimentKind::LatentRecovery && config.flip_prob > 0.0 {
        config.kind = ExperimentKind::NoisyRecovery;
    }
    let rows = run(&config)?;
    emit(&a.out, &rows_to_csv(&rows))
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::GenPlanted(a) => gen_planted(a),
        Command::GenTree(a) => gen_tree(a),
        Command::Triplets(a) => all_triplets(a),
        Command::Quadruplets(a) => all_quadruplets(a),
        Command::Sample(a) => sample(a),
        Command::Noise(a) => noise(a),
        Command::Adds3(a) => {
            let t = load_triplets(&a.triplets, a.n)?;
            emit(&a.out, &adds3(&t, t.n())?.to_csv())
        }
        Command::Adds4(a) => {
            let q = load_quadruplets(&a.quadruplets, a.n)?;
            emit(&a.out, &adds4(&q, q.n())?.to_csv())
        }
        Command::Cluster(a) => cluster(a),
        Command::Revenue(a) => revenue(a),
        Command::Aari(a) => run_aari(a),
        Command::Oracle(a) => oracle(a),
        Command::Convert(a) => convert(a),
        Command::Sweep(a) => experiment(a, ExperimentKind::PlantedSweep),
        Command::Recover(a) => experiment(a, ExperimentKind::LatentRecovery),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
