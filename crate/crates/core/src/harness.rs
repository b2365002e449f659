//! Seeded experiment runs over planted and latent-tree instances.
//!
//! Every trial derives its own seed from `(base seed, point index, trial)`,
//! so rows do not depend on how trials are scheduled across threads.

use std::fmt::Write as _;
use std::io;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::comparisons::{
    flip_noise, sample_pairs_bernoulli, sample_quadruplets_uniform, sample_triplets_uniform,
    triplets_from_tree,
};
use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::evaluation::aari;
use crate::linkage::{adds3_average_linkage, adds4_average_linkage, average_linkage};
use crate::objective::{qrev, trev, trev_with};
use crate::oracle::brute_force_max_trev;
use crate::planted::{planted_similarity, PlantedParams};

pub const CSV_HEADER: &str = "experiment,method,n,param,num_comparisons,flip_prob,trial,seed,revenue,revenue_kind,aari,ratio_to_latent,wall_ms";

/// Largest `n` for which recovery runs also record the exhaustive maximiser.
pub const BRUTE_FORCE_MAX_N: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PlantedSweep,
    LatentRecovery,
    NoisyRecovery,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PlantedSweep => "planted-sweep",
            ExperimentKind::LatentRecovery => "latent-recovery",
            ExperimentKind::NoisyRecovery => "noisy-recovery",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planted-sweep" => Ok(ExperimentKind::PlantedSweep),
            "latent-recovery" => Ok(ExperimentKind::LatentRecovery),
            "noisy-recovery" => Ok(ExperimentKind::NoisyRecovery),
            _ => Err(Error::InvalidParameter(format!("unknown experiment {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Average linkage on AddS3 of sampled triplets.
    Adds3Al,
    /// Average linkage on AddS4 of sampled quadruplets.
    Adds4Al,
    /// Average linkage on the full similarity the comparisons come from.
    CosineAl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Adds3Al => "adds3-al",
            Method::Adds4Al => "adds4-al",
            Method::CosineAl => "cosine-al",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adds3-al" => Ok(Method::Adds3Al),
            "adds4-al" => Ok(Method::Adds4Al),
            "cosine-al" => Ok(Method::CosineAl),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub methods: Vec<Method>,
    /// Planted model; `separation` is overridden by each entry of `separations`.
    pub planted: PlantedParams,
    pub separations: Vec<f64>,
    /// Comparison budgets as multiples `k` of `n^2`.
    pub budgets: Vec<f64>,
    /// Tree size for recovery runs.
    pub n: usize,
    /// Pair-sampling probabilities for recovery runs.
    pub probabilities: Vec<f64>,
    pub flip_prob: f64,
    pub trials: usize,
    pub seed: u64,
    /// Levels averaged by AARI.
    pub aari_levels: u32,
    pub jobs: usize,
    /// Fill the `wall_ms` column. Off by default so output is reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::PlantedSweep,
            methods: vec![Method::Adds3Al],
            planted: PlantedParams::standard(0.15),
            separations: vec![0.15],
            budgets: vec![1.0],
            n: 64,
            probabilities: vec![0.5],
            flip_prob: 0.0,
            trials: 10,
            seed: 0,
            aari_levels: 3,
            jobs: 1,
            timing: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad value {value:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse_value(key, v))
        .collect()
}

impl ExperimentConfig {
    /// Default configuration with the base seed taken from `TREVHC_SEED` when
    /// set.
    pub fn from_env() -> Result<Self> {
        let mut config = ExperimentConfig::default();
        if let Ok(seed) = std::env::var("TREVHC_SEED") {
            config.seed = parse_value("TREVHC_SEED", &seed)?;
        }
        Ok(config)
    }

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.kind = parse_value(key, value)?,
            "methods" => self.methods = parse_list(key, value)?,
            "cluster_size" => self.planted.cluster_size = parse_value(key, value)?,
            "levels" => self.planted.levels = parse_value(key, value)?,
            "mu" => self.planted.mu = parse_value(key, value)?,
            "sigma" => self.planted.sigma = parse_value(key, value)?,
            "separation" | "separations" => self.separations = parse_list(key, value)?,
            "budget" | "budgets" => self.budgets = parse_list(key, value)?,
            "n" => self.n = parse_value(key, value)?,
            "p" | "probabilities" => self.probabilities = parse_list(key, value)?,
            "flip_prob" => self.flip_prob = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "aari_levels" => self.aari_levels = parse_value(key, value)?,
            "jobs" => self.jobs = parse_value(key, value)?,
            "timing" => self.timing = parse_value(key, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(no + 1, "expected key = value"))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::parse(no + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return bad(format!("flip probability {} must lie in [0, 1]", self.flip_prob));
        }
        match self.kind {
            ExperimentKind::PlantedSweep => {
                if self.methods.is_empty() {
                    return bad("no methods selected".into());
                }
                if self.separations.is_empty() || self.budgets.is_empty() {
                    return bad("need at least one separation and one budget".into());
                }
                for &sep in &self.separations {
                    PlantedParams { separation: sep, ..self.planted }.validate()?;
                }
                if let Some(k) = self.budgets.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
                    return bad(format!("budget multiplier {k} must be >= 0"));
                }
                let n = self.planted.n();
                if 1usize.checked_shl(self.aari_levels).is_none_or(|c| c > n) {
                    return bad(format!("{} AARI levels need more than {n} objects", self.aari_levels));
                }
            }
            ExperimentKind::LatentRecovery | ExperimentKind::NoisyRecovery => {
                if self.n < 3 {
                    return bad("recovery needs at least 3 objects".into());
                }
                if self.probabilities.is_empty() {
                    return bad("need at least one sampling probability".into());
                }
                if let Some(p) = self.probabilities.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
                    return bad(format!("sampling probability {p} must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: &'static str,
    pub method: String,
    pub n: usize,
    /// Separation for planted sweeps, sampling probability for recovery.
    pub param: f64,
    pub num_comparisons: usize,
    pub flip_prob: f64,
    pub trial: usize,
    pub seed: u64,
    pub revenue: i64,
    pub revenue_kind: &'static str,
    pub aari: Option<f64>,
    pub ratio_to_latent: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.method,
            self.n,
            self.param,
            self.num_comparisons,
            self.flip_prob,
            self.trial,
            self.seed,
            self.revenue,
            self.revenue_kind,
            opt(self.aari),
            opt(self.ratio_to_latent),
            opt(self.wall_ms),
        )
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv_line());
    }
    out
}

pub fn write_csv<W: io::Write>(rows: &[ResultRow], mut w: W) -> Result<()> {
    w.write_all(rows_to_csv(rows).as_bytes())?;
    Ok(())
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial; depends only on its coordinates.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    mix(mix(mix(base) ^ point as u64) ^ trial as u64)
}

/// Independent stream `stream` of a trial's generator.
fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Task {
    point: usize,
    trial: usize,
    param: f64,
    budget: f64,
}

fn run_tasks<F>(config: &ExperimentConfig, tasks: &[Task], work: F) -> Result<Vec<ResultRow>>
where
    F: Fn(&Task, u64) -> Result<Vec<ResultRow>> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let chunks: Vec<Vec<ResultRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| work(t, trial_seed(config.seed, t.point, t.trial)))
            .collect::<Result<_>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

fn elapsed(start: Instant, on: bool) -> Option<f64> {
    on.then(|| start.elapsed().as_secs_f64() * 1e3)
}

/// Planted-model experiment: for every (separation, budget) point and trial,
/// draw a planted similarity, sample `k n^2` comparisons, optionally flip
/// them, cluster with each method, and score against the sampled set and the
/// planted tree.
///
/// `cosine-al` clusters the drawn similarity itself and is scored on the
/// sampled triplets.
pub fn run_planted_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut tasks = Vec::new();
    for (si, &sep) in config.separations.iter().enumerate() {
        for (bi, &k) in config.budgets.iter().enumerate() {
            for trial in 0..config.trials {
                tasks.push(Task {
                    point: si * config.budgets.len() + bi,
                    trial,
                    param: sep,
                    budget: k,
                });
            }
        }
    }
    let n = config.planted.n();
    run_tasks(config, &tasks, |task, seed| {
        let params = PlantedParams {
            separation: task.param,
            ..config.planted
        };
        let m = (task.budget * (n * n) as f64).round() as usize;
        let (s, truth) = planted_similarity(&params, &mut stream(seed, 0))?;
        let needs_triplets = config.methods.iter().any(|&x| x != Method::Adds4Al);
        let triplets = if needs_triplets {
            let sampled = sample_triplets_uniform(&s, m, &mut stream(seed, 1))?;
            Some(flip_noise(&sampled, config.flip_prob, &mut stream(seed, 2))?)
        } else {
            None
        };
        let mut rows = Vec::with_capacity(config.methods.len());
        for &method in &config.methods {
            let start = Instant::now();
            let (tree, revenue, kind, count) = match method {
                Method::Adds3Al => {
                    let t = triplets.as_ref().expect("triplets sampled");
                    let tree = adds3_average_linkage(t, n)?;
                    let revenue = trev(&tree, t)?;
                    (tree, revenue, "triplet", t.len())
                }
                Method::Adds4Al => {
                    let sampled = sample_quadruplets_uniform(&s, m, &mut stream(seed, 3))?;
                    let q = flip_noise(&sampled, config.flip_prob, &mut stream(seed, 4))?;
                    let tree = adds4_average_linkage(&q, n)?;
                    let revenue = qrev(&tree, &q)?;
                    (tree, revenue, "quadruplet", q.len())
                }
                Method::CosineAl => {
                    let t = triplets.as_ref().expect("triplets sampled");
                    let tree = average_linkage(&s)?;
                    let revenue = trev(&tree, t)?;
                    (tree, revenue, "triplet", t.len())
                }
            };
            let score = aari(&tree, &truth, config.aari_levels)?;
            rows.push(ResultRow {
                experiment: config.kind.name(),
                method: method.name().to_string(),
                n,
                param: task.param,
                num_comparisons: count,
                flip_prob: config.flip_prob,
                trial: task.trial,
                seed,
                revenue,
                revenue_kind: kind,
                aari: Some(score),
                ratio_to_latent: None,
                wall_ms: elapsed(start, config.timing),
            });
        }
        Ok(rows)
    })
}

/// Latent-tree recovery: for every sampling probability and trial, draw a
/// random tree, keep each pair of its complete triplet set with probability
/// `p`, optionally flip, and compare the AddS3-AL tree (and for small `n`
/// the exhaustive maximiser on the sample) with the latent tree, scoring
/// everything on the complete triplet set.
pub fn run_latent_recovery(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let tasks: Vec<Task> = config
        .probabilities
        .iter()
        .enumerate()
        .flat_map(|(pi, &p)| {
            (0..config.trials).map(move |trial| Task {
                point: pi,
                trial,
                param: p,
                budget: 0.0,
            })
        })
        .collect();
    let n = config.n;
    run_tasks(config, &tasks, |task, seed| {
        let latent = Dendrogram::random(n, &mut stream(seed, 0))?;
        let full = triplets_from_tree(&latent);
        let sampled = sample_pairs_bernoulli(&full, task.param, &mut stream(seed, 1))?;
        let observed = flip_noise(&sampled, config.flip_prob, &mut stream(seed, 2))?;
        let best = trev(&latent, &full)?;

        let row = |method: &str, revenue: i64, wall_ms| ResultRow {
            experiment: config.kind.name(),
            method: method.to_string(),
            n,
            param: task.param,
            num_comparisons: observed.len(),
            flip_prob: config.flip_prob,
            trial: task.trial,
            seed,
            revenue,
            revenue_kind: "triplet",
            aari: None,
            ratio_to_latent: Some(revenue as f64 / best as f64),
            wall_ms,
        };

        let start = Instant::now();
        let tree = adds3_average_linkage(&observed, n)?;
        let mut rows = vec![row(Method::Adds3Al.name(), trev(&tree, &full)?, elapsed(start, config.timing))];
        if n <= BRUTE_FORCE_MAX_N {
            let start = Instant::now();
            let max = brute_force_max_trev(&observed, n)?;
            let revenue = trev_with(&max.tree.lca_sizes(), &full)?;
            rows.push(row("brute-force", revenue, elapsed(start, config.timing)));
        }
        Ok(rows)
    })
}

/// Runs whichever experiment `config.kind` names.
pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match config.kind {
        ExperimentKind::PlantedSweep => run_planted_sweep(config),
        ExperimentKind::LatentRecovery | ExperimentKind::NoisyRecovery => run_latent_recovery(config),
    }
}
