//! Monte Carlo studies of the asymptotic behaviour of the test statistics.
//!
//! Replicate `k` of a study draws its table from a ChaCha8 stream selected
//! by `(seed, k)`, so results do not depend on how replicates are scheduled
//! across threads. Replicates run on a rayon pool whose size can be capped
//! with the `SYMFIT_THREADS` environment variable.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::FSpec;
use crate::error::{Error, Result};
use crate::format::TableDocument;
use crate::inference::{wald_delta, TestReport};
use crate::model::{degrees_of_freedom, ConstraintSystem, Model};
use crate::solver::{fit, fit_loglinear_kl, FitResult, SolverConfig};
use crate::table::{symmetrize, ProbVector, ScoreVector, Table};

/// Nominal level of the reported rejection rates.
pub const LEVEL: f64 = 0.05;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SYMFIT_THREADS";

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub pi0: ProbVector,
    pub n: u64,
    pub replications: usize,
    pub seed: u64,
    /// Generator of OQS[f] in the additivity study.
    pub spec: FSpec,
    /// Models whose G² and Wald statistics the calibration study records.
    pub models: Vec<Model>,
    pub scores: ScoreVector,
    pub solver: SolverConfig,
}

impl SimConfig {
    pub fn new(pi0: ProbVector, n: u64, replications: usize, seed: u64) -> Self {
        let r = pi0.shape().r;
        Self {
            pi0,
            n,
            replications,
            seed,
            spec: FSpec::kl(),
            models: vec![Model::S],
            scores: ScoreVector::equal_interval(r),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample size n must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.scores.len() != self.pi0.shape().r {
            return Err(Error::InvalidScores(format!(
                "{} scores for r = {}",
                self.scores.len(),
                self.pi0.shape().r
            )));
        }
        self.solver.validate()
    }
}

/// Empirical distribution of one statistic across successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    /// `g2:<model>` or `wald:<model>`.
    pub name: String,
    pub df: usize,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub rejection_rate: f64,
    /// Binomial standard error of `rejection_rate`.
    pub rejection_se: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub nonconvergence: usize,
    pub singular: usize,
    pub other: usize,
}

impl FailureCounts {
    pub fn total(&self) -> usize {
        self.nonconvergence + self.singular + self.other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n: u64,
    pub replications: usize,
    pub seed: u64,
    pub stats: Vec<StatSummary>,
    /// Mean of `|G²(S) − G²(OQS[f]) − G²(ME)|` (additivity study only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additivity_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additivity_residual_se: Option<f64>,
    pub failures: FailureCounts,
    pub failure_rate: f64,
    /// False when more than [`MAX_FAILURE_RATE`] of the replicates failed.
    pub valid: bool,
}

impl SimSummary {
    pub fn stat(&self, name: &str) -> Option<&StatSummary> {
        self.stats.iter().find(|s| s.name == name)
    }
}

/// One multinomial table of size `n` drawn from `pi0`.
pub fn sample_table(pi0: &ProbVector, n: u64, seed: u64) -> Table {
    sample_with(&mut ChaCha8Rng::seed_from_u64(seed), pi0, n)
}

/// Multinomial draw by sequential conditional binomials.
fn sample_with(rng: &mut ChaCha8Rng, pi0: &ProbVector, n: u64) -> Table {
    let probs = pi0.probs();
    let mut counts = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(left, q)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        counts[i] = draw;
        left -= draw;
        mass -= p;
    }
    let shape = pi0.shape();
    Table::new(shape.r, shape.t, counts).expect("counts have the shape of pi0")
}

fn replicate_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

enum Failure {
    Nonconvergence,
    Singular,
    Other,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Singular { .. } => Failure::Singular,
            _ => Failure::Other,
        }
    }
}

type Replicate = std::result::Result<Vec<f64>, Failure>;

fn converged(fit: Result<FitResult>) -> std::result::Result<FitResult, Failure> {
    let fit = fit?;
    if fit.converged {
        Ok(fit)
    } else {
        Err(Failure::Nonconvergence)
    }
}

fn fit_model(
    table: &Table,
    model: &Model,
    cs: &ConstraintSystem,
    cfg: &SimConfig,
) -> std::result::Result<FitResult, Failure> {
    let kl = matches!(model, Model::S) || matches!(model, Model::OqsF(spec) if spec.name == "kl");
    if kl {
        if let Ok(f) = converged(fit_loglinear_kl(table, model, &cfg.scores, &cfg.solver)) {
            return Ok(f);
        }
    }
    converged(fit(table, cs, &cfg.solver))
}

fn run_replicates<F>(cfg: &SimConfig, one: F) -> Vec<Replicate>
where
    F: Fn(&Table) -> Replicate + Sync,
{
    let work = || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|k| {
                let table = sample_with(&mut replicate_rng(cfg.seed, k), &cfg.pi0, cfg.n);
                one(&table)
            })
            .collect()
    };
    match thread_cap() {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&t| t > 0)
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / count;
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    (mean, variance)
}

fn summarize_stat(name: String, df: usize, values: &[f64]) -> Result<StatSummary> {
    let (mean, variance) = mean_and_variance(values);
    let mut rejected = 0usize;
    for &v in values {
        if TestReport::new(crate::inference::StatisticKind::LikelihoodRatio, v, df)?
            .rejected_at(LEVEL)
        {
            rejected += 1;
        }
    }
    let count = values.len();
    let rate = if count > 0 {
        rejected as f64 / count as f64
    } else {
        f64::NAN
    };
    Ok(StatSummary {
        name,
        df,
        count,
        mean,
        variance,
        rejection_rate: rate,
        rejection_se: (rate * (1.0 - rate) / count as f64).sqrt(),
    })
}

/// Splits replicates into successes and failure counts.
fn collect(results: Vec<Replicate>) -> (Vec<Vec<f64>>, FailureCounts) {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = FailureCounts::default();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(Failure::Nonconvergence) => failures.nonconvergence += 1,
            Err(Failure::Singular) => failures.singular += 1,
            Err(Failure::Other) => failures.other += 1,
        }
    }
    (ok, failures)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn finish(
    cfg: &SimConfig,
    stats: Vec<StatSummary>,
    residual: Option<(f64, f64)>,
    failures: FailureCounts,
) -> SimSummary {
    let failure_rate = failures.total() as f64 / cfg.replications as f64;
    SimSummary {
        n: cfg.n,
        replications: cfg.replications,
        seed: cfg.seed,
        stats,
        additivity_residual: residual.map(|r| r.0),
        additivity_residual_se: residual.map(|r| r.1),
        failures,
        failure_rate,
        valid: failure_rate <= MAX_FAILURE_RATE,
    }
}

/// Fits S, OQS[f] and ME to every replicate and summarizes the three G²
/// statistics and the additivity residual `|G²(S) − G²(OQS[f]) − G²(ME)|`.
///
/// For a generator other than KL, `pi0` must satisfy complete symmetry.
pub fn run_additivity_study(cfg: &SimConfig) -> Result<SimSummary> {
    cfg.validate()?;
    let shape = cfg.pi0.shape();
    if cfg.spec.name != "kl" {
        let sym = symmetrize(&cfg.pi0);
        let gap = sym
            .probs()
            .iter()
            .zip(cfg.pi0.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > 1e-10 {
            return Err(Error::Config(format!(
                "additivity study with f = {} needs a symmetric pi0 (max deviation {gap:.3e})",
                cfg.spec.name
            )));
        }
    }
    let models = [Model::S, Model::OqsF(cfg.spec.clone()), Model::Me];
    let systems = models
        .iter()
        .map(|m| ConstraintSystem::for_model(m, shape.r, shape.t, &cfg.scores))
        .collect::<Result<Vec<_>>>()?;

    let results = run_replicates(cfg, |table| {
        let mut g2 = Vec::with_capacity(4);
        for (m, cs) in models.iter().zip(&systems) {
            g2.push(fit_model(table, m, cs, cfg)?.g_squared);
        }
        g2.push((g2[0] - g2[1] - g2[2]).abs());
        Ok(g2)
    });
    let (rows, failures) = collect(results);

    let mut stats = Vec::new();
    for (j, m) in models.iter().enumerate() {
        let df = degrees_of_freedom(m, shape.r, shape.t)?;
        stats.push(summarize_stat(
            format!("g2:{}", m.tag()),
            df,
            &column(&rows, j),
        )?);
    }
    let (mean, var) = mean_and_variance(&column(&rows, 3));
    let se = (var / rows.len() as f64).sqrt();
    Ok(finish(cfg, stats, Some((mean, se)), failures))
}

/// Records G² and the Wald statistic of each configured model on every
/// replicate and reports their rejection rates at [`LEVEL`].
pub fn run_calibration_study(cfg: &SimConfig) -> Result<SimSummary> {
    cfg.validate()?;
    if cfg.models.is_empty() {
        return Err(Error::Config(
            "calibration study needs at least one model".into(),
        ));
    }
    let shape = cfg.pi0.shape();
    let systems = cfg
        .models
        .iter()
        .map(|m| ConstraintSystem::for_model(m, shape.r, shape.t, &cfg.scores))
        .collect::<Result<Vec<_>>>()?;

    let results = run_replicates(cfg, |table| {
        let mut out = Vec::with_capacity(2 * systems.len());
        for (m, cs) in cfg.models.iter().zip(&systems) {
            out.push(fit_model(table, m, cs, cfg)?.g_squared);
            out.push(wald_delta(table, cs)?.statistic);
        }
        Ok(out)
    });
    let (rows, failures) = collect(results);

    let mut stats = Vec::new();
    for (j, m) in cfg.models.iter().enumerate() {
        let df = degrees_of_freedom(m, shape.r, shape.t)?;
        stats.push(summarize_stat(
            format!("g2:{}", m.tag()),
            df,
            &column(&rows, 2 * j),
        )?);
        stats.push(summarize_stat(
            format!("wald:{}", m.tag()),
            df,
            &column(&rows, 2 * j + 1),
        )?);
    }
    Ok(finish(cfg, stats, None, failures))
}

/// Whether the mean additivity residual decreases along `summaries`,
/// tolerating increases within two standard errors of the difference.
pub fn residual_decreasing(summaries: &[SimSummary]) -> bool {
    summaries.windows(2).all(|w| {
        match (
            w[0].additivity_residual,
            w[1].additivity_residual,
            w[0].additivity_residual_se,
            w[1].additivity_residual_se,
        ) {
            (Some(a), Some(b), Some(sa), Some(sb)) => b <= a + 2.0 * (sa * sa + sb * sb).sqrt(),
            _ => false,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Additivity,
    Calibration,
}

/// Where the generating distribution comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pi0Source {
    /// Name of a bundled dataset (`dysmenorrhea`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Path of a table file, relative to the study file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Model whose fitted distribution is used; sample proportions if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<String>,
    /// Explicit cell probabilities, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

/// A study configuration file.
///
/// ```toml
/// study = "additivity"
/// fspec = "kl"
/// n = [200, 2000, 20000]
/// replications = 500
/// seed = 20240607
///
/// [pi0]
/// dataset = "dysmenorrhea"
/// fit = "s"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub study: StudyKind,
    #[serde(default = "default_fspec")]
    pub fspec: String,
    /// Sample-size ladder.
    pub n: Vec<u64>,
    pub replications: usize,
    pub seed: u64,
    /// Calibration models, as model tags.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    pub pi0: Pi0Source,
}

fn default_fspec() -> String {
    "kl".into()
}

fn default_models() -> Vec<String> {
    vec!["s".into()]
}

impl StudyFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: StudyFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("study file: {e}")))?;
        if file.n.is_empty() {
            return Err(Error::Config(
                "study file: `n` must list at least one size".into(),
            ));
        }
        Ok(file)
    }

    /// Resolves the generating distribution; relative paths are taken from `base`.
    pub fn resolve_pi0(&self, base: Option<&Path>) -> Result<(ProbVector, ScoreVector)> {
        let src = &self.pi0;
        let doc = match (&src.dataset, &src.table, &src.probs) {
            (Some(name), None, None) => Some(match name.as_str() {
                "dysmenorrhea" => crate::datasets::dysmenorrhea(),
                other => {
                    return Err(Error::Config(format!(
                        "study file: unknown dataset `{other}`"
                    )))
                }
            }),
            (None, Some(path), None) => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    Error::Config(format!("study file: reading {}: {e}", full.display()))
                })?;
                Some(TableDocument::parse(&text)?)
            }
            (None, None, Some(_)) => None,
            _ => {
                return Err(Error::Config(
                    "study file: [pi0] needs exactly one of `dataset`, `table`, `probs`".into(),
                ))
            }
        };
        match doc {
            Some(doc) => {
                let scores = match &self.scores {
                    Some(u) => ScoreVector::new(u.clone())?,
                    None => doc.scores_or_default(),
                };
                let pi0 = match &src.fit {
                    Some(tag) => {
                        let model = Model::parse(tag)?;
                        let t = &doc.table;
                        let cs = ConstraintSystem::for_model(&model, t.r(), t.t(), &scores)?;
                        let f = fit(t, &cs, &SolverConfig::default())?;
                        if !f.converged {
                            return Err(Error::Config(format!(
                                "study file: fit of `{tag}` for pi0 did not converge"
                            )));
                        }
                        f.pi_hat
                    }
                    None => doc.table.proportions(),
                };
                Ok((pi0, scores))
            }
            None => {
                if src.fit.is_some() {
                    return Err(Error::Config(
                        "study file: `fit` applies only to a dataset or table".into(),
                    ));
                }
                let (Some(r), Some(t)) = (src.r, src.t) else {
                    return Err(Error::Config(
                        "study file: explicit `probs` need `r` and `T`".into(),
                    ));
                };
                let pi0 = ProbVector::new(r, t, src.probs.clone().unwrap_or_default())?;
                let scores = match &self.scores {
                    Some(u) => ScoreVector::new(u.clone())?,
                    None => ScoreVector::equal_interval(r),
                };
                Ok((pi0, scores))
            }
        }
    }

    /// One [`SimConfig`] per rung of the sample-size ladder.
    pub fn configs(&self, base: Option<&Path>) -> Result<Vec<SimConfig>> {
        let (pi0, scores) = self.resolve_pi0(base)?;
        let spec = FSpec::builtin(&self.fspec)?;
        let models = self
            .models
            .iter()
            .map(|m| Model::parse(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .n
            .iter()
            .map(|&n| SimConfig {
                pi0: pi0.clone(),
                n,
                replications: self.replications,
                seed: self.seed,
                spec: spec.clone(),
                models: models.clone(),
                scores: scores.clone(),
                solver: SolverConfig::default(),
            })
            .collect())
    }
}

/// Results of a study over its sample-size ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: StudyKind,
    pub fspec: String,
    pub summaries: Vec<SimSummary>,
    /// Additivity studies only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_decreasing: Option<bool>,
    pub valid: bool,
}

pub fn run_study(file: &StudyFile, base: Option<&Path>) -> Result<StudyReport> {
    let summaries = file
        .configs(base)?
        .iter()
        .map(|cfg| match file.study {
            StudyKind::Additivity => run_additivity_study(cfg),
            StudyKind::Calibration => run_calibration_study(cfg),
        })
        .collect::<Result<Vec<_>>>()?;
    let residual_decreasing =
        (file.study == StudyKind::Additivity).then(|| residual_decreasing(&summaries));
    let valid = summaries.iter().all(|s| s.valid);
    Ok(StudyReport {
        study: file.study,
        fspec: file.fspec.clone(),
        summaries,
        residual_decreasing,
        valid,
    })
}
