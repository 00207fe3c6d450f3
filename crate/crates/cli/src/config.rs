//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use venue_scores::cluster::LdaConfig;
use venue_scores::corpus::FilterConfig;
use venue_scores::design::DesignConfig;
use venue_scores::eval::PagerankConfig;
use venue_scores::scores::{SizeNorm, YearNormalization};
use venue_scores::solver::SolverConfig;
use venue_scores::synth::SynthConfig;
use venue_scores::targets::{NsfConfig, SalaryConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub solver: SolverSection,
    pub faculty: Option<FacultySection>,
    pub nsf: Option<NsfSection>,
    pub salary: Option<SalarySection>,
    #[serde(default)]
    pub combine: CombineSection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub pagerank: PagerankConfig,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub credit_split: CreditSplitSection,
    #[serde(default)]
    pub correlate: CorrelateSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// DBLP XML dump, optionally gzipped.
    pub dblp: Option<PathBuf>,
    /// Normalized tab-separated corpus.
    pub normalized: Option<PathBuf>,
    /// `alias<TAB>canonical` venue merge map.
    pub merge_map: Option<PathBuf>,
    #[serde(default)]
    pub filter: FilterConfig,
}

/// Solver settings; the seed comes from the root `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub lambda: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub schedule: venue_scores::solver::LearningRate,
    pub shuffle: bool,
    pub tol: Option<f64>,
    pub average: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            lambda: d.lambda,
            epochs: d.epochs,
            eta0: d.eta0,
            schedule: d.schedule,
            shuffle: d.shuffle,
            tol: d.tol,
            average: d.average,
        }
    }
}

impl SolverSection {
    pub fn to_config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            epochs: self.epochs,
            eta0: self.eta0,
            schedule: self.schedule,
            seed,
            shuffle: self.shuffle,
            tol: self.tol,
            average: self.average,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacultySection {
    pub affiliations: PathBuf,
    pub ranking: PathBuf,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_match")]
    pub match_threshold: f64,
}

fn default_top_k() -> usize {
    40
}

fn default_match() -> f64 {
    0.9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsfSection {
    pub awards: PathBuf,
    pub cpi: PathBuf,
    #[serde(default)]
    pub params: NsfConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SalarySection {
    pub salaries: PathBuf,
    #[serde(default)]
    pub params: SalaryConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombineSection {
    pub metrics: Vec<String>,
    pub clip_sigmas: f64,
    pub per_year: bool,
}

impl Default for CombineSection {
    fn default() -> Self {
        Self {
            metrics: vec!["faculty".into(), "nsf".into(), "salary".into()],
            clip_sigmas: 12.0,
            per_year: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub credit: venue_scores::design::CreditModel,
    pub year_normalization: Option<YearNormalization>,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
    pub size_norm: SizeNorm,
    pub top: usize,
}

impl Default for ScoringSection {
    fn default() -> Self {
        Self {
            credit: venue_scores::design::CreditModel::Harmonic,
            year_normalization: None,
            year_min: None,
            year_max: None,
            size_norm: SizeNorm::Sqrt,
            top: 100,
        }
    }
}

impl ScoringSection {
    pub fn years(&self) -> Result<Option<(i32, i32)>, CliError> {
        match (self.year_min, self.year_max) {
            (None, None) => Ok(None),
            (lo, hi) => {
                let (lo, hi) = (lo.unwrap_or(i32::MIN), hi.unwrap_or(i32::MAX));
                if lo > hi {
                    return Err(CliError::Config(format!("scoring.year_min {lo} > year_max {hi}")));
                }
                Ok(Some((lo, hi)))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub since_year: i32,
    pub min_universities: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Fixed cluster count; the silhouette argmax when unset.
    pub k: Option<usize>,
    pub restarts: usize,
    pub lda: LdaConfig,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            since_year: 2000,
            min_universities: 5,
            k_min: 2,
            k_max: 30,
            k: None,
            restarts: 10,
            lda: LdaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreditSplitSection {
    pub lambda: f64,
}

impl Default for CreditSplitSection {
    fn default() -> Self {
        Self { lambda: 0.1 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateSection {
    /// Fuzzy name alignment threshold; exact names when unset.
    pub fuzzy_threshold: Option<f64>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check_values()?;
        Ok(cfg)
    }

    /// Relative paths in the file are resolved against `base`.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(text)?;
        cfg.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok((cfg, bytes))
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.corpus.dblp,
            &mut self.corpus.normalized,
            &mut self.corpus.merge_map,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(f) = &mut self.faculty {
            fix(&mut f.affiliations);
            fix(&mut f.ranking);
        }
        if let Some(n) = &mut self.nsf {
            fix(&mut n.awards);
            fix(&mut n.cpi);
        }
        if let Some(s) = &mut self.salary {
            fix(&mut s.salaries);
        }
    }

    fn check_values(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (&self.corpus.dblp, &self.corpus.normalized) {
            (Some(_), Some(_)) => return bad("set only one of corpus.dblp and corpus.normalized".into()),
            (None, None) => return bad("set corpus.dblp or corpus.normalized".into()),
            _ => {}
        }
        let f = &self.corpus.filter;
        if f.year_min > f.year_max || f.min_pages > f.max_pages {
            return bad("corpus.filter ranges are inverted".into());
        }
        self.design
            .temporal
            .validate()
            .map_err(|e| CliError::Config(format!("design.temporal: {e}")))?;
        if let Some(alpha) = self.design.size_alpha {
            if !(alpha > 0.0) {
                return bad(format!("design.size_alpha must be > 0, got {alpha}"));
            }
        }
        if !(self.solver.lambda >= 0.0) || !(self.solver.eta0 > 0.0) || self.solver.epochs == 0 {
            return bad("solver needs lambda >= 0, eta0 > 0 and epochs >= 1".into());
        }
        if let Some(fac) = &self.faculty {
            if fac.top_k == 0 || !(0.0..=1.0).contains(&fac.match_threshold) {
                return bad("faculty needs top_k >= 1 and match_threshold in [0, 1]".into());
            }
        }
        if !(self.combine.clip_sigmas > 0.0) {
            return bad("combine.clip_sigmas must be > 0".into());
        }
        for m in &self.combine.metrics {
            if !crate::commands::METRICS.contains(&m.as_str()) {
                return bad(format!("combine.metrics: unknown metric {m:?}"));
            }
        }
        self.scoring.years()?;
        let c = &self.cluster;
        if c.k_min < 2 || c.k_min > c.k_max || c.restarts == 0 || c.lda.topics == 0 {
            return bad("cluster needs 2 <= k_min <= k_max, restarts >= 1, lda.topics >= 1".into());
        }
        if !(self.credit_split.lambda >= 0.0) {
            return bad("credit_split.lambda must be >= 0".into());
        }
        if let Some(t) = self.correlate.fuzzy_threshold {
            if !(0.0..=1.0).contains(&t) {
                return bad("correlate.fuzzy_threshold must be in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Fails unless every file the given sections reference exists.
    pub fn require_files(&self, paths: &[&Path]) -> Result<(), CliError> {
        for p in paths {
            if !p.is_file() {
                return Err(CliError::Config(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }
}

/// Default synthetic-fixture settings, for `generate`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    #[serde(default)]
    pub synth: SynthConfig,
}

/// A complete configuration with defaults, for `init-config`.
pub fn example_toml() -> String {
    let cfg = PipelineConfig::from_toml("output_dir = \"out\"\n[corpus]\nnormalized = \"corpus.tsv\"\n")
        .expect("example parses");
    let body = toml::to_string_pretty(&cfg).expect("config serializes");
    format!("# Every key is documented by `venuescore --help`.\n{body}")
}

pub const CONFIG_HELP: &str = r#"CONFIGURATION

The pipeline reads one TOML file. Relative paths resolve against the file's
directory. Unknown keys are rejected. Every section except [corpus] is
optional and defaults as listed.

seed = 0                      Root seed; SGD shuffling, LDA and k-means derive from it.
output_dir = "out"            Where every command writes its outputs and manifests.

[corpus]
dblp = "dblp.xml.gz"          DBLP XML dump (plain or gzip). Set this or `normalized`.
normalized = "corpus.tsv"     venue<TAB>year<TAB>pages|?<TAB>author|author|... lines.
merge_map = "merge.tsv"       Optional alias<TAB>canonical venue merge list.
[corpus.filter]
year_min = 1970               First publication year kept.
year_max = 2019               Last publication year kept.
min_pages = 6                 Papers with fewer known pages are dropped.
max_pages = 100               Papers with more known pages are dropped.
keep_incollection = false     Keep edited-volume chapters as journal-like papers.
drop_preprints = true         Drop informal publications such as CoRR preprints.

[design]
credit = "harmonic"           Author credit: equal_split | full_credit | harmonic |
                              harmonic_last_equals_first.
size_alpha = 1.5849           Venue-size exponent: each paper counts M^(-1/alpha) where
                              M is the venue's paper count that year; `inf` disables it.
[design.temporal]
kind = "splat"                "splat" (one column per venue-year, Gaussian spread over
                              neighbouring years) or "block" (fixed year chunks).
sigma = 4.5                   splat: Gaussian width in years.
clip = 0.05                   splat: kernel entries below this normalized weight are dropped.
years = 50                    block: chunk length in years (instead of sigma/clip).

[solver]
lambda = 0.03                 L2 penalty; objective is mean loss + lambda/2 * |x|^2.
epochs = 20                   Passes over the rows.
eta0 = 0.01                   Initial learning rate.
schedule = "inverse_scaling"  "inverse_scaling" (eta0 / (1 + eta0*lambda*t)) or "constant".
shuffle = true                Shuffle rows every epoch.
tol = 1e-6                    Stop when the epoch loss improves by less than this fraction.
average = false               Return the average of second-half iterates.

[faculty]                     Faculty classification target (modified Huber loss).
affiliations = "aff.csv"      name,university rows.
ranking = "ranking.txt"       One university per line, best first.
top_k = 40                    Faculty at the top_k universities are labelled +1.
match_threshold = 0.9         Name-similarity threshold for matching roster names.

[nsf]                         Grant-amount regression target (Huber loss).
awards = "awards.jsonl"       One JSON award per line: id, amount, year, pi_names.
cpi = "cpi.csv"               year,factor inflation table.
[nsf.params]
huber_delta = 1.0             Huber threshold.
log_amount = false            Regress on log amounts.
zscore = true                 Z-score the final targets.
marginal = false              Row years cut at the award year (marginal value).
min_amount = 20000            Awards below this inflation-adjusted amount are dropped.
min_matched_fraction = 0.5    Awards need at least this fraction of PIs matched.
clip_cap = 1e7                Amounts above the cap are compressed as C*(1+ln(x/C)).
match_threshold = 0.9         Name-similarity threshold for PI names.

[salary]                      Salary regression target (Huber loss).
salaries = "salaries.csv"     name,salary,year rows; each person's maximum is used.
[salary.params]
min_salary = 120000           Salaries below are dropped.
max_salary = 800000           Salaries above are dropped.
unit = 100000                 Salaries are divided by this before fitting.
huber_delta = 1.0             Huber threshold.
zscore = false                Z-score the targets.
match_threshold = 0.9         Name-similarity threshold.

[combine]
metrics = ["faculty", "nsf", "salary"]   Trained models averaged into the combined model.
clip_sigmas = 12.0            Z-scores are clipped at this many standard deviations.
per_year = true               Z-normalize each year separately.

[scoring]
credit = "harmonic"           Credit model for author and institution scores.
year_normalization = "top10_mean"   Optional: "per_year_std" or "top10_mean" rescaling
                              before ranking and scoring.
year_min = 2000               Optional first year counted by rank/score.
year_max = 2019               Optional last year counted by rank/score.
size_norm = "sqrt"            Institution size norm: "sqrt" (total/sqrt(n)) or "per_capita".
top = 100                     Rows printed by `rank`.

[pagerank]
damping = 0.85                Damping factor.
tol = 1e-10                   L1 convergence tolerance.
max_iter = 1000               Iteration cap; exceeding it is a divergence error.
binarize = false              Treat every co-authorship edge as weight 1.

[cluster]
since_year = 2000             Only papers from this year on are counted.
min_universities = 5          Venues need faculty from this many universities.
k_min = 2                     Smallest cluster count in the silhouette sweep.
k_max = 30                    Largest cluster count in the silhouette sweep.
k = 12                        Optional fixed cluster count (default: sweep argmax).
restarts = 10                 k-means restarts per k.
[cluster.lda]
topics = 50                   LDA topic count (vector dimension).
alpha = 1.0                   Optional document-topic prior (default 50/topics).
beta = 0.01                   Topic-word prior.
iterations = 500              Gibbs sweeps.

[credit_split]
lambda = 0.1                  Ridge penalty for the plus-minus credit split.

[correlate]
fuzzy_threshold = 0.9         Optional fuzzy name alignment; exact names when unset.

EXIT CODES
  0 success, 1 configuration error, 2 data error, 3 numeric divergence.
"#;

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "output_dir = \"out\"\n[corpus]\nnormalized = \"c.tsv\"\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.solver.lambda, 0.03);
        assert_eq!(c.design, DesignConfig::default());
        assert_eq!(c.combine.clip_sigmas, 12.0);
        assert_eq!(c.pagerank.damping, 0.85);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}[solver]\nlamda = 0.1\n");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(CliError::Config(_))));
        let text = format!("bogus = 1\n{MINIMAL}");
        assert!(PipelineConfig::from_toml(&text).is_err());
    }

    #[test]
    fn enum_fields_are_checked() {
        let text = format!("{MINIMAL}[design]\ncredit = \"triple\"\n");
        assert!(PipelineConfig::from_toml(&text).is_err());
        let text = format!("{MINIMAL}[design.temporal]\nkind = \"block\"\nyears = 10\n");
        let c = PipelineConfig::from_toml(&text).unwrap();
        assert_eq!(
            c.design.temporal,
            venue_scores::design::TemporalScheme::Block { years: 10 }
        );
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for extra in [
            "[solver]\nlambda = -1.0\n",
            "[design.temporal]\nkind = \"splat\"\nsigma = 0.0\nclip = 0.05\n",
            "[combine]\nmetrics = [\"citations\"]\n",
            "[cluster]\nk_min = 5\nk_max = 3\n",
        ] {
            let text = format!("{MINIMAL}{extra}");
            assert!(
                matches!(PipelineConfig::from_toml(&text), Err(CliError::Config(_))),
                "{extra}"
            );
        }
        assert!(PipelineConfig::from_toml("output_dir = \"o\"\n[corpus]\n").is_err());
    }

    #[test]
    fn example_round_trips() {
        let text = example_toml();
        let c = PipelineConfig::from_toml(&text).unwrap();
        assert_eq!(toml::to_string_pretty(&c).unwrap(), text.split_once('\n').unwrap().1);
    }

    #[test]
    fn help_mentions_every_default_key() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        let value = toml::Value::try_from(&c).unwrap();
        fn keys(v: &toml::Value, out: &mut Vec<String>) {
            if let toml::Value::Table(t) = v {
                for (k, v) in t {
                    out.push(k.clone());
                    keys(v, out);
                }
            }
        }
        let mut all = Vec::new();
        keys(&value, &mut all);
        for k in all {
            assert!(CONFIG_HELP.contains(&k), "{k} is undocumented");
        }
    }
}
