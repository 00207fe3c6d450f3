//! Venue score models and what is computed from them: year normalization,
//! model combination, author/institution scores, aging curves, and
//! plus-minus credit splits.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AuthorId, Corpus, VenueId};
use crate::design::{build_design, ColumnMap, CreditModel, DesignConfig, DesignError};
use crate::eval::ScoreTable;
use crate::solver::{
    ridge_closed_form, sgd_fit, CsrMatrix, FitProblem, LearningRate, Loss, SolverConfig, SolverError, TrainingReport,
};
use crate::targets::{Roster, TargetSet};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("weight vector has {got} entries, column map needs {need}")]
    MissingColumn { got: usize, need: usize },
    #[error("normalization group {0} has fewer than two distinct scores")]
    Degenerate(String),
    #[error("no models to combine")]
    NoModels,
    #[error("unknown author {0}")]
    UnknownAuthor(AuthorId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Score per (venue, year).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VenueScoreModel {
    pub metric: String,
    /// Normalization steps applied so far, oldest first.
    pub history: Vec<String>,
    cells: BTreeMap<(VenueId, i32), f64>,
}

impl VenueScoreModel {
    pub fn new(metric: impl Into<String>, cells: BTreeMap<(VenueId, i32), f64>) -> Self {
        Self {
            metric: metric.into(),
            history: Vec::new(),
            cells,
        }
    }

    pub fn get(&self, venue: VenueId, year: i32) -> Option<f64> {
        self.cells.get(&(venue, year)).copied()
    }

    pub fn cells(&self) -> &BTreeMap<(VenueId, i32), f64> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells grouped by year, each in venue order.
    pub fn by_year(&self) -> BTreeMap<i32, Vec<(VenueId, f64)>> {
        let mut out: BTreeMap<i32, Vec<(VenueId, f64)>> = BTreeMap::new();
        for (&(v, y), &s) in &self.cells {
            out.entry(y).or_default().push((v, s));
        }
        out
    }

    /// Mean score of each venue over the years in `years` (all when `None`).
    pub fn venue_means(&self, years: Option<(i32, i32)>) -> BTreeMap<VenueId, f64> {
        let mut acc: BTreeMap<VenueId, (f64, usize)> = BTreeMap::new();
        for (&(v, y), &s) in &self.cells {
            if years.is_none_or(|(lo, hi)| (lo..=hi).contains(&y)) {
                let e = acc.entry(v).or_insert((0.0, 0));
                e.0 += s;
                e.1 += 1;
            }
        }
        acc.into_iter().map(|(v, (s, n))| (v, s / n as f64)).collect()
    }

    /// Venue ranking table over `years`.
    pub fn venue_table(&self, corpus: &Corpus, years: Option<(i32, i32)>) -> ScoreTable {
        let entries = self
            .venue_means(years)
            .into_iter()
            .map(|(v, s)| (corpus.venue(v).name.clone(), s))
            .collect();
        ScoreTable::from_unique(format!("venues:{}", self.metric), entries)
    }

    fn map(&self, step: String, f: impl Fn(VenueId, i32, f64) -> f64) -> Self {
        let mut history = self.history.clone();
        history.push(step);
        Self {
            metric: self.metric.clone(),
            history,
            cells: self.cells.iter().map(|(&(v, y), &s)| ((v, y), f(v, y, s))).collect(),
        }
    }

    /// Writes `venue_name, year, score` rows.
    pub fn write_tsv<W: Write>(&self, corpus: &Corpus, mut out: W) -> std::io::Result<()> {
        writeln!(out, "venue_name\tyear\tscore")?;
        for (&(v, y), s) in &self.cells {
            writeln!(out, "{}\t{y}\t{s}", corpus.venue(v).name)?;
        }
        Ok(())
    }

    /// Reads a table written by [`Self::write_tsv`]; venues must exist in
    /// `corpus`.
    pub fn read_tsv<R: BufRead>(metric: &str, corpus: &Corpus, reader: R) -> Result<Self, ScoreError> {
        let mut cells = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let err = |message: String| ScoreError::Parse { line: i + 1, message };
            if line.is_empty() || (i == 0 && line.starts_with("venue_name\t")) {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [name, year, score] = fields[..] else {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            };
            let venue = corpus
                .venue_by_name(name)
                .ok_or_else(|| err(format!("unknown venue {name:?}")))?;
            let year: i32 = year.parse().map_err(|e| err(format!("{e}")))?;
            let score: f64 = score.parse().map_err(|e| err(format!("{e}")))?;
            if !score.is_finite() {
                return Err(err(format!("non-finite score {score}")));
            }
            cells.insert((venue, year), score);
        }
        Ok(Self::new(metric, cells))
    }
}

/// Spreads each column's weight over the years of its chunk. The trailing
/// bias weight is ignored.
pub fn expand_weights(weights: &[f64], columns: &ColumnMap, metric: &str) -> Result<VenueScoreModel, ScoreError> {
    if weights.len() < columns.len() {
        return Err(ScoreError::MissingColumn {
            got: weights.len(),
            need: columns.len(),
        });
    }
    let mut cells = BTreeMap::new();
    for (c, &w) in columns.columns().iter().zip(weights) {
        for y in c.start_year..=c.end_year {
            cells.insert((c.venue, y), w);
        }
    }
    Ok(VenueScoreModel::new(metric, cells))
}

/// A fitted model together with the columns and fit report it came from.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: VenueScoreModel,
    pub weights: Vec<f64>,
    pub columns: ColumnMap,
    pub report: TrainingReport,
}

/// Builds the design for `targets`, fits it and expands the weights into a
/// venue-year model named after the target metric.
pub fn train(
    corpus: &Corpus,
    targets: &TargetSet,
    design: &DesignConfig,
    solver: &SolverConfig,
) -> Result<TrainedModel, ScoreError> {
    let d = build_design(corpus, design, &targets.row_specs())?;
    let w = targets.weights();
    let problem = FitProblem {
        matrix: &d.matrix,
        targets: &targets.b,
        weights: (!targets.uniform_weights()).then_some(w.as_slice()),
        bias_col: Some(d.bias_col),
    };
    let fit = sgd_fit(&problem, targets.loss, solver)?;
    let model = expand_weights(&fit.weights, &d.columns, &targets.metric)?;
    Ok(TrainedModel {
        model,
        weights: fit.weights,
        columns: d.columns,
        report: fit.report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearNormalization {
    /// Divide by the population standard deviation of the year's scores.
    PerYearStd,
    /// Divide by the mean of the year's ten largest scores.
    Top10Mean,
}

/// Rescales each year's scores. Years whose divisor is not positive are
/// left unscaled and reported in the returned warnings.
pub fn year_normalize(model: &VenueScoreModel, mode: YearNormalization) -> (VenueScoreModel, Vec<String>) {
    let mut divisors = HashMap::new();
    let mut warnings = Vec::new();
    for (year, cells) in model.by_year() {
        let values: Vec<f64> = cells.iter().map(|(_, s)| *s).collect();
        let d = match mode {
            YearNormalization::PerYearStd => population_moments(&values).1.sqrt(),
            YearNormalization::Top10Mean => {
                let mut sorted = values.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let top = &sorted[..sorted.len().min(10)];
                top.iter().sum::<f64>() / top.len() as f64
            }
        };
        if d > 0.0 && d.is_finite() {
            divisors.insert(year, d);
        } else {
            warnings.push(format!("year {year}: divisor {d} is not positive, left unscaled"));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let step = match mode {
        YearNormalization::PerYearStd => "per_year_std",
        YearNormalization::Top10Mean => "top10_mean",
    };
    let out = model.map(step.into(), |_, y, s| divisors.get(&y).map_or(s, |d| s / d));
    (out, warnings)
}

/// (mean, population variance), with the mean subtracted before squaring.
fn population_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Z-normalizes each group (each year, or the whole model) to mean 0 and
/// variance 1, then clips to `±clip_sigmas`.
pub fn znorm_clip(model: &VenueScoreModel, clip_sigmas: f64, per_year: bool) -> Result<VenueScoreModel, ScoreError> {
    let mut stats: HashMap<Option<i32>, (f64, f64)> = HashMap::new();
    if per_year {
        for (year, cells) in model.by_year() {
            let values: Vec<f64> = cells.iter().map(|(_, s)| *s).collect();
            let (mean, var) = population_moments(&values);
            if values.len() < 2 || !(var > 0.0) {
                return Err(ScoreError::Degenerate(format!("year {year}")));
            }
            stats.insert(Some(year), (mean, var.sqrt()));
        }
    } else {
        let values: Vec<f64> = model.cells.values().copied().collect();
        let (mean, var) = population_moments(&values);
        if values.len() < 2 || !(var > 0.0) {
            return Err(ScoreError::Degenerate("all years".into()));
        }
        stats.insert(None, (mean, var.sqrt()));
    }
    let step = format!("znorm_clip({clip_sigmas}, per_year={per_year})");
    Ok(model.map(step, |_, y, s| {
        let (mean, sd) = stats[&per_year.then_some(y)];
        ((s - mean) / sd).clamp(-clip_sigmas, clip_sigmas)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedModel {
    pub members: Vec<VenueScoreModel>,
    pub combined: VenueScoreModel,
}

/// Unweighted mean over the members defining each cell.
pub fn combine(models: &[VenueScoreModel]) -> Result<CombinedModel, ScoreError> {
    if models.is_empty() {
        return Err(ScoreError::NoModels);
    }
    let mut values: BTreeMap<(VenueId, i32), Vec<f64>> = BTreeMap::new();
    for m in models {
        for (&k, &s) in &m.cells {
            values.entry(k).or_default().push(s);
        }
    }
    let cells = values
        .into_iter()
        .map(|(k, mut v)| {
            // Sorting makes the floating-point sum independent of member order.
            v.sort_by(f64::total_cmp);
            (k, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let mut metrics: Vec<&str> = models.iter().map(|m| m.metric.as_str()).collect();
    metrics.sort();
    let mut combined = VenueScoreModel::new(metrics.join("+"), cells);
    combined.history.push(format!("combine({})", models.len()));
    Ok(CombinedModel {
        members: models.to_vec(),
        combined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorScore {
    pub author: AuthorId,
    pub total: f64,
    pub trajectory: BTreeMap<i32, f64>,
    pub papers_per_year: BTreeMap<i32, u32>,
}

impl AuthorScore {
    /// Trajectory divided by the number of papers in each year.
    pub fn per_paper(&self) -> BTreeMap<i32, f64> {
        self.trajectory
            .iter()
            .map(|(y, s)| (*y, s / f64::from(self.papers_per_year[y])))
            .collect()
    }
}

fn credit_table(corpus: &Corpus, credit: CreditModel) -> Result<Vec<Vec<f64>>, ScoreError> {
    let max = corpus.papers().iter().map(|p| p.authors.len()).max().unwrap_or(1);
    Ok((1..=max).map(|n| credit.weights(n)).collect::<Result<_, _>>()?)
}

fn author_score(
    model: &VenueScoreModel,
    corpus: &Corpus,
    author: AuthorId,
    credits: &[Vec<f64>],
    years: Option<(i32, i32)>,
) -> AuthorScore {
    let mut trajectory = BTreeMap::new();
    let mut papers_per_year = BTreeMap::new();
    for &pid in corpus.papers_of(author) {
        let p = corpus.paper(pid);
        if years.is_some_and(|(lo, hi)| p.year < lo || p.year > hi) {
            continue;
        }
        let pos = p
            .authors
            .iter()
            .position(|a| *a == author)
            .expect("author index is consistent");
        let value = credits[p.authors.len() - 1][pos] * model.get(p.venue, p.year).unwrap_or(0.0);
        *trajectory.entry(p.year).or_insert(0.0) += value;
        *papers_per_year.entry(p.year).or_insert(0) += 1;
    }
    AuthorScore {
        author,
        total: trajectory.values().sum(),
        trajectory,
        papers_per_year,
    }
}

/// Credit-weighted sum of the scores of an author's papers; cells missing
/// from the model count as 0.
pub fn score_author(
    model: &VenueScoreModel,
    corpus: &Corpus,
    author: AuthorId,
    credit: CreditModel,
    years: Option<(i32, i32)>,
) -> Result<AuthorScore, ScoreError> {
    if author.index() >= corpus.num_authors() {
        return Err(ScoreError::UnknownAuthor(author));
    }
    Ok(author_score(
        model,
        corpus,
        author,
        &credit_table(corpus, credit)?,
        years,
    ))
}

/// Scores every author in parallel, in author-id order.
pub fn score_all_authors(
    model: &VenueScoreModel,
    corpus: &Corpus,
    credit: CreditModel,
    years: Option<(i32, i32)>,
) -> Result<Vec<AuthorScore>, ScoreError> {
    let credits = credit_table(corpus, credit)?;
    Ok((0..corpus.num_authors() as u32)
        .into_par_iter()
        .map(|a| author_score(model, corpus, AuthorId(a), &credits, years))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeNorm {
    /// Total divided by the square root of the faculty count.
    Sqrt,
    /// Total divided by the faculty count.
    PerCapita,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstitutionScore {
    pub name: String,
    pub faculty: usize,
    pub total: f64,
    pub size_normed: f64,
    pub size_norm: SizeNorm,
}

pub fn score_institutions(
    model: &VenueScoreModel,
    corpus: &Corpus,
    roster: &Roster,
    credit: CreditModel,
    size_norm: SizeNorm,
    years: Option<(i32, i32)>,
) -> Result<Vec<InstitutionScore>, ScoreError> {
    let credits = credit_table(corpus, credit)?;
    Ok(roster
        .universities
        .iter()
        .map(|uni| {
            let members = roster.members.get(uni).map_or(&[][..], Vec::as_slice);
            if members.is_empty() {
                log::warn!("{uni}: no matched faculty, score 0");
            }
            let total: f64 = members
                .iter()
                .map(|&a| author_score(model, corpus, a, &credits, years).total)
                .sum();
            let n = members.len() as f64;
            let size_normed = match (members.len(), size_norm) {
                (0, _) => 0.0,
                (_, SizeNorm::Sqrt) => total / n.sqrt(),
                (_, SizeNorm::PerCapita) => total / n,
            };
            InstitutionScore {
                name: uni.clone(),
                faculty: members.len(),
                total,
                size_normed,
                size_norm,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgingPoint {
    pub mean: f64,
    pub authors: usize,
}

/// Mean yearly score by career year, counting an author in a career year
/// only if they published that year. Career year 0 is the author's first
/// publication year.
pub fn aging_curve(
    corpus: &Corpus,
    model: &VenueScoreModel,
    credit: CreditModel,
) -> Result<BTreeMap<u32, AgingPoint>, ScoreError> {
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for s in score_all_authors(model, corpus, credit, None)? {
        let Some(&first) = s.trajectory.keys().next() else {
            continue;
        };
        for (&y, &v) in &s.trajectory {
            let e = sums.entry((y - first) as u32).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(c, (s, n))| {
            (
                c,
                AgingPoint {
                    mean: s / n as f64,
                    authors: n,
                },
            )
        })
        .collect())
}

/// Papers × authors 0/1 matrix in paper and author id order.
pub fn paper_author_incidence(corpus: &Corpus) -> CsrMatrix {
    let mut m = CsrMatrix::new(corpus.num_authors());
    for p in corpus.papers() {
        let mut cols: Vec<u32> = p.authors.iter().map(|a| a.0).collect();
        cols.sort_unstable();
        m.push_row(cols.into_iter().map(|c| (c, 1.0)));
    }
    m
}

/// Above this many authors the split is fitted by SGD instead of the dense
/// closed form.
pub const CREDIT_SPLIT_DENSE_LIMIT: usize = 2000;

/// Ridge regression of per-paper values onto their authors.
pub fn credit_split(
    paper_scores: &[f64],
    incidence: &CsrMatrix,
    lambda: f64,
    solver: &SolverConfig,
) -> Result<Vec<f64>, ScoreError> {
    if paper_scores.len() != incidence.nrows() {
        return Err(SolverError::Dimension(format!(
            "{} paper scores for {} papers",
            paper_scores.len(),
            incidence.nrows()
        ))
        .into());
    }
    if incidence.ncols() <= CREDIT_SPLIT_DENSE_LIMIT {
        return Ok(ridge_closed_form(&incidence.to_dense(), paper_scores, lambda, None)?);
    }
    let config = SolverConfig {
        lambda,
        schedule: LearningRate::InverseScaling,
        ..solver.clone()
    };
    let problem = FitProblem {
        matrix: incidence,
        targets: paper_scores,
        weights: None,
        bias_col: None,
    };
    Ok(sgd_fit(&problem, Loss::Squared, &config)?.weights)
}

/// Per-paper credit-free scores: the model value of each paper's venue-year.
pub fn paper_scores(corpus: &Corpus, model: &VenueScoreModel) -> Vec<f64> {
    corpus
        .papers()
        .iter()
        .map(|p| model.get(p.venue, p.year).unwrap_or(0.0))
        .collect()
}
