//! Score tables, rank correlation, and PageRank baselines.

mod pagerank;
mod rank;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::normalize_name;

pub use pagerank::{
    coauthor_graph, pagerank, pagerank_authors, pagerank_venues, venue_overlap_graph, PagerankConfig, PagerankResult,
    WeightedGraph,
};
pub use rank::{doubled_midranks, kendall, pearson, spearman};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("inputs must be finite")]
    NonFinite,
    #[error("correlation is undefined for a constant input")]
    ZeroVariance,
    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("{0}")]
    Config(String),
    #[error("duplicate entity {0:?}")]
    Duplicate(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("only {0} entities are shared by all tables; need at least 2")]
    SmallIntersection(usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Named entity scores with unique names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTable {
    pub provenance: String,
    entries: Vec<(String, f64)>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl ScoreTable {
    pub fn new(provenance: impl Into<String>, entries: Vec<(String, f64)>) -> Result<Self, EvalError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (name, score)) in entries.iter().enumerate() {
            if !score.is_finite() {
                return Err(EvalError::NonFinite);
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(EvalError::Duplicate(name.clone()));
            }
        }
        Ok(Self {
            provenance: provenance.into(),
            entries,
            index,
        })
    }

    /// For callers whose names are unique by construction.
    pub(crate) fn from_unique(provenance: String, entries: Vec<(String, f64)>) -> Self {
        Self::new(provenance, entries).expect("names are unique and scores finite")
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index.get(name).map(|&i| self.entries[i].1)
    }

    /// Entries by descending score, ties broken by name.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.entries.iter().map(|(n, s)| (n.as_str(), *s)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "name\tscore")?;
        for (n, s) in &self.entries {
            writeln!(out, "{n}\t{s}")?;
        }
        Ok(())
    }

    /// `rank, name, score`, best first.
    pub fn write_ranking_tsv<W: Write>(&self, mut out: W, limit: Option<usize>) -> std::io::Result<()> {
        writeln!(out, "rank\tname\tscore")?;
        for (i, (n, s)) in self.ranked().into_iter().take(limit.unwrap_or(usize::MAX)).enumerate() {
            writeln!(out, "{}\t{n}\t{s}", i + 1)?;
        }
        Ok(())
    }

    /// Reads `name<TAB>score` lines (or `name,score` when a line has no
    /// tab). A first line whose score is not a number is taken as a header.
    pub fn read_tsv<R: BufRead>(provenance: &str, reader: R) -> Result<Self, EvalError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let split = line.rsplit_once('\t').or_else(|| line.rsplit_once(','));
            let err = |message: String| EvalError::Parse { line: i + 1, message };
            let Some((name, score)) = split else {
                return Err(err("expected name and score".into()));
            };
            let score: f64 = match score.trim().parse() {
                Ok(v) => v,
                Err(_) if i == 0 => continue,
                Err(e) => return Err(err(format!("{e}"))),
            };
            entries.push((name.trim().to_string(), score));
        }
        Self::new(provenance, entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    Exact,
    /// Names of later tables are matched to the first table's names by
    /// normalized similarity at or above the threshold.
    Fuzzy(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub tables: Vec<String>,
    pub entities: usize,
    pub spearman: Vec<Vec<f64>>,
    pub kendall: Vec<Vec<f64>>,
    pub pearson: Vec<Vec<f64>>,
    /// Names of each table left out of the intersection.
    pub dropped: BTreeMap<String, Vec<String>>,
}

impl CorrelationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Maps every name of `table` to a name of `reference`, one-to-one, keeping
/// the most similar candidate when several collide.
fn fuzzy_keys(reference: &ScoreTable, table: &ScoreTable, threshold: f64) -> HashMap<String, String> {
    let refs: Vec<(String, &str)> = reference
        .entries
        .iter()
        .map(|(n, _)| (normalize_name(n), n.as_str()))
        .collect();
    let mut best: HashMap<&str, (f64, &str)> = HashMap::new();
    for (name, _) in &table.entries {
        let (sim, target) = if reference.get(name).is_some() {
            (1.0, Some(name.as_str()))
        } else {
            let key = normalize_name(name);
            refs.iter().fold((f64::NEG_INFINITY, None), |acc, (rk, rn)| {
                let s = strsim::normalized_levenshtein(&key, rk);
                if s > acc.0 {
                    (s, Some(*rn))
                } else {
                    acc
                }
            })
        };
        let Some(target) = target else { continue };
        if sim < threshold {
            continue;
        }
        let slot = best.entry(target).or_insert((sim, name.as_str()));
        if sim > slot.0 || (sim == slot.0 && name.as_str() < slot.1) {
            *slot = (sim, name.as_str());
        }
    }
    best.into_iter()
        .map(|(r, (_, n))| (n.to_string(), r.to_string()))
        .collect()
}

/// Correlates every pair of tables over the entities all of them share.
pub fn correlate(tables: &[ScoreTable], alignment: Alignment) -> Result<CorrelationReport, EvalError> {
    if tables.len() < 2 {
        return Err(EvalError::Config("correlate needs at least two tables".into()));
    }
    // Per table: name -> key in the first table's namespace.
    let keys: Vec<HashMap<String, String>> = tables
        .iter()
        .enumerate()
        .map(|(i, t)| match alignment {
            Alignment::Fuzzy(threshold) if i > 0 => fuzzy_keys(&tables[0], t, threshold),
            _ => t.entries.iter().map(|(n, _)| (n.clone(), n.clone())).collect(),
        })
        .collect();
    let mut shared: Vec<&str> = tables[0]
        .entries
        .iter()
        .map(|(n, _)| n.as_str())
        .filter(|n| keys[1..].iter().all(|k| k.values().any(|v| v == n)))
        .collect();
    shared.sort_unstable();
    if shared.len() < 2 {
        return Err(EvalError::SmallIntersection(shared.len()));
    }
    let kept: std::collections::HashSet<&str> = shared.iter().copied().collect();

    let mut columns = Vec::with_capacity(tables.len());
    let mut dropped = BTreeMap::new();
    for (t, k) in tables.iter().zip(&keys) {
        let by_key: HashMap<&str, f64> = t
            .entries
            .iter()
            .filter_map(|(n, s)| k.get(n).map(|key| (key.as_str(), *s)))
            .collect();
        columns.push(shared.iter().map(|n| by_key[n]).collect::<Vec<f64>>());
        let lost: Vec<String> = t
            .entries
            .iter()
            .filter(|(n, _)| !k.get(n).is_some_and(|key| kept.contains(key.as_str())))
            .map(|(n, _)| n.clone())
            .collect();
        dropped.insert(t.provenance.clone(), lost);
    }

    let n = tables.len();
    let matrix = |f: fn(&[f64], &[f64]) -> Result<f64, EvalError>| -> Result<Vec<Vec<f64>>, EvalError> {
        let mut m = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let r = f(&columns[i], &columns[j])?;
                m[i][j] = r;
                m[j][i] = r;
            }
        }
        Ok(m)
    };
    Ok(CorrelationReport {
        tables: tables.iter().map(|t| t.provenance.clone()).collect(),
        entities: shared.len(),
        spearman: matrix(spearman)?,
        kendall: matrix(kendall)?,
        pearson: matrix(pearson)?,
        dropped,
    })
}
