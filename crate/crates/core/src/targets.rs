//! Regression targets for the three metrics of interest: faculty status,
//! NSF award amounts, and salaries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{match_names, AuthorId, Corpus};
use crate::design::RowSpec;
use crate::solver::Loss;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file} line {line}: {message}")]
    Parse {
        file: &'static str,
        line: u64,
        message: String,
    },
    #[error("CPI table has no factor for award year {year}")]
    MissingCpi { year: i32 },
    #[error("{0}")]
    Config(String),
}

fn parse_err(file: &'static str, line: u64, message: impl ToString) -> TargetError {
    TargetError::Parse {
        file,
        line,
        message: message.to_string(),
    }
}

fn csv_rows<R: Read>(
    reader: R,
    file: &'static str,
    header_first_field: &str,
) -> Result<Vec<(u64, csv::StringRecord)>, TargetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(file, line, e)
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rows.is_empty() && i == 0 && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case(header_first_field)) {
            continue;
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

/// `name,university` rows; an optional header whose first field is `name`
/// is skipped.
pub fn read_affiliations<R: Read>(reader: R) -> Result<Vec<(String, String)>, TargetError> {
    csv_rows(reader, "affiliations", "name")?
        .into_iter()
        .map(|(line, rec)| match (rec.get(0), rec.get(1), rec.len()) {
            (Some(n), Some(u), 2) if !n.is_empty() && !u.is_empty() => Ok((n.to_string(), u.to_string())),
            _ => Err(parse_err("affiliations", line, "expected name,university")),
        })
        .collect()
}

/// One university per line, best first. Blank lines and `#` comments are
/// ignored.
pub fn read_ranking<R: BufRead>(reader: R) -> Result<Vec<String>, TargetError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let name = line.trim();
        if !name.is_empty() && !name.starts_with('#') {
            out.push(name.to_string());
        }
    }
    Ok(out)
}

/// `year,factor` rows; the factor multiplies nominal dollars into constant
/// dollars.
pub fn read_cpi<R: Read>(reader: R) -> Result<BTreeMap<i32, f64>, TargetError> {
    let mut table = BTreeMap::new();
    for (line, rec) in csv_rows(reader, "cpi", "year")? {
        if rec.len() != 2 {
            return Err(parse_err("cpi", line, "expected year,factor"));
        }
        let year: i32 = rec[0].parse().map_err(|e| parse_err("cpi", line, e))?;
        let factor: f64 = rec[1].parse().map_err(|e| parse_err("cpi", line, e))?;
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(parse_err("cpi", line, format!("factor {factor} must be positive")));
        }
        table.insert(year, factor);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Award {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    /// `None` when the file holds `null` or a non-numeric amount.
    #[serde(default, deserialize_with = "lenient_f64")]
    pub amount: Option<f64>,
    pub year: i32,
    pub pi_names: Vec<String>,
}

fn string_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "award id must be a string or number, got {other}"
        ))),
    }
}

fn lenient_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    Ok(match serde_json::Value::deserialize(d)? {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    })
}

/// JSON lines `{id, amount, year, pi_names}`.
pub fn read_awards<R: BufRead>(reader: R) -> Result<Vec<Award>, TargetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err("awards", i as u64 + 1, e))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalaryRecord {
    pub name: String,
    pub salary: f64,
    pub year: i32,
}

/// `name,salary,year` rows.
pub fn read_salaries<R: Read>(reader: R) -> Result<Vec<SalaryRecord>, TargetError> {
    csv_rows(reader, "salaries", "name")?
        .into_iter()
        .map(|(line, rec)| {
            if rec.len() != 3 {
                return Err(parse_err("salaries", line, "expected name,salary,year"));
            }
            Ok(SalaryRecord {
                name: rec[0].to_string(),
                salary: rec[1].parse().map_err(|e| parse_err("salaries", line, e))?,
                year: rec[2].parse().map_err(|e| parse_err("salaries", line, e))?,
            })
        })
        .collect()
}

/// University rosters resolved against corpus authors.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Roster {
    /// Matched members per university, sorted and deduplicated.
    pub members: BTreeMap<String, Vec<AuthorId>>,
    /// Universities named in the file, including those with no matched members.
    pub universities: BTreeSet<String>,
    pub unmatched: Vec<String>,
}

impl Roster {
    pub fn resolve(corpus: &Corpus, affiliations: &[(String, String)], threshold: f64) -> Self {
        let names: Vec<&str> = affiliations.iter().map(|(n, _)| n.as_str()).collect();
        let matches = match_names(&names, corpus, threshold);
        let mut roster = Roster::default();
        for ((name, uni), m) in affiliations.iter().zip(matches) {
            roster.universities.insert(uni.clone());
            match m.author {
                Some(a) => roster.members.entry(uni.clone()).or_default().push(a),
                None => roster.unmatched.push(name.clone()),
            }
        }
        for ids in roster.members.values_mut() {
            ids.sort();
            ids.dedup();
        }
        roster
    }

    /// University of each author; an author listed at several keeps the
    /// first in name order.
    pub fn university_of(&self) -> HashMap<AuthorId, &str> {
        let mut map = HashMap::new();
        for (uni, ids) in &self.members {
            for &a in ids {
                map.entry(a).or_insert(uni.as_str());
            }
        }
        map
    }
}

/// One regression row: an author's papers up to an optional year, with a
/// sample weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub author: AuthorId,
    pub year_cutoff: Option<i32>,
    pub weight: f64,
}

impl TargetRow {
    pub fn spec(&self) -> RowSpec {
        RowSpec {
            author: self.author,
            year_cutoff: self.year_cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetFlags {
    pub zscore: bool,
    pub log_amount: bool,
    pub marginal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSet {
    pub metric: String,
    pub rows: Vec<TargetRow>,
    pub b: Vec<f64>,
    pub loss: Loss,
    pub flags: TargetFlags,
}

impl TargetSet {
    pub fn row_specs(&self) -> Vec<RowSpec> {
        self.rows.iter().map(TargetRow::spec).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.weight).collect()
    }

    pub fn uniform_weights(&self) -> bool {
        self.rows.iter().all(|r| r.weight == 1.0)
    }
}

/// Population z-scores in place. Constant vectors are left alone.
fn zscore(values: &mut [f64]) -> bool {
    let n = values.len() as f64;
    if values.len() < 2 {
        return false;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return false;
    }
    let sd = var.sqrt();
    values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacultyLabels {
    /// `+1.0` or `-1.0`, indexed by author id.
    pub labels: Vec<f64>,
    pub k: usize,
    pub ranking_source: String,
    pub unmatched: Vec<String>,
}

impl FacultyLabels {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l > 0.0).count()
    }

    pub fn target_set(&self) -> TargetSet {
        TargetSet {
            metric: "faculty".into(),
            rows: (0..self.labels.len())
                .map(|i| TargetRow {
                    author: AuthorId(i as u32),
                    year_cutoff: None,
                    weight: 1.0,
                })
                .collect(),
            b: self.labels.clone(),
            loss: Loss::ModifiedHuber,
            flags: TargetFlags::default(),
        }
    }
}

/// Labels every corpus author: `+1` when affiliated with a university
/// ranked `k` or better, `-1` otherwise.
pub fn build_faculty_labels(
    corpus: &Corpus,
    affiliations: &[(String, String)],
    ranking: &[String],
    k: usize,
    match_threshold: f64,
    ranking_source: &str,
) -> FacultyLabels {
    let top: BTreeSet<&str> = ranking.iter().take(k).map(String::as_str).collect();
    let roster = Roster::resolve(corpus, affiliations, match_threshold);
    let mut labels = vec![-1.0; corpus.num_authors()];
    for (uni, ids) in &roster.members {
        if top.contains(uni.as_str()) {
            for a in ids {
                labels[a.index()] = 1.0;
            }
        }
    }
    FacultyLabels {
        labels,
        k,
        ranking_source: ranking_source.to_string(),
        unmatched: roster.unmatched,
    }
}

/// `C·(1 + ln(x/C))` above the cap, identity below.
pub fn soft_clip(x: f64, cap: f64) -> f64 {
    if x > cap {
        cap * (1.0 + (x / cap).ln())
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NsfConfig {
    pub huber_delta: f64,
    pub log_amount: bool,
    pub zscore: bool,
    pub marginal: bool,
    pub min_amount: f64,
    pub min_matched_fraction: f64,
    pub clip_cap: f64,
    pub match_threshold: f64,
}

impl Default for NsfConfig {
    fn default() -> Self {
        Self {
            huber_delta: 1.0,
            log_amount: false,
            zscore: true,
            marginal: false,
            min_amount: 20_000.0,
            min_matched_fraction: 0.5,
            clip_cap: 1e7,
            match_threshold: 0.9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NsfStats {
    pub awards_seen: usize,
    pub kept: usize,
    pub dropped_non_finite: usize,
    pub dropped_negative: usize,
    pub dropped_below_min: usize,
    pub dropped_low_match: usize,
    pub unmatched_names: Vec<String>,
}

/// A retained award after filtering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrantTarget {
    pub award_id: String,
    pub year: i32,
    pub pi_author_ids: Vec<AuthorId>,
    pub matched_fraction: f64,
    pub amount_adjusted: f64,
}

pub fn filter_awards(
    corpus: &Corpus,
    awards: &[Award],
    cpi: &BTreeMap<i32, f64>,
    config: &NsfConfig,
) -> Result<(Vec<GrantTarget>, NsfStats), TargetError> {
    let mut stats = NsfStats {
        awards_seen: awards.len(),
        ..Default::default()
    };
    let mut sorted: Vec<&Award> = awards.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut candidates = Vec::new();
    for award in sorted {
        let amount = match award.amount {
            Some(a) if a.is_finite() => a,
            _ => {
                stats.dropped_non_finite += 1;
                continue;
            }
        };
        if amount < 0.0 {
            stats.dropped_negative += 1;
            continue;
        }
        let factor = *cpi
            .get(&award.year)
            .ok_or(TargetError::MissingCpi { year: award.year })?;
        let adjusted = amount * factor;
        if amount < config.min_amount || adjusted < config.min_amount {
            stats.dropped_below_min += 1;
            continue;
        }
        candidates.push((award, adjusted));
    }

    let names: Vec<&str> = candidates
        .iter()
        .flat_map(|(a, _)| a.pi_names.iter().map(String::as_str))
        .collect();
    let mut matches = match_names(&names, corpus, config.match_threshold).into_iter();
    let mut unmatched = BTreeSet::new();
    let mut kept = Vec::new();
    for (award, adjusted) in candidates {
        let mut ids = Vec::new();
        for m in matches.by_ref().take(award.pi_names.len()) {
            match m.author {
                Some(a) => ids.push(a),
                None => {
                    unmatched.insert(m.query);
                }
            }
        }
        ids.sort();
        ids.dedup();
        let fraction = if award.pi_names.is_empty() {
            0.0
        } else {
            (ids.len() as f64 / award.pi_names.len() as f64).min(1.0)
        };
        if ids.is_empty() || fraction < config.min_matched_fraction {
            stats.dropped_low_match += 1;
            continue;
        }
        kept.push(GrantTarget {
            award_id: award.id.clone(),
            year: award.year,
            pi_author_ids: ids,
            matched_fraction: fraction,
            amount_adjusted: adjusted,
        });
    }
    stats.kept = kept.len();
    stats.unmatched_names = unmatched.into_iter().collect();
    Ok((kept, stats))
}

/// One row per matched PI of each retained award, with the PI's papers up
/// to and including the award year. Rows are ordered by award id, then
/// author id.
pub fn build_nsf_targets(
    corpus: &Corpus,
    awards: &[Award],
    cpi: &BTreeMap<i32, f64>,
    config: &NsfConfig,
) -> Result<(TargetSet, NsfStats), TargetError> {
    if !(config.huber_delta > 0.0) || !(config.clip_cap > 0.0) {
        return Err(TargetError::Config("huber_delta and clip_cap must be positive".into()));
    }
    let (grants, stats) = filter_awards(corpus, awards, cpi, config)?;

    let mut rows = Vec::new();
    let mut b = Vec::new();
    for g in &grants {
        let mut value = soft_clip(g.amount_adjusted, config.clip_cap);
        if config.log_amount {
            value = value.ln();
        }
        let share = value * g.matched_fraction / g.pi_author_ids.len() as f64;
        for &a in &g.pi_author_ids {
            rows.push(TargetRow {
                author: a,
                year_cutoff: Some(g.year),
                weight: 1.0,
            });
            b.push(share);
        }
    }

    if config.marginal {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        // Stable: same-year awards accumulate in award-id order.
        order.sort_by_key(|&i| rows[i].year_cutoff);
        let mut running: HashMap<AuthorId, f64> = HashMap::new();
        let mut cumulative = vec![0.0; b.len()];
        for i in order {
            let total = running.entry(rows[i].author).or_insert(0.0);
            *total += b[i];
            cumulative[i] = *total;
        }
        b = cumulative;
    }
    if config.zscore && !zscore(&mut b) {
        log::warn!("NSF targets are constant; z-normalization skipped");
    }

    Ok((
        TargetSet {
            metric: "nsf".into(),
            rows,
            b,
            loss: Loss::Huber {
                delta: config.huber_delta,
            },
            flags: TargetFlags {
                zscore: config.zscore,
                log_amount: config.log_amount,
                marginal: config.marginal,
            },
        },
        stats,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SalaryConfig {
    pub min_salary: f64,
    pub max_salary: f64,
    /// Salaries are divided by this before fitting.
    pub unit: f64,
    pub huber_delta: f64,
    pub zscore: bool,
    pub match_threshold: f64,
}

impl Default for SalaryConfig {
    fn default() -> Self {
        Self {
            min_salary: 120_000.0,
            max_salary: 800_000.0,
            unit: 100_000.0,
            huber_delta: 1.0,
            zscore: false,
            match_threshold: 0.9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SalaryStats {
    pub individuals: usize,
    pub kept: usize,
    pub dropped_out_of_range: usize,
    pub unmatched_names: Vec<String>,
}

/// One row per matched individual, targeting their maximum salary across
/// all records. Individuals whose maximum falls outside the configured
/// range are dropped.
pub fn build_salary_targets(
    corpus: &Corpus,
    records: &[SalaryRecord],
    config: &SalaryConfig,
) -> Result<(TargetSet, SalaryStats), TargetError> {
    if !(config.unit > 0.0) || !(config.huber_delta > 0.0) {
        return Err(TargetError::Config("unit and huber_delta must be positive".into()));
    }
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records {
        let slot = best.entry(r.name.as_str()).or_insert(f64::NEG_INFINITY);
        if r.salary > *slot {
            *slot = r.salary;
        }
    }
    let mut stats = SalaryStats {
        individuals: best.len(),
        ..Default::default()
    };
    let in_range: Vec<(&str, f64)> = best
        .into_iter()
        .filter(|&(_, s)| {
            let ok = s.is_finite() && s >= config.min_salary && s <= config.max_salary;
            stats.dropped_out_of_range += usize::from(!ok);
            ok
        })
        .collect();
    let names: Vec<&str> = in_range.iter().map(|(n, _)| *n).collect();
    let mut per_author: BTreeMap<AuthorId, f64> = BTreeMap::new();
    for ((_, salary), m) in in_range.iter().zip(match_names(&names, corpus, config.match_threshold)) {
        match m.author {
            Some(a) => {
                let slot = per_author.entry(a).or_insert(*salary);
                *slot = slot.max(*salary);
            }
            None => stats.unmatched_names.push(m.query),
        }
    }
    stats.kept = per_author.len();
    let rows = per_author
        .keys()
        .map(|&a| TargetRow {
            author: a,
            year_cutoff: None,
            weight: 1.0,
        })
        .collect();
    let mut b: Vec<f64> = per_author.values().map(|s| s / config.unit).collect();
    if config.zscore && !zscore(&mut b) {
        log::warn!("salary targets are constant; z-normalization skipped");
    }
    Ok((
        TargetSet {
            metric: "salary".into(),
            rows,
            b,
            loss: Loss::Huber {
                delta: config.huber_delta,
            },
            flags: TargetFlags {
                zscore: config.zscore,
                ..Default::default()
            },
        },
        stats,
    ))
}
