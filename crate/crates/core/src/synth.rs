//! Synthetic fixtures with planted venue scores.
//!
//! Venues fall into fields; each author belongs to one field and mostly
//! publishes there. Every venue has a true score, and an author's true value
//! is the credit- and size-weighted sum of the true scores of their papers.
//! Faculty labels, awards and salaries are derived from those values plus
//! noise, and written in the same formats the pipeline reads.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusBuilder, FilterConfig, RawRecord, VenueId, VenueKind};
use crate::design::{build_design, CreditModel, DesignConfig, RowSpec, TemporalScheme};
use crate::scores::VenueScoreModel;
use crate::targets::{Award, SalaryRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub venues: usize,
    pub authors: usize,
    pub fields: usize,
    /// Mean number of papers each author leads.
    pub papers_per_author: f64,
    /// Probability that a paper goes to the lead author's own field.
    pub home_field_prob: f64,
    pub first_year: i32,
    pub last_year: i32,
    /// Fraction of authors labelled positive before label noise.
    pub positive_fraction: f64,
    /// Probability of flipping each faculty label.
    pub label_flip: f64,
    pub universities: usize,
    pub top_k: usize,
    /// Negative-label authors listed as faculty at lower-ranked universities.
    pub other_faculty: usize,
    /// Standard deviation of log-amount noise on awards.
    pub grant_noise: f64,
    /// Standard deviation of salary noise, in dollars.
    pub salary_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            venues: 200,
            authors: 5000,
            fields: 1,
            papers_per_author: 8.0,
            home_field_prob: 0.8,
            first_year: 1985,
            last_year: 2019,
            positive_fraction: 0.2,
            label_flip: 0.1,
            universities: 100,
            top_k: 40,
            other_faculty: 1000,
            grant_noise: 0.3,
            salary_noise: 15_000.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Infeasible(m.to_string()));
        if self.fields == 0 || self.venues < self.fields {
            return bad("need at least one venue per field");
        }
        if self.authors < 2 {
            return bad("need at least two authors");
        }
        if !(self.papers_per_author > 0.0) {
            return bad("papers_per_author must be positive");
        }
        if self.first_year > self.last_year || self.first_year < 1970 {
            return bad("years must satisfy 1970 <= first_year <= last_year");
        }
        if !(0.0..=1.0).contains(&self.home_field_prob) || !(0.0..=0.5).contains(&self.label_flip) {
            return bad("probabilities out of range");
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return bad("positive_fraction must be in (0, 1)");
        }
        if self.top_k == 0 || self.universities <= self.top_k {
            return bad("need 0 < top_k < universities");
        }
        if self.grant_noise < 0.0 || self.salary_noise < 0.0 {
            return bad("noise levels must be non-negative");
        }
        Ok(())
    }
}

/// Design under which the planted author values are defined.
pub fn truth_design() -> DesignConfig {
    DesignConfig {
        credit: CreditModel::Harmonic,
        temporal: TemporalScheme::Block { years: 50 },
        size_alpha: Some(1.5849),
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub config: SynthConfig,
    pub corpus: Corpus,
    /// Normalized-format lines, in generation order.
    pub corpus_lines: Vec<String>,
    /// True score by venue id.
    pub venue_scores: Vec<f64>,
    /// True value by author id.
    pub author_values: Vec<f64>,
    /// Noisy `±1` labels by author id.
    pub labels: Vec<f64>,
    pub affiliations: Vec<(String, String)>,
    pub ranking: Vec<String>,
    pub awards: Vec<Award>,
    pub cpi: BTreeMap<i32, f64>,
    pub salaries: Vec<SalaryRecord>,
}

const GIVEN: [&str; 16] = [
    "Ada", "Bo", "Cai", "Dana", "Eli", "Fay", "Gus", "Hana", "Ivo", "Jun", "Kira", "Leo", "Mira", "Nils", "Oona", "Pia",
];
const FAMILY: [&str; 16] = [
    "Aalto", "Berg", "Chen", "Dube", "Eze", "Fink", "Gallo", "Hale", "Ito", "Jha", "Kova", "Lund", "Mora", "Nagy",
    "Osei", "Park",
];

fn author_name(i: usize) -> String {
    format!("{} {} {:04}", GIVEN[i % 16], FAMILY[(i / 16) % 16], i)
}

fn venue_name(field: usize, i: usize) -> String {
    format!("SYN-F{field}-V{i:03}")
}

pub fn generate(config: &SynthConfig) -> Result<Fixture, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    let venue_field: Vec<usize> = (0..config.venues).map(|v| v % config.fields).collect();
    let names: Vec<String> = (0..config.venues).map(|v| venue_name(venue_field[v], v)).collect();
    let true_scores: Vec<f64> = (0..config.venues).map(|_| std_normal.sample(&mut rng)).collect();
    let popularity = LogNormal::new(0.0, 0.5).expect("valid lognormal");
    let weight: Vec<f64> = (0..config.venues).map(|_| popularity.sample(&mut rng)).collect();
    let by_field: Vec<Vec<usize>> = (0..config.fields)
        .map(|f| (0..config.venues).filter(|&v| venue_field[v] == f).collect())
        .collect();
    let pick_venue = |rng: &mut ChaCha8Rng, field: usize| -> usize {
        let pool = &by_field[field];
        let total: f64 = pool.iter().map(|&v| weight[v]).sum();
        let mut u = rng.random::<f64>() * total;
        for &v in pool {
            u -= weight[v];
            if u < 0.0 {
                return v;
            }
        }
        pool[pool.len() - 1]
    };

    let author_field: Vec<usize> = (0..config.authors)
        .map(|_| rng.random_range(0..config.fields))
        .collect();
    let authors_by_field: Vec<Vec<usize>> = (0..config.fields)
        .map(|f| (0..config.authors).filter(|&a| author_field[a] == f).collect())
        .collect();
    let span = config.last_year - config.first_year;
    let careers: Vec<(i32, i32)> = (0..config.authors)
        .map(|_| {
            let start = config.first_year + rng.random_range(0..=span * 4 / 5);
            let len = rng.random_range(4..=30);
            (start, (start + len).min(config.last_year))
        })
        .collect();
    let productivity = Poisson::new(config.papers_per_author).expect("positive rate");

    let mut lines = Vec::new();
    let mut builder = CorpusBuilder::new(FilterConfig::default());
    for lead in 0..config.authors {
        let n = productivity.sample(&mut rng) as usize;
        for _ in 0..n {
            let field = if rng.random::<f64>() < config.home_field_prob {
                author_field[lead]
            } else {
                rng.random_range(0..config.fields)
            };
            let venue = pick_venue(&mut rng, field);
            let (start, end) = careers[lead];
            let year = rng.random_range(start..=end);
            let extra = match rng.random::<f64>() {
                u if u < 0.25 => 0,
                u if u < 0.60 => 1,
                u if u < 0.85 => 2,
                _ => 3,
            };
            let mut team = vec![lead];
            let pool = &authors_by_field[author_field[lead]];
            for _ in 0..extra {
                let c = pool[rng.random_range(0..pool.len())];
                if !team.contains(&c) {
                    team.push(c);
                }
            }
            team[..].shuffle(&mut rng);
            let unknown_pages = rng.random::<f64>() < 0.01;
            let pages = rng.random_range(6..=30u32);
            let team_names: Vec<String> = team.iter().map(|&a| author_name(a)).collect();
            lines.push(format!(
                "{}\t{}\t{}\t{}",
                names[venue],
                year,
                if unknown_pages {
                    "?".to_string()
                } else {
                    pages.to_string()
                },
                team_names.join("|")
            ));
            builder.push(RawRecord {
                venue: Some(names[venue].clone()),
                kind: VenueKind::Conference,
                year: Some(year),
                pages: (!unknown_pages).then_some(pages),
                authors: team_names,
            });
        }
    }
    let (corpus, _) = builder.finish();
    if corpus.num_authors() < 2 || corpus.num_venues() < 2 {
        return Err(SynthError::Infeasible("too few papers were generated".into()));
    }

    let venue_scores: Vec<f64> = corpus
        .venues()
        .iter()
        .map(|v| {
            let idx: usize = v
                .name
                .rsplit('V')
                .next()
                .and_then(|s| s.parse().ok())
                .expect("synthetic venue name");
            true_scores[idx]
        })
        .collect();
    let design = build_design(&corpus, &truth_design(), &RowSpec::all_authors(&corpus))
        .map_err(|e| SynthError::Infeasible(e.to_string()))?;
    let column_truth: Vec<f64> = design
        .columns
        .columns()
        .iter()
        .map(|c| venue_scores[c.venue.index()])
        .chain([0.0])
        .collect();
    let author_values: Vec<f64> = (0..design.nrows())
        .map(|i| design.matrix.row_dot(i, &column_truth))
        .collect();

    let mut sorted = author_values.clone();
    sorted.sort_by(f64::total_cmp);
    let cut_index = ((1.0 - config.positive_fraction) * sorted.len() as f64) as usize;
    let threshold = sorted[cut_index.min(sorted.len() - 1)];
    let labels: Vec<f64> = author_values
        .iter()
        .map(|&v| {
            let clean = if v >= threshold { 1.0 } else { -1.0 };
            if rng.random::<f64>() < config.label_flip {
                -clean
            } else {
                clean
            }
        })
        .collect();

    let ranking: Vec<String> = (0..config.universities)
        .map(|u| format!("Synthetic University {u:03}"))
        .collect();
    let mut affiliations = Vec::new();
    let mut negatives = Vec::new();
    for (i, a) in corpus.authors().iter().enumerate() {
        if labels[i] > 0.0 {
            affiliations.push((a.name.clone(), ranking[rng.random_range(0..config.top_k)].clone()));
        } else {
            negatives.push(i);
        }
    }
    negatives.shuffle(&mut rng);
    for &i in negatives.iter().take(config.other_faculty) {
        let u = rng.random_range(config.top_k..config.universities);
        affiliations.push((corpus.authors()[i].name.clone(), ranking[u].clone()));
    }
    affiliations.sort();

    let mean = author_values.iter().sum::<f64>() / author_values.len() as f64;
    let sd = (author_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / author_values.len() as f64)
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let z: Vec<f64> = author_values.iter().map(|v| (v - mean) / sd).collect();

    let cpi: BTreeMap<i32, f64> = (1970..=2019).map(|y| (y, 1.03f64.powi(2019 - y))).collect();
    let grant_noise = Normal::new(0.0, config.grant_noise).expect("valid normal");
    let mut awards = Vec::new();
    for (i, a) in corpus.authors().iter().enumerate() {
        let rate = 0.4 * (0.8 * z[i]).exp().min(5.0);
        let count = Poisson::new(rate).map_or(0, |p| p.sample(&mut rng) as usize);
        let years: Vec<i32> = corpus.papers_of(a.id).iter().map(|&p| corpus.paper(p).year).collect();
        for _ in 0..count {
            let year = years[rng.random_range(0..years.len())];
            let log_amount = 12.0 + 0.6 * z[i] + grant_noise.sample(&mut rng);
            let amount = (log_amount.exp() / cpi[&year]).round();
            let mut pis = vec![a.name.clone()];
            if rng.random::<f64>() < 0.3 {
                pis.push(corpus.authors()[rng.random_range(0..corpus.num_authors())].name.clone());
            }
            awards.push(Award {
                id: format!("SYN{:07}", awards.len()),
                amount: Some(amount),
                year,
                pi_names: pis,
            });
        }
    }

    let salary_noise = Normal::new(0.0, config.salary_noise).expect("valid normal");
    let mut salaries = Vec::new();
    let index: std::collections::HashMap<&str, usize> = corpus
        .authors()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    for (name, _) in &affiliations {
        let i = index[name.as_str()];
        let base = 160_000.0 + 45_000.0 * z[i];
        for (k, year) in (2015..=2017).enumerate() {
            let s = base * 1.03f64.powi(k as i32) + salary_noise.sample(&mut rng);
            salaries.push(SalaryRecord {
                name: name.clone(),
                salary: s.round(),
                year,
            });
        }
    }

    Ok(Fixture {
        config: config.clone(),
        corpus,
        corpus_lines: lines,
        venue_scores,
        author_values,
        labels,
        affiliations,
        ranking,
        awards,
        cpi,
        salaries,
    })
}

impl Fixture {
    /// The planted scores as a per-year model over the corpus years.
    pub fn truth_model(&self) -> VenueScoreModel {
        let cells = self
            .venue_scores
            .iter()
            .enumerate()
            .flat_map(|(v, &s)| {
                (self.config.first_year..=self.config.last_year).map(move |y| ((VenueId(v as u32), y), s))
            })
            .collect();
        VenueScoreModel::new("truth", cells)
    }

    /// Writes every fixture file into `dir`:
    /// `corpus.tsv`, `affiliations.csv`, `ranking.txt`, `awards.jsonl`,
    /// `cpi.csv`, `salaries.csv`, `truth_venues.tsv`, `truth_authors.tsv`,
    /// `truth.json`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<String>, SynthError> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut put = |name: &str, body: String| -> io::Result<()> {
            fs::write(dir.join(name), body)?;
            files.push(name.to_string());
            Ok(())
        };

        let mut s = String::new();
        for l in &self.corpus_lines {
            s.push_str(l);
            s.push('\n');
        }
        put("corpus.tsv", s)?;

        let mut s = String::from("name,university\n");
        for (n, u) in &self.affiliations {
            writeln!(s, "{n},{u}").expect("string write");
        }
        put("affiliations.csv", s)?;
        put("ranking.txt", self.ranking.iter().map(|u| format!("{u}\n")).collect())?;

        let mut s = String::new();
        for a in &self.awards {
            s.push_str(&serde_json::to_string(a).expect("award serializes"));
            s.push('\n');
        }
        put("awards.jsonl", s)?;

        let mut s = String::from("year,factor\n");
        for (y, f) in &self.cpi {
            writeln!(s, "{y},{f}").expect("string write");
        }
        put("cpi.csv", s)?;

        let mut s = String::from("name,salary,year\n");
        for r in &self.salaries {
            writeln!(s, "{},{},{}", r.name, r.salary, r.year).expect("string write");
        }
        put("salaries.csv", s)?;

        let mut s = String::from("name\tscore\n");
        for (v, score) in self.corpus.venues().iter().zip(&self.venue_scores) {
            writeln!(s, "{}\t{score}", v.name).expect("string write");
        }
        put("truth_venues.tsv", s)?;

        let mut s = String::from("name\tvalue\tlabel\n");
        for ((a, v), l) in self.corpus.authors().iter().zip(&self.author_values).zip(&self.labels) {
            writeln!(s, "{}\t{v}\t{l}", a.name).expect("string write");
        }
        put("truth_authors.tsv", s)?;

        let summary = serde_json::json!({
            "config": self.config,
            "papers": self.corpus.num_papers(),
            "authors": self.corpus.num_authors(),
            "venues": self.corpus.num_venues(),
            "positives": self.labels.iter().filter(|&&l| l > 0.0).count(),
            "awards": self.awards.len(),
            "salary_records": self.salaries.len(),
            "truth_design": truth_design(),
        });
        put(
            "truth.json",
            serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        )?;
        Ok(files)
    }
}

/// Points drawn around `components` random centres in `dims` dimensions,
/// with the component index of each point.
pub fn gaussian_mixture(
    components: usize,
    per_component: usize,
    dims: usize,
    spread: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).expect("valid normal");
    let centres: Vec<Vec<f64>> = (0..components)
        .map(|_| (0..dims).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per_component {
            points.push(centre.iter().map(|x| x + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    (points, labels)
}

/// A single-venue corpus whose authors' yearly output peaks at career year
/// `peak`, with a flat score of 1 for every year.
pub fn aging_cohort(authors: usize, peak: u32, seed: u64) -> (Corpus, VenueScoreModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CorpusBuilder::new(FilterConfig::default());
    for a in 0..authors {
        let start = 1970 + rng.random_range(0..10);
        let length = rng.random_range(20..=40u32);
        for c in 0..=length {
            let year = start + c as i32;
            if year > 2019 {
                break;
            }
            let rate = 0.5 + 4.0 * (-(f64::from(c) - f64::from(peak)).powi(2) / (2.0 * 36.0)).exp();
            let n = Poisson::new(rate).map_or(0, |p| p.sample(&mut rng) as usize);
            for _ in 0..n {
                b.push(RawRecord {
                    venue: Some("AGING".into()),
                    kind: VenueKind::Conference,
                    year: Some(year),
                    pages: None,
                    authors: vec![author_name(a)],
                });
            }
        }
    }
    let (corpus, _) = b.finish();
    let cells = (1970..=2019).map(|y| ((VenueId(0), y), 1.0)).collect();
    (corpus, VenueScoreModel::new("flat", cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            venues: 20,
            authors: 300,
            fields: 2,
            universities: 10,
            top_k: 4,
            other_faculty: 50,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_files() {
        let a = tempdir("a");
        let b = tempdir("b");
        generate(&small()).unwrap().write_to(&a).unwrap();
        let files = generate(&small()).unwrap().write_to(&b).unwrap();
        for f in files {
            assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
        }
        fs::remove_dir_all(a).unwrap();
        fs::remove_dir_all(b).unwrap();
    }

    fn tempdir(tag: &str) -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("synth-test-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn noiseless_labels_threshold_values() {
        let f = generate(&SynthConfig {
            label_flip: 0.0,
            ..small()
        })
        .unwrap();
        let min_pos = f
            .labels
            .iter()
            .zip(&f.author_values)
            .filter(|(l, _)| **l > 0.0)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        let max_neg = f
            .labels
            .iter()
            .zip(&f.author_values)
            .filter(|(l, _)| **l < 0.0)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_pos > max_neg);
    }

    #[test]
    fn corpus_lines_reingest_identically() {
        let f = generate(&small()).unwrap();
        let text = f.corpus_lines.join("\n");
        let (c, _) = crate::corpus::ingest_normalized(text.as_bytes(), &FilterConfig::default()).unwrap();
        assert_eq!(c.num_papers(), f.corpus.num_papers());
        assert_eq!(c.num_authors(), f.corpus.num_authors());
        assert_eq!(c.venues(), f.corpus.venues());
    }

    #[test]
    fn infeasible_specs() {
        for bad in [
            SynthConfig { venues: 1, ..small() },
            SynthConfig { authors: 1, ..small() },
            SynthConfig { top_k: 10, ..small() },
            SynthConfig {
                positive_fraction: 1.0,
                ..small()
            },
        ] {
            assert!(matches!(generate(&bad), Err(SynthError::Infeasible(_))));
        }
    }

    #[test]
    fn mixture_and_cohort_shapes() {
        let (p, l) = gaussian_mixture(3, 4, 2, 0.1, 1);
        assert_eq!((p.len(), l.len()), (12, 12));
        let (c, m) = aging_cohort(5, 15, 1);
        assert_eq!(c.num_venues(), 1);
        assert_eq!(m.get(VenueId(0), 2019), Some(1.0));
    }
}
