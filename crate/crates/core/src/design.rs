//! Sparse design matrix: one row per author (or per target row), one column
//! per (venue, time chunk), plus a trailing bias column of ones.
//!
//! Each qualifying paper adds `credit × size_multiplier × splat_weight` to the
//! cells of its venue. Size normalization happens before splatting, so a
//! paper's total mass over all columns is `credit × size_multiplier`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AuthorId, Corpus, VenueId};
use crate::solver::CsrMatrix;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("{0}")]
    Domain(String),
    #[error("row {row} references unknown author {author}")]
    UnknownAuthor { row: usize, author: AuthorId },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// How a paper's credit is divided among its ordered authors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditModel {
    /// `1/n` each.
    EqualSplit,
    /// 1 each.
    FullCredit,
    /// `1/i`, normalized to sum to 1.
    Harmonic,
    /// Harmonic, with the last author raised to the first author's share
    /// before normalization.
    HarmonicLastEqualsFirst,
}

impl CreditModel {
    pub const ALL: [CreditModel; 4] = [
        CreditModel::EqualSplit,
        CreditModel::FullCredit,
        CreditModel::Harmonic,
        CreditModel::HarmonicLastEqualsFirst,
    ];

    /// Model by its conventional number, 1 through 4.
    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn weights(self, n_authors: usize) -> Result<Vec<f64>, DesignError> {
        if n_authors == 0 {
            return Err(DesignError::Domain("credit needs at least one author".into()));
        }
        let n = n_authors;
        let mut w = match self {
            CreditModel::FullCredit => return Ok(vec![1.0; n]),
            CreditModel::EqualSplit => vec![1.0 / n as f64; n],
            CreditModel::Harmonic | CreditModel::HarmonicLastEqualsFirst => {
                let mut raw: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
                if self == CreditModel::HarmonicLastEqualsFirst {
                    raw[n - 1] = raw[0];
                }
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            }
        };
        // The last share absorbs rounding so the shares sum to exactly 1.
        let rest: f64 = w[..n - 1].iter().sum();
        w[n - 1] = 1.0 - rest;
        Ok(w)
    }
}

/// Per-venue columns: fixed blocks of years, or one column per year with
/// each paper splatted across neighbouring years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalScheme {
    Block { years: u32 },
    Splat { sigma: f64, clip: f64 },
}

impl TemporalScheme {
    pub fn validate(&self) -> Result<(), DesignError> {
        match *self {
            TemporalScheme::Block { years: 0 } => Err(DesignError::Domain("block length must be >= 1".into())),
            TemporalScheme::Splat { sigma, clip } if !(sigma > 0.0) || !(0.0..1.0).contains(&clip) => {
                Err(DesignError::Domain(format!(
                    "splat needs sigma > 0 and 0 <= clip < 1, got sigma={sigma} clip={clip}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Truncated discrete Gaussian over integer year offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatKernel {
    pub offsets: Vec<i32>,
    pub weights: Vec<f64>,
}

/// Builds the splat kernel for a paper published in `year`.
///
/// Weights `exp(-k²/2σ²)` are normalized over a wide window; entries whose
/// normalized weight is below `clip` are dropped (the centre is always kept)
/// and the rest renormalized. Offsets landing outside `year_range` are then
/// removed and the remainder renormalized again, so boundary papers keep
/// their full mass.
pub fn splat_kernel(sigma: f64, clip: f64, year: i32, year_range: (i32, i32)) -> Result<SplatKernel, DesignError> {
    TemporalScheme::Splat { sigma, clip }.validate()?;
    if year < year_range.0 || year > year_range.1 {
        return Err(DesignError::Domain(format!(
            "year {year} outside {}..={}",
            year_range.0, year_range.1
        )));
    }
    let reach = (8.0 * sigma).ceil() as i32 + 1;
    let raw: Vec<(i32, f64)> = (-reach..=reach)
        .map(|k| (k, (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp()))
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let kept: Vec<(i32, f64)> = raw
        .into_iter()
        .map(|(k, w)| (k, w / total))
        .filter(|&(k, w)| k == 0 || (w >= clip && w > 0.0))
        .filter(|&(k, _)| (year_range.0..=year_range.1).contains(&(year + k)))
        .collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    Ok(SplatKernel {
        offsets: kept.iter().map(|(k, _)| *k).collect(),
        weights: kept.iter().map(|(_, w)| w / total).collect(),
    })
}

/// `M^(-1/alpha)`; `alpha = ∞` disables size normalization, `alpha = 1`
/// gives each paper `1/M`.
pub fn size_multiplier(papers_at_venue_year: u32, alpha: f64) -> Result<f64, DesignError> {
    if papers_at_venue_year == 0 {
        return Err(DesignError::Domain("venue-year size must be >= 1".into()));
    }
    if !(alpha > 0.0) {
        return Err(DesignError::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    if alpha.is_infinite() {
        return Ok(1.0);
    }
    Ok(f64::from(papers_at_venue_year).powf(-1.0 / alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub credit: CreditModel,
    pub temporal: TemporalScheme,
    /// Size-normalization exponent; `None` disables it.
    pub size_alpha: Option<f64>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            credit: CreditModel::Harmonic,
            temporal: TemporalScheme::Splat { sigma: 4.5, clip: 0.05 },
            size_alpha: Some(1.5849),
        }
    }
}

/// One design-matrix row: an author's papers, optionally only up to a year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub author: AuthorId,
    /// Inclusive.
    pub year_cutoff: Option<i32>,
}

impl RowSpec {
    pub fn all_authors(corpus: &Corpus) -> Vec<RowSpec> {
        corpus
            .authors()
            .iter()
            .map(|a| RowSpec {
                author: a.id,
                year_cutoff: None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub venue: VenueId,
    pub chunk: u32,
    pub start_year: i32,
    pub end_year: i32,
}

/// Bijection between non-bias columns and (venue, chunk) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    columns: Vec<ColumnInfo>,
    index: HashMap<(VenueId, u32), usize>,
    chunk_years: u32,
    year_range: (i32, i32),
}

impl ColumnMap {
    fn new(cells: BTreeSet<(VenueId, u32)>, chunk_years: u32, year_range: (i32, i32)) -> Self {
        let columns: Vec<ColumnInfo> = cells
            .into_iter()
            .map(|(venue, chunk)| {
                let start = year_range.0 + (chunk * chunk_years) as i32;
                let end = (start + chunk_years as i32 - 1).min(year_range.1);
                ColumnInfo {
                    venue,
                    chunk,
                    start_year: start,
                    end_year: end,
                }
            })
            .collect();
        let index = columns
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.venue, c.chunk), i))
            .collect();
        Self {
            columns,
            index,
            chunk_years,
            year_range,
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[ColumnInfo] {
        &self.columns
    }

    pub fn column(&self, venue: VenueId, chunk: u32) -> Option<usize> {
        self.index.get(&(venue, chunk)).copied()
    }

    pub fn chunk_of(&self, year: i32) -> u32 {
        ((year - self.year_range.0) as u32) / self.chunk_years
    }

    pub fn year_range(&self) -> (i32, i32) {
        self.year_range
    }

    /// Writes `column_index, venue_name, chunk_start_year, chunk_end_year` rows.
    pub fn write_tsv<W: Write>(&self, corpus: &Corpus, mut out: W) -> Result<(), DesignError> {
        writeln!(out, "column_index\tvenue_name\tchunk_start_year\tchunk_end_year")?;
        for (i, c) in self.columns.iter().enumerate() {
            let name = &corpus.venue(c.venue).name;
            writeln!(out, "{i}\t{name}\t{}\t{}", c.start_year, c.end_year)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub matrix: CsrMatrix,
    pub columns: ColumnMap,
    pub bias_col: usize,
    pub rows: Vec<RowSpec>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
}

struct Cells {
    kernels: HashMap<i32, SplatKernel>,
    sizes: HashMap<(VenueId, i32), f64>,
    credit: Vec<Vec<f64>>,
}

/// Builds the design matrix for `rows` (all authors when empty is not
/// implied; pass [`RowSpec::all_authors`]).
pub fn build_design(corpus: &Corpus, config: &DesignConfig, rows: &[RowSpec]) -> Result<DesignMatrix, DesignError> {
    if corpus.is_empty() {
        return Err(DesignError::EmptyCorpus);
    }
    config.temporal.validate()?;
    if let Some(alpha) = config.size_alpha {
        size_multiplier(1, alpha)?;
    }
    for (row, spec) in rows.iter().enumerate() {
        if spec.author.index() >= corpus.num_authors() {
            return Err(DesignError::UnknownAuthor {
                row,
                author: spec.author,
            });
        }
    }

    let year_range = corpus.year_range();
    let chunk_years = match config.temporal {
        TemporalScheme::Block { years } => years,
        TemporalScheme::Splat { .. } => 1,
    };
    let chunk = |y: i32| ((y - year_range.0) as u32) / chunk_years;

    let mut kernels = HashMap::new();
    if let TemporalScheme::Splat { sigma, clip } = config.temporal {
        for year in year_range.0..=year_range.1 {
            kernels.insert(year, splat_kernel(sigma, clip, year, year_range)?);
        }
    }
    let sizes = corpus
        .venue_year_sizes()
        .into_iter()
        .map(|(key, m)| {
            let mult = match config.size_alpha {
                Some(alpha) => size_multiplier(m, alpha)?,
                None => 1.0,
            };
            Ok((key, mult))
        })
        .collect::<Result<HashMap<_, _>, DesignError>>()?;
    let max_authors = corpus.papers().iter().map(|p| p.authors.len()).max().unwrap_or(1);
    let credit = (1..=max_authors)
        .map(|n| config.credit.weights(n))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = Cells { kernels, sizes, credit };

    let mut occupied = BTreeSet::new();
    for p in corpus.papers() {
        match cells.kernels.get(&p.year) {
            Some(k) => occupied.extend(k.offsets.iter().map(|off| (p.venue, chunk(p.year + off)))),
            None => {
                occupied.insert((p.venue, chunk(p.year)));
            }
        }
    }
    let columns = ColumnMap::new(occupied, chunk_years, year_range);
    let bias_col = columns.len();

    let row_entries: Vec<Vec<(u32, f64)>> = rows
        .par_iter()
        .map(|spec| {
            let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
            for &pid in corpus.papers_of(spec.author) {
                let paper = corpus.paper(pid);
                if spec.year_cutoff.is_some_and(|cut| paper.year > cut) {
                    continue;
                }
                let pos = paper
                    .authors
                    .iter()
                    .position(|a| *a == spec.author)
                    .expect("author index is consistent");
                let base = cells.credit[paper.authors.len() - 1][pos] * cells.sizes[&(paper.venue, paper.year)];
                match cells.kernels.get(&paper.year) {
                    Some(k) => {
                        for (off, w) in k.offsets.iter().zip(&k.weights) {
                            let col = columns.column(paper.venue, chunk(paper.year + off)).unwrap();
                            *acc.entry(col as u32).or_insert(0.0) += base * w;
                        }
                    }
                    None => {
                        let col = columns.column(paper.venue, chunk(paper.year)).unwrap();
                        *acc.entry(col as u32).or_insert(0.0) += base;
                    }
                }
            }
            acc.into_iter().filter(|(_, v)| *v > 0.0).collect()
        })
        .collect();

    let mut matrix = CsrMatrix::new(bias_col + 1);
    for entries in row_entries {
        matrix.push_row(entries.into_iter().chain([(bias_col as u32, 1.0)]));
    }
    Ok(DesignMatrix {
        matrix,
        columns,
        bias_col,
        rows: rows.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusBuilder, FilterConfig, RawRecord, VenueKind};

    fn corpus(papers: &[(&str, i32, &[&str])]) -> Corpus {
        let mut b = CorpusBuilder::new(FilterConfig::default());
        for (venue, year, authors) in papers {
            b.push(RawRecord {
                venue: Some(venue.to_string()),
                kind: VenueKind::Conference,
                year: Some(*year),
                pages: None,
                authors: authors.iter().map(|s| s.to_string()).collect(),
            });
        }
        b.finish().0
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn credit_examples() {
        assert_eq!(CreditModel::EqualSplit.weights(4).unwrap(), vec![0.25; 4]);
        assert_eq!(CreditModel::FullCredit.weights(3).unwrap(), vec![1.0; 3]);
        assert!(close(
            &CreditModel::Harmonic.weights(3).unwrap(),
            &[6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0],
            1e-15
        ));
        assert!(close(
            &CreditModel::HarmonicLastEqualsFirst.weights(3).unwrap(),
            &[0.4, 0.2, 0.4],
            1e-15
        ));
        assert_eq!(CreditModel::HarmonicLastEqualsFirst.weights(1).unwrap(), vec![1.0]);
        assert!(CreditModel::Harmonic.weights(0).is_err());
        assert_eq!(CreditModel::from_number(3), Some(CreditModel::Harmonic));
        assert_eq!(CreditModel::from_number(0), None);
    }

    #[test]
    fn credit_sum_rules() {
        for n in 1..=60 {
            for model in CreditModel::ALL {
                let s: f64 = model.weights(n).unwrap().iter().sum();
                let want = if model == CreditModel::FullCredit {
                    n as f64
                } else {
                    1.0
                };
                assert!((s - want).abs() <= 1e-12, "{model:?} n={n}: {s}");
            }
        }
    }

    #[test]
    fn size_multiplier_examples() {
        assert_eq!(size_multiplier(1, 1.5849).unwrap(), 1.0);
        assert!((size_multiplier(8, 1.5849).unwrap() - 0.2693).abs() < 5e-5);
        assert!((size_multiplier(100, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(size_multiplier(100, f64::INFINITY).unwrap(), 1.0);
        assert!(size_multiplier(0, 1.0).is_err());
    }

    #[test]
    fn kernel_support_and_mass() {
        let k = splat_kernel(4.5, 0.05, 2000, (1970, 2019)).unwrap();
        assert_eq!(k.offsets, (-4..=4).collect::<Vec<_>>());
        assert!((k.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for i in 0..k.offsets.len() {
            assert!((k.weights[i] - k.weights[k.offsets.len() - 1 - i]).abs() < 1e-15);
        }
        let edge = splat_kernel(4.5, 0.05, 2019, (1970, 2019)).unwrap();
        assert_eq!(edge.offsets, (-4..=0).collect::<Vec<_>>());
        assert!((edge.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let delta = splat_kernel(0.1, 0.05, 2000, (1970, 2019)).unwrap();
        assert_eq!(delta.offsets, vec![0]);
        assert_eq!(delta.weights, vec![1.0]);
    }

    #[test]
    fn single_paper_full_credit() {
        let c = corpus(&[("V", 2000, &["A"])]);
        let cfg = DesignConfig {
            credit: CreditModel::FullCredit,
            temporal: TemporalScheme::Block { years: 50 },
            size_alpha: None,
        };
        let d = build_design(&c, &cfg, &RowSpec::all_authors(&c)).unwrap();
        assert_eq!(d.matrix.to_dense(), vec![vec![1.0, 1.0]]);
        assert_eq!(d.bias_col, 1);
    }

    #[test]
    fn coauthors_split_equally() {
        let c = corpus(&[("V", 2000, &["A", "B"])]);
        let cfg = DesignConfig {
            credit: CreditModel::EqualSplit,
            temporal: TemporalScheme::Block { years: 50 },
            size_alpha: None,
        };
        let d = build_design(&c, &cfg, &RowSpec::all_authors(&c)).unwrap();
        assert_eq!(d.matrix.to_dense(), vec![vec![0.5, 1.0], vec![0.5, 1.0]]);
    }

    #[test]
    fn block_chunks_and_cutoffs() {
        let c = corpus(&[("V", 1975, &["A"]), ("V", 1985, &["A"]), ("W", 2019, &["A"])]);
        let cfg = DesignConfig {
            credit: CreditModel::FullCredit,
            temporal: TemporalScheme::Block { years: 10 },
            size_alpha: None,
        };
        let rows = [
            RowSpec {
                author: AuthorId(0),
                year_cutoff: None,
            },
            RowSpec {
                author: AuthorId(0),
                year_cutoff: Some(1985),
            },
            RowSpec {
                author: AuthorId(0),
                year_cutoff: Some(1984),
            },
        ];
        let d = build_design(&c, &cfg, &rows).unwrap();
        let info: Vec<_> = d
            .columns
            .columns()
            .iter()
            .map(|c| (c.chunk, c.start_year, c.end_year))
            .collect();
        assert_eq!(info, vec![(0, 1970, 1979), (1, 1980, 1989), (4, 2010, 2019)]);
        assert_eq!(
            d.matrix.to_dense(),
            vec![
                vec![1.0, 1.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 1.0]
            ]
        );
    }

    #[test]
    fn unknown_author_is_reported() {
        let c = corpus(&[("V", 2000, &["A"])]);
        let rows = [RowSpec {
            author: AuthorId(7),
            year_cutoff: None,
        }];
        let err = build_design(&c, &DesignConfig::default(), &rows).unwrap_err();
        assert!(matches!(err, DesignError::UnknownAuthor { row: 0, .. }));
    }

    #[test]
    fn size_normalization_uses_venue_year_counts() {
        let c = corpus(&[
            ("V", 2000, &["A"]),
            ("V", 2000, &["B"]),
            ("V", 2000, &["B"]),
            ("V", 2001, &["A"]),
        ]);
        let cfg = DesignConfig {
            credit: CreditModel::FullCredit,
            temporal: TemporalScheme::Block { years: 50 },
            size_alpha: Some(1.0),
        };
        let d = build_design(&c, &cfg, &RowSpec::all_authors(&c)).unwrap();
        // A: 1/3 (2000, three papers) + 1 (2001, one paper); B: 2/3.
        let dense = d.matrix.to_dense();
        assert!((dense[0][0] - (1.0 / 3.0 + 1.0)).abs() < 1e-15);
        assert!((dense[1][0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn block_one_matches_delta_splat() {
        let c = corpus(&[
            ("V", 1990, &["A", "B"]),
            ("W", 1991, &["B", "C", "A"]),
            ("V", 1995, &["C"]),
        ]);
        let block = DesignConfig {
            credit: CreditModel::Harmonic,
            temporal: TemporalScheme::Block { years: 1 },
            size_alpha: Some(1.5849),
        };
        let delta = DesignConfig {
            temporal: TemporalScheme::Splat { sigma: 0.1, clip: 0.05 },
            ..block.clone()
        };
        let rows = RowSpec::all_authors(&c);
        let a = build_design(&c, &block, &rows).unwrap();
        let b = build_design(&c, &delta, &rows).unwrap();
        assert_eq!(a.columns.columns(), b.columns.columns());
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn column_map_export() {
        let c = corpus(&[("NIPS", 2000, &["A"])]);
        let cfg = DesignConfig {
            temporal: TemporalScheme::Block { years: 50 },
            ..Default::default()
        };
        let d = build_design(&c, &cfg, &RowSpec::all_authors(&c)).unwrap();
        let mut out = Vec::new();
        d.columns.write_tsv(&c, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "column_index\tvenue_name\tchunk_start_year\tchunk_end_year\n0\tNIPS\t1970\t2019\n"
        );
    }
}
