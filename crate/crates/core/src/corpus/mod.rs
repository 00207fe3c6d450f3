//! Publication corpus: papers, authors and venues with dense integer ids.
//!
//! A [`Corpus`] is built once through [`CorpusBuilder`] (directly, or via the
//! DBLP and normalized-format readers) and is immutable afterwards. Ids are
//! assigned in order of first appearance among the *retained* records, so the
//! same input stream always yields the same ids.

mod dblp;
mod names;
mod normalized;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dblp::{ingest_dblp, ingest_dblp_path};
pub use names::{match_names, name_similarity, normalize_name, MatchKind, NameIndex, NameMatch};
pub use normalized::{export_normalized, ingest_normalized};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("merge map: alias {alias:?} mapped to both {first:?} and {second:?}")]
    ConflictingAlias {
        alias: String,
        first: String,
        second: String,
    },
    #[error("merge map: canonical name {canonical:?} (target of {alias:?}) is itself an alias")]
    ChainedAlias { alias: String, canonical: String },
    #[error("cannot export field {0:?}: contains a tab, newline or '|'")]
    UnexportableField(String),
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Dense id of a retained paper.
    PaperId
);
id_type!(
    /// Dense id of an author (one per exact DBLP name string).
    AuthorId
);
id_type!(
    /// Dense id of a venue after merging.
    VenueId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VenueKind {
    Conference,
    Journal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paper {
    pub venue: VenueId,
    pub year: i32,
    /// Ordered author list; never empty, no duplicates.
    pub authors: Vec<AuthorId>,
    /// `None` when the page field was missing or unparseable.
    pub pages: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Author {
    pub id: AuthorId,
    pub name: String,
    pub aliases: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Venue {
    pub id: VenueId,
    pub name: String,
    /// Always contains `name`.
    pub merged_names: BTreeSet<String>,
    pub kind: VenueKind,
}

/// Record filters applied during ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub year_min: i32,
    pub year_max: i32,
    pub min_pages: u32,
    pub max_pages: u32,
    /// Keep `incollection` records (edited-volume chapters) as journal-like papers.
    pub keep_incollection: bool,
    /// Drop informal publications (`publtype="informal"`, CoRR) as preprints.
    pub drop_preprints: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            year_min: 1970,
            year_max: 2019,
            min_pages: 6,
            max_pages: 100,
            keep_incollection: false,
            drop_preprints: true,
        }
    }
}

/// Counts of kept and dropped records, by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records_seen: u64,
    pub kept: u64,
    pub kept_unknown_pages: u64,
    pub dropped_kind: BTreeMap<String, u64>,
    pub dropped_preprint: u64,
    pub dropped_no_venue: u64,
    pub dropped_no_year: u64,
    pub dropped_year_range: u64,
    pub dropped_no_authors: u64,
    pub dropped_pages_below: u64,
    pub dropped_pages_above: u64,
    pub skipped_unknown_kind: BTreeMap<String, u64>,
}

impl IngestStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// Page count from a DBLP-style page field.
///
/// Only `a-b` ranges of plain decimal numbers are understood, optionally with
/// an article prefix (`12:1-12:25`). Single pages, roman numerals and lists
/// yield `None`.
pub fn parse_page_count(field: &str) -> Option<u32> {
    let (first, last) = field.trim().split_once('-')?;
    let number = |s: &str| -> Option<u32> {
        let s = s.trim();
        let s = s.rsplit(':').next()?;
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse().ok()
    };
    let (first, last) = (number(first)?, number(last)?);
    if last < first {
        return None;
    }
    Some(last - first + 1)
}

/// Immutable in-memory publication corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<Paper>,
    authors: Vec<Author>,
    venues: Vec<Venue>,
    year_range: (i32, i32),
    author_index: HashMap<String, AuthorId>,
    venue_index: HashMap<String, VenueId>,
    author_papers: Vec<Vec<PaperId>>,
}

impl Corpus {
    fn assemble(papers: Vec<Paper>, authors: Vec<Author>, venues: Vec<Venue>, year_range: (i32, i32)) -> Self {
        let author_index = authors.iter().map(|a| (a.name.clone(), a.id)).collect();
        let venue_index = venues
            .iter()
            .flat_map(|v| v.merged_names.iter().map(move |n| (n.clone(), v.id)))
            .collect();
        let mut author_papers = vec![Vec::new(); authors.len()];
        for (pid, paper) in papers.iter().enumerate() {
            for a in &paper.authors {
                author_papers[a.index()].push(PaperId(pid as u32));
            }
        }
        Self {
            papers,
            authors,
            venues,
            year_range,
            author_index,
            venue_index,
            author_papers,
        }
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn paper(&self, id: PaperId) -> &Paper {
        &self.papers[id.index()]
    }

    pub fn authors(&self) -> &[Author] {
        &self.authors
    }

    pub fn author(&self, id: AuthorId) -> &Author {
        &self.authors[id.index()]
    }

    pub fn venues(&self) -> &[Venue] {
        &self.venues
    }

    pub fn venue(&self, id: VenueId) -> &Venue {
        &self.venues[id.index()]
    }

    pub fn num_papers(&self) -> usize {
        self.papers.len()
    }

    pub fn num_authors(&self) -> usize {
        self.authors.len()
    }

    pub fn num_venues(&self) -> usize {
        self.venues.len()
    }

    /// Inclusive year range the corpus was filtered to.
    pub fn year_range(&self) -> (i32, i32) {
        self.year_range
    }

    /// Inclusive range of years actually present, if any papers exist.
    pub fn observed_years(&self) -> Option<(i32, i32)> {
        let min = self.papers.iter().map(|p| p.year).min()?;
        let max = self.papers.iter().map(|p| p.year).max()?;
        Some((min, max))
    }

    pub fn author_by_name(&self, name: &str) -> Option<AuthorId> {
        self.author_index.get(name).copied()
    }

    /// Venue holding `name` among its merged names.
    pub fn venue_by_name(&self, name: &str) -> Option<VenueId> {
        self.venue_index.get(name).copied()
    }

    /// Papers of an author, in paper-id order.
    pub fn papers_of(&self, author: AuthorId) -> &[PaperId] {
        &self.author_papers[author.index()]
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Total number of (paper, author) incidences.
    pub fn incidence_count(&self) -> usize {
        self.papers.iter().map(|p| p.authors.len()).sum()
    }

    /// Number of papers per (venue, year), keyed by venue then year.
    pub fn venue_year_sizes(&self) -> HashMap<(VenueId, i32), u32> {
        let mut sizes = HashMap::new();
        for p in &self.papers {
            *sizes.entry((p.venue, p.year)).or_insert(0) += 1;
        }
        sizes
    }
}

/// A record before filtering.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub venue: Option<String>,
    pub kind: VenueKind,
    pub year: Option<i32>,
    pub pages: Option<u32>,
    pub authors: Vec<String>,
}

/// Incremental corpus construction with filtering and id assignment.
#[derive(Debug)]
pub struct CorpusBuilder {
    filter: FilterConfig,
    papers: Vec<Paper>,
    authors: Vec<Author>,
    venues: Vec<Venue>,
    author_index: HashMap<String, AuthorId>,
    venue_index: HashMap<String, VenueId>,
    aliases: Vec<(String, Vec<String>)>,
    stats: IngestStats,
}

impl CorpusBuilder {
    pub fn new(filter: FilterConfig) -> Self {
        Self {
            filter,
            papers: Vec::new(),
            authors: Vec::new(),
            venues: Vec::new(),
            author_index: HashMap::new(),
            venue_index: HashMap::new(),
            aliases: Vec::new(),
            stats: IngestStats::default(),
        }
    }

    pub fn filter(&self) -> &FilterConfig {
        &self.filter
    }

    pub fn stats_mut(&mut self) -> &mut IngestStats {
        &mut self.stats
    }

    /// Applies the filters to one record; returns the new paper id if kept.
    pub fn push(&mut self, record: RawRecord) -> Option<PaperId> {
        self.stats.records_seen += 1;
        let Some(venue) = record.venue.filter(|v| !v.trim().is_empty()) else {
            self.stats.dropped_no_venue += 1;
            return None;
        };
        let Some(year) = record.year else {
            self.stats.dropped_no_year += 1;
            return None;
        };
        if year < self.filter.year_min || year > self.filter.year_max {
            self.stats.dropped_year_range += 1;
            return None;
        }
        let mut names: Vec<String> = Vec::with_capacity(record.authors.len());
        for a in record.authors {
            let a = a.trim();
            if !a.is_empty() && !names.iter().any(|n| n == a) {
                names.push(a.to_string());
            }
        }
        if names.is_empty() {
            self.stats.dropped_no_authors += 1;
            return None;
        }
        match record.pages {
            Some(p) if p < self.filter.min_pages => {
                self.stats.dropped_pages_below += 1;
                return None;
            }
            Some(p) if p > self.filter.max_pages => {
                self.stats.dropped_pages_above += 1;
                return None;
            }
            Some(_) => {}
            None => self.stats.kept_unknown_pages += 1,
        }
        self.stats.kept += 1;

        let venue_id = self.intern_venue(venue.trim(), record.kind);
        let authors = names.into_iter().map(|n| self.intern_author(n)).collect();
        let id = PaperId(self.papers.len() as u32);
        self.papers.push(Paper {
            venue: venue_id,
            year,
            authors,
            pages: record.pages,
        });
        Some(id)
    }

    /// Registers alternative names for `canonical`; applied in [`finish`](Self::finish)
    /// if `canonical` ends up as a corpus author.
    pub fn add_aliases(&mut self, canonical: String, aliases: Vec<String>) {
        self.aliases.push((canonical, aliases));
    }

    fn intern_venue(&mut self, name: &str, kind: VenueKind) -> VenueId {
        if let Some(&id) = self.venue_index.get(name) {
            return id;
        }
        let id = VenueId(self.venues.len() as u32);
        self.venues.push(Venue {
            id,
            name: name.to_string(),
            merged_names: BTreeSet::from([name.to_string()]),
            kind,
        });
        self.venue_index.insert(name.to_string(), id);
        id
    }

    fn intern_author(&mut self, name: String) -> AuthorId {
        if let Some(&id) = self.author_index.get(&name) {
            return id;
        }
        let id = AuthorId(self.authors.len() as u32);
        self.author_index.insert(name.clone(), id);
        self.authors.push(Author {
            id,
            name,
            aliases: BTreeSet::new(),
        });
        id
    }

    pub fn finish(mut self) -> (Corpus, IngestStats) {
        for (canonical, aliases) in std::mem::take(&mut self.aliases) {
            let Some(&id) = self.author_index.get(&canonical) else {
                continue;
            };
            for alias in aliases {
                if alias != canonical && !self.author_index.contains_key(&alias) {
                    self.authors[id.index()].aliases.insert(alias);
                }
            }
        }
        let range = (self.filter.year_min, self.filter.year_max);
        let corpus = Corpus::assemble(self.papers, self.authors, self.venues, range);
        (corpus, self.stats)
    }
}

/// Validated alias → canonical venue name map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeMap {
    map: BTreeMap<String, String>,
}

impl MergeMap {
    pub fn from_pairs<I, A, C>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (A, C)>,
        A: Into<String>,
        C: Into<String>,
    {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (alias, canonical) in pairs {
            let (alias, canonical) = (alias.into(), canonical.into());
            if alias == canonical {
                continue;
            }
            if let Some(prev) = map.get(&alias) {
                if *prev != canonical {
                    return Err(CorpusError::ConflictingAlias {
                        alias,
                        first: prev.clone(),
                        second: canonical,
                    });
                }
                continue;
            }
            map.insert(alias, canonical);
        }
        for (alias, canonical) in &map {
            if map.contains_key(canonical) {
                return Err(CorpusError::ChainedAlias {
                    alias: alias.clone(),
                    canonical: canonical.clone(),
                });
            }
        }
        Ok(Self { map })
    }

    /// Reads `alias<TAB>canonical` lines; blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let Some((alias, canonical)) = trimmed.split_once('\t') else {
                return Err(CorpusError::Line {
                    line: i + 1,
                    message: "expected alias<TAB>canonical".into(),
                });
            };
            pairs.push((alias.trim().to_string(), canonical.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn canonical<'a>(&'a self, name: &'a str) -> &'a str {
        self.map.get(name).map(String::as_str).unwrap_or(name)
    }
}

/// Collapses venues according to `merge_map`, re-pointing papers to the merged ids.
///
/// New venue ids follow the first appearance of each canonical name in the
/// old venue order.
pub fn merge_venues(corpus: &Corpus, merge_map: &MergeMap) -> Corpus {
    if merge_map.is_empty() {
        return corpus.clone();
    }
    let mut venues: Vec<Venue> = Vec::new();
    let mut by_name: HashMap<String, VenueId> = HashMap::new();
    let mut remap = Vec::with_capacity(corpus.venues.len());
    for venue in &corpus.venues {
        let target = merge_map.canonical(&venue.name).to_string();
        let id = *by_name.entry(target.clone()).or_insert_with(|| {
            let id = VenueId(venues.len() as u32);
            venues.push(Venue {
                id,
                name: target.clone(),
                merged_names: BTreeSet::from([target.clone()]),
                kind: venue.kind,
            });
            id
        });
        venues[id.index()]
            .merged_names
            .extend(venue.merged_names.iter().cloned());
        remap.push(id);
    }
    let papers = corpus
        .papers
        .iter()
        .map(|p| Paper {
            venue: remap[p.venue.index()],
            ..p.clone()
        })
        .collect();
    Corpus::assemble(papers, corpus.authors.clone(), venues, corpus.year_range)
}
