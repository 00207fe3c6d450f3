//! Aligning external person names with corpus authors.
//!
//! Names are compared after normalization: case-folded, punctuation replaced
//! by spaces, whitespace collapsed, and four-digit DBLP disambiguation tokens
//! (`0001`) removed. Similarity is the normalized Levenshtein ratio of the
//! normalized strings.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{AuthorId, Corpus};

pub fn normalize_name(name: &str) -> String {
    let folded: String = name
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    folded
        .split_whitespace()
        .filter(|tok| !(tok.len() == 4 && tok.bytes().all(|b| b.is_ascii_digit())))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn name_similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&normalize_name(a), &normalize_name(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    /// Exact canonical name or alias.
    Exact,
    /// Equal after normalization.
    Normalized,
    Fuzzy,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NameMatch {
    pub query: String,
    pub author: Option<AuthorId>,
    /// Best similarity found. For unmatched names this is the best among the
    /// candidates inside the length window, so it may understate the global best.
    pub similarity: f64,
    pub kind: MatchKind,
}

/// Lookup structure over all author names and aliases of a corpus.
pub struct NameIndex<'c> {
    corpus: &'c Corpus,
    aliases: HashMap<&'c str, AuthorId>,
    normalized: HashMap<String, AuthorId>,
    /// (char length, normalized key, author), sorted by length.
    by_length: Vec<(usize, String, AuthorId)>,
}

impl<'c> NameIndex<'c> {
    pub fn new(corpus: &'c Corpus) -> Self {
        let mut aliases = HashMap::new();
        let mut normalized: HashMap<String, AuthorId> = HashMap::new();
        let mut by_length = Vec::with_capacity(corpus.num_authors());
        // Colliding normalized keys resolve to the author with most papers,
        // then the lower id.
        let better = |a: AuthorId, b: AuthorId| -> AuthorId {
            let (pa, pb) = (corpus.papers_of(a).len(), corpus.papers_of(b).len());
            if pb > pa || (pb == pa && b < a) {
                b
            } else {
                a
            }
        };
        for author in corpus.authors() {
            for alias in &author.aliases {
                aliases.entry(alias.as_str()).or_insert(author.id);
            }
            let key = normalize_name(&author.name);
            if key.is_empty() {
                continue;
            }
            normalized
                .entry(key.clone())
                .and_modify(|cur| *cur = better(*cur, author.id))
                .or_insert(author.id);
            by_length.push((key.chars().count(), key, author.id));
        }
        by_length.sort();
        Self {
            corpus,
            aliases,
            normalized,
            by_length,
        }
    }

    pub fn lookup(&self, query: &str, threshold: f64) -> NameMatch {
        let found = |author, similarity, kind| NameMatch {
            query: query.to_string(),
            author: Some(author),
            similarity,
            kind,
        };
        if let Some(id) = self.corpus.author_by_name(query) {
            return found(id, 1.0, MatchKind::Exact);
        }
        if let Some(&id) = self.aliases.get(query) {
            return found(id, 1.0, MatchKind::Exact);
        }
        let key = normalize_name(query);
        if let Some(&id) = self.normalized.get(&key) {
            return found(id, 1.0, MatchKind::Normalized);
        }
        let unmatched = |similarity| NameMatch {
            query: query.to_string(),
            author: None,
            similarity,
            kind: MatchKind::Unmatched,
        };
        if key.is_empty() {
            return unmatched(0.0);
        }

        // similarity >= t requires |len_a - len_b| <= (1 - t) * max(len_a, len_b).
        let len = key.chars().count();
        let slack = 1.0 - threshold.clamp(0.0, 1.0);
        let lo = ((len as f64) * (1.0 - slack)).floor() as usize;
        let hi = if slack >= 1.0 {
            usize::MAX
        } else {
            ((len as f64) / (1.0 - slack)).ceil() as usize
        };
        let start = self.by_length.partition_point(|(l, _, _)| *l < lo);
        let mut best: Option<(f64, AuthorId)> = None;
        for (l, cand, id) in &self.by_length[start..] {
            if *l > hi {
                break;
            }
            let sim = strsim::normalized_levenshtein(&key, cand);
            let replace = match best {
                None => true,
                Some((bs, bid)) => {
                    sim > bs
                        || (sim == bs && {
                            let (pc, pb) = (self.corpus.papers_of(*id).len(), self.corpus.papers_of(bid).len());
                            pc > pb || (pc == pb && *id < bid)
                        })
                }
            };
            if replace {
                best = Some((sim, *id));
            }
        }
        match best {
            Some((sim, id)) if sim >= threshold => found(id, sim, MatchKind::Fuzzy),
            Some((sim, _)) => unmatched(sim),
            None => unmatched(0.0),
        }
    }
}

/// Maps each external name to at most one corpus author.
///
/// Exact canonical or alias matches win over normalized matches, which win
/// over fuzzy ones; fuzzy matches below `threshold` are reported unmatched.
pub fn match_names<S: AsRef<str> + Sync>(external_names: &[S], corpus: &Corpus, threshold: f64) -> Vec<NameMatch> {
    let index = NameIndex::new(corpus);
    external_names
        .par_iter()
        .map(|n| index.lookup(n.as_ref(), threshold))
        .collect()
}
