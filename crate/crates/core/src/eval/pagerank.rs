//! PageRank over undirected co-authorship graphs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, ScoreTable};
use crate::corpus::Corpus;

/// Symmetric weighted adjacency lists without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    /// Sorted by neighbour id.
    neighbours: Vec<Vec<(u32, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from undirected edges; repeated edges add their
    /// weights and self-loops are dropped.
    pub fn from_edges(nodes: usize, edges: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut directed: Vec<(u32, u32, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a != b {
                directed.push((a, b, w));
                directed.push((b, a, w));
            }
        }
        directed.sort_by_key(|x| (x.0, x.1));
        let mut neighbours = vec![Vec::new(); nodes];
        for (a, b, w) in directed {
            let list: &mut Vec<(u32, f64)> = &mut neighbours[a as usize];
            match list.last_mut() {
                Some((last, acc)) if *last == b => *acc += w,
                _ => list.push((b, w)),
            }
        }
        Self { neighbours }
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbours.is_empty()
    }

    pub fn neighbours(&self, node: usize) -> &[(u32, f64)] {
        &self.neighbours[node]
    }

    /// Same graph with every edge weight set to 1.
    pub fn binarized(&self) -> Self {
        Self {
            neighbours: self
                .neighbours
                .iter()
                .map(|l| l.iter().map(|&(b, _)| (b, 1.0)).collect())
                .collect(),
        }
    }
}

/// Edge weight = number of papers two authors share.
pub fn coauthor_graph(corpus: &Corpus) -> WeightedGraph {
    let edges = corpus.papers().iter().flat_map(|p| {
        let a = &p.authors;
        (0..a.len()).flat_map(move |i| (i + 1..a.len()).map(move |j| (a[i].0, a[j].0, 1.0)))
    });
    WeightedGraph::from_edges(corpus.num_authors(), edges)
}

/// Edge weight = number of authors who published in both venues.
pub fn venue_overlap_graph(corpus: &Corpus) -> WeightedGraph {
    let mut edges = Vec::new();
    for author in corpus.authors() {
        let mut venues: Vec<u32> = corpus
            .papers_of(author.id)
            .iter()
            .map(|&p| corpus.paper(p).venue.0)
            .collect();
        venues.sort_unstable();
        venues.dedup();
        for i in 0..venues.len() {
            for j in i + 1..venues.len() {
                edges.push((venues[i], venues[j], 1.0));
            }
        }
    }
    WeightedGraph::from_edges(corpus.num_venues(), edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PagerankConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterates falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Treat every edge as weight 1.
    pub binarize: bool,
}

impl Default for PagerankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 1000,
            binarize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PagerankResult {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Power iteration. Nodes without edges spread their mass uniformly.
pub fn pagerank(graph: &WeightedGraph, config: &PagerankConfig) -> Result<PagerankResult, EvalError> {
    let d = config.damping;
    if !(d > 0.0 && d < 1.0) {
        return Err(EvalError::Config(format!("damping must be in (0,1), got {d}")));
    }
    let n = graph.len();
    if n == 0 {
        return Err(EvalError::Config("graph has no nodes".into()));
    }
    let binarized;
    let graph = if config.binarize {
        binarized = graph.binarized();
        &binarized
    } else {
        graph
    };
    let strength: Vec<f64> = graph
        .neighbours
        .iter()
        .map(|l| l.iter().map(|(_, w)| w).sum())
        .collect();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut residual = f64::INFINITY;
    for iteration in 1..=config.max_iter {
        let dangling: f64 = x.iter().zip(&strength).filter(|(_, &s)| s == 0.0).map(|(v, _)| v).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        let mut next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let inflow: f64 = graph.neighbours[j]
                    .iter()
                    .map(|&(i, w)| x[i as usize] * w / strength[i as usize])
                    .sum();
                base + d * inflow
            })
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if residual < config.tol {
            return Ok(PagerankResult {
                scores: x,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(EvalError::NotConverged {
        iterations: config.max_iter,
        residual,
    })
}

pub fn pagerank_authors(corpus: &Corpus, config: &PagerankConfig) -> Result<ScoreTable, EvalError> {
    let r = pagerank(&coauthor_graph(corpus), config)?;
    let entries = corpus.authors().iter().map(|a| a.name.clone()).zip(r.scores).collect();
    Ok(ScoreTable::from_unique("pagerank:authors".into(), entries))
}

pub fn pagerank_venues(corpus: &Corpus, config: &PagerankConfig) -> Result<ScoreTable, EvalError> {
    let r = pagerank(&venue_overlap_graph(corpus), config)?;
    let entries = corpus.venues().iter().map(|v| v.name.clone()).zip(r.scores).collect();
    Ok(ScoreTable::from_unique("pagerank:venues".into(), entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusBuilder, FilterConfig, RawRecord, VenueKind};

    fn corpus(papers: &[(&str, &[&str])]) -> Corpus {
        let mut b = CorpusBuilder::new(FilterConfig::default());
        for (venue, authors) in papers {
            b.push(RawRecord {
                venue: Some(venue.to_string()),
                kind: VenueKind::Conference,
                year: Some(2000),
                pages: None,
                authors: authors.iter().map(|s| s.to_string()).collect(),
            });
        }
        b.finish().0
    }

    fn tight() -> PagerankConfig {
        PagerankConfig {
            tol: 1e-14,
            ..Default::default()
        }
    }

    #[test]
    fn two_authors_split_evenly() {
        let c = corpus(&[("V", &["A", "B"])]);
        let t = pagerank_authors(&c, &PagerankConfig::default()).unwrap();
        assert_eq!(t.get("A"), Some(0.5));
        assert_eq!(t.get("B"), Some(0.5));
    }

    #[test]
    fn isolated_author_gets_teleport_and_dangling_mass() {
        let c = corpus(&[("V", &["A", "B"]), ("V", &["C"])]);
        let r = pagerank(&coauthor_graph(&c), &tight()).unwrap();
        // By symmetry x_A = x_B = (1 - x_C) / 2, and
        // x_C = (1-d)/3 + d·x_C/3, so x_C = (1-d) / (3 - d).
        let d = 0.85;
        let want = (1.0 - d) / (3.0 - d);
        assert!((r.scores[2] - want).abs() < 1e-12);
        assert!((r.scores[0] - (1.0 - want) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn venue_graph_counts_shared_authors() {
        let c = corpus(&[("V", &["A", "B"]), ("W", &["A", "B"]), ("X", &["A"])]);
        let g = venue_overlap_graph(&c);
        assert_eq!(g.neighbours(0), &[(1, 2.0), (2, 1.0)]);
        let t = pagerank_venues(&c, &tight()).unwrap();
        assert!(t.get("V").unwrap() > t.get("X").unwrap());
    }

    #[test]
    fn star_hub_is_highest() {
        let papers: Vec<(String, Vec<String>)> = (0..5)
            .flat_map(|i| {
                let a = format!("Author {i}");
                [("Hub".to_string(), vec![a.clone()]), (format!("Leaf {i}"), vec![a])]
            })
            .collect();
        let refs: Vec<(&str, Vec<&str>)> = papers
            .iter()
            .map(|(v, a)| (v.as_str(), a.iter().map(String::as_str).collect()))
            .collect();
        let refs: Vec<(&str, &[&str])> = refs.iter().map(|(v, a)| (*v, a.as_slice())).collect();
        let c = corpus(&refs);
        let t = pagerank_venues(&c, &tight()).unwrap();
        let hub = t.get("Hub").unwrap();
        for i in 0..5 {
            assert!(hub > t.get(&format!("Leaf {i}")).unwrap());
        }
    }

    #[test]
    fn scale_invariance_and_binarize() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 3.0), (2, 3, 1.0), (0, 2, 2.0)]);
        let g10 = WeightedGraph::from_edges(4, [(0, 1, 10.0), (1, 2, 30.0), (2, 3, 10.0), (0, 2, 20.0)]);
        let a = pagerank(&g, &tight()).unwrap().scores;
        let b = pagerank(&g10, &tight()).unwrap().scores;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
        let bin = PagerankConfig {
            binarize: true,
            ..tight()
        };
        let ones = WeightedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 2, 1.0)]);
        assert_eq!(
            pagerank(&g, &bin).unwrap().scores,
            pagerank(&ones, &tight()).unwrap().scores
        );
    }

    #[test]
    fn non_convergence_reports_residual() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 5.0)]);
        let cfg = PagerankConfig {
            max_iter: 2,
            tol: 0.0,
            ..Default::default()
        };
        match pagerank(&g, &cfg) {
            Err(EvalError::NotConverged {
                iterations: 2,
                residual,
            }) => assert!(residual > 0.0),
            other => panic!("{other:?}"),
        }
        assert!(pagerank(
            &g,
            &PagerankConfig {
                damping: 1.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
