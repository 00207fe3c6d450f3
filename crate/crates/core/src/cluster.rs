//! Venue topic vectors (LDA over the venue × author count matrix), k-means
//! with silhouette model selection, and topic fingerprints of author sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AuthorId, Corpus, VenueId};
use crate::targets::Roster;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("no venue has faculty from at least {min_universities} universities since {since_year}; lower min_universities or since_year")]
    NoVenues { since_year: i32, min_universities: usize },
    #[error("{0}")]
    Config(String),
    #[error("k = {k} must be smaller than the number of points ({points})")]
    TooManyClusters { k: usize, points: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Sparse venue × author paper counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VenueAuthorCounts {
    pub venues: Vec<VenueId>,
    /// Column order.
    pub authors: Vec<AuthorId>,
    /// Per venue: (author column, paper count), sorted by column.
    pub rows: Vec<Vec<(u32, u32)>>,
    pub since_year: i32,
    pub min_universities: usize,
}

/// Keeps venues where faculty from at least `min_universities` distinct
/// universities published since `since_year`, and counts every author's
/// papers there over the same period.
pub fn build_count_matrix(
    corpus: &Corpus,
    since_year: i32,
    min_universities: usize,
    roster: &Roster,
) -> Result<VenueAuthorCounts, ClusterError> {
    let university = roster.university_of();
    let mut unis: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); corpus.num_venues()];
    for p in corpus.papers().iter().filter(|p| p.year >= since_year) {
        for a in &p.authors {
            if let Some(u) = university.get(a) {
                unis[p.venue.index()].insert(u);
            }
        }
    }
    let venues: Vec<VenueId> = (0..corpus.num_venues() as u32)
        .map(VenueId)
        .filter(|v| unis[v.index()].len() >= min_universities.max(1))
        .collect();
    if venues.is_empty() {
        return Err(ClusterError::NoVenues {
            since_year,
            min_universities,
        });
    }
    let row_of: HashMap<VenueId, usize> = venues.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut counts: Vec<BTreeMap<AuthorId, u32>> = vec![BTreeMap::new(); venues.len()];
    for p in corpus.papers().iter().filter(|p| p.year >= since_year) {
        if let Some(&r) = row_of.get(&p.venue) {
            for &a in &p.authors {
                *counts[r].entry(a).or_insert(0) += 1;
            }
        }
    }
    let authors: Vec<AuthorId> = counts
        .iter()
        .flat_map(|m| m.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let col_of: HashMap<AuthorId, u32> = authors.iter().enumerate().map(|(i, a)| (*a, i as u32)).collect();
    let rows = counts
        .into_iter()
        .map(|m| m.into_iter().map(|(a, c)| (col_of[&a], c)).collect())
        .collect();
    Ok(VenueAuthorCounts {
        venues,
        authors,
        rows,
        since_year,
        min_universities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub topics: usize,
    /// Document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 50,
            alpha: None,
            beta: 0.01,
            iterations: 500,
        }
    }
}

/// One simplex vector per venue of the count matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicVectors {
    pub venues: Vec<VenueId>,
    pub vectors: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl TopicVectors {
    pub fn dims(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn get(&self, venue: VenueId) -> Option<&[f64]> {
        self.venues
            .iter()
            .position(|v| *v == venue)
            .map(|i| self.vectors[i].as_slice())
    }
}

fn to_simplex(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Collapsed Gibbs sampling with venues as documents and authors as words.
pub fn lda_fit(counts: &VenueAuthorCounts, config: &LdaConfig, seed: u64) -> Result<TopicVectors, ClusterError> {
    let d = config.topics;
    if d < 2 {
        return Err(ClusterError::Config(format!("need at least 2 topics, got {d}")));
    }
    let alpha = config.alpha.unwrap_or(50.0 / d as f64);
    if !(alpha > 0.0) || !(config.beta > 0.0) {
        return Err(ClusterError::Config("LDA priors must be positive".into()));
    }
    if counts.rows.is_empty() {
        return Err(ClusterError::Config("count matrix has no venues".into()));
    }
    let vocab = counts.authors.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Tokens per document, with random initial topics.
    let docs: Vec<Vec<u32>> = counts
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
                .collect()
        })
        .collect();
    let mut z: Vec<Vec<u16>> = docs
        .iter()
        .map(|doc| doc.iter().map(|_| rng.random_range(0..d) as u16).collect())
        .collect();
    let mut n_dk = vec![vec![0u32; d]; docs.len()];
    let mut n_wk = vec![0u32; vocab * d];
    let mut n_k = vec![0u32; d];
    for (di, doc) in docs.iter().enumerate() {
        for (&w, &k) in doc.iter().zip(&z[di]) {
            n_dk[di][k as usize] += 1;
            n_wk[w as usize * d + k as usize] += 1;
            n_k[k as usize] += 1;
        }
    }

    let vbeta = vocab as f64 * config.beta;
    let mut p = vec![0.0; d];
    for _ in 0..config.iterations {
        for (di, doc) in docs.iter().enumerate() {
            for (ti, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = z[di][ti] as usize;
                n_dk[di][old] -= 1;
                n_wk[w * d + old] -= 1;
                n_k[old] -= 1;
                let mut total = 0.0;
                for k in 0..d {
                    total += (f64::from(n_dk[di][k]) + alpha) * (f64::from(n_wk[w * d + k]) + config.beta)
                        / (f64::from(n_k[k]) + vbeta);
                    p[k] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = p.iter().position(|&c| u < c).unwrap_or(d - 1);
                z[di][ti] = new as u16;
                n_dk[di][new] += 1;
                n_wk[w * d + new] += 1;
                n_k[new] += 1;
            }
        }
    }

    let mut warnings = Vec::new();
    let vectors = docs
        .iter()
        .enumerate()
        .map(|(di, doc)| {
            let mut v = if doc.is_empty() {
                warnings.push(format!(
                    "venue {} has no papers; uniform topic vector",
                    counts.venues[di]
                ));
                vec![1.0; d]
            } else {
                n_dk[di].iter().map(|&c| f64::from(c) + alpha).collect()
            };
            to_simplex(&mut v);
            v
        })
        .collect();
    Ok(TopicVectors {
        venues: counts.venues.clone(),
        vectors,
        warnings,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the winning restart.
    pub inertia_history: Vec<f64>,
    pub silhouette: f64,
}

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    u < acc
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[next].clone());
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let best: Vec<(usize, f64)> = points
        .par_iter()
        .map(|p| {
            centroids
                .iter()
                .enumerate()
                .map(|(c, m)| (c, sq_dist(p, m)))
                .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
        })
        .collect();
    let inertia = best.iter().map(|b| b.1).sum();
    (best.into_iter().map(|b| b.0).collect(), inertia)
}

/// Assignments, centroids and inertia after each iteration.
type LloydRun = (Vec<usize>, Vec<Vec<f64>>, Vec<f64>);

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> LloydRun {
    let dim = points[0].len();
    let k = centroids.len();
    let (mut labels, inertia) = assign(points, &centroids);
    let mut history = vec![inertia];
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sizes[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        // An empty cluster takes over the point farthest from its centroid.
        for c in 0..k {
            if sizes[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centroids[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centroids[labels[b]]))
                    })
                    .expect("points are non-empty");
                centroids[c] = points[far].clone();
                sizes[labels[far]] -= 1;
                labels[far] = c;
                sizes[c] = 1;
            }
        }
        let (next, inertia) = assign(points, &centroids);
        let changed = next != labels;
        labels = next;
        history.push(inertia);
        if !changed {
            break;
        }
    }
    (labels, centroids, history)
}

/// Best of `restarts` runs of k-means++-seeded Lloyd iterations, by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<Clustering, ClusterError> {
    if k < 2 {
        return Err(ClusterError::Config(format!("k must be >= 2, got {k}")));
    }
    if k >= points.len() {
        return Err(ClusterError::TooManyClusters {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].len();
    if points
        .iter()
        .any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite()))
    {
        return Err(ClusterError::Config(
            "points must be finite and of equal dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<LloydRun> = None;
    for _ in 0..restarts.max(1) {
        let init = kmeans_pp_init(points, k, &mut rng);
        let run = lloyd(points, init, 300);
        if best.as_ref().is_none_or(|b| run.2.last() < b.2.last()) {
            best = Some(run);
        }
    }
    let (assignments, centroids, inertia_history) = best.expect("at least one restart");
    let silhouette = silhouette(points, &assignments);
    Ok(Clustering {
        k,
        inertia: *inertia_history.last().expect("history is non-empty"),
        assignments,
        centroids,
        inertia_history,
        silhouette,
    })
}

/// Mean silhouette with Euclidean distance; points alone in their cluster
/// score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let per_point: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j]] += sq_dist(&points[i], p).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    per_point.iter().sum::<f64>() / points.len().max(1) as f64
}

/// Mean silhouette of the best clustering for each `k`.
pub fn silhouette_sweep(
    points: &[Vec<f64>],
    ks: impl IntoIterator<Item = usize>,
    restarts: usize,
    seed: u64,
) -> Result<BTreeMap<usize, f64>, ClusterError> {
    let ks: Vec<usize> = ks.into_iter().collect();
    ks.par_iter()
        .map(|&k| Ok((k, kmeans(points, k, restarts, seed.wrapping_add(k as u64))?.silhouette)))
        .collect()
}

/// Paper-weighted mean of the topic vectors of the venues the authors
/// published in (each paper counted once), renormalized to the simplex.
/// Returns `None` when no paper falls in a venue with a topic vector.
pub fn fingerprint(
    corpus: &Corpus,
    topics: &TopicVectors,
    authors: &[AuthorId],
    since_year: Option<i32>,
) -> Option<Vec<f64>> {
    let index: HashMap<VenueId, usize> = topics.venues.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let papers: BTreeSet<_> = authors
        .iter()
        .flat_map(|&a| corpus.papers_of(a).iter().copied())
        .collect();
    let mut acc = vec![0.0; topics.dims()];
    let mut any = false;
    for pid in papers {
        let p = corpus.paper(pid);
        if since_year.is_some_and(|y| p.year < y) {
            continue;
        }
        if let Some(&i) = index.get(&p.venue) {
            any = true;
            for (a, x) in acc.iter_mut().zip(&topics.vectors[i]) {
                *a += x;
            }
        }
    }
    any.then(|| {
        to_simplex(&mut acc);
        acc
    })
}

/// `name` followed by the vector's entries, tab-separated.
pub fn write_vectors<W: Write>(mut out: W, rows: &[(String, Vec<f64>)]) -> std::io::Result<()> {
    for (name, v) in rows {
        write!(out, "{name}")?;
        for x in v {
            write!(out, "\t{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `name,cluster_id` rows.
pub fn write_labels<W: Write>(out: W, rows: &[(String, usize)]) -> Result<(), ClusterError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "cluster_id"])?;
    for (name, c) in rows {
        w.write_record([name.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
