//! Acceptance checks. Each test prints one `PASS`/`FAIL` line (uncaptured)
//! and then asserts.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use venue_scores::cluster::{lda_fit, silhouette, silhouette_sweep, LdaConfig, VenueAuthorCounts};
use venue_scores::corpus::{CorpusBuilder, FilterConfig, RawRecord, VenueKind};
use venue_scores::design::{build_design, splat_kernel, CreditModel, DesignConfig, RowSpec, TemporalScheme};
use venue_scores::eval::{kendall, pagerank, spearman, PagerankConfig, WeightedGraph};
use venue_scores::scores::{
    aging_curve, credit_split, paper_author_incidence, train, year_normalize, znorm_clip, VenueScoreModel,
    YearNormalization,
};
use venue_scores::solver::{
    normal_equation_residual, ridge_closed_form, sgd_fit, CsrMatrix, FitProblem, LearningRate, Loss, SolverConfig,
};
use venue_scores::synth::{aging_cohort, gaussian_mixture, generate, SynthConfig};
use venue_scores::targets::build_faculty_labels;
use venue_scores::{AuthorId, VenueId};

fn report(name: &str, ok: bool, detail: String) {
    let status = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "[acceptance] {status} {name}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(ok, "{name}: {detail}");
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn planted_model_recovery() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (rho, secs, papers) = pool.install(|| {
        let start = Instant::now();
        let fixture = generate(&SynthConfig::default()).unwrap();
        let labels = build_faculty_labels(
            &fixture.corpus,
            &fixture.affiliations,
            &fixture.ranking,
            fixture.config.top_k,
            0.9,
            "synthetic",
        );
        let solver = SolverConfig {
            lambda: 0.03,
            ..Default::default()
        };
        let trained = train(&fixture.corpus, &labels.target_set(), &DesignConfig::default(), &solver).unwrap();
        let learned = trained.model.venue_means(None);
        let (ours, planted): (Vec<f64>, Vec<f64>) = (0..fixture.corpus.num_venues())
            .map(|v| {
                (
                    learned.get(&VenueId(v as u32)).copied().unwrap_or(0.0),
                    fixture.venue_scores[v],
                )
            })
            .unzip();
        let rho = spearman(&ours, &planted).unwrap();
        (rho, start.elapsed().as_secs_f64(), fixture.corpus.num_papers())
    });
    report(
        "planted-model recovery",
        rho >= 0.8 && secs < 60.0,
        format!("spearman {rho:.4} (>= 0.8), {secs:.1}s single-threaded (< 60s), {papers} papers"),
    );
}

fn random_dense(m: usize, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let mut row: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            row.push(1.0);
            row
        })
        .collect();
    let b = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    (a, b)
}

#[test]
fn solver_oracle_equivalence() {
    let (a, b) = random_dense(50, 20, 11);
    let lambda = 0.1;
    let exact = ridge_closed_form(&a, &b, lambda, Some(19)).unwrap();
    let residual = normal_equation_residual(&a, &b, lambda, Some(19), &exact).unwrap();
    let m = CsrMatrix::from_dense(&a);
    let problem = FitProblem {
        matrix: &m,
        targets: &b,
        weights: None,
        bias_col: Some(19),
    };
    let config = SolverConfig {
        lambda,
        epochs: 30_000,
        eta0: 0.002,
        schedule: LearningRate::Constant,
        tol: None,
        average: true,
        ..Default::default()
    };
    let fit = sgd_fit(&problem, Loss::Squared, &config).unwrap();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rel = max_abs_diff(&fit.weights, &exact) / scale;
    report(
        "solver-oracle equivalence",
        rel <= 1e-2 && residual <= 1e-10,
        format!(
            "max relative coefficient error {rel:.2e} (<= 1e-2), normal-equation residual {residual:.2e} (<= 1e-10)"
        ),
    );
}

#[test]
fn loss_correctness() {
    let mut worst_jump: f64 = 0.0;
    for delta in [0.1, 1.0, 3.5] {
        let huber = Loss::Huber { delta };
        for y in [-2.0, 0.0, 1.5] {
            for side in [-1.0, 1.0] {
                let at: f64 = y - side * delta;
                let (lo, hi) = (at.next_down(), at.next_up());
                worst_jump = worst_jump
                    .max((huber.value(lo, y).unwrap() - huber.value(hi, y).unwrap()).abs())
                    .max((huber.grad(lo, y).unwrap() - huber.grad(hi, y).unwrap()).abs());
            }
        }
    }
    let mh_value = [1.0, -1.0].map(|y: f64| Loss::ModifiedHuber.value(-y, y).unwrap());
    let mh_quadratic = [1.0f64, -1.0].map(|y| (1.0 - y * -y).max(0.0).powi(2));
    let mh_linear = [1.0f64, -1.0].map(|y| -4.0 * (y * -y));
    let mh_ok = mh_value == [4.0, 4.0] && mh_quadratic == [4.0, 4.0] && mh_linear == [4.0, 4.0];

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_fd: f64 = 0.0;
    let losses = [
        Loss::Squared,
        Loss::Huber { delta: 1.0 },
        Loss::ModifiedHuber,
        Loss::Logistic,
    ];
    for loss in losses {
        let mut checked = 0;
        while checked < 200 {
            let y = if loss.is_classification() {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            } else {
                rng.random_range(-3.0..3.0)
            };
            let y_hat: f64 = rng.random_range(-4.0..4.0);
            let kinks: Vec<f64> = match loss {
                Loss::Huber { delta } => vec![y - delta, y + delta],
                Loss::ModifiedHuber => vec![-y, y],
                _ => vec![],
            };
            if kinks.iter().any(|k| (y_hat - k).abs() < 1e-3) {
                continue;
            }
            let h = 1e-6;
            let fd = (loss.value(y_hat + h, y).unwrap() - loss.value(y_hat - h, y).unwrap()) / (2.0 * h);
            let g = loss.grad(y_hat, y).unwrap();
            let rel = (fd - g).abs() / g.abs().max(1e-3);
            worst_fd = worst_fd.max(if g == 0.0 && fd.abs() < 1e-9 { 0.0 } else { rel });
            checked += 1;
        }
    }
    report(
        "loss correctness",
        worst_jump <= 1e-12 && mh_ok && worst_fd <= 1e-6,
        format!(
            "huber jump at |r|=delta {worst_jump:.1e} (<= 1e-12), modified huber at y*yhat=-1 {mh_value:?} (= 4), \
             worst finite-difference rel err {worst_fd:.1e} (<= 1e-6)"
        ),
    );
}

#[test]
fn splat_kernel_and_mass_conservation() {
    let k = splat_kernel(4.5, 0.05, 1995, (1970, 2019)).unwrap();
    let support_ok = k.offsets == (-4..=4).collect::<Vec<i32>>();
    let sum_err = (k.weights.iter().sum::<f64>() - 1.0).abs();

    let mut b = CorpusBuilder::new(FilterConfig::default());
    let papers: [(&str, i32, &[&str]); 3] = [
        ("VA", 1990, &["x", "y"]),
        ("VA", 1992, &["y", "z", "x"]),
        ("VB", 1991, &["x"]),
    ];
    for (venue, year, authors) in papers {
        b.push(RawRecord {
            venue: Some(venue.into()),
            kind: VenueKind::Conference,
            year: Some(year),
            pages: None,
            authors: authors.iter().map(|s| s.to_string()).collect(),
        });
    }
    let (corpus, _) = b.finish();
    let config = DesignConfig {
        credit: CreditModel::EqualSplit,
        temporal: TemporalScheme::Splat { sigma: 4.5, clip: 0.05 },
        size_alpha: None,
    };
    let d = build_design(&corpus, &config, &RowSpec::all_authors(&corpus)).unwrap();
    let mut dense = vec![vec![0.0; d.ncols()]; corpus.num_authors()];
    let mut expected_mass = vec![0.0; corpus.num_authors()];
    for (row, author) in corpus.authors().iter().enumerate() {
        for &pid in corpus.papers_of(author.id) {
            let p = corpus.paper(pid);
            let pos = p.authors.iter().position(|a| *a == author.id).unwrap();
            let share = CreditModel::EqualSplit.weights(p.authors.len()).unwrap()[pos];
            expected_mass[row] += share;
            let kernel = splat_kernel(4.5, 0.05, p.year, corpus.year_range()).unwrap();
            for (off, w) in kernel.offsets.iter().zip(&kernel.weights) {
                let col = d
                    .columns
                    .column(p.venue, (p.year + off - corpus.year_range().0) as u32)
                    .unwrap();
                dense[row][col] += share * w;
            }
        }
        dense[row][d.bias_col] = 1.0;
    }
    let matches = d.matrix.to_dense() == dense;
    let mass_err = (0..corpus.num_authors())
        .map(|r| (dense[r][..d.bias_col].iter().sum::<f64>() - expected_mass[r]).abs())
        .fold(0.0, f64::max);
    report(
        "splat kernel",
        support_ok && sum_err <= 1e-12 && matches && mass_err <= 1e-12,
        format!(
            "support {:?} (= -4..4), |sum-1| {sum_err:.1e} (<= 1e-12), design == hand-built dense: {matches}, \
             row mass error {mass_err:.1e}",
            k.offsets
        ),
    );
}

#[test]
fn credit_models() {
    let mut sums_ok = true;
    for model in CreditModel::ALL {
        for n in 1..=30 {
            let s: f64 = model.weights(n).unwrap().iter().sum();
            let want = if model == CreditModel::FullCredit {
                n as f64
            } else {
                1.0
            };
            sums_ok &= s == want;
        }
    }
    let h = CreditModel::Harmonic.weights(3).unwrap();
    let h4 = CreditModel::HarmonicLastEqualsFirst.weights(3).unwrap();
    let harmonic_err = max_abs_diff(&h, &[6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0]);
    let last_err = max_abs_diff(&h4, &[0.4, 0.2, 0.4]);
    report(
        "credit models",
        sums_ok && harmonic_err <= 1e-15 && last_err <= 1e-15,
        format!("sums exact for n=1..30: {sums_ok}, model 3 n=3 {h:?}, model 4 n=3 {h4:?}"),
    );
}

/// Midrank by counting, doubled to stay integral.
fn oracle_ranks(x: &[f64]) -> Vec<i64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as i64;
            let equal = x.iter().filter(|&&w| w == v).count() as i64;
            2 * less + equal + 1
        })
        .collect()
}

fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (oracle_ranks(x), oracle_ranks(y));
    let n = x.len() as i128;
    let sum = |v: &[i64]| v.iter().map(|&a| a as i128).sum::<i128>();
    let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(&p, &q)| p as i128 * q as i128).sum::<i128>();
    let num = n * dot(&rx, &ry) - sum(&rx) * sum(&ry);
    let dx = n * dot(&rx, &rx) - sum(&rx).pow(2);
    let dy = n * dot(&ry, &ry) - sum(&ry).pow(2);
    (num as f64 / ((dx * dy) as f64).sqrt()).clamp(-1.0, 1.0)
}

fn oracle_kendall(x: &[f64], y: &[f64]) -> f64 {
    let (mut s, mut tx, mut ty, mut n0) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            n0 += 1;
            let a = (x[i] - x[j]).signum() as i128 * i128::from(x[i] != x[j]);
            let b = (y[i] - y[j]).signum() as i128 * i128::from(y[i] != y[j]);
            s += a * b;
            tx += i128::from(a == 0);
            ty += i128::from(b == 0);
        }
    }
    (s as f64 / (((n0 - tx) * (n0 - ty)) as f64).sqrt()).clamp(-1.0, 1.0)
}

#[test]
fn correlation_machinery() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut mismatches, mut invariance_failures) = (0, 0);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(2..=40);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let (Ok(s), Ok(k)) = (spearman(&x, &y), kendall(&x, &y)) else {
            continue;
        };
        if s != oracle_spearman(&x, &y) || k != oracle_kendall(&x, &y) {
            mismatches += 1;
        }
        let tx: Vec<f64> = x.iter().map(|v| (v / 7.0).exp() * 3.0 - 11.0).collect();
        if spearman(&tx, &y).unwrap() != s || kendall(&tx, &y).unwrap() != k {
            invariance_failures += 1;
        }
    }
    let third = kendall(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
    report(
        "correlation machinery",
        mismatches == 0 && invariance_failures == 0 && (third - 1.0 / 3.0).abs() <= 1e-15,
        format!(
            "oracle mismatches {mismatches}/100, monotone-invariance failures {invariance_failures}, \
             kendall((1,2,3),(1,3,2)) = {third}"
        ),
    );
}

fn dense_pagerank(n: usize, edges: &[(u32, u32, f64)], d: f64) -> Vec<f64> {
    let mut w = vec![vec![0.0; n]; n];
    for &(a, b, x) in edges {
        if a != b {
            w[a as usize][b as usize] += x;
            w[b as usize][a as usize] += x;
        }
    }
    let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let dangling: f64 = (0..n).filter(|&j| deg[j] == 0.0).map(|j| p[j]).sum();
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let inflow: f64 = (0..n).filter(|&j| deg[j] > 0.0).map(|j| w[j][i] / deg[j] * p[j]).sum();
                (1.0 - d) / n as f64 + d * (inflow + dangling / n as f64)
            })
            .collect();
        let change: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if change < 1e-15 {
            break;
        }
    }
    p
}

#[test]
fn pagerank_baseline() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let config = PagerankConfig {
        tol: 1e-14,
        max_iter: 10_000,
        ..Default::default()
    };
    let (mut worst, mut simplex_err) = (0.0f64, 0.0f64);
    let mut negative = false;
    for _ in 0..20 {
        let m = rng.random_range(20..150);
        let edges: Vec<(u32, u32, f64)> = (0..m)
            .map(|_| {
                (
                    rng.random_range(0..50),
                    rng.random_range(0..50),
                    rng.random_range(0.5..3.0),
                )
            })
            .collect();
        let got = pagerank(&WeightedGraph::from_edges(50, edges.iter().copied()), &config).unwrap();
        worst = worst.max(max_abs_diff(&got.scores, &dense_pagerank(50, &edges, 0.85)));
        simplex_err = simplex_err.max((got.scores.iter().sum::<f64>() - 1.0).abs());
        negative |= got.scores.iter().any(|&s| s < 0.0);
    }
    let pair = pagerank(&WeightedGraph::from_edges(2, [(0, 1, 1.0)]), &PagerankConfig::default()).unwrap();
    report(
        "pagerank",
        worst <= 1e-10 && simplex_err <= 1e-12 && !negative && pair.scores == [0.5, 0.5],
        format!(
            "max deviation from dense power iteration {worst:.1e} (<= 1e-10), |sum-1| {simplex_err:.1e} (<= 1e-12), \
             two-author case {:?}",
            pair.scores
        ),
    );
}

#[test]
fn normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut cells = BTreeMap::new();
    for year in 1990..2010 {
        for v in 0..rng.random_range(12..40) {
            cells.insert(
                (VenueId(v), year),
                rng.random_range(-3.0..(2.0 + f64::from(year - 1990))),
            );
        }
    }
    let model = VenueScoreModel::new("x", cells);
    let argmax = |m: &VenueScoreModel| -> Vec<VenueId> {
        m.by_year()
            .values()
            .map(|c| c.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0)
            .collect()
    };
    let (top, warnings) = year_normalize(&model, YearNormalization::Top10Mean);
    let top10_err = top
        .by_year()
        .values()
        .map(|c| {
            let mut v: Vec<f64> = c.iter().map(|x| x.1).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            (v[..10].iter().sum::<f64>() / 10.0 - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let (std_norm, _) = year_normalize(&model, YearNormalization::PerYearStd);
    let z = znorm_clip(&model, f64::INFINITY, true).unwrap();
    let z_err = z
        .by_year()
        .values()
        .map(|c| {
            let n = c.len() as f64;
            let mean = c.iter().map(|x| x.1).sum::<f64>() / n;
            let var = c.iter().map(|x| (x.1 - mean).powi(2)).sum::<f64>() / n;
            mean.abs().max((var - 1.0).abs())
        })
        .fold(0.0, f64::max);
    let argmax_kept = argmax(&top) == argmax(&model) && argmax(&std_norm) == argmax(&model);
    report(
        "normalization",
        warnings.is_empty() && top10_err <= 1e-9 && z_err <= 1e-9 && argmax_kept,
        format!(
            "top-10 mean error {top10_err:.1e} (<= 1e-9), znorm mean/var error {z_err:.1e} (<= 1e-9), \
             per-year argmax unchanged: {argmax_kept}"
        ),
    );
}

fn brute_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..points.len() {
        let mean_to = |c: usize| {
            let others: Vec<f64> = (0..points.len())
                .filter(|&j| j != i && labels[j] == c)
                .map(|j| dist(&points[i], &points[j]))
                .collect();
            (!others.is_empty()).then(|| others.iter().sum::<f64>() / others.len() as f64)
        };
        let Some(a) = mean_to(labels[i]) else {
            continue;
        };
        let Some(b) = (0..k)
            .filter(|&c| c != labels[i])
            .filter_map(mean_to)
            .min_by(f64::total_cmp)
        else {
            continue;
        };
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / points.len() as f64
}

#[test]
fn clustering() {
    let (points, _) = gaussian_mixture(5, 60, 10, 1.0, 31);
    let sweep = silhouette_sweep(&points, 2..=10, 5, 7).unwrap();
    let best = sweep.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| *k).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut sil_err: f64 = 0.0;
    for _ in 0..5 {
        let n = rng.random_range(10..=300);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let k = rng.random_range(2..=6);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        labels[0] = k - 1;
        sil_err = sil_err.max((silhouette(&pts, &labels) - brute_silhouette(&pts, &labels)).abs());
    }

    let counts = VenueAuthorCounts {
        venues: (0..30).map(VenueId).collect(),
        authors: (0..80).map(AuthorId).collect(),
        rows: (0..30)
            .map(|v| {
                let mut row = Vec::new();
                for a in 0..80u32 {
                    if (a % 3) as usize == v % 3 || rng.random::<f64>() < 0.05 {
                        row.push((a, rng.random_range(1..5)));
                    }
                }
                row
            })
            .collect(),
        since_year: 2000,
        min_universities: 1,
    };
    let lda = lda_fit(
        &counts,
        &LdaConfig {
            topics: 4,
            iterations: 100,
            ..Default::default()
        },
        41,
    )
    .unwrap();
    let lda_err = lda
        .vectors
        .iter()
        .map(|v| {
            let neg = v.iter().fold(0.0f64, |m, &x| m.max(-x));
            neg.max((v.iter().sum::<f64>() - 1.0).abs())
        })
        .fold(0.0, f64::max);
    report(
        "clustering",
        (4..=6).contains(&best) && sil_err <= 1e-12 && lda_err <= 1e-9,
        format!(
            "silhouette argmax k={best} (in 4..6), silhouette vs brute force {sil_err:.1e}, \
             LDA simplex error {lda_err:.1e} (<= 1e-9)"
        ),
    );
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[test]
fn plus_minus_credit() {
    let mut b = CorpusBuilder::new(FilterConfig::default());
    let teams: [&[&str]; 5] = [&["p", "q"], &["q", "r"], &["p"], &["p", "q", "r"], &["r"]];
    for (i, team) in teams.iter().enumerate() {
        b.push(RawRecord {
            venue: Some("V".into()),
            kind: VenueKind::Conference,
            year: Some(2000 + i as i32),
            pages: None,
            authors: team.iter().map(|s| s.to_string()).collect(),
        });
    }
    let (corpus, _) = b.finish();
    let incidence = paper_author_incidence(&corpus);
    let scores = [2.0, -1.0, 0.5, 3.0, 1.5];
    let lambda = 0.1;
    let got = credit_split(&scores, &incidence, lambda, &SolverConfig::default()).unwrap();
    let a = incidence.to_dense();
    let m = a.len() as f64;
    let gram: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| a.iter().map(|r| r[i] * r[j]).sum::<f64>() + if i == j { m * lambda } else { 0.0 })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..3)
        .map(|j| a.iter().zip(&scores).map(|(r, s)| r[j] * s).sum())
        .collect();
    let err = max_abs_diff(&got, &dense_solve(gram, rhs));

    let identity = CsrMatrix::from_dense(
        &(0..4)
            .map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect())
            .collect::<Vec<_>>(),
    );
    let paper = [1.25, -0.5, 3.0, 0.0];
    let exact = credit_split(&paper, &identity, 0.0, &SolverConfig::default()).unwrap();
    report(
        "plus-minus credit",
        err <= 1e-8 && exact == paper,
        format!("5x3 vs dense ridge {err:.1e} (<= 1e-8), identity at lambda=0 returns {exact:?}"),
    );
}

#[test]
fn aging_curve_hump() {
    let (corpus, model) = aging_cohort(400, 15, 43);
    let curve = aging_curve(&corpus, &model, CreditModel::FullCredit).unwrap();
    let peak = curve
        .iter()
        .filter(|(_, p)| p.authors >= 50)
        .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(c, _)| *c)
        .unwrap();
    report(
        "aging curve",
        (13..=17).contains(&peak),
        format!("recovered peak at career year {peak} (planted 15 ± 2)"),
    );
}
