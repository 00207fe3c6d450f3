//! One function per subcommand.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use venue_scores::cluster::{
    build_count_matrix, fingerprint, kmeans, lda_fit, silhouette_sweep, write_labels, write_vectors,
};
use venue_scores::corpus::{export_normalized, ingest_dblp_path, ingest_normalized, merge_venues, MergeMap};
use venue_scores::eval::{correlate, pagerank_authors, pagerank_venues, Alignment, ScoreTable};
use venue_scores::scores::{
    aging_curve, combine, credit_split, paper_author_incidence, paper_scores, score_all_authors, score_institutions,
    train, year_normalize, znorm_clip, SizeNorm, VenueScoreModel,
};
use venue_scores::synth::{generate, SynthConfig};
use venue_scores::targets::{
    build_faculty_labels, build_nsf_targets, build_salary_targets, read_affiliations, read_awards, read_cpi,
    read_ranking, read_salaries, Roster, TargetSet,
};
use venue_scores::Corpus;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{sha256_hex, Run};

pub const METRICS: [&str; 3] = ["faculty", "nsf", "salary"];

pub const CORPUS_FILE: &str = "corpus.tsv";

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn with_file<T, E: Into<CliError>>(path: &Path, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| match e.into() {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn ingest(cfg: &PipelineConfig, run: &mut Run) -> Result<(), CliError> {
    let filter = &cfg.corpus.filter;
    let (corpus, stats) = match (&cfg.corpus.dblp, &cfg.corpus.normalized) {
        (Some(p), _) => {
            cfg.require_files(&[p])?;
            run.input(p)?;
            with_file(p, ingest_dblp_path(p, filter))?
        }
        (_, Some(p)) => {
            cfg.require_files(&[p])?;
            run.input(p)?;
            with_file(p, ingest_normalized(open(p)?, filter))?
        }
        (None, None) => return Err(CliError::Config("no corpus source".into())),
    };
    let corpus = match &cfg.corpus.merge_map {
        Some(p) => {
            cfg.require_files(&[p])?;
            run.input(p)?;
            let map = with_file(p, MergeMap::read(open(p)?))?;
            merge_venues(&corpus, &map)
        }
        None => corpus,
    };
    if corpus.is_empty() {
        return Err(CliError::Data("no papers survived the corpus filters".into()));
    }
    run.write(CORPUS_FILE, |w| Ok(export_normalized(&corpus, w)?))?;
    run.write("ingest_stats.json", |w| Ok(writeln!(w, "{}", stats.to_json())?))?;
    println!(
        "ingested {} papers, {} authors, {} venues",
        corpus.num_papers(),
        corpus.num_authors(),
        corpus.num_venues()
    );
    Ok(())
}

/// The corpus written by `ingest`.
fn load_corpus(cfg: &PipelineConfig, run: &mut Run) -> Result<Corpus, CliError> {
    let path = run.path(CORPUS_FILE);
    if !path.is_file() {
        return Err(CliError::Data(format!(
            "{} not found; run `ingest` first",
            path.display()
        )));
    }
    run.input(&path)?;
    Ok(with_file(&path, ingest_normalized(open(&path)?, &cfg.corpus.filter))?.0)
}

fn model_file(name: &str) -> String {
    format!("model_{name}.tsv")
}

fn load_model(run: &mut Run, corpus: &Corpus, name: &str) -> Result<VenueScoreModel, CliError> {
    let path = run.path(&model_file(name));
    if !path.is_file() {
        return Err(CliError::Data(format!(
            "{} not found; run `train --metric {name}` or `combine` first",
            path.display()
        )));
    }
    run.input(&path)?;
    with_file(&path, VenueScoreModel::read_tsv(name, corpus, open(&path)?))
}

fn build_targets(
    cfg: &PipelineConfig,
    corpus: &Corpus,
    metric: &str,
    run: &mut Run,
) -> Result<(TargetSet, serde_json::Value), CliError> {
    let missing = |section: &str| CliError::Config(format!("metric {metric} needs a [{section}] section"));
    match metric {
        "faculty" => {
            let f = cfg.faculty.as_ref().ok_or_else(|| missing("faculty"))?;
            cfg.require_files(&[&f.affiliations, &f.ranking])?;
            run.input(&f.affiliations)?;
            run.input(&f.ranking)?;
            let aff = with_file(&f.affiliations, read_affiliations(open(&f.affiliations)?))?;
            let ranking = with_file(&f.ranking, read_ranking(open(&f.ranking)?))?;
            let labels = build_faculty_labels(
                corpus,
                &aff,
                &ranking,
                f.top_k,
                f.match_threshold,
                &f.ranking.display().to_string(),
            );
            if labels.positives() == 0 {
                return Err(CliError::Data(format!(
                    "no corpus author is faculty at the top {} universities",
                    f.top_k
                )));
            }
            let stats = serde_json::json!({
                "positives": labels.positives(),
                "negatives": labels.labels.len() - labels.positives(),
                "unmatched_names": labels.unmatched.len(),
                "top_k": labels.k,
            });
            Ok((labels.target_set(), stats))
        }
        "nsf" => {
            let n = cfg.nsf.as_ref().ok_or_else(|| missing("nsf"))?;
            cfg.require_files(&[&n.awards, &n.cpi])?;
            run.input(&n.awards)?;
            run.input(&n.cpi)?;
            let awards = with_file(&n.awards, read_awards(open(&n.awards)?))?;
            let cpi = with_file(&n.cpi, read_cpi(open(&n.cpi)?))?;
            let (ts, stats) = build_nsf_targets(corpus, &awards, &cpi, &n.params)?;
            Ok((ts, serde_json::to_value(stats).expect("stats serialize")))
        }
        "salary" => {
            let s = cfg.salary.as_ref().ok_or_else(|| missing("salary"))?;
            cfg.require_files(&[&s.salaries])?;
            run.input(&s.salaries)?;
            let records = with_file(&s.salaries, read_salaries(open(&s.salaries)?))?;
            let (ts, stats) = build_salary_targets(corpus, &records, &s.params)?;
            Ok((ts, serde_json::to_value(stats).expect("stats serialize")))
        }
        other => Err(CliError::Config(format!(
            "unknown metric {other:?}; expected one of {}",
            METRICS.join(", ")
        ))),
    }
}

pub fn cmd_train(cfg: &PipelineConfig, run: &mut Run, metric: &str) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let (targets, stats) = build_targets(cfg, &corpus, metric, run)?;
    if targets.rows.len() < 2 {
        return Err(CliError::Data(format!(
            "only {} target rows for {metric}",
            targets.rows.len()
        )));
    }
    let trained = train(&corpus, &targets, &cfg.design, &cfg.solver.to_config(cfg.seed))?;
    run.write(&model_file(metric), |w| Ok(trained.model.write_tsv(&corpus, w)?))?;
    run.write(&format!("columns_{metric}.tsv"), |w| {
        Ok(trained.columns.write_tsv(&corpus, w)?)
    })?;
    let report = serde_json::json!({
        "metric": metric,
        "design": cfg.design,
        "targets": stats,
        "rows": targets.rows.len(),
        "training": trained.report,
        "bias": trained.weights.last(),
    });
    run.write_json(&format!("train_{metric}.json"), &report)?;
    println!(
        "trained {metric}: {} rows, {} columns, objective {:.6}",
        trained.report.rows, trained.report.columns, trained.report.final_objective
    );
    Ok(())
}

pub fn cmd_combine(cfg: &PipelineConfig, run: &mut Run) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let mut members = Vec::new();
    for m in &cfg.combine.metrics {
        let model = load_model(run, &corpus, m)?;
        members.push(znorm_clip(&model, cfg.combine.clip_sigmas, cfg.combine.per_year)?);
    }
    let mut combined = combine(&members)?.combined;
    combined.metric = "combined".into();
    run.write(&model_file("combined"), |w| Ok(combined.write_tsv(&corpus, w)?))?;
    println!(
        "combined {} models into {} venue-year cells",
        members.len(),
        combined.len()
    );
    Ok(())
}

fn scoring_model(
    cfg: &PipelineConfig,
    run: &mut Run,
    corpus: &Corpus,
    name: &str,
) -> Result<VenueScoreModel, CliError> {
    let model = load_model(run, corpus, name)?;
    Ok(match cfg.scoring.year_normalization {
        Some(mode) => {
            let (m, warnings) = year_normalize(&model, mode);
            for w in warnings {
                log::warn!("{w}");
            }
            m
        }
        None => model,
    })
}

pub fn cmd_rank(cfg: &PipelineConfig, run: &mut Run, model: &str) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let m = scoring_model(cfg, run, &corpus, model)?;
    let table = m.venue_table(&corpus, cfg.scoring.years()?);
    run.write(&format!("venues_{model}.tsv"), |w| Ok(table.write_tsv(w)?))?;
    run.write(&format!("ranking_{model}.tsv"), |w| {
        Ok(table.write_ranking_tsv(w, None)?)
    })?;
    let stdout = std::io::stdout();
    table.write_ranking_tsv(stdout.lock(), Some(cfg.scoring.top))?;
    Ok(())
}

fn roster(cfg: &PipelineConfig, run: &mut Run, corpus: &Corpus) -> Result<Option<Roster>, CliError> {
    let Some(f) = &cfg.faculty else {
        return Ok(None);
    };
    cfg.require_files(&[&f.affiliations])?;
    run.input(&f.affiliations)?;
    let aff = with_file(&f.affiliations, read_affiliations(open(&f.affiliations)?))?;
    Ok(Some(Roster::resolve(corpus, &aff, f.match_threshold)))
}

pub fn cmd_score(cfg: &PipelineConfig, run: &mut Run, model: &str) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let m = scoring_model(cfg, run, &corpus, model)?;
    let years = cfg.scoring.years()?;
    let authors = score_all_authors(&m, &corpus, cfg.scoring.credit, years)?;
    run.write(&format!("authors_{model}.tsv"), |w| {
        writeln!(w, "name\tscore")?;
        for s in &authors {
            writeln!(w, "{}\t{}", corpus.author(s.author).name, s.total)?;
        }
        Ok(())
    })?;
    if let Some(roster) = roster(cfg, run, &corpus)? {
        let unis = score_institutions(&m, &corpus, &roster, cfg.scoring.credit, cfg.scoring.size_norm, years)?;
        run.write(&format!("institutions_{model}.tsv"), |w| {
            writeln!(w, "name\tfaculty\ttotal\tsize_normed")?;
            for u in &unis {
                writeln!(w, "{}\t{}\t{}\t{}", u.name, u.faculty, u.total, u.size_normed)?;
            }
            Ok(())
        })?;
        let divisor = match cfg.scoring.size_norm {
            SizeNorm::Sqrt => "sqrt(faculty)",
            SizeNorm::PerCapita => "faculty",
        };
        run.write_json(
            &format!("institutions_{model}.json"),
            &serde_json::json!({
                "size_normed": format!("total / {divisor}"),
                "size_normed_is_interpretation": true,
                "credit": cfg.scoring.credit,
                "institutions": unis.len(),
            }),
        )?;
        println!("scored {} authors and {} institutions", authors.len(), unis.len());
    } else {
        println!("scored {} authors", authors.len());
    }
    Ok(())
}

pub fn cmd_correlate(cfg: &PipelineConfig, run: &mut Run, tables: &[PathBuf], name: &str) -> Result<(), CliError> {
    if tables.len() < 2 {
        return Err(CliError::Config("correlate needs at least two tables".into()));
    }
    let mut loaded = Vec::new();
    for p in tables {
        if !p.is_file() {
            return Err(CliError::Config(format!("file not found: {}", p.display())));
        }
        run.input(p)?;
        loaded.push(with_file(p, ScoreTable::read_tsv(&p.display().to_string(), open(p)?))?);
    }
    let alignment = cfg.correlate.fuzzy_threshold.map_or(Alignment::Exact, Alignment::Fuzzy);
    let report = correlate(&loaded, alignment)?;
    let json = report.to_json();
    run.write(name, |w| Ok(writeln!(w, "{json}")?))?;
    println!("{json}");
    Ok(())
}

pub fn cmd_pagerank(cfg: &PipelineConfig, run: &mut Run) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let authors = pagerank_authors(&corpus, &cfg.pagerank)?;
    let venues = pagerank_venues(&corpus, &cfg.pagerank)?;
    run.write("pagerank_authors.tsv", |w| Ok(authors.write_tsv(w)?))?;
    run.write("pagerank_venues.tsv", |w| Ok(venues.write_tsv(w)?))?;
    println!("pagerank over {} authors and {} venues", authors.len(), venues.len());
    Ok(())
}

pub fn cmd_cluster(cfg: &PipelineConfig, run: &mut Run) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let roster = roster(cfg, run, &corpus)?
        .ok_or_else(|| CliError::Config("cluster needs a [faculty] section for the faculty roster".into()))?;
    let c = &cfg.cluster;
    let counts = build_count_matrix(&corpus, c.since_year, c.min_universities, &roster)?;
    let topics = lda_fit(&counts, &c.lda, cfg.seed)?;
    for w in &topics.warnings {
        log::warn!("{w}");
    }
    let names: Vec<String> = topics.venues.iter().map(|v| corpus.venue(*v).name.clone()).collect();
    let rows: Vec<(String, Vec<f64>)> = names.iter().cloned().zip(topics.vectors.iter().cloned()).collect();
    run.write("topic_vectors.tsv", |w| Ok(write_vectors(w, &rows)?))?;

    let n = topics.vectors.len();
    let k_max = c.k_max.min(n.saturating_sub(1));
    let k = match c.k {
        Some(k) => k,
        None => {
            if k_max < c.k_min {
                return Err(CliError::Data(format!(
                    "{n} venues are too few for a silhouette sweep from k={}",
                    c.k_min
                )));
            }
            let sweep = silhouette_sweep(&topics.vectors, c.k_min..=k_max, c.restarts, cfg.seed)?;
            run.write("silhouette.tsv", |w| {
                writeln!(w, "k\tsilhouette")?;
                for (k, s) in &sweep {
                    writeln!(w, "{k}\t{s}")?;
                }
                Ok(())
            })?;
            sweep
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(k, _)| *k)
                .expect("sweep is non-empty")
        }
    };
    let clustering = kmeans(&topics.vectors, k, c.restarts, cfg.seed.wrapping_add(k as u64))?;
    let labels: Vec<(String, usize)> = names.into_iter().zip(clustering.assignments.iter().copied()).collect();
    run.write("venue_clusters.csv", |w| Ok(write_labels(w, &labels)?))?;

    let prints: Vec<(String, Vec<f64>)> = roster
        .members
        .iter()
        .filter_map(|(uni, ids)| fingerprint(&corpus, &topics, ids, Some(c.since_year)).map(|f| (uni.clone(), f)))
        .collect();
    run.write("university_fingerprints.tsv", |w| Ok(write_vectors(w, &prints)?))?;
    println!(
        "{n} venues, {} topics, k={k}, silhouette {:.4}",
        topics.dims(),
        clustering.silhouette
    );
    Ok(())
}

pub fn cmd_aging(cfg: &PipelineConfig, run: &mut Run, model: &str) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let m = scoring_model(cfg, run, &corpus, model)?;
    let curve = aging_curve(&corpus, &m, cfg.scoring.credit)?;
    run.write(&format!("aging_{model}.tsv"), |w| {
        writeln!(w, "career_year\tmean_score\tauthors")?;
        for (c, p) in &curve {
            writeln!(w, "{c}\t{}\t{}", p.mean, p.authors)?;
        }
        Ok(())
    })?;
    if let Some((c, p)) = curve.iter().max_by(|a, b| a.1.mean.total_cmp(&b.1.mean)) {
        println!("peak mean yearly score {:.4} at career year {c}", p.mean);
    }
    Ok(())
}

pub fn cmd_credit_split(cfg: &PipelineConfig, run: &mut Run, model: &str) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, run)?;
    let m = scoring_model(cfg, run, &corpus, model)?;
    let scores = paper_scores(&corpus, &m);
    let incidence = paper_author_incidence(&corpus);
    let values = credit_split(
        &scores,
        &incidence,
        cfg.credit_split.lambda,
        &cfg.solver.to_config(cfg.seed),
    )?;
    run.write(&format!("credit_split_{model}.tsv"), |w| {
        writeln!(w, "name\tvalue")?;
        for (a, v) in corpus.authors().iter().zip(&values) {
            writeln!(w, "{}\t{v}", a.name)?;
        }
        Ok(())
    })?;
    println!("split {} paper scores over {} authors", scores.len(), values.len());
    Ok(())
}

/// Writes a synthetic fixture plus a pipeline config that runs on it.
pub fn cmd_generate(config: &SynthConfig, out: &Path) -> Result<(), CliError> {
    let fixture = generate(config)?;
    let files = fixture.write_to(out)?;
    let pipeline = format!(
        "seed = {seed}\noutput_dir = \"out\"\n\n[corpus]\nnormalized = \"corpus.tsv\"\n\n\
         [faculty]\naffiliations = \"affiliations.csv\"\nranking = \"ranking.txt\"\ntop_k = {top_k}\n\n\
         [nsf]\nawards = \"awards.jsonl\"\ncpi = \"cpi.csv\"\n\n[salary]\nsalaries = \"salaries.csv\"\n\n\
         [cluster]\nmin_universities = 2\nk_max = 10\n\n[cluster.lda]\ntopics = 10\niterations = 100\n",
        seed = config.seed,
        top_k = config.top_k,
    );
    crate::output::write_atomic(&out.join("pipeline.toml"), |w| Ok(w.write_all(pipeline.as_bytes())?))?;
    let config_text = toml::to_string(config).map_err(|e| CliError::Config(e.to_string()))?;
    let mut run = Run::new(out, "generate", config.seed, config_text.as_bytes())?;
    for f in files.iter().map(String::as_str).chain(["pipeline.toml"]) {
        run.record_output(f);
    }
    run.finish()?;
    println!(
        "wrote {} papers, {} authors, {} venues to {} (digest of truth.json: {})",
        fixture.corpus.num_papers(),
        fixture.corpus.num_authors(),
        fixture.corpus.num_venues(),
        out.display(),
        &sha256_hex(&std::fs::read(out.join("truth.json"))?)[..12]
    );
    Ok(())
}
