use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_venuescore"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Generates a fixture with 100 venues and 8000 authors into `dir`.
fn fixture(dir: &Path) -> PathBuf {
    let synth = dir.join("synth.toml");
    fs::write(&synth, "[synth]\nvenues = 100\nauthors = 8000\n").unwrap();
    let fx = dir.join("fx");
    ok(
        dir,
        &[
            "generate",
            "--out",
            fx.to_str().unwrap(),
            "--synth",
            synth.to_str().unwrap(),
        ],
    );
    fx
}

fn top(path: &Path, n: usize) -> HashSet<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (name, score) = l.split_once('\t').unwrap();
            (name.to_string(), score.parse().unwrap())
        })
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    rows.into_iter().take(n).map(|r| r.0).collect()
}

#[test]
fn planted_top_venues_are_recovered() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture(tmp.path());
    ok(&fx, &["-c", "pipeline.toml", "ingest"]);
    ok(&fx, &["-c", "pipeline.toml", "train", "--metric", "faculty"]);
    let stdout = ok(&fx, &["-c", "pipeline.toml", "rank", "--model", "faculty"]);
    assert!(stdout.lines().count() >= 10);

    let learned = top(&fx.join("out/venues_faculty.tsv"), 10);
    let truth = top(&fx.join("truth_venues.tsv"), 10);
    let overlap = learned.intersection(&truth).count();
    assert!(overlap >= 8, "top-10 overlap {overlap}");

    for m in [
        "manifest_ingest.json",
        "manifest_train_faculty.json",
        "manifest_rank_faculty.json",
    ] {
        let v: serde_json::Value = serde_json::from_slice(&fs::read(fx.join("out").join(m)).unwrap()).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
        assert!(!v["outputs"].as_array().unwrap().is_empty());
    }
}

#[test]
fn full_pipeline_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture(tmp.path());
    let steps: &[&[&str]] = &[
        &["ingest"],
        &["train", "--metric", "faculty"],
        &["train", "--metric", "nsf"],
        &["train", "--metric", "salary"],
        &["combine"],
        &["rank"],
        &["score"],
        &["pagerank"],
        &["aging"],
        &["credit-split"],
        &["cluster"],
    ];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let _ = fs::remove_dir_all(fx.join("out"));
        for step in steps {
            let mut args = vec!["-c", "pipeline.toml"];
            args.extend_from_slice(step);
            ok(&fx, &args);
        }
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(fx.join("out"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| !p.file_name().unwrap().to_str().unwrap().starts_with("manifest_"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_str().unwrap().to_string(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        snapshots.push(files);
    }
    let names: Vec<&str> = snapshots[0].iter().map(|f| f.0.as_str()).collect();
    for expected in [
        "model_combined.tsv",
        "authors_combined.tsv",
        "institutions_combined.tsv",
        "pagerank_venues.tsv",
        "venue_clusters.csv",
        "silhouette.tsv",
        "aging_combined.tsv",
        "credit_split_combined.tsv",
    ] {
        assert!(names.contains(&expected), "missing {expected}");
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn correlating_a_table_with_itself_gives_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("a.tsv"), "name\tscore\nx\t1.5\ny\t-2\nz\t0.25\nw\t9\n").unwrap();
    fs::copy(dir.join("a.tsv"), dir.join("b.tsv")).unwrap();
    fs::write(
        dir.join("c.toml"),
        "output_dir = \"out\"\n[corpus]\nnormalized = \"corpus.tsv\"\n",
    )
    .unwrap();
    ok(dir, &["-c", "c.toml", "correlate", "a.tsv", "b.tsv"]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("out/correlation.json")).unwrap()).unwrap();
    assert_eq!(v["entities"], 4);
    for key in ["spearman", "kendall", "pearson"] {
        for row in v[key].as_array().unwrap() {
            for x in row.as_array().unwrap() {
                assert!((x.as_f64().unwrap() - 1.0).abs() < 1e-12, "{key}: {x}");
            }
        }
    }
    assert!(dir.join("out/manifest_correlate.json").is_file());
}

fn json_error(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {stderr}"))
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("bad.toml"),
        "output_dir = \"out\"\nbogus = 1\n[corpus]\nnormalized = \"c.tsv\"\n",
    )
    .unwrap();
    let out = run_in(dir, &["--json-errors", "-c", "bad.toml", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
    let e = json_error(&out);
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 1);
    assert!(e["message"].as_str().unwrap().contains("bogus"));

    let out = run_in(dir, &["-c", "missing.toml", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("corpus.tsv"), "this line has no fields\n").unwrap();
    fs::write(
        dir.join("c.toml"),
        "output_dir = \"out\"\n[corpus]\nnormalized = \"corpus.tsv\"\n",
    )
    .unwrap();
    let out = run_in(dir, &["--json-errors", "-c", "c.toml", "ingest"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_error(&out)["error"], "data");
    assert!(!dir.join("out/corpus.tsv").exists());
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture(tmp.path());
    let mut cfg = fs::read_to_string(fx.join("pipeline.toml")).unwrap();
    cfg.push_str("\n[solver]\nschedule = \"constant\"\neta0 = 1e6\nlambda = 1.0\n");
    fs::write(fx.join("diverge.toml"), cfg).unwrap();
    ok(&fx, &["-c", "diverge.toml", "ingest"]);
    let out = run_in(
        &fx,
        &["--json-errors", "-c", "diverge.toml", "train", "--metric", "faculty"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_error(&out)["error"], "divergence");
    assert!(!fx.join("out/model_faculty.tsv").exists());
}

#[test]
fn init_config_output_is_a_valid_config() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ok(tmp.path(), &["init-config"]);
    fs::write(tmp.path().join("v.toml"), &text).unwrap();
    fs::write(tmp.path().join("a.tsv"), "a\t1\nb\t2\nc\t3\n").unwrap();
    ok(tmp.path(), &["-c", "v.toml", "correlate", "a.tsv", "a.tsv"]);
}
