use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 9
folds = 2

[generator]
num_collections = 16
num_wse = 3
num_topics = 6
num_themes = 20
vocabulary_size = 6000
terms_per_theme = 12
size_median = 60.0
size_sigma = 1.2
max_size = 1500

[sampling]
query_budget = 40
full_page_queries = 10
"#;

fn fedsel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsel"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) {
    let out = fedsel(args, dir);
    assert!(
        out.status.success(),
        "fedsel {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn stepwise_commands_produce_their_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    let cfg = ["--config", "small.toml"];
    let with = |rest: &[&'static str]| -> Vec<&'static str> { cfg.iter().copied().chain(rest.iter().copied()).collect() };

    ok(&with(&["generate", "--out", "data"]), d);
    assert!(d.join("data").is_dir());
    ok(&with(&["sample", "--data", "data", "--strategy", "zipf", "--out", "samples"]), d);
    ok(&["index", "--data", "data", "--samples", "samples", "--mode", "pages", "--out", "stats"], d);
    ok(&["stats", "--data", "data", "--samples", "samples", "--mode", "snippets", "--out", "stats2"], d);
    for f in ["cw.tsv", "df.tsv", "cf.tsv"] {
        assert!(d.join("stats").join(f).is_file(), "{f}");
        assert!(d.join("stats2").join(f).is_file(), "{f}");
    }
    ok(&with(&["estimate-size", "--data", "data", "--samples", "samples", "--out", "sizes.tsv"]), d);
    ok(&with(&["select", "--data", "data", "--samples", "samples", "--method", "redde", "--sizes", "sizes.tsv", "--out", "run.tsv"]), d);
    let run = std::fs::read_to_string(d.join("run.tsv")).unwrap();
    assert!(run.starts_with("topic_id\trank\tcollection_id\tscore\n"));
    ok(&with(&["evaluate", "--data", "data", "--run", "run.tsv", "--method", "redde", "--out", "eval"]), d);
    let eval = std::fs::read_to_string(d.join("eval/eval.csv")).unwrap();
    // Six topics at two cutoffs.
    assert_eq!(eval.lines().count(), 1 + 6 * 2);
    ok(&["report", "--sizes", "sizes.tsv", "--out", "report"], d);
    assert!(d.join("report/top5.csv").is_file());
    assert!(d.join("report/sizes_clueweb1.svg").is_file());
    ok(&with(&["experiment", "coverage", "--out", "exp"]), d);
    assert!(d.join("exp/coverage/coverage.csv").is_file());
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = fedsel(&["experiment", "nonsense"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));

    let out = fedsel(&["experiment", "coverage", "--config", "missing.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));

    std::fs::write(d.join("bad.toml"), "no_such_key = 1\n").unwrap();
    let out = fedsel(&["generate", "--config", "bad.toml", "--out", "data"], d);
    assert!(!out.status.success());

    let out = fedsel(&["index", "--samples", "nowhere", "--out", "x"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data"));
}
