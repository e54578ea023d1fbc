use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexind"))
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/worked_example")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

fn tsv_map(p: &Path) -> BTreeMap<String, String> {
    read(p)
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn sorted_lines(s: &str) -> Vec<String> {
    let mut v: Vec<String> = s.lines().map(str::to_string).collect();
    v.sort();
    v
}

fn learn_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = vec![
        "learn".into(),
        "--corpus".into(),
        fixture("corpus.txt"),
        "--strip-answer".into(),
        "--background".into(),
        fixture("background.tsv"),
        "--stoplist".into(),
        fixture("stoplist.txt"),
        "--out".into(),
        out.into(),
    ];
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn ok_owned(args: &[String]) -> String {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&refs)
}

/// A small generated corpus with its gold lexicon and frequencies.
fn small_synthetic(dir: &Path, ambiguity: &str) -> PathBuf {
    let g = dir.join("gen");
    ok(&["gen", "--n-examples", "400", "--ambiguity", ambiguity, "--seed", "2", "--out", g.to_str().unwrap()]);
    g
}

#[test]
fn learn_reproduces_worked_example_lexicon() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("run");
    let stdout = ok_owned(&learn_args(out.to_str().unwrap(), &[]));
    assert!(stdout.contains("10 entries"));
    let got = sorted_lines(&read(&out.join("lexicon.tsv")));
    let want = sorted_lines(&read(Path::new(&fixture("expected_lexicon.tsv"))));
    assert_eq!(got, want);
    for f in ["config.txt", "trace.jsonl", "stats.tsv", "uncovered.tsv", "candidates.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let stats = tsv_map(&out.join("stats.tsv"));
    assert_eq!(stats["coverage_pct"], "100.0000");
    let first: serde_json::Value = serde_json::from_str(read(&out.join("trace.jsonl")).lines().next().unwrap()).unwrap();
    assert_eq!(first["phrase"], "estado");
    assert_eq!(first["score"], 49.0);
}

#[test]
fn fracture_mode_reports_more_candidates() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("run");
    ok_owned(&learn_args(out.to_str().unwrap(), &["--candidate-mode", "fracture"]));
    let counts = tsv_map(&out.join("candidates.tsv"));
    let lics: usize = counts["lics"].parse().unwrap();
    let fracture: usize = counts["fracture"].parse().unwrap();
    assert!(fracture >= lics, "{fracture} < {lics}");
    assert!(!read(&out.join("lexicon.tsv")).is_empty());
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("x");
    let missing = run(&["learn", "--corpus", "/nonexistent/corpus.txt", "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());
    assert_eq!(run(&["learn", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["lics", "f(", "g"]).status.code(), Some(2));
    let bad_gen = run(&["gen", "--n-symbols", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(bad_gen.status.code(), Some(2));
    let bad_config = t.path().join("bad.cfg");
    fs::write(&bad_config, "no-such-key=1\n").unwrap();
    let r = run(&["--config", bad_config.to_str().unwrap(), "count-interp", "1", "1"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn gen_outputs_match_requested_rates_and_repeat_exactly() {
    let t = TempDir::new().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    ok(&["gen", "--out", a.to_str().unwrap()]);
    ok(&["gen", "--out", b.to_str().unwrap()]);
    let stats = tsv_map(&a.join("gold_stats.tsv"));
    assert_eq!(stats["words"], "100");
    assert_eq!(stats["entries"], "100");
    assert_eq!(stats["ambiguity"], "1.0000");
    assert_eq!(stats["synonymy"], "1.0000");
    assert_eq!(stats["examples"], "1949");
    let gold = read(&a.join("gold.tsv"));
    assert_eq!(gold.lines().count(), 100);
    assert!(gold.lines().all(|l| l.split_once('\t').is_some()));
    for f in ["corpus.txt", "gold.tsv", "freq.tsv", "gold_stats.tsv", "config.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = t.path().join("c");
    ok(&["gen", "--seed", "1", "--out", c.to_str().unwrap()]);
    assert_ne!(read(&a.join("corpus.txt")), read(&c.join("corpus.txt")));
}

#[test]
fn eval_reports() {
    let t = TempDir::new().unwrap();
    let dir = t.path();
    fs::write(dir.join("gold.tsv"), "big\tlarge(_)\nriver\triver(_)\nthe\t\n").unwrap();
    fs::write(dir.join("wrong.tsv"), "big\tlarge(_)\nriver\tlake(_)\n").unwrap();
    fs::write(dir.join("empty.tsv"), "").unwrap();
    fs::write(dir.join("freq.tsv"), "big\t3\nriver\t1\nthe\t9\n").unwrap();
    let p = |n: &str| dir.join(n).display().to_string();
    let report = |learned: &str| {
        let out = dir.join(format!("r-{learned}"));
        ok(&["eval", "--learned", &p(learned), "--gold", &p("gold.tsv"), "--freq", &p("freq.tsv"), "--out", out.to_str().unwrap()]);
        tsv_map(&out.join("report.tsv"))
    };
    let same = report("gold.tsv");
    for k in ["precision", "recall", "weighted_precision", "weighted_recall"] {
        assert_eq!(same[k], "1.0000", "{k}");
    }
    let empty = report("empty.tsv");
    for k in ["precision", "recall", "weighted_precision", "weighted_recall"] {
        assert_eq!(empty[k], "0.0000", "{k}");
    }
    // One of two pairs right; the right one weighs 3 of 4.
    let wrong = report("wrong.tsv");
    assert_eq!(wrong["precision"], "0.5000");
    assert_eq!(wrong["recall"], "0.5000");
    assert_eq!(wrong["weighted_precision"], "0.7500");
    assert_eq!(wrong["weighted_recall"], "0.7500");
}

#[test]
fn active_smoke_run_shares_the_bootstrap() {
    let t = TempDir::new().unwrap();
    let g = small_synthetic(t.path(), "1.25");
    let out = t.path().join("active");
    ok(&[
        "active",
        "--corpus",
        g.join("corpus.txt").to_str().unwrap(),
        "--gold",
        g.join("gold.tsv").to_str().unwrap(),
        "--freq",
        g.join("freq.tsv").to_str().unwrap(),
        "--trials",
        "1",
        "--rounds",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let active = read(&out.join("active.tsv"));
    let random = read(&out.join("random.tsv"));
    assert_eq!(active.lines().count(), 3);
    assert_eq!(random.lines().count(), 3);
    assert_eq!(active.lines().nth(1), random.lines().nth(1));
    assert!(active.lines().nth(1).unwrap().starts_with("25\t"));
    assert!(active.lines().nth(2).unwrap().starts_with("35\t"));
    assert!(out.join("comparison.tsv").exists());
}

#[test]
fn count_interp_and_lics() {
    assert_eq!(ok(&["count-interp", "3", "3"]).trim(), "21");
    assert_eq!(ok(&["count-interp", "4", "2"]).trim(), "16");
    let l = ok(&[
        "lics",
        "(capital(S,C),largest(P,(state(S),population(S,P))))",
        "(high_point(S,P),largest(A,(state(S),area(S,A))))",
    ]);
    assert_eq!(l.trim(), "largest(_,state(_))");
}

#[test]
fn command_line_flags_override_config_file() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.cfg");
    fs::write(&cfg, "# learner settings\nseed = 3\npairs-per-phrase=7\nstrip-answer=true\n").unwrap();
    let out = t.path().join("run");
    let mut args = vec!["--config".to_string(), cfg.display().to_string()];
    args.extend(learn_args(out.to_str().unwrap(), &["--seed", "5"]));
    ok_owned(&args);
    let config = read(&out.join("config.txt"));
    assert!(config.contains("seed=5\n"), "{config}");
    assert!(config.contains("pairs-per-phrase=7\n"), "{config}");
    assert!(config.contains("strip-answer=true\n"), "{config}");
    assert!(config.starts_with("command=learn\n"));
}

fn dir_contents(d: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(d)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let t = TempDir::new().unwrap();
    let g = small_synthetic(t.path(), "1.25");
    let corpus = g.join("corpus.txt").display().to_string();
    let gold = g.join("gold.tsv").display().to_string();
    let mut runs = Vec::new();
    for (i, workers) in ["1", "3", "3"].iter().enumerate() {
        let base = t.path().join(format!("w{i}"));
        let learn = base.join("learn").display().to_string();
        let curve = base.join("curve").display().to_string();
        let active = base.join("active").display().to_string();
        ok(&["--workers", workers, "learn", "--corpus", &corpus, "--out", &learn]);
        ok(&["--workers", workers, "curve", "--corpus", &corpus, "--gold", &gold, "--sizes", "100,200", "--trials", "2", "--out", &curve]);
        ok(&["--workers", workers, "active", "--corpus", &corpus, "--gold", &gold, "--trials", "2", "--rounds", "2", "--out", &active]);
        runs.push(["learn", "curve", "active"].map(|s| dir_contents(&base.join(s))));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}
