use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use lexind::active::{area_under, examples_to_reach, run_trial, ActiveConfig, CurvePoint, Strategy};
use lexind::candidates::{lics as lics_of, CandidateMode};
use lexind::corpus::{load_corpus, write_corpus, BackgroundLexicon, CorpusFormat, Example};
use lexind::eval::{
    curve_to_tsv, frequencies_from_tsv, frequencies_to_tsv, learning_curve, lexicon_stats, score_lexicon, CurveRow,
    EvalReport, Frequencies, Metrics,
};
use lexind::learner::{initial_candidates, learn_lexicon, lexicon_from_tsv, lexicon_to_tsv, LearnerConfig, LexiconEntry};
use lexind::synth::{gen_corpus, gen_gold_lexicon, phrase_frequencies};
use lexind::{count_interpretations, parse_term, rng};

use crate::args::{ActiveCmd, CorpusArgs, CountInterpCmd, CurveCmd, EvalCmd, GenCmd, GoldArgs, LearnCmd, LicsCmd};
use crate::UsageError;

pub struct Ctx {
    pub verbose: u8,
    /// The subcommand's resolved configuration as `key=value` lines.
    pub resolved: String,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(dir: &Path, ctx: &Ctx) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(dir, "config.txt", &ctx.resolved)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_inputs(c: &CorpusArgs) -> Result<(Vec<Example>, BackgroundLexicon)> {
    let corpus = load_corpus(&c.corpus, c.format, c.strip_answer)?;
    let bg = BackgroundLexicon::load(c.background.as_deref(), c.stoplist.as_deref())?;
    Ok((corpus, bg))
}

fn load_gold(g: &GoldArgs, corpus: &[Example]) -> Result<(Vec<LexiconEntry>, Frequencies)> {
    let gold = match &g.gold {
        Some(p) => lexicon_from_tsv(&read(p)?, &p.display().to_string())?,
        None => Vec::new(),
    };
    let freq = match &g.freq {
        Some(p) => frequencies_from_tsv(&read(p)?, &p.display().to_string())?,
        None => phrase_frequencies(corpus, 1),
    };
    Ok((gold, freq))
}

fn key_values(rows: &[(&str, String)]) -> String {
    rows.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
}

pub fn learn(c: &LearnCmd, ctx: &Ctx) -> Result<()> {
    let (corpus, bg) = load_inputs(&c.corpus)?;
    let cfg = c.learner.config();
    ctx.log(format!("learning from {} examples", corpus.len()));
    let out = learn_lexicon(&corpus, &bg, &cfg)?;
    let stats = lexicon_stats(&out.lexicon, corpus.len(), &out.uncovered);

    let mut counts = vec![(cfg.sampler.mode, out.initial_candidates)];
    if cfg.sampler.mode == CandidateMode::Fracture {
        let lics_cfg = LearnerConfig {
            sampler: lexind::candidates::SamplerConfig {
                mode: CandidateMode::Lics,
                ..cfg.sampler.clone()
            },
            ..cfg.clone()
        };
        counts.insert(0, (CandidateMode::Lics, initial_candidates(&corpus, &bg, &lics_cfg)?.len()));
    }

    out_dir(&c.out, ctx)?;
    write(&c.out, "lexicon.tsv", &lexicon_to_tsv(&out.lexicon))?;
    let mut trace = String::new();
    for step in &out.trace {
        trace.push_str(&serde_json::to_string(step)?);
        trace.push('\n');
    }
    write(&c.out, "trace.jsonl", &trace)?;
    write(
        &c.out,
        "stats.tsv",
        &key_values(&[
            ("examples", corpus.len().to_string()),
            ("entries", stats.n_entries.to_string()),
            ("ambiguity", format!("{:.4}", stats.ambiguity)),
            ("coverage_pct", format!("{:.4}", stats.coverage_pct)),
            ("uncovered_examples", out.uncovered.len().to_string()),
            ("steps", out.trace.len().to_string()),
            ("initial_candidates", out.initial_candidates.to_string()),
        ]),
    )?;
    let uncovered: String = out
        .uncovered
        .iter()
        .map(|u| format!("{}\t{}\n", u.example, u.remainder))
        .collect();
    write(&c.out, "uncovered.tsv", &uncovered)?;
    let report: String = counts.iter().map(|(m, n)| format!("{m}\t{n}\n")).collect();
    write(&c.out, "candidates.tsv", &format!("mode\tinitial_candidates\n{report}"))?;

    println!(
        "{} entries, coverage {:.2}% of {} examples, {} uncovered",
        stats.n_entries,
        stats.coverage_pct,
        corpus.len(),
        out.uncovered.len()
    );
    for (m, n) in &counts {
        println!("initial candidates ({m}): {n}");
    }
    Ok(())
}

pub fn gen(c: &GenCmd, ctx: &Ctx) -> Result<()> {
    let cfg = c.config();
    let gold = gen_gold_lexicon(&cfg)?;
    let corpus = gen_corpus(&gold, c.n_examples, &cfg)?;
    ctx.log(format!("generated {} entries and {} examples", gold.entries.len(), corpus.len()));
    out_dir(&c.out, ctx)?;
    let corpus_name = match c.format {
        CorpusFormat::PairedLines => "corpus.txt",
        CorpusFormat::RecordJson => "corpus.jsonl",
    };
    write(&c.out, corpus_name, &write_corpus(&corpus, c.format))?;
    write(&c.out, "gold.tsv", &lexicon_to_tsv(&gold.lexicon()))?;
    write(&c.out, "freq.tsv", &frequencies_to_tsv(&phrase_frequencies(&corpus, 1)))?;
    write(
        &c.out,
        "gold_stats.tsv",
        &key_values(&[
            ("words", gold.n_words().to_string()),
            ("entries", gold.entries.len().to_string()),
            ("noun_words", gold.nouns.len().to_string()),
            ("verb_words", gold.verbs.len().to_string()),
            ("function_words", gold.function_words.len().to_string()),
            ("ambiguity", format!("{:.4}", gold.ambiguity())),
            ("synonymy", format!("{:.4}", gold.synonymy())),
            ("examples", corpus.len().to_string()),
        ]),
    )?;
    println!(
        "{} words, {} entries (ambiguity {:.3}, synonymy {:.3}), {} examples",
        gold.n_words(),
        gold.entries.len(),
        gold.ambiguity(),
        gold.synonymy(),
        corpus.len()
    );
    Ok(())
}

fn report_tsv(r: &EvalReport) -> String {
    key_values(&[
        ("precision", format!("{:.4}", r.precision)),
        ("recall", format!("{:.4}", r.recall)),
        ("weighted_precision", format!("{:.4}", r.weighted_precision)),
        ("weighted_recall", format!("{:.4}", r.weighted_recall)),
        ("correct", r.n_correct.to_string()),
        ("learned", r.n_learned.to_string()),
        ("gold", r.n_gold.to_string()),
    ])
}

pub fn eval(c: &EvalCmd, ctx: &Ctx) -> Result<()> {
    let learned = lexicon_from_tsv(&read(&c.learned)?, &c.learned.display().to_string())?;
    let gold = lexicon_from_tsv(&read(&c.gold)?, &c.gold.display().to_string())?;
    let freq = frequencies_from_tsv(&read(&c.freq)?, &c.freq.display().to_string())?;
    let r = score_lexicon(&learned, &gold, &freq);
    println!("                 plain   weighted");
    println!("precision       {:6.2}%   {:6.2}%", 100.0 * r.precision, 100.0 * r.weighted_precision);
    println!("recall          {:6.2}%   {:6.2}%", 100.0 * r.recall, 100.0 * r.weighted_recall);
    println!("pairs: {} correct, {} learned, {} gold", r.n_correct, r.n_learned, r.n_gold);
    if let Some(dir) = &c.out {
        out_dir(dir, ctx)?;
        write(dir, "report.tsv", &report_tsv(&r))?;
    }
    Ok(())
}

fn print_curve(rows: &[CurveRow]) {
    println!("{:>6}  {:>7}  {:>7}  {:>7}  {:>7}  {:>8}", "size", "prec", "recall", "w.prec", "w.rec", "coverage");
    for r in rows {
        let m = &r.mean;
        println!(
            "{:>6}  {:>7.3}  {:>7.3}  {:>7.3}  {:>7.3}  {:>7.2}%",
            r.size, m.precision, m.recall, m.weighted_precision, m.weighted_recall, m.coverage_pct
        );
    }
}

pub fn curve(c: &CurveCmd, ctx: &Ctx) -> Result<()> {
    let (corpus, bg) = load_inputs(&c.corpus)?;
    let (gold, freq) = load_gold(&c.gold, &corpus)?;
    let sizes: Vec<usize> = if c.sizes.is_empty() {
        (1..=corpus.len() / 100).map(|i| i * 100).collect()
    } else {
        c.sizes.clone()
    };
    if sizes.is_empty() {
        return Err(UsageError("no training-set sizes; pass --sizes".into()).into());
    }
    ctx.log(format!("{} sizes x {} trials", sizes.len(), c.trials));
    let rows = learning_curve(&corpus, &gold, &freq, &bg, &sizes, c.trials, c.learner.seed, &c.learner.config())?;
    out_dir(&c.out, ctx)?;
    write(&c.out, "curve.tsv", &curve_to_tsv(&rows))?;
    print_curve(&rows);
    Ok(())
}

/// Per-point mean and spread over trials; trials are cut to the shortest.
fn curve_rows(trials: &[Vec<CurvePoint>]) -> Vec<CurveRow> {
    let len = trials.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let runs: Vec<Metrics> = trials.iter().map(|t| t[i].metrics).collect();
            let (mean, std) = Metrics::summarize(&runs);
            CurveRow {
                size: trials[0][i].n_annotated,
                trials: trials.len(),
                mean,
                std,
            }
        })
        .collect()
}

fn recall_points(points: &[CurvePoint]) -> Vec<(f64, f64)> {
    points
        .iter()
        .map(|p| (p.n_annotated as f64, p.metrics.weighted_recall))
        .collect()
}

pub fn active(c: &ActiveCmd, ctx: &Ctx) -> Result<()> {
    let (corpus, bg) = load_inputs(&c.corpus)?;
    let (gold, freq) = load_gold(&c.gold, &corpus)?;
    if c.trials == 0 {
        return Err(UsageError("--trials must be at least 1".into()).into());
    }
    let learner = c.learner.config();
    let strategies = c.strategy.strategies();
    let jobs: Vec<(u64, Strategy)> = (0..c.trials as u64)
        .flat_map(|t| strategies.iter().map(move |&s| (t, s)))
        .collect();
    ctx.log(format!("{} runs of {} rounds", jobs.len(), c.rounds));
    let curves: Vec<Vec<CurvePoint>> = jobs
        .par_iter()
        .map(|&(t, strategy)| {
            let cfg = ActiveConfig {
                n_bootstrap: c.bootstrap,
                batch_k: c.batch,
                rounds: c.rounds,
                seed: rng::derive_seed(c.learner.seed, t),
            };
            run_trial(&corpus, &gold, &freq, &bg, &cfg, strategy, &learner)
        })
        .collect::<lexind::Result<_>>()?;

    out_dir(&c.out, ctx)?;
    let mut per_trial = String::from("trial\tstrategy\tauc_weighted_recall\tfinal_annotated\tfinal_weighted_recall\n");
    for ((t, s), curve) in jobs.iter().zip(&curves) {
        let pts = recall_points(curve);
        let (n, r) = pts.last().copied().unwrap_or((0.0, 0.0));
        let _ = writeln!(per_trial, "{t}\t{s}\t{:.4}\t{n}\t{r:.4}", area_under(&pts));
    }
    write(&c.out, "trials.tsv", &per_trial)?;
    for &s in &strategies {
        let mine: Vec<Vec<CurvePoint>> = jobs
            .iter()
            .zip(&curves)
            .filter(|((_, js), _)| *js == s)
            .map(|(_, c)| c.clone())
            .collect();
        let rows = curve_rows(&mine);
        write(&c.out, &format!("{s}.tsv"), &curve_to_tsv(&rows))?;
        println!("{s}:");
        print_curve(&rows);
    }
    if strategies.len() == 2 {
        let (mut wins, mut active_need, mut random_need) = (0usize, 0.0, 0.0);
        for pair in curves.chunks(2) {
            let (a, r) = (recall_points(&pair[0]), recall_points(&pair[1]));
            wins += usize::from(area_under(&a) > area_under(&r));
            let (budget, target) = r.last().copied().unwrap_or((0.0, 0.0));
            active_need += examples_to_reach(&a, target).unwrap_or(budget);
            random_need += budget;
        }
        let saving = if random_need > 0.0 { 100.0 * (1.0 - active_need / random_need) } else { 0.0 };
        write(
            &c.out,
            "comparison.tsv",
            &key_values(&[
                ("trials", c.trials.to_string()),
                ("active_auc_wins", wins.to_string()),
                ("mean_examples_active", format!("{:.2}", active_need / c.trials as f64)),
                ("mean_examples_random", format!("{:.2}", random_need / c.trials as f64)),
                ("saving_pct", format!("{saving:.2}")),
            ]),
        )?;
        println!(
            "active beats random on recall area in {wins}/{} trials; {saving:.1}% fewer examples to random's final recall",
            c.trials
        );
    }
    Ok(())
}

pub fn count_interp(c: &CountInterpCmd) -> Result<()> {
    println!("{}", count_interpretations(c.phrases, c.vertices));
    Ok(())
}

pub fn lics(c: &LicsCmd) -> Result<()> {
    let a = parse_term(&c.first).context("first term")?;
    let b = parse_term(&c.second).context("second term")?;
    for f in lics_of(&a, &b) {
        println!("{}", f.render());
    }
    Ok(())
}
