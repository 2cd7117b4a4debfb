use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::{Command, RunConfig};
use crate::baseline::{train_baseline, LinearClassifier};
use crate::corpus::{fleiss_kappa, generate_synthetic, Corpus, RatingMatrix};
use crate::error::{Error, Result};
use crate::eval::{
    compute_metrics, crossval, fold_records, format_table, ha_grid_search, paired_t_test, AggregateMetrics, Method,
    TableRow,
};
use crate::features::HaConfig;
use crate::inference::{annotate_corpus, DecisionRule};
use crate::lspi::{train_with_report, Policy};
use crate::model_file::{peek_kind, ModelKind};
use crate::rng::substream_seed;

const DEFAULT_OUT: &str = "acdrl-out";

pub(super) fn dispatch(command: &Command, cfg: RunConfig) -> Result<()> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out)?;
    let mut manifest = RunConfig {
        command: Some(command.name().to_string()),
        ..RunConfig::default()
    };
    match command {
        Command::Gen { .. } => gen(&cfg, &out, &mut manifest)?,
        Command::Train { .. } => train(&cfg, &out, &mut manifest)?,
        Command::Annotate { .. } => annotate(&cfg, &out, &mut manifest)?,
        Command::Crossval { .. } => run_crossval(&cfg, &out, &mut manifest)?,
        Command::Grid { .. } => grid(&cfg, &out, &mut manifest)?,
        Command::Kappa { .. } => kappa(&cfg, &out, &mut manifest)?,
    }
    fs::write(out.join("manifest.json"), manifest.to_line() + "\n")?;
    Ok(())
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path)?;
    Corpus::parse(std::io::BufReader::new(file))
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn gen(cfg: &RunConfig, out: &Path, manifest: &mut RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let synth = cfg.synth()?;
    let corpus = generate_synthetic(&synth, seed)?;
    let path = out.join("corpus.jsonl");
    corpus.write_canonical(BufWriter::new(fs::File::create(&path)?))?;
    manifest.seed = Some(seed);
    manifest.set_synth(&synth);
    println!(
        "documents: {}, clauses: {}, labels: {} -> {}",
        corpus.documents.len(),
        corpus.num_clauses(),
        corpus.num_labels(),
        path.display()
    );
    Ok(())
}

fn single_method(cfg: &RunConfig) -> Result<Method> {
    Ok(cfg.methods(false)?[0])
}

fn train(cfg: &RunConfig, out: &Path, manifest: &mut RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let corpus_path = cfg.require_path("corpus", &cfg.corpus)?;
    let corpus = load_corpus(&corpus_path)?;
    let method = single_method(cfg)?;
    let features = cfg.features()?;
    let ha = cfg.ha();
    let model_path = out.join("model.bin");
    manifest.seed = Some(seed);
    manifest.corpus = Some(corpus_path);
    manifest.method = Some(method.name().to_string());
    manifest.set_features(&features);
    manifest.set_ha(&ha);
    match method {
        Method::Rl => {
            let lspi = cfg.lspi(substream_seed(seed, "explore", 0))?;
            let (policy, report) = train_with_report(&corpus, &lspi, &features, &ha)?;
            policy.save(&model_path)?;
            fs::write(out.join("train_report.json"), serde_json::to_string(&report)? + "\n")?;
            manifest.set_lspi(&lspi);
            println!(
                "trained policy on {} samples ({} LSTDQ solves) -> {}",
                report.samples,
                report.lstdq_solves,
                model_path.display()
            );
        }
        Method::Baseline => {
            let hyper = cfg.baseline(substream_seed(seed, "baseline", 0))?;
            let model = train_baseline(&corpus, &hyper, &features, &ha)?;
            model.save(&model_path)?;
            fs::write(out.join("train_report.json"), serde_json::to_string(&model.metadata)? + "\n")?;
            manifest.set_baseline(&hyper);
            for w in &model.metadata.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "trained baseline on {} vectors in {} epochs -> {}",
                model.metadata.training_vectors,
                model.metadata.epochs,
                model_path.display()
            );
        }
    }
    Ok(())
}

fn load_rule(path: &Path) -> Result<Box<dyn DecisionRule + Sync>> {
    let bytes = fs::read(path)?;
    Ok(match peek_kind(&bytes)? {
        ModelKind::Policy => Box::new(Policy::from_bytes(&bytes)?),
        ModelKind::Baseline => Box::new(LinearClassifier::from_bytes(&bytes)?),
    })
}

/// Rejects explicitly configured feature or HA settings that disagree with the model.
fn check_declared(cfg: &RunConfig, rule: &dyn DecisionRule) -> Result<()> {
    let ha = rule.ha_config();
    let features = rule.feature_config();
    let mut clashes = Vec::new();
    if cfg.n_l.is_some_and(|v| v != ha.n_l) || cfg.n_c.is_some_and(|v| v != ha.n_c) {
        clashes.push(format!("HA window {} declared, model was trained at {}", cfg.ha(), ha));
    }
    if cfg.encoding.is_some_and(|e| e != ha.encoding) {
        clashes.push("encoding".to_string());
    }
    if cfg.hash_dim.is_some_and(|v| v != features.hash_dim) {
        clashes.push("hash_dim".to_string());
    }
    if cfg.token_count_cap.is_some_and(|v| v != features.token_count_cap) {
        clashes.push("token_count_cap".to_string());
    }
    if cfg.marker_lexicon.as_ref().is_some_and(|m| *m != features.marker_lexicon) {
        clashes.push("marker_lexicon".to_string());
    }
    if clashes.is_empty() {
        Ok(())
    } else {
        Err(Error::ConfigMismatch(clashes.join("; ")))
    }
}

#[derive(Serialize)]
struct DocumentReport<'a> {
    id: &'a str,
    rounds_used: usize,
    converged: bool,
}

fn annotate(cfg: &RunConfig, out: &Path, manifest: &mut RunConfig) -> Result<()> {
    let corpus_path = cfg.require_path("corpus", &cfg.corpus)?;
    let model_path = cfg.require_path("model", &cfg.model)?;
    let corpus = load_corpus(&corpus_path)?;
    let rule = load_rule(&model_path)?;
    check_declared(cfg, rule.as_ref())?;
    let rounds = cfg.rounds()?;
    let results = annotate_corpus(rule.as_ref(), &corpus, rounds)?;

    let labels: Vec<Vec<usize>> = results.iter().map(|r| r.annotations.clone()).collect();
    let annotated = corpus.with_labels(&labels)?;
    annotated.write_canonical(BufWriter::new(fs::File::create(out.join("annotated.jsonl"))?))?;
    write_lines(
        &out.join("report.jsonl"),
        corpus.documents.iter().zip(&results).map(|(d, r)| DocumentReport {
            id: &d.id,
            rounds_used: r.rounds_used,
            converged: r.converged,
        }),
    )?;

    manifest.seed = cfg.seed;
    manifest.corpus = Some(corpus_path);
    manifest.model = Some(model_path);
    manifest.rounds = Some(rounds);
    manifest.set_features(rule.feature_config());
    manifest.set_ha(&rule.ha_config());

    let converged = results.iter().filter(|r| r.converged).count();
    println!("annotated {} documents, {} converged within {} rounds", results.len(), converged, rounds);
    let gold: Option<Vec<usize>> = corpus
        .documents
        .iter()
        .flat_map(|d| d.clauses.iter().map(|c| c.gold_label))
        .collect();
    if let (Some(gold), false) = (gold, results.is_empty()) {
        let pred: Vec<usize> = labels.concat();
        let m = compute_metrics(&gold, &pred, &corpus.label_set)?;
        println!("accuracy {:.4}, macro-F1 {:.4} against the corpus labels", m.accuracy, m.macro_f1);
    }
    Ok(())
}

fn row_name(method: Method, ha: &HaConfig) -> String {
    format!("{} {}", method.name(), ha)
}

fn run_crossval(cfg: &RunConfig, out: &Path, manifest: &mut RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let corpus_path = cfg.require_path("corpus", &cfg.corpus)?;
    let corpus = load_corpus(&corpus_path)?;
    let methods = cfg.methods(true)?;
    let ha = cfg.ha();
    let exp = cfg.experiment(seed)?;

    let runs = methods
        .iter()
        .map(|&m| crossval(&corpus, m, &ha, &exp).map(|folds| (m, folds)))
        .collect::<Result<Vec<_>>>()?;
    write_lines(
        &out.join("records.jsonl"),
        runs.iter()
            .flat_map(|(m, folds)| fold_records(*m, &ha, folds, &corpus.label_set)),
    )?;
    let aggregates: Vec<AggregateMetrics> = runs
        .iter()
        .map(|(_, folds)| AggregateMetrics::from_folds(folds.iter().map(|f| &f.metrics)).expect("folds exist"))
        .collect();
    let rows: Vec<TableRow> = runs
        .iter()
        .zip(&aggregates)
        .map(|((m, _), a)| TableRow {
            name: row_name(*m, &ha),
            aggregate: a,
        })
        .collect();
    let table = format_table(&corpus.label_set, &rows);
    fs::write(out.join("table.txt"), &table)?;
    print!("{table}");
    println!("{} folds per method", runs[0].1.len());

    if let [(a, fa), (b, fb)] = runs.as_slice() {
        let acc = |f: &[crate::eval::FoldResult]| f.iter().map(|r| r.metrics.accuracy).collect::<Vec<_>>();
        let cmp = paired_t_test(&acc(fa), &acc(fb), exp.alpha)?;
        let line = json!({ "a": a.name(), "b": b.name(), "accuracy": cmp });
        fs::write(out.join("comparison.json"), line.to_string() + "\n")?;
        println!(
            "{} vs {}: t = {:.4}, p = {:.4}{}",
            a.name(),
            b.name(),
            cmp.t_statistic,
            cmp.p_value,
            if cmp.significant { " (significant)" } else { "" }
        );
    }

    manifest.corpus = Some(corpus_path);
    manifest.method = cfg.method.clone().or(Some("rl".into()));
    manifest.set_ha(&ha);
    manifest.set_experiment(&exp);
    Ok(())
}

fn grid(cfg: &RunConfig, out: &Path, manifest: &mut RunConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let corpus_path = cfg.require_path("corpus", &cfg.corpus)?;
    let corpus = load_corpus(&corpus_path)?;
    let method = single_method(cfg)?;
    let spec = cfg.grid()?;
    let exp = cfg.experiment(seed)?;
    let result = ha_grid_search(&corpus, &spec, method, &exp)?;

    write_lines(
        &out.join("records.jsonl"),
        result
            .cells
            .iter()
            .flat_map(|c| fold_records(method, &c.ha, &c.folds, &corpus.label_set)),
    )?;
    write_lines(
        &out.join("corners.jsonl"),
        result.corners.iter().map(|c| {
            json!({
                "a": [c.a.n_l, c.a.n_c],
                "b": [c.b.n_l, c.b.n_c],
                "accuracy": c.accuracy,
            })
        }),
    )?;
    let rows: Vec<TableRow> = result
        .cells
        .iter()
        .map(|c| TableRow {
            name: row_name(method, &c.ha),
            aggregate: &c.aggregate,
        })
        .collect();
    let table = format_table(&corpus.label_set, &rows);
    fs::write(out.join("table.txt"), &table)?;
    print!("{table}");
    println!("{} cells", result.cells.len());
    for c in &result.corners {
        println!(
            "{} vs {}: accuracy {:.4} vs {:.4}, p = {:.4}{}",
            c.a,
            c.b,
            c.accuracy.mean_a,
            c.accuracy.mean_b,
            c.accuracy.p_value,
            if c.accuracy.significant { " (significant)" } else { "" }
        );
    }

    manifest.corpus = Some(corpus_path);
    manifest.method = Some(method.name().to_string());
    manifest.grid_n_l = Some(format!("{}..{}", spec.n_l.start(), spec.n_l.end()));
    manifest.grid_n_c = Some(format!("{}..{}", spec.n_c.start(), spec.n_c.end()));
    manifest.encoding = Some(spec.encoding);
    manifest.set_experiment(&exp);
    Ok(())
}

fn read_ratings(path: &Path) -> Result<RatingMatrix> {
    let file = fs::File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<u64> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("expected an array of counts: {e}"),
        })?;
        rows.push(row);
    }
    RatingMatrix::new(rows)
}

fn kappa(cfg: &RunConfig, out: &Path, manifest: &mut RunConfig) -> Result<()> {
    let path = cfg.require_path("ratings", &cfg.ratings)?;
    let ratings = read_ratings(&path)?;
    let k = fleiss_kappa(&ratings);
    let record = json!({
        "kappa": k,
        "items": ratings.items(),
        "categories": ratings.categories(),
        "raters_per_item": ratings.raters_per_item(),
    });
    fs::write(out.join("kappa.json"), record.to_string() + "\n")?;
    println!("{k:?}");
    manifest.seed = cfg.seed;
    manifest.ratings = Some(path);
    Ok(())
}
