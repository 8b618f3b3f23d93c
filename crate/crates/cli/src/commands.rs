//! The five pipeline commands. Each returns the JSON document that `main`
//! prints to stdout; artifacts land in the configured output directory.

use std::path::Path;

use serde_json::{json, Value};

use triage_core::assign::iterative_assign;
use triage_core::eval::run_all;
use triage_core::ingest::{effective_fixing_hours, filter_and_order, load_reports, BugReport, Dataset};
use triage_core::scoring::{build_score_matrix, FallbackPolicy, ScoreMatrix};
use triage_core::text::{build_corpus, encode_document, TokenizedDocument, Vocabulary};
use triage_core::topics::{fit_lda, label_documents, select_topic_count, ModelArtifact};

use crate::artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

fn read_reports(config: &RunConfig, path: &Path) -> Result<Vec<BugReport>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(load_reports(file, config.input_format())?)
}

fn keep(allowed: &Option<Vec<String>>, field: &str) -> bool {
    match allowed {
        None => true,
        Some(values) => values.iter().any(|v| v == field),
    }
}

pub fn cmd_ingest(config: &RunConfig) -> Result<Value, CliError> {
    let input = config.input_path();
    let reports = read_reports(config, &input)?;
    let loaded = reports.len();

    let screened: Vec<BugReport> = reports
        .into_iter()
        .filter(|r| {
            keep(&config.filter.status, &r.status)
                && keep(&config.filter.resolution, &r.resolution)
                && keep(&config.filter.issue_type, &r.issue_type)
        })
        .collect();
    let dropped_by_predicate = loaded - screened.len();

    let dataset = filter_and_order(screened, config.filter.min_fixes)?;
    let retained = dataset.len();

    let mut hours: Vec<f64> = Vec::with_capacity(retained);
    for report in &dataset.reports {
        hours.push(effective_fixing_hours(report)?);
    }
    let total: f64 = hours.iter().sum();
    let min = hours.iter().copied().fold(f64::INFINITY, f64::min);
    let max = hours.iter().copied().fold(0.0f64, f64::max);

    let artifact = artifacts::save(&config.out_dir(), artifacts::DATASET, &dataset)?;
    Ok(json!({
        "loaded": loaded,
        "dropped_by_predicate": dropped_by_predicate,
        "dropped_by_validation": loaded - dropped_by_predicate - retained,
        "retained": retained,
        "developers": dataset.developers.len(),
        "hours": { "min": min, "max": max, "mean": total / retained as f64, "total": total },
        "artifact": artifact.display().to_string(),
    }))
}

fn load_dataset(config: &RunConfig) -> Result<Dataset, CliError> {
    artifacts::load(&config.out_dir(), artifacts::DATASET)
}

fn corpus_for(
    config: &RunConfig,
    dataset: &Dataset,
) -> Result<(Vocabulary, Vec<TokenizedDocument>, Vec<TokenizedDocument>), CliError> {
    let stoplist = config.stoplist()?;
    let (vocab, docs) = build_corpus(dataset, &stoplist, config.text.min_df)?;
    let fit_docs: Vec<TokenizedDocument> =
        docs.iter().filter(|d| !d.is_empty()).cloned().collect();
    if fit_docs.is_empty() {
        return Err(CliError::Degenerate("every document dissolved during preprocessing".into()));
    }
    Ok((vocab, docs, fit_docs))
}

pub fn cmd_topics(config: &RunConfig) -> Result<Value, CliError> {
    let dataset = load_dataset(config)?;
    let (vocab, _, fit_docs) = corpus_for(config, &dataset)?;
    let (selected_k, curve) = select_topic_count(
        &vocab,
        &fit_docs,
        config.topics.k_min,
        config.topics.k_max,
        &config.lda_params(),
        config.topics.top_n,
    )?;
    let curve: Vec<Value> = curve
        .into_iter()
        .map(|(k, score)| json!({ "k": k, "coherence": score }))
        .collect();
    let body = json!({ "selected_k": selected_k, "curve": curve });
    let artifact = artifacts::save(&config.out_dir(), artifacts::COHERENCE, &body)?;
    Ok(json!({
        "selected_k": selected_k,
        "curve": body["curve"],
        "artifact": artifact.display().to_string(),
    }))
}

pub fn cmd_train(config: &RunConfig) -> Result<Value, CliError> {
    let dataset = load_dataset(config)?;
    let (vocab, docs, fit_docs) = corpus_for(config, &dataset)?;

    // Reuse a previous `topics` run when present; otherwise search here.
    let selected_k = match artifacts::load::<Value>(&config.out_dir(), artifacts::COHERENCE) {
        Ok(body) => body["selected_k"].as_u64().map(|k| k as usize),
        Err(_) => None,
    };
    let k = match selected_k {
        Some(k) if k >= config.topics.k_min && k <= config.topics.k_max => k,
        _ => {
            select_topic_count(
                &vocab,
                &fit_docs,
                config.topics.k_min,
                config.topics.k_max,
                &config.lda_params(),
                config.topics.top_n,
            )?
            .0
        }
    };

    let model = fit_lda(&vocab, &fit_docs, &config.lda_params().config_for(k))?;
    let labels = label_documents(&model, &docs);
    let scores = build_score_matrix(
        &dataset.reports,
        &labels,
        k,
        FallbackPolicy { penalty_factor: config.assignment.penalty_factor },
    )?;

    let out = config.out_dir();
    let vocab_path = artifacts::save(&out, artifacts::VOCABULARY, &vocab)?;
    let scores_path = artifacts::save(&out, artifacts::SCORES, &scores)?;
    // The model artifact carries its own schema version.
    let artifact = ModelArtifact::from_model(&model, &vocab);
    let model_path = out.join(artifacts::MODEL);
    std::fs::write(
        &model_path,
        serde_json::to_vec_pretty(&artifact)
            .map_err(|e| CliError::Schema(format!("serializing model: {e}")))?,
    )
    .map_err(|e| CliError::io(&model_path, e))?;
    // Audit exports.
    let csv_path = out.join("scores.csv");
    std::fs::write(&csv_path, scores.scores_csv()).map_err(|e| CliError::io(&csv_path, e))?;
    let support_path = out.join("support.csv");
    std::fs::write(&support_path, scores.support_csv()).map_err(|e| CliError::io(&support_path, e))?;

    Ok(json!({
        "k": k,
        "developers": scores.developers().len(),
        "documents": docs.len(),
        "vocabulary": vocab.len(),
        "top_words": artifact.top_words,
        "artifacts": [
            vocab_path.display().to_string(),
            model_path.display().to_string(),
            scores_path.display().to_string(),
            csv_path.display().to_string(),
            support_path.display().to_string(),
        ],
    }))
}

pub fn cmd_assign(config: &RunConfig, new_bugs: &Path) -> Result<Value, CliError> {
    let out = config.out_dir();
    let vocab: Vocabulary = artifacts::load(&out, artifacts::VOCABULARY)?;
    let scores: ScoreMatrix = artifacts::load(&out, artifacts::SCORES)?;
    let model_path = out.join(artifacts::MODEL);
    let raw = std::fs::read(&model_path).map_err(|e| CliError::io(&model_path, e))?;
    let model: ModelArtifact = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Schema(format!("model artifact unreadable: {e}")))?;
    model.check_compatible(&vocab)?;

    let mut bugs = read_reports(config, new_bugs)?;
    if bugs.is_empty() {
        return Err(CliError::Degenerate(format!("no bug reports in {}", new_bugs.display())));
    }
    bugs.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));

    let stoplist = config.stoplist()?;
    let docs: Vec<TokenizedDocument> = bugs
        .iter()
        .map(|r| encode_document(&vocab, &stoplist, &r.id, &r.description))
        .collect();
    let labels = model.label_heldout(&docs, config.topics.fold_in_sweeps);

    let developers = scores.developers().to_vec();
    let plan = iterative_assign(&labels, &developers, &scores)?;
    let artifact = artifacts::save(&out, artifacts::PLAN, &plan)?;

    if plan.load_spread() > 1 {
        return Err(CliError::Invariant(format!(
            "assignment plan load spread is {}",
            plan.load_spread()
        )));
    }

    Ok(json!({
        "assignments": plan.assignments,
        "load": plan.load,
        "batches": plan.batches,
        "artifact": artifact.display().to_string(),
    }))
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<Value, CliError> {
    let dataset = load_dataset(config)?;
    let report = run_all(&dataset, &config.pipeline_config()?)?;
    let artifact = artifacts::save(&config.out_dir(), artifacts::EVALUATION, &report)?;

    let mut body = serde_json::to_value(&report)
        .map_err(|e| CliError::Schema(format!("serializing report: {e}")))?;
    body["artifact"] = Value::String(artifact.display().to_string());

    if !report.all_folds_succeeded() {
        // The report is still written and printed; the exit code signals it.
        println!("{}", serde_json::to_string_pretty(&body).expect("valid json"));
        return Err(CliError::Degenerate(format!(
            "{} of {} folds failed",
            report.failures.len(),
            report.failures.len() + report.folds.len()
        )));
    }
    Ok(body)
}
