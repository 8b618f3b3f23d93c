//! Rolling-origin evaluation: nine chronological train/test folds, each
//! refitting topics and scores on its training prefix only, then assigning
//! the next slice and comparing predicted hours and load against ground
//! truth.

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::{iterative_assign, AssignError, AssignmentPlan};
use crate::ingest::{effective_fixing_hours, filter_and_order, Dataset, IngestError};
use crate::scoring::{build_score_matrix, FallbackPolicy, ScoreError};
use crate::text::{build_corpus, default_stoplist, encode_document, TextError, TokenizedDocument};
use crate::topics::{
    fit_lda, label_documents, label_heldout, select_topic_count, LdaParams, ModelArtifact,
    TopicError, DEFAULT_FOLD_IN_SWEEPS,
};
use crate::{fnv1a, FNV_OFFSET};

/// Caveat attached to every report: predictions are historical means.
pub const REPORT_NOTE: &str =
    "predicted_total_hours sums historical per-topic means; realized fixing times may differ";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset of {len} reports is too small to fold (needs at least 20)")]
    DatasetTooSmall { len: usize },
    #[error("fold {fold_index} does not fit a dataset of {len} reports")]
    InvalidFold { fold_index: usize, len: usize },
    #[error("fold {fold_index}: no developer meets min_fixes={min_fixes} in the training slice")]
    NoEligibleDevelopers { fold_index: usize, min_fixes: usize },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Assign(#[from] AssignError),
}

/// One train/test split: training is a growing prefix, testing the next
/// tenth of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold_index: usize,
    pub train_start: usize,
    pub train_end: usize,
    pub test_start: usize,
    pub test_end: usize,
}

impl FoldSpec {
    pub fn train_range(&self) -> Range<usize> {
        self.train_start..self.train_end
    }

    pub fn test_range(&self) -> Range<usize> {
        self.test_start..self.test_end
    }
}

/// Folds 1..=9 over tenths of the dataset; records past `10 * (len / 10)`
/// are unused so every test slice has equal size.
pub fn make_folds(dataset: &Dataset) -> Result<Vec<FoldSpec>, EvalError> {
    let len = dataset.len();
    if len < 20 {
        return Err(EvalError::DatasetTooSmall { len });
    }
    let s = len / 10;
    Ok((1..=9)
        .map(|k| FoldSpec {
            fold_index: k,
            train_start: 0,
            train_end: k * s,
            test_start: k * s,
            test_end: (k + 1) * s,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    pub min: u32,
    pub max: u32,
    pub mean: f64,
}

impl LoadStats {
    fn from_counts<I: IntoIterator<Item = u32>>(counts: I) -> Self {
        let counts: Vec<u32> = counts.into_iter().collect();
        if counts.is_empty() {
            return LoadStats { min: 0, max: 0, mean: 0.0 };
        }
        let min = *counts.iter().min().unwrap();
        let max = *counts.iter().max().unwrap();
        let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64;
        LoadStats { min, max, mean }
    }

    pub fn spread(&self) -> u32 {
        self.max - self.min
    }
}

/// Per-fold outcome metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub k_selected: usize,
    pub developer_count: usize,
    pub real_total_hours: f64,
    pub predicted_total_hours: f64,
    pub time_reduction_pct: f64,
    pub optimized_load: LoadStats,
    pub real_load: LoadStats,
}

/// Hashes of the train-side artifacts; equal hashes certify that the test
/// slice never leaked into vocabulary, model, or scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldArtifacts {
    pub vocab_hash: u64,
    pub model_hash: u64,
    pub score_hash: u64,
}

/// Full output of one fold, including the assignment plan.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRun {
    pub report: FoldReport,
    pub artifacts: FoldArtifacts,
    pub plan: AssignmentPlan,
    pub real_load: BTreeMap<String, u32>,
}

/// Everything the pipeline needs, gatherable from one config file.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub min_fixes: usize,
    pub stoplist: HashSet<String>,
    pub min_df: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub lda: LdaParams,
    pub coherence_top_n: usize,
    pub fold_in_sweeps: usize,
    pub penalty_factor: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_fixes: 10,
            stoplist: default_stoplist(),
            min_df: 2,
            k_min: 1,
            k_max: 15,
            lda: LdaParams::default(),
            coherence_top_n: 10,
            fold_in_sweeps: DEFAULT_FOLD_IN_SWEEPS,
            penalty_factor: 1.5,
        }
    }
}

pub fn run_fold(
    dataset: &Dataset,
    fold: &FoldSpec,
    config: &PipelineConfig,
) -> Result<FoldReport, EvalError> {
    run_fold_detailed(dataset, fold, config).map(|run| run.report)
}

pub fn run_fold_detailed(
    dataset: &Dataset,
    fold: &FoldSpec,
    config: &PipelineConfig,
) -> Result<FoldRun, EvalError> {
    if fold.test_end > dataset.len() || fold.train_end > fold.test_start {
        return Err(EvalError::InvalidFold { fold_index: fold.fold_index, len: dataset.len() });
    }
    let train_slice = &dataset.reports[fold.train_range()];
    let test_slice = &dataset.reports[fold.test_range()];

    // Developer eligibility is recomputed from the training slice alone;
    // test reports stay assignable even when their ground-truth assignee
    // did not make the cut.
    let train =
        filter_and_order(train_slice.to_vec(), config.min_fixes).map_err(|e| match e {
            IngestError::EmptyDataset => EvalError::NoEligibleDevelopers {
                fold_index: fold.fold_index,
                min_fixes: config.min_fixes,
            },
            other => EvalError::from(other),
        })?;

    let (vocab, train_docs) = build_corpus(&train, &config.stoplist, config.min_df)?;
    let fit_docs: Vec<TokenizedDocument> =
        train_docs.iter().filter(|d| !d.is_empty()).cloned().collect();
    if fit_docs.is_empty() {
        return Err(EvalError::Text(TextError::EmptyVocabulary));
    }

    let (k, _curve) = select_topic_count(
        &vocab,
        &fit_docs,
        config.k_min,
        config.k_max,
        &config.lda,
        config.coherence_top_n,
    )?;
    let model = fit_lda(&vocab, &fit_docs, &config.lda.config_for(k))?;
    let train_labels = label_documents(&model, &train_docs);

    let test_docs: Vec<TokenizedDocument> = test_slice
        .iter()
        .map(|r| encode_document(&vocab, &config.stoplist, &r.id, &r.description))
        .collect();
    let test_labels = label_heldout(&model, &test_docs, config.fold_in_sweeps);

    let scores = build_score_matrix(
        &train.reports,
        &train_labels,
        k,
        FallbackPolicy { penalty_factor: config.penalty_factor },
    )?;
    let developers = scores.developers().to_vec();
    let plan = iterative_assign(&test_labels, &developers, &scores)?;

    let mut real_total_hours = 0.0;
    for report in test_slice {
        real_total_hours += effective_fixing_hours(report)?;
    }
    let predicted_total_hours: f64 = plan.assignments.iter().map(|a| a.predicted_hours).sum();
    let time_reduction_pct = if real_total_hours == 0.0 {
        0.0
    } else {
        100.0 * (real_total_hours - predicted_total_hours) / real_total_hours
    };

    let mut real_load: BTreeMap<String, u32> =
        developers.iter().map(|d| (d.clone(), 0)).collect();
    for report in test_slice {
        if let Some(count) = real_load.get_mut(&report.assignee) {
            *count += 1;
        }
    }

    let artifact = ModelArtifact::from_model(&model, &vocab);
    let model_hash = fnv1a(FNV_OFFSET, &serde_json::to_vec(&artifact).expect("serializable"));
    let artifacts = FoldArtifacts {
        vocab_hash: vocab.content_hash(),
        model_hash,
        score_hash: scores.content_hash(),
    };

    let report = FoldReport {
        fold_index: fold.fold_index,
        k_selected: k,
        developer_count: developers.len(),
        real_total_hours,
        predicted_total_hours,
        time_reduction_pct,
        optimized_load: LoadStats::from_counts(plan.load.values().copied()),
        real_load: LoadStats::from_counts(real_load.values().copied()),
    };
    Ok(FoldRun { report, artifacts, plan, real_load })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFailure {
    pub fold_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub completed_folds: usize,
    pub mean_time_reduction_pct: f64,
    pub worst_load_spread: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub folds: Vec<FoldReport>,
    pub failures: Vec<FoldFailure>,
    pub summary: Summary,
    pub note: String,
}

impl EvaluationReport {
    pub fn all_folds_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Mean reduction and worst optimized-load spread over completed folds.
pub fn summarize(folds: &[FoldReport]) -> Summary {
    let completed_folds = folds.len();
    let mean_time_reduction_pct = if completed_folds == 0 {
        0.0
    } else {
        folds.iter().map(|f| f.time_reduction_pct).sum::<f64>() / completed_folds as f64
    };
    let worst_load_spread = folds.iter().map(|f| f.optimized_load.spread()).max().unwrap_or(0);
    Summary { completed_folds, mean_time_reduction_pct, worst_load_spread }
}

/// Run the nine folds, collecting per-fold failures instead of aborting.
pub fn run_all(dataset: &Dataset, config: &PipelineConfig) -> Result<EvaluationReport, EvalError> {
    let folds = make_folds(dataset)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for fold in &folds {
        match run_fold(dataset, fold, config) {
            Ok(report) => reports.push(report),
            Err(error) => failures.push(FoldFailure {
                fold_index: fold.fold_index,
                error: error.to_string(),
            }),
        }
    }
    let summary = summarize(&reports);
    Ok(EvaluationReport { folds: reports, failures, summary, note: REPORT_NOTE.to_string() })
}
