//! Topic modeling over tokenized bug reports: collapsed Gibbs LDA, UMass
//! coherence, topic-count selection, argmax labeling, and held-out inference.
//!
//! Fitting is fully seeded: identical corpus, config, and seed reproduce the
//! assignments, counts, and theta bit for bit.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{TokenizedDocument, Vocabulary};
use crate::{fnv1a, FNV_OFFSET};

/// Sweeps used when folding held-out documents into a fitted model.
pub const DEFAULT_FOLD_IN_SWEEPS: usize = 50;

/// Schema version stamped into persisted model artifacts.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document `{bug_id}` is empty; exclude empty documents before fitting")]
    EmptyDocument { bug_id: String },
    #[error("topic range is invalid: k_min={k_min}, k_max={k_max}")]
    InvalidRange { k_min: usize, k_max: usize },
    #[error("model artifact has schema version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("vocabulary hash {found:#018x} does not match the model's {expected:#018x}")]
    VocabularyMismatch { found: u64, expected: u64 },
}

/// Sampler configuration for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Average smoothed theta over post-burn-in sweeps instead of taking the
    /// final sweep's point estimate.
    pub average_theta: bool,
}

impl LdaConfig {
    /// Conventional defaults for a given topic count: alpha = 50/K, beta = 0.01.
    pub fn for_k(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed,
            average_theta: false,
        }
    }

    fn validate(&self) -> Result<(), TopicError> {
        if self.k < 1 {
            return Err(TopicError::InvalidConfig("k must be at least 1".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha) || !positive(self.beta) {
            return Err(TopicError::InvalidConfig("alpha and beta must be positive".into()));
        }
        if self.iterations < 1 {
            return Err(TopicError::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(TopicError::InvalidConfig("burn_in must be below iterations".into()));
        }
        Ok(())
    }
}

/// Knobs shared across a topic-count search; `config_for` pins them to one K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    /// Document-topic concentration; `None` selects 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub average_theta: bool,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed: 42,
            average_theta: false,
        }
    }
}

impl LdaParams {
    pub fn config_for(&self, k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.alpha.unwrap_or(50.0 / k.max(1) as f64),
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            average_theta: self.average_theta,
        }
    }
}

/// Fitted LDA state over one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub vocab_size: usize,
    doc_ids: Vec<String>,
    doc_index: HashMap<String, usize>,
    pub doc_topic_counts: Vec<Vec<u32>>,
    pub topic_word_counts: Vec<Vec<u32>>,
    pub topic_totals: Vec<u64>,
    pub theta: Vec<Vec<f64>>,
    pub z: Vec<Vec<u32>>,
}

/// Argmax topic for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub bug_id: String,
    pub topic: usize,
    pub weight: f64,
}

impl TopicModel {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn theta_row(&self, bug_id: &str) -> Option<&[f64]> {
        self.doc_index.get(bug_id).map(|&i| self.theta[i].as_slice())
    }

    /// Check both count-conservation identities.
    pub fn verify_counts(&self, docs: &[TokenizedDocument]) -> Result<(), String> {
        for (m, doc) in docs.iter().enumerate() {
            let sum: u64 = self.doc_topic_counts[m].iter().map(|&c| c as u64).sum();
            if sum != doc.tokens.len() as u64 {
                return Err(format!(
                    "doc {} topic counts sum to {sum}, expected {}",
                    doc.bug_id,
                    doc.tokens.len()
                ));
            }
        }
        for k in 0..self.config.k {
            let sum: u64 = self.topic_word_counts[k].iter().map(|&c| c as u64).sum();
            if sum != self.topic_totals[k] {
                return Err(format!(
                    "topic {k} word counts sum to {sum}, expected {}",
                    self.topic_totals[k]
                ));
            }
        }
        Ok(())
    }

    /// Top `n` word ids of a topic by descending count, ties toward lower ids.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<u32> {
        let mut ids: Vec<u32> = (0..self.vocab_size as u32).collect();
        ids.sort_by(|&a, &b| {
            self.topic_word_counts[topic][b as usize]
                .cmp(&self.topic_word_counts[topic][a as usize])
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids
    }
}

fn smoothed_theta_row(counts: &[u32], doc_len: usize, k: usize, alpha: f64) -> Vec<f64> {
    let denom = doc_len as f64 + k as f64 * alpha;
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

fn sample_index(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Fit LDA by collapsed Gibbs sampling. Every document must be nonempty;
/// callers exclude dissolved documents and label them uniformly instead.
pub fn fit_lda(
    vocab: &Vocabulary,
    docs: &[TokenizedDocument],
    config: &LdaConfig,
) -> Result<TopicModel, TopicError> {
    config.validate()?;
    if docs.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    for doc in docs {
        if doc.is_empty() {
            return Err(TopicError::EmptyDocument { bug_id: doc.bug_id.clone() });
        }
        debug_assert!(doc.tokens.iter().all(|&t| (t as usize) < vocab.len()));
    }

    let k = config.k;
    let v = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut doc_topic_counts = vec![vec![0u32; k]; docs.len()];
    let mut topic_word_counts = vec![vec![0u32; v]; k];
    let mut topic_totals = vec![0u64; k];
    let mut z: Vec<Vec<u32>> = docs
        .iter()
        .map(|doc| doc.tokens.iter().map(|_| rng.random_range(0..k) as u32).collect())
        .collect();
    for (d, doc) in docs.iter().enumerate() {
        for (i, &w) in doc.tokens.iter().enumerate() {
            let t = z[d][i] as usize;
            doc_topic_counts[d][t] += 1;
            topic_word_counts[t][w as usize] += 1;
            topic_totals[t] += 1;
        }
    }

    let v_beta = v as f64 * config.beta;
    let mut weights = vec![0.0f64; k];
    let mut theta_acc: Option<Vec<Vec<f64>>> = if config.average_theta {
        Some(vec![vec![0.0; k]; docs.len()])
    } else {
        None
    };
    let mut averaged_sweeps = 0usize;

    for sweep in 0..config.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &word) in doc.tokens.iter().enumerate() {
                let w = word as usize;
                let old = z[d][i] as usize;
                doc_topic_counts[d][old] -= 1;
                topic_word_counts[old][w] -= 1;
                topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let weight = (doc_topic_counts[d][t] as f64 + config.alpha)
                        * (topic_word_counts[t][w] as f64 + config.beta)
                        / (topic_totals[t] as f64 + v_beta);
                    weights[t] = weight;
                    total += weight;
                }
                let new = sample_index(&weights, total, &mut rng);
                z[d][i] = new as u32;
                doc_topic_counts[d][new] += 1;
                topic_word_counts[new][w] += 1;
                topic_totals[new] += 1;
            }
        }

        if let Some(acc) = theta_acc.as_mut() {
            if sweep >= config.burn_in {
                for (d, doc) in docs.iter().enumerate() {
                    let row = smoothed_theta_row(&doc_topic_counts[d], doc.tokens.len(), k, config.alpha);
                    for (slot, value) in acc[d].iter_mut().zip(row) {
                        *slot += value;
                    }
                }
                averaged_sweeps += 1;
            }
        }

        #[cfg(debug_assertions)]
        {
            let probe = TopicModel {
                config: config.clone(),
                vocab_size: v,
                doc_ids: Vec::new(),
                doc_index: HashMap::new(),
                doc_topic_counts: doc_topic_counts.clone(),
                topic_word_counts: topic_word_counts.clone(),
                topic_totals: topic_totals.clone(),
                theta: Vec::new(),
                z: Vec::new(),
            };
            debug_assert!(probe.verify_counts(docs).is_ok(), "count drift at sweep {sweep}");
        }
    }

    let theta = match theta_acc {
        Some(acc) => acc
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / averaged_sweeps as f64).collect())
            .collect(),
        None => docs
            .iter()
            .enumerate()
            .map(|(d, doc)| smoothed_theta_row(&doc_topic_counts[d], doc.tokens.len(), k, config.alpha))
            .collect(),
    };

    let doc_ids: Vec<String> = docs.iter().map(|d| d.bug_id.clone()).collect();
    let doc_index = doc_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    Ok(TopicModel {
        config: config.clone(),
        vocab_size: v,
        doc_ids,
        doc_index,
        doc_topic_counts,
        topic_word_counts,
        topic_totals,
        theta,
        z,
    })
}

/// UMass coherence: mean over topics of
/// `sum_{i<j} ln((D(w_i, w_j) + 1) / D(w_j))` over the topic's `top_n` words
/// in descending count order, with `D` counting document occurrence in the
/// training corpus.
pub fn umass_coherence(model: &TopicModel, docs: &[TokenizedDocument], top_n: usize) -> f64 {
    let top_n = top_n.min(model.vocab_size);
    if top_n < 2 || model.config.k == 0 {
        return 0.0;
    }
    let doc_sets: Vec<std::collections::HashSet<u32>> = docs
        .iter()
        .map(|d| d.tokens.iter().copied().collect())
        .collect();
    let occurrence = |w: u32| doc_sets.iter().filter(|s| s.contains(&w)).count() as f64;
    let co_occurrence = |a: u32, b: u32| {
        doc_sets.iter().filter(|s| s.contains(&a) && s.contains(&b)).count() as f64
    };

    let mut sum = 0.0;
    for topic in 0..model.config.k {
        let words = model.top_words(topic, top_n);
        let mut score = 0.0;
        for j in 1..words.len() {
            let d_j = occurrence(words[j]);
            if d_j == 0.0 {
                continue;
            }
            for i in 0..j {
                score += ((co_occurrence(words[i], words[j]) + 1.0) / d_j).ln();
            }
        }
        sum += score;
    }
    sum / model.config.k as f64
}

/// Fit one model per K in `[k_min, k_max]` (same seed each time), score each
/// with UMass coherence, and return the argmax K with the full curve. Ties
/// break toward smaller K.
pub fn select_topic_count(
    vocab: &Vocabulary,
    docs: &[TokenizedDocument],
    k_min: usize,
    k_max: usize,
    params: &LdaParams,
    top_n: usize,
) -> Result<(usize, Vec<(usize, f64)>), TopicError> {
    if k_min < 1 || k_min > k_max {
        return Err(TopicError::InvalidRange { k_min, k_max });
    }
    let mut curve = Vec::with_capacity(k_max - k_min + 1);
    let mut best: Option<(usize, f64)> = None;
    for k in k_min..=k_max {
        let model = fit_lda(vocab, docs, &params.config_for(k))?;
        let raw = umass_coherence(&model, docs, top_n);
        let score = if raw.is_nan() { f64::NEG_INFINITY } else { raw };
        curve.push((k, raw));
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((k, score));
        }
    }
    Ok((best.expect("range is nonempty").0, curve))
}

fn argmax_label(bug_id: &str, row: &[f64]) -> TopicLabel {
    let mut topic = 0;
    let mut weight = row[0];
    for (k, &value) in row.iter().enumerate().skip(1) {
        if value > weight {
            topic = k;
            weight = value;
        }
    }
    TopicLabel { bug_id: bug_id.to_string(), topic, weight }
}

fn uniform_label(bug_id: &str, k: usize) -> TopicLabel {
    TopicLabel { bug_id: bug_id.to_string(), topic: 0, weight: 1.0 / k as f64 }
}

/// Label documents by their argmax theta entry; ties break toward the
/// smallest topic index. Documents without a fitted row (empty ones) get the
/// uniform distribution: topic 0 with weight 1/K.
pub fn label_documents(model: &TopicModel, docs: &[TokenizedDocument]) -> Vec<TopicLabel> {
    docs.iter()
        .map(|doc| {
            if doc.is_empty() {
                return uniform_label(&doc.bug_id, model.config.k);
            }
            match model.theta_row(&doc.bug_id) {
                Some(row) => argmax_label(&doc.bug_id, row),
                None => uniform_label(&doc.bug_id, model.config.k),
            }
        })
        .collect()
}

fn derive_seed(seed: u64, bug_id: &str) -> u64 {
    let mut hash = fnv1a(FNV_OFFSET, &seed.to_le_bytes());
    hash = fnv1a(hash, bug_id.as_bytes());
    hash
}

/// Fixed topic-word state a fold-in samples against: the fitted model's
/// counts, or a persisted artifact's.
struct FoldInState<'a> {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab_size: usize,
    topic_word_counts: &'a [Vec<u32>],
    topic_totals: &'a [u64],
    seed: u64,
}

/// Gibbs fold-in against fixed topic-word counts; used by both the in-memory
/// model and persisted artifacts so reloads label identically.
fn fold_in_theta(state: &FoldInState<'_>, doc: &TokenizedDocument, sweeps: usize) -> Vec<f64> {
    let k = state.k;
    if doc.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(state.seed, &doc.bug_id));
    let v_beta = state.vocab_size as f64 * state.beta;
    let mut local = vec![0u32; k];
    let mut z: Vec<usize> = doc
        .tokens
        .iter()
        .map(|_| rng.random_range(0..k))
        .collect();
    for &t in &z {
        local[t] += 1;
    }
    let mut weights = vec![0.0f64; k];
    for _ in 0..sweeps.max(1) {
        for (i, &word) in doc.tokens.iter().enumerate() {
            let w = word as usize;
            let old = z[i];
            local[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                let weight = (local[t] as f64 + state.alpha)
                    * (state.topic_word_counts[t][w] as f64 + state.beta)
                    / (state.topic_totals[t] as f64 + v_beta);
                weights[t] = weight;
                total += weight;
            }
            let new = sample_index(&weights, total, &mut rng);
            z[i] = new;
            local[new] += 1;
        }
    }
    smoothed_theta_row(&local, doc.tokens.len(), k, state.alpha)
}

impl TopicModel {
    fn fold_in_state(&self) -> FoldInState<'_> {
        FoldInState {
            k: self.config.k,
            alpha: self.config.alpha,
            beta: self.config.beta,
            vocab_size: self.vocab_size,
            topic_word_counts: &self.topic_word_counts,
            topic_totals: &self.topic_totals,
            seed: self.config.seed,
        }
    }
}

/// Infer a theta row for a held-out document by Gibbs fold-in, holding the
/// model's topic-word counts fixed. Out-of-vocabulary tokens must already be
/// dropped; a document that became empty gets the uniform row.
pub fn infer_heldout_theta(model: &TopicModel, doc: &TokenizedDocument, sweeps: usize) -> Vec<f64> {
    fold_in_theta(&model.fold_in_state(), doc, sweeps)
}

/// Fold in and argmax-label a batch of held-out documents.
pub fn label_heldout(
    model: &TopicModel,
    docs: &[TokenizedDocument],
    sweeps: usize,
) -> Vec<TopicLabel> {
    docs.iter()
        .map(|doc| {
            if doc.is_empty() {
                uniform_label(&doc.bug_id, model.config.k)
            } else {
                let row = infer_heldout_theta(model, doc, sweeps);
                argmax_label(&doc.bug_id, &row)
            }
        })
        .collect()
}

/// Persistable model state: enough to label new documents exactly, plus
/// human-readable top-word summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub config: LdaConfig,
    pub vocab_size: usize,
    pub vocab_hash: u64,
    pub topic_word_counts: Vec<Vec<u32>>,
    pub top_words: Vec<Vec<String>>,
}

impl ModelArtifact {
    pub fn from_model(model: &TopicModel, vocab: &Vocabulary) -> Self {
        let top_words = (0..model.config.k)
            .map(|t| {
                model
                    .top_words(t, 10)
                    .into_iter()
                    .map(|id| vocab.token(id).to_string())
                    .collect()
            })
            .collect();
        ModelArtifact {
            schema_version: MODEL_SCHEMA_VERSION,
            config: model.config.clone(),
            vocab_size: model.vocab_size,
            vocab_hash: vocab.content_hash(),
            topic_word_counts: model.topic_word_counts.clone(),
            top_words,
        }
    }

    /// Refuse artifacts from a different schema or a different vocabulary.
    pub fn check_compatible(&self, vocab: &Vocabulary) -> Result<(), TopicError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(TopicError::SchemaVersion {
                found: self.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let found = vocab.content_hash();
        if found != self.vocab_hash {
            return Err(TopicError::VocabularyMismatch { found, expected: self.vocab_hash });
        }
        Ok(())
    }

    fn topic_totals(&self) -> Vec<u64> {
        self.topic_word_counts
            .iter()
            .map(|row| row.iter().map(|&c| c as u64).sum())
            .collect()
    }

    fn fold_in_state<'a>(&'a self, totals: &'a [u64]) -> FoldInState<'a> {
        FoldInState {
            k: self.config.k,
            alpha: self.config.alpha,
            beta: self.config.beta,
            vocab_size: self.vocab_size,
            topic_word_counts: &self.topic_word_counts,
            topic_totals: totals,
            seed: self.config.seed,
        }
    }

    pub fn infer_theta(&self, doc: &TokenizedDocument, sweeps: usize) -> Vec<f64> {
        let totals = self.topic_totals();
        fold_in_theta(&self.fold_in_state(&totals), doc, sweeps)
    }

    pub fn label_heldout(&self, docs: &[TokenizedDocument], sweeps: usize) -> Vec<TopicLabel> {
        let totals = self.topic_totals();
        let state = self.fold_in_state(&totals);
        docs.iter()
            .map(|doc| {
                if doc.is_empty() {
                    uniform_label(&doc.bug_id, self.config.k)
                } else {
                    let row = fold_in_theta(&state, doc, sweeps);
                    argmax_label(&doc.bug_id, &row)
                }
            })
            .collect()
    }
}
