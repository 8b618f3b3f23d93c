//! Developer × topic score matrix: mean historical fixing hours per cell,
//! with a penalty-based fallback for cells without history.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{effective_fixing_hours, BugReport};
use crate::topics::TopicLabel;

/// Floor for a cell score; a zero mean would make a developer infinitely
/// attractive to the matcher.
pub const MIN_SCORE_HOURS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("no training reports")]
    EmptyTraining,
    #[error("training report `{bug_id}` has no topic label")]
    MissingLabel { bug_id: String },
    #[error("training report `{bug_id}` has no fixing time")]
    MissingHours { bug_id: String },
    #[error("label for `{bug_id}` names topic {topic}, but the matrix has {k} topics")]
    LabelOutOfRange { bug_id: String, topic: usize, k: usize },
    #[error("unknown developer `{0}`")]
    UnknownDeveloper(String),
    #[error("topic {topic} is out of range for {k} topics")]
    TopicOutOfRange { topic: usize, k: usize },
}

/// How to fill cells where a developer has no history for a topic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallbackPolicy {
    /// Multiplier applied to the worst demonstrated score when standing in
    /// for missing expertise.
    pub penalty_factor: f64,
}

impl Default for FallbackPolicy {
    fn default() -> Self {
        FallbackPolicy { penalty_factor: 1.5 }
    }
}

/// Expected fixing hours per (developer, topic), plus the report counts
/// backing each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScoreMatrixData", into = "ScoreMatrixData")]
pub struct ScoreMatrix {
    developers: Vec<String>,
    k: usize,
    scores: Vec<Vec<f64>>,
    support: Vec<Vec<u32>>,
    dev_index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoreMatrixData {
    developers: Vec<String>,
    k: usize,
    scores: Vec<Vec<f64>>,
    support: Vec<Vec<u32>>,
}

impl From<ScoreMatrixData> for ScoreMatrix {
    fn from(data: ScoreMatrixData) -> Self {
        let dev_index = data
            .developers
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i))
            .collect();
        ScoreMatrix {
            developers: data.developers,
            k: data.k,
            scores: data.scores,
            support: data.support,
            dev_index,
        }
    }
}

impl From<ScoreMatrix> for ScoreMatrixData {
    fn from(m: ScoreMatrix) -> Self {
        ScoreMatrixData { developers: m.developers, k: m.k, scores: m.scores, support: m.support }
    }
}

/// Build the matrix from a labeled training slice. Supported cells hold the
/// arithmetic mean of the developer's fixing hours on that topic; unsupported
/// cells are filled by the fallback policy; zero means are clamped to
/// [`MIN_SCORE_HOURS`].
pub fn build_score_matrix(
    reports: &[BugReport],
    labels: &[TopicLabel],
    k: usize,
    policy: FallbackPolicy,
) -> Result<ScoreMatrix, ScoreError> {
    if reports.is_empty() {
        return Err(ScoreError::EmptyTraining);
    }
    let topic_of: HashMap<&str, usize> =
        labels.iter().map(|l| (l.bug_id.as_str(), l.topic)).collect();

    let mut developers: Vec<String> = reports.iter().map(|r| r.assignee.clone()).collect();
    developers.sort();
    developers.dedup();
    let dev_index: HashMap<String, usize> =
        developers.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();

    let mut sums = vec![vec![0.0f64; k]; developers.len()];
    let mut support = vec![vec![0u32; k]; developers.len()];
    for report in reports {
        let topic = *topic_of
            .get(report.id.as_str())
            .ok_or_else(|| ScoreError::MissingLabel { bug_id: report.id.clone() })?;
        if topic >= k {
            return Err(ScoreError::LabelOutOfRange { bug_id: report.id.clone(), topic, k });
        }
        let hours = effective_fixing_hours(report)
            .map_err(|_| ScoreError::MissingHours { bug_id: report.id.clone() })?;
        let d = dev_index[&report.assignee];
        sums[d][topic] += hours;
        support[d][topic] += 1;
    }

    let mut scores = vec![vec![0.0f64; k]; developers.len()];
    for d in 0..developers.len() {
        for t in 0..k {
            if support[d][t] > 0 {
                let mean = sums[d][t] / support[d][t] as f64;
                scores[d][t] = if mean == 0.0 { MIN_SCORE_HOURS } else { mean };
            }
        }
    }

    // Fallback pass. Per topic: penalty × the worst supported score; when a
    // topic has no history at all, penalty × the developer's own mean over
    // supported topics.
    let topic_max: Vec<Option<f64>> = (0..k)
        .map(|t| {
            (0..developers.len())
                .filter(|&d| support[d][t] > 0)
                .map(|d| scores[d][t])
                .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |m| m.max(s))))
        })
        .collect();
    let dev_mean: Vec<f64> = (0..developers.len())
        .map(|d| {
            let supported: Vec<f64> = (0..k)
                .filter(|&t| support[d][t] > 0)
                .map(|t| scores[d][t])
                .collect();
            if supported.is_empty() {
                MIN_SCORE_HOURS
            } else {
                supported.iter().sum::<f64>() / supported.len() as f64
            }
        })
        .collect();
    for d in 0..developers.len() {
        for t in 0..k {
            if support[d][t] == 0 {
                let base = topic_max[t].unwrap_or(dev_mean[d]);
                let value = policy.penalty_factor * base;
                scores[d][t] = if value == 0.0 { MIN_SCORE_HOURS } else { value };
            }
        }
    }

    Ok(ScoreMatrix { developers, k, scores, support, dev_index })
}

impl ScoreMatrix {
    pub fn developers(&self) -> &[String] {
        &self.developers
    }

    pub fn topic_count(&self) -> usize {
        self.k
    }

    pub fn score_at(&self, dev: usize, topic: usize) -> f64 {
        self.scores[dev][topic]
    }

    pub fn support_at(&self, dev: usize, topic: usize) -> u32 {
        self.support[dev][topic]
    }

    /// Expected hours for one (developer, topic) pair.
    pub fn predicted_hours(&self, developer: &str, topic: usize) -> Result<f64, ScoreError> {
        let d = *self
            .dev_index
            .get(developer)
            .ok_or_else(|| ScoreError::UnknownDeveloper(developer.to_string()))?;
        if topic >= self.k {
            return Err(ScoreError::TopicOutOfRange { topic, k: self.k });
        }
        Ok(self.scores[d][topic])
    }

    /// FNV-1a over the matrix content; used by the evaluation causality checks.
    pub fn content_hash(&self) -> u64 {
        let mut hash = crate::fnv1a(crate::FNV_OFFSET, b"scores");
        for dev in &self.developers {
            hash = crate::fnv1a(hash, dev.as_bytes());
        }
        for row in &self.scores {
            for value in row {
                hash = crate::fnv1a(hash, &value.to_bits().to_le_bytes());
            }
        }
        for row in &self.support {
            for value in row {
                hash = crate::fnv1a(hash, &value.to_le_bytes());
            }
        }
        hash
    }

    fn grid_csv<T: std::fmt::Display>(&self, cells: impl Fn(usize, usize) -> T) -> String {
        let mut out = String::from("developer");
        for t in 0..self.k {
            out.push_str(&format!(",topic_{t}"));
        }
        out.push('\n');
        for (d, dev) in self.developers.iter().enumerate() {
            out.push_str(dev);
            for t in 0..self.k {
                out.push_str(&format!(",{}", cells(d, t)));
            }
            out.push('\n');
        }
        out
    }

    /// Audit export: one row per developer, one column per topic.
    pub fn scores_csv(&self) -> String {
        self.grid_csv(|d, t| self.scores[d][t])
    }

    pub fn support_csv(&self) -> String {
        self.grid_csv(|d, t| self.support[d][t])
    }
}
