//! Min-cost perfect matching on square cost matrices and the iterative batch
//! scheme that spreads a bug stream evenly over developers.
//!
//! The solver runs the labeling (dual) form of Kuhn-Munkres: costs are turned
//! into weights `w(x, y) = C_max - cost(x, y)`, labels start at
//! `l(x) = max_y w(x, y)`, `l(y) = 0`, and alternating trees grow from free
//! rows with maintained per-column slacks, giving O(n³) overall. The final
//! labels are returned as an independently checkable optimality certificate:
//! `l(x) + l(y) >= w(x, y)` everywhere with equality on matched pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{ScoreError, ScoreMatrix};
use crate::topics::TopicLabel;

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("cost matrix must be square: {rows} rows x {cols} cols")]
    NonSquare { rows: usize, cols: usize },
    #[error("cost matrix must be nonempty")]
    Empty,
    #[error("cost({row}, {col}) = {value} is not a nonnegative finite number")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("batch of {bugs} bugs exceeds {devs} developers")]
    TooManyBugs { bugs: usize, devs: usize },
    #[error("no bugs to assign")]
    NoBugs,
    #[error("no developers to assign to")]
    NoDevelopers,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Row identity in a batch matrix: a real bug or zero-cost padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowId {
    Bug(String),
    Dummy,
}

/// Square, nonnegative, finite cost grid with row/column identities.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    cost: Vec<f64>,
    row_ids: Vec<RowId>,
    col_ids: Vec<String>,
}

impl CostMatrix {
    pub fn new(
        rows: Vec<Vec<f64>>,
        row_ids: Vec<RowId>,
        col_ids: Vec<String>,
    ) -> Result<Self, AssignError> {
        let n = rows.len();
        if n == 0 {
            return Err(AssignError::Empty);
        }
        if row_ids.len() != n || col_ids.len() != n {
            return Err(AssignError::NonSquare { rows: n, cols: col_ids.len() });
        }
        let mut cost = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(AssignError::NonSquare { rows: n, cols: row.len() });
            }
            for (c, &value) in row.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(AssignError::InvalidEntry { row: r, col: c, value });
                }
                cost.push(value);
            }
        }
        Ok(CostMatrix { n, cost, row_ids, col_ids })
    }

    /// Build from a bare grid with synthetic row/column names.
    pub fn from_grid(rows: Vec<Vec<f64>>) -> Result<Self, AssignError> {
        let n = rows.len();
        let row_ids = (0..n).map(|i| RowId::Bug(format!("r{i}"))).collect();
        let col_ids = (0..n).map(|i| format!("c{i}")).collect();
        CostMatrix::new(rows, row_ids, col_ids)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.cost[row * self.n + col]
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn max_entry(&self) -> f64 {
        self.cost.iter().fold(0.0f64, |m, &v| m.max(v))
    }
}

/// A perfect matching with its dual labels (in the max-weight form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// `pairs[row] = (row, col)`, one entry per row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub row_labels: Vec<f64>,
    pub col_labels: Vec<f64>,
}

/// Certificate check results; all slacks are in the max-weight form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Largest amount by which `l(x) + l(y) >= w(x, y)` is violated.
    pub max_feasibility_violation: f64,
    /// Largest `|l(x) + l(y) - w(x, y)|` over matched pairs.
    pub max_matched_slack: f64,
    /// `sum l(x) + sum l(y)`, which equals the matched weight at optimality.
    pub label_sum: f64,
    pub matched_weight: f64,
}

impl Matching {
    /// Evaluate dual feasibility and complementary slackness against the
    /// matrix this matching was computed from.
    pub fn certificate(&self, matrix: &CostMatrix) -> CertificateReport {
        let n = matrix.len();
        let c_max = matrix.max_entry();
        let weight = |r: usize, c: usize| c_max - matrix.at(r, c);
        let mut max_violation = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let slack = self.row_labels[r] + self.col_labels[c] - weight(r, c);
                max_violation = max_violation.max(-slack);
            }
        }
        let mut max_matched = 0.0f64;
        let mut matched_weight = 0.0;
        for &(r, c) in &self.pairs {
            let slack = self.row_labels[r] + self.col_labels[c] - weight(r, c);
            max_matched = max_matched.max(slack.abs());
            matched_weight += weight(r, c);
        }
        let label_sum =
            self.row_labels.iter().sum::<f64>() + self.col_labels.iter().sum::<f64>();
        CertificateReport {
            max_feasibility_violation: max_violation,
            max_matched_slack: max_matched,
            label_sum,
            matched_weight,
        }
    }
}

/// Minimum-cost perfect matching by the labeling algorithm with maintained
/// slacks. Deterministic: among equal slacks the lowest column index wins.
pub fn km_min_cost(matrix: &CostMatrix) -> Matching {
    let n = matrix.len();
    let c_max = matrix.max_entry();
    let tol = 1e-9 * c_max;
    let weight = |r: usize, c: usize| c_max - matrix.at(r, c);

    // l(x) = max_y w(x, y), l(y) = 0.
    let mut row_labels: Vec<f64> = (0..n)
        .map(|r| (0..n).map(|c| weight(r, c)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut col_labels = vec![0.0f64; n];
    let mut match_of_row: Vec<Option<usize>> = vec![None; n];
    let mut match_of_col: Vec<Option<usize>> = vec![None; n];

    for root in 0..n {
        if match_of_row[root].is_some() {
            continue;
        }
        // Alternating tree from `root`. slack[c] tracks
        // min_{x in S} l(x) + l(c) - w(x, c); slack_row[c] remembers the
        // argmin and doubles as the tree edge used for augmentation.
        let mut in_tree_row = vec![false; n];
        let mut in_tree_col = vec![false; n];
        let mut slack = vec![f64::INFINITY; n];
        let mut slack_row = vec![root; n];
        in_tree_row[root] = true;
        for c in 0..n {
            slack[c] = row_labels[root] + col_labels[c] - weight(root, c);
        }

        loop {
            // Lowest-index column of minimum slack outside the tree.
            let mut next_col = None;
            let mut delta = f64::INFINITY;
            for c in 0..n {
                if !in_tree_col[c] && slack[c] < delta {
                    delta = slack[c];
                    next_col = Some(c);
                }
            }
            let next_col = next_col.expect("a free column always remains");

            if delta > tol {
                for r in 0..n {
                    if in_tree_row[r] {
                        row_labels[r] -= delta;
                    }
                }
                for c in 0..n {
                    if in_tree_col[c] {
                        col_labels[c] += delta;
                    } else {
                        slack[c] -= delta;
                    }
                }
            }

            match match_of_col[next_col] {
                None => {
                    // Augment along the recorded tree edges.
                    let mut col = next_col;
                    loop {
                        let row = slack_row[col];
                        let previous = match_of_row[row];
                        match_of_row[row] = Some(col);
                        match_of_col[col] = Some(row);
                        match previous {
                            Some(prev_col) => col = prev_col,
                            None => break,
                        }
                    }
                    break;
                }
                Some(matched_row) => {
                    in_tree_col[next_col] = true;
                    in_tree_row[matched_row] = true;
                    for c in 0..n {
                        if !in_tree_col[c] {
                            let s = row_labels[matched_row] + col_labels[c]
                                - weight(matched_row, c);
                            if s < slack[c] {
                                slack[c] = s;
                                slack_row[c] = matched_row;
                            }
                        }
                    }
                }
            }
        }
    }

    let pairs: Vec<(usize, usize)> = match_of_row
        .iter()
        .enumerate()
        .map(|(r, c)| (r, c.expect("matching is perfect")))
        .collect();
    let total_cost = pairs.iter().map(|&(r, c)| matrix.at(r, c)).sum();
    Matching { pairs, total_cost, row_labels, col_labels }
}

/// One (bug, developer) decision in a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub bug_id: String,
    pub developer: String,
    pub topic: usize,
    pub predicted_hours: f64,
}

/// Full output of a batched run: assignments, per-developer load, and the
/// number of matcher invocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub assignments: Vec<Assignment>,
    pub load: BTreeMap<String, u32>,
    pub batches: usize,
}

impl AssignmentPlan {
    pub fn load_spread(&self) -> u32 {
        let min = self.load.values().copied().min().unwrap_or(0);
        let max = self.load.values().copied().max().unwrap_or(0);
        max - min
    }
}

/// Batch matrix: one row per bug (cost = the developer's predicted hours for
/// the bug's topic), padded with zero-cost dummy rows up to the developer
/// count.
pub fn build_batch_matrix(
    bugs: &[TopicLabel],
    developers: &[String],
    scores: &ScoreMatrix,
) -> Result<CostMatrix, AssignError> {
    if bugs.is_empty() {
        return Err(AssignError::NoBugs);
    }
    if developers.is_empty() {
        return Err(AssignError::NoDevelopers);
    }
    let d = developers.len();
    if bugs.len() > d {
        return Err(AssignError::TooManyBugs { bugs: bugs.len(), devs: d });
    }

    let mut rows = Vec::with_capacity(d);
    let mut row_ids = Vec::with_capacity(d);
    for bug in bugs {
        let row: Result<Vec<f64>, AssignError> = developers
            .iter()
            .map(|dev| scores.predicted_hours(dev, bug.topic).map_err(AssignError::from))
            .collect();
        rows.push(row?);
        row_ids.push(RowId::Bug(bug.bug_id.clone()));
    }
    for _ in bugs.len()..d {
        rows.push(vec![0.0; d]);
        row_ids.push(RowId::Dummy);
    }
    CostMatrix::new(rows, row_ids, developers.to_vec())
}

/// Split a chronologically ordered bug stream into consecutive batches of at
/// most `|developers|`, solve each batch as a min-cost matching, and discard
/// dummy rows. Each developer gains at most one bug per batch, so total loads
/// never differ by more than one.
pub fn iterative_assign(
    bugs: &[TopicLabel],
    developers: &[String],
    scores: &ScoreMatrix,
) -> Result<AssignmentPlan, AssignError> {
    if bugs.is_empty() {
        return Err(AssignError::NoBugs);
    }
    if developers.is_empty() {
        return Err(AssignError::NoDevelopers);
    }
    let d = developers.len();
    let mut assignments = Vec::with_capacity(bugs.len());
    let mut load: BTreeMap<String, u32> =
        developers.iter().map(|dev| (dev.clone(), 0)).collect();
    let mut batches = 0;

    for chunk in bugs.chunks(d) {
        let matrix = build_batch_matrix(chunk, developers, scores)?;
        let matching = km_min_cost(&matrix);
        batches += 1;
        let mut batch_rows: Vec<(usize, usize)> = matching.pairs.clone();
        batch_rows.sort_by_key(|&(r, _)| r); // chronological within the batch
        for (r, c) in batch_rows {
            if let RowId::Bug(bug_id) = &matrix.row_ids()[r] {
                let developer = matrix.col_ids()[c].clone();
                let topic = chunk[r].topic;
                let predicted_hours = matrix.at(r, c);
                *load.get_mut(&developer).expect("developer present") += 1;
                assignments.push(Assignment {
                    bug_id: bug_id.clone(),
                    developer,
                    topic,
                    predicted_hours,
                });
            }
        }
    }

    Ok(AssignmentPlan { assignments, load, batches })
}
