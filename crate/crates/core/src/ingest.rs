//! Bug-report loading, validation, filtering, and chronological ordering.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column set required by both the CSV and JSONL schemas.
pub const REQUIRED_COLUMNS: [&str; 9] = [
    "bug_id",
    "created_at",
    "closed_at",
    "status",
    "resolution",
    "assignee",
    "time_spent_hours",
    "description",
    "issue_type",
];

/// One issue record as exported from a tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub description: String,
    pub assignee: String,
    pub time_spent_hours: Option<f64>,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub status: String,
    pub resolution: String,
    pub issue_type: String,
}

/// Validated, chronologically ordered reports plus the developer pool that
/// survived filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub reports: Vec<BugReport>,
    pub developers: BTreeSet<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

/// A problem found in one input record. `row` is 1-based and counts the
/// header line in CSV input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub row: usize,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for RowIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "row {}, field `{}`: {}", self.row, field, self.message),
            None => write!(f, "row {}: {}", self.row, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema mismatch: missing columns [{}], unexpected columns [{}]",
            missing.join(", "), unexpected.join(", "))]
    SchemaMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    #[error("{} malformed record(s); first: {}", .0.len(), .0[0])]
    MalformedRows(Vec<RowIssue>),
    #[error("report `{id}` has neither time_spent_hours nor closed_at")]
    MissingDuration { id: String },
    #[error("min_fixes must be at least 1")]
    InvalidMinFixes,
    #[error("no reports survived filtering")]
    EmptyDataset,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Raw record shared by the CSV and JSONL paths before validation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    bug_id: String,
    created_at: String,
    closed_at: Option<String>,
    status: String,
    resolution: String,
    assignee: String,
    time_spent_hours: Option<f64>,
    description: String,
    issue_type: String,
}

/// Parse a byte stream of bug reports. Malformed records are collected and
/// reported together rather than dropped one by one.
pub fn load_reports<R: Read>(source: R, format: InputFormat) -> Result<Vec<BugReport>, IngestError> {
    match format {
        InputFormat::Csv => load_csv(source),
        InputFormat::Jsonl => load_jsonl(source),
    }
}

fn load_csv<R: Read>(source: R) -> Result<Vec<BugReport>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| std::io::Error::other(e.to_string()))?
        .clone();
    let mut column_of: HashMap<&str, usize> = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        column_of.insert(name.trim(), i);
    }
    let missing: Vec<String> = REQUIRED_COLUMNS
        .iter()
        .filter(|c| !column_of.contains_key(*c))
        .map(|c| c.to_string())
        .collect();
    let unexpected: Vec<String> = headers
        .iter()
        .map(str::trim)
        .filter(|c| !REQUIRED_COLUMNS.contains(c))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(IngestError::SchemaMismatch { missing, unexpected });
    }

    let mut reports = Vec::new();
    let mut issues = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                issues.push(RowIssue { row, field: None, message: e.to_string() });
                continue;
            }
        };
        if record.len() != REQUIRED_COLUMNS.len() {
            issues.push(RowIssue {
                row,
                field: None,
                message: format!("{} fields, expected {}", record.len(), REQUIRED_COLUMNS.len()),
            });
            continue;
        }
        let get = |name: &str| record.get(column_of[name]).unwrap_or("").trim().to_string();
        let optional = |v: String| if v.is_empty() { None } else { Some(v) };
        let time_spent = match optional(get("time_spent_hours")) {
            None => None,
            Some(raw) => match raw.parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    issues.push(RowIssue {
                        row,
                        field: Some("time_spent_hours".into()),
                        message: format!("`{raw}` is not a number"),
                    });
                    continue;
                }
            },
        };
        let raw = RawRecord {
            bug_id: get("bug_id"),
            created_at: get("created_at"),
            closed_at: optional(get("closed_at")),
            status: get("status"),
            resolution: get("resolution"),
            assignee: get("assignee"),
            time_spent_hours: time_spent,
            description: get("description"),
            issue_type: get("issue_type"),
        };
        if let Some(report) = validate_record(raw, row, &mut seen_ids, &mut issues) {
            reports.push(report);
        }
    }

    if issues.is_empty() {
        Ok(reports)
    } else {
        Err(IngestError::MalformedRows(issues))
    }
}

fn load_jsonl<R: Read>(source: R) -> Result<Vec<BugReport>, IngestError> {
    let reader = BufReader::new(source);
    let mut reports = Vec::new();
    let mut issues = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                issues.push(RowIssue { row, field: None, message: e.to_string() });
                continue;
            }
        };
        if let Some(report) = validate_record(raw, row, &mut seen_ids, &mut issues) {
            reports.push(report);
        }
    }
    if issues.is_empty() {
        Ok(reports)
    } else {
        Err(IngestError::MalformedRows(issues))
    }
}

fn validate_record(
    raw: RawRecord,
    row: usize,
    seen_ids: &mut HashSet<String>,
    issues: &mut Vec<RowIssue>,
) -> Option<BugReport> {
    let mut bad = false;
    let issue = |field: &str, message: String| RowIssue {
        row,
        field: Some(field.to_string()),
        message,
    };

    if raw.bug_id.is_empty() {
        issues.push(issue("bug_id", "must be nonempty".into()));
        bad = true;
    } else if !seen_ids.insert(raw.bug_id.clone()) {
        issues.push(issue("bug_id", format!("duplicate id `{}`", raw.bug_id)));
        bad = true;
    }

    let created_at = match parse_timestamp(&raw.created_at) {
        Ok(t) => Some(t),
        Err(msg) => {
            issues.push(issue("created_at", msg));
            bad = true;
            None
        }
    };
    let closed_at = match raw.closed_at.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(text) => match parse_timestamp(text) {
            Ok(t) => Some(t),
            Err(msg) => {
                issues.push(issue("closed_at", msg));
                bad = true;
                None
            }
        },
    };
    if let (Some(c), Some(d)) = (created_at, closed_at) {
        if d < c {
            issues.push(issue("closed_at", "precedes created_at".into()));
            bad = true;
        }
    }
    if let Some(h) = raw.time_spent_hours {
        if !h.is_finite() || h < 0.0 {
            issues.push(issue("time_spent_hours", format!("`{h}` is not a nonnegative number")));
            bad = true;
        }
    }

    if bad {
        return None;
    }
    Some(BugReport {
        id: raw.bug_id,
        description: raw.description,
        assignee: raw.assignee,
        time_spent_hours: raw.time_spent_hours,
        created_at: created_at.expect("validated above"),
        closed_at,
        status: raw.status,
        resolution: raw.resolution,
        issue_type: raw.issue_type,
    })
}

fn parse_timestamp(text: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("`{text}` is not an ISO-8601 timestamp: {e}"))
}

/// Hours a report took to fix: the recorded time when present, otherwise the
/// width of the created→closed interval.
pub fn effective_fixing_hours(report: &BugReport) -> Result<f64, IngestError> {
    if let Some(hours) = report.time_spent_hours {
        return Ok(hours);
    }
    match report.closed_at {
        Some(closed) => Ok((closed - report.created_at).num_seconds() as f64 / 3600.0),
        None => Err(IngestError::MissingDuration { id: report.id.clone() }),
    }
}

/// Drop reports without usable text or fixing time, drop developers with
/// fewer than `min_fixes` remaining reports (to a fixed point), and sort the
/// survivors by `(created_at, id)`.
pub fn filter_and_order(reports: Vec<BugReport>, min_fixes: usize) -> Result<Dataset, IngestError> {
    if min_fixes < 1 {
        return Err(IngestError::InvalidMinFixes);
    }
    let mut kept: Vec<BugReport> = reports
        .into_iter()
        .filter(|r| !r.description.trim().is_empty())
        .filter(|r| r.time_spent_hours.is_some() || r.closed_at.is_some())
        .collect();

    // Removing one developer's reports can never lower another's count, but
    // iterate to a fixed point so coupled filters stay correct if added.
    loop {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for report in &kept {
            *counts.entry(report.assignee.as_str()).or_insert(0) += 1;
        }
        let drop: HashSet<String> = counts
            .iter()
            .filter(|(_, &n)| n < min_fixes)
            .map(|(dev, _)| dev.to_string())
            .collect();
        if drop.is_empty() {
            break;
        }
        kept.retain(|r| !drop.contains(&r.assignee));
    }

    if kept.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    kept.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
    let developers = kept.iter().map(|r| r.assignee.clone()).collect();
    Ok(Dataset { reports: kept, developers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(text: &str) -> DateTime<Utc> {
        parse_timestamp(text).unwrap()
    }

    fn report(id: &str, dev: &str, created: &str, hours: Option<f64>) -> BugReport {
        BugReport {
            id: id.into(),
            description: format!("crash in module {id}"),
            assignee: dev.into(),
            time_spent_hours: hours,
            created_at: ts(created),
            closed_at: None,
            status: "CLOSED".into(),
            resolution: "DONE".into(),
            issue_type: "BUG".into(),
        }
    }

    const HEADER: &str =
        "bug_id,created_at,closed_at,status,resolution,assignee,time_spent_hours,description,issue_type";

    #[test]
    fn csv_row_maps_fields() {
        let data = format!(
            "{HEADER}\nB1,2020-01-01T00:00:00Z,2020-01-03T00:00:00Z,CLOSED,DONE,alice,4.5,\"null deref in parser\",BUG\n"
        );
        let reports = load_reports(data.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.id, "B1");
        assert_eq!(r.assignee, "alice");
        assert_eq!(r.time_spent_hours, Some(4.5));
        assert_eq!(r.description, "null deref in parser");
        assert_eq!(r.closed_at, Some(ts("2020-01-03T00:00:00Z")));
    }

    #[test]
    fn empty_csv_with_header_is_empty() {
        let data = format!("{HEADER}\n");
        let reports = load_reports(data.as_bytes(), InputFormat::Csv).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn closed_before_created_is_rejected_with_row() {
        let data = format!(
            "{HEADER}\nB1,2020-01-05T00:00:00Z,2020-01-01T00:00:00Z,CLOSED,DONE,alice,,desc,BUG\n"
        );
        let err = load_reports(data.as_bytes(), InputFormat::Csv).unwrap_err();
        match err {
            IngestError::MalformedRows(issues) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].row, 2);
                assert_eq!(issues[0].field.as_deref(), Some("closed_at"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_ids_and_bad_timestamps_are_all_collected() {
        let data = format!(
            "{HEADER}\n\
             B1,2020-01-01T00:00:00Z,,CLOSED,DONE,alice,1.0,x,BUG\n\
             B1,2020-01-02T00:00:00Z,,CLOSED,DONE,bob,1.0,y,BUG\n\
             B2,not-a-time,,CLOSED,DONE,bob,1.0,z,BUG\n"
        );
        let err = load_reports(data.as_bytes(), InputFormat::Csv).unwrap_err();
        match err {
            IngestError::MalformedRows(issues) => {
                assert_eq!(issues.len(), 2);
                assert_eq!(issues[0].row, 3);
                assert_eq!(issues[1].row, 4);
                assert_eq!(issues[1].field.as_deref(), Some("created_at"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn short_row_is_flagged_with_its_row_number() {
        let data = format!(
            "{HEADER}\n\
             B1,2020-01-01T00:00:00Z,,CLOSED,DONE,alice,1.0,x,BUG\n\
             B2,2020-01-02T00:00:00Z,,CLOSED\n"
        );
        let err = load_reports(data.as_bytes(), InputFormat::Csv).unwrap_err();
        match err {
            IngestError::MalformedRows(issues) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].row, 3);
                assert!(issues[0].message.contains("expected 9"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let data = "bug_id,created_at,closed_at,status,resolution,assignee,time_spent_hours,description\n";
        let err = load_reports(data.as_bytes(), InputFormat::Csv).unwrap_err();
        match err {
            IngestError::SchemaMismatch { missing, unexpected } => {
                assert_eq!(missing, vec!["issue_type".to_string()]);
                assert!(unexpected.is_empty());
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn jsonl_roundtrip_and_field_errors() {
        let data = concat!(
            r#"{"bug_id":"J1","created_at":"2021-06-01T10:00:00Z","closed_at":null,"status":"CLOSED","resolution":"DONE","assignee":"dana","time_spent_hours":2.0,"description":"socket timeout","issue_type":"BUG"}"#,
            "\n",
            r#"{"bug_id":"J2","created_at":"2021-06-02T10:00:00Z","status":"CLOSED"}"#,
            "\n",
        );
        let err = load_reports(data.as_bytes(), InputFormat::Jsonl).unwrap_err();
        match err {
            IngestError::MalformedRows(issues) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].row, 2);
            }
            other => panic!("unexpected error: {other}"),
        }

        let ok = concat!(
            r#"{"bug_id":"J1","created_at":"2021-06-01T10:00:00Z","closed_at":null,"status":"CLOSED","resolution":"DONE","assignee":"dana","time_spent_hours":2.0,"description":"socket timeout","issue_type":"BUG"}"#,
            "\n",
        );
        let reports = load_reports(ok.as_bytes(), InputFormat::Jsonl).unwrap();
        assert_eq!(reports[0].id, "J1");
        assert_eq!(reports[0].time_spent_hours, Some(2.0));
    }

    #[test]
    fn effective_hours_prefers_recorded_time() {
        let r = report("B1", "alice", "2020-01-01T00:00:00Z", Some(4.5));
        assert_eq!(effective_fixing_hours(&r).unwrap(), 4.5);
    }

    #[test]
    fn effective_hours_from_interval() {
        let mut r = report("B1", "alice", "2020-01-01T00:00:00Z", None);
        r.closed_at = Some(ts("2020-01-03T12:00:00Z"));
        assert_eq!(effective_fixing_hours(&r).unwrap(), 60.0);
    }

    #[test]
    fn effective_hours_zero_width_interval() {
        let mut r = report("B1", "alice", "2020-01-01T00:00:00Z", None);
        r.closed_at = Some(r.created_at);
        assert_eq!(effective_fixing_hours(&r).unwrap(), 0.0);
    }

    #[test]
    fn effective_hours_missing_both_errors() {
        let r = report("B1", "alice", "2020-01-01T00:00:00Z", None);
        assert!(matches!(
            effective_fixing_hours(&r),
            Err(IngestError::MissingDuration { .. })
        ));
    }

    #[test]
    fn low_volume_developer_is_removed() {
        let mut reports: Vec<BugReport> = (0..10)
            .map(|i| report(&format!("A{i}"), "alice", "2020-01-01T00:00:00Z", Some(1.0)))
            .collect();
        for i in 0..3 {
            reports.push(report(&format!("X{i}"), "xavier", "2020-02-01T00:00:00Z", Some(1.0)));
        }
        let dataset = filter_and_order(reports, 10).unwrap();
        assert_eq!(dataset.len(), 10);
        assert!(dataset.developers.contains("alice"));
        assert!(!dataset.developers.contains("xavier"));
    }

    #[test]
    fn min_fixes_one_keeps_everything_sorted() {
        let reports = vec![
            report("B2", "bob", "2020-01-02T00:00:00Z", Some(1.0)),
            report("B1", "alice", "2020-01-01T00:00:00Z", Some(1.0)),
            report("B3", "alice", "2020-01-01T00:00:00Z", Some(1.0)),
        ];
        let dataset = filter_and_order(reports, 1).unwrap();
        let ids: Vec<&str> = dataset.reports.iter().map(|r| r.id.as_str()).collect();
        // B1 and B3 share a timestamp; ids break the tie.
        assert_eq!(ids, vec!["B1", "B3", "B2"]);
    }

    #[test]
    fn fixed_point_on_toy_counts() {
        // X has 12 reports, Y has 9. Removing Y's reports cannot drop X
        // below 12, so exactly Y disappears.
        let mut reports = Vec::new();
        for i in 0..12 {
            reports.push(report(&format!("X{i:02}"), "x", "2020-01-01T00:00:00Z", Some(1.0)));
        }
        for i in 0..9 {
            reports.push(report(&format!("Y{i:02}"), "y", "2020-01-01T00:00:00Z", Some(1.0)));
        }
        let dataset = filter_and_order(reports, 10).unwrap();
        assert_eq!(dataset.len(), 12);
        assert_eq!(dataset.developers.len(), 1);
        assert!(dataset.developers.contains("x"));
    }

    #[test]
    fn reports_without_any_duration_are_dropped() {
        let mut with = report("B1", "alice", "2020-01-01T00:00:00Z", Some(1.0));
        with.description = "real".into();
        let without = report("B2", "alice", "2020-01-02T00:00:00Z", None);
        let blank = BugReport { description: "   ".into(), ..with.clone() };
        let dataset = filter_and_order(vec![with, without, blank], 1).unwrap();
        assert_eq!(dataset.len(), 1);
        assert_eq!(dataset.reports[0].id, "B1");
    }

    #[test]
    fn everything_filtered_is_an_error() {
        let reports = vec![report("B1", "alice", "2020-01-01T00:00:00Z", Some(1.0))];
        assert!(matches!(
            filter_and_order(reports, 10),
            Err(IngestError::EmptyDataset)
        ));
    }

    fn arbitrary_reports() -> impl Strategy<Value = Vec<BugReport>> {
        let one = (0usize..40, 0u8..4, 0i64..200, prop::option::of(0.0f64..50.0), any::<bool>());
        prop::collection::vec(one, 1..60).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (_, dev, offset_hours, hours, described))| {
                    let created = ts("2020-01-01T00:00:00Z") + chrono::Duration::hours(offset_hours);
                    BugReport {
                        id: format!("R{i:03}"),
                        description: if described { format!("issue {i}") } else { String::new() },
                        assignee: format!("dev{dev}"),
                        time_spent_hours: hours,
                        created_at: created,
                        closed_at: if hours.is_none() && i % 2 == 0 {
                            Some(created + chrono::Duration::hours(5))
                        } else {
                            None
                        },
                        status: "CLOSED".into(),
                        resolution: "DONE".into(),
                        issue_type: "BUG".into(),
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn filter_is_idempotent_and_bounded(reports in arbitrary_reports(), min_fixes in 1usize..5) {
            if let Ok(dataset) = filter_and_order(reports, min_fixes) {
                let again = filter_and_order(dataset.reports.clone(), min_fixes).unwrap();
                prop_assert_eq!(&again, &dataset);

                let mut counts: HashMap<&str, usize> = HashMap::new();
                for r in &dataset.reports {
                    *counts.entry(r.assignee.as_str()).or_insert(0) += 1;
                }
                prop_assert!(counts.values().all(|&n| n >= min_fixes));

                for pair in dataset.reports.windows(2) {
                    let key = |r: &BugReport| (r.created_at, r.id.clone());
                    prop_assert!(key(&pair[0]) <= key(&pair[1]));
                }
                for r in &dataset.reports {
                    prop_assert!(effective_fixing_hours(r).unwrap() >= 0.0);
                }
            }
        }
    }
}
