//! Deterministic synthetic corpora and bug streams with planted structure,
//! used by the test suites and the browser demo.

use std::collections::BTreeSet;

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{filter_and_order, BugReport, Dataset};
use crate::text::{build_corpus, default_stoplist, TokenizedDocument, Vocabulary};
use crate::topics::TopicLabel;

/// Disjoint word pools, one per planted topic. Disjointness (before and
/// after normalization) is what lets the sampler recover the planted
/// clusters; a test guards it.
pub const TOPIC_POOLS: [[&str; 8]; 6] = [
    ["parser", "syntax", "grammar", "bracket", "quote", "indent", "literal", "escape"],
    ["socket", "timeout", "network", "proxy", "handshake", "packet", "latency", "firewall"],
    ["render", "pixel", "bitmap", "glyph", "viewport", "layout", "cursor", "scroll"],
    ["memory", "leak", "heap", "buffer", "overflow", "alloc", "pointer", "segfault"],
    ["login", "password", "session", "credential", "oauth", "permission", "cookie", "expiry"],
    ["database", "query", "schema", "index", "transaction", "deadlock", "migration", "rollback"],
];

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

fn pool_sentence(topic: usize, words: usize, rng: &mut ChaCha8Rng) -> String {
    let pool = &TOPIC_POOLS[topic % TOPIC_POOLS.len()];
    (0..words)
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Minimal report constructor for tests.
pub fn report_with_hours(id: &str, dev: &str, hour_offset: i64, hours: f64) -> BugReport {
    BugReport {
        id: id.to_string(),
        description: format!("issue {id}"),
        assignee: dev.to_string(),
        time_spent_hours: Some(hours),
        created_at: base_time() + chrono::Duration::hours(hour_offset),
        closed_at: None,
        status: "CLOSED".into(),
        resolution: "DONE".into(),
        issue_type: "BUG".into(),
    }
}

/// A corpus of `clusters` disjoint-vocabulary groups, interleaved in
/// chronological order. Returns the vocabulary, the tokenized documents, and
/// the planted cluster of each document (parallel to the documents).
pub fn clustered_corpus(
    clusters: usize,
    docs_per_cluster: usize,
    tokens_per_doc: usize,
    seed: u64,
) -> (Vocabulary, Vec<TokenizedDocument>, Vec<usize>) {
    assert!(clusters >= 1 && clusters <= TOPIC_POOLS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = clusters * docs_per_cluster;
    let mut reports = Vec::with_capacity(total);
    let mut planted = Vec::with_capacity(total);
    for i in 0..total {
        let cluster = i % clusters;
        planted.push(cluster);
        reports.push(BugReport {
            description: pool_sentence(cluster, tokens_per_doc, &mut rng),
            ..report_with_hours(&format!("C{i:05}"), "dev0", i as i64, 1.0)
        });
    }
    let dataset = Dataset {
        developers: BTreeSet::from(["dev0".to_string()]),
        reports,
    };
    let stoplist = default_stoplist();
    let (vocab, docs) = build_corpus(&dataset, &stoplist, 1).expect("pool words survive");
    (vocab, docs, planted)
}

/// A chronological bug stream with one planted topic per developer. Every
/// consecutive window of `devs` bugs carries each topic exactly once.
///
/// Ground truth: with `rotate` false, every bug goes to its topic's fast
/// developer (`fast_hours` on the diagonal) — the stream is already optimal.
/// With `rotate` true, batch `b` assigns topic `t` to developer
/// `(t + b) % devs`, cycling through every (developer, topic) cell so the
/// training history covers the whole grid while most assignments land on
/// slow (`slow_hours`) cells.
pub fn planted_stream(
    devs: usize,
    batches: usize,
    rotate: bool,
    fast_hours: f64,
    slow_hours: f64,
    seed: u64,
) -> Vec<BugReport> {
    assert!(devs >= 1 && devs <= TOPIC_POOLS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(devs * batches);
    for batch in 0..batches {
        for topic in 0..devs {
            let i = batch * devs + topic;
            let assignee = if rotate { (topic + batch) % devs } else { topic };
            let hours = if assignee == topic { fast_hours } else { slow_hours };
            reports.push(BugReport {
                description: pool_sentence(topic, 10, &mut rng),
                ..report_with_hours(&format!("S{i:05}"), &format!("dev{assignee}"), i as i64, hours)
            });
        }
    }
    reports
}

/// Stream wrapped into a validated dataset.
pub fn planted_dataset(
    devs: usize,
    batches: usize,
    rotate: bool,
    fast_hours: f64,
    slow_hours: f64,
    seed: u64,
) -> Dataset {
    filter_and_order(planted_stream(devs, batches, rotate, fast_hours, slow_hours, seed), 1)
        .expect("planted stream is nonempty")
}

/// Fraction of documents whose label agrees with the majority topic of their
/// planted cluster; 1.0 means the model separated the clusters perfectly.
pub fn label_purity(planted: &[usize], labels: &[TopicLabel]) -> f64 {
    assert_eq!(planted.len(), labels.len());
    if planted.is_empty() {
        return 1.0;
    }
    let topics = labels.iter().map(|l| l.topic).max().unwrap_or(0) + 1;
    let clusters = planted.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![vec![0usize; clusters]; topics];
    for (label, &cluster) in labels.iter().zip(planted) {
        counts[label.topic][cluster] += 1;
    }
    let agreeing: usize = counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    agreeing as f64 / planted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::normalize;
    use std::collections::HashSet;

    #[test]
    fn pools_stay_disjoint_after_normalization() {
        let stoplist = default_stoplist();
        let mut seen: HashSet<String> = HashSet::new();
        for pool in &TOPIC_POOLS {
            for word in pool {
                let normalized = normalize(word);
                assert!(normalized.chars().count() >= 2, "{word} normalizes too short");
                assert!(!stoplist.contains(&normalized), "{word} lands in the stop list");
                assert!(seen.insert(normalized.clone()), "{word} -> {normalized} collides");
            }
        }
    }

    #[test]
    fn stream_shape_and_ground_truth() {
        let stream = planted_stream(4, 3, false, 1.0, 10.0, 0);
        assert_eq!(stream.len(), 12);
        // Optimal: every report sits on the diagonal at fast hours.
        assert!(stream.iter().all(|r| r.time_spent_hours == Some(1.0)));

        let rotated = planted_stream(4, 4, true, 1.0, 10.0, 0);
        // Batch 0 is diagonal; later batches are off-diagonal.
        assert_eq!(rotated[0].assignee, "dev0");
        assert_eq!(rotated[4].assignee, "dev1");
        assert_eq!(rotated[4].time_spent_hours, Some(10.0));
        // Over devs rounds, every (assignee, topic) cell appears.
        let mut cells = HashSet::new();
        for (i, r) in rotated.iter().enumerate() {
            cells.insert((r.assignee.clone(), i % 4));
        }
        assert_eq!(cells.len(), 16);
    }

    #[test]
    fn purity_bounds() {
        let perfect: Vec<TopicLabel> = (0..6)
            .map(|i| TopicLabel { bug_id: format!("{i}"), topic: i % 2, weight: 1.0 })
            .collect();
        let planted: Vec<usize> = (0..6).map(|i| i % 2).collect();
        assert_eq!(label_purity(&planted, &perfect), 1.0);

        let collapsed: Vec<TopicLabel> = (0..6)
            .map(|i| TopicLabel { bug_id: format!("{i}"), topic: 0, weight: 1.0 })
            .collect();
        assert_eq!(label_purity(&planted, &collapsed), 0.5);
    }
}
