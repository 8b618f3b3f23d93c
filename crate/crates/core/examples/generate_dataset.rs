//! Regenerate `data/synthetic_bugs.csv`, the bundled synthetic issue export
//! used by the integration tests, the CLI examples, and the README walkthrough.
//!
//! Run from the workspace root:
//!
//! ```text
//! cargo run -p triage-core --example generate_dataset
//! ```

use std::fs;
use std::path::Path;

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage_core::synth::TOPIC_POOLS;

const DEVELOPERS: [&str; 5] = ["alice", "bob", "carol", "dan", "erin"];
const TOPICS: usize = 4;
const USABLE_ROWS: usize = 162;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20200101);
    let base = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();

    // Planted mean fixing hours per (developer, topic): every developer has
    // one fast specialty and is slower elsewhere.
    let mean_hours = |dev: usize, topic: usize| -> f64 {
        if dev % TOPICS == topic {
            2.0 + dev as f64 * 0.5
        } else {
            8.0 + ((dev + topic) % 3) as f64 * 2.0
        }
    };

    let mut rows: Vec<String> = Vec::new();
    let sentence = |topic: usize, rng: &mut ChaCha8Rng| -> String {
        let pool = &TOPIC_POOLS[topic];
        let glue = ["fails on", "crash after", "regression in", "error handling"];
        let lead = glue[rng.random_range(0..glue.len())];
        let words: Vec<&str> = (0..8).map(|_| pool[rng.random_range(0..pool.len())]).collect();
        format!("{lead} {}", words.join(" "))
    };

    for i in 0..USABLE_ROWS {
        let topic = rng.random_range(0..TOPICS);
        let dev = rng.random_range(0..DEVELOPERS.len());
        let hours = mean_hours(dev, topic) * rng.random_range(0.75..1.25);
        let created = base + Duration::hours(i as i64 * 3);
        // Roughly a third of the rows record no time spent; their fixing
        // time derives from the created/closed interval instead.
        let (time_spent, closed) = if rng.random_range(0..3) == 0 {
            let closed = created + Duration::minutes((hours * 60.0) as i64);
            (String::new(), closed.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        } else {
            let closed = created + Duration::hours(rng.random_range(24..96));
            (format!("{hours:.2}"), closed.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        };
        rows.push(format!(
            "BUG-{:04},{},{},CLOSED,DONE,{},{},\"{}\",BUG",
            i + 1,
            created.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            closed,
            DEVELOPERS[dev],
            time_spent,
            sentence(topic, &mut rng),
        ));
    }

    // Texture the export the way real tracker dumps look: a couple of open
    // issues, a drive-by contributor with too little history, reports with
    // no description, and one with no usable fixing time at all.
    let extra = base + Duration::days(90);
    let fmt = |offset: i64| (extra + Duration::hours(offset)).to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    rows.push(format!(
        "BUG-9001,{},,OPEN,,alice,,\"socket timeout under proxy handshake\",BUG",
        fmt(0)
    ));
    rows.push(format!(
        "BUG-9002,{},{},CLOSED,WONTFIX,bob,3.00,\"render glyph scroll artifact\",TASK",
        fmt(1),
        fmt(30)
    ));
    rows.push(format!("BUG-9003,{},{},CLOSED,DONE,guest,2.50,\"heap overflow in alloc\",BUG", fmt(2), fmt(20)));
    rows.push(format!("BUG-9004,{},{},CLOSED,DONE,guest,1.75,\"query deadlock on migration\",BUG", fmt(3), fmt(21)));
    rows.push(format!("BUG-9005,{},{},CLOSED,DONE,carol,4.00,\"\",BUG", fmt(4), fmt(22)));
    rows.push(format!("BUG-9006,{},{},CLOSED,DONE,dan,2.25,\"   \",BUG", fmt(5), fmt(23)));
    rows.push(format!("BUG-9007,{},,CLOSED,DONE,erin,,\"password expiry loop on login\",BUG", fmt(6)));

    let header = "bug_id,created_at,closed_at,status,resolution,assignee,time_spent_hours,description,issue_type";
    let csv = format!("{header}\n{}\n", rows.join("\n"));

    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_bugs.csv");
    fs::create_dir_all(out.parent().unwrap()).unwrap();
    fs::write(&out, csv).unwrap();
    println!("wrote {} rows to {}", rows.len(), out.display());
}
