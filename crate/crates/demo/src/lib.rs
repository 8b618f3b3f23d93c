//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Three interactive operations, each returning a JSON string the page
//! renders with plain canvas drawing:
//!
//! * [`solve_random_matching`] — one seeded cost matrix, solved and certified.
//! * [`simulate_stream`] — a planted bug stream pushed through the full
//!   pipeline (topics, scores, batched assignment) with load and time totals.
//! * [`explore_topics`] — coherence curve over candidate topic counts on a
//!   planted multi-cluster corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use triage_core::assign::{km_min_cost, CostMatrix};
use triage_core::eval::{run_fold_detailed, FoldSpec, PipelineConfig};
use triage_core::synth;
use triage_core::topics::{fit_lda, label_documents, select_topic_count, LdaParams};

fn params(seed: u64) -> LdaParams {
    LdaParams { alpha: Some(0.1), iterations: 150, burn_in: 30, seed, ..LdaParams::default() }
}

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(value) => value.to_string(),
        Err(message) => json!({ "error": message }).to_string(),
    }
}

/// Exhaustive minimum, shown next to the solver's total for small n.
fn brute_force_min(matrix: &CostMatrix) -> f64 {
    fn recurse(m: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == m.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..m.len() {
            if !used[c] {
                used[c] = true;
                recurse(m, row + 1, used, acc + m.at(row, c), best);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    recurse(matrix, 0, &mut vec![false; matrix.len()], 0.0, &mut best);
    best
}

/// Solve one seeded random n x n cost matrix and report the matching, a
/// greedy baseline, the dual certificate, and (for n <= 7) the brute-force
/// optimum.
#[wasm_bindgen]
pub fn solve_random_matching(n: usize, seed: u64) -> String {
    respond(solve_random_matching_impl(n, seed))
}

fn solve_random_matching_impl(n: usize, seed: u64) -> Result<Value, String> {
    let n = n.clamp(1, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(1..=20) as f64).collect())
        .collect();
    let matrix = CostMatrix::from_grid(rows.clone()).map_err(|e| e.to_string())?;
    let matching = km_min_cost(&matrix);

    // Greedy baseline: rows in order, cheapest free column.
    let mut used = vec![false; n];
    let mut greedy_total = 0.0;
    let mut greedy_pairs = Vec::with_capacity(n);
    for r in 0..n {
        let (c, cost) = (0..n)
            .filter(|&c| !used[c])
            .map(|c| (c, matrix.at(r, c)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap();
        used[c] = true;
        greedy_total += cost;
        greedy_pairs.push((r, c));
    }

    let certificate = matching.certificate(&matrix);
    let tol = 1e-9 * matrix.max_entry();
    Ok(json!({
        "n": n,
        "cost": rows,
        "pairs": matching.pairs,
        "total_cost": matching.total_cost,
        "greedy_pairs": greedy_pairs,
        "greedy_total": greedy_total,
        "brute_total": if n <= 7 { Some(brute_force_min(&matrix)) } else { None },
        "certificate_ok": certificate.max_feasibility_violation <= tol
            && certificate.max_matched_slack <= tol,
    }))
}

/// Run a planted bug stream through the whole pipeline: the first half is
/// history, the second half is assigned in load-normalized batches. With
/// `pessimal` ground truth every topic goes to a slow developer, so the
/// matcher has time to win back; otherwise history is already optimal.
#[wasm_bindgen]
pub fn simulate_stream(devs: usize, batches: usize, pessimal: bool, seed: u64) -> String {
    respond(simulate_stream_impl(devs, batches, pessimal, seed))
}

fn simulate_stream_impl(
    devs: usize,
    batches: usize,
    pessimal: bool,
    seed: u64,
) -> Result<Value, String> {
    let devs = devs.clamp(2, 6);
    let batches = batches.clamp(6, 60);
    let dataset = synth::planted_dataset(devs, batches, pessimal, 1.0, 10.0, seed);
    let half_batches = batches / 2;
    let fold = FoldSpec {
        fold_index: 1,
        train_start: 0,
        train_end: half_batches * devs,
        test_start: half_batches * devs,
        test_end: batches * devs,
    };
    let config = PipelineConfig {
        min_fixes: 1,
        min_df: 1,
        k_min: devs,
        k_max: devs,
        lda: params(seed),
        ..PipelineConfig::default()
    };
    let run = run_fold_detailed(&dataset, &fold, &config).map_err(|e| e.to_string())?;
    Ok(json!({
        "developers": run.report.developer_count,
        "test_bugs": fold.test_end - fold.test_start,
        "batches": run.plan.batches,
        "k_selected": run.report.k_selected,
        "real_total_hours": run.report.real_total_hours,
        "predicted_total_hours": run.report.predicted_total_hours,
        "time_reduction_pct": run.report.time_reduction_pct,
        "optimized_load": run.plan.load,
        "real_load": run.real_load,
    }))
}

/// Fit a planted multi-cluster corpus at every candidate topic count and
/// report the coherence curve, the selected count, and how cleanly the
/// planted clusters are recovered.
#[wasm_bindgen]
pub fn explore_topics(clusters: usize, docs_per_cluster: usize, k_max: usize, seed: u64) -> String {
    respond(explore_topics_impl(clusters, docs_per_cluster, k_max, seed))
}

fn explore_topics_impl(
    clusters: usize,
    docs_per_cluster: usize,
    k_max: usize,
    seed: u64,
) -> Result<Value, String> {
    let clusters = clusters.clamp(2, 6);
    let docs_per_cluster = docs_per_cluster.clamp(10, 80);
    let k_max = k_max.clamp(2, 8);
    let (vocab, docs, planted) = synth::clustered_corpus(clusters, docs_per_cluster, 10, seed);

    let p = params(seed);
    let (best_k, curve) =
        select_topic_count(&vocab, &docs, 1, k_max, &p, 10).map_err(|e| e.to_string())?;
    let model = fit_lda(&vocab, &docs, &p.config_for(clusters)).map_err(|e| e.to_string())?;
    let labels = label_documents(&model, &docs);
    let purity = synth::label_purity(&planted, &labels);

    let top_words: Vec<Vec<String>> = (0..clusters)
        .map(|t| {
            model
                .top_words(t, 5)
                .into_iter()
                .map(|id| vocab.token(id).to_string())
                .collect()
        })
        .collect();

    Ok(json!({
        "clusters": clusters,
        "documents": docs.len(),
        "curve": curve.iter().map(|(k, s)| json!({ "k": k, "coherence": s })).collect::<Vec<_>>(),
        "best_k": best_k,
        "purity_at_planted_k": purity,
        "top_words": top_words,
    }))
}
