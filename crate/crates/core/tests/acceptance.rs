//! Acceptance suite: one test per release criterion, each printing a
//! `PASS` line (run with `--nocapture` to see them).
//!
//! The solver checks compare against brute-force oracles implemented here,
//! independent of the library's search path.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triage_core::assign::{build_batch_matrix, iterative_assign, km_min_cost, CostMatrix};
use triage_core::eval::{run_all, PipelineConfig};
use triage_core::ingest::{filter_and_order, load_reports, InputFormat};
use triage_core::scoring::{build_score_matrix, FallbackPolicy, ScoreMatrix};
use triage_core::synth;
use triage_core::topics::{fit_lda, label_documents, select_topic_count, LdaParams};
use triage_core::TopicLabel;

fn pass(number: u32, line: &str) {
    println!("acceptance {number:>2}: {line} ... PASS");
}

/// Exact minimum assignment cost over all permutations.
fn brute_force_min(matrix: &CostMatrix) -> f64 {
    fn recurse(matrix: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if row == matrix.len() {
            *best = acc;
            return;
        }
        for c in 0..matrix.len() {
            if !used[c] {
                used[c] = true;
                recurse(matrix, row + 1, used, acc + matrix.at(row, c), best);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    recurse(matrix, 0, &mut vec![false; matrix.len()], 0.0, &mut best);
    best
}

fn random_integer_matrix(rng: &mut ChaCha8Rng, n: usize, max: u32) -> CostMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(0..=max) as f64).collect())
        .collect();
    CostMatrix::from_grid(rows).unwrap()
}

#[test]
fn acceptance_01_solver_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    for case in 0..1000 {
        let n = rng.random_range(2..=8);
        let matrix = random_integer_matrix(&mut rng, n, 100);
        let matching = km_min_cost(&matrix);
        let oracle = brute_force_min(&matrix);
        assert_eq!(
            matching.total_cost, oracle,
            "case {case}: solver {} vs oracle {oracle}",
            matching.total_cost
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "suite took {elapsed:?}");
    pass(1, &format!("1000 integer matrices (n in 2..=8) equal the permutation oracle exactly in {elapsed:.2?}"));
}

#[test]
fn acceptance_02_dual_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    for case in 0..200 {
        let n = rng.random_range(2..=200);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 100.0).collect())
            .collect();
        let matrix = CostMatrix::from_grid(rows).unwrap();
        let matching = km_min_cost(&matrix);
        let tol = 1e-9 * matrix.max_entry();
        let report = matching.certificate(&matrix);
        assert!(
            report.max_feasibility_violation <= tol,
            "case {case} (n={n}): feasibility violated by {}",
            report.max_feasibility_violation
        );
        assert!(
            report.max_matched_slack <= tol,
            "case {case} (n={n}): matched slack {}",
            report.max_matched_slack
        );
        assert!((report.label_sum - report.matched_weight).abs() <= 1e-6 * n as f64);
    }

    // O(n^3) sanity: a single n = 200 solve stays under a second.
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..200).map(|_| rng.random::<f64>() * 100.0).collect())
        .collect();
    let matrix = CostMatrix::from_grid(rows).unwrap();
    let start = Instant::now();
    let _ = km_min_cost(&matrix);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "n=200 solve took {elapsed:?}");
    pass(2, &format!("dual feasibility + complementary slackness on 200 matrices (n <= 200); n=200 solve in {elapsed:.2?}"));
}

/// Score matrix with every (developer, topic) cell supported.
fn dense_scores(devs: usize, topics: usize, seed: u64) -> ScoreMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    let mut labels = Vec::new();
    for dev in 0..devs {
        for topic in 0..topics {
            let id = format!("h{dev}-{topic}");
            reports.push(synth::report_with_hours(
                &id,
                &format!("dev{dev:03}"),
                0,
                rng.random_range(1..=40) as f64,
            ));
            labels.push(TopicLabel { bug_id: id, topic, weight: 1.0 });
        }
    }
    build_score_matrix(&reports, &labels, topics, FallbackPolicy::default()).unwrap()
}

fn random_bugs(count: usize, topics: usize, seed: u64) -> Vec<TopicLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| TopicLabel {
            bug_id: format!("bug{i:05}"),
            topic: rng.random_range(0..topics),
            weight: 1.0,
        })
        .collect()
}

#[test]
fn acceptance_03_load_normalization() {
    for (bugs, devs) in [(5usize, 2usize), (2532, 83), (1000, 7), (9, 9)] {
        let scores = dense_scores(devs, 5, 0xACCE_0003);
        let dev_names = scores.developers().to_vec();
        let plan = iterative_assign(&random_bugs(bugs, 5, bugs as u64), &dev_names, &scores).unwrap();
        let total: usize = plan.load.values().map(|&n| n as usize).sum();
        assert_eq!(total, bugs, "({bugs}, {devs}): loads must sum to the bug count");
        assert!(plan.load_spread() <= 1, "({bugs}, {devs}): spread {}", plan.load_spread());
        assert_eq!(plan.batches, bugs.div_ceil(devs));
        if (bugs, devs) == (2532, 83) {
            assert_eq!(plan.batches, 31);
        }
        if bugs == devs {
            assert!(plan.load.values().all(|&n| n == 1));
        }
    }
    pass(3, "load spread <= 1 and full coverage for (5,2), (2532,83) with 31 batches, (1000,7), (9,9)");
}

#[test]
fn acceptance_04_last_batch_optimality() {
    // Padded KM must equal the brute-force minimum over every way to pick
    // |bugs| developers and match them.
    fn min_over_subsets(grid: &[Vec<f64>], d: usize) -> f64 {
        fn recurse(grid: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == grid.len() {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    recurse(grid, row + 1, used, acc + grid[row][c], best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        recurse(grid, 0, &mut vec![false; d], 0.0, &mut best);
        best
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0004);
    let mut checked = 0;
    for d in 2..=6usize {
        for b in 1..d {
            for _ in 0..25 {
                let grid: Vec<Vec<f64>> = (0..b)
                    .map(|_| (0..d).map(|_| rng.random_range(1..=50) as f64).collect())
                    .collect();
                let mut padded = grid.clone();
                padded.extend(std::iter::repeat_n(vec![0.0; d], d - b));
                let matrix = CostMatrix::from_grid(padded).unwrap();
                let matching = km_min_cost(&matrix);
                let real_cost: f64 = matching
                    .pairs
                    .iter()
                    .filter(|&&(r, _)| r < b)
                    .map(|&(r, c)| matrix.at(r, c))
                    .sum();
                assert_eq!(real_cost, min_over_subsets(&grid, d), "d={d}, b={b}");
                checked += 1;
            }
        }
    }
    pass(4, &format!("{checked} padded last batches equal the developer-subset brute force"));
}

fn planted_params(seed: u64) -> LdaParams {
    LdaParams { alpha: Some(0.1), iterations: 200, burn_in: 50, seed, ..LdaParams::default() }
}

#[test]
fn acceptance_05_topic_recovery() {
    let (vocab, docs, planted) = synth::clustered_corpus(2, 50, 10, 42);
    assert_eq!(docs.len(), 100);
    let params = planted_params(42);
    let model = fit_lda(&vocab, &docs, &params.config_for(2)).unwrap();
    let labels = label_documents(&model, &docs);
    let purity = synth::label_purity(&planted, &labels);
    assert!(purity >= 0.90, "purity {purity}");

    let (best_k, curve) = select_topic_count(&vocab, &docs, 1, 4, &params, 10).unwrap();
    assert_eq!(best_k, 2, "coherence curve {curve:?}");
    pass(5, &format!("two-cluster corpus: purity {purity:.3} at K=2; coherence search over 1..=4 picks 2"));
}

#[test]
fn acceptance_06_lda_invariants() {
    let corpora = [
        synth::clustered_corpus(2, 50, 10, 7),
        synth::clustered_corpus(4, 25, 8, 8),
        synth::clustered_corpus(6, 10, 12, 9),
    ];
    for (vocab, docs, _) in &corpora {
        for k in [1, 3, 5] {
            let model = fit_lda(vocab, docs, &planted_params(11).config_for(k)).unwrap();
            model.verify_counts(docs).expect("count conservation");
            for row in &model.theta {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9, "theta row sums to {sum}");
                assert!(row.iter().all(|&p| p > 0.0));
            }
        }
    }
    pass(6, "count conservation exact and theta rows sum to 1 +/- 1e-9 across corpora and K");
}

#[test]
fn acceptance_07_synthetic_time_reduction_direction() {
    let config = PipelineConfig {
        min_fixes: 2,
        min_df: 1,
        k_min: 4,
        k_max: 4,
        lda: planted_params(42),
        ..PipelineConfig::default()
    };

    // Ground truth cycling through slow developers: every fold improves.
    let pessimal = synth::planted_dataset(4, 40, true, 1.0, 10.0, 13);
    let report = run_all(&pessimal, &config).unwrap();
    assert!(report.all_folds_succeeded(), "failures: {:?}", report.failures);
    for fold in &report.folds {
        assert!(
            fold.time_reduction_pct > 0.0,
            "fold {} reduction {}",
            fold.fold_index,
            fold.time_reduction_pct
        );
        assert!(fold.optimized_load.spread() <= 1, "fold {} load spread", fold.fold_index);
    }

    // Ground truth already optimal: nothing left to gain, in any fold.
    let optimal = synth::planted_dataset(4, 40, false, 1.0, 10.0, 13);
    let report = run_all(&optimal, &config).unwrap();
    assert!(report.all_folds_succeeded(), "failures: {:?}", report.failures);
    for fold in &report.folds {
        assert!(
            fold.time_reduction_pct.abs() <= 1e-6,
            "fold {} reduction {}",
            fold.fold_index,
            fold.time_reduction_pct
        );
        assert!(fold.optimized_load.spread() <= 1, "fold {} load spread", fold.fold_index);
    }
    pass(7, "reduction > 0 on every fold of the slow-assignment stream; = 0 +/- 1e-6 when ground truth is already optimal");
}

#[test]
fn acceptance_08_baseline_dominance() {
    // Greedy row-by-row baseline, test-suite only: each bug takes the
    // cheapest still-free developer in stream order.
    fn greedy_cost(scores: &ScoreMatrix, bugs: &[TopicLabel], devs: &[String]) -> f64 {
        let mut used = vec![false; devs.len()];
        let mut total = 0.0;
        for bug in bugs {
            let (best, cost) = devs
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, dev)| (i, scores.predicted_hours(dev, bug.topic).unwrap()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
                .unwrap();
            used[best] = true;
            total += cost;
        }
        total
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    for case in 0..500 {
        let devs = rng.random_range(2..=12);
        let topics = rng.random_range(2..=6);
        let batch = rng.random_range(1..=devs);
        let scores = dense_scores(devs, topics, rng.random());
        let dev_names = scores.developers().to_vec();
        let bugs = random_bugs(batch, topics, rng.random());

        let matrix = build_batch_matrix(&bugs, &dev_names, &scores).unwrap();
        let matching = km_min_cost(&matrix);
        let km_real: f64 = matching
            .pairs
            .iter()
            .filter(|&&(r, _)| r < batch)
            .map(|&(r, c)| matrix.at(r, c))
            .sum();
        let greedy = greedy_cost(&scores, &bugs, &dev_names);
        assert!(
            km_real <= greedy + 1e-9,
            "case {case}: matcher {km_real} worse than greedy {greedy}"
        );
    }
    pass(8, "matcher cost <= greedy row-by-row cost on 500 random batches");
}

#[test]
fn acceptance_09_end_to_end_determinism() {
    let csv = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/synthetic_bugs.csv"))
        .expect("bundled dataset present");
    let config = PipelineConfig {
        min_fixes: 3,
        k_min: 1,
        k_max: 4,
        lda: LdaParams { iterations: 150, burn_in: 30, seed: 42, ..LdaParams::default() },
        ..PipelineConfig::default()
    };

    let run = || {
        let reports = load_reports(csv.as_slice(), InputFormat::Csv).unwrap();
        let dataset = filter_and_order(reports, config.min_fixes).unwrap();
        let report = run_all(&dataset, &config).unwrap();
        serde_json::to_vec_pretty(&report).unwrap()
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "reports differ between identical runs");

    let report: triage_core::EvaluationReport = serde_json::from_slice(&first).unwrap();
    assert!(report.all_folds_succeeded(), "failures: {:?}", report.failures);
    pass(9, &format!(
        "two full evaluations of the bundled dataset are byte-identical ({} folds, {} bytes)",
        report.folds.len(),
        first.len()
    ));
}
