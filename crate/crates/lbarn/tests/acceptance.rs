//! Acceptance suite: one test per criterion, each printing a `[PASS]`,
//! `[FAIL]` or `[SKIP]` line (run with `--nocapture` to see them all).
//!
//! Criteria that need the published benchmark datasets look for them under
//! `$LBARN_BENCH_DATA` (or `data/` at the workspace root) as
//! `<name>.train.amat` / `<name>.valid.amat` / `<name>.test.amat` in the
//! dense 0/1 text format, and skip with a visible line when the files are
//! absent; `scripts/fetch_benchmarks.py` downloads them on a networked
//! machine. Everything else runs on deterministic synthetic fixtures.

use std::path::PathBuf;

use lbarn::booster::sigmoid;
use lbarn::selection::{select_common, select_individual, select_linearized, LinearizedDirection};
use lbarn::tree::{fit_tree, split_gain, FitWeights, Node};
use lbarn::{
    refit_leaves, synth, train_arn, train_baseline, ArnModel, BaselineOptions, BinaryDataset,
    BoostConfig, OrderingChoice, SelectionMethod, TrainOptions,
};

fn check(criterion: &str, desc: &str, ok: bool, detail: &str) {
    if ok {
        println!("[PASS] criterion {criterion}: {desc} ({detail})");
    } else {
        println!("[FAIL] criterion {criterion}: {desc} ({detail})");
        panic!("criterion {criterion} failed: {detail}");
    }
}

fn skip(criterion: &str, dataset: &str) {
    println!(
        "[SKIP] criterion {criterion}: benchmark dataset {dataset:?} not found under {} \
         (set LBARN_BENCH_DATA or run scripts/fetch_benchmarks.py)",
        bench_dir().display()
    );
}

fn bench_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("LBARN_BENCH_DATA") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("data")
}

struct Splits {
    train: BinaryDataset,
    valid: BinaryDataset,
    test: BinaryDataset,
}

/// Load one benchmark's splits, checking the published shapes so that wrong
/// files fail loudly instead of producing meaningless numbers.
fn load_benchmark(name: &str, shape: (usize, usize, usize, usize)) -> Option<Splits> {
    let dir = bench_dir();
    let path = |split: &str| dir.join(format!("{name}.{split}.amat"));
    if !path("train").exists() {
        return None;
    }
    let train = BinaryDataset::load(path("train")).expect("readable train split");
    let valid = BinaryDataset::load(path("valid")).expect("readable valid split");
    let test = BinaryDataset::load(path("test")).expect("readable test split");
    let (n_train, n_valid, n_test, d) = shape;
    assert_eq!(
        (train.n_samples(), valid.n_samples(), test.n_samples(), train.n_dims()),
        (n_train, n_valid, n_test, d),
        "{name}: unexpected split shapes; wrong files?"
    );
    assert_eq!(valid.n_dims(), d);
    assert_eq!(test.n_dims(), d);
    Some(Splits { train, valid, test })
}

fn boosted_opts(leaves: usize, shrinkage: f64, rounds: usize, selection: SelectionMethod) -> TrainOptions {
    TrainOptions {
        boost: BoostConfig {
            rounds,
            leaves,
            shrinkage,
            ..BoostConfig::default()
        },
        selection,
        ..TrainOptions::default()
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: Mushrooms, J=8, nu=0.02, T=1000, individual selection.
// ---------------------------------------------------------------------------
#[test]
fn criterion_1_mushrooms_boosted_and_refit() {
    let Some(s) = load_benchmark("mushrooms", (2000, 500, 5624, 112)) else {
        skip("1", "mushrooms");
        return;
    };
    let opts = boosted_opts(8, 0.02, 1000, SelectionMethod::Individual);
    let outcome = train_arn(&s.train, &s.valid, &opts).unwrap();
    let eval = outcome.model.evaluate(&s.test);
    check(
        "1a",
        "Mushrooms individual test LL within -9.62 +- 0.3",
        (eval.mean - (-9.62)).abs() <= 0.3,
        &format!("measured {:.4}", eval.mean),
    );
    check(
        "1b",
        "Mushrooms std error within 0.023 +- 50%",
        (eval.std_error - 0.023).abs() <= 0.0115,
        &format!("measured {:.4}", eval.std_error),
    );
    let pooled = s.train.vstack(&s.valid).unwrap();
    let refit = refit_leaves(&outcome.model, &pooled, &opts.boost).unwrap();
    let refit_eval = refit.evaluate(&s.test);
    check(
        "1c",
        "Mushrooms refit test LL within -9.54 +- 0.3",
        (refit_eval.mean - (-9.54)).abs() <= 0.3,
        &format!("measured {:.4}", refit_eval.mean),
    );
    check(
        "1d",
        "refitting on pooled data does not hurt the test likelihood",
        refit_eval.mean >= eval.mean - 0.02,
        &format!("refit {:.4} vs unrefit {:.4}", refit_eval.mean, eval.mean),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: Adult, J=2, nu=0.1; individual and linearized-forward.
// ---------------------------------------------------------------------------
#[test]
fn criterion_2_adult_individual_and_linearized() {
    let Some(s) = load_benchmark("adult", (5000, 1414, 26147, 123)) else {
        skip("2", "adult");
        return;
    };
    let opts = boosted_opts(2, 0.1, 1000, SelectionMethod::Individual);
    let mut outcome = train_arn(&s.train, &s.valid, &opts).unwrap();
    let individual = outcome.model.evaluate(&s.test).mean;
    check(
        "2a",
        "Adult individual test LL within -13.09 +- 0.3",
        (individual - (-13.09)).abs() <= 0.3,
        &format!("measured {individual:.4}"),
    );
    let linearized = select_linearized(&outcome.traces, LinearizedDirection::Forward);
    outcome.model.set_truncations(&linearized.truncations);
    let lin = outcome.model.evaluate(&s.test).mean;
    check(
        "2b",
        "Adult linearized-forward test LL within -13.07 +- 0.3",
        (lin - (-13.07)).abs() <= 0.3,
        &format!("measured {lin:.4}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: DNA individual/common, and NIPS-0-12 validation overfitting.
// ---------------------------------------------------------------------------
#[test]
fn criterion_3_dna_and_nips() {
    match load_benchmark("dna", (1400, 600, 1186, 180)) {
        None => skip("3 (dna)", "dna"),
        Some(s) => {
            // Common selection needs aligned rounds, so early exit is off and
            // both selections reuse one boosting pass.
            let mut opts = boosted_opts(16, 0.02, 1000, SelectionMethod::Individual);
            opts.boost.early_exit = false;
            let mut outcome = train_arn(&s.train, &s.valid, &opts).unwrap();
            let individual = outcome.model.evaluate(&s.test).mean;
            check(
                "3a",
                "DNA individual test LL within -78.79 +- 1.5",
                (individual - (-78.79)).abs() <= 1.5,
                &format!("measured {individual:.4}"),
            );
            let common = select_common(&outcome.traces).unwrap();
            outcome.model.set_truncations(&common.truncations);
            let common_ll = outcome.model.evaluate(&s.test).mean;
            check(
                "3b",
                "DNA common test LL within -78.64 +- 1.5",
                (common_ll - (-78.64)).abs() <= 1.5,
                &format!("measured {common_ll:.4}"),
            );
        }
    }

    match load_benchmark("nips-0-12", (400, 100, 1240, 500)) {
        None => skip("3 (nips-0-12)", "nips-0-12"),
        Some(s) => {
            let mut opts = boosted_opts(2, 0.02, 1000, SelectionMethod::Common);
            opts.boost.early_exit = false;
            let mut outcome = train_arn(&s.train, &s.valid, &opts).unwrap();
            let common_ll = outcome.model.evaluate(&s.test).mean;
            check(
                "3c",
                "NIPS-0-12 common test LL within -271.53 +- 5",
                (common_ll - (-271.53)).abs() <= 5.0,
                &format!("measured {common_ll:.4}"),
            );
            let individual = select_individual(&outcome.traces);
            outcome.model.set_truncations(&individual.truncations);
            let individual_ll = outcome.model.evaluate(&s.test).mean;
            check(
                "3d",
                "NIPS-0-12 individual overfits its tiny validation set",
                individual_ll < common_ll,
                &format!("individual {individual_ll:.4} vs common {common_ll:.4}"),
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 4: OCR-letters subsample, boosted beats single tree by >= 1 nat.
// ---------------------------------------------------------------------------
#[test]
fn criterion_4_ocr_subsample_beats_single_tree() {
    let Some(s) = load_benchmark("ocr-letters", (32152, 10000, 10000, 128)) else {
        skip("4", "ocr-letters");
        return;
    };
    let sub_train = BinaryDataset::from_rows(
        &(0..5000).map(|r| s.train.row(r)).collect::<Vec<_>>(),
    )
    .unwrap();
    let opts = boosted_opts(64, 0.02, 300, SelectionMethod::Individual);
    let boosted = train_arn(&sub_train, &s.valid, &opts).unwrap();
    let boosted_ll = boosted.model.evaluate(&s.test).mean;

    let baseline = train_baseline(&sub_train, &s.valid, &BaselineOptions::default()).unwrap();
    let baseline_ll = baseline.model.evaluate(&s.test).mean;
    check(
        "4",
        "OCR subsample: boosted beats the single-tree baseline by >= 1 nat",
        boosted_ll >= baseline_ll + 1.0,
        &format!("boosted {boosted_ll:.4} vs single tree {baseline_ll:.4}"),
    );

    // Informational: split-gain importance of the central pixel (row 8,
    // column 4 of the 16x8 grid) concentrated on its four nearest preceding
    // neighbors; at full scale about 62% of the total gain.
    let central = 7 * 8 + 3;
    let report = lbarn::variable_importance(&boosted.model, central);
    let neighbors = [central - 1, central - 8, central - 9, central - 7];
    let share: f64 = neighbors
        .iter()
        .filter_map(|v| report.normalized.get(v))
        .sum();
    println!(
        "[info] criterion 4: central-pixel four-neighbor gain share {:.1}% (full-scale runs: ~62%)",
        share * 100.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: single-tree baseline on Mushrooms.
// ---------------------------------------------------------------------------
#[test]
fn criterion_5_mushrooms_single_tree_baseline() {
    let Some(s) = load_benchmark("mushrooms", (2000, 500, 5624, 112)) else {
        skip("5", "mushrooms");
        return;
    };
    let outcome = train_baseline(&s.train, &s.valid, &BaselineOptions::default()).unwrap();
    let mean = outcome.model.evaluate(&s.test).mean;
    check(
        "5",
        "Mushrooms single-tree baseline test LL within -9.59 +- 0.3",
        (mean - (-9.59)).abs() <= 0.3,
        &format!("measured {mean:.4}, pseudocount {}", outcome.pseudocount),
    );
}

// ---------------------------------------------------------------------------
// Synthetic fixtures for criteria 6-11.
// ---------------------------------------------------------------------------
struct Fixture {
    name: &'static str,
    train: BinaryDataset,
    valid: BinaryDataset,
}

fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "chain12",
            train: synth::chain(800, 12, 0.2, 60),
            valid: synth::chain(300, 12, 0.2, 61),
        },
        Fixture {
            name: "clusters10",
            train: synth::clusters(600, 10, 4, 0.15, 62, 620),
            valid: synth::clusters(250, 10, 4, 0.15, 62, 621),
        },
        Fixture {
            name: "clusters8",
            train: synth::clusters(400, 8, 2, 0.05, 63, 630),
            valid: synth::clusters(150, 8, 2, 0.05, 63, 631),
        },
        Fixture {
            name: "coins6",
            train: synth::coins(500, 6, 64),
            valid: synth::coins(200, 6, 65),
        },
    ]
}

fn fixture_opts(selection: SelectionMethod) -> TrainOptions {
    TrainOptions {
        boost: BoostConfig {
            rounds: 120,
            leaves: 4,
            shrinkage: 0.1,
            early_exit: false,
            ..BoostConfig::default()
        },
        selection,
        ..TrainOptions::default()
    }
}

fn total_probability(model: &ArnModel) -> f64 {
    let d = model.n_dims();
    assert!(d <= 20);
    (0u64..(1 << d))
        .map(|bits| {
            let row: Vec<u8> = (0..d).map(|c| ((bits >> c) & 1) as u8).collect();
            model.joint_log_likelihood(&row).exp()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Criterion 6: normalization by enumeration on every fixture-trained model.
// ---------------------------------------------------------------------------
#[test]
fn criterion_6_normalization_by_enumeration() {
    let mut worst: f64 = 0.0;
    for fx in fixtures() {
        // Boosted (individual), refit, baseline, and an entropy ordering.
        let outcome = train_arn(&fx.train, &fx.valid, &fixture_opts(SelectionMethod::Individual))
            .unwrap();
        worst = worst.max((total_probability(&outcome.model) - 1.0).abs());

        let pooled = fx.train.vstack(&fx.valid).unwrap();
        let refit = refit_leaves(&outcome.model, &pooled, &BoostConfig::default()).unwrap();
        worst = worst.max((total_probability(&refit) - 1.0).abs());

        let baseline = train_baseline(&fx.train, &fx.valid, &BaselineOptions::default()).unwrap();
        worst = worst.max((total_probability(&baseline.model) - 1.0).abs());

        let mut opts = fixture_opts(SelectionMethod::LinearizedForward);
        opts.ordering = OrderingChoice::EntropyDecreasing;
        opts.boost.rounds = 60;
        let ordered = train_arn(&fx.train, &fx.valid, &opts).unwrap();
        worst = worst.max((total_probability(&ordered.model) - 1.0).abs());
    }
    check(
        "6",
        "sum over {0,1}^D of P(x) equals 1 by enumeration on all fixture models",
        worst <= 1e-9,
        &format!("worst |total - 1| = {worst:.3e}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: split-gain non-negativity and split-oracle equivalence.
// ---------------------------------------------------------------------------
#[test]
fn criterion_7_split_gain_oracle_equivalence() {
    let mut checked = 0usize;
    for fx in fixtures() {
        let d = fx.train.n_dims();
        // Uniform-probability weights and weights from a partially trained
        // model, for the last dimension (richest predictor prefix).
        let (preds, targets) = fx.train.prefix_view(d - 1);
        let outcome = train_arn(&fx.train, &fx.valid, &fixture_opts(SelectionMethod::Individual))
            .unwrap();
        let cond = &outcome.model.conditionals()[d - 1];
        let probs_mid: Vec<f64> = (0..fx.train.n_samples())
            .map(|r| {
                let prefix: Vec<u8> = preds.iter().map(|c| c[r]).collect();
                sigmoid(cond.log_odds_at(&prefix, cond.fitted_rounds() / 2))
            })
            .collect();
        for probs in [vec![0.5; targets.len()], probs_mid] {
            let fw = FitWeights::from_probabilities(targets, &probs, 1e-5);
            let rows: Vec<u32> = (0..targets.len() as u32).collect();

            // Exhaustive single-split scan with ties toward the lower index.
            let mut best_var = None;
            let mut best_gain = 0.0;
            for (v, col) in preds.iter().enumerate() {
                let gain = split_gain(&rows, col, &fw);
                assert!(gain >= -1e-12, "{}: negative gain {gain} on var {v}", fx.name);
                if gain > best_gain {
                    best_gain = gain;
                    best_var = Some(v);
                }
            }

            let tree = fit_tree(&preds, &fw, 2, 1e-4, 4.0);
            let greedy_root = match tree.nodes().first() {
                Some(Node::Split { var, .. }) => Some(*var),
                _ => None,
            };
            assert_eq!(
                greedy_root, best_var,
                "{}: greedy root disagrees with exhaustive scan",
                fx.name
            );
            checked += 1;
        }
    }
    check(
        "7",
        "split gains non-negative; greedy root matches exhaustive single-split scan",
        checked == 8,
        &format!("{checked} fixture/weight combinations"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: Newton derivative check against central finite differences.
// ---------------------------------------------------------------------------
#[test]
fn criterion_8_newton_derivative_check() {
    let mut max_rel: f64 = 0.0;
    for fx in fixtures() {
        let d = fx.train.n_dims();
        let (preds, targets) = fx.train.prefix_view(d - 1);
        let outcome = train_arn(&fx.train, &fx.valid, &fixture_opts(SelectionMethod::Individual))
            .unwrap();
        let cond = &outcome.model.conditionals()[d - 1];
        for t in [0, cond.fitted_rounds() / 2, cond.fitted_rounds()] {
            let report = lbarn::newton_derivative_check(cond, &preds, targets, t, 1e-4, 1e-5);
            max_rel = max_rel.max(report.max_rel_error);
            assert!(
                report.passed,
                "{} at round {t}: rel error {}",
                fx.name, report.max_rel_error
            );
        }
    }
    check(
        "8",
        "analytic first/second derivatives match central finite differences",
        max_rel < 1e-5,
        &format!("max relative error {max_rel:.3e}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: stacked-copies robustness at reduced scale.
// ---------------------------------------------------------------------------
#[test]
fn criterion_9_stacked_copies_robustness() {
    let Some(s) = load_benchmark("ocr-letters", (32152, 10000, 10000, 128)) else {
        skip("9", "ocr-letters");
        return;
    };
    let take = |ds: &BinaryDataset, n: usize| {
        BinaryDataset::from_rows(&(0..n).map(|r| ds.row(r)).collect::<Vec<_>>()).unwrap()
    };
    let train = lbarn::stacked_copies(&take(&s.train, 2000), 3, 901).unwrap();
    let valid = lbarn::stacked_copies(&take(&s.valid, 2000), 3, 902).unwrap();
    let test = lbarn::stacked_copies(&take(&s.test, 2000), 3, 903).unwrap();

    let opts = boosted_opts(16, 0.02, 400, SelectionMethod::Individual);
    let outcome = train_arn(&train, &valid, &opts).unwrap();
    let cum = outcome.model.cumulative_log_likelihood(&test);
    let copy1 = cum[127];
    let copy2 = cum[255] - cum[127];
    let copy3 = cum[383] - cum[255];
    println!("[info] criterion 9: per-copy test LL {copy1:.2} / {copy2:.2} / {copy3:.2}");
    check(
        "9",
        "copies trained behind 128/256 irrelevant variables stay within 1.5 nats of copy 1",
        (copy1 - copy2) <= 1.5 && (copy1 - copy3) <= 1.5,
        &format!("copy1 {copy1:.3}, copy2 {copy2:.3}, copy3 {copy3:.3}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: sampling goodness of fit and seed determinism.
// ---------------------------------------------------------------------------
#[test]
fn criterion_10_sampling_goodness_of_fit() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    let train = synth::clusters(600, 6, 3, 0.12, 70, 700);
    let valid = synth::clusters(250, 6, 3, 0.12, 70, 701);
    let outcome = train_arn(&train, &valid, &fixture_opts(SelectionMethod::Individual)).unwrap();
    let model = outcome.model;

    let n = 1_000_000usize;
    let sampled = model.sample(424_242, n);
    let mut counts = [0u64; 64];
    for r in 0..n {
        let mut idx = 0usize;
        for c in 0..6 {
            idx |= (sampled.get(r, c) as usize) << c;
        }
        counts[idx] += 1;
    }
    let mut stat = 0.0;
    for (idx, &count) in counts.iter().enumerate() {
        let row: Vec<u8> = (0..6).map(|c| ((idx >> c) & 1) as u8).collect();
        let expected = n as f64 * model.joint_log_likelihood(&row).exp();
        stat += (count as f64 - expected).powi(2) / expected;
    }
    let p_value = 1.0 - ChiSquared::new(63.0).unwrap().cdf(stat);
    check(
        "10a",
        "chi-square fit of 1e6 samples against exact probabilities (p > 1e-3)",
        p_value > 1e-3,
        &format!("statistic {stat:.2} on 63 dof, p = {p_value:.4}"),
    );

    let again = model.sample(424_242, 1000);
    let first = model.sample(424_242, 1000);
    check(
        "10b",
        "seeded sampling is bit-exactly deterministic",
        again == first,
        "two draws with the same seed",
    );
}

// ---------------------------------------------------------------------------
// Criterion 11: refit idempotence and selection dominance on every fixture.
// ---------------------------------------------------------------------------
#[test]
fn criterion_11_refit_idempotence_and_selection_dominance() {
    let mut worst_leaf_dev: f64 = 0.0;
    for fx in fixtures() {
        let outcome = train_arn(&fx.train, &fx.valid, &fixture_opts(SelectionMethod::Individual))
            .unwrap();
        let refit = refit_leaves(&outcome.model, &fx.train, &fixture_opts(SelectionMethod::Individual).boost)
            .unwrap();
        for (a, b) in outcome.model.conditionals().iter().zip(refit.conditionals()) {
            for (ta, tb) in a.trees().iter().zip(b.trees()) {
                for (na, nb) in ta.nodes().iter().zip(tb.nodes()) {
                    match (na, nb) {
                        (Node::Leaf { gamma: ga }, Node::Leaf { gamma: gb }) => {
                            worst_leaf_dev = worst_leaf_dev.max((ga - gb).abs());
                        }
                        (na, nb) => assert_eq!(na, nb, "{}: topology changed", fx.name),
                    }
                }
            }
        }

        let individual = select_individual(&outcome.traces);
        let common = select_common(&outcome.traces).unwrap();
        assert!(
            individual.valid_ll_at_choice >= common.valid_ll_at_choice - 1e-12,
            "{}: individual {} < common {}",
            fx.name,
            individual.valid_ll_at_choice,
            common.valid_ll_at_choice
        );
    }
    check(
        "11",
        "refit on the training data is idempotent; individual valid LL >= common",
        worst_leaf_dev <= 1e-10,
        &format!("worst refit leaf deviation {worst_leaf_dev:.3e}"),
    );
}
