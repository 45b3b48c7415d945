use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resyduo_core::evaluation::split_fold;
use resyduo_core::knn::ScoredItem;
use resyduo_core::{
    accuracy_metrics, build_projection, cross_validate, error_metrics, generate_synthetic_corpus, kfold_split,
    CutoffConfig, CvSettings, Execution, KnnConfig, ProjectionKind, RatingMatrix, RatingScale, RecommendationList,
    SynthParams,
};
use resyduo_oracle as oracle;

fn interactions(n: usize) -> RatingMatrix {
    let cols = 7;
    RatingMatrix::new(
        (0..n.div_ceil(cols)).map(|r| format!("r{r:03}")).collect(),
        (0..cols).map(|c| format!("c{c}")).collect(),
        (0..n).map(|i| (i / cols, i % cols, 1.0)),
        RatingScale::BINARY,
    )
    .unwrap()
}

#[test]
fn folds_partition_interactions() {
    for n in [13, 100, 103] {
        let m = interactions(n);
        let plan = kfold_split(&m, 10, 99).unwrap();
        assert_eq!(plan.assignments.len(), n);
        let folds = plan.folds();
        let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for size in plan.fold_sizes() {
            assert!(size == n / 10 || size == n.div_ceil(10), "n={n} size={size}");
        }
    }
    let sizes = kfold_split(&interactions(103), 10, 5).unwrap().fold_sizes();
    assert_eq!(sizes.iter().filter(|&&s| s == 11).count(), 3);
    assert_eq!(sizes.iter().filter(|&&s| s == 10).count(), 7);
}

#[test]
fn split_fold_holds_out_exactly_one_fold() {
    let m = interactions(40);
    let plan = kfold_split(&m, 4, 1).unwrap();
    let mut total = 0;
    for fold in 0..4 {
        let split = split_fold(&m, &plan, fold);
        assert_eq!(split.train.observed() + split.test.len(), 40);
        for &(r, c, _) in &split.test {
            assert_eq!(split.train.get(r, c), None);
        }
        total += split.test.len();
    }
    assert_eq!(total, 40);
}

fn list(items: &[String]) -> RecommendationList {
    RecommendationList {
        entries: items
            .iter()
            .map(|i| ScoredItem {
                item: i.clone(),
                score: 0.0,
            })
            .collect(),
        requested_n: items.len(),
    }
}

#[test]
fn accuracy_matches_set_oracle_exhaustively() {
    let items: Vec<String> = (0..8).map(|i| format!("i{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let n_rows = rng.random_range(1..=5);
        let rows: Vec<(Vec<String>, Vec<String>)> = (0..n_rows)
            .map(|_| {
                let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
                    items.iter().filter(|_| rng.random_bool(0.4)).cloned().collect()
                };
                (pick(&mut rng), pick(&mut rng))
            })
            .collect();
        let rec: BTreeMap<String, RecommendationList> =
            rows.iter().enumerate().map(|(i, (r, _))| (format!("u{i}"), list(r))).collect();
        let truth: BTreeMap<String, BTreeSet<String>> = rows
            .iter()
            .enumerate()
            .map(|(i, (_, t))| (format!("u{i}"), t.iter().cloned().collect()))
            .collect();
        let got = accuracy_metrics(&rec, &truth).unwrap();
        let (tp, fp, fn_, p, r, s) = oracle::accuracy(&rows);
        assert_eq!((got.tp, got.fp, got.fn_), (tp, fp, fn_));
        assert_eq!((got.precision, got.recall, got.success_rate), (p, r, s));
        for v in [got.precision, got.recall, got.success_rate] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn error_metrics_match_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..2000 {
        let n = rng.random_range(1..=8);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (f64::from(u8::from(rng.random_bool(0.5))), rng.random_range(0.0..=1.0)))
            .collect();
        let got = error_metrics(&pairs, RatingScale::BINARY).unwrap();
        let (mae, rmse) = oracle::mae_rmse(&pairs, 0.0, 1.0);
        assert!((got.mae - mae).abs() <= 1e-12 && (got.rmse - rmse).abs() <= 1e-12);
        assert!(got.mae <= got.rmse + 1e-15);
        assert!((0.0..=1.0).contains(&got.mae) && (0.0..=1.0).contains(&got.rmse));
    }
}

fn planted(noise: f64) -> RatingMatrix {
    let corpus = generate_synthetic_corpus(&SynthParams {
        n_projects: 200,
        n_tags: 12,
        n_components: 20,
        n_libraries: 12,
        block_count: 4,
        noise,
        seed: 7,
    })
    .unwrap();
    build_projection(&corpus, ProjectionKind::P).unwrap()
}

fn settings(cutoff: CutoffConfig) -> CvSettings {
    CvSettings {
        cutoff,
        folds: 10,
        n: 5,
        seed: 7,
        exec: Execution::Parallel,
    }
}

#[test]
fn noiseless_planted_blocks_are_always_recovered() {
    let m = planted(0.0);
    let report = cross_validate(&m, KnnConfig::default(), &settings(CutoffConfig::default())).unwrap();
    for fold in &report.per_fold {
        assert_eq!(fold.accuracy.success_rate, 1.0, "fold {}", fold.fold);
    }

    // raw co-occurrence ranking hits every row that kept a training positive
    let plan = kfold_split(&m, 10, 7).unwrap();
    for fold in 0..10 {
        let split = split_fold(&m, &plan, fold);
        let train: oracle::Dense = (0..m.n_rows())
            .map(|r| (0..m.n_cols()).map(|c| split.train.get(r, c)).collect())
            .collect();
        let mut truth: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &(r, c, v) in &split.test {
            if v == 1.0 {
                truth.entry(r).or_default().insert(c);
            }
        }
        for (&r, held_out) in &truth {
            let exclude: BTreeSet<usize> = (0..m.n_cols()).filter(|&c| train[r][c] == Some(1.0)).collect();
            if exclude.is_empty() {
                continue;
            }
            let recs = oracle::cooccurrence_top_n(&train, r, 5, &exclude);
            assert!(recs.iter().any(|c| held_out.contains(c)), "fold {fold} row {r}");
        }
    }
}

#[test]
fn cross_validation_is_deterministic_and_schedule_independent() {
    let m = planted(0.1);
    let a = cross_validate(&m, KnnConfig::default(), &settings(CutoffConfig::default())).unwrap();
    let b = cross_validate(&m, KnnConfig::default(), &settings(CutoffConfig::default())).unwrap();
    let seq = cross_validate(
        &m,
        KnnConfig::default(),
        &CvSettings {
            exec: Execution::Sequential,
            ..settings(CutoffConfig::default())
        },
    )
    .unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), seq.to_csv());
    assert_eq!(a, seq);
}

#[test]
fn averages_are_fold_means() {
    let m = planted(0.1);
    let r = cross_validate(&m, KnnConfig::default(), &settings(CutoffConfig::default())).unwrap();
    let mean = r.per_fold.iter().map(|f| f.accuracy.precision).sum::<f64>() / r.per_fold.len() as f64;
    assert_eq!(r.average.precision, mean);
    for f in &r.per_fold {
        assert!(f.ranking.mae <= f.ranking.rmse);
    }
}
