use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resyduo_core::similarity::compute_similarity;
use resyduo_core::{
    build_similarity_model, CfMode, Execution, KnnConfig, Query, RatingMatrix, RatingScale, Similarity,
};
use resyduo_oracle as oracle;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

fn matrix(dense: &oracle::Dense) -> RatingMatrix {
    let entries = dense
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().filter_map(move |(c, v)| v.map(|v| (r, c, v))));
    RatingMatrix::new(
        labels("r", dense.len()),
        labels("c", dense[0].len()),
        entries,
        RatingScale::BINARY,
    )
    .unwrap()
}

fn full(values: &[Vec<f64>]) -> oracle::Dense {
    values.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect()
}

fn sim_kind(kind: Similarity) -> oracle::Sim {
    match kind {
        Similarity::Msd => oracle::Sim::Msd,
        Similarity::Cosine => oracle::Sim::Cosine,
        Similarity::Pearson => oracle::Sim::Pearson,
    }
}

#[test]
fn all_pairs_similarity_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let dense = oracle::random_partial(&mut rng, 3, 3, 0.8, 0.5);
        if dense.iter().flatten().all(Option::is_none) {
            continue;
        }
        for kind in Similarity::ALL {
            for mode in CfMode::ALL {
                let cfg = KnnConfig::new(kind, mode, 1, 3).unwrap();
                let model = build_similarity_model(matrix(&dense), cfg, Execution::Sequential).unwrap();
                let axis = if mode == CfMode::UserBased { dense.clone() } else { oracle::transpose(&dense) };
                for i in 0..axis.len() {
                    for j in 0..axis.len() {
                        let want = oracle::similarity(sim_kind(kind), &axis[i], &axis[j], 1);
                        let got = model.similarities().get(i, j);
                        assert!((got - want).abs() <= 1e-12, "{cfg} ({i},{j}): {got} vs {want}");
                    }
                }
            }
        }
    }
}

#[test]
fn item_based_is_user_based_on_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let dense = oracle::random_partial(&mut rng, 6, 4, 0.7, 0.4);
        let m = matrix(&dense);
        for kind in Similarity::ALL {
            let item = build_similarity_model(
                m.clone(),
                KnnConfig::new(kind, CfMode::ItemBased, 2, 3).unwrap(),
                Execution::Sequential,
            );
            let user = build_similarity_model(
                m.transpose(),
                KnnConfig::new(kind, CfMode::UserBased, 2, 3).unwrap(),
                Execution::Sequential,
            );
            match (item, user) {
                (Ok(item), Ok(user)) => assert_eq!(item.similarities(), user.similarities()),
                (Err(_), Err(_)) => {}
                _ => panic!("duality broken on build outcome"),
            }
        }
    }
}

#[test]
fn five_by_five_msd_k2_matches_neighbour_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dense = full(&oracle::random_binary(&mut rng, 5, 5, 0.5));
    let cfg = KnnConfig::new(Similarity::Msd, CfMode::UserBased, 1, 2).unwrap();
    let model = build_similarity_model(matrix(&dense), cfg, Execution::Sequential).unwrap();
    let (rows, cols) = (labels("r", 5), labels("c", 5));
    for r in 0..5 {
        for c in 0..5 {
            let p = model.predict(&rows[r], &cols[c]).unwrap();
            match oracle::predict(&dense, &rows, &cols, true, oracle::Sim::Msd, 1, 2, r, c) {
                Some((est, count)) => {
                    assert!((p.estimate - est).abs() <= 1e-9);
                    assert_eq!(p.neighbor_count, count);
                    assert!(!p.fallback);
                }
                None => {
                    assert!(p.fallback);
                    assert!((p.estimate - oracle::global_mean(&dense)).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn parallel_and_sequential_models_are_bitwise_equal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dense = oracle::random_partial(&mut rng, 40, 25, 0.8, 0.3);
    for kind in Similarity::ALL {
        let cfg = KnnConfig::new(kind, CfMode::UserBased, 2, 5).unwrap();
        let seq = build_similarity_model(matrix(&dense), cfg, Execution::Sequential).unwrap();
        let par = build_similarity_model(matrix(&dense), cfg, Execution::Parallel).unwrap();
        assert_eq!(seq.similarities(), par.similarities());
    }
}

#[test]
fn top_n_is_prefix_of_exhaustive_ranking() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..30 {
        let dense = full(&oracle::random_binary(&mut rng, 4, 6, 0.5));
        let cfg = KnnConfig::new(Similarity::ALL[trial % 3], CfMode::ALL[trial % 2], 1, 2).unwrap();
        let Ok(model) = build_similarity_model(matrix(&dense), cfg, Execution::Sequential) else {
            continue;
        };
        let (rows, cols) = (labels("r", 4), labels("c", 6));
        let exclude: HashSet<String> = cols.iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
        for row in &rows {
            let mut all: Vec<(String, f64)> = cols
                .iter()
                .filter(|c| !exclude.contains(*c))
                .map(|c| (c.clone(), model.predict(row, c).unwrap().estimate))
                .collect();
            all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let list = model.top_n(Query::Row(row), 3, &exclude).unwrap();
            let got: Vec<(String, f64)> = list.entries.iter().map(|e| (e.item.clone(), e.score)).collect();
            assert_eq!(got, all.into_iter().take(3).collect::<Vec<_>>());
        }
    }
}

#[test]
fn fold_in_of_training_row_reproduces_its_similarities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dense = oracle::random_partial(&mut rng, 8, 6, 0.9, 0.5);
    let m = matrix(&dense);
    for kind in Similarity::ALL {
        let model =
            build_similarity_model(m.clone(), KnnConfig::new(kind, CfMode::UserBased, 1, 3).unwrap(), Execution::Sequential)
                .unwrap();
        for r in 0..m.n_rows() {
            let profile: BTreeMap<String, f64> = m
                .row(r)
                .iter()
                .map(|&(c, v)| (m.col_labels()[c as usize].clone(), v))
                .collect();
            if profile.is_empty() {
                continue;
            }
            let folded = model.fold_in(&profile).unwrap();
            for (j, &s) in folded.iter().enumerate() {
                if j != r {
                    assert!((s - model.similarities().get(r, j)).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn fold_in_matches_per_row_similarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dense = oracle::random_partial(&mut rng, 4, 8, 0.8, 0.5);
    let m = matrix(&dense);
    let cfg = KnnConfig::new(Similarity::Pearson, CfMode::UserBased, 2, 2).unwrap();
    let model = build_similarity_model(m.clone(), cfg, Execution::Sequential).unwrap();
    for _ in 0..20 {
        let dense_profile: Vec<Option<f64>> =
            (0..8).map(|_| rng.random_bool(0.6).then(|| f64::from(u8::from(rng.random_bool(0.5))))).collect();
        let profile: BTreeMap<String, f64> = dense_profile
            .iter()
            .enumerate()
            .filter_map(|(c, v)| v.map(|v| (m.col_labels()[c].clone(), v)))
            .collect();
        if profile.is_empty() {
            continue;
        }
        let folded = model.fold_in(&profile).unwrap();
        for (r, row) in dense.iter().enumerate() {
            let want = oracle::similarity(oracle::Sim::Pearson, &dense_profile, row, 2);
            assert!((folded[r] - want).abs() <= 1e-12);
            let sparse = resyduo_core::similarity::sparse_profile(&dense_profile);
            assert_eq!(folded[r], compute_similarity(Similarity::Pearson, &sparse, m.row(r), 2));
        }
    }
}

#[test]
fn support_starved_profile_falls_back_to_global_mean() {
    let dense = full(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]);
    let m = matrix(&dense);
    let cfg = KnnConfig::new(Similarity::Msd, CfMode::UserBased, 5, 3).unwrap();
    let model = build_similarity_model(m, cfg, Execution::Sequential).unwrap();
    let profile: BTreeMap<String, f64> = [("c00".to_string(), 1.0)].into();
    assert!(model.fold_in(&profile).unwrap().iter().all(|&s| s == 0.0));
    let list = model.top_n(Query::Profile(&profile), 3, &HashSet::new()).unwrap();
    assert!(list.entries.iter().all(|e| e.score == model.global_mean()));
}

#[test]
fn predictions_stay_in_scale_and_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let dense = oracle::random_partial(&mut rng, 6, 6, 0.7, 0.5);
        let m = matrix(&dense);
        for kind in Similarity::ALL {
            let cfg = KnnConfig::new(kind, CfMode::ItemBased, 1, 4).unwrap();
            let Ok(model) = build_similarity_model(m.clone(), cfg, Execution::Sequential) else {
                continue;
            };
            let again = build_similarity_model(m.clone(), cfg, Execution::Parallel).unwrap();
            for row in m.row_labels() {
                for col in m.col_labels() {
                    let p = model.predict(row, col).unwrap();
                    assert!((0.0..=1.0).contains(&p.estimate));
                    assert_eq!(p, again.predict(row, col).unwrap());
                }
            }
        }
    }
}
