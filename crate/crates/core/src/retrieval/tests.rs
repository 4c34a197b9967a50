use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::corpus::DemographicGroup as G;
use crate::par::Execution;

fn recs(v: &[(&str, f64)]) -> Vec<(String, f64)> {
    v.iter().map(|(a, s)| (a.to_string(), *s)).collect()
}

#[test]
fn cosine_examples() {
    assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    let want = 32.0 / (14f64.sqrt() * 77f64.sqrt());
    assert!((cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap() - want).abs() < 1e-15);
    assert!((want - 0.974631846).abs() < 1e-9);
    assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(RetrievalError::ZeroVector));
    assert_eq!(cosine(&[1.0], &[1.0, 0.0]), Err(RetrievalError::DimensionMismatch(1, 2)));
}

#[test]
fn ranking_examples() {
    let r = rank_resumes("j", &recs(&[("c", 0.1), ("a", 0.9), ("b", 0.5)])).unwrap();
    assert_eq!((r.rank_of("a"), r.rank_of("b"), r.rank_of("c")), (Some(1), Some(2), Some(3)));
    let r = rank_resumes("j", &recs(&[("a", 0.9), ("b", 0.9), ("c", 0.1)])).unwrap();
    assert_eq!((r.rank_of("a"), r.rank_of("b"), r.rank_of("c")), (Some(1), Some(1), Some(3)));
    assert_eq!(r.top_n(1).members, ["a", "b"]);
    let r = rank_resumes("j", &recs(&[("only", 0.3)])).unwrap();
    assert_eq!(r.rank_of("only"), Some(1));
    assert_eq!(
        rank_resumes("j", &recs(&[("a", 0.3), ("a", 0.2)])),
        Err(RetrievalError::DuplicateResume("a".into()))
    );
}

#[test]
fn exclusion_examples() {
    let orig = rank_resumes("j", &recs(&[("a", 0.9), ("b", 0.8), ("c", 0.7)])).unwrap();
    let mut pert: HashMap<String, f64> = [("a", 0.65), ("b", 0.8), ("c", 0.7)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let r = exclusion(&orig, &pert, 2).unwrap();
    assert_eq!((r.excluded, r.members, r.value), (1, 2, 0.5));
    pert.insert("a".into(), 0.9);
    assert_eq!(exclusion(&orig, &pert, 2).unwrap().value, 0.0);
    pert.remove("b");
    assert_eq!(exclusion(&orig, &pert, 2), Err(RetrievalError::MissingPerturbed("b".into())));
    assert_eq!(exclusion_counts(&[], &[], 2), Err(RetrievalError::EmptyTopN));
}

#[test]
fn all_below_every_competitor_is_full_exclusion() {
    let orig: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 / 100.0).collect();
    let pert: Vec<f64> = orig.iter().map(|s| s - 1.0).collect();
    assert_eq!(exclusion_counts(&orig, &pert, 5).unwrap().value, 1.0);
}

#[test]
fn non_uniformity_examples() {
    let pool = |counts: [usize; 4]| -> Vec<(G, f64)> {
        let mut v = Vec::new();
        for (g, c) in G::ALL.iter().zip(counts) {
            for i in 0..c {
                v.push((*g, 1.0 + i as f64 * 1e-6));
            }
            for _ in c..25 {
                v.push((*g, 0.0));
            }
        }
        v
    };
    let even = non_uniformity("j", &pool([10, 10, 10, 10]), 40.0, 0.05).unwrap();
    assert_eq!(even.counts, [10, 10, 10, 10]);
    assert_eq!((even.chi2, even.p, even.flag), (0.0, 1.0, false));
    let skewed = non_uniformity("j", &pool([20, 10, 5, 5]), 40.0, 0.05).unwrap();
    assert_eq!(skewed.k, 40);
    assert_eq!(skewed.counts, [20, 10, 5, 5]);
    assert_eq!(skewed.chi2, 15.0);
    assert!((skewed.p - 0.0018166489665723214).abs() < 1e-12);
    assert!(skewed.flag);
}

#[test]
fn k_rule() {
    assert_eq!(top_k_size(10.0, 400).unwrap(), 40);
    assert_eq!(top_k_size(5.0, 10).unwrap(), 1);
    assert_eq!(top_k_size(0.1, 10).unwrap(), 1);
    assert_eq!(top_k_size(10.0, 45).unwrap(), 5);
    assert_eq!(top_k_size(100.0, 7).unwrap(), 7);
    assert!(top_k_size(0.0, 10).is_err());
    assert!(top_k_size(101.0, 10).is_err());
}

#[test]
fn underpowered_still_computed() {
    let pool: Vec<(G, f64)> = G::ALL.iter().enumerate().map(|(i, g)| (*g, i as f64)).collect();
    let r = non_uniformity("j", &pool, 50.0, 0.05).unwrap();
    assert!(r.underpowered);
    assert_eq!(r.counts, [0, 0, 1, 1]);
}

#[test]
fn pooled_sums_counts() {
    let a: Vec<(G, f64)> = vec![(G::FB, 1.0), (G::FW, 0.0), (G::MB, 0.0), (G::MW, 0.0)];
    let b: Vec<(G, f64)> = vec![(G::FB, 1.0), (G::FW, 0.0), (G::MB, 0.0), (G::MW, 0.0)];
    let jobs = [
        JobPool { job_id: "j1", occupation: "Chef", pool: &a },
        JobPool { job_id: "j2", occupation: "Chef", pool: &b },
    ];
    let sep = non_uniformity_grouped(&jobs, 25.0, NonUniformityMode::Separated, 0.05, Execution::Sequential).unwrap();
    assert_eq!(sep.len(), 2);
    let pooled = non_uniformity_grouped(&jobs, 25.0, NonUniformityMode::Pooled, 0.05, Execution::Parallel).unwrap();
    assert_eq!(pooled.len(), 1);
    assert_eq!(pooled[0].unit, "Chef");
    assert_eq!(pooled[0].counts, [2, 0, 0, 0]);
    assert_eq!((pooled[0].k, pooled[0].pool_size), (2, 8));
}

#[test]
fn directions() {
    assert_eq!(Direction::of(G::MW, G::FW), Some(Direction::MaleToFemale));
    assert_eq!(Direction::of(G::FB, G::MB), Some(Direction::FemaleToMale));
    assert_eq!(Direction::of(G::MW, G::MB), Some(Direction::WhiteToBlack));
    assert_eq!(Direction::of(G::FB, G::FW), Some(Direction::BlackToWhite));
    assert_eq!(Direction::of(G::MW, G::FB), None);
    assert_eq!(Direction::of(G::MW, G::MW), None);
    let swap = |from, to, value| SwapExclusion { job_id: "j".into(), from, to, n: 5, value };
    let rows = directional_exclusion(&[
        swap(G::MW, G::FW, 0.2),
        swap(G::MB, G::FB, 0.4),
        swap(G::FW, G::MW, 0.0),
        swap(G::MW, G::FB, 1.0),
    ]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].direction, Direction::MaleToFemale);
    assert!((rows[0].mean - 0.3).abs() < 1e-15);
    assert_eq!(rows[0].count, 2);
    assert_eq!(rows[1].direction, Direction::FemaleToMale);
    assert_eq!(rows[1].mean, 0.0);
}

#[test]
fn score_table_round_trip() {
    let jobs = vec![("j1".to_string(), vec![1.0, 0.0]), ("j2".to_string(), vec![0.3, 0.7])];
    let resumes = vec![("r1".to_string(), vec![0.2, 0.9]), ("r1/swap".to_string(), vec![0.1, 0.1])];
    let t = score_table(&jobs, &resumes, Execution::Parallel).unwrap();
    assert_eq!(t, score_table(&jobs, &resumes, Execution::Sequential).unwrap());
    let mut buf = Vec::new();
    write_scores(&mut buf, &t).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("schema_version,job_id,resume_id,variant_id,score\n"));
    assert!(text.contains("1,j1,r1,r1/swap,"));
    assert_eq!(read_scores(buf.as_slice()).unwrap(), t);
}

fn exhaustive(orig: &[f64], pert: &[f64], n: usize) -> Option<f64> {
    let rank = |scores: &[f64], i: usize| 1 + scores.iter().filter(|s| **s > scores[i]).count();
    let top: Vec<usize> = (0..orig.len()).filter(|&i| rank(orig, i) <= n).collect();
    if top.is_empty() {
        return None;
    }
    let excluded = top
        .iter()
        .filter(|&&i| {
            let mut s = orig.to_vec();
            s[i] = pert[i];
            rank(&s, i) > n
        })
        .count();
    Some(excluded as f64 / top.len() as f64)
}

proptest! {
    #[test]
    fn ranks_match_definition(scores in prop::collection::vec(-1.0f64..1.0, 1..30)) {
        let ranks = competition_ranks(&scores);
        for (i, s) in scores.iter().enumerate() {
            prop_assert_eq!(ranks[i], 1 + scores.iter().filter(|t| *t > s).count());
        }
    }

    #[test]
    fn exclusion_matches_oracle(
        pairs in prop::collection::vec(((0u8..6), (0u8..6)), 1..9),
        n in 1usize..9,
    ) {
        let orig: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 5.0).collect();
        let pert: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 5.0).collect();
        let got = exclusion_counts(&orig, &pert, n).unwrap();
        prop_assert_eq!(Some(got.value), exhaustive(&orig, &pert, n));
        prop_assert!((0.0..=1.0).contains(&got.value));
    }

    #[test]
    fn cosine_bounded_and_symmetric(
        u in prop::collection::vec(-10.0f64..10.0, 3),
        v in prop::collection::vec(-10.0f64..10.0, 3),
    ) {
        if let (Ok(a), Ok(b)) = (cosine(&u, &v), cosine(&v, &u)) {
            prop_assert_eq!(a, b);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn chi2_nonnegative_and_unit_p_iff_equal(counts in prop::array::uniform4(0usize..12), x in 1.0f64..100.0) {
        let mut pool = Vec::new();
        for (g, c) in G::ALL.iter().zip(counts) {
            for _ in 0..c { pool.push((*g, 1.0)); }
            pool.push((*g, 0.0));
        }
        let r = non_uniformity("j", &pool, x, 0.05).unwrap();
        prop_assert!(r.chi2 >= 0.0);
        let equal = r.counts.iter().all(|c| *c == r.counts[0]);
        prop_assert_eq!(r.p == 1.0, equal);
    }
}
