mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isu_dialog::semantics::Proposition;
use isu_dialog::task_model::{evaluate_count, expand_query, refine_query, retrieve, Document, EvaluatorConfig, ListVerdict};

use common::random_corpus;

fn ids(v: &[String]) -> BTreeSet<String> {
    v.iter().cloned().collect()
}

fn doc_ids(v: &[&Document]) -> Vec<String> {
    v.iter().map(|d| d.id.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn retrieval_matches_scan_and_moves_are_monotone(seed in any::<u64>()) {
        let corpus = random_corpus(seed);
        let task = corpus.model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..20 {
            let q = corpus.random_query(&mut rng);
            let got = doc_ids(&retrieve(&q, &task.terminology, &task.index).expect("valid query"));
            let base = corpus.scan(&q);
            prop_assert_eq!(&got, &base, "query {:?}", q);
            let base = ids(&base);

            for (e, why) in expand_query(&q, &task.terminology) {
                let r = ids(&doc_ids(&retrieve(&e, &task.terminology, &task.index).expect("valid expansion")));
                prop_assert!(r.is_superset(&base), "expansion {:?} ({:?}) of {:?} lost documents", e, why, q);
                prop_assert_eq!(ids(&corpus.scan(&e)), r);
            }

            let com: Vec<Proposition> = (0..rng.gen_range(0..3))
                .map(|_| Proposition::unary("keyword", corpus.keywords[rng.gen_range(0..corpus.keywords.len())].as_str()))
                .collect();
            for (r, why) in refine_query(&q, &task.terminology, &task.index, &com) {
                let got = ids(&doc_ids(&retrieve(&r, &task.terminology, &task.index).expect("valid refinement")));
                prop_assert!(got.is_subset(&base), "refinement {:?} ({:?}) of {:?} gained documents", r, why, q);
                prop_assert_eq!(ids(&corpus.scan(&r)), got);
            }
        }
    }

    #[test]
    fn count_verdicts_partition(lo in 0usize..20, span in 1usize..60, n in 0usize..200) {
        let hi = lo + span;
        let cfg = EvaluatorConfig::new(lo, hi).expect("ordered thresholds");
        let v = evaluate_count(n, &cfg);
        let expected = if n < lo { ListVerdict::NotEnough(n) } else if n > hi { ListVerdict::TooMany(n) } else { ListVerdict::Acceptable(n) };
        prop_assert_eq!(v, expected);
    }
}

#[test]
fn default_thresholds_partition_small_counts() {
    let cfg = EvaluatorConfig::default();
    for n in 0..100 {
        let v = evaluate_count(n, &cfg);
        let expected = match n {
            0..=2 => ListVerdict::NotEnough(n),
            3..=30 => ListVerdict::Acceptable(n),
            _ => ListVerdict::TooMany(n),
        };
        assert_eq!(v, expected, "n = {n}");
    }
}
