use memplan::bounds::{bounds, naive_footprint};
use memplan::generate::random_records;
use memplan::model::{execution_order, parse_model, usage_records, InputDocument};
use memplan::offsets::offsets_from_shared;
use memplan::oracle::{optimal_offsets, optimal_shared, DEFAULT_OFFSETS_CAP};
use memplan::plan::{Mode, PlanDocument, SharedStrategy, Strategy};
use memplan::samples::{sample_network, sample_network_model, SAMPLE_NETWORK_MODEL_JSON};
use memplan::shared::SuitabilityIndex;
use proptest::prelude::*;

#[test]
fn sample_graph_end_to_end() {
    let model = parse_model(sample_network_model()).unwrap();
    let order = execution_order(&model);
    assert_eq!(order, (0..9).collect::<Vec<_>>());
    let records = usage_records(&model, &order, 1).unwrap();
    assert_eq!(records, sample_network());

    let expected = [
        ("greedy-by-breadth", 128),
        ("greedy-by-size", 128),
        ("greedy-by-size-improved", 128),
        ("greedy-by-size-offsets", 124),
    ];
    for (name, footprint) in expected {
        let mode = if name.ends_with("offsets") {
            Mode::Offsets
        } else {
            Mode::Shared
        };
        let plan = Strategy::parse(name, mode)
            .unwrap()
            .run(&records, SuitabilityIndex::Auto);
        assert_eq!(plan.footprint(), footprint, "{name}");
        let doc = PlanDocument::from_json(&plan.to_document().to_json()).unwrap();
        assert!(doc.validate(&records).ok, "{name}");
    }

    let b = bounds(&records);
    assert_eq!((b.shared_lower_bound, b.offset_lower_bound), (128, 124));
    assert_eq!(optimal_shared(&records, 10).unwrap().optimum, 128);
    assert_eq!(
        optimal_offsets(&records, DEFAULT_OFFSETS_CAP)
            .unwrap()
            .optimum,
        124
    );
}

#[test]
fn alignment_rounds_graph_sizes_only() {
    let doc = InputDocument::from_json(SAMPLE_NETWORK_MODEL_JSON).unwrap();
    let aligned = doc.into_records(64).unwrap();
    assert!(aligned.iter().all(|r| r.size == 64));

    let raw = r#"{"records": [{"id": 3, "first": 0, "last": 2, "size": 10}]}"#;
    let records = InputDocument::from_json(raw)
        .unwrap()
        .into_records(64)
        .unwrap();
    assert_eq!(records[0].size, 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_strategy_is_valid_and_bounded(
        seed in any::<u64>(),
        n in 1usize..80,
        n_ops in 1usize..40,
    ) {
        let recs = random_records(seed, n, n_ops, 5000);
        let b = bounds(&recs);
        let naive = naive_footprint(&recs);
        prop_assert!(b.shared_lower_bound >= b.offset_lower_bound);
        for s in Strategy::GREEDY {
            let plan = s.run(&recs, SuitabilityIndex::Auto);
            prop_assert!(plan.validate(&recs).ok, "{}", s);
            let lb = match s.mode() {
                Mode::Shared => b.shared_lower_bound,
                Mode::Offsets => b.offset_lower_bound,
            };
            prop_assert!(lb <= plan.footprint() && plan.footprint() <= naive, "{}", s);
        }
        for s in SharedStrategy::ALL {
            let shared = s.run(&recs, SuitabilityIndex::Tree);
            prop_assert_eq!(&shared, &s.run(&recs, SuitabilityIndex::Linear));
            let converted = offsets_from_shared(&shared, &recs).unwrap();
            prop_assert_eq!(converted.footprint, shared.footprint());
        }
    }

    #[test]
    fn greedy_never_beats_the_oracle(seed in any::<u64>(), n in 1usize..8) {
        let recs = random_records(seed, n, 6, 64);
        let shared = optimal_shared(&recs, 8).unwrap().optimum;
        let offsets = optimal_offsets(&recs, 8).unwrap().optimum;
        prop_assert!(offsets <= shared);
        for s in Strategy::GREEDY {
            let f = s.run(&recs, SuitabilityIndex::Auto).footprint();
            match s.mode() {
                Mode::Shared => prop_assert!(f >= shared),
                Mode::Offsets => prop_assert!(f >= offsets),
            }
        }
    }
}
