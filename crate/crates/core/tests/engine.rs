use proptest::prelude::*;
use stepcast::evalkit::{replay, run_trace};
use stepcast::{
    Engine, EngineMode, ExtensionDirection, LookupDb, Observation, PredictorConfig, UpdateScope,
    Vocabulary,
};

fn cycle_predictions(cycle: &[u32], repeats: usize, config: PredictorConfig) -> Vec<bool> {
    let trace: Vec<_> = cycle
        .iter()
        .cycle()
        .take(cycle.len() * repeats)
        .map(|&s| Observation::new(s))
        .collect();
    run_trace(&trace, &config, 25)
        .unwrap()
        .into_iter()
        .map(|r| r.correct)
        .collect()
}

fn distinct_cycle() -> impl Strategy<Value = Vec<u32>> {
    (2usize..=7).prop_flat_map(|len| {
        Just((0u32..12).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(move |v| v[..len].to_vec())
    })
}

fn event() -> impl Strategy<Value = Observation> {
    (
        0u32..5,
        proptest::option::of(0u32..3),
        proptest::option::of(0u32..3),
    )
        .prop_map(|(s, a, b)| {
            let mut o = Observation::new(s);
            if let Some(a) = a {
                o = o.with_context(0, a);
            }
            if let Some(b) = b {
                o = o.with_context(1, b);
            }
            o
        })
}

fn any_config() -> impl Strategy<Value = PredictorConfig> {
    let scope = prop_oneof![
        Just(UpdateScope::CorrectOnly),
        Just(UpdateScope::AllMatching)
    ];
    let dir = prop_oneof![
        Just(ExtensionDirection::AppendObservation),
        Just(ExtensionDirection::ExtendIntoPast)
    ];
    let mode = prop_oneof![Just(EngineMode::Context), Just(EngineMode::Baseline)];
    (
        0.05f64..0.95,
        0.0f64..0.95,
        2usize..8,
        mode,
        scope.clone(),
        scope,
        dir,
    )
        .prop_map(
            |(alpha, theta, window_capacity, engine_mode, cu, es, dir)| PredictorConfig {
                alpha,
                theta,
                window_capacity,
                engine_mode,
                context_update_scope: cu,
                extension_scope: es,
                extension_direction: dir,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn past_extension_learns_a_cycle_within_two_passes(cycle in distinct_cycle(), baseline in any::<bool>()) {
        let mode = if baseline { EngineMode::Baseline } else { EngineMode::Context };
        let cfg = PredictorConfig::default()
            .with_direction(ExtensionDirection::ExtendIntoPast)
            .with_mode(mode);
        let correct = cycle_predictions(&cycle, 6, cfg);
        // row t predicts record t, so rows from 2*len - 1 on cover cycle three onwards
        let settled = &correct[2 * cycle.len() - 1..];
        prop_assert!(settled.iter().all(|&c| c), "{:?}", correct);
    }

    #[test]
    fn append_extension_learns_a_cycle_eventually(cycle in distinct_cycle()) {
        let correct = cycle_predictions(&cycle, 12, PredictorConfig::default());
        let settled = &correct[8 * cycle.len() - 1..];
        prop_assert!(settled.iter().all(|&c| c), "{:?}", correct);
    }

    #[test]
    fn counters_and_ids_stay_consistent(config in any_config(), events in prop::collection::vec(event(), 0..80)) {
        let mut engine = Engine::new(config, Vocabulary::new(5, 2)).unwrap();
        for e in events {
            engine.predict();
            engine.learn(e).unwrap();
            prop_assert_eq!(engine.db().check_invariants(), Ok(()));
            for entry in engine.db().iter() {
                prop_assert!((0.0..=1.0).contains(&entry.p()));
                prop_assert!(entry.len_cond() <= engine.config().window_capacity);
                for (_, slot) in entry.slots() {
                    prop_assert_eq!(slot.total(), slot.counts().map(|(_, n)| n).sum::<u64>());
                }
            }
        }
    }

    #[test]
    fn predict_does_not_touch_the_database(config in any_config(), events in prop::collection::vec(event(), 0..40)) {
        let mut engine = Engine::new(config, Vocabulary::new(5, 2)).unwrap();
        for e in events {
            engine.learn(e).unwrap();
        }
        let before = engine.snapshot_string();
        let first = engine.predict();
        let second = engine.predict();
        prop_assert_eq!(first, second);
        prop_assert_eq!(engine.snapshot_string(), before);
    }

    #[test]
    fn snapshot_round_trips(config in any_config(), events in prop::collection::vec(event(), 0..60)) {
        let mut engine = Engine::new(config, Vocabulary::new(5, 2)).unwrap();
        for e in events {
            engine.predict();
            engine.learn(e).unwrap();
        }
        let text = engine.snapshot_string();
        let (header, db) = LookupDb::parse_snapshot(&text).unwrap();
        prop_assert_eq!(&db, engine.db());
        prop_assert_eq!(header, engine.snapshot_header());
        prop_assert_eq!(db.snapshot_string(header), text);
    }

    #[test]
    fn reset_replays_like_a_fresh_engine(config in any_config(), events in prop::collection::vec(event(), 1..50)) {
        let mut fresh = Engine::new(config.clone(), Vocabulary::new(5, 2)).unwrap();
        let expected = replay(&mut fresh, &events, 10).unwrap();
        let mut reused = Engine::new(config, Vocabulary::new(5, 2)).unwrap();
        replay(&mut reused, &events, 10).unwrap();
        reused.reset();
        prop_assert_eq!(replay(&mut reused, &events, 10).unwrap(), expected);
        prop_assert_eq!(reused.snapshot_string(), fresh.snapshot_string());
    }
}

#[test]
fn loaded_database_continues_like_the_original() {
    let events: Vec<_> = [1, 2, 3, 1, 2, 3, 1, 2]
        .iter()
        .map(|&s| Observation::new(s).with_context(0, s % 2))
        .collect();
    let mut original = Engine::new(PredictorConfig::default(), Vocabulary::new(5, 1)).unwrap();
    for e in &events {
        original.predict();
        original.learn(e.clone()).unwrap();
    }
    let (header, db) = LookupDb::parse_snapshot(&original.snapshot_string()).unwrap();
    let mut restored = Engine::new(PredictorConfig::default(), Vocabulary::new(5, 1)).unwrap();
    for e in &events {
        restored.learn(e.clone()).unwrap();
    }
    restored.load_db(header, db).unwrap();
    assert_eq!(restored.predict(), original.predict());
    let next = Observation::new(3).with_context(0, 1);
    assert_eq!(
        restored.learn(next.clone()).unwrap(),
        original.learn(next).unwrap()
    );
    assert_eq!(restored.snapshot_string(), original.snapshot_string());
}
