// Save a learned rule database, reload it into a new engine and keep going.
//
// cargo run --example snapshot_persistence

use stepcast::evalkit::{generate, replay, ScenarioKind, ScenarioSpec};
use stepcast::{Engine, LookupDb, Observation, PredictorConfig, Vocabulary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = generate(&ScenarioSpec {
        kind: ScenarioKind::BOnly,
        components: 5,
        requirements_per_component: 2,
        seed: 0,
    })?;
    let vocab = Vocabulary::new(5, 2);
    let mut engine = Engine::new(PredictorConfig::default(), vocab)?;
    replay(&mut engine, &trace, 25)?;

    let path = std::env::temp_dir().join("stepcast-example.db");
    engine.save_snapshot(std::fs::File::create(&path)?)?;
    let text = std::fs::read_to_string(&path)?;
    println!(
        "saved {} rules to {}; first lines:",
        engine.db().len(),
        path.display()
    );
    for line in text.lines().take(4) {
        println!("  {line}");
    }

    let (header, db) = LookupDb::parse_snapshot(&text)?;
    let mut restored = Engine::new(PredictorConfig::default(), vocab)?;
    restored.load_db(header, db)?;
    assert_eq!(
        restored.snapshot_string(),
        text,
        "save-load-save is byte-stable"
    );

    // a new component starts: the restored engine already knows what follows 1
    restored.learn(Observation::new(1).with_context(0, 9).with_context(1, 1))?;
    let next = restored.predict();
    println!(
        "after reload and step 1: suggest {:?} (actualP {:.3})",
        next.step.map(|s| s.0),
        next.actual_p.unwrap_or(0.0)
    );
    Ok(())
}
