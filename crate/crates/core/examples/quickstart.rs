// Feed a short stream of steps to an engine and watch its suggestions.
//
// cargo run --example quickstart

use stepcast::{Engine, Observation, PredictorConfig, Vocabulary};

const NAMES: [&str; 5] = ["-", "identify", "map requirement", "specify", "implement"];

fn main() {
    let mut engine = Engine::new(PredictorConfig::default(), Vocabulary::new(5, 1)).unwrap();
    let stream = [1, 2, 3, 4, 2, 3, 4, 1, 2, 3, 4, 2, 3, 4, 1, 2, 3];
    for (t, &step) in stream.iter().enumerate() {
        let guess = engine.predict();
        let report = engine
            .learn(Observation::new(step).with_context(0, 0))
            .unwrap();
        match guess.step {
            Some(s) => println!(
                "t={t:>2} suggested {:<16} (actualP {:.3})  observed {:<16} {}",
                NAMES[s.0 as usize],
                guess.actual_p.unwrap_or(0.0),
                NAMES[step as usize],
                if report.correct == Some(true) {
                    "ok"
                } else {
                    "miss"
                }
            ),
            None => println!(
                "t={t:>2} no suggestion                         observed {}",
                NAMES[step as usize]
            ),
        }
    }
    let next = engine.predict();
    println!(
        "next: {}  ({} rules learned)",
        next.step.map_or("none", |s| NAMES[s.0 as usize]),
        engine.db().len()
    );
}
