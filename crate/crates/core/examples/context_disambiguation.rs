// Step 1 is followed by step 2 in context 0 and by step 3 in context 1.
// The sequence alone cannot tell which comes next; the context can.
//
// cargo run --example context_disambiguation

use stepcast::evalkit::{final_cum_accuracy, run_trace, tail_accuracy};
use stepcast::{EngineMode, Observation, PredictorConfig};

fn main() {
    // a fixed, irregular pattern of contexts
    let pattern = [0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0];
    let mut trace = Vec::new();
    for _ in 0..5 {
        for &ctx in &pattern {
            trace.push(Observation::new(1).with_context(0, ctx));
            trace.push(Observation::new(2 + ctx).with_context(0, ctx));
            trace.push(Observation::new(4).with_context(0, ctx));
        }
    }
    for mode in [EngineMode::Context, EngineMode::Baseline] {
        let rows = run_trace(&trace, &PredictorConfig::default().with_mode(mode), 25).unwrap();
        let after_one: Vec<_> = rows
            .iter()
            .filter(|r| r.observed.0 == 2 || r.observed.0 == 3)
            .collect();
        let hits = after_one.iter().filter(|r| r.correct).count();
        println!(
            "{mode:<8} overall {:.3}  last third {:.3}  step after 1: {hits}/{} correct",
            final_cum_accuracy(&rows),
            tail_accuracy(&rows, 1.0 / 3.0),
            after_one.len()
        );
    }
}
