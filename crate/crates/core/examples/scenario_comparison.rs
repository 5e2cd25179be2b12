// Generate the mixed scenario, replay it through the context and baseline
// engines, and write both metric series as CSV plus a three-panel SVG.
//
// cargo run --example scenario_comparison

use std::fs::File;

use stepcast::evalkit::{
    compare_engines, final_cum_accuracy, generate, render_svg, tail_accuracy, write_csv,
    ScenarioKind, ScenarioSpec, DEFAULT_ROLL_WINDOW,
};
use stepcast::PredictorConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("stepcast-comparison");
    std::fs::create_dir_all(&dir)?;

    let spec = ScenarioSpec {
        kind: ScenarioKind::Mix,
        components: 40,
        requirements_per_component: 3,
        seed: 7,
    };
    let trace = generate(&spec)?;
    let config = PredictorConfig::default();
    let cmp = compare_engines(&trace, &config, DEFAULT_ROLL_WINDOW)?;

    write_csv(File::create(dir.join("context.csv"))?, &cmp.context)?;
    write_csv(File::create(dir.join("baseline.csv"))?, &cmp.baseline)?;
    std::fs::write(
        dir.join("comparison.svg"),
        render_svg(&spec.to_string(), &cmp.context, &cmp.baseline),
    )?;

    println!("{spec}\n{config}");
    for (name, rows) in [("context", &cmp.context), ("baseline", &cmp.baseline)] {
        println!(
            "{name:<8} cum_acc {:.3}  last-third acc {:.3}",
            final_cum_accuracy(rows),
            tail_accuracy(rows, 1.0 / 3.0)
        );
    }
    println!(
        "wrote context.csv, baseline.csv, comparison.svg to {}",
        dir.display()
    );
    Ok(())
}
