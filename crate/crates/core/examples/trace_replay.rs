// Parse a trace in the text format and print per-step metrics as CSV.
//
// cargo run --example trace_replay

use stepcast::evalkit::{parse_trace, run_trace, write_csv};
use stepcast::{EngineMode, PredictorConfig};

const TRACE: &str = "\
# step cc=ctx,...
1 0=0,1=0
2 0=0,1=0
3 0=0,1=0
4 0=0,1=0
1 0=1,1=1
2 0=1,1=1
2 0=1,1=1
3 0=1,1=1
3 0=1,1=1
4 0=1,1=1
4 0=1,1=1
1 0=2,1=0
2 0=2,1=0
3 0=2,1=0
4 0=2,1=0
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = parse_trace(TRACE)?;
    let config = PredictorConfig::default().with_mode(EngineMode::Context);
    eprintln!("{config}");
    let rows = run_trace(&trace, &config, 5)?;
    write_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
