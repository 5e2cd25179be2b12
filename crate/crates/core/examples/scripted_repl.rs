// Drive the interactive loop from a script, as a user at the terminal would.
//
// cargo run --example scripted_repl
// (the same session is available as `stepcast repl`)

use std::io::Cursor;

use stepcast::cli::repl;
use stepcast::{Engine, PredictorConfig, Vocabulary};

fn main() -> std::io::Result<()> {
    let snapshot = std::env::temp_dir().join("stepcast-repl.db");
    let script = format!(
        "1 0=0,1=0\n2 0=0,1=0\n3 0=0,1=0\n4 0=0,1=0\n2 0=0,1=0\nnot-a-step\n3 0=0,1=0\n:db\n:save {}\n:quit\n",
        snapshot.display()
    );
    let mut engine = Engine::new(PredictorConfig::default(), Vocabulary::new(10, 2)).unwrap();
    let mut out = Vec::new();
    repl(&mut engine, &mut Cursor::new(script), &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
