use std::io::Write;
use std::path::PathBuf;

use super::{emit, write_file};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::verify::{report, run_check, CheckOutcome, VerifyOptions};

pub const KEYS: &[&str] = &["seed", "out", "workers", "scale", "corrupt_transport"];

/// Runs the ten checks, printing each line as it completes. Per-check wall
/// times go to stderr so stdout and the written files stay reproducible.
pub fn run(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    let opts = VerifyOptions {
        seed: cfg.get_or("seed", 7)?,
        scale: cfg.get_or("scale", 1.0)?,
        corrupt_transport: cfg.get_or("corrupt_transport", false)?,
    };
    if !(opts.scale > 0.0) {
        return Err(CliError::config(format!("scale = {} must be positive", opts.scale)));
    }
    let mut outcomes: Vec<CheckOutcome> = Vec::with_capacity(10);
    for id in 1..=10 {
        let o = run_check(id, &opts);
        emit(out, &o.line())?;
        eprintln!("check {id} took {:.2} s", o.elapsed.as_secs_f64());
        outcomes.push(o);
    }
    let text = report(&outcomes);
    emit(out, text.lines().last().unwrap_or_default())?;

    if let Some(dir) = cfg.str("out") {
        let dir = PathBuf::from(dir);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        write_file(&dir.join("verify.txt"), &text)?;
        let json = serde_json::to_string_pretty(&outcomes).expect("outcomes serialize");
        write_file(&dir.join("verify.json"), json + "\n")?;
    }

    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("checks {} failed", failed.join(", "))))
    }
}
