//! Run the full certification pipeline on a built-in system and print the
//! report as JSON.
//!
//! ```text
//! cargo run --release --example certify_preset -- pendulum-duffing
//! ```

use horseshoe::config::ProjectConfig;
use horseshoe::pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "toy".into());
    let skip_witness = std::env::args().any(|a| a == "--skip-witness");
    let cfg = ProjectConfig::preset(&name)?;
    let run = pipeline::certify(&cfg, skip_witness);
    println!("{}", serde_json::to_string_pretty(&run.report)?);
    eprintln!("{}: {} (exit code {})", name, run.report.verdict, run.exit_code());
    Ok(())
}
