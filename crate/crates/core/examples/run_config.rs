//! Run a bundled config through the same pipeline as the command-line tool.
//!
//! ```text
//! cargo run --example run_config -- configs/weak_coupling.toml oracle /tmp/weak
//! ```

use std::path::PathBuf;

use collective_recoil::config::load_config;
use collective_recoil::output::{run, RunOptions, Subcommand};

fn main() -> collective_recoil::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/weak_coupling.toml")));
    let sub: Subcommand = args.next().as_deref().unwrap_or("oracle").parse()?;
    let out_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("recoil-example"));

    let cfg = load_config(&path)?;
    let report = run(sub, &cfg, &RunOptions { out_dir: Some(out_dir), jobs: 2 })?;
    for line in &report.summary {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
