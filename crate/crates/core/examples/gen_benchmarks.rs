//! Regenerate the shipped desk benchmarks: `cargo run --example gen_benchmarks -- benchmarks`

use std::path::PathBuf;

use resparc::harness::bench;

/// Seed of the shipped networks.
const SEED: u64 = 7;

fn main() -> resparc::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "benchmarks".into()));
    bench::save(&bench::desk_mlp(SEED), &dir, "desk_mlp")?;
    bench::save(&bench::desk_cnn(SEED), &dir, "desk_cnn")?;
    println!("wrote desk_mlp and desk_cnn to {}", dir.display());
    Ok(())
}
