//! Writes the bundled synthetic city into `data/synthetic_city`.
//!
//!     cargo run -p urbanreach --example generate_synthetic_city [-- <dir> [seed]]

use std::path::PathBuf;

use urbanreach::synthetic::{synthetic_city, BUNDLED_SEED};

fn main() -> urbanreach::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_city"));
    let seed = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(BUNDLED_SEED);
    for path in synthetic_city(seed).write_to(&dir)? {
        println!("{}", path.display());
    }
    Ok(())
}
