//! Writes the bundled synthetic series CSV.
//!
//! Usage: `cargo run --example gen_synthetic -- data/synthetic/series.csv`

use std::path::PathBuf;

use nowkit::ingest::write_series_csv;
use nowkit::synthetic::{generate, DgpConfig};

fn main() {
    let path = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("series.csv"));
    let pool = generate(&DgpConfig::default());
    if let Err(e) = write_series_csv(&pool, &path) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    println!("wrote {} series to {}", pool.len(), path.display());
}
