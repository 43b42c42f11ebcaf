//! Regenerates the bundled demo project: `cargo run --example gen_demo -- <dir>`.

use dtg_cli::synth::{write_demo, ChainSpec};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo".to_string());
    write_demo(std::path::Path::new(&dir), &ChainSpec::default()).expect("write demo");
    eprintln!("demo written to {dir}");
}
