//! Reference domain-knowledge-model executable. See `gaen::demo` for the
//! supported modes.

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(msg) = dtg_core::gaen::run_demo(&args) {
        eprintln!("dtg-dkm-demo: {msg}");
        std::process::exit(2);
    }
}
