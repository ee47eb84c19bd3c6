//! Runs a JSON descriptor (default: `examples/descriptor.json`) and prints
//! one line per item.

use dyadic_walsh::experiment::{run, ExperimentDescriptor};

fn main() -> dyadic_walsh::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/descriptor.json").into());
    let out_dir = std::env::temp_dir().join("dyadic-descriptor-example");
    let d = ExperimentDescriptor::load(&path)?;
    let out = run(&d, &out_dir)?;
    for item in &out.items {
        let status = if item.check_failure.is_some() { "FAIL" } else { "ok" };
        println!("[{status}] {} ({}): {}", item.name, item.kind, item.summary);
    }
    println!("artifacts in {}", out_dir.display());
    std::process::exit(out.exit_code());
}
