//! Regenerates `fixtures/sample_run.xyz`:
//!
//! ```text
//! cargo run -p posner-core --example write_sample
//! ```

use posner::fixture::sample_run;
use posner::io::write_traj;

fn main() -> std::io::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/sample_run.xyz");
    std::fs::write(path, write_traj(&sample_run().trajectory))?;
    println!("wrote {path}");
    Ok(())
}
