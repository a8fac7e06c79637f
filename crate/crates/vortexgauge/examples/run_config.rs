//! Runs a verification suite from an inline configuration, as the binary does.

use vortexgauge::cli::{run_suite, RunConfig};
use vortexgauge::Result;

fn main() -> Result<()> {
    let cfg =
        RunConfig::from_json(r#"{"version": 1, "geometry": {"genus": 3}, "bundle": {"n": 4}, "resolution": 12}"#)?;
    let report = run_suite("flux", &cfg)?;
    for c in &report.checks {
        println!("{:<22} {:>12.4e}  tol {:.1e}  {}", c.name, c.value, c.tolerance, if c.pass { "ok" } else { "FAIL" });
    }
    Ok(())
}
