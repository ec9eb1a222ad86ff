//! Run a short experiment, write its report, and turn it into plot-ready
//! CSVs plus a gnuplot script.
//!
//!     cargo run --release --example plot_data -- [out dir]

use tasac::agent::{Algorithm, SelectionStrategy};
use tasac::bench::{emit_plots, run_experiment, ExperimentSpec};
use tasac::reactor::Scenario;

fn main() -> tasac::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "plot_data_out".into());
    let mut spec = ExperimentSpec::desk(
        Scenario::Nominal,
        Algorithm::Tasac,
        SelectionStrategy::MinMin,
    );
    spec.seeds = vec![0, 1];
    spec.episodes = 15;
    let report = run_experiment(&spec)?;
    for path in report.write(&out)? {
        println!("report  {}", path.display());
    }
    for path in emit_plots(&report, &out, format!("{out}/plots"), None)? {
        println!("plot    {}", path.display());
    }
    println!("render with: cd {out}/plots && gnuplot plots.gp");
    Ok(())
}
