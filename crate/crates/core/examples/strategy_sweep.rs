//! Compare the five selection strategies on the nominal scenario, averaging
//! ITAE over the trailing window of every seed.
//!
//!     cargo run --release --example strategy_sweep -- [seeds] [episodes]

use tasac::agent::{Algorithm, SelectionStrategy};
use tasac::bench::{run_experiment, ExperimentSpec};
use tasac::reactor::Scenario;

fn main() -> tasac::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);

    println!(
        "{:<10} {:>14} {:>10}",
        "strategy", "average ITAE", "seed std"
    );
    for st in SelectionStrategy::ALL {
        let mut spec = ExperimentSpec::desk(Scenario::Nominal, Algorithm::Tasac, st);
        spec.seeds = (0..seeds).collect();
        spec.episodes = episodes;
        spec.window = Some(spec.effective_window().min(episodes));
        let r = run_experiment(&spec)?;
        println!(
            "{:<10} {:>14.2} {:>10}",
            st.name(),
            r.aggregate_itae.unwrap_or(f64::NAN),
            r.seed_std_itae
                .map_or_else(|| "-".to_string(), |s| format!("{s:.2}"))
        );
    }
    Ok(())
}
