//! TASAC min-min against the single-actor baseline on the nominal plant,
//! under measurement noise, and under batch-to-batch kinetic variation.
//!
//!     cargo run --release --example robustness_comparison -- [seeds] [episodes]

use tasac::agent::{Algorithm, SelectionStrategy};
use tasac::bench::{compare_report, parse_scenario, run_experiment, ExperimentSpec};

fn main() -> tasac::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(40);

    for name in ["nominal", "noise", "btbv"] {
        let scenario = parse_scenario(name)?;
        let reports = [Algorithm::Tasac, Algorithm::Sac]
            .into_iter()
            .map(|alg| {
                let mut spec = ExperimentSpec::desk(scenario, alg, SelectionStrategy::MinMin);
                spec.seeds = (0..seeds).collect();
                spec.episodes = episodes;
                spec.window = Some(spec.effective_window().min(episodes));
                run_experiment(&spec)
            })
            .collect::<tasac::Result<Vec<_>>>()?;
        let c = compare_report(&reports)?;
        for row in &c.rows {
            println!("{name:<8} {:<14} ITAE {:>10.2}", row.label, row.itae);
        }
        println!(
            "{name:<8} {} improves on {} by {:.1}%\n",
            c.improvements[0].better, c.improvements[0].than, c.improvements[0].percent
        );
    }
    Ok(())
}
