//! Train one TASAC agent on the nominal reactor, then evaluate the greedy
//! policy and save a checkpoint with per-episode metrics.
//!
//!     cargo run --release --example train_agent -- [episodes] [seed] [out dir]

use std::path::PathBuf;

use tasac::agent::{
    evaluate_policy, random_policy_run, save_checkpoint, write_metrics_csv, AgentBundle,
    SelectionStrategy, Trainer, INIT_STREAM,
};
use tasac::bench::ExperimentSpec;
use tasac::reactor::{write_trajectory_csv, EnvConfig, Scenario};
use tasac::Rng;

fn main() -> tasac::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let episodes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = PathBuf::from(
        args.get(3)
            .cloned()
            .unwrap_or_else(|| "train_agent_out".into()),
    );
    std::fs::create_dir_all(&out)?;

    let hyper = ExperimentSpec::desk(
        Scenario::Nominal,
        tasac::agent::Algorithm::Tasac,
        SelectionStrategy::MinMin,
    )
    .hyper;
    let env = EnvConfig::default();
    let agent = AgentBundle::new(
        2,
        1,
        2,
        SelectionStrategy::MinMin,
        hyper,
        &mut Rng::with_stream(seed, INIT_STREAM),
    )?;
    let mut trainer = Trainer::new(agent, env.clone(), seed)?;

    let mut logs = Vec::new();
    let mut last_rows = Vec::new();
    for _ in 0..episodes {
        let (log, rows) = trainer.run_episode()?;
        println!(
            "episode {:>3}  ITAE {:>10.1}  alpha {:.3}  critic loss {:>10.2}  picks {:?}",
            log.episode, log.itae, log.alpha, log.critic_losses[0], log.actor_choices
        );
        logs.push(log);
        last_rows = rows;
    }

    let random = random_policy_run(&env, 5, seed)?;
    let greedy = evaluate_policy(&trainer.bundle, &env, 1, seed)?;
    println!(
        "random policy ITAE {:.1}, greedy trained policy ITAE {:.1}",
        random.iter().sum::<f64>() / random.len() as f64,
        greedy[0]
    );

    write_metrics_csv(&logs, out.join("metrics.csv"))?;
    write_trajectory_csv(&last_rows, out.join("trajectory.csv"))?;
    save_checkpoint(out.join("agent.ckpt"), &trainer.bundle, trainer.rng())?;
    println!(
        "metrics, trajectory and checkpoint written to {}",
        out.display()
    );
    Ok(())
}
