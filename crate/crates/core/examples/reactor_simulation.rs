//! Open-loop batch run: hold the jacket inlet at a fixed temperature, print
//! the temperature and composition every ten minutes, and write the full
//! trajectory to CSV.
//!
//!     cargo run --example reactor_simulation -- [T_jin K] [out.csv]

use tasac::reactor::{write_trajectory_csv, EnvConfig, ReactorEnv};
use tasac::Rng;

fn main() -> tasac::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let t_jin: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(340.0);
    let out = args
        .get(2)
        .cloned()
        .unwrap_or_else(|| "reactor_open_loop.csv".into());

    let config = EnvConfig::default();
    let [lo, hi] = config.control.action_bounds;
    // invert the affine action map so the env sees the requested inlet
    let action = (2.0 * (t_jin - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0);
    let mut env = ReactorEnv::new(config, Rng::new(0))?;
    env.reset();
    let g0 = env.state().glyceride_total();

    let mut rows = Vec::new();
    println!(
        "{:>6} {:>8} {:>8} {:>7} {:>7} {:>7}",
        "t/min", "T_r", "T_j", "TG", "E", "GL"
    );
    while !env.is_done() {
        let step = env.step(action)?;
        rows.push(env.trajectory_row(&step));
        let s = env.state();
        if (s.time as u64) % 600 == 0 {
            println!(
                "{:>6.0} {:>8.2} {:>8.2} {:>7.4} {:>7.4} {:>7.4}",
                s.time / 60.0,
                s.t_reactor,
                s.t_jacket,
                s.tg,
                s.ester,
                s.glycerol
            );
        }
    }
    let drift = (env.state().glyceride_total() - g0).abs() / g0;
    println!("glyceride balance drift over the batch: {drift:.1e}");
    write_trajectory_csv(&rows, &out)?;
    println!("wrote {} rows to {out}", rows.len());
    Ok(())
}
