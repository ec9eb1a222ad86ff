//! Ring-buffer replay: fill past capacity, sample a minibatch, and round-trip
//! a snapshot through disk.

use tasac::replay::{ReplayBuffer, Transition};
use tasac::Rng;

fn main() -> tasac::Result<()> {
    let mut buf = ReplayBuffer::new(5)?;
    for k in 0..8 {
        buf.push(Transition {
            state: vec![k as f64, 0.0],
            action: vec![0.1 * k as f64 - 0.4],
            reward: -(k as f64),
            next_state: vec![k as f64 + 1.0, 0.0],
            done: k == 7,
        })?;
    }
    let kept: Vec<f64> = buf.iter_oldest_first().map(|t| t.state[0]).collect();
    println!(
        "capacity {} holds {} transitions, oldest first: {kept:?}",
        buf.capacity(),
        buf.len()
    );

    let batch = buf.sample(3, &mut Rng::new(9))?;
    println!(
        "sampled rewards {:?}, dones {:?}",
        batch.rewards.to_vec(),
        batch.dones.to_vec()
    );

    let path = std::env::temp_dir().join("tasac_replay_example.bin");
    buf.save(&path)?;
    let back = ReplayBuffer::load(&path)?;
    println!("snapshot round trip equal: {}", back == buf);
    std::fs::remove_file(path)?;
    Ok(())
}
