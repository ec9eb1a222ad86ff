//! How the five strategies pick between the two actors' candidates, on a
//! hand-set table and on a freshly initialized agent.

use tasac::agent::{AgentBundle, Hyperparameters, SelectionStrategy};
use tasac::Rng;

fn main() -> tasac::Result<()> {
    // q[actor][critic]
    let q = [[1.0, 2.0], [3.0, 0.0]];
    println!("Q table: actor 1 {:?}, actor 2 {:?}", q[0], q[1]);
    for st in SelectionStrategy::ALL {
        let scores = st.scores(&q);
        println!(
            "{st:<8} aggregates {scores:?} -> actor {}",
            st.select(&q, false) + 1
        );
    }

    let hyper = Hyperparameters {
        hidden_layers: vec![32, 32],
        ..Hyperparameters::default()
    };
    let mut agent = AgentBundle::new(2, 1, 2, SelectionStrategy::MinMin, hyper, &mut Rng::new(3))?;
    let obs = [-12.0, 0.25];
    println!("\nagent at e = {} K, t/T = {}", obs[0], obs[1]);
    for st in SelectionStrategy::ALL {
        agent.strategy = st;
        let (a, d) = agent.select_action(&obs, &mut Rng::new(0))?;
        println!(
            "{st:<8} candidates {:>7.4} {:>7.4} -> {:>7.4} (actor {})",
            d.candidates[0][0],
            d.candidates[1][0],
            a[0],
            d.chosen + 1
        );
    }
    Ok(())
}
