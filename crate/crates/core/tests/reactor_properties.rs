//! Physical invariants of the reactor model over random states and policies.

use proptest::prelude::*;

use tasac::reactor::{arrhenius, species_derivatives, EnvConfig, ReactorEnv, Scenario};
use tasac::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn species_balances_cancel(
        c in prop::array::uniform6(0.0f64..3.0),
        t in 290.0f64..380.0,
    ) {
        let k = arrhenius(&EnvConfig::default().kinetics, t).unwrap();
        let d = species_derivatives(&c, &k);
        let scale: f64 = d.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        // TG + DG + MG + GL and A + E are conserved by every reaction
        prop_assert!((d[0] + d[1] + d[2] + d[5]).abs() <= 8.0 * f64::EPSILON * scale);
        prop_assert!((d[3] + d[4]).abs() <= 8.0 * f64::EPSILON * scale);
    }

    #[test]
    fn rate_constants_increase_with_temperature(t in 280.0f64..400.0, dt in 0.1f64..50.0) {
        let kp = EnvConfig::default().kinetics;
        let (lo, hi) = (arrhenius(&kp, t).unwrap(), arrhenius(&kp, t + dt).unwrap());
        for i in 0..6 {
            prop_assert!(hi[i] > lo[i]);
        }
    }
}

#[test]
fn random_policies_keep_state_physical_in_every_scenario() {
    let scenarios = [
        Scenario::Nominal,
        Scenario::MeasurementNoise { fraction: 0.005 },
        Scenario::Btbv { fraction: 0.1 },
    ];
    for (n, sc) in scenarios.into_iter().enumerate() {
        let cfg = EnvConfig::default().with_scenario(sc);
        let [lo, hi] = cfg.control.action_bounds;
        let t0 = cfg.initial.t_reactor.min(lo);
        let mut env = ReactorEnv::new(cfg, Rng::new(n as u64)).unwrap();
        let mut policy = Rng::new(100 + n as u64);
        for _ in 0..5 {
            env.reset();
            while !env.is_done() {
                let out = env.step(policy.uniform_range(-1.0, 1.0)).unwrap();
                let s = env.state();
                assert!(s.concentrations().iter().all(|c| *c >= 0.0));
                // with a mildly exothermic charge the reactor stays within a few
                // kelvin of the inlet envelope
                assert!(
                    s.t_reactor > t0 - 1.0 && s.t_reactor < hi + 5.0,
                    "T_r = {}",
                    s.t_reactor
                );
                assert!(out.reward <= 0.0);
            }
        }
    }
}
