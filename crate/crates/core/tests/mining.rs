use stlmine::miner::{mine, MinerConfig, MiningOutcome};
use stlmine::models::DelayModel;
use stlmine::{parse_formula, satisfies, Model};

fn config(seed: u64) -> MinerConfig {
    MinerConfig {
        control_points: 10,
        seed,
        ..Default::default()
    }
}

#[test]
fn delay_assumption_is_mined() {
    let m = DelayModel::new(1.0, 1.0).unwrap();
    let phi_out = parse_formula("G[1,100](y > 0)").unwrap();
    let r = mine(&m, &phi_out, &config(0)).unwrap();
    let phi_in = r.assumption().expect("assumption").clone();
    let MiningOutcome::Assumption { test_accuracy, .. } = &r.result else {
        panic!("{:?}", r.result)
    };
    assert!(*test_accuracy > 0.99);
    // every recorded counterexample was refuted by a later candidate
    assert!(r.candidates.iter().any(|c| c.falsification.is_some()));
    // a constant input above the threshold meets the assumption and the requirement
    let times = stlmine::TimedTrace::uniform_times(100.0, 1.0);
    let u = stlmine::TimedTrace::new(times.clone(), [("u".to_string(), vec![0.5; times.len()])]).unwrap();
    assert!(satisfies(&phi_in, &u).unwrap());
    assert!(satisfies(&phi_out, &m.simulate(&u).unwrap()).unwrap());
}

#[test]
fn mining_is_deterministic() {
    let m = DelayModel::new(1.0, 1.0).unwrap();
    let phi_out = parse_formula("G[1,100](y > 0)").unwrap();
    let mut a = serde_json::to_value(mine(&m, &phi_out, &config(5)).unwrap()).unwrap();
    let mut b = serde_json::to_value(mine(&m, &phi_out, &config(5)).unwrap()).unwrap();
    a.as_object_mut().unwrap().remove("wall_time_s");
    b.as_object_mut().unwrap().remove("wall_time_s");
    assert_eq!(a, b);
}
