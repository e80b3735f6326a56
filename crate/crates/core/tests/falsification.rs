use stlmine::falsification::{falsify, ControlPointSpec, FalsifierConfig, Interpolation};
use stlmine::models::{DelayModel, TimeDomain};
use stlmine::{parse_formula, satisfies, Model};

fn setup() -> (DelayModel, ControlPointSpec) {
    let m = DelayModel::new(1.0, 1.0).unwrap();
    let spec = ControlPointSpec::for_model(
        &m,
        10,
        Interpolation::PiecewiseConstant,
        TimeDomain {
            duration: 100.0,
            dt: 1.0,
        },
    );
    (m, spec)
}

#[test]
fn sound_assumption_survives_full_budget() {
    let (m, spec) = setup();
    let phi_in = parse_formula("G[0,99](u > 0)").unwrap();
    let phi_out = parse_formula("G[1,100](y > 0)").unwrap();
    for seed in 0..3 {
        let cfg = FalsifierConfig {
            budget: 1000,
            seed,
            ..Default::default()
        };
        let out = falsify(&m, &phi_in, &phi_out, &spec, &cfg).unwrap();
        assert!(out.counterexample.is_none(), "seed {seed}");
        assert_eq!(out.simulations, 1000);
    }
}

#[test]
fn weakened_assumption_is_falsified() {
    let (m, spec) = setup();
    let phi_in = parse_formula("G[0,50](u > 0)").unwrap();
    let phi_out = parse_formula("G[1,100](y > 0)").unwrap();
    let mut found = 0;
    for seed in 0..10 {
        let cfg = FalsifierConfig {
            budget: 500,
            seed,
            ..Default::default()
        };
        let out = falsify(&m, &phi_in, &phi_out, &spec, &cfg).unwrap();
        assert!(out.simulations <= 500);
        if let Some(c) = out.counterexample {
            // verify independently of the search
            assert!(satisfies(&phi_in, &c.input).unwrap());
            let y = m.simulate(&c.input).unwrap();
            assert!(!satisfies(&phi_out, &y).unwrap());
            assert_eq!(y, c.output);
            found += 1;
        }
    }
    assert!(found >= 9, "{found}/10");
}
