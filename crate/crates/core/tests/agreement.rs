mod support;

use std::collections::BTreeMap;

use stlmine::classifier::{dt_based_stl_classifier, ClassifierConfig, LabeledTraces};
use stlmine::miner::label_traces;
use stlmine::models::{
    delay_pair_dataset, sample_input_traces, DelayModel, DelayPairConfig, InputGenConfig, OscillatorModel, TimeDomain,
};
use stlmine::{parse_formula, parse_template, Model, ParametricFormula};

use support::check_agreement;

fn ranges(pairs: &[(&str, f64, f64)]) -> BTreeMap<String, (f64, f64)> {
    pairs.iter().map(|&(n, lo, hi)| (n.to_string(), (lo, hi))).collect()
}

fn assert_agrees(data: &LabeledTraces, psi: &ParametricFormula, samples: usize) {
    let cfg = ClassifierConfig {
        samples,
        ..Default::default()
    };
    let c = dt_based_stl_classifier(psi, data, &cfg).unwrap();
    let all: Vec<_> = data.good.iter().chain(&data.bad).collect();
    let a = check_agreement(&c.tree, psi, &c.valuations, &all);
    assert_eq!(a.total(), all.len());
    assert!(a.perfect(), "{psi}: {a:?}");
    // boundary ties are a measure-zero carve-out, not a loophole
    assert!(a.boundary * 100 <= all.len(), "{a:?}");
}

fn sampled(model: &dyn Model, time: TimeDomain, n: usize, requirement: &str) -> LabeledTraces {
    let inputs = sample_input_traces(
        &InputGenConfig {
            segments: 5,
            signals: model.inputs().to_vec(),
            time,
            seed: 3,
        },
        n,
    )
    .unwrap();
    label_traces(model, inputs, &parse_formula(requirement).unwrap()).unwrap()
}

#[test]
fn delay_pair_benchmark() {
    let data = delay_pair_dataset(150, 150, 7, &DelayPairConfig::default()).unwrap();
    let t = parse_template("G[0,100](x >= 0.1 -> F[0,?tau](y >= 0.1))").unwrap();
    let psi = ParametricFormula::with_ranges(t, &ranges(&[("tau", 0.0, 50.0)])).unwrap();
    for m in [4, 7, 10] {
        assert_agrees(&data, &psi, m);
    }
}

#[test]
fn oscillator_benchmark() {
    let model = OscillatorModel::default();
    let data = sampled(&model, TimeDomain { duration: 25.0, dt: 0.1 }, 200, "G(-1 <= y <= 1)");
    assert!(!data.good.is_empty() && !data.bad.is_empty());
    let t = parse_template("G[0,?a](G[0,?b](u2 > ?c) || u1 > ?d)").unwrap();
    let psi = ParametricFormula::with_ranges(
        t,
        &ranges(&[("a", 0.0, 20.0), ("b", 0.0, 20.0), ("c", -1.0, 3.0), ("d", -1.0, 3.0)]),
    )
    .unwrap();
    assert_agrees(&data, &psi, 81);
}

#[test]
fn delay_model_benchmark() {
    let model = DelayModel::new(1.0, 1.0).unwrap();
    let data = sampled(&model, TimeDomain { duration: 100.0, dt: 1.0 }, 200, "G[1,100](y > 0)");
    let t = parse_template("G[?a,?b](u > ?p)").unwrap();
    let psi = ParametricFormula::with_ranges(t, &ranges(&[("a", 0.0, 100.0), ("b", 0.0, 100.0), ("p", -1.0, 1.0)]))
        .unwrap();
    assert_agrees(&data, &psi, 27);
}
