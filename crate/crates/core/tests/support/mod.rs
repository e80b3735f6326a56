//! Shared test helpers: a definitional robustness oracle, random formula and
//! trace generators, and a tree/formula agreement checker.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stlmine::classifier::compute_features;
use stlmine::extraction::extract_stl;
use stlmine::{Atom, Cmp, DecisionTree, Expr, Formula, Interval, ParametricFormula, TimedTrace, Valuation};

/// Same absolute slack the library applies to time comparisons.
pub const EPS: f64 = 1e-9;

fn offset_in(iv: &Interval, d: f64) -> bool {
    let lo = if iv.lo_closed { d >= iv.lo - EPS } else { d > iv.lo + EPS };
    let hi = if iv.hi_closed { d <= iv.hi + EPS } else { d < iv.hi - EPS };
    lo && hi
}

fn atom(a: &Atom, v: f64) -> f64 {
    match a.cmp {
        Cmp::Ge | Cmp::Gt => v - a.value,
        Cmp::Le | Cmp::Lt => a.value - v,
    }
}

/// Robustness at sample `i` computed straight from the recursive definition.
pub fn oracle(phi: &Formula, x: &TimedTrace, i: usize) -> f64 {
    let ts = x.times();
    let window = |iv: &Interval| (i..ts.len()).filter(|&j| offset_in(iv, ts[j] - ts[i])).collect::<Vec<_>>();
    match phi {
        Expr::True => f64::INFINITY,
        Expr::Atom(a) => atom(a, x.channel(&a.signal).expect("signal")[i]),
        Expr::Not(a) => -oracle(a, x, i),
        Expr::And(a, b) => oracle(a, x, i).min(oracle(b, x, i)),
        Expr::Or(a, b) => oracle(a, x, i).max(oracle(b, x, i)),
        Expr::Implies(a, b) => (-oracle(a, x, i)).max(oracle(b, x, i)),
        Expr::Globally(iv, a) => window(iv).into_iter().map(|j| oracle(a, x, j)).fold(f64::INFINITY, f64::min),
        Expr::Eventually(iv, a) => {
            window(iv).into_iter().map(|j| oracle(a, x, j)).fold(f64::NEG_INFINITY, f64::max)
        }
        Expr::Until(iv, a, b) => window(iv)
            .into_iter()
            .map(|j| {
                let hold = (i..j).map(|k| oracle(a, x, k)).fold(f64::INFINITY, f64::min);
                oracle(b, x, j).min(hold)
            })
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Non-uniform stamps on a quarter grid (so interval endpoints are hit
/// exactly) with two channels `x` and `y`.
pub fn random_trace(rng: &mut ChaCha8Rng, max_len: usize) -> TimedTrace {
    let n = rng.random_range(1..=max_len);
    let mut t = 0.0;
    let mut times = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            t += if rng.random_bool(0.7) {
                0.25 * rng.random_range(1..=4) as f64
            } else {
                rng.random_range(0.05..1.5)
            };
        }
        times.push(t);
    }
    let chan = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(-6..=6) as f64 * 0.5
                } else {
                    rng.random_range(-3.0..3.0)
                }
            })
            .collect()
    };
    let x = chan(rng);
    let y = chan(rng);
    TimedTrace::new(times, [("x".to_string(), x), ("y".to_string(), y)]).unwrap()
}

pub fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let lo = if rng.random_bool(0.4) { 0.0 } else { 0.25 * rng.random_range(0..12) as f64 };
    if rng.random_bool(0.1) {
        return Interval::closed(lo, lo).unwrap();
    }
    if rng.random_bool(0.1) {
        return Interval::new(lo, f64::INFINITY, rng.random_bool(0.5), false).unwrap();
    }
    let hi = lo + 0.25 * rng.random_range(1..16) as f64;
    Interval::new(lo, hi, rng.random_bool(0.6), rng.random_bool(0.6)).unwrap()
}

fn random_atom(rng: &mut ChaCha8Rng) -> Formula {
    let signal = if rng.random_bool(0.5) { "x" } else { "y" };
    let cmp = [Cmp::Ge, Cmp::Gt, Cmp::Le, Cmp::Lt][rng.random_range(0..4)];
    let value = if rng.random_bool(0.3) {
        rng.random_range(-4..=4) as f64 * 0.5
    } else {
        rng.random_range(-2.5..2.5)
    };
    Expr::atom(signal, cmp, value)
}

/// Random formula with at most `budget` nodes over every operator.
pub fn random_formula(rng: &mut ChaCha8Rng, budget: usize) -> Formula {
    random_formula_from(rng, budget, false)
}

/// Random formula in negation normal form: no implication, and negation
/// only over `true` or an until.
pub fn random_nnf_formula(rng: &mut ChaCha8Rng, budget: usize) -> Formula {
    random_formula_from(rng, budget, true)
}

fn random_formula_from(rng: &mut ChaCha8Rng, budget: usize, nnf: bool) -> Formula {
    if budget <= 1 || rng.random_bool(0.2) {
        return if rng.random_bool(0.08) { Expr::True } else { random_atom(rng) };
    }
    let unary = budget == 2 || rng.random_bool(0.45);
    if unary {
        let sub = random_formula_from(rng, budget - 1, nnf);
        return match rng.random_range(0..3) {
            0 if !nnf => sub.not(),
            0 | 1 => Expr::globally(random_interval(rng), sub),
            _ => Expr::eventually(random_interval(rng), sub),
        };
    }
    let left = rng.random_range(1..=budget - 2);
    let a = random_formula_from(rng, left, nnf);
    let b = random_formula_from(rng, budget - 1 - left, nnf);
    match rng.random_range(0..5) {
        0 => a.and(b),
        1 => a.or(b),
        2 if !nnf => a.implies(b),
        2 => Expr::until(random_interval(rng), a, b).not(),
        _ => Expr::until(random_interval(rng), a, b),
    }
}

/// Outcome of comparing tree predictions with the extracted formula.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub agree: usize,
    pub disagree: usize,
    /// Traces with some feature on their decision path within `EPS` of the
    /// split threshold; the shifted formula cannot resolve those ties.
    pub boundary: usize,
}

impl Agreement {
    pub fn total(&self) -> usize {
        self.agree + self.disagree + self.boundary
    }

    pub fn perfect(&self) -> bool {
        self.disagree == 0 && self.agree > 0
    }
}

fn near_threshold(tree: &DecisionTree, row: &[f64]) -> bool {
    let mut node = tree;
    while let DecisionTree::Split { feature, threshold, left, right } = node {
        let v = row[*feature];
        if (v - threshold).abs() <= EPS * threshold.abs().max(1.0) {
            return true;
        }
        node = if v < *threshold { left } else { right };
    }
    false
}

/// `satisfies(extract_stl(tree), u) == predict(tree, features(u))` for every trace.
pub fn check_agreement(
    tree: &DecisionTree,
    psi: &ParametricFormula,
    valuations: &[Valuation],
    traces: &[&TimedTrace],
) -> Agreement {
    let phi = extract_stl(tree, psi, valuations).expect("extraction");
    let labels = vec![0u8; traces.len()];
    let features = compute_features(traces, &labels, psi, valuations).expect("features");
    let mut out = Agreement::default();
    for (tr, row) in traces.iter().zip(&features.rows) {
        if near_threshold(tree, row) {
            out.boundary += 1;
            continue;
        }
        let by_tree = tree.predict(row) == 1;
        let by_formula = stlmine::satisfies(&phi, tr).expect("monitor");
        if by_tree == by_formula {
            out.agree += 1;
        } else {
            out.disagree += 1;
        }
    }
    out
}
