//! Search for an input that satisfies a candidate assumption but drives the
//! model's output to violate the requirement.
//!
//! Inputs are parameterized by control points per signal and realized on the
//! sample grid. The objective is
//! `(max(0, -ρ_in) + 1)^(2k) - 1 + clamp(ρ_out)`, minimized by restarted
//! stochastic hill climbing within a fixed simulation budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::models::{segment_of, uniform, Model, ModelError, SignalDomain, TimeDomain};
use crate::robustness::{robustness, satisfies, MonitorError};
use crate::trace::{TimedTrace, TraceError};

#[derive(Debug, Error)]
pub enum FalsifyError {
    #[error("expected {expected} control values, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("invalid control-point specification: {0}")]
    BadSpec(String),
    #[error("invalid falsifier configuration: {0}")]
    BadConfig(String),
    #[error("signal `{0}` is not available to the formula")]
    Support(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    PiecewiseConstant,
    PiecewiseLinear,
}

/// How a control vector maps to an input trace. The vector is signal-major:
/// `points_per_signal` values for the first signal, then the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPointSpec {
    pub points_per_signal: usize,
    pub signals: Vec<SignalDomain>,
    pub interpolation: Interpolation,
    pub time: TimeDomain,
}

impl ControlPointSpec {
    /// Control points over the model's input signals and boxes.
    pub fn for_model(model: &dyn Model, points_per_signal: usize, interpolation: Interpolation, time: TimeDomain) -> Self {
        ControlPointSpec {
            points_per_signal,
            signals: model.inputs().to_vec(),
            interpolation,
            time,
        }
    }

    pub fn dimension(&self) -> usize {
        self.points_per_signal * self.signals.len()
    }

    fn validate(&self) -> Result<(), FalsifyError> {
        if self.points_per_signal == 0 {
            return Err(FalsifyError::BadSpec("points_per_signal must be at least 1".into()));
        }
        if self.signals.is_empty() {
            return Err(FalsifyError::BadSpec("no input signals".into()));
        }
        if let Some(d) = self.signals.iter().find(|d| !(d.lo <= d.hi) || !d.lo.is_finite() || !d.hi.is_finite()) {
            return Err(FalsifyError::BadSpec(format!("bad box for `{}`", d.name)));
        }
        if !(self.time.duration > 0.0 && self.time.dt > 0.0) {
            return Err(FalsifyError::BadSpec("duration and dt must be positive".into()));
        }
        Ok(())
    }
}

/// A realized input; `clamped` reports whether any control value lay outside
/// its box.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedInput {
    pub trace: TimedTrace,
    pub clamped: bool,
}

pub fn realize_input(u_hat: &[f64], spec: &ControlPointSpec) -> Result<RealizedInput, FalsifyError> {
    spec.validate()?;
    let k = spec.points_per_signal;
    if u_hat.len() != spec.dimension() {
        return Err(FalsifyError::WrongArity {
            expected: spec.dimension(),
            got: u_hat.len(),
        });
    }
    let times = spec.time.times();
    let duration = spec.time.duration;
    let mut clamped = false;
    let mut channels = Vec::with_capacity(spec.signals.len());
    for (s, dom) in spec.signals.iter().enumerate() {
        let pts: Vec<f64> = u_hat[s * k..(s + 1) * k]
            .iter()
            .map(|&v| {
                let c = v.clamp(dom.lo, dom.hi);
                clamped |= c != v;
                c
            })
            .collect();
        let values = times
            .iter()
            .map(|&t| match spec.interpolation {
                Interpolation::PiecewiseConstant => pts[segment_of(t, duration, k)],
                Interpolation::PiecewiseLinear if k == 1 => pts[0],
                Interpolation::PiecewiseLinear => {
                    let h = duration / (k - 1) as f64;
                    let j = ((t / h + 1e-9).floor() as usize).min(k - 2);
                    let w = ((t - j as f64 * h) / h).clamp(0.0, 1.0);
                    pts[j] + w * (pts[j + 1] - pts[j])
                }
            })
            .collect();
        channels.push((dom.name.clone(), values));
    }
    Ok(RealizedInput {
        trace: TimedTrace::new(times, channels)?,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub rho_in: f64,
    pub rho_out: f64,
    pub cost: f64,
}

fn penalty(rho_in: f64, k: u32) -> f64 {
    (f64::max(0.0, -rho_in) + 1.0).powi(2 * k as i32) - 1.0
}

/// `(max(0, -ρ(φ_in, u, 0)) + 1)^(2k) - 1 + ρ(φ_out, y, 0)` for the realized
/// input `u` and its output `y`.
pub fn cost(
    u_hat: &[f64],
    phi_in: &Formula,
    phi_out: &Formula,
    model: &dyn Model,
    spec: &ControlPointSpec,
    k: u32,
) -> Result<Evaluation, FalsifyError> {
    let u = realize_input(u_hat, spec)?.trace;
    evaluate(&u, phi_in, phi_out, model, k)
}

fn evaluate(u: &TimedTrace, phi_in: &Formula, phi_out: &Formula, model: &dyn Model, k: u32) -> Result<Evaluation, FalsifyError> {
    let y = model.simulate(u)?;
    let rho_in = robustness(phi_in, u, 0.0)?;
    let rho_out = robustness(phi_out, &y, 0.0)?;
    Ok(Evaluation {
        rho_in,
        rho_out,
        cost: penalty(rho_in, k) + rho_out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FalsifierConfig {
    /// Maximum number of simulations.
    pub budget: usize,
    /// Penalty exponent; the penalty grows like `|ρ_in|^(2k)`.
    pub k: u32,
    pub restarts: usize,
    /// Initial Gaussian step, as a fraction of each box width.
    pub step_scale: f64,
    /// Ratio of the last step scale of a restart to the first.
    pub step_decay: f64,
    /// Magnitude bound applied to `ρ_out` inside the objective.
    pub rho_bound: f64,
    pub seed: u64,
}

impl Default for FalsifierConfig {
    fn default() -> Self {
        FalsifierConfig {
            budget: 1000,
            k: 2,
            restarts: 4,
            step_scale: 0.3,
            step_decay: 0.5,
            rho_bound: 100.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub input: TimedTrace,
    pub output: TimedTrace,
    pub rho_in: f64,
    pub rho_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalsifyOutcome {
    pub counterexample: Option<Counterexample>,
    pub simulations: usize,
    /// Lowest objective value seen.
    pub best_cost: f64,
}

/// Minimize the objective within `cfg.budget` simulations. A counterexample
/// is returned only if its input satisfies `phi_in` and its output violates
/// `phi_out` under direct monitoring.
pub fn falsify(
    model: &dyn Model,
    phi_in: &Formula,
    phi_out: &Formula,
    spec: &ControlPointSpec,
    cfg: &FalsifierConfig,
) -> Result<FalsifyOutcome, FalsifyError> {
    spec.validate()?;
    if cfg.budget == 0 || cfg.k == 0 || cfg.restarts == 0 || !(cfg.step_scale > 0.0) || !(cfg.step_decay > 0.0 && cfg.step_decay <= 1.0) || !(cfg.rho_bound > 0.0) {
        return Err(FalsifyError::BadConfig(
            "budget, k, restarts, step_scale and rho_bound must be positive; step_decay in (0, 1]".into(),
        ));
    }
    let inputs: Vec<&str> = spec.signals.iter().map(|d| d.name.as_str()).collect();
    if let Some(s) = phi_in.support().into_iter().find(|s| !inputs.contains(&s.as_str())) {
        return Err(FalsifyError::Support(s));
    }
    if let Some(s) = phi_out.support().into_iter().find(|s| !model.outputs().contains(s)) {
        return Err(FalsifyError::Support(s));
    }

    let k = spec.points_per_signal;
    let dim = spec.dimension();
    let boxes: Vec<(f64, f64)> = (0..dim)
        .map(|i| {
            let d = &spec.signals[i / k];
            (d.lo, d.hi)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let per_restart = cfg.budget.div_ceil(cfg.restarts).max(1);
    let mut sims = 0usize;
    let mut best_cost = f64::INFINITY;

    let run = |x: &[f64], sims: &mut usize| -> Result<(Evaluation, f64, Option<Counterexample>), FalsifyError> {
        *sims += 1;
        let u = realize_input(x, spec)?.trace;
        let y = model.simulate(&u)?;
        let rho_in = robustness(phi_in, &u, 0.0)?;
        let rho_out = robustness(phi_out, &y, 0.0)?;
        let eval = Evaluation {
            rho_in,
            rho_out,
            cost: penalty(rho_in, cfg.k) + rho_out,
        };
        let objective = penalty(rho_in, cfg.k) + rho_out.clamp(-cfg.rho_bound, cfg.rho_bound);
        let cex = if satisfies(phi_in, &u)? && !satisfies(phi_out, &y)? {
            Some(Counterexample {
                input: u,
                output: y,
                rho_in,
                rho_out,
            })
        } else {
            None
        };
        Ok((eval, objective, cex))
    };

    while sims < cfg.budget {
        let mut x: Vec<f64> = boxes.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect();
        let (_, mut fx, cex) = run(&x, &mut sims)?;
        best_cost = best_cost.min(fx);
        if let Some(c) = cex {
            return Ok(found(c, sims, best_cost));
        }
        let start = sims;
        while sims < cfg.budget && sims - start < per_restart - 1 {
            let progress = (sims - start) as f64 / per_restart as f64;
            let scale = cfg.step_scale * cfg.step_decay.powf(progress);
            // perturb a random nonempty subset of coordinates
            let p = 2.0 / dim as f64;
            let mut cand = x.clone();
            let mut moved = false;
            for (i, &(lo, hi)) in boxes.iter().enumerate() {
                if rng.random::<f64>() < p {
                    cand[i] = (cand[i] + scale * (hi - lo) * std_normal.sample(&mut rng)).clamp(lo, hi);
                    moved = true;
                }
            }
            if !moved {
                let i = rng.random_range(0..dim);
                let (lo, hi) = boxes[i];
                cand[i] = (cand[i] + scale * (hi - lo) * std_normal.sample(&mut rng)).clamp(lo, hi);
            }
            let (_, fc, cex) = run(&cand, &mut sims)?;
            best_cost = best_cost.min(fc);
            if let Some(c) = cex {
                return Ok(found(c, sims, best_cost));
            }
            if fc < fx {
                x = cand;
                fx = fc;
            }
        }
    }
    Ok(FalsifyOutcome {
        counterexample: None,
        simulations: sims,
        best_cost,
    })
}

fn found(c: Counterexample, simulations: usize, best_cost: f64) -> FalsifyOutcome {
    FalsifyOutcome {
        counterexample: Some(c),
        simulations,
        best_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::DelayModel;
    use crate::parse_formula;

    fn spec(k: usize, interpolation: Interpolation, duration: f64) -> ControlPointSpec {
        ControlPointSpec {
            points_per_signal: k,
            signals: vec![SignalDomain::new("u", -1.0, 1.0)],
            interpolation,
            time: TimeDomain { duration, dt: 1.0 },
        }
    }

    #[test]
    fn one_point_is_constant() {
        for interp in [Interpolation::PiecewiseConstant, Interpolation::PiecewiseLinear] {
            let r = realize_input(&[0.3], &spec(1, interp, 10.0)).unwrap();
            assert!(r.trace.channel("u").unwrap().iter().all(|&v| v == 0.3));
            assert!(!r.clamped);
        }
    }

    #[test]
    fn two_constant_points_step_at_midpoint() {
        let r = realize_input(&[-1.0, 1.0], &spec(2, Interpolation::PiecewiseConstant, 10.0)).unwrap();
        let u = r.trace.channel("u").unwrap();
        assert_eq!(u[4], -1.0);
        assert_eq!(u[5], 1.0);
        assert_eq!(u[10], 1.0);
    }

    #[test]
    fn linear_ramp() {
        let mut s = spec(2, Interpolation::PiecewiseLinear, 10.0);
        s.signals[0].hi = 10.0;
        let u = realize_input(&[0.0, 10.0], &s).unwrap().trace;
        assert_eq!(u.channel("u").unwrap()[5], 5.0);
        assert_eq!(u.channel("u").unwrap()[10], 10.0);
    }

    #[test]
    fn out_of_box_is_clamped() {
        let r = realize_input(&[3.0], &spec(1, Interpolation::PiecewiseConstant, 2.0)).unwrap();
        assert!(r.clamped);
        assert_eq!(r.trace.channel("u").unwrap()[0], 1.0);
        assert!(matches!(
            realize_input(&[0.0, 0.0], &spec(1, Interpolation::PiecewiseConstant, 2.0)),
            Err(FalsifyError::WrongArity { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn cost_terms() {
        let m = DelayModel::new(1.0, 1.0).unwrap();
        let s = spec(1, Interpolation::PiecewiseConstant, 100.0);
        let out = parse_formula("G[1,100](y > 0)").unwrap();
        // ρ_in = 0.5 so the penalty vanishes
        let e = cost(&[0.5], &parse_formula("u >= 0").unwrap(), &out, &m, &s, 1).unwrap();
        assert_eq!(e.cost, e.rho_out);
        assert_eq!(e.rho_out, 0.5);
        // ρ_in = -1, k = 1: (1 + 1)^2 - 1 = 3
        let e = cost(&[0.5], &parse_formula("u >= 1.5").unwrap(), &out, &m, &s, 1).unwrap();
        assert_eq!(e.cost - e.rho_out, 3.0);
    }

    #[test]
    fn unsatisfiable_assumption_gives_none() {
        let m = DelayModel::new(1.0, 1.0).unwrap();
        let s = spec(4, Interpolation::PiecewiseConstant, 20.0);
        let cfg = FalsifierConfig {
            budget: 200,
            ..Default::default()
        };
        let out = falsify(
            &m,
            &parse_formula("G(u > 2)").unwrap(),
            &parse_formula("G[1,20](y > 0)").unwrap(),
            &s,
            &cfg,
        )
        .unwrap();
        assert!(out.counterexample.is_none());
        assert_eq!(out.simulations, 200);
    }

    #[test]
    fn support_is_checked() {
        let m = DelayModel::new(1.0, 1.0).unwrap();
        let s = spec(1, Interpolation::PiecewiseConstant, 5.0);
        let r = falsify(
            &m,
            &parse_formula("v > 0").unwrap(),
            &parse_formula("y > 0").unwrap(),
            &s,
            &FalsifierConfig::default(),
        );
        assert!(matches!(r, Err(FalsifyError::Support(s)) if s == "v"));
    }
}
