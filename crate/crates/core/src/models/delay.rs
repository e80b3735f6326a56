use crate::trace::{TimedTrace, TIME_EPS};

use super::{Model, ModelError, SignalDomain};

/// `y(t) = u(t - d)` for `t >= d`, and a fixed default before that.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    delay: f64,
    default: f64,
    inputs: Vec<SignalDomain>,
    outputs: Vec<String>,
}

impl DelayModel {
    /// Input `u` with box `[-1, 1]`, output `y`.
    pub fn new(delay: f64, default: f64) -> Result<Self, ModelError> {
        if !(delay >= 0.0) || !delay.is_finite() || !default.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "delay {delay} and default {default} must be finite, delay nonnegative"
            )));
        }
        Ok(DelayModel {
            delay,
            default,
            inputs: vec![SignalDomain::new("u", -1.0, 1.0)],
            outputs: vec!["y".to_string()],
        })
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(lo <= hi) {
            return Err(ModelError::BadParameter(format!("empty input box [{lo}, {hi}]")));
        }
        self.inputs[0] = SignalDomain::new("u", lo, hi);
        Ok(self)
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }
}

impl Model for DelayModel {
    fn name(&self) -> &str {
        "delay"
    }

    fn inputs(&self) -> &[SignalDomain] {
        &self.inputs
    }

    fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn simulate(&self, input: &TimedTrace) -> Result<TimedTrace, ModelError> {
        let u = input
            .channel("u")
            .ok_or_else(|| ModelError::MissingInput("u".into()))?;
        if self.delay > input.duration() + TIME_EPS {
            return Err(ModelError::DelayTooLong {
                delay: self.delay,
                duration: input.duration(),
            });
        }
        let y = input
            .times()
            .iter()
            .map(|&t| {
                if t < self.delay - TIME_EPS {
                    Ok(self.default)
                } else {
                    input
                        .index_of(t - self.delay)
                        .map(|j| u[j])
                        .ok_or(ModelError::DelayNotOnGrid(self.delay))
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(TimedTrace::new(input.times().to_vec(), [("y".to_string(), y)])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{parse_formula, satisfies};

    fn u(values: Vec<f64>) -> TimedTrace {
        let times = (0..values.len()).map(|i| i as f64).collect();
        TimedTrace::new(times, [("u".to_string(), values)]).unwrap()
    }

    #[test]
    fn constant_input_is_delayed() {
        let m = DelayModel::new(1.0, 1.0).unwrap();
        let y = m.simulate(&u(vec![2.0; 101])).unwrap();
        assert!(y.channel("y").unwrap().iter().all(|&v| v == 2.0 || v == 1.0));
        assert!(satisfies(&parse_formula("G[1,100](y > 0)").unwrap(), &y).unwrap());
    }

    #[test]
    fn zero_delay_is_identity() {
        let m = DelayModel::new(0.0, 7.0).unwrap();
        let x = u(vec![3.0, -1.0, 4.0]);
        assert_eq!(m.simulate(&x).unwrap().channel("y").unwrap(), &[3.0, -1.0, 4.0]);
    }

    #[test]
    fn negative_start_propagates() {
        let m = DelayModel::new(1.0, 1.0).unwrap();
        let mut v = vec![2.0; 101];
        v[0] = -1.0;
        let y = m.simulate(&u(v)).unwrap();
        assert_eq!(y.channel("y").unwrap()[1], -1.0);
        assert!(!satisfies(&parse_formula("G[1,100](y > 0)").unwrap(), &y).unwrap());
    }

    #[test]
    fn shift_of_input_shifts_output() {
        let m = DelayModel::new(2.0, 0.0).unwrap();
        let a: Vec<f64> = (0..20).map(|i| if (4..8).contains(&i) { 1.0 } else { -1.0 }).collect();
        let mut b = vec![a[0]];
        b.extend_from_slice(&a[..19]);
        let ya = m.simulate(&u(a)).unwrap();
        let yb = m.simulate(&u(b)).unwrap();
        let (ya, yb) = (ya.channel("y").unwrap(), yb.channel("y").unwrap());
        for t in 2..19 {
            assert_eq!(yb[t + 1], ya[t]);
        }
    }

    #[test]
    fn errors() {
        let m = DelayModel::new(5.0, 0.0).unwrap();
        assert!(matches!(m.simulate(&u(vec![0.0; 3])), Err(ModelError::DelayTooLong { .. })));
        let m = DelayModel::new(0.5, 0.0).unwrap();
        assert!(matches!(m.simulate(&u(vec![0.0; 3])), Err(ModelError::DelayNotOnGrid(_))));
        assert!(DelayModel::new(-1.0, 0.0).is_err());
    }
}
