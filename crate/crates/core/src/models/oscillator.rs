use std::f64::consts::PI;

use crate::trace::{TimedTrace, TIME_EPS};

use super::{Model, ModelError, SignalDomain};

/// Sinusoid whose amplitude jumps from `low_amplitude` to `high_amplitude`
/// once `u2 < 0` occurs within `look_back` seconds after some `u1 < 0`. The
/// switch is permanent.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorModel {
    pub frequency: f64,
    pub look_back: f64,
    pub low_amplitude: f64,
    pub high_amplitude: f64,
    inputs: Vec<SignalDomain>,
    outputs: Vec<String>,
}

impl Default for OscillatorModel {
    fn default() -> Self {
        OscillatorModel {
            frequency: 0.5,
            look_back: 3.0,
            low_amplitude: 1.0,
            high_amplitude: 5.0,
            inputs: vec![SignalDomain::new("u1", -1.0, 3.0), SignalDomain::new("u2", -1.0, 3.0)],
            outputs: vec!["y".to_string()],
        }
    }
}

impl OscillatorModel {
    /// Input box shared by `u1` and `u2`.
    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(lo <= hi) {
            return Err(ModelError::BadParameter(format!("empty input box [{lo}, {hi}]")));
        }
        for d in &mut self.inputs {
            d.lo = lo;
            d.hi = hi;
        }
        Ok(self)
    }

    /// Per-sample state of the amplitude switch.
    pub fn flag(&self, input: &TimedTrace) -> Result<Vec<bool>, ModelError> {
        let u1 = input
            .channel("u1")
            .ok_or_else(|| ModelError::MissingInput("u1".into()))?;
        let u2 = input
            .channel("u2")
            .ok_or_else(|| ModelError::MissingInput("u2".into()))?;
        let mut last_u1_negative: Option<f64> = None;
        let mut on = false;
        Ok(input
            .times()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                if u1[i] < 0.0 {
                    last_u1_negative = Some(t);
                }
                if u2[i] < 0.0 && last_u1_negative.is_some_and(|t1| t - t1 <= self.look_back + TIME_EPS) {
                    on = true;
                }
                on
            })
            .collect())
    }
}

impl Model for OscillatorModel {
    fn name(&self) -> &str {
        "oscillator"
    }

    fn inputs(&self) -> &[SignalDomain] {
        &self.inputs
    }

    fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn simulate(&self, input: &TimedTrace) -> Result<TimedTrace, ModelError> {
        let flag = self.flag(input)?;
        let y = input
            .times()
            .iter()
            .zip(&flag)
            .map(|(&t, &on)| {
                let a = if on { self.high_amplitude } else { self.low_amplitude };
                a * (2.0 * PI * self.frequency * t).sin()
            })
            .collect();
        Ok(TimedTrace::new(input.times().to_vec(), [("y".to_string(), y)])?)
    }
}
