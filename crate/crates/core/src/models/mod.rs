//! Black-box components and randomized input generation.

mod dataset;
mod delay;
mod oscillator;
mod subprocess;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{TimedTrace, TraceError};

pub use dataset::{delay_pair_dataset, DelayPairConfig};
pub use delay::DelayModel;
pub use oscillator::OscillatorModel;
pub use subprocess::SubprocessModel;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input trace lacks signal `{0}`")]
    MissingInput(String),
    #[error("delay {delay} exceeds the trace duration {duration}")]
    DelayTooLong { delay: f64, duration: f64 },
    #[error("delay {0} is not a multiple of the sample period")]
    DelayNotOnGrid(f64),
    #[error("invalid model parameter: {0}")]
    BadParameter(String),
    #[error("external model failed: {0}")]
    Subprocess(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Name and admissible value box of one input signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDomain {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl SignalDomain {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        SignalDomain {
            name: name.into(),
            lo,
            hi,
        }
    }
}

/// Sample grid `0, dt, 2dt, ..., duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    pub duration: f64,
    pub dt: f64,
}

impl TimeDomain {
    pub fn times(&self) -> Vec<f64> {
        TimedTrace::uniform_times(self.duration, self.dt)
    }
}

/// A deterministic map from input traces to output traces on the same time
/// stamps.
pub trait Model {
    fn name(&self) -> &str;
    fn inputs(&self) -> &[SignalDomain];
    fn outputs(&self) -> &[String];
    fn simulate(&self, input: &TimedTrace) -> Result<TimedTrace, ModelError>;

    fn input_names(&self) -> Vec<String> {
        self.inputs().iter().map(|d| d.name.clone()).collect()
    }
}

/// Selection of a bundled or external model by name, as written in config
/// files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Delay {
        #[serde(default = "one")]
        delay: f64,
        #[serde(default = "one")]
        default: f64,
        #[serde(default = "unit_box")]
        range: (f64, f64),
    },
    Oscillator,
    Subprocess {
        command: Vec<String>,
        inputs: Vec<SignalDomain>,
        outputs: Vec<String>,
    },
}

fn one() -> f64 {
    1.0
}

fn unit_box() -> (f64, f64) {
    (-1.0, 1.0)
}

impl ModelConfig {
    pub fn build(&self) -> Result<Box<dyn Model>, ModelError> {
        Ok(match self {
            ModelConfig::Delay {
                delay,
                default,
                range,
            } => Box::new(DelayModel::new(*delay, *default)?.with_range(range.0, range.1)?),
            ModelConfig::Oscillator => Box::new(OscillatorModel::default()),
            ModelConfig::Subprocess {
                command,
                inputs,
                outputs,
            } => Box::new(SubprocessModel::new(command.clone(), inputs.clone(), outputs.clone())?),
        })
    }
}

/// Piecewise-constant random inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputGenConfig {
    pub segments: usize,
    pub signals: Vec<SignalDomain>,
    pub time: TimeDomain,
    pub seed: u64,
}

/// Index of the equal-length segment (out of `k` over `[0, duration]`) that
/// contains `t`; the right endpoint belongs to the last segment.
pub(crate) fn segment_of(t: f64, duration: f64, k: usize) -> usize {
    let seg = duration / k as f64;
    ((t / seg + 1e-9).floor() as usize).min(k - 1)
}

/// `n` traces, each constant on `segments` equal-length pieces with values
/// uniform in the per-signal box.
pub fn sample_input_traces(cfg: &InputGenConfig, n: usize) -> Result<Vec<TimedTrace>, ModelError> {
    if cfg.segments == 0 {
        return Err(ModelError::BadParameter("segments must be at least 1".into()));
    }
    if !(cfg.time.duration > 0.0) || !(cfg.time.dt > 0.0) {
        return Err(ModelError::BadParameter("duration and dt must be positive".into()));
    }
    if let Some(d) = cfg.signals.iter().find(|d| !(d.lo <= d.hi)) {
        return Err(ModelError::BadParameter(format!("empty box for `{}`", d.name)));
    }
    let times = cfg.time.times();
    let seg: Vec<usize> = times
        .iter()
        .map(|&t| segment_of(t, cfg.time.duration, cfg.segments))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..n)
        .map(|_| {
            let channels = cfg.signals.iter().map(|d| {
                let levels: Vec<f64> = (0..cfg.segments).map(|_| uniform(&mut rng, d.lo, d.hi)).collect();
                (d.name.clone(), seg.iter().map(|&s| levels[s]).collect())
            });
            let channels: Vec<(String, Vec<f64>)> = channels.collect();
            Ok(TimedTrace::new(times.clone(), channels)?)
        })
        .collect()
}

pub(crate) fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(segments: usize, lo: f64, hi: f64) -> InputGenConfig {
        InputGenConfig {
            segments,
            signals: vec![SignalDomain::new("u", lo, hi)],
            time: TimeDomain {
                duration: 10.0,
                dt: 0.5,
            },
            seed: 3,
        }
    }

    #[test]
    fn degenerate_box_gives_constant() {
        let tr = sample_input_traces(&cfg(1, 2.0, 2.0), 1).unwrap();
        assert!(tr[0].channel("u").unwrap().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn seeded_batches_repeat() {
        let a = sample_input_traces(&cfg(4, -1.0, 1.0), 5).unwrap();
        let b = sample_input_traces(&cfg(4, -1.0, 1.0), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn segments_are_constant() {
        let tr = &sample_input_traces(&cfg(4, -1.0, 1.0), 1).unwrap()[0];
        let u = tr.channel("u").unwrap();
        // segment boundaries at 2.5, 5, 7.5
        assert!(u[0..5].iter().all(|&v| v == u[0]));
        assert!(u[5..10].iter().all(|&v| v == u[5]));
        assert!(u[15..].iter().all(|&v| v == u[15]));
        assert!(u.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn config_parses_by_name() {
        let c: ModelConfig = serde_json::from_str(r#"{"kind":"delay","delay":2.0}"#).unwrap();
        assert_eq!(
            c,
            ModelConfig::Delay {
                delay: 2.0,
                default: 1.0,
                range: (-1.0, 1.0)
            }
        );
        assert_eq!(c.build().unwrap().name(), "delay");
    }
}
