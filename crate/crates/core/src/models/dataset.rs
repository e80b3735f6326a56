use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledTraces;
use crate::trace::TimedTrace;

use super::ModelError;

/// Two-channel traces where `y` is `x` delayed by `d` seconds. Good traces
/// draw `d` from `good_delay`, bad ones from `bad_delay` (inclusive, whole
/// samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayPairConfig {
    pub duration: f64,
    pub dt: f64,
    pub good_delay: (f64, f64),
    pub bad_delay: (f64, f64),
    /// Pulse period range in seconds.
    pub period: (f64, f64),
    /// Pulse width range in samples.
    pub width: (usize, usize),
}

impl Default for DelayPairConfig {
    fn default() -> Self {
        DelayPairConfig {
            duration: 150.0,
            dt: 1.0,
            good_delay: (1.0, 19.0),
            bad_delay: (31.0, 50.0),
            period: (60.0, 70.0),
            width: (2, 4),
        }
    }
}

/// `n_good` traces with a short delay and `n_bad` with a long one. `x` is a
/// pulse train (pulses in `[0.5, 1]`, baseline in `[0, 0.05]`) and `y` is the
/// same process shifted, so that both channels look alike at every single
/// time point.
pub fn delay_pair_dataset(
    n_good: usize,
    n_bad: usize,
    seed: u64,
    cfg: &DelayPairConfig,
) -> Result<LabeledTraces, ModelError> {
    if !(cfg.dt > 0.0 && cfg.duration > 0.0) || cfg.width.0 == 0 || cfg.width.0 > cfg.width.1 {
        return Err(ModelError::BadParameter("invalid dataset configuration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |delay: (f64, f64)| -> Result<TimedTrace, ModelError> {
        let lo = (delay.0 / cfg.dt).round() as usize;
        let hi = (delay.1 / cfg.dt).round() as usize;
        let d = rng.random_range(lo..=hi);
        pair(&mut rng, cfg, d)
    };
    let good = (0..n_good).map(|_| make(cfg.good_delay)).collect::<Result<_, _>>()?;
    let bad = (0..n_bad).map(|_| make(cfg.bad_delay)).collect::<Result<_, _>>()?;
    Ok(LabeledTraces { good, bad })
}

// Pulse process sampled on [-d, duration]; x is the part from 0 and y the
// part ending d samples earlier.
fn pair(rng: &mut ChaCha8Rng, cfg: &DelayPairConfig, d: usize) -> Result<TimedTrace, ModelError> {
    let times = TimedTrace::uniform_times(cfg.duration, cfg.dt);
    let n = times.len();
    let total = n + d;
    let period = (rng.random_range(cfg.period.0..=cfg.period.1) / cfg.dt).round().max(1.0) as usize;
    let width = rng.random_range(cfg.width.0..=cfg.width.1).min(period);
    let phase = rng.random_range(0..period);
    let ext: Vec<f64> = (0..total)
        .map(|k| {
            if (k + phase) % period < width {
                rng.random_range(0.5..=1.0)
            } else {
                rng.random_range(0.0..=0.05)
            }
        })
        .collect();
    let x = ext[d..].to_vec();
    let y = ext[..n].to_vec();
    Ok(TimedTrace::new(times, [("x".to_string(), x), ("y".to_string(), y)])?)
}
