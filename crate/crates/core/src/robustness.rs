//! Discrete-time quantitative semantics.
//!
//! Robustness is computed bottom-up as one signal per subformula over all
//! sample points. `G`/`F` windows are contiguous index ranges whose bounds
//! move monotonically with the evaluation point, so they are evaluated with a
//! monotone-deque sliding extremum in linear time.

use std::collections::VecDeque;

use thiserror::Error;

use crate::formula::{Atom, Cmp, Expr, Formula, Interval};
use crate::trace::TimedTrace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("time {0} is not a sample point of the trace")]
    NotASample(f64),
}

/// Robustness of an atom at one sample value.
#[inline]
pub fn atom_robustness(cmp: Cmp, value: f64, threshold: f64) -> f64 {
    if cmp.is_lower_bound() {
        value - threshold
    } else {
        threshold - value
    }
}

/// `ρ(phi, x, t)`; `t` must be one of the trace's time stamps.
pub fn robustness(phi: &Formula, x: &TimedTrace, t: f64) -> Result<f64, MonitorError> {
    let i = x.index_of(t).ok_or(MonitorError::NotASample(t))?;
    Ok(robustness_signal(phi, x)?[i])
}

/// `ρ(phi, x, 0) >= 0`. A robustness of exactly zero counts as satisfaction.
pub fn satisfies(phi: &Formula, x: &TimedTrace) -> Result<bool, MonitorError> {
    Ok(robustness(phi, x, 0.0)? >= 0.0)
}

/// Robustness at every sample point.
pub fn robustness_signal(phi: &Formula, x: &TimedTrace) -> Result<Vec<f64>, MonitorError> {
    let times = x.times();
    Ok(match phi {
        Expr::True => vec![f64::INFINITY; times.len()],
        Expr::Atom(Atom { signal, cmp, value }) => {
            let ch = x
                .channel(signal)
                .ok_or_else(|| MonitorError::UnknownSignal(signal.clone()))?;
            ch.iter().map(|&v| atom_robustness(*cmp, v, *value)).collect()
        }
        Expr::Not(a) => {
            let mut r = robustness_signal(a, x)?;
            r.iter_mut().for_each(|v| *v = -*v);
            r
        }
        Expr::And(a, b) => zip_with(robustness_signal(a, x)?, &robustness_signal(b, x)?, f64::min),
        Expr::Or(a, b) => zip_with(robustness_signal(a, x)?, &robustness_signal(b, x)?, f64::max),
        Expr::Implies(a, b) => zip_with(robustness_signal(a, x)?, &robustness_signal(b, x)?, |p, q| {
            f64::max(-p, q)
        }),
        Expr::Globally(iv, a) => {
            sliding_extremum(&robustness_signal(a, x)?, &windows(times, iv), Extremum::Min)
        }
        Expr::Eventually(iv, a) => {
            sliding_extremum(&robustness_signal(a, x)?, &windows(times, iv), Extremum::Max)
        }
        Expr::Until(iv, a, b) => until(
            &robustness_signal(a, x)?,
            &robustness_signal(b, x)?,
            &windows(times, iv),
        ),
    })
}

fn zip_with(mut a: Vec<f64>, b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter_mut().zip(b).for_each(|(p, &q)| *p = f(*p, q));
    a
}

/// For every sample `i`, the half-open index range `[start, end)` of samples
/// `j` with `t_j - t_i` in the interval (empty when `start >= end`).
pub fn windows(times: &[f64], iv: &Interval) -> Vec<(usize, usize)> {
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let (mut start, mut end) = (0usize, 0usize);
    for i in 0..n {
        start = start.max(i);
        while start < n && !lo_ok(iv, times[start] - times[i]) {
            start += 1;
        }
        end = end.max(start);
        while end < n && iv.contains_offset(times[end] - times[i]) {
            end += 1;
        }
        out.push((start, end.max(start)));
    }
    out
}

fn lo_ok(iv: &Interval, d: f64) -> bool {
    use crate::trace::TIME_EPS;
    if iv.lo_closed {
        d >= iv.lo - TIME_EPS
    } else {
        d > iv.lo + TIME_EPS
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Extremum {
    Min,
    Max,
}

/// Windowed min or max for monotone windows; empty windows give the lattice
/// identity (`+inf` for min, `-inf` for max).
pub(crate) fn sliding_extremum(values: &[f64], wins: &[(usize, usize)], kind: Extremum) -> Vec<f64> {
    let better = |a: f64, b: f64| match kind {
        Extremum::Min => a <= b,
        Extremum::Max => a >= b,
    };
    let empty = match kind {
        Extremum::Min => f64::INFINITY,
        Extremum::Max => f64::NEG_INFINITY,
    };
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut pushed = 0usize;
    wins.iter()
        .map(|&(s, e)| {
            if s >= e {
                return empty;
            }
            while pushed < e {
                while dq.back().is_some_and(|&j| better(values[pushed], values[j])) {
                    dq.pop_back();
                }
                dq.push_back(pushed);
                pushed += 1;
            }
            while dq.front().is_some_and(|&j| j < s) {
                dq.pop_front();
            }
            dq.front().map_or(empty, |&j| values[j])
        })
        .collect()
}

// sup over t' in window of min(ρ(b, t'), inf over [t, t') of ρ(a, ·))
pub(crate) fn until(lhs: &[f64], rhs: &[f64], wins: &[(usize, usize)]) -> Vec<f64> {
    wins.iter()
        .enumerate()
        .map(|(i, &(s, e))| {
            let mut best = f64::NEG_INFINITY;
            let mut prefix = f64::INFINITY;
            for j in i..e {
                if j >= s {
                    best = best.max(rhs[j].min(prefix));
                }
                prefix = prefix.min(lhs[j]);
            }
            best
        })
        .collect()
}
