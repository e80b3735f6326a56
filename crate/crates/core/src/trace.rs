//! Discrete timed traces and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

/// Tolerance used when matching a requested time against sample stamps.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("trace has no channels")]
    NoChannels,
    #[error("first time stamp must be 0, got {0}")]
    NonZeroStart(f64),
    #[error("time stamps must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite time stamp at index {0}")]
    NonFiniteTime(usize),
    #[error("channel `{name}` has {got} values, expected {expected}")]
    LengthMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate channel `{0}`")]
    DuplicateChannel(String),
    #[error("csv header must start with `time`")]
    BadHeader,
    #[error("csv row {row}: {msg}")]
    BadRow { row: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A multi-channel signal sampled at strictly increasing time stamps starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrace {
    times: Vec<f64>,
    channels: BTreeMap<String, Vec<f64>>,
}

impl TimedTrace {
    pub fn new(
        times: Vec<f64>,
        channels: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self, TraceError> {
        if times.is_empty() {
            return Err(TraceError::Empty);
        }
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(TraceError::NonFiniteTime(i));
            }
        }
        if times[0] != 0.0 {
            return Err(TraceError::NonZeroStart(times[0]));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(TraceError::NotIncreasing(i + 1));
        }
        let mut map = BTreeMap::new();
        for (name, values) in channels {
            if values.len() != times.len() {
                return Err(TraceError::LengthMismatch {
                    name,
                    got: values.len(),
                    expected: times.len(),
                });
            }
            if map.contains_key(&name) {
                return Err(TraceError::DuplicateChannel(name));
            }
            map.insert(name, values);
        }
        if map.is_empty() {
            return Err(TraceError::NoChannels);
        }
        Ok(Self {
            times,
            channels: map,
        })
    }

    /// Regular time grid `0, dt, 2dt, ...` covering `[0, duration]`.
    pub fn uniform_times(duration: f64, dt: f64) -> Vec<f64> {
        let n = (duration / dt + TIME_EPS).floor() as usize;
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn channels(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.channels
    }

    /// Index of the sample whose stamp equals `t` (within [`TIME_EPS`]).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - TIME_EPS);
        (i < self.times.len() && (self.times[i] - t).abs() <= TIME_EPS).then_some(i)
    }

    /// New trace on the same time stamps holding only the named channels.
    pub fn project(&self, names: &[&str]) -> Option<TimedTrace> {
        let channels = names
            .iter()
            .map(|n| Some((n.to_string(), self.channels.get(*n)?.clone())))
            .collect::<Option<Vec<_>>>()?;
        TimedTrace::new(self.times.clone(), channels).ok()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, TraceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("time") {
            return Err(TraceError::BadHeader);
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut cols = vec![Vec::new(); names.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() + 1 {
                return Err(TraceError::BadRow {
                    row: row + 1,
                    msg: format!("expected {} fields, got {}", names.len() + 1, rec.len()),
                });
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| TraceError::BadRow {
                    row: row + 1,
                    msg: format!("cannot parse `{field}` as a real"),
                })?;
                if j == 0 {
                    times.push(v);
                } else {
                    cols[j - 1].push(v);
                }
            }
        }
        TimedTrace::new(times, names.into_iter().zip(cols))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TraceError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.channels.keys().cloned());
        wtr.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.channels.values().map(|c| c[i].to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(name: &str, v: &[f64]) -> (String, Vec<f64>) {
        (name.to_string(), v.to_vec())
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            TimedTrace::new(vec![], [ch("x", &[])]),
            Err(TraceError::Empty)
        ));
        assert!(matches!(
            TimedTrace::new(vec![0.0], Vec::<(String, Vec<f64>)>::new()),
            Err(TraceError::NoChannels)
        ));
        assert!(matches!(
            TimedTrace::new(vec![0.5, 1.0], [ch("x", &[1.0, 2.0])]),
            Err(TraceError::NonZeroStart(_))
        ));
        assert!(matches!(
            TimedTrace::new(vec![0.0, 1.0, 1.0], [ch("x", &[1.0, 2.0, 3.0])]),
            Err(TraceError::NotIncreasing(2))
        ));
        assert!(matches!(
            TimedTrace::new(vec![0.0, 1.0], [ch("x", &[1.0])]),
            Err(TraceError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let tr = TimedTrace::new(
            vec![0.0, 0.1, 0.25],
            [ch("y", &[1.5, -2.0, 3.0]), ch("x", &[0.0, 1e-7, -4.25])],
        )
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,x,y\n"));
        assert_eq!(TimedTrace::read_csv(buf.as_slice()).unwrap(), tr);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            TimedTrace::read_csv("t,x\n0,1\n".as_bytes()),
            Err(TraceError::BadHeader)
        ));
        assert!(matches!(
            TimedTrace::read_csv("time\n0\n1\n".as_bytes()),
            Err(TraceError::NoChannels)
        ));
        assert!(matches!(
            TimedTrace::read_csv("time,x\n0,abc\n".as_bytes()),
            Err(TraceError::BadRow { row: 1, .. })
        ));
    }

    #[test]
    fn index_lookup_tolerates_rounding() {
        let times = TimedTrace::uniform_times(1.0, 0.1);
        assert_eq!(times.len(), 11);
        let tr = TimedTrace::new(times, [ch("x", &[0.0; 11])]).unwrap();
        assert_eq!(tr.index_of(0.3), Some(3));
        assert_eq!(tr.index_of(0.35), None);
        assert_eq!(tr.index_of(1.0), Some(10));
    }
}
