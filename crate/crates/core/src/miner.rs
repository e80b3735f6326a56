//! Counterexample-guided assumption mining.
//!
//! Sample inputs and label them by the output requirement, then walk the
//! template enumeration. Each template is attached to parameter ranges and
//! turned into a tree classifier; if its held-out accuracy clears the gate,
//! the extracted formula is handed to the falsifier. A counterexample joins
//! the bad training traces and the same template is tried again; a clean
//! falsification run ends the search.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{classify_split, split_dataset, ClassifierConfig, ClassifierError, LabeledTraces, TreeConfig};
use crate::enumeration::{Enumerator, GrammarConfig};
use crate::extraction::extract_stl;
use crate::falsification::{falsify, ControlPointSpec, FalsifierConfig, FalsifyError, Interpolation};
use crate::formula::Formula;
use crate::models::{sample_input_traces, InputGenConfig, Model, ModelError, SignalDomain, TimeDomain};
use crate::pstl::{ParamUse, ParametricFormula};
use crate::robustness::{satisfies, MonitorError};
use crate::trace::TimedTrace;

/// Version of the serialized [`MiningReport`] layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("invalid miner configuration: {0}")]
    Config(String),
    #[error("requirement mentions `{0}`, which is not a model output")]
    Support(String),
    #[error("simulating trace {index} failed: {source}")]
    Simulation { index: usize, source: ModelError },
    #[error("labeling trace {index} failed: {source}")]
    Labeling { index: usize, source: MonitorError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Falsify(#[from] FalsifyError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    pub time: TimeDomain,
    /// Input traces sampled up front.
    pub traces: usize,
    /// Piecewise-constant segments of the sampled inputs.
    pub segments: usize,
    /// Overrides of the model's input boxes, by signal.
    pub input_box: BTreeMap<String, (f64, f64)>,
    /// Only templates with fewer nodes than this are evaluated.
    pub max_length: usize,
    /// Templates must reach test accuracy above `1 - epsilon`.
    pub epsilon: f64,
    /// Valuations per template (feature count).
    pub samples: usize,
    pub split_ratio: f64,
    pub tree: TreeConfig,
    pub grammar: GrammarConfig,
    /// Range of time parameters; defaults to the whole horizon.
    pub time_param_range: Option<(f64, f64)>,
    pub falsifier: FalsifierConfig,
    pub control_points: usize,
    pub interpolation: Interpolation,
    /// Counterexample rounds per template before moving on.
    pub max_retries: usize,
    /// Fresh batches drawn when the first labeling has a single class.
    pub resample_rounds: usize,
    pub seed: u64,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            time: TimeDomain {
                duration: 100.0,
                dt: 1.0,
            },
            traces: 200,
            segments: 5,
            input_box: BTreeMap::new(),
            max_length: 5,
            epsilon: 0.01,
            samples: 16,
            split_ratio: 0.7,
            tree: TreeConfig::default(),
            grammar: GrammarConfig::default(),
            time_param_range: None,
            falsifier: FalsifierConfig::default(),
            control_points: 5,
            interpolation: Interpolation::PiecewiseConstant,
            max_retries: 10,
            resample_rounds: 5,
            seed: 0,
        }
    }
}

impl MinerConfig {
    fn validate(&self) -> Result<(), MinerError> {
        let bad = |m: &str| Err(MinerError::Config(m.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.max_length == 0 {
            return bad("max_length must be at least 1");
        }
        if self.samples == 0 || self.traces == 0 || self.segments == 0 || self.control_points == 0 {
            return bad("samples, traces, segments and control_points must be positive");
        }
        if !(self.time.duration > 0.0 && self.time.dt > 0.0) {
            return bad("duration and dt must be positive");
        }
        if let Some((lo, hi)) = self.time_param_range {
            if !(0.0 <= lo && lo <= hi) {
                return bad("time_param_range must satisfy 0 <= lo <= hi");
            }
        }
        Ok(())
    }

    fn domains(&self, model: &dyn Model) -> Result<Vec<SignalDomain>, MinerError> {
        let names = model.input_names();
        if let Some(s) = self.input_box.keys().find(|s| !names.contains(s)) {
            return Err(MinerError::Config(format!("input_box names unknown input `{s}`")));
        }
        Ok(model
            .inputs()
            .iter()
            .map(|d| match self.input_box.get(&d.name) {
                Some(&(lo, hi)) => SignalDomain::new(d.name.clone(), lo, hi),
                None => d.clone(),
            })
            .collect())
    }
}

/// Good iff the simulated output satisfies `phi_out`.
pub fn label_traces(model: &dyn Model, traces: Vec<TimedTrace>, phi_out: &Formula) -> Result<LabeledTraces, MinerError> {
    let mut out = LabeledTraces::default();
    for (index, u) in traces.into_iter().enumerate() {
        let y = model
            .simulate(&u)
            .map_err(|source| MinerError::Simulation { index, source })?;
        if satisfies(phi_out, &y).map_err(|source| MinerError::Labeling { index, source })? {
            out.good.push(u);
        } else {
            out.bad.push(u);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationLog {
    pub simulations: usize,
    pub counterexample: bool,
}

/// One classification attempt of one template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLog {
    pub template: String,
    /// Zero for the first attempt, then one per counterexample round.
    pub attempt: usize,
    pub valuations: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub tree_size: Option<usize>,
    /// Counterexamples in the training set when this attempt ran.
    pub counterexamples: usize,
    pub formula: Option<String>,
    pub falsification: Option<FalsificationLog>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MiningOutcome {
    Assumption { formula: String, template: String, test_accuracy: f64 },
    Failure { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSizes {
    pub train_good: usize,
    pub train_bad: usize,
    pub test_good: usize,
    pub test_bad: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub schema_version: u32,
    pub result: MiningOutcome,
    pub candidates: Vec<CandidateLog>,
    pub counterexamples: usize,
    /// Simulations spent on labeling and falsification.
    pub simulations: usize,
    /// Sizes at the end of the run, including counterexamples.
    pub dataset: DatasetSizes,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub assumption: Option<Formula>,
}

impl MiningReport {
    pub fn assumption(&self) -> Option<&Formula> {
        self.assumption.as_ref()
    }
}

/// Mine an environment assumption for `model` under the output requirement
/// `phi_out`.
pub fn mine(model: &dyn Model, phi_out: &Formula, cfg: &MinerConfig) -> Result<MiningReport, MinerError> {
    let started = Instant::now();
    cfg.validate()?;
    if let Some(s) = phi_out.support().into_iter().find(|s| !model.outputs().contains(s)) {
        return Err(MinerError::Support(s));
    }
    let domains = cfg.domains(model)?;
    let mut simulations = 0usize;

    let mut data = LabeledTraces::default();
    for round in 0..=cfg.resample_rounds {
        let gen = InputGenConfig {
            segments: cfg.segments,
            signals: domains.clone(),
            time: cfg.time,
            seed: cfg.seed.wrapping_add(round as u64),
        };
        let batch = sample_input_traces(&gen, cfg.traces)?;
        simulations += batch.len();
        let labeled = label_traces(model, batch, phi_out)?;
        data.good.extend(labeled.good);
        data.bad.extend(labeled.bad);
        if !data.good.is_empty() && !data.bad.is_empty() {
            break;
        }
    }
    if data.good.is_empty() || data.bad.is_empty() {
        let reason = format!(
            "degenerate labeling: {} good and {} bad traces after {} resample rounds",
            data.good.len(),
            data.bad.len(),
            cfg.resample_rounds
        );
        return Ok(MiningReport {
            schema_version: SCHEMA_VERSION,
            result: MiningOutcome::Failure { reason },
            candidates: Vec::new(),
            counterexamples: 0,
            simulations,
            dataset: DatasetSizes {
                train_good: data.good.len(),
                train_bad: data.bad.len(),
                test_good: 0,
                test_bad: 0,
            },
            wall_time_s: started.elapsed().as_secs_f64(),
            assumption: None,
        });
    }
    let (mut train, test) = split_dataset(&data, cfg.split_ratio, cfg.seed)?;

    let class_cfg = ClassifierConfig {
        split_ratio: cfg.split_ratio,
        samples: cfg.samples,
        tree: cfg.tree,
        seed: cfg.seed,
    };
    let time_range = cfg.time_param_range.unwrap_or((0.0, cfg.time.duration));
    let boxes: BTreeMap<&str, (f64, f64)> = domains.iter().map(|d| (d.name.as_str(), (d.lo, d.hi))).collect();
    let spec = ControlPointSpec {
        points_per_signal: cfg.control_points,
        signals: domains.clone(),
        interpolation: cfg.interpolation,
        time: cfg.time,
    };
    let grammar = GrammarConfig {
        max_length: cfg.max_length - 1,
        ..cfg.grammar.clone()
    };
    let signals: Vec<String> = domains.iter().map(|d| d.name.clone()).collect();

    let mut log = Vec::new();
    let mut counterexamples = 0usize;
    let mut falsify_calls = 0u64;
    let mut result = None;

    'templates: for template in Enumerator::new(signals, grammar) {
        if template.len() >= cfg.max_length {
            break;
        }
        let psi = match ParametricFormula::new(template.clone(), |_, u| match u {
            ParamUse::Time => Some(time_range),
            ParamUse::Value { signal } => boxes.get(signal.as_str()).copied(),
        }) {
            Ok(p) => p,
            Err(e) => {
                log.push(skipped(&template.to_string(), e.to_string()));
                continue;
            }
        };
        for attempt in 0..=cfg.max_retries {
            let mut entry = CandidateLog {
                template: psi.to_string(),
                attempt,
                valuations: 0,
                train_accuracy: None,
                test_accuracy: None,
                tree_size: None,
                counterexamples,
                formula: None,
                falsification: None,
                note: None,
            };
            let c = match classify_split(&psi, &train, &test, &class_cfg) {
                Ok(c) => c,
                Err(ClassifierError::Pstl(e)) => {
                    entry.note = Some(e.to_string());
                    log.push(entry);
                    continue 'templates;
                }
                Err(e) => return Err(e.into()),
            };
            entry.valuations = c.valuations.len();
            entry.train_accuracy = Some(c.train_accuracy);
            entry.test_accuracy = Some(c.test_accuracy);
            entry.tree_size = Some(c.tree.size());
            if !(c.test_accuracy > 1.0 - cfg.epsilon) {
                log.push(entry);
                continue 'templates;
            }
            let phi_in = match extract_stl(&c.tree, &psi, &c.valuations) {
                Ok(f) => f,
                Err(e) => {
                    entry.note = Some(e.to_string());
                    log.push(entry);
                    continue 'templates;
                }
            };
            entry.formula = Some(phi_in.to_string());
            let fcfg = FalsifierConfig {
                seed: cfg.falsifier.seed.wrapping_add(cfg.seed).wrapping_add(falsify_calls),
                ..cfg.falsifier.clone()
            };
            falsify_calls += 1;
            let outcome = falsify(model, &phi_in, phi_out, &spec, &fcfg)?;
            simulations += outcome.simulations;
            entry.falsification = Some(FalsificationLog {
                simulations: outcome.simulations,
                counterexample: outcome.counterexample.is_some(),
            });
            log.push(entry);
            match outcome.counterexample {
                None => {
                    result = Some((phi_in, psi.to_string(), c.test_accuracy));
                    break 'templates;
                }
                Some(cex) => {
                    // the falsifier already monitored both sides; check again
                    // before the trace becomes training data
                    let y = model.simulate(&cex.input)?;
                    if satisfies(&phi_in, &cex.input)? && !satisfies(phi_out, &y)? {
                        train.bad.push(cex.input);
                        counterexamples += 1;
                    }
                }
            }
        }
    }

    let dataset = DatasetSizes {
        train_good: train.good.len(),
        train_bad: train.bad.len(),
        test_good: test.good.len(),
        test_bad: test.bad.len(),
    };
    let (outcome, assumption) = match result {
        Some((f, template, test_accuracy)) => (
            MiningOutcome::Assumption {
                formula: f.to_string(),
                template,
                test_accuracy,
            },
            Some(f),
        ),
        None => (
            MiningOutcome::Failure {
                reason: format!(
                    "no template shorter than {} nodes passed the accuracy gate and falsification",
                    cfg.max_length
                ),
            },
            None,
        ),
    };
    Ok(MiningReport {
        schema_version: SCHEMA_VERSION,
        result: outcome,
        candidates: log,
        counterexamples,
        simulations,
        dataset,
        wall_time_s: started.elapsed().as_secs_f64(),
        assumption,
    })
}

fn skipped(template: &str, note: String) -> CandidateLog {
    CandidateLog {
        template: template.to_string(),
        attempt: 0,
        valuations: 0,
        train_accuracy: None,
        test_accuracy: None,
        tree_size: None,
        counterexamples: 0,
        formula: None,
        falsification: None,
        note: Some(note),
    }
}
