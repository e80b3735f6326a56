//! Supervised STL classification: robustness features over grid-sampled
//! valuations of a template, fed to a decision tree.

mod features;
mod tree;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pstl::{ParametricFormula, PstlError, Valuation};
use crate::robustness::MonitorError;
use crate::trace::TimedTrace;

pub use tree::{train_tree, DecisionTree, TreeConfig};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("feature matrix has no rows")]
    EmptyMatrix,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature rows have different widths")]
    Ragged,
    #[error("accuracy of an empty label set is undefined")]
    EmptyLabels,
    #[error("training data holds a single class ({good} good, {bad} bad)")]
    SingleClass { good: usize, bad: usize },
    #[error("held-out test set is empty")]
    EmptyTestSet,
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error(transparent)]
    Pstl(#[from] PstlError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Traces whose outputs satisfied (`good`, label 1) or violated (`bad`,
/// label 0) the requirement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledTraces {
    pub good: Vec<TimedTrace>,
    pub bad: Vec<TimedTrace>,
}

impl LabeledTraces {
    pub fn len(&self) -> usize {
        self.good.len() + self.bad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Traces followed by their labels, good first.
    pub fn flatten(&self) -> (Vec<&TimedTrace>, Vec<u8>) {
        let traces: Vec<&TimedTrace> = self.good.iter().chain(&self.bad).collect();
        let labels = std::iter::repeat_n(1u8, self.good.len())
            .chain(std::iter::repeat_n(0u8, self.bad.len()))
            .collect();
        (traces, labels)
    }
}

/// Stratified shuffle split: each nonempty class sends
/// `max(1, floor(ratio * n))` traces to training and the rest to test.
pub fn split_dataset(
    data: &LabeledTraces,
    ratio: f64,
    seed: u64,
) -> Result<(LabeledTraces, LabeledTraces), ClassifierError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ClassifierError::BadRatio(ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = |class: &[TimedTrace]| -> (Vec<TimedTrace>, Vec<TimedTrace>) {
        let n = class.len();
        if n == 0 {
            return (Vec::new(), Vec::new());
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let n_train = ((ratio * n as f64 + 1e-9).floor() as usize).clamp(1, n);
        let train = order[..n_train].iter().map(|&i| class[i].clone()).collect();
        let test = order[n_train..].iter().map(|&i| class[i].clone()).collect();
        (train, test)
    };
    let (good_train, good_test) = part(&data.good);
    let (bad_train, bad_test) = part(&data.bad);
    Ok((
        LabeledTraces {
            good: good_train,
            bad: bad_train,
        },
        LabeledTraces {
            good: good_test,
            bad: bad_test,
        },
    ))
}

/// Robustness of each trace under each instantiated valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub valuations: Vec<Valuation>,
}

impl FeatureMatrix {
    /// CSV with one column per valuation (header `feature_i[name=value;..]`)
    /// followed by the label.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = self
            .valuations
            .iter()
            .enumerate()
            .map(|(i, v)| format!("\"f{i}[{v}]\""))
            .chain(std::iter::once("label".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{},{label}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Entry `(r, i)` is `ρ(psi(valuations[i]), traces[r], 0)`.
pub fn compute_features(
    traces: &[&TimedTrace],
    labels: &[u8],
    psi: &ParametricFormula,
    valuations: &[Valuation],
) -> Result<FeatureMatrix, ClassifierError> {
    // instantiation validates every valuation before the batch evaluator
    // relies on it
    for nu in valuations {
        psi.instantiate(nu)?;
    }
    let plan = features::Plan::new(psi.template());
    let rows = traces
        .iter()
        .map(|tr| plan.robustness_at_zero(tr, valuations))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureMatrix {
        rows,
        labels: labels.to_vec(),
        valuations: valuations.to_vec(),
    })
}

pub fn predict(tree: &DecisionTree, row: &[f64]) -> u8 {
    tree.predict(row)
}

/// Fraction of positions where the labels agree.
pub fn accuracy(truth: &[u8], predicted: &[u8]) -> Result<f64, ClassifierError> {
    if truth.len() != predicted.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: truth.len(),
            labels: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(ClassifierError::EmptyLabels);
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Fraction of each class used for training.
    pub split_ratio: f64,
    /// Number of grid-sampled valuations (feature columns).
    pub samples: usize,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            split_ratio: 0.7,
            samples: 8,
            tree: TreeConfig::default(),
            seed: 0,
        }
    }
}

/// Result of one template's classification run.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub tree: DecisionTree,
    pub valuations: Vec<Valuation>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
}

/// Train on `train` and score on `test` for a fixed template.
pub fn classify_split(
    psi: &ParametricFormula,
    train: &LabeledTraces,
    test: &LabeledTraces,
    config: &ClassifierConfig,
) -> Result<Classification, ClassifierError> {
    if train.good.is_empty() || train.bad.is_empty() {
        return Err(ClassifierError::SingleClass {
            good: train.good.len(),
            bad: train.bad.len(),
        });
    }
    if test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let valuations = psi.space().grid_sample(config.samples)?;
    let (tr, tr_labels) = train.flatten();
    let train_fm = compute_features(&tr, &tr_labels, psi, &valuations)?;
    let tree = train_tree(&train_fm.rows, &train_fm.labels, &config.tree)?;
    let (te, te_labels) = test.flatten();
    let test_fm = compute_features(&te, &te_labels, psi, &valuations)?;
    let score = |fm: &FeatureMatrix| {
        let pred: Vec<u8> = fm.rows.iter().map(|r| tree.predict(r)).collect();
        accuracy(&fm.labels, &pred)
    };
    Ok(Classification {
        train_accuracy: score(&train_fm)?,
        test_accuracy: score(&test_fm)?,
        tree,
        valuations,
        train: train_fm,
        test: test_fm,
    })
}

/// Split, sample valuations, compute features, train, and score on the
/// held-out part.
pub fn dt_based_stl_classifier(
    psi: &ParametricFormula,
    data: &LabeledTraces,
    config: &ClassifierConfig,
) -> Result<Classification, ClassifierError> {
    if data.good.is_empty() || data.bad.is_empty() {
        return Err(ClassifierError::SingleClass {
            good: data.good.len(),
            bad: data.bad.len(),
        });
    }
    let (train, test) = split_dataset(data, config.split_ratio, config.seed)?;
    classify_split(psi, &train, &test, config)
}

/// Raw sample values of every channel, channel by channel. All traces must
/// share length and channel names.
pub fn timepoint_features(trace: &TimedTrace) -> Vec<f64> {
    trace.channels().values().flatten().copied().collect()
}

/// Test accuracy of a tree trained directly on raw sample values, ignoring
/// temporal structure.
pub fn naive_timepoint_baseline(
    train: &LabeledTraces,
    test: &LabeledTraces,
    tree: &TreeConfig,
) -> Result<f64, ClassifierError> {
    let rows = |d: &LabeledTraces| -> (Vec<Vec<f64>>, Vec<u8>) {
        let (traces, labels) = d.flatten();
        (traces.into_iter().map(timepoint_features).collect(), labels)
    };
    let (tr_rows, tr_labels) = rows(train);
    let model = train_tree(&tr_rows, &tr_labels, tree)?;
    let (te_rows, te_labels) = rows(test);
    if te_rows.iter().any(|r| r.len() != tr_rows[0].len()) {
        return Err(ClassifierError::Ragged);
    }
    let pred: Vec<u8> = te_rows.iter().map(|r| model.predict(r)).collect();
    accuracy(&te_labels, &pred)
}
