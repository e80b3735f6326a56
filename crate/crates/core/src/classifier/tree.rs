//! Binary CART decision tree with Gini impurity.

use serde::{Deserialize, Serialize};

use super::ClassifierError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// `None` grows until purity or `min_leaf` stops it.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub min_impurity_decrease: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: Some(4),
            min_leaf: 1,
            min_impurity_decrease: 1e-6,
        }
    }
}

/// Rows with `feature < threshold` go left, the rest go right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionTree {
    Leaf {
        label: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<DecisionTree>,
        right: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> u8 {
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf { label } => return *label,
                DecisionTree::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 1,
            DecisionTree::Split { left, right, .. } => 1 + left.size() + right.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Feature indices used by split nodes, in pre-order.
    pub fn features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        fn go(t: &DecisionTree, out: &mut Vec<usize>) {
            if let DecisionTree::Split {
                feature, left, right, ..
            } = t
            {
                out.push(*feature);
                go(left, out);
                go(right, out);
            }
        }
        go(self, &mut out);
        out
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

fn majority(pos: usize, n: usize) -> u8 {
    // ties go to label 0
    u8::from(2 * pos > n)
}

/// A threshold `c` with `a < c <= b` for consecutive distinct values `a < b`.
fn split_point(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => {
            let mid = a + (b - a) / 2.0;
            if a < mid && mid <= b {
                mid
            } else {
                b
            }
        }
        (false, true) => b - 1.0,
        (true, false) => a + 1.0,
        (false, false) => 0.0,
    }
}

/// Gains closer than this count as equal.
const GAIN_TIE: f64 = 1e-12;

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
    gap: f64,
}

/// Fit a tree on `rows` (all the same width) with binary `labels`.
pub fn train_tree(
    rows: &[Vec<f64>],
    labels: &[u8],
    config: &TreeConfig,
) -> Result<DecisionTree, ClassifierError> {
    if rows.is_empty() {
        return Err(ClassifierError::EmptyMatrix);
    }
    if rows.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(ClassifierError::Ragged);
    }
    let idx: Vec<usize> = (0..rows.len()).collect();
    Ok(grow(rows, labels, idx, 0, config))
}

fn grow(rows: &[Vec<f64>], labels: &[u8], idx: Vec<usize>, depth: usize, cfg: &TreeConfig) -> DecisionTree {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
    let leaf = DecisionTree::Leaf {
        label: majority(pos, n),
    };
    let min_leaf = cfg.min_leaf.max(1);
    if pos == 0 || pos == n || cfg.max_depth.is_some_and(|d| depth >= d) || n < 2 * min_leaf {
        return leaf;
    }
    let Some(best) = best_split(rows, labels, &idx, pos, min_leaf) else {
        return leaf;
    };
    if !(best.gain >= cfg.min_impurity_decrease) || best.gain <= 0.0 {
        return leaf;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| rows[i][best.feature] < best.threshold);
    DecisionTree::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(rows, labels, l, depth + 1, cfg)),
        right: Box::new(grow(rows, labels, r, depth + 1, cfg)),
    }
}

// Exhaustive search over features and midpoints. Equal gains prefer the
// wider gap between the values on either side of the threshold, then the
// lower feature index, then the lower threshold.
fn best_split(rows: &[Vec<f64>], labels: &[u8], idx: &[usize], pos: usize, min_leaf: usize) -> Option<Best> {
    let n = idx.len();
    let parent = gini(pos, n);
    let width = rows[idx[0]].len();
    let mut best: Option<Best> = None;
    let mut order: Vec<(f64, u8)> = Vec::with_capacity(n);
    for f in 0..width {
        order.clear();
        order.extend(idx.iter().map(|&i| (rows[i][f], labels[i])));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0usize;
        for k in 1..n {
            left_pos += usize::from(order[k - 1].1);
            let (a, b) = (order[k - 1].0, order[k].0);
            if a == b || k < min_leaf || n - k < min_leaf {
                continue;
            }
            let (nl, nr) = (k, n - k);
            let child = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr)) / n as f64;
            let gain = parent - child;
            let gap = b - a;
            let better = best
                .as_ref()
                .is_none_or(|o| gain > o.gain + GAIN_TIE || (gain >= o.gain - GAIN_TIE && gap > o.gap));
            if better {
                best = Some(Best {
                    feature: f,
                    threshold: split_point(a, b),
                    gain,
                    gap,
                });
            }
        }
    }
    best
}
