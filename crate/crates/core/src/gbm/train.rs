//! Exact greedy gradient boosting on logistic loss.
//!
//! Every tree is fitted to the first and second derivatives of the loss at
//! the current ensemble output. Leaves take the Newton value
//! `sum(g) / (sum(h) + lambda)` with `g = y - p` and `h = p (1 - p)`,
//! shrunk by the learning rate.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::GbmModel;
use super::tree::{Node, SplitRule, Tree};
use crate::error::{Error, Result};
use crate::scalar::{logit, sigmoid, Scalar};
use crate::tabular::{distinct_sorted, Cell, Dataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_leaf_penalty: f64,
    pub min_samples_leaf: usize,
    /// Row fraction drawn (without replacement) for each tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            l2_leaf_penalty: 1.0,
            min_samples_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.max_depth > 16 {
            return bad("max_depth must be at most 16");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.l2_leaf_penalty >= 0.0 && self.l2_leaf_penalty.is_finite()) {
            return bad("l2_leaf_penalty must be finite and >= 0");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        Ok(())
    }
}

enum Column<T> {
    /// Values plus row indices sorted by value.
    Numeric { values: Vec<T>, order: Vec<usize> },
    /// Per-row level index into `levels`.
    Categorical { levels: Vec<Cell<T>>, codes: Vec<usize> },
}

fn prepare_columns<T: Scalar>(dataset: &Dataset<T>) -> Vec<Column<T>> {
    (0..dataset.n_features())
        .map(|j| {
            let cells: Vec<&Cell<T>> = dataset.column(j).collect();
            if cells.iter().all(|c| c.is_num()) {
                let values: Vec<T> = cells.iter().map(|c| c.as_num().expect("numeric")).collect();
                let mut order: Vec<usize> = (0..values.len()).collect();
                order.sort_by(|&a, &b| values[a].total_cmp_nan_last(&values[b]));
                Column::Numeric { values, order }
            } else {
                let levels = distinct_sorted(cells.iter().copied());
                let codes = cells
                    .iter()
                    .map(|c| levels.iter().position(|l| l == *c).expect("level present"))
                    .collect();
                Column::Categorical { levels, codes }
            }
        })
        .collect()
}

struct Candidate<T> {
    feature: usize,
    rule: SplitRule<T>,
    gain: T,
}

struct Builder<'a, T> {
    columns: &'a [Column<T>],
    grad: Vec<T>,
    hess: Vec<T>,
    lambda: T,
    lr: T,
    max_depth: usize,
    min_leaf: usize,
    in_node: Vec<bool>,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Builder<'_, T> {
    fn score(&self, g: T, h: T) -> T {
        let d = h + self.lambda;
        if d > T::zero() {
            g * g / d
        } else {
            T::zero()
        }
    }

    fn leaf_value(&self, g: T, h: T) -> T {
        let d = h + self.lambda;
        if d > T::zero() {
            self.lr * g / d
        } else {
            T::zero()
        }
    }

    fn best_split(&mut self, rows: &[usize], g_tot: T, h_tot: T) -> Option<Candidate<T>> {
        let n = rows.len();
        let parent = self.score(g_tot, h_tot);
        let half = T::of(0.5);
        let min_gain = T::epsilon() * T::of(64.0) * parent.max(T::one());
        for &r in rows {
            self.in_node[r] = true;
        }
        let mut best: Option<Candidate<T>> = None;
        let consider = |best: &mut Option<Candidate<T>>, c: Candidate<T>| {
            if c.gain > min_gain && best.as_ref().is_none_or(|b| c.gain > b.gain) {
                *best = Some(c);
            }
        };
        for (j, col) in self.columns.iter().enumerate() {
            match col {
                Column::Numeric { values, order } => {
                    let seq: Vec<usize> = order.iter().copied().filter(|&r| self.in_node[r]).collect();
                    let (mut gl, mut hl) = (T::zero(), T::zero());
                    for (k, &r) in seq.iter().enumerate().take(n - 1) {
                        gl = gl + self.grad[r];
                        hl = hl + self.hess[r];
                        let nl = k + 1;
                        let (v, next) = (values[r], values[seq[k + 1]]);
                        if v == next || nl < self.min_leaf || n - nl < self.min_leaf {
                            continue;
                        }
                        let gain = half
                            * (self.score(gl, hl) + self.score(g_tot - gl, h_tot - hl) - parent);
                        let mid = (v + next) * half;
                        let threshold = if mid < next { mid } else { v };
                        consider(
                            &mut best,
                            Candidate {
                                feature: j,
                                rule: SplitRule::LessOrEqual(threshold),
                                gain,
                            },
                        );
                    }
                }
                Column::Categorical { levels, codes } => {
                    let mut stats = vec![(T::zero(), T::zero(), 0usize); levels.len()];
                    for &r in rows {
                        let s = &mut stats[codes[r]];
                        s.0 = s.0 + self.grad[r];
                        s.1 = s.1 + self.hess[r];
                        s.2 += 1;
                    }
                    for (level, &(gl, hl, nl)) in levels.iter().zip(&stats) {
                        if nl < self.min_leaf || n - nl < self.min_leaf {
                            continue;
                        }
                        let gain = half
                            * (self.score(gl, hl) + self.score(g_tot - gl, h_tot - hl) - parent);
                        consider(
                            &mut best,
                            Candidate {
                                feature: j,
                                rule: SplitRule::Equals(level.clone()),
                                gain,
                            },
                        );
                    }
                }
            }
        }
        for &r in rows {
            self.in_node[r] = false;
        }
        best
    }

    fn goes_left(&self, feature: usize, rule: &SplitRule<T>, r: usize) -> bool {
        match (&self.columns[feature], rule) {
            (Column::Numeric { values, .. }, SplitRule::LessOrEqual(t)) => values[r] <= *t,
            (Column::Categorical { levels, codes }, SplitRule::Equals(c)) => levels[codes[r]] == *c,
            _ => unreachable!("rule kind always matches column kind"),
        }
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let g: T = rows.iter().map(|&r| self.grad[r]).sum();
        let h: T = rows.iter().map(|&r| self.hess[r]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(g, h),
        });
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&rows, g, h) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .copied()
            .partition(|&r| self.goes_left(best.feature, &best.rule, r));
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            rule: best.rule,
            left,
            right,
            gain: best.gain,
        };
        id
    }
}

/// Fits a boosted ensemble of exactly `config.n_trees` trees.
pub fn train<T: Scalar>(dataset: &Dataset<T>, config: &GbmConfig) -> Result<GbmModel<T>> {
    config.validate()?;
    let labels = dataset.require_labels()?;
    let n = dataset.n_rows();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::DegenerateLabels(format!(
            "training labels contain a single class ({n_pos} positives of {n})"
        )));
    }
    if n < 2 * config.min_samples_leaf {
        return Err(Error::InvalidConfig(format!(
            "{n} rows cannot fill two leaves of {} samples",
            config.min_samples_leaf
        )));
    }
    let y: Vec<T> = labels.iter().map(|&l| T::of(l as f64)).collect();
    let base = logit(T::of(n_pos as f64 / n as f64));
    let columns = prepare_columns(dataset);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_sample = ((n as f64 * config.subsample).round() as usize).clamp(1, n);

    let mut raw = vec![base; n];
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut builder = Builder {
        columns: &columns,
        grad: vec![T::zero(); n],
        hess: vec![T::zero(); n],
        lambda: T::of(config.l2_leaf_penalty),
        lr: T::of(config.learning_rate),
        max_depth: config.max_depth,
        min_leaf: config.min_samples_leaf,
        in_node: vec![false; n],
        nodes: Vec::new(),
    };
    for _ in 0..config.n_trees {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            builder.grad[i] = y[i] - p;
            builder.hess[i] = p * (T::one() - p);
        }
        let rows: Vec<usize> = if n_sample < n {
            let mut idx = sample(&mut rng, n, n_sample).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..n).collect()
        };
        builder.nodes = Vec::new();
        builder.build(rows, 0);
        let tree = Tree {
            nodes: std::mem::take(&mut builder.nodes),
        };
        for (i, r) in raw.iter_mut().enumerate() {
            *r = *r + tree.predict(dataset.row(i))?;
        }
        trees.push(tree);
    }
    Ok(GbmModel::new(base, trees, dataset.schema()))
}
