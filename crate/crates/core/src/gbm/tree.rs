use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tabular::{Cell, Instance};

/// Routing rule of an internal node. Rows satisfying the rule go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum SplitRule<T> {
    /// `x <= threshold`
    LessOrEqual(T),
    /// `x == category`
    Equals(Cell<T>),
}

impl<T: Scalar> SplitRule<T> {
    pub fn goes_left(&self, cell: &Cell<T>) -> Result<bool> {
        match (self, cell) {
            (SplitRule::LessOrEqual(t), Cell::Num(v)) => Ok(*v <= *t),
            (SplitRule::Equals(c), x) => Ok(c == x),
            (SplitRule::LessOrEqual(_), Cell::Cat(s)) => Err(Error::SchemaMismatch(format!(
                "threshold split applied to categorical value '{s}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum Node<T> {
    Split {
        feature: usize,
        rule: SplitRule<T>,
        left: usize,
        right: usize,
        /// Loss reduction achieved by this split.
        gain: T,
    },
    Leaf {
        value: T,
    },
}

/// Binary regression tree stored as a flat node array rooted at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf(value: T) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Additive logit contribution of this tree for `x`.
    pub fn predict(&self, x: &Instance<T>) -> Result<T> {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return Ok(*value),
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                    ..
                } => {
                    let cell = x.values().get(*feature).ok_or_else(|| {
                        Error::SchemaMismatch(format!("split on missing feature {feature}"))
                    })?;
                    i = if rule.goes_left(cell)? { *left } else { *right };
                }
            }
        }
    }

    /// Checks child links form a tree over valid features and node indices.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = self
                .nodes
                .get(i)
                .ok_or_else(|| Error::InvalidData(format!("tree references missing node {i}")))?;
            if std::mem::replace(&mut visited[i], true) {
                return Err(Error::InvalidData(format!("node {i} reached twice")));
            }
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = node
            {
                if *feature >= n_features {
                    return Err(Error::InvalidData(format!(
                        "split on feature {feature} but model has {n_features}"
                    )));
                }
                stack.push(*left);
                stack.push(*right);
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_by_rule() {
        let t = Tree::<f64> {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    rule: SplitRule::LessOrEqual(0.5),
                    left: 1,
                    right: 2,
                    gain: 1.0,
                },
                Node::Leaf { value: -1.0 },
                Node::Split {
                    feature: 1,
                    rule: SplitRule::Equals(Cell::cat("a")),
                    left: 3,
                    right: 4,
                    gain: 0.5,
                },
                Node::Leaf { value: 2.0 },
                Node::Leaf { value: 3.0 },
            ],
        };
        t.validate(2).unwrap();
        assert!(t.validate(1).is_err());
        assert_eq!(t.depth(), 2);
        let x = |v: f64, c: &str| Instance::new(vec![Cell::Num(v), Cell::cat(c)]);
        assert_eq!(t.predict(&x(0.5, "a")).unwrap(), -1.0);
        assert_eq!(t.predict(&x(0.7, "a")).unwrap(), 2.0);
        assert_eq!(t.predict(&x(0.7, "b")).unwrap(), 3.0);
        assert!(t.predict(&Instance::new(vec![Cell::cat("z"), Cell::cat("a")])).is_err());
    }

    #[test]
    fn cyclic_links_rejected() {
        let t = Tree::<f64> {
            nodes: vec![Node::Split {
                feature: 0,
                rule: SplitRule::LessOrEqual(0.0),
                left: 0,
                right: 0,
                gain: 0.0,
            }],
        };
        assert!(t.validate(1).is_err());
    }
}
