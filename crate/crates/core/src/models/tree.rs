//! CART decision tree on Gini impurity.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
        counts: [usize; 2],
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[0] as f64 / n;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn leaf(counts: [usize; 2]) -> Node {
    Node::Leaf {
        class: usize::from(counts[1] > counts[0]),
        counts,
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

#[allow(clippy::needless_range_loop)]
fn best_split(rows: &[&[f64]], y: &[usize], idx: &[usize], min_leaf: usize) -> Option<BestSplit> {
    let d = rows[idx[0]].len();
    let total = [
        idx.iter().filter(|&&i| y[i] == 0).count(),
        idx.iter().filter(|&&i| y[i] == 1).count(),
    ];
    let n = idx.len() as f64;
    let mut best: Option<BestSplit> = None;
    let mut sorted = idx.to_vec();
    for f in 0..d {
        sorted.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
        let mut left = [0usize; 2];
        for pos in 0..sorted.len() - 1 {
            left[y[sorted[pos]]] += 1;
            let lo = rows[sorted[pos]][f];
            let hi = rows[sorted[pos + 1]][f];
            if lo == hi {
                continue;
            }
            let n_left = pos + 1;
            if n_left < min_leaf || sorted.len() - n_left < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let impurity =
                (n_left as f64 * gini(left) + (sorted.len() - n_left) as f64 * gini(right)) / n;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

fn grow(rows: &[&[f64]], y: &[usize], idx: &[usize], depth: usize, p: TreeParams) -> Node {
    let counts = [
        idx.iter().filter(|&&i| y[i] == 0).count(),
        idx.iter().filter(|&&i| y[i] == 1).count(),
    ];
    if counts[0] == 0 || counts[1] == 0 || depth >= p.max_depth || idx.len() < 2 * p.min_leaf {
        return leaf(counts);
    }
    let Some(split) = best_split(rows, y, idx, p.min_leaf) else {
        return leaf(counts);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| rows[i][split.feature] <= split.threshold);
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(rows, y, &l, depth + 1, p)),
        right: Box::new(grow(rows, y, &r, depth + 1, p)),
    }
}

/// Grow a tree on rows with class indices 0/1. Nodes stop splitting when
/// pure, at `max_depth`, below `2 * min_leaf` rows, or when no threshold
/// leaves `min_leaf` rows on both sides.
pub fn fit(rows: &[&[f64]], y: &[usize], params: TreeParams) -> Node {
    let idx: Vec<usize> = (0..rows.len()).collect();
    grow(rows, y, &idx, 0, params)
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    pub fn leaves(&self) -> Vec<&Node> {
        match self {
            Node::Leaf { .. } => vec![self],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}
