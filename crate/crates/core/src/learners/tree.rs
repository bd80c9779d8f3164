use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BaseLearnerSpec, Classifier, LabeledDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TreeNode {
    Leaf {
        prob: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary classification tree grown by weighted Gini impurity.
///
/// Rows with `x[feature] <= threshold` go left. Leaves store the weighted
/// fraction of positive rows that reached them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    arity: usize,
    nodes: Vec<TreeNode>,
}

struct Builder<'a, R> {
    data: &'a LabeledDataset,
    weights: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    feature_subset: Option<usize>,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
}

struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

fn gini(w_pos: f64, w_tot: f64) -> f64 {
    if w_tot <= 0.0 {
        return 0.0;
    }
    let p = w_pos / w_tot;
    w_tot * 2.0 * p * (1.0 - p)
}

impl<R: Rng> Builder<'_, R> {
    fn leaf_prob(&self, idx: &[usize]) -> (f64, f64) {
        let (mut pos, mut tot) = (0.0, 0.0);
        for &i in idx {
            let w = self.weights[i];
            tot += w;
            if self.data.y(i) == 1 {
                pos += w;
            }
        }
        (pos, tot)
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let (pos, tot) = self.leaf_prob(idx);
        let prob = if tot > 0.0 {
            pos / tot
        } else {
            let n_pos = idx.iter().filter(|&&i| self.data.y(i) == 1).count();
            n_pos as f64 / idx.len().max(1) as f64
        };
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { prob });
        let pure = pos <= 0.0 || pos >= tot;
        if depth >= self.max_depth || pure || idx.len() < 2 * self.min_leaf {
            return slot;
        }
        let parent = gini(pos, tot);
        let Some(best) = self.best_split(idx, pos, tot) else {
            return slot;
        };
        if best.impurity >= parent - 1e-12 * tot.max(1e-300) {
            return slot;
        }
        let data = self.data;
        let mut split = 0;
        for k in 0..idx.len() {
            if data.x(idx[k])[best.feature] <= best.threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }

    fn best_split(&mut self, idx: &[usize], pos: f64, tot: f64) -> Option<Candidate> {
        let arity = self.data.arity();
        let features: Vec<usize> = match self.feature_subset {
            Some(k) if k < arity => {
                let mut f = index::sample(self.rng, arity, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..arity).collect(),
        };
        let mut best: Option<Candidate> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for f in features {
            let data = self.data;
            order.sort_by(|&a, &b| data.x(a)[f].total_cmp(&data.x(b)[f]).then(a.cmp(&b)));
            let (mut lpos, mut ltot) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                let w = self.weights[i];
                ltot += w;
                if data.y(i) == 1 {
                    lpos += w;
                }
                let (v, next) = (data.x(i)[f], data.x(order[k + 1])[f]);
                if v == next {
                    continue;
                }
                let n_left = k + 1;
                if n_left < self.min_leaf || order.len() - n_left < self.min_leaf {
                    continue;
                }
                let impurity = gini(lpos, ltot) + gini(pos - lpos, tot - ltot);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Candidate {
                        impurity,
                        feature: f,
                        threshold: 0.5 * (v + next),
                    });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    /// `feature_subset = Some(k)` draws `k` candidate features per split.
    pub fn fit<R: Rng>(
        data: &LabeledDataset,
        weights: &[f64],
        spec: &BaseLearnerSpec,
        feature_subset: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        let mut b = Builder {
            data,
            weights,
            max_depth: spec.max_depth,
            min_leaf: spec.min_leaf,
            feature_subset,
            rng,
            nodes: Vec::new(),
        };
        b.grow(&mut idx, 0);
        Self {
            arity: data.arity(),
            nodes: b.nodes,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

impl Classifier for DecisionTree {
    fn arity(&self) -> usize {
        self.arity
    }

    fn probability_unchecked(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { prob } => return prob,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}
