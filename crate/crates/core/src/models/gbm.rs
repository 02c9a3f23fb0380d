//! Gradient boosting of histogram trees under squared loss.

use std::collections::VecDeque;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::tree::{partition, BinnedMatrix, EnsembleMode, Histogram, Node, SplitChoice, Tree, TreeEnsemble};
use crate::data::LagDesign;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Growth {
    /// Level by level up to a depth limit.
    DepthWise { max_depth: usize },
    /// Best-first on split gain up to a leaf budget.
    LeafWise { max_leaves: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    pub min_leaf: usize,
    /// Stop once a tree improves training RMSE by less than this fraction.
    pub tol: f64,
}

impl GbmParams {
    pub fn depth_wise() -> Self {
        Self {
            n_trees: 1000,
            learning_rate: 0.1,
            growth: Growth::DepthWise { max_depth: 3 },
            min_leaf: 1,
            tol: 1e-7,
        }
    }

    pub fn leaf_wise() -> Self {
        Self {
            growth: Growth::LeafWise { max_leaves: 8 },
            ..Self::depth_wise()
        }
    }
}

pub fn fit_gbm(design: &LagDesign, fit_rows: Range<usize>, params: &GbmParams) -> Result<TreeEnsemble> {
    if fit_rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: fit_rows.len(),
        });
    }
    let cols: Vec<usize> = (0..design.n_cols()).collect();
    let y = &design.targets()[fit_rows.clone()];
    let m = BinnedMatrix::from_design(design, fit_rows, &cols);
    Ok(fit_gbm_binned(&m, y, params).0)
}

/// Boosted ensemble on a pre-binned matrix plus the training RMSE after each tree.
pub fn fit_gbm_binned(m: &BinnedMatrix, y: &[f64], params: &GbmParams) -> (TreeEnsemble, Vec<f64>) {
    let n = m.n_rows();
    let base = y.iter().sum::<f64>() / n as f64;
    let lr = params.learning_rate;
    let mut f = vec![base; n];
    let mut g: Vec<f64> = y.iter().map(|v| v - base).collect();
    let rmse = |g: &[f64]| (g.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mut prev = rmse(&g);
    let mut rows: Vec<u32> = (0..n as u32).collect();
    let mut builder = Builder::new(m, params);
    let mut trees = Vec::new();
    let mut history = Vec::new();
    for _ in 0..params.n_trees.max(1) {
        let (tree, leaves) = builder.grow(&mut rows, &g);
        for (range, value) in leaves {
            for &i in &rows[range] {
                let i = i as usize;
                f[i] += lr * value;
                g[i] = y[i] - f[i];
            }
        }
        trees.push(tree);
        let now = rmse(&g);
        history.push(now);
        if !(prev > 0.0) || (prev - now) / prev < params.tol {
            break;
        }
        prev = now;
    }
    (
        TreeEnsemble {
            mode: EnsembleMode::Boosted {
                base,
                learning_rate: lr,
            },
            trees,
        },
        history,
    )
}

struct Open {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
    sum: f64,
    /// Absent on nodes that can never split.
    hist: Option<Histogram>,
    split: Option<SplitChoice>,
}

struct Builder<'a> {
    m: &'a BinnedMatrix,
    growth: Growth,
    min_leaf: usize,
    pool: Vec<Histogram>,
}

impl<'a> Builder<'a> {
    fn new(m: &'a BinnedMatrix, params: &GbmParams) -> Self {
        Self {
            m,
            growth: params.growth,
            min_leaf: params.min_leaf.max(1),
            pool: Vec::new(),
        }
    }

    fn take_hist(&mut self) -> Histogram {
        self.pool.pop().unwrap_or_else(|| Histogram::zeros(self.m))
    }

    fn filled(&mut self, rows: &[u32], g: &[f64]) -> Histogram {
        let mut h = self.take_hist();
        h.fill(self.m, rows, g);
        h
    }

    /// Whether a node of `n` rows at `depth` may split once the tree has
    /// `leaves` leaves.
    fn splittable(&self, n: usize, depth: usize, leaves: usize) -> bool {
        let budget = match self.growth {
            Growth::DepthWise { max_depth } => depth < max_depth,
            Growth::LeafWise { max_leaves } => leaves < max_leaves,
        };
        budget && n >= 2 * self.min_leaf
    }

    fn evaluate(&self, open: &mut Open, rows: &[u32], g: &[f64]) {
        open.split = None;
        let Some(hist) = &open.hist else {
            return;
        };
        let count = (open.end - open.start) as f64;
        let sumsq: f64 = rows[open.start..open.end]
            .iter()
            .map(|&i| g[i as usize] * g[i as usize])
            .sum();
        let sse = sumsq - open.sum * open.sum / count;
        if !(sse > 1e-12 * sumsq.max(f64::MIN_POSITIVE)) {
            return;
        }
        open.split = hist.best_split(self.m, open.sum, count, self.min_leaf as f64, 1e-10 * sse);
    }

    /// Grows one tree on gradients `g`; returns leaf row ranges into `rows`
    /// with their values.
    fn grow(&mut self, rows: &mut [u32], g: &[f64]) -> (Tree, Vec<(Range<usize>, f64)>) {
        let mut nodes = vec![Node::Leaf(0.0)];
        let hist = self.splittable(rows.len(), 0, 1).then(|| {
            let mut h = self.take_hist();
            h.fill(self.m, rows, g);
            h
        });
        let sum: f64 = g.iter().sum();
        let mut root = Open {
            node: 0,
            start: 0,
            end: rows.len(),
            depth: 0,
            sum,
            hist,
            split: None,
        };
        self.evaluate(&mut root, rows, g);
        let mut open: VecDeque<Open> = VecDeque::from([root]);
        let mut done: Vec<Open> = Vec::new();
        let mut leaves = 1usize;

        loop {
            let pick = match self.growth {
                Growth::DepthWise { .. } => {
                    if open.is_empty() {
                        break;
                    }
                    0
                }
                Growth::LeafWise { max_leaves } => {
                    if leaves >= max_leaves {
                        break;
                    }
                    let mut best: Option<(usize, f64)> = None;
                    for (k, o) in open.iter().enumerate() {
                        if let Some(s) = o.split {
                            if best.is_none_or(|b| s.gain > b.1) {
                                best = Some((k, s.gain));
                            }
                        }
                    }
                    match best {
                        Some((k, _)) => k,
                        None => break,
                    }
                }
            };
            let parent = open.remove(pick).expect("open node");
            let Some(split) = parent.split else {
                done.push(parent);
                continue;
            };
            let node_rows = &mut rows[parent.start..parent.end];
            let left_n = partition(self.m, node_rows, split.feature, split.bin);
            let mid = parent.start + left_n;
            let (l, r) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[parent.node] = Node::Split {
                column: self.m.column(split.feature),
                threshold: self.m.threshold(split.feature, split.bin),
                left: l as u32,
                right: r as u32,
            };
            let left_sum: f64 = rows[parent.start..mid].iter().map(|&i| g[i as usize]).sum();
            let right_sum = parent.sum - left_sum;
            let right_n = parent.end - mid;
            let need_l = self.splittable(left_n, parent.depth + 1, leaves + 1);
            let need_r = self.splittable(right_n, parent.depth + 1, leaves + 1);
            let parent_hist = parent.hist.expect("a split node has a histogram");
            let (lh, rh) = match (need_l, need_r) {
                (false, false) => (None, None),
                (true, false) => (Some(self.filled(&rows[parent.start..mid], g)), None),
                (false, true) => (None, Some(self.filled(&rows[mid..parent.end], g))),
                (true, true) => {
                    let left_small = left_n <= right_n;
                    let small = if left_small {
                        self.filled(&rows[parent.start..mid], g)
                    } else {
                        self.filled(&rows[mid..parent.end], g)
                    };
                    let mut large = self.take_hist();
                    large.subtract_from(&parent_hist, &small);
                    if left_small {
                        (Some(small), Some(large))
                    } else {
                        (Some(large), Some(small))
                    }
                }
            };
            self.pool.push(parent_hist);
            let mut left = Open {
                node: l,
                start: parent.start,
                end: mid,
                depth: parent.depth + 1,
                sum: left_sum,
                hist: lh,
                split: None,
            };
            let mut right = Open {
                node: r,
                start: mid,
                end: parent.end,
                depth: parent.depth + 1,
                sum: right_sum,
                hist: rh,
                split: None,
            };
            self.evaluate(&mut left, rows, g);
            self.evaluate(&mut right, rows, g);
            open.push_back(left);
            open.push_back(right);
            leaves += 1;
        }
        done.extend(open);
        let mut out = Vec::with_capacity(done.len());
        for o in done {
            let value = o.sum / (o.end - o.start) as f64;
            nodes[o.node] = Node::Leaf(value);
            out.push((o.start..o.end, value));
            self.pool.extend(o.hist);
        }
        (Tree { nodes }, out)
    }
}
