//! Bagged regression trees with per-node feature subsampling.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{partition, BinnedMatrix, EnsembleMode, Node, Tree, TreeEnsemble};
use crate::data::LagDesign;
use crate::error::{Error, Result};
use crate::seed::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per node; `floor(sqrt(P))` when absent.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 1000,
            mtry: None,
            min_leaf: 2,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (p as f64).sqrt().floor() as usize)
            .clamp(1, p.max(1))
    }
}

pub fn fit_random_forest(
    design: &LagDesign,
    fit_rows: Range<usize>,
    params: &ForestParams,
) -> Result<TreeEnsemble> {
    if fit_rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: fit_rows.len(),
        });
    }
    let cols: Vec<usize> = (0..design.n_cols()).collect();
    let y = &design.targets()[fit_rows.clone()];
    let m = BinnedMatrix::from_design(design, fit_rows, &cols);
    Ok(fit_forest_binned(&m, y, params))
}

/// Forest on a pre-binned matrix; `y[i]` is the target of binned row `i`.
pub fn fit_forest_binned(m: &BinnedMatrix, y: &[f64], params: &ForestParams) -> TreeEnsemble {
    let n = m.n_rows();
    let p = m.n_features();
    let mtry = params.mtry_for(p);
    let mut rng = rng_from(params.seed);
    let mut grower = Grower::new(m, y, mtry, params.min_leaf.max(1));
    let mut rows: Vec<u32> = vec![0; n];
    let trees = (0..params.n_trees.max(1))
        .map(|_| {
            for r in rows.iter_mut() {
                *r = rng.random_range(0..n as u32);
            }
            grower.grow(&mut rows, &mut rng)
        })
        .collect();
    TreeEnsemble {
        mode: EnsembleMode::Bagged,
        trees,
    }
}

struct Grower<'a> {
    m: &'a BinnedMatrix,
    y: &'a [f64],
    mtry: usize,
    min_leaf: usize,
    features: Vec<usize>,
    sums: [f64; 64],
    counts: [u32; 64],
    pairs: Vec<(u8, f64)>,
}

/// Per-feature scans switch from a bin histogram to sorting below this size.
const SORT_BELOW: usize = 8;

impl<'a> Grower<'a> {
    fn new(m: &'a BinnedMatrix, y: &'a [f64], mtry: usize, min_leaf: usize) -> Self {
        Self {
            m,
            y,
            mtry,
            min_leaf,
            features: (0..m.n_features()).collect(),
            sums: [0.0; 64],
            counts: [0; 64],
            pairs: Vec::new(),
        }
    }

    fn grow<R: Rng>(&mut self, rows: &mut [u32], rng: &mut R) -> Tree {
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![(0usize, 0usize, rows.len())];
        while let Some((k, start, end)) = stack.pop() {
            let node_rows = &mut rows[start..end];
            let n = node_rows.len();
            let (mut sum, mut sumsq) = (0.0, 0.0);
            for &i in node_rows.iter() {
                let v = self.y[i as usize];
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / n as f64;
            let sse = sumsq - sum * mean;
            if n < 2 * self.min_leaf || !(sse > 1e-12 * sumsq.max(f64::MIN_POSITIVE)) {
                nodes[k] = Node::Leaf(mean);
                continue;
            }
            let min_gain = 1e-10 * sse;
            let mut best: Option<(usize, usize, f64)> = None;
            let p = self.features.len();
            for t in 0..self.mtry {
                let pick = rng.random_range(t..p);
                self.features.swap(t, pick);
                let f = self.features[t];
                if let Some((bin, gain)) = self.scan(node_rows, f, sum, n, min_gain) {
                    if best.is_none_or(|b| gain > b.2) {
                        best = Some((f, bin, gain));
                    }
                }
            }
            let Some((f, bin, _)) = best else {
                nodes[k] = Node::Leaf(mean);
                continue;
            };
            let left_n = partition(self.m, node_rows, f, bin);
            let (l, r) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[k] = Node::Split {
                column: self.m.column(f),
                threshold: self.m.threshold(f, bin),
                left: l as u32,
                right: r as u32,
            };
            stack.push((r, start + left_n, end));
            stack.push((l, start, start + left_n));
        }
        Tree { nodes }
    }

    /// Best `(bin, gain)` for one feature within a node.
    fn scan(&mut self, rows: &[u32], f: usize, sum: f64, n: usize, min_gain: f64) -> Option<(usize, f64)> {
        let nb = self.m.n_bins(f);
        if nb < 2 {
            return None;
        }
        let min_leaf = self.min_leaf;
        let m = self.m;
        let col = m.feature_bins(f);
        let parent = sum * sum / n as f64;
        let mut best: Option<(usize, f64)> = None;
        let mut best_gain = min_gain;
        let mut consider = |bin: usize, sl: f64, nl: usize| {
            if nl < min_leaf || n - nl < min_leaf {
                return;
            }
            let sr = sum - sl;
            let gain = sl * sl * m.recip(nl) + sr * sr * m.recip(n - nl) - parent;
            if gain > best_gain {
                best_gain = gain;
                best = Some((bin, gain));
            }
        };
        if n < SORT_BELOW {
            self.pairs.clear();
            self.pairs
                .extend(rows.iter().map(|&i| (col[i as usize], self.y[i as usize])));
            self.pairs.sort_unstable_by_key(|p| p.0);
            let (mut sl, mut nl) = (0.0, 0usize);
            for w in 0..self.pairs.len() - 1 {
                sl += self.pairs[w].1;
                nl += 1;
                if self.pairs[w].0 != self.pairs[w + 1].0 {
                    consider(self.pairs[w].0 as usize, sl, nl);
                }
            }
        } else {
            // only bins occupied by the node are cleared and scanned
            let (mut lo, mut hi) = (u8::MAX, 0u8);
            for &i in rows {
                let b = col[i as usize];
                lo = lo.min(b);
                hi = hi.max(b);
            }
            let (lo, hi) = (lo as usize, hi as usize);
            self.sums[lo..=hi].fill(0.0);
            self.counts[lo..=hi].fill(0);
            for &i in rows {
                let b = col[i as usize] as usize;
                self.sums[b] += self.y[i as usize];
                self.counts[b] += 1;
            }
            let (mut sl, mut nl) = (0.0, 0usize);
            for b in lo..hi {
                sl += self.sums[b];
                nl += self.counts[b] as usize;
                if self.counts[b] > 0 {
                    consider(b, sl, nl);
                }
            }
        }
        best
    }
}
