//! Histogram-binned regression trees shared by the forest and boosting models.
//!
//! Each feature is cut into at most `MAX_BINS` bins. A split on bin `b`
//! sends rows with `bin <= b` left; on raw values this is `value <= threshold`
//! where `threshold` is the midpoint between the largest value in bin `b` and
//! the smallest value in bin `b + 1`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::LagDesign;

pub const MAX_BINS: usize = 64;

/// Feature matrix discretized once per fit window.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    /// Design column of each feature.
    columns: Vec<usize>,
    /// Column-major: feature `f` occupies `bins[f * n_rows..(f + 1) * n_rows]`.
    bins: Vec<u8>,
    /// Per feature, ascending split thresholds (`n_bins - 1` of them).
    thresholds: Vec<Vec<f64>>,
    /// Start of each feature's bins in a flat histogram.
    offsets: Vec<usize>,
    total_bins: usize,
    /// `recip[k] = 1 / k`, for node sizes up to `n_rows`.
    recip: Vec<f64>,
}

impl BinnedMatrix {
    pub fn from_design(design: &LagDesign, rows: Range<usize>, columns: &[usize]) -> Self {
        let n = rows.len();
        let p = columns.len();
        let mut x = Vec::with_capacity(n * p);
        for i in rows {
            let row = design.row(i);
            x.extend(columns.iter().map(|&j| row[j]));
        }
        Self::from_dense(&x, n, columns.to_vec())
    }

    /// `x` is row-major `n x columns.len()`.
    pub fn from_dense(x: &[f64], n: usize, columns: Vec<usize>) -> Self {
        let p = columns.len();
        let mut thresholds = Vec::with_capacity(p);
        let mut col = Vec::with_capacity(n);
        for f in 0..p {
            col.clear();
            col.extend((0..n).map(|i| x[i * p + f]));
            thresholds.push(cut_points(&mut col));
        }
        let mut bins = vec![0u8; n * p];
        for f in 0..p {
            for i in 0..n {
                bins[f * n + i] = bin_of(&thresholds[f], x[i * p + f]);
            }
        }
        let mut offsets = Vec::with_capacity(p);
        let mut total = 0;
        for t in &thresholds {
            offsets.push(total);
            total += t.len() + 1;
        }
        Self {
            n_rows: n,
            columns,
            bins,
            thresholds,
            offsets,
            total_bins: total,
            recip: (0..=n).map(|k| 1.0 / k as f64).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_bins(&self, f: usize) -> usize {
        self.thresholds[f].len() + 1
    }

    #[inline]
    pub fn bin(&self, i: usize, f: usize) -> u8 {
        self.bins[f * self.n_rows + i]
    }

    #[inline]
    pub(crate) fn feature_bins(&self, f: usize) -> &[u8] {
        &self.bins[f * self.n_rows..(f + 1) * self.n_rows]
    }

    pub fn threshold(&self, f: usize, b: usize) -> f64 {
        self.thresholds[f][b]
    }

    pub fn column(&self, f: usize) -> usize {
        self.columns[f]
    }

    #[inline]
    pub(crate) fn recip(&self, k: usize) -> f64 {
        self.recip[k]
    }
}

/// Midpoints between bin boundaries; sorts `values` in place.
fn cut_points(values: &mut [f64]) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut uniq: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values.iter() {
        if uniq.last() != Some(&v) {
            uniq.push(v);
        }
    }
    let u = uniq.len();
    if u <= 1 {
        return Vec::new();
    }
    if u <= MAX_BINS {
        return uniq.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(MAX_BINS - 1);
    for b in 1..MAX_BINS {
        let q = b * u / MAX_BINS;
        let t = 0.5 * (uniq[q - 1] + uniq[q]);
        if cuts.last().is_none_or(|last| t > *last) {
            cuts.push(t);
        }
    }
    cuts
}

#[inline]
fn bin_of(thresholds: &[f64], v: f64) -> u8 {
    thresholds.partition_point(|t| *t < v) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        column: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf(value)],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => {
                    k = if row[column] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => {
                    1 + go(t, left as usize).max(go(t, right as usize))
                }
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnsembleMode {
    /// Plain average of the trees.
    Bagged,
    /// `base + learning_rate * sum of trees`.
    Boosted { base: f64, learning_rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub mode: EnsembleMode,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.mode {
            EnsembleMode::Bagged => {
                self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
            }
            EnsembleMode::Boosted {
                base,
                learning_rate,
            } => base + learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>(),
        }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Best split of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub bin: usize,
    pub gain: f64,
}

/// Per-bin gradient sums and row counts over every feature's bins.
pub(crate) struct Histogram {
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl Histogram {
    pub fn zeros(m: &BinnedMatrix) -> Self {
        Self {
            sum: vec![0.0; m.total_bins],
            count: vec![0; m.total_bins],
        }
    }

    pub fn fill(&mut self, m: &BinnedMatrix, rows: &[u32], g: &[f64]) {
        self.sum.fill(0.0);
        self.count.fill(0);
        let gathered: Vec<f64> = rows.iter().map(|&i| g[i as usize]).collect();
        for f in 0..m.n_features() {
            let col = m.feature_bins(f);
            let range = m.offsets[f]..m.offsets[f] + m.n_bins(f);
            let sum = &mut self.sum[range.clone()];
            let count = &mut self.count[range];
            for (&i, &gi) in rows.iter().zip(&gathered) {
                let b = col[i as usize] as usize;
                sum[b] += gi;
                count[b] += 1;
            }
        }
    }

    /// `self = parent - sibling`.
    pub fn subtract_from(&mut self, parent: &Histogram, sibling: &Histogram) {
        for ((o, p), s) in self.sum.iter_mut().zip(&parent.sum).zip(&sibling.sum) {
            *o = p - s;
        }
        for ((o, p), s) in self.count.iter_mut().zip(&parent.count).zip(&sibling.count) {
            *o = p - s;
        }
    }

    /// Best split over all features, requiring `min_leaf` rows per side and a
    /// gain above `min_gain`. Ties keep the earliest feature and bin.
    pub fn best_split(
        &self,
        m: &BinnedMatrix,
        sum: f64,
        count: f64,
        min_leaf: f64,
        min_gain: f64,
    ) -> Option<SplitChoice> {
        let parent = sum * sum / count;
        let total = count as usize;
        let min_leaf = min_leaf.max(1.0) as usize;
        let mut best: Option<SplitChoice> = None;
        let mut best_gain = min_gain;
        for f in 0..m.n_features() {
            let nb = m.n_bins(f);
            if nb < 2 {
                continue;
            }
            let range = m.offsets[f]..m.offsets[f] + nb - 1;
            let (mut sl, mut nl) = (0.0, 0usize);
            let (mut f_gain, mut f_bin) = (best_gain, usize::MAX);
            // branch-free scan; an empty bin repeats the previous candidate
            for (b, (&c, &s)) in self.count[range.clone()].iter().zip(&self.sum[range]).enumerate() {
                sl += s;
                nl += c as usize;
                let nr = total - nl;
                let sr = sum - sl;
                let gain = sl * sl * m.recip(nl) + sr * sr * m.recip(nr) - parent;
                let take = (c != 0) & (nl >= min_leaf) & (nr >= min_leaf) & (gain > f_gain);
                f_gain = if take { gain } else { f_gain };
                f_bin = if take { b } else { f_bin };
            }
            if f_bin != usize::MAX {
                best_gain = f_gain;
                best = Some(SplitChoice {
                    feature: f,
                    bin: f_bin,
                    gain: f_gain,
                });
            }
        }
        best
    }
}

/// Reorders `rows` so rows going left come first; returns the left count.
pub(crate) fn partition(m: &BinnedMatrix, rows: &mut [u32], feature: usize, bin: usize) -> usize {
    let col = m.feature_bins(feature);
    let mut left = 0;
    for k in 0..rows.len() {
        if (col[rows[k] as usize] as usize) <= bin {
            rows.swap(left, k);
            left += 1;
        }
    }
    left
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cut_points_small_and_large() {
        let mut v = vec![3.0, 1.0, 2.0, 2.0];
        assert_eq!(cut_points(&mut v), vec![1.5, 2.5]);
        let mut c = vec![5.0; 10];
        assert!(cut_points(&mut c).is_empty());
        let mut many: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let cuts = cut_points(&mut many);
        assert_eq!(cuts.len(), MAX_BINS - 1);
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bin_threshold_consistency() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.5).collect();
        let m = BinnedMatrix::from_dense(&x, 200, vec![0]);
        for i in 0..200 {
            let b = m.bin(i, 0) as usize;
            for s in 0..m.n_bins(0) - 1 {
                assert_eq!(b <= s, x[i] <= m.threshold(0, s));
            }
        }
    }

    #[test]
    fn histogram_split_finds_step() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 7 { 0.0 } else { 10.0 }).collect();
        let m = BinnedMatrix::from_dense(&x, 20, vec![0]);
        let rows: Vec<u32> = (0..20).collect();
        let mut h = Histogram::zeros(&m);
        h.fill(&m, &rows, &y);
        let s = h.best_split(&m, y.iter().sum(), 20.0, 1.0, 0.0).unwrap();
        assert_eq!(m.threshold(0, s.bin), 6.5);
    }

    #[test]
    fn tree_prediction_walks_splits() {
        let t = Tree {
            nodes: vec![
                Node::Split {
                    column: 1,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf(-1.0),
                Node::Leaf(1.0),
            ],
        };
        assert_eq!(t.predict(&[9.0, 0.5]), -1.0);
        assert_eq!(t.predict(&[9.0, 0.6]), 1.0);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.n_leaves(), 2);
    }
}
