//! Cross-product accumulation and small dense solvers.
//!
//! All linear fits in the crate work from centered cross-products of the
//! predictors and the target. Columns are rescaled to unit sample variance
//! before solving, which keeps normal equations well conditioned even when
//! raw columns sit far from zero (temperatures in Kelvin, counts in the
//! thousands). Least-squares predictions are invariant to that rescaling.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::{LagDesign, ZERO_VAR_REL};

/// Shifted running sums of `[x, y]` over a set of rows.
#[derive(Debug, Clone)]
pub struct CrossProducts {
    p: usize,
    n: usize,
    shift: Vec<f64>,
    sum: Vec<f64>,
    /// Full `(p+1) x (p+1)` row-major; only the upper triangle is maintained.
    sxx: Vec<f64>,
}

impl CrossProducts {
    /// Empty accumulator; `shift` should be close to the column means.
    pub fn new(shift: Vec<f64>) -> Self {
        let q = shift.len();
        Self {
            p: q - 1,
            n: 0,
            shift,
            sum: vec![0.0; q],
            sxx: vec![0.0; q * q],
        }
    }

    /// Accumulates rows `rows` of `design`, shifting by their own means.
    pub fn from_rows(design: &LagDesign, rows: Range<usize>) -> Self {
        let p = design.n_cols();
        let mut shift = vec![0.0; p + 1];
        let n = rows.len().max(1) as f64;
        for i in rows.clone() {
            for (s, v) in shift.iter_mut().zip(design.row(i)) {
                *s += v;
            }
            shift[p] += design.target(i);
        }
        shift.iter_mut().for_each(|s| *s /= n);
        let mut cp = Self::new(shift);
        for i in rows {
            cp.add_row(design.row(i), design.target(i));
        }
        cp
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_predictors(&self) -> usize {
        self.p
    }

    pub fn add_row(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.p);
        let q = self.p + 1;
        let mut d = Vec::with_capacity(q);
        d.extend(x.iter().zip(&self.shift).map(|(v, s)| v - s));
        d.push(y - self.shift[self.p]);
        for i in 0..q {
            let di = d[i];
            self.sum[i] += di;
            if di == 0.0 {
                continue;
            }
            let row = &mut self.sxx[i * q..(i + 1) * q];
            for j in i..q {
                row[j] += di * d[j];
            }
        }
        self.n += 1;
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.shift[j] + self.sum[j] / self.n as f64
    }

    /// Centered cross-product `sum (a - mean_a)(b - mean_b)`; index `p` is the target.
    pub fn centered(&self, a: usize, b: usize) -> f64 {
        let q = self.p + 1;
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        self.sxx[i * q + j] - self.sum[i] * self.sum[j] / self.n as f64
    }

    /// Standardized Gram system over the selected predictor columns.
    pub fn gram(&self, cols: &[usize]) -> Gram {
        let n = self.n as f64;
        let k = cols.len();
        let y = self.p;
        let mut mean = Vec::with_capacity(k);
        let mut sd = Vec::with_capacity(k);
        let mut zero = Vec::with_capacity(k);
        for &j in cols {
            let m = self.mean(j);
            let var = self.centered(j, j) / (n - 1.0);
            let scale = m.abs().max(1.0);
            mean.push(m);
            if var > ZERO_VAR_REL * scale * scale {
                sd.push(var.sqrt());
                zero.push(false);
            } else {
                sd.push(0.0);
                zero.push(true);
            }
        }
        let mut g = vec![0.0; k * k];
        let mut c = vec![0.0; k];
        for a in 0..k {
            if zero[a] {
                continue;
            }
            c[a] = self.centered(cols[a], y) / (sd[a] * n);
            for b in a..k {
                if zero[b] {
                    continue;
                }
                let v = self.centered(cols[a], cols[b]) / (sd[a] * sd[b] * n);
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
        }
        Gram {
            k,
            n: self.n,
            g,
            c,
            yy: self.centered(y, y) / n,
            y_mean: self.mean(y),
            mean,
            sd,
            zero,
        }
    }
}

/// Quadratic form of a least-squares problem in standardized coordinates:
/// `0.5 * (yy - 2 c'b + b'G b)` equals `(1/2n) ||y_c - Z b||^2`.
#[derive(Debug, Clone)]
pub struct Gram {
    pub k: usize,
    pub n: usize,
    /// `Z'Z / n`, row-major `k x k`.
    pub g: Vec<f64>,
    /// `Z'y_c / n`.
    pub c: Vec<f64>,
    /// `y_c'y_c / n`.
    pub yy: f64,
    pub y_mean: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub zero: Vec<bool>,
}

impl Gram {
    /// Uncentered, unscaled system `X'X/n`, `X'y/n` with no intercept. Used
    /// where the design is already in the desired coordinates.
    pub fn raw(x: &[f64], y: &[f64], k: usize) -> Gram {
        let n = y.len();
        let mut g = vec![0.0; k * k];
        let mut c = vec![0.0; k];
        for (i, yi) in y.iter().enumerate() {
            let row = &x[i * k..(i + 1) * k];
            for a in 0..k {
                c[a] += row[a] * yi;
                for b in a..k {
                    g[a * k + b] += row[a] * row[b];
                }
            }
        }
        let nf = n as f64;
        for a in 0..k {
            c[a] /= nf;
            for b in a..k {
                g[a * k + b] /= nf;
                g[b * k + a] = g[a * k + b];
            }
        }
        Gram {
            k,
            n,
            g,
            c,
            yy: y.iter().map(|v| v * v).sum::<f64>() / nf,
            y_mean: 0.0,
            mean: vec![0.0; k],
            sd: vec![1.0; k],
            zero: vec![false; k],
        }
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.g[a * self.k + b]
    }

    /// Maps standardized coefficients to raw-scale intercept and slopes.
    pub fn to_raw(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let mut intercept = self.y_mean;
        let mut raw = Vec::with_capacity(self.k);
        for j in 0..self.k {
            if self.zero[j] || beta[j] == 0.0 {
                raw.push(0.0);
                continue;
            }
            let r = beta[j] / self.sd[j];
            intercept -= r * self.mean[j];
            raw.push(r);
        }
        (intercept, raw)
    }

    /// `0.5 * (yy - 2 c'b + b'Gb)`.
    pub fn half_mse(&self, beta: &[f64]) -> f64 {
        let k = self.k;
        let mut quad = 0.0;
        let mut lin = 0.0;
        for a in 0..k {
            if beta[a] == 0.0 {
                continue;
            }
            lin += self.c[a] * beta[a];
            let row = &self.g[a * k..(a + 1) * k];
            let mut s = 0.0;
            for b in 0..k {
                s += row[b] * beta[b];
            }
            quad += beta[a] * s;
        }
        0.5 * (self.yy - 2.0 * lin + quad)
    }

    /// Least-squares solution; minimum-norm (in standardized coordinates)
    /// when the system is rank deficient. The flag reports deficiency.
    pub fn solve_ols(&self) -> (Vec<f64>, bool) {
        let active: Vec<usize> = (0..self.k).filter(|&j| !self.zero[j]).collect();
        let m = active.len();
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for (r, &i) in active.iter().enumerate() {
            b[r] = self.c[i];
            for (s, &j) in active.iter().enumerate() {
                a[r * m + s] = self.at(i, j);
            }
        }
        let (sol, deficient) = solve_symmetric(&a, &b, m);
        let mut beta = vec![0.0; self.k];
        for (r, &i) in active.iter().enumerate() {
            beta[i] = sol[r];
        }
        (beta, deficient)
    }
}

/// Relative pivot below which a symmetric system is treated as singular.
const PIVOT_TOL: f64 = 1e-10;

/// In-place Cholesky of a row-major `m x m` SPD matrix (lower factor).
/// Returns `None` when a pivot falls below `PIVOT_TOL` times its diagonal.
pub fn cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    for j in 0..m {
        let mut d = l[j * m + j];
        for k in 0..j {
            d -= l[j * m + k] * l[j * m + k];
        }
        let diag = a[j * m + j];
        if !(d > PIVOT_TOL * diag.abs().max(f64::MIN_POSITIVE)) {
            return None;
        }
        let d = d.sqrt();
        l[j * m + j] = d;
        for i in (j + 1)..m {
            let mut s = l[i * m + j];
            let (ri, rj) = (i * m, j * m);
            for k in 0..j {
                s -= l[ri + k] * l[rj + k];
            }
            l[i * m + j] = s / d;
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            l[i * m + j] = 0.0;
        }
    }
    Some(l)
}

pub fn cholesky_solve(l: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..m {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * m + k] * z[k];
        }
        z[i] = s / l[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = z[i];
        for k in (i + 1)..m {
            s -= l[k * m + i] * z[k];
        }
        z[i] = s / l[i * m + i];
    }
    z
}

/// Minimum-norm solution of a symmetric PSD system via eigendecomposition.
pub fn pinv_solve(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let mat = DMatrix::from_row_slice(m, m, a);
    let eig = SymmetricEigen::new(mat);
    let max = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = max * 1e-10 * m as f64;
    let rhs = DVector::from_column_slice(b);
    let proj = eig.eigenvectors.transpose() * rhs;
    let scaled = DVector::from_iterator(
        m,
        proj.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(p, l)| if *l > tol { p / l } else { 0.0 }),
    );
    let sol = &eig.eigenvectors * scaled;
    sol.iter().copied().collect()
}

/// Cholesky solve with a pseudoinverse fallback.
pub fn solve_symmetric(a: &[f64], b: &[f64], m: usize) -> (Vec<f64>, bool) {
    match cholesky(a, m) {
        Some(l) => (cholesky_solve(&l, b, m), false),
        None => (pinv_solve(a, b, m), true),
    }
}

/// Largest eigenvalue of a small symmetric PSD block by power iteration.
pub fn max_eigenvalue(a: &[f64], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut w = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                w[i] += a[i * m + j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
        if (next - lambda).abs() <= 1e-12 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // power iteration approaches from below; pad slightly so step sizes stay safe
    lambda * (1.0 + 1e-9)
}
