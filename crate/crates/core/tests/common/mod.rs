#![allow(dead_code)]

use hdcombo::data::week_range;
use hdcombo::{EpiWeek, LagDesign, Series, SeriesPanel};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random panel with `nd` diseases and `ne` covariates of `len` weeks.
pub fn panel(seed: u64, nd: usize, ne: usize, len: usize) -> SeriesPanel {
    let mut rng = hdcombo::seed::rng_from(seed);
    let weeks = week_range(EpiWeek::new(2012, 50).unwrap(), len);
    let diseases = (0..nd)
        .map(|d| {
            let level = rng.random_range(20.0..500.0);
            let values = (0..len).map(|_| level + rng.random_range(0.0..level)).collect();
            Series::new(format!("d{d}"), values)
        })
        .collect();
    let env = (0..ne)
        .map(|e| {
            let values = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            Series::new(format!("e{e}"), values)
        })
        .collect();
    SeriesPanel::new(weeks, diseases, env).unwrap()
}

/// Random `n x p` design with standard normal predictors.
pub fn design(seed: u64, n: usize, p: usize) -> LagDesign {
    let mut rng = hdcombo::seed::rng_from(seed);
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let x: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| x[i * p] * 2.0 - x[i * p + p - 1] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    LagDesign::from_matrix(&names, x, y).unwrap()
}

pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}
