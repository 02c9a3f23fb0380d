//! Synthetic weekly panels with a known data-generating process.
//!
//! Disease counts are `baseline + seasonal + scale * u` passed through a
//! softplus floor at 1, where the latent vector `u` follows a stationary
//! VAR(1) driven by lagged standardized environmental series.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{week_range, EpiWeek, Series, SeriesPanel};
use crate::error::{Error, Result};
use crate::models::ModelId;
use crate::seed::{derived_rng, rng_from};

/// Weekly means of the 16 admission categories.
const DISEASES: [(&str, f64); 16] = [
    ("cardiovascular", 842.0),
    ("chronic_respiratory", 587.0),
    ("diabetes", 71.0),
    ("digestive", 1297.0),
    ("endocrine", 279.0),
    ("health_services", 98.0),
    ("genitourinary", 638.0),
    ("ill_defined", 3425.0),
    ("infectious", 1302.0),
    ("malignant_neoplasms", 78.0),
    ("musculoskeletal", 1042.0),
    ("neurological", 799.0),
    ("oral", 69.0),
    ("other_neoplasms", 17.0),
    ("respiratory_infection", 2512.0),
    ("skin", 714.0),
];

/// Name, level and scale of the 12 environmental covariates.
const ENVIRONMENT: [(&str, f64, f64); 12] = [
    ("temp_max", 304.9, 1.0),
    ("temp_mean", 301.0, 0.86),
    ("temp_min", 298.1, 0.8),
    ("rel_humidity", 79.5, 3.9),
    ("abs_humidity", 21.3, 0.88),
    ("precipitation", 0.005, 0.006),
    ("pm25", 18.4, 6.0),
    ("pm10", 30.0, 8.0),
    ("o3", 24.3, 8.0),
    ("no2", 23.9, 5.7),
    ("so2", 10.8, 5.0),
    ("co", 0.54, 0.13),
];

/// Indices of the haze-prone series in `ENVIRONMENT`.
const HAZE: [usize; 2] = [6, 7];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spillover {
    pub target: usize,
    pub source: usize,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvEffect {
    pub disease: usize,
    pub env: usize,
    pub lag: usize,
    pub coef: f64,
}

/// Full parameterization of a synthetic panel; generation is a pure function
/// of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DGPSpec {
    pub seed: u64,
    pub n_weeks: usize,
    pub start: EpiWeek,
    /// Weeks simulated and discarded before `start`.
    pub burn_in: usize,
    pub disease_names: Vec<String>,
    pub baseline: Vec<f64>,
    pub seasonal_amplitude: Vec<f64>,
    pub season_period: f64,
    /// Count units per latent unit.
    pub scale: Vec<f64>,
    pub ar: Vec<f64>,
    pub noise_sd: Vec<f64>,
    pub spillover: Vec<Spillover>,
    pub env_names: Vec<String>,
    pub env_level: Vec<f64>,
    pub env_scale: Vec<f64>,
    pub env_ar: Vec<f64>,
    pub env_seasonal: Vec<f64>,
    /// Environmental series with occasional multi-week pollution spikes.
    pub haze: Vec<usize>,
    /// Weekly probability that a haze episode starts.
    pub haze_rate: f64,
    pub env_effects: Vec<EnvEffect>,
}

impl DGPSpec {
    /// 16 diseases and 12 covariates with randomized dynamics drawn from `seed`.
    pub fn desk(seed: u64, n_weeks: usize) -> Self {
        let mut rng = derived_rng(seed, &["dgp-parameters"]);
        let nd = DISEASES.len();
        let ne = ENVIRONMENT.len();
        let baseline: Vec<f64> = DISEASES.iter().map(|d| d.1).collect();
        let mut spillover = Vec::new();
        for target in 0..nd {
            let source = (target + 1 + rng.random_range(0..nd - 1)) % nd;
            spillover.push(Spillover {
                target,
                source,
                coef: rng.random_range(-0.15..0.15),
            });
        }
        let mut env_effects = Vec::new();
        for disease in 0..nd {
            for _ in 0..rng.random_range(1..=3) {
                env_effects.push(EnvEffect {
                    disease,
                    env: rng.random_range(0..ne),
                    lag: rng.random_range(0..8),
                    coef: rng.random_range(-0.4..0.4),
                });
            }
        }
        Self {
            seed,
            n_weeks,
            start: EpiWeek { year: 2009, week: 1 },
            burn_in: 104,
            disease_names: DISEASES.iter().map(|d| d.0.to_string()).collect(),
            seasonal_amplitude: baseline.iter().map(|b| b * rng.random_range(0.02..0.1)).collect(),
            scale: baseline.iter().map(|b| b * 0.05).collect(),
            baseline,
            season_period: 52.0,
            ar: (0..nd).map(|_| rng.random_range(0.3..0.85)).collect(),
            noise_sd: vec![1.0; nd],
            spillover,
            env_names: ENVIRONMENT.iter().map(|e| e.0.to_string()).collect(),
            env_level: ENVIRONMENT.iter().map(|e| e.1).collect(),
            env_scale: ENVIRONMENT.iter().map(|e| e.2).collect(),
            env_ar: (0..ne).map(|_| rng.random_range(0.4..0.9)).collect(),
            env_seasonal: (0..ne).map(|_| rng.random_range(0.0..1.0)).collect(),
            haze: HAZE.to_vec(),
            haze_rate: 0.015,
            env_effects,
        }
    }

    /// The same process restricted to the first `n` diseases.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        let n = n.min(self.n_diseases());
        out.disease_names.truncate(n);
        out.baseline.truncate(n);
        out.seasonal_amplitude.truncate(n);
        out.scale.truncate(n);
        out.ar.truncate(n);
        out.noise_sd.truncate(n);
        out.spillover.retain(|s| s.target < n && s.source < n);
        out.env_effects.retain(|e| e.disease < n);
        out
    }

    pub fn n_diseases(&self) -> usize {
        self.disease_names.len()
    }

    pub fn n_env(&self) -> usize {
        self.env_names.len()
    }

    /// Latent VAR(1) transition matrix.
    pub fn transition(&self) -> DMatrix<f64> {
        let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.ar));
        for s in &self.spillover {
            a[(s.target, s.source)] += s.coef;
        }
        a
    }

    pub fn spectral_radius(&self) -> f64 {
        self.transition()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let nd = self.n_diseases();
        let ne = self.n_env();
        let per_disease = [
            self.baseline.len(),
            self.seasonal_amplitude.len(),
            self.scale.len(),
            self.ar.len(),
            self.noise_sd.len(),
        ];
        let per_env = [
            self.env_level.len(),
            self.env_scale.len(),
            self.env_ar.len(),
            self.env_seasonal.len(),
        ];
        if let Some(bad) = per_disease.iter().find(|l| **l != nd) {
            return Err(Error::LengthMismatch { left: *bad, right: nd });
        }
        if let Some(bad) = per_env.iter().find(|l| **l != ne) {
            return Err(Error::LengthMismatch { left: *bad, right: ne });
        }
        let bad_index = self.spillover.iter().any(|s| s.target >= nd || s.source >= nd)
            || self.env_effects.iter().any(|e| e.disease >= nd || e.env >= ne)
            || self.haze.iter().any(|h| *h >= ne);
        if bad_index || nd == 0 || self.n_weeks == 0 || self.season_period <= 0.0 {
            return Err(Error::InvalidConfig("inconsistent synthetic panel specification".into()));
        }
        if self.env_ar.iter().any(|a| a.abs() >= 1.0) {
            return Err(Error::NonStationarySpec(
                self.env_ar.iter().map(|a| a.abs()).fold(0.0, f64::max),
            ));
        }
        let rho = self.spectral_radius();
        if !(rho < 1.0) {
            return Err(Error::NonStationarySpec(rho));
        }
        Ok(())
    }
}

/// Smooth floor keeping counts at or above 1.
fn softplus_floor(v: f64) -> f64 {
    let z = v - 1.0;
    1.0 + if z > 30.0 { z } else { z.exp().ln_1p() }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standardized environmental paths (with burn-in) and observed values.
fn simulate_env(spec: &DGPSpec, rng: &mut ChaCha8Rng, total: usize) -> Vec<Vec<f64>> {
    let period = spec.season_period;
    let spike = Exp::new(0.4).expect("positive rate");
    (0..spec.n_env())
        .map(|e| {
            let a = spec.env_ar[e];
            let innov = (1.0 - a * a).sqrt();
            let phase = 2.0 * PI * e as f64 / spec.n_env() as f64;
            let mut state = 0.0;
            let mut haze_left = 0usize;
            let mut haze_size = 0.0;
            (0..total)
                .map(|t| {
                    state = a * state + innov * normal(rng);
                    let season = spec.env_seasonal[e] * (2.0 * PI * t as f64 / period + phase).sin();
                    let mut z = state + season;
                    if spec.haze.contains(&e) {
                        if haze_left == 0 && rng.random::<f64>() < spec.haze_rate {
                            haze_left = rng.random_range(3..=8);
                            haze_size = 2.0 + rng.sample(spike);
                        }
                        if haze_left > 0 {
                            z += haze_size;
                            haze_left -= 1;
                        }
                    }
                    z
                })
                .collect()
        })
        .collect()
}

/// Generates the panel described by `spec`.
pub fn generate_panel(spec: &DGPSpec) -> Result<SeriesPanel> {
    spec.validate()?;
    let nd = spec.n_diseases();
    let total = spec.burn_in + spec.n_weeks;
    let mut rng = rng_from(spec.seed);
    let z = simulate_env(spec, &mut rng, total);
    let a = spec.transition();
    let mut u = vec![0.0; nd];
    let mut counts = vec![Vec::with_capacity(spec.n_weeks); nd];
    for t in 0..total {
        let mut next: Vec<f64> = (0..nd)
            .map(|d| (0..nd).map(|s| a[(d, s)] * u[s]).sum::<f64>() + spec.noise_sd[d] * normal(&mut rng))
            .collect();
        for eff in &spec.env_effects {
            if t >= eff.lag {
                next[eff.disease] += eff.coef * z[eff.env][t - eff.lag];
            }
        }
        u = next;
        if t < spec.burn_in {
            continue;
        }
        for d in 0..nd {
            let season = spec.seasonal_amplitude[d]
                * (2.0 * PI * t as f64 / spec.season_period + d as f64).sin();
            counts[d].push(softplus_floor(spec.baseline[d] + season + spec.scale[d] * u[d]));
        }
    }
    let weeks = week_range(spec.start, spec.n_weeks);
    let diseases = spec
        .disease_names
        .iter()
        .zip(counts)
        .map(|(n, v)| Series::new(n.clone(), v))
        .collect();
    let env = (0..spec.n_env())
        .map(|e| {
            let values = z[e][spec.burn_in..]
                .iter()
                .map(|v| {
                    let x = spec.env_level[e] + spec.env_scale[e] * v;
                    // physical quantities that cannot go negative
                    if spec.env_level[e] > 0.0 { x.max(0.0) } else { x }
                })
                .collect();
            Series::new(spec.env_names[e].clone(), values)
        })
        .collect();
    SeriesPanel::new(weeks, diseases, env)
}

/// DGPs under which one registry member is the population-optimal forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Independent random walks: the naive forecast is optimal at h = 1.
    RandomWalk,
    /// Independent AR(1) series with no exogenous effects.
    PureAr1,
    /// Every exogenous series is a loading times one persistent factor.
    FactorDriven,
}

/// AR coefficient of the `PureAr1` oracle.
pub const ORACLE_AR: f64 = 0.6;

/// Panel for an oracle DGP (16 diseases, 12 covariates) and the model that is
/// optimal for the first disease.
pub fn generate_oracle_case(kind: OracleKind, seed: u64, n_weeks: usize) -> Result<(SeriesPanel, ModelId)> {
    let mut spec = DGPSpec::desk(seed, n_weeks);
    let nd = spec.n_diseases();
    spec.spillover.clear();
    spec.env_effects.clear();
    spec.seasonal_amplitude = vec![0.0; nd];
    match kind {
        OracleKind::PureAr1 => {
            spec.ar = vec![ORACLE_AR; nd];
            Ok((generate_panel(&spec)?, ModelId::ArA))
        }
        OracleKind::RandomWalk => {
            let mut rng = derived_rng(seed, &["oracle", "random_walk"]);
            let base = generate_panel(&spec)?;
            let weeks = base.weeks().to_vec();
            let diseases = spec
                .disease_names
                .iter()
                .enumerate()
                .map(|(d, name)| {
                    let step = spec.scale[d] * 0.5;
                    let mut level = spec.baseline[d] * 3.0;
                    let values = (0..n_weeks)
                        .map(|_| {
                            level += step * normal(&mut rng);
                            softplus_floor(level)
                        })
                        .collect();
                    Series::new(name.clone(), values)
                })
                .collect();
            Ok((SeriesPanel::new(weeks, diseases, base.env().to_vec())?, ModelId::Naive))
        }
        OracleKind::FactorDriven => {
            let mut rng = derived_rng(seed, &["oracle", "factor"]);
            let mut f = 0.0;
            let factor: Vec<f64> = (0..n_weeks)
                .map(|_| {
                    f = 0.995 * f + 0.1 * normal(&mut rng);
                    f
                })
                .collect();
            let weeks = week_range(spec.start, n_weeks);
            let mut noisy = |level: f64, loading: f64, tiny: f64| -> Vec<f64> {
                factor
                    .iter()
                    .map(|f| level + loading * f + tiny * normal(&mut rng))
                    .collect()
            };
            let mut diseases = Vec::with_capacity(nd);
            for (d, name) in spec.disease_names.iter().enumerate() {
                let loading = spec.baseline[d] * 0.1 * if d % 3 == 0 { -1.0 } else { 1.0 };
                let values = noisy(spec.baseline[d] * 2.0, loading, spec.baseline[d] * 1e-3);
                diseases.push(Series::new(name.clone(), values.into_iter().map(softplus_floor).collect()));
            }
            let env = (0..spec.n_env())
                .map(|e| {
                    let loading = spec.env_scale[e] * if e % 2 == 0 { 1.0 } else { -1.0 };
                    Series::new(spec.env_names[e].clone(), noisy(spec.env_level[e] * 10.0, loading, spec.env_scale[e] * 1e-3))
                })
                .collect();
            Ok((SeriesPanel::new(weeks, diseases, env)?, ModelId::Factor))
        }
    }
}
