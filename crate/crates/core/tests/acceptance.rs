//! One pass/fail line per acceptance criterion, written straight to stderr so
//! it shows up in captured test runs.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use hdcombo::combine::{
    bates_granger_path, combine_equal, combine_median, csr_candidate_count, enumerate_csr_candidates,
    equal_weights, BgMode, BgWindow, ForecastMatrix, Scheme,
};
use hdcombo::data::week_range;
use hdcombo::eval::{dm_test, nonequivalence_proportion, EvalWindow, TABLE_PAIRS};
use hdcombo::harness::{
    emit_reports, read_manifest, run_backtest, run_submodels, EngineSettings, InputSource, RunConfig, RunOutput,
    TuningMode,
};
use hdcombo::linalg::{CrossProducts, Gram};
use hdcombo::models::{
    adaptive_weights_from_ols, coordinate_descent, fit_factor_model, fit_penalized, group_members, CdOptions,
    ModelId, Penalty, PenaltyKind, PenaltySpec,
};
use hdcombo::synth::{generate_oracle_case, DGPSpec, OracleKind};
use hdcombo::{split_initial, EpiWeek, LagDesign, PredictorSpec, SeriesPanel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

fn report(n: u8, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2}: {verdict}  {}", detail.as_ref());
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn binomial_oracle(n: u64, k: u64) -> u64 {
    let fact = |m: u64| (1..=m).map(|v| v as u128).product::<u128>();
    (fact(n) / (fact(k) * fact(n - k))) as u64
}

#[test]
fn criterion_01_subset_combinatorics() {
    let t = Instant::now();
    let brute: HashSet<(Vec<usize>, Vec<usize>)> =
        (0..12).flat_map(|e| (0..15).map(move |c| (vec![e], vec![c]))).collect();
    let listed = enumerate_csr_candidates(12, 15, 1);
    let listed_set: HashSet<_> = listed.iter().cloned().collect();
    let p1 = listed.len() == 180 && listed_set == brute && csr_candidate_count(12, 15, 1) == 180;
    let p2 = csr_candidate_count(12, 15, 2) == 6930 && binomial_oracle(12, 2) * binomial_oracle(15, 2) == 6930;
    let p3 = csr_candidate_count(12, 15, 3) == 100_100 && binomial_oracle(12, 3) * binomial_oracle(15, 3) == 100_100;
    let secs = t.elapsed().as_secs_f64();
    let ok = p1 && p2 && p3 && secs < 1.0;
    report(1, ok, format!("counts 180/6930/100100 (p=1 enumerated, {secs:.3}s < 1s)"));
    assert!(ok);
}

/// Random 40x10 instance with an independent standardization.
struct Instance {
    design: LagDesign,
    z: DMatrix<f64>,
    yc: DVector<f64>,
    sd: Vec<f64>,
}

fn instance(seed: u64) -> Instance {
    let (n, p) = (40, 10);
    let mut rng = hdcombo::seed::rng_from(seed);
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let x: Vec<f64> = (0..n * p).map(|_| 3.0 + rng.sample::<f64, _>(StandardNormal) * (1.0 + (seed % 5) as f64)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.5 * x[i * p] - 0.7 * x[i * p + 3] + 0.2 * x[i * p + 7] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let xm = DMatrix::from_row_slice(n, p, &x);
    let mut sd = Vec::with_capacity(p);
    let mut z = xm.clone();
    for j in 0..p {
        let col = xm.column(j);
        let mean = col.mean();
        let s = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        sd.push(s);
        for i in 0..n {
            z[(i, j)] = (xm[(i, j)] - mean) / s;
        }
    }
    let ym = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ym));
    Instance {
        design: LagDesign::from_matrix(&names, x, y).unwrap(),
        z,
        yc,
        sd,
    }
}

/// `(Z'Z/n + 2 lambda I)^-1 Z'y/n` in standardized coordinates.
fn ridge_oracle(inst: &Instance, lambda: f64) -> Vec<f64> {
    let n = inst.z.nrows() as f64;
    let p = inst.z.ncols();
    let a = inst.z.transpose() * &inst.z / n + DMatrix::identity(p, p) * (2.0 * lambda);
    let b = inst.z.transpose() * &inst.yc / n;
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

fn gram(inst: &Instance) -> Gram {
    let cols: Vec<usize> = (0..inst.design.n_cols()).collect();
    CrossProducts::from_rows(&inst.design, 0..inst.design.n_rows()).gram(&cols)
}

#[test]
fn criterion_02_penalized_oracles() {
    let t = Instant::now();
    let mut worst_ridge = 0.0f64;
    let mut worst_lasso = 0.0f64;
    for seed in 0..50u64 {
        let inst = instance(seed);
        let lambda = 0.01 + 0.02 * seed as f64;
        let oracle = ridge_oracle(&inst, lambda);
        let spec = PenaltySpec::new(PenaltyKind::Ridge).with_lambdas(vec![lambda]).with_cd(CdOptions::tight());
        let fit = fit_penalized(&inst.design, 0..40, &spec).unwrap();
        let raw: Vec<f64> = oracle.iter().zip(&inst.sd).map(|(b, s)| b / s).collect();
        worst_ridge = worst_ridge.max(max_diff(&fit.model.coef, &raw));
        let cd = coordinate_descent(&gram(&inst), &Penalty::elastic(lambda, 0.0), None, &CdOptions::tight());
        worst_ridge = worst_ridge.max(max_diff(&cd.beta, &oracle));

        // orthonormal design: X'X / n = I
        let mut rng = hdcombo::seed::rng_from(1000 + seed);
        let a = DMatrix::from_fn(40, 10, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = a.qr().q() * 40f64.sqrt();
        let x: Vec<f64> = (0..40).flat_map(|i| (0..10).map(move |j| (i, j))).map(|(i, j)| q[(i, j)]).collect();
        let y: Vec<f64> = (0..40).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g = Gram::raw(&x, &y, 10);
        let xty: Vec<f64> = (0..10).map(|j| (0..40).map(|i| q[(i, j)] * y[i]).sum::<f64>() / 40.0).collect();
        let soft: Vec<f64> = xty.iter().map(|c| c.signum() * (c.abs() - lambda).max(0.0)).collect();
        let fit = coordinate_descent(&g, &Penalty::elastic(lambda, 1.0), None, &CdOptions::tight());
        worst_lasso = worst_lasso.max(max_diff(&fit.beta, &soft));
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = worst_ridge < 1e-6 && worst_lasso < 1e-6 && secs < 10.0;
    report(
        2,
        ok,
        format!("ridge max dev {worst_ridge:.1e}, lasso max dev {worst_lasso:.1e} (< 1e-6), {secs:.2}s < 10s"),
    );
    assert!(ok);
}

#[test]
fn criterion_03_limit_equivalences() {
    let opts = CdOptions::tight();
    let mut worst = [0.0f64; 3];
    for seed in 0..10u64 {
        let inst = instance(500 + seed);
        let g = gram(&inst);
        let lambda = 0.05;
        let fit = |kind: PenaltyKind, alphas: Option<Vec<f64>>| {
            let mut spec = PenaltySpec::new(kind).with_lambdas(vec![lambda]).with_cd(opts);
            if let Some(a) = alphas {
                spec = spec.with_alphas(a);
            }
            fit_penalized(&inst.design, 0..40, &spec).unwrap().model.coef
        };
        let enet1 = fit(PenaltyKind::ElasticNet, Some(vec![1.0]));
        worst[0] = worst[0].max(max_diff(&enet1, &fit(PenaltyKind::Lasso, None)));
        let enet0 = fit(PenaltyKind::ElasticNet, Some(vec![0.0]));
        worst[1] = worst[1].max(max_diff(&enet0, &fit(PenaltyKind::Ridge, None)));
        let cd0 = coordinate_descent(&g, &Penalty::elastic(lambda, 0.0), None, &opts);
        worst[1] = worst[1].max(max_diff(&cd0.beta, &ridge_oracle(&inst, lambda)));

        let ols: Vec<f64> = {
            let a = inst.z.transpose() * &inst.z;
            let b = inst.z.transpose() * &inst.yc;
            a.lu().solve(&b).unwrap().iter().copied().collect()
        };
        let w = adaptive_weights_from_ols(&ols);
        let groups = group_members(&[0, 0, 1, 1, 1, 2, 3, 3, 4, 4]);
        let tiny = 1e-11;
        let penalties = [
            Penalty::elastic(tiny, 0.0),
            Penalty::elastic(tiny, 1.0),
            Penalty { lambda: tiny, alpha: 1.0, weights: Some(&w), groups: None },
            Penalty { lambda: tiny, alpha: 0.5, weights: None, groups: Some(&groups) },
            Penalty::elastic(tiny, 0.5),
            Penalty { lambda: tiny, alpha: 0.5, weights: Some(&w), groups: None },
        ];
        for p in &penalties {
            let fit = coordinate_descent(&g, p, None, &opts);
            worst[2] = worst[2].max(max_diff(&fit.beta, &ols));
        }
    }
    let ok = worst.iter().all(|d| *d < 1e-6);
    report(
        3,
        ok,
        format!(
            "ENET(a=1)-LASSO {:.1e}, ENET(a=0)-ridge {:.1e}, lambda->0 vs OLS (6 penalties) {:.1e} (< 1e-6)",
            worst[0], worst[1], worst[2]
        ),
    );
    assert!(ok);
}

/// 522-week synthetic run shared by criteria 4 and 5.
fn long_run() -> &'static (RunConfig, RunOutput) {
    static RUN: OnceLock<(RunConfig, RunOutput)> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = RunConfig {
            input: InputSource::Synthetic(DGPSpec::desk(7, 522).truncated(4)),
            horizons: vec![1, 4],
            rf_trees: 20,
            gbm_trees: 20,
            ..RunConfig::default()
        };
        let out = run_backtest(&cfg).unwrap();
        (cfg, out)
    })
}

#[test]
fn criterion_04_equal_weight_convexity_bound() {
    let (_, out) = long_run();
    let mut checked = 0;
    let mut violations = Vec::new();
    for pair in &out.pairs {
        for window in [EvalWindow::FullForecastSet, EvalWindow::Eval30] {
            let of = |id: &str| {
                out.metrics
                    .iter()
                    .find(|m| m.disease == pair.disease && m.horizon == pair.horizon && m.model == id && m.eval_window == window)
                    .map(|m| m.mape)
                    .unwrap()
            };
            let members = ModelId::ALL.iter().map(|m| of(m.as_str())).sum::<f64>() / 16.0;
            let p1 = of("P1");
            checked += 1;
            if !(p1 <= members) {
                violations.push(format!("{} h{} {window}: {p1} > {members}", pair.disease, pair.horizon));
            }
        }
    }
    let ok = violations.is_empty() && checked == out.pairs.len() * 2;
    report(4, ok, format!("MAPE(P1) <= mean member MAPE in {checked} (pair, window) cells, 522 weeks {violations:?}"));
    assert!(ok);
}

#[test]
fn criterion_05_weight_invariants() {
    let (_, out) = long_run();
    let mut worst_bg = 0.0f64;
    let mut negative = false;
    let mut worst_p7 = 0.0f64;
    let mut p7_fits = 0;
    let mut p1_dev = 0.0f64;
    for pair in &out.pairs {
        for (_, path) in &pair.bg_weights {
            for w in path {
                negative |= w.iter().any(|v| *v < 0.0);
                worst_bg = worst_bg.max((w.iter().sum::<f64>() - 1.0).abs());
            }
        }
        for c in pair.manifest.combiners.iter().filter(|c| c.scheme == Scheme::P7) {
            p7_fits += 1;
            worst_p7 = worst_p7.max((c.weights.iter().sum::<f64>() - 1.0).abs());
        }
        let m = pair.matrix().unwrap();
        let p1 = pair.scheme(Scheme::P1).unwrap();
        let w = equal_weights(16);
        for r in 0..m.n_rows() {
            let direct: f64 = w.iter().zip(m.row(r)).map(|(w, f)| w * f).sum();
            p1_dev = p1_dev.max((direct - p1[r]).abs() / p1[r].abs());
        }
    }
    let uniform = equal_weights(16).iter().all(|w| *w == 1.0 / 16.0);
    let ok = !negative && worst_bg <= 1e-12 && p7_fits == out.pairs.len() && worst_p7 <= 1e-10 && uniform && p1_dev < 1e-12;
    report(
        5,
        ok,
        format!(
            "P3/P4 |sum-1| {worst_bg:.1e} (<= 1e-12, none negative), P7 |sum-1| {worst_p7:.1e} over {p7_fits} fits (<= 1e-10), P1 = 1/16"
        ),
    );
    assert!(ok);
}

/// Textbook DM with a rectangular HAC window and the small-sample correction.
fn dm_oracle(a: &[f64], b: &[f64], h: usize) -> f64 {
    let n = a.len();
    let d: Vec<f64> = (0..n).map(|t| a[t].powi(2) - b[t].powi(2)).collect();
    let dbar = d.iter().sum::<f64>() / n as f64;
    let mut acov = vec![0.0; h];
    for (k, g) in acov.iter_mut().enumerate() {
        for t in k..n {
            *g += (d[t] - dbar) * (d[t - k] - dbar);
        }
        *g /= n as f64;
    }
    let mut lrv = acov[0];
    for g in &acov[1..] {
        lrv += 2.0 * g;
    }
    if lrv <= 0.0 {
        lrv = acov[0];
    }
    let (nf, hf) = (n as f64, h as f64);
    let hln = ((nf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / nf) / nf).sqrt();
    hln * dbar / (lrv / nf).sqrt()
}

#[test]
fn criterion_06_dm_oracle() {
    let mut rng = hdcombo::seed::rng_from(66);
    let mut worst = 0.0f64;
    let mut antisymmetric = true;
    for k in 0..100 {
        let n = 20 + k % 60;
        let h = 1 + k % 12;
        let sa = 0.5 + (k % 7) as f64 * 0.3;
        let a: Vec<f64> = (0..n).map(|_| sa * rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let ab = dm_test(&a, &b, h).unwrap();
        let ba = dm_test(&b, &a, h).unwrap();
        worst = worst.max((ab.statistic - dm_oracle(&a, &b, h)).abs());
        antisymmetric &= ab.statistic == -ba.statistic;
    }
    let ok = worst < 1e-10 && antisymmetric;
    report(6, ok, format!("max |DM - oracle| {worst:.1e} (< 1e-10) on 100 pairs, antisymmetry exact: {antisymmetric}"));
    assert!(ok);
}

#[test]
fn criterion_07_nonequivalence_table() {
    let t = Instant::now();
    let mut rng = hdcombo::seed::rng_from(77);
    let n = 80;
    let weeks = week_range(EpiWeek::new(2016, 1).unwrap(), n);
    let mut proportions = Vec::new();
    let mut pair_counts = Vec::new();
    let mut cells = Vec::new();
    for d in 0..4 {
        for h in [1, 4, 8, 12] {
            let truth: Vec<f64> = (0..n).map(|i| 500.0 + 50.0 * (i as f64 / 8.0).sin() + d as f64).collect();
            let sds: Vec<f64> = (0..16).map(|j| 10.0 + 4.0 * j as f64).collect();
            let mut forecasts = Vec::with_capacity(n * 16);
            for y in &truth {
                forecasts.extend(sds.iter().map(|s| y + s * rng.sample::<f64, _>(StandardNormal)));
            }
            let m = ForecastMatrix::new(ModelId::ALL.to_vec(), forecasts, truth.clone(), weeks.clone()).unwrap();
            let p3 = bates_granger_path(&m, h, BgWindow::Recent(1), BgMode::Feasible);
            let p4 = bates_granger_path(&m, h, BgWindow::Expanding, BgMode::Feasible);
            let combos: Vec<(Scheme, Vec<f64>)> = vec![
                (Scheme::P1, (0..n).map(|r| combine_equal(m.row(r)).unwrap()).collect()),
                (Scheme::P2, (0..n).map(|r| combine_median(m.row(r)).unwrap()).collect()),
                (Scheme::P3, (0..n).map(|r| p3[r].iter().zip(m.row(r)).map(|(w, f)| w * f).sum()).collect()),
                (Scheme::P4, (0..n).map(|r| p4[r].iter().zip(m.row(r)).map(|(w, f)| w * f).sum()).collect()),
            ];
            let err = |f: &[f64]| truth.iter().zip(f).map(|(y, f)| y - f).collect::<Vec<f64>>();
            let model_errors: Vec<(ModelId, Vec<f64>)> =
                ModelId::ALL.iter().enumerate().map(|(j, id)| (*id, err(&m.column(j)))).collect();
            let combo_errors: Vec<(Scheme, Vec<f64>)> = combos.iter().map(|(s, f)| (*s, err(f))).collect();
            let mv: Vec<(ModelId, &[f64])> = model_errors.iter().map(|(i, e)| (*i, e.as_slice())).collect();
            let cv: Vec<(Scheme, &[f64])> = combo_errors.iter().map(|(s, e)| (*s, e.as_slice())).collect();
            let r = nonequivalence_proportion(&mv, &cv, h).unwrap();
            pair_counts.push(r.pairs);
            proportions.push(r.proportion);
            cells.push(hdcombo::harness::DmCell { disease: format!("d{d}"), horizon: h, proportion: Some(r.proportion) });
        }
    }
    let mut buf = Vec::new();
    hdcombo::harness::write_dm_table(&cells, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let shape = text.lines().count() == 5 && text.lines().all(|l| l.split(',').count() == 5);
    let mean = proportions.iter().sum::<f64>() / proportions.len() as f64;
    let secs = t.elapsed().as_secs_f64();
    let ok = pair_counts.iter().all(|c| *c == TABLE_PAIRS && *c == 64) && mean > 0.5 && shape && secs < 300.0;
    report(7, ok, format!("64 pairs per cell, mean proportion {mean:.3} > 0.5 over 4x4 cells, {secs:.1}s < 300s"));
    assert!(ok);
}

#[test]
fn criterion_08_oracle_concentration() {
    let (panel, optimal) = generate_oracle_case(OracleKind::RandomWalk, 8, 522).unwrap();
    assert_eq!(optimal, ModelId::Naive);
    let name = panel.disease_names()[0].clone();
    let design = LagDesign::build(&panel, &name, 1, PredictorSpec::C, 8).unwrap();
    let split = split_initial(&design, 0.7).unwrap();
    let settings = EngineSettings {
        disease: &name,
        models: &ModelId::ALL,
        subset_schemes: &[],
        run_seed: 8,
        rf_trees: 50,
        gbm_trees: 50,
        knn_k: 5,
        tuning: TuningMode::FirstStep,
        pca: None,
    };
    let run = run_submodels(&design, &split, &settings).unwrap();
    let actuals: Vec<f64> = split.forecast_set().map(|r| design.target(r)).collect();
    let weeks: Vec<EpiWeek> = split.forecast_set().map(|r| design.target_week(r)).collect();
    let forecasts: Vec<f64> = (0..actuals.len()).flat_map(|s| run.forecasts.iter().map(move |f| f[s])).collect();
    let m = ForecastMatrix::new(run.models.clone(), forecasts, actuals, weeks).unwrap();
    let path = bates_granger_path(&m, 1, BgWindow::Expanding, BgMode::Feasible);
    let naive = run.models.iter().position(|id| *id == ModelId::Naive).unwrap();
    let w_naive = path.last().unwrap()[naive];

    let (fpanel, fopt) = generate_oracle_case(OracleKind::FactorDriven, 8, 522).unwrap();
    assert_eq!(fopt, ModelId::Factor);
    let fname = fpanel.disease_names()[0].clone();
    let fdesign = LagDesign::build(&fpanel, &fname, 1, PredictorSpec::C, 8).unwrap();
    let ftrain = split_initial(&fdesign, 0.7).unwrap().train();
    let (basis, _) = fit_factor_model(&fdesign, ftrain).unwrap();
    let ev = basis.explained_variance_ratio[0];

    let ok = w_naive > 1.0 / 16.0 && basis.r == 1 && ev >= 0.85;
    report(
        8,
        ok,
        format!("random_walk: final P4 weight on Naive {w_naive:.4} > 0.0625; factor_driven: R = {}, explained variance {ev:.4} >= 0.85", basis.r),
    );
    assert!(ok);
}

const SENTINEL: f64 = 1e9;

fn csv_config(path: &Path) -> RunConfig {
    RunConfig {
        input: InputSource::Csv(path.to_path_buf()),
        horizons: vec![1, 3],
        rf_trees: 10,
        gbm_trees: 20,
        ..RunConfig::default()
    }
}

fn report_files(dir: &Path) -> BTreeMap<&'static str, Vec<u8>> {
    ["forecasts.csv", "metrics.csv", "metrics.json", "dm_table.csv", "weights.csv"]
        .into_iter()
        .map(|f| (f, std::fs::read(dir.join(f)).unwrap()))
        .collect()
}

#[test]
fn criterion_09_no_look_ahead_and_rerun_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let panel = hdcombo::synth::generate_panel(&DGPSpec::desk(9, 200).truncated(4)).unwrap();
    let cut = panel.len() - 10;
    let mut poisoned = panel.clone();
    for d in 0..poisoned.diseases().len() {
        poisoned.disease_values_mut(d)[cut + 1..].fill(SENTINEL);
    }
    for e in 0..poisoned.env().len() {
        poisoned.env_values_mut(e)[cut + 1..].fill(SENTINEL);
    }
    let (clean_csv, poisoned_csv) = (dir.path().join("clean.csv"), dir.path().join("poisoned.csv"));
    panel.write_csv_path(&clean_csv).unwrap();
    poisoned.write_csv_path(&poisoned_csv).unwrap();

    let clean = run_backtest(&csv_config(&clean_csv)).unwrap();
    let dirty = run_backtest(&csv_config(&poisoned_csv)).unwrap();
    let week_index = |w: EpiWeek| panel.weeks().iter().position(|x| *x == w).unwrap();
    let mut compared = 0;
    let mut leaked = Vec::new();
    let mut schemes_seen = HashSet::new();
    let dirty_by_key: std::collections::HashMap<_, _> = dirty
        .store
        .records()
        .iter()
        .map(|r| ((r.disease.clone(), r.horizon, r.model_id.clone(), r.target_week), r.forecast))
        .collect();
    for r in clean.store.records() {
        let origin = week_index(r.target_week) - r.horizon;
        if origin > cut {
            continue;
        }
        compared += 1;
        schemes_seen.insert(r.model_id.clone());
        let other = dirty_by_key[&(r.disease.clone(), r.horizon, r.model_id.clone(), r.target_week)];
        if other != r.forecast {
            leaked.push(format!("{} h{} {} {}", r.disease, r.horizon, r.model_id, r.target_week));
        }
    }
    let poison_visible = clean.store.records().len() != compared;

    let a_dir = dir.path().join("a");
    let b_dir = dir.path().join("b");
    emit_reports(&a_dir, &clean.store, &clean.manifest).unwrap();
    let manifest = read_manifest(a_dir.join("manifest.json")).unwrap();
    let rerun = run_backtest(&manifest.config).unwrap();
    emit_reports(&b_dir, &rerun.store, &rerun.manifest).unwrap();
    let identical = report_files(&a_dir) == report_files(&b_dir)
        && rerun.manifest.pairs == manifest.pairs
        && rerun.manifest.config_hash == manifest.config_hash;

    let ok = leaked.is_empty() && compared > 0 && schemes_seen.len() == 31 && poison_visible && identical;
    report(
        9,
        ok,
        format!(
            "{compared} forecasts with origin before the sentinel unchanged across {} series (leaks: {}); rerun from manifest byte-identical: {identical}",
            schemes_seen.len(),
            leaked.len()
        ),
    );
    assert!(ok, "{leaked:?}");
}

/// Wall-clock budget of the desk run.
const DESK_BUDGET_SECS: f64 = 1800.0;

fn desk_config(n_weeks: usize, trees: usize) -> RunConfig {
    RunConfig {
        input: InputSource::Synthetic(DGPSpec::desk(2024, n_weeks)),
        rf_trees: trees,
        gbm_trees: trees,
        ..RunConfig::default()
    }
}

/// Checks the five report files of a 16-disease, 12-horizon run.
fn check_desk_outputs(dir: &Path, out: &RunOutput) -> Result<(), String> {
    for f in ["forecasts.csv", "metrics.csv", "dm_table.csv", "weights.csv", "manifest.json"] {
        if !dir.join(f).is_file() {
            return Err(format!("missing {f}"));
        }
    }
    let table = std::fs::read_to_string(dir.join("dm_table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split(',').collect()).collect();
    if rows.len() != 17 || rows.iter().any(|r| r.len() != 13) || rows[1..].iter().any(|r| r[1..].iter().any(|c| c.is_empty())) {
        return Err("dm_table.csv is not 16 x 12".into());
    }
    if out.pairs.len() != 192 {
        return Err(format!("{} pairs", out.pairs.len()));
    }
    for pair in &out.pairs {
        let ids = out.store.model_ids(&pair.disease, pair.horizon);
        let submodels = ids.iter().filter(|i| i.parse::<Scheme>().is_err()).count();
        if submodels != 16 || ids.len() - submodels != 15 {
            return Err(format!("{} h{}: {} ids", pair.disease, pair.horizon, ids.len()));
        }
    }
    Ok(())
}

#[test]
fn criterion_10_desk_run() {
    // shape on the full 16 x 12 grid with a short panel and small forests
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_config(170, 10);
    let out = run_backtest(&cfg).unwrap();
    emit_reports(dir.path(), &out.store, &out.manifest).unwrap();
    let shape = check_desk_outputs(dir.path(), &out);

    // cost of one full-size pair: 522 weeks, 224 predictors, 200 trees
    let panel: SeriesPanel = desk_config(522, 200).load_panel().unwrap();
    let name = panel.disease_names()[0].clone();
    let design = LagDesign::build(&panel, &name, 1, PredictorSpec::C, 8).unwrap();
    let split = split_initial(&design, 0.7).unwrap();
    let subset = Scheme::all(&[1, 2, 3]).into_iter().filter(|s| s.uses_predictors()).collect::<Vec<_>>();
    let settings = EngineSettings {
        disease: &name,
        models: &ModelId::ALL,
        subset_schemes: &subset,
        run_seed: 2024,
        rf_trees: 200,
        gbm_trees: 200,
        knn_k: 5,
        tuning: TuningMode::FirstStep,
        pca: None,
    };
    let t = Instant::now();
    run_submodels(&design, &split, &settings).unwrap();
    let per_pair = t.elapsed().as_secs_f64();
    let threads = rayon::current_num_threads();
    let projected = per_pair * 192.0 / threads as f64;
    let needed = (per_pair * 192.0 / DESK_BUDGET_SECS).ceil();
    let ok = shape.is_ok() && projected < DESK_BUDGET_SECS;
    report(
        10,
        ok,
        format!(
            "outputs {}; one full pair {per_pair:.0}s -> projected {:.1} min for 192 pairs on {threads} thread(s) (budget 30 min, needs >= {needed} threads)",
            shape.as_ref().map_or_else(|e| e.clone(), |_| "16x12 OK".into()),
            projected / 60.0
        ),
    );
    assert!(shape.is_ok(), "{shape:?}");
}

/// The real desk run. Slow; run with `--ignored` on the target machine.
#[test]
#[ignore]
fn criterion_10_full_desk_run_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let out = run_backtest(&desk_config(522, 200)).unwrap();
    emit_reports(dir.path(), &out.store, &out.manifest).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let shape = check_desk_outputs(dir.path(), &out);
    let ok = shape.is_ok() && secs < DESK_BUDGET_SECS;
    report(10, ok, format!("full desk run {:.1} min on {} thread(s) (budget 30 min)", secs / 60.0, rayon::current_num_threads()));
    assert!(ok, "{shape:?}");
}
