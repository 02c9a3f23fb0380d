mod common;

use hdcombo::linalg::{CrossProducts, Gram};
use hdcombo::models::{
    coordinate_descent, fit_gbm, fit_penalized, PenaltyKind, PenaltySpec, fit_random_forest, ridge_solve, CdOptions, ForestParams, GbmParams, Penalty,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gram_of(seed: u64, n: usize, p: usize) -> Gram {
    let d = common::design(seed, n, p);
    let cols: Vec<usize> = (0..p).collect();
    CrossProducts::from_rows(&d, 0..n).gram(&cols)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tree_ensembles_stay_inside_the_target_range(seed in common::seeds(), far in -50.0f64..50.0) {
        let d = common::design(seed, 60, 6);
        let (lo, hi) = d.targets().iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
        let rf = fit_random_forest(&d, 0..60, &ForestParams { n_trees: 15, seed, ..ForestParams::default() }).unwrap();
        let gx = fit_gbm(&d, 0..60, &GbmParams { n_trees: 40, ..GbmParams::depth_wise() }).unwrap();
        let gl = fit_gbm(&d, 0..60, &GbmParams { n_trees: 40, ..GbmParams::leaf_wise() }).unwrap();
        let queries: Vec<Vec<f64>> = (0..60).map(|i| d.row(i).to_vec()).chain([vec![far; 6]]).collect();
        for q in &queries {
            for v in [rf.predict(q), gx.predict(q), gl.predict(q)] {
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn forest_is_deterministic_given_seed(seed in common::seeds()) {
        let d = common::design(seed, 40, 5);
        let params = ForestParams { n_trees: 8, seed, ..ForestParams::default() };
        let a = fit_random_forest(&d, 0..40, &params).unwrap();
        let b = fit_random_forest(&d, 0..40, &params).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lasso_on_orthonormal_design_soft_thresholds(seed in common::seeds(), lambda in 0.0f64..1.5) {
        let (n, p) = (40, 8);
        let mut rng = hdcombo::seed::rng_from(seed);
        let a = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        // columns with X'X / n = I
        let q = a.qr().q() * (n as f64).sqrt();
        let x: Vec<f64> = (0..n).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| q[(i, j)]).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let gram = Gram::raw(&x, &y, p);
        let fit = coordinate_descent(&gram, &Penalty::elastic(lambda, 1.0), None, &CdOptions::tight());
        let oracle: Vec<f64> = gram.c.iter().map(|c| c.signum() * (c.abs() - lambda).max(0.0)).collect();
        prop_assert!(max_diff(&fit.beta, &oracle) < 1e-8);
    }

    #[test]
    fn elastic_net_limits(seed in common::seeds(), scale in 0.001f64..0.5) {
        let gram = gram_of(seed, 50, 7);
        let lambda = scale * gram.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let opts = CdOptions::tight();
        let ridge = coordinate_descent(&gram, &Penalty::elastic(lambda, 0.0), None, &opts);
        prop_assert!(max_diff(&ridge.beta, &ridge_solve(&gram, lambda)) < 1e-8);
    }

    #[test]
    fn tuned_elastic_net_at_the_ends_of_alpha(seed in common::seeds()) {
        let d = common::design(seed, 60, 6);
        let grid = vec![0.5, 0.2, 0.05, 0.01];
        let fit = |kind, alphas: Vec<f64>| {
            let spec = PenaltySpec::new(kind).with_alphas(alphas).with_lambdas(grid.clone()).with_cd(CdOptions::tight());
            fit_penalized(&d, 0..60, &spec).unwrap()
        };
        let (enet1, lasso) = (fit(PenaltyKind::ElasticNet, vec![1.0]), fit(PenaltyKind::Lasso, vec![1.0]));
        prop_assert_eq!(enet1.lambda, lasso.lambda);
        prop_assert!(max_diff(&enet1.beta, &lasso.beta) < 1e-8);
        let (enet0, ridge) = (fit(PenaltyKind::ElasticNet, vec![0.0]), fit(PenaltyKind::Ridge, vec![0.0]));
        prop_assert_eq!(enet0.lambda, ridge.lambda);
        prop_assert!(max_diff(&enet0.beta, &ridge.beta) < 1e-8);
    }

    #[test]
    fn singleton_groups_at_full_l1_weight_reproduce_lasso(seed in common::seeds(), scale in 0.01f64..0.8) {
        let gram = gram_of(seed, 50, 6);
        let lambda = scale * gram.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let groups: Vec<Vec<usize>> = (0..6).map(|j| vec![j]).collect();
        let opts = CdOptions::tight();
        let sgl = coordinate_descent(&gram, &Penalty { lambda, alpha: 1.0, weights: None, groups: Some(&groups) }, None, &opts);
        let lasso = coordinate_descent(&gram, &Penalty::elastic(lambda, 1.0), None, &opts);
        prop_assert!(max_diff(&sgl.beta, &lasso.beta) < 1e-8);
    }

    #[test]
    fn penalized_objective_beats_penalized_ols(
        seed in common::seeds(),
        scale in 0.001f64..1.0,
        alpha in 0.0f64..=1.0,
        grouped in any::<bool>(),
    ) {
        let gram = gram_of(seed, 45, 8);
        let lambda = scale * gram.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let groups: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7]];
        let weights: Vec<f64> = (0..8).map(|j| 0.5 + j as f64 / 4.0).collect();
        let penalty = Penalty {
            lambda,
            alpha,
            weights: (!grouped).then_some(weights.as_slice()),
            groups: grouped.then_some(groups.as_slice()),
        };
        let fit = coordinate_descent(&gram, &penalty, None, &CdOptions::default());
        let ols = gram.solve_ols().0;
        let at_ols = gram.half_mse(&ols) + penalty.value(&ols);
        let at_fit = gram.half_mse(&fit.beta) + penalty.value(&fit.beta);
        prop_assert!((fit.objective - at_fit).abs() <= 1e-10 * at_fit.abs().max(1.0));
        prop_assert!(at_fit <= at_ols + 1e-10 * at_ols.abs().max(1.0));
    }
}
