use htl_core::evaluate::{fit_rate, simpson_integral};
use htl_core::kernels::{gram, matern_eval, KernelSpec};
use htl_core::simulate::{gp_sample_path, make_shift_scenario, TruthOptions};
use htl_core::spectral::{
    filter_apply, krr_direct_solve, spectral_fit, FilterKind, FilterSpec, Predictor,
};
use htl_core::{Dataset, Points, TransformPair};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn points_strategy(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 2..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_is_psd(xs in points_strategy(60), h in 0.05f64..0.5, matern in any::<bool>()) {
        let kernel = if matern { KernelSpec::matern(2.01, h).unwrap() } else { KernelSpec::gaussian(h).unwrap() };
        let g = gram(&Points::from_scalars(xs), &kernel);
        let ev = g.eigenvalues().unwrap();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        prop_assert!(lo >= -1e-8 * hi, "min {lo}, max {hi}");
        for i in 0..g.n() {
            prop_assert_eq!(g.get(i, i), 1.0);
            for j in 0..i {
                prop_assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
    }

    #[test]
    fn filter_bounds(u in 0.0f64..1.0, beta in 0.0f64..1.0, log_lambda in -6.0f64..-1.0) {
        let lambda = 10f64.powf(log_lambda);
        for kind in FilterKind::ALL {
            let phi = filter_apply(kind, lambda, u);
            prop_assert!(phi >= 0.0);
            prop_assert!(u.powf(beta) * phi * lambda.powf(1.0 - beta) <= 1.0 + 1e-9);
            prop_assert!((1.0 - phi * u).abs() * u.powf(beta) * lambda.powf(-beta) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn simpson_exact_on_cubics(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
        let vals: Vec<f64> = (0..5).map(|i| {
            let x = i as f64 / 4.0;
            a * x * x * x + b * x * x + c * x + d
        }).collect();
        let exact = a / 4.0 + b / 3.0 + c / 2.0 + d;
        prop_assert!((simpson_integral(&vals, 0.0, 1.0).unwrap() - exact).abs() <= 1e-14);
    }

    #[test]
    fn planted_power_laws(slope in -2.0f64..-0.1, scale in 0.01f64..10.0) {
        let ns: Vec<usize> = (1..=12).map(|k| 50 * k).collect();
        let risks: Vec<f64> = ns.iter().map(|&n| scale * (n as f64).powf(slope)).collect();
        let fit = fit_rate(&ns, &risks, 2.0, 1).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-12);
        prop_assert!((fit.intercept - scale.ln()).abs() <= 1e-10);
    }

    #[test]
    fn xi_is_realized(xi in 0.01f64..10.0, s1 in any::<u64>(), s2 in any::<u64>()) {
        let opts = TruthOptions { bandwidth: 0.2, n_grid: 101 };
        let sc = make_shift_scenario(1.0, 3.0, xi, 10, 10, (s1, s2), &opts, 0.5).unwrap();
        prop_assert!((sc.realized_xi().unwrap() - xi).abs() / xi <= 1e-10);
        // doubling both functions leaves the ratio unchanged
        let mut doubled = sc.clone();
        doubled.f_source = sc.f_source.scaled(2.0);
        doubled.f_shift = sc.f_shift.scaled(2.0);
        prop_assert!((doubled.realized_xi().unwrap() - xi).abs() / xi <= 1e-10);
    }

    #[test]
    fn transform_round_trip(y in -10.0f64..10.0, p in -10.0f64..10.0, tau in 0.0f64..0.95) {
        for pair in [TransformPair::Offset, TransformPair::affine(tau, 1.0 - tau).unwrap()] {
            prop_assert!((pair.G(pair.g(y, p).unwrap(), p) - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn krr_paths_agree(seed in any::<u64>(), n in 5usize..80, log_lambda in -6.0f64..-1.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|&t| (5.0 * t).sin() + rng.random::<f64>() - 0.5).collect();
        let data = Dataset::new(Points::from_scalars(x), y).unwrap();
        let k = KernelSpec::gaussian(0.2).unwrap();
        let lambda = 10f64.powf(log_lambda);
        let q = Points::linspace(0.0, 1.0, 41);
        let a = spectral_fit(&data, &k, &FilterSpec::new(FilterKind::Krr, lambda).unwrap()).unwrap().predict(&q).unwrap();
        let b = krr_direct_solve(&data, &k, lambda).unwrap().predict(&q).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
    }
}

const N_GRID: usize = 65;

fn paths(n: usize) -> Vec<Vec<f64>> {
    (0..n as u64)
        .map(|s| {
            gp_sample_path(2.01, 0.2, N_GRID, 1000 + s)
                .unwrap()
                .anchor_values()
                .to_vec()
        })
        .collect()
}

#[test]
fn gp_covariance_matches_kernel() {
    let draws = paths(500);
    let grid: Vec<f64> = (0..N_GRID)
        .map(|i| i as f64 / (N_GRID - 1) as f64)
        .collect();
    let n = draws.len() as f64;
    for &(i, j) in &[(0, 0), (10, 12), (20, 30), (32, 40), (5, 60)] {
        let mi = draws.iter().map(|d| d[i]).sum::<f64>() / n;
        let mj = draws.iter().map(|d| d[j]).sum::<f64>() / n;
        let cov = draws.iter().map(|d| (d[i] - mi) * (d[j] - mj)).sum::<f64>() / (n - 1.0);
        let rho = matern_eval(&[grid[i]], &[grid[j]], 2.01, 0.2).unwrap();
        let se = ((1.0 + rho * rho) / n).sqrt();
        assert!(
            (cov - rho).abs() <= 3.0 * se,
            "pair ({i},{j}): cov {cov}, kernel {rho}, se {se}"
        );
    }
}

#[test]
fn gp_marginals_are_standard_normal() {
    let draws = paths(2000);
    let normal = Normal::new(0.0, 1.0).unwrap();
    // 1% critical value of the one-sample KS statistic
    let critical = 1.628 / (draws.len() as f64).sqrt();
    for node in [0, N_GRID / 2, N_GRID - 7] {
        let mut v: Vec<f64> = draws.iter().map(|d| d[node]).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len() as f64;
        let ks = v
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let c = normal.cdf(x);
                (c - k as f64 / m).abs().max(((k + 1) as f64 / m - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < critical, "node {node}: KS {ks} vs {critical}");
    }
}
