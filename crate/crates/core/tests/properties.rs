use ctmc_localtime::chain::eta;
use ctmc_localtime::density::{density, lemma33_upper, theta_derivatives};
use ctmc_localtime::ldp::{
    density_bound, rate_function_general, rate_function_symmetric, MeasureOnRange, RateOptions,
};
use ctmc_localtime::oracles::{killed_prob, range_exact_prob, simplex_integrate, SimplexChart, SimplexResolution};
use ctmc_localtime::simulate::sample_paths;
use ctmc_localtime::{
    density_finite_difference, density_quadrature, density_series, gauge_invariance_check, restrict, Generator,
    LocalTimeVector, RangeSpec,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn generator(n: usize, symmetric: bool) -> impl Strategy<Value = Generator> {
    prop::collection::vec(0.1f64..2.0, n * n).prop_map(move |r| {
        let mut rows = vec![vec![0.0; n]; n];
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    rows[x][y] = if symmetric { r[x.min(y) * n + x.max(y)] } else { r[x * n + y] };
                }
            }
            rows[x][x] = -rows[x].iter().sum::<f64>();
        }
        Generator::from_rows(&rows).unwrap()
    })
}

fn chain_and_point(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Generator, Vec<f64>, usize, usize)> {
    sizes.prop_flat_map(|n| (generator(n, false), prop::collection::vec(0.2f64..2.0, n), 0..n, 0..n))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn restriction_composes_and_reconstructs(g in generator(4, false)) {
        let outer = restrict(&g, &[0, 1, 2]).unwrap();
        let nested = outer.restrict_to(&[0, 2]).unwrap();
        let direct = restrict(&g, &[0, 2]).unwrap();
        prop_assert_eq!(nested.inner(), direct.inner());
        prop_assert_eq!(nested.killing(), direct.killing());
        prop_assert_eq!(outer.reconstruct(), g.submatrix(&[0, 1, 2]));
        for x in 0..3 {
            prop_assert!(outer.inner().row(x).sum().abs() < 1e-12);
            prop_assert!(outer.killing()[x] >= 0.0);
        }
    }

    #[test]
    fn eta_is_at_least_one_and_monotone(g in generator(4, false)) {
        let small = eta(&g, &[0, 1]).unwrap();
        let mid = eta(&g, &[0, 1, 2]).unwrap();
        let all = eta(&g, &[0, 1, 2, 3]).unwrap();
        prop_assert!(small >= 1.0 && small <= mid && mid <= all);
    }

    #[test]
    fn evaluators_agree_and_density_is_nonnegative((g, l, a, b) in chain_and_point(2..=4)) {
        let n = g.len();
        let spec = RangeSpec::full(&g, a, b).unwrap();
        let l = LocalTimeVector::new(l).unwrap();
        let s = density_series(&g, &spec, &l, 1e-13).unwrap();
        let q = density_quadrature(&g, &spec, &l, if n == 4 { 64 } else { 128 }).unwrap();
        let min_l = l.times().iter().cloned().fold(f64::INFINITY, f64::min);
        let f = density_finite_difference(&g, &spec, &l, 5e-3 * min_l).unwrap();
        prop_assert!(s.value >= -s.error_estimate);
        for other in [&q, &f] {
            let gap = (s.value - other.value).abs();
            prop_assert!(gap <= s.error_estimate + other.error_estimate + 1e-9 * s.value.abs(),
                "{} vs {} {}: gap {gap:e}", s.value, other.method, other.value);
        }
    }

    #[test]
    fn gauge_leaves_density_unchanged((g, l, a, b) in chain_and_point(2..=4), r in prop::collection::vec(0.2f64..5.0, 4)) {
        let n = g.len();
        let spec = RangeSpec::full(&g, a, b).unwrap();
        let l = LocalTimeVector::new(l).unwrap();
        let base = density_series(&g, &spec, &l, 1e-15).unwrap().value;
        let dev = gauge_invariance_check(&g, &spec, &l, &r[..n]).unwrap();
        prop_assert!(dev <= 1e-10 * base.abs(), "deviation {dev:e} of {base:e}");
    }

    #[test]
    fn angular_derivatives_are_dominated(g in generator(3, false), l in prop::collection::vec(0.2f64..2.0, 3), mask in 0u64..8) {
        let mut bt: DMatrix<f64> = g.rates().clone();
        bt.fill_diagonal(0.0);
        let d = theta_derivatives(&bt, &l, &[mask], 1e-14).unwrap();
        let upper = lemma33_upper(&bt, &l, mask);
        prop_assert!(d.values[0] >= -d.error_estimates[0]);
        prop_assert!(d.values[0] <= upper * (1.0 + 1e-10) + d.error_estimates[0]);
    }

    #[test]
    fn simplex_integral_is_chart_independent(dropped in 0usize..3, t in 0.5f64..3.0) {
        let f = |l: &[f64]| (l[0] * 0.7).exp() * (1.0 + l[1] * l[2]);
        let base = simplex_integrate(f, &SimplexChart::new(3, 0, t).unwrap(), SimplexResolution::Grid { nodes: 256 }).unwrap();
        let other = simplex_integrate(f, &SimplexChart::new(3, dropped, t).unwrap(), SimplexResolution::Grid { nodes: 256 }).unwrap();
        prop_assert!(rel(base.value, other.value) <= 1e-9, "{} vs {}", base.value, other.value);
    }

    #[test]
    fn inclusion_exclusion_telescopes(g in generator(4, false), t in 0.2f64..3.0) {
        let s = [0usize, 1, 3];
        let (a, b) = (0usize, 3usize);
        let mut total = 0.0;
        for mask in 0u32..8 {
            let r: Vec<usize> = (0..3).filter(|&i| mask >> i & 1 == 1).map(|i| s[i]).collect();
            if r.contains(&a) && r.contains(&b) {
                total += range_exact_prob(&g, &RangeSpec::new(&g, &r, a, b).unwrap(), t).unwrap();
            }
        }
        let k = killed_prob(&g, &s, a, b, t).unwrap();
        prop_assert!((total - k).abs() <= 1e-12, "{total} vs {k}");
    }

    #[test]
    fn paths_conserve_time_and_support(g in generator(3, false), t in 0.1f64..5.0, seed in any::<u64>()) {
        for p in sample_paths(&g, 0, t, 20, seed).unwrap() {
            let sum: f64 = p.local_times.iter().sum();
            prop_assert!((sum - t).abs() <= 1e-12 * t);
            let visited: Vec<usize> = (0..3).filter(|&x| p.local_times[x] > 0.0).collect();
            prop_assert_eq!(visited, p.range());
        }
    }

    #[test]
    fn rate_function_matches_dirichlet_form(g in generator(3, true), w in prop::collection::vec(0.05f64..1.0, 3)) {
        let s: f64 = w.iter().sum();
        let mu = MeasureOnRange::new(vec![0, 1, 2], w.iter().map(|x| x / s).collect()).unwrap();
        let general = rate_function_general(&g, &mu, &RateOptions::default()).unwrap();
        let dir = rate_function_symmetric(&g, &mu).unwrap();
        prop_assert!(general.value >= -1e-12);
        prop_assert!((general.value - dir).abs() <= 1e-8 * dir.max(1.0));
        let tilt = general.tilt.unwrap();
        let sqrt_mu: Vec<f64> = mu.weights().iter().map(|m| m.sqrt()).collect();
        let c = tilt.values()[0] / sqrt_mu[0];
        for (v, s) in tilt.values().iter().zip(&sqrt_mu) {
            prop_assert!(rel(*v, c * s) <= 1e-6);
        }
    }

    #[test]
    fn rate_function_is_anchor_independent(g in generator(3, false), w in prop::collection::vec(0.05f64..1.0, 3)) {
        let s: f64 = w.iter().sum();
        let mu = MeasureOnRange::new(vec![0, 1, 2], w.iter().map(|x| x / s).collect()).unwrap();
        let values: Vec<f64> = (0..3)
            .map(|k| rate_function_general(&g, &mu, &RateOptions { anchor: Some(k), ..RateOptions::default() }).unwrap().value)
            .collect();
        prop_assert!(values.iter().all(|v| *v >= -1e-12));
        prop_assert!((values[0] - values[1]).abs() <= 1e-8 && (values[0] - values[2]).abs() <= 1e-8, "{values:?}");
    }

    #[test]
    fn pointwise_bound_dominates((g, l, a, b) in chain_and_point(2..=4)) {
        let spec = RangeSpec::full(&g, a, b).unwrap();
        let l = LocalTimeVector::new(l).unwrap();
        let d = density(&g, &spec, &l, 1e-12).unwrap();
        let bound = density_bound(&g, &spec, &l, None).unwrap();
        prop_assert!(bound >= d.value - d.error_estimate, "bound {bound} < density {}", d.value);
    }
}

#[test]
fn rate_function_vanishes_only_at_invariant_measures() {
    let g = Generator::from_rows(&[vec![-1.0, 0.6, 0.4], vec![0.3, -0.8, 0.5], vec![0.9, 0.2, -1.1]]).unwrap();
    let pi = {
        let a = g.rates().transpose();
        let mut m = a.clone();
        for j in 0..3 {
            m[(2, j)] = 1.0;
        }
        m.lu().solve(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap()
    };
    let mu = MeasureOnRange::new(vec![0, 1, 2], pi.iter().copied().collect()).unwrap();
    let at_pi = rate_function_general(&g, &mu, &RateOptions::default()).unwrap();
    assert!(at_pi.value.abs() < 1e-10, "{}", at_pi.value);
    let other = MeasureOnRange::new(vec![0, 1, 2], vec![0.5, 0.3, 0.2]).unwrap();
    assert!(rate_function_general(&g, &other, &RateOptions::default()).unwrap().value > 1e-4);
}
