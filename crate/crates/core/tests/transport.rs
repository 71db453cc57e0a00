mod common;

use ontomatch::transport::{
    euclidean_cost, exact_ot, inverse_min_distance_marginal, sinkhorn, uniform_marginal, wasserstein_distance,
    CostMatrix, Marginal, Side, SinkhornParams, SolverConfig, TransportError,
};
use proptest::prelude::*;
use rand::Rng;

use common::{brute_force_assignment, random_cost, random_marginal, rng};

#[test]
fn euclidean_cost_examples() {
    let c = euclidean_cost(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap();
    assert_eq!(c.values(), &[5.0]);
    let c = euclidean_cost(&[[1.5, -2.0]], &[[1.5, -2.0]]).unwrap();
    assert_eq!(c.values(), &[0.0]);
    let c = euclidean_cost(&[[1.0, 0.0], [1.0, 1.0]], &[[0.0, 0.0]]).unwrap();
    assert_eq!(c.rows(), 2);
    assert_eq!(c.get(0, 0), 1.0);
    assert!((c.get(1, 0) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn euclidean_cost_errors() {
    let empty: [[f64; 2]; 0] = [];
    assert!(matches!(
        euclidean_cost(&empty, &[[1.0, 2.0]]),
        Err(TransportError::Empty)
    ));
    assert!(matches!(
        euclidean_cost(&[vec![1.0, 2.0]], &[vec![1.0]]),
        Err(TransportError::DimensionMismatch { .. })
    ));
}

#[test]
fn marginal_examples() {
    let c = CostMatrix::from_rows(&[vec![0.35, 0.9], vec![0.8, 0.37], vec![0.58, 0.6]]).unwrap();
    let mu = inverse_min_distance_marginal(&c, Side::Source);
    for (w, expected) in mu.weights().iter().zip([0.39, 0.37, 0.24]) {
        assert!((w - expected).abs() <= 0.005, "{w} vs {expected}");
    }

    let c = CostMatrix::from_rows(&[vec![0.5, 0.7], vec![0.25, 0.9]]).unwrap();
    let mu = inverse_min_distance_marginal(&c, Side::Source);
    assert!((mu.weights()[0] - 1.0 / 3.0).abs() < 1e-12);
    assert!((mu.weights()[1] - 2.0 / 3.0).abs() < 1e-12);

    let nu = inverse_min_distance_marginal(&c.transpose(), Side::Target);
    assert_eq!(nu, mu);
}

#[test]
fn zero_minimum_is_floored() {
    let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let mu = inverse_min_distance_marginal(&c, Side::Source);
    assert!(mu.weights().iter().all(|w| w.is_finite() && *w > 0.0));
    assert!(mu.weights()[0] > 0.999);
}

#[test]
fn uniform_marginal_checks() {
    assert_eq!(uniform_marginal(4).unwrap().weights(), &[0.25; 4]);
    assert!(matches!(uniform_marginal(0), Err(TransportError::ZeroSize)));
}

#[test]
fn sinkhorn_two_by_two_example() {
    let c = CostMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 1.0]]).unwrap();
    let u = uniform_marginal(2).unwrap();
    let t = sinkhorn(&c, &u, &u, &SinkhornParams::new(0.001)).unwrap();
    assert!((t.get(0, 0) - 0.5).abs() < 1e-3);
    assert!((t.get(1, 1) - 0.5).abs() < 1e-3);
    assert!((t.wd - 1.0).abs() <= 0.02);
    assert_eq!(wasserstein_distance(&c, &t).unwrap(), t.wd);
}

#[test]
fn sinkhorn_rejects_bad_marginals() {
    let c = CostMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 1.0]]).unwrap();
    assert!(Marginal::new(vec![0.5, 0.6]).is_err());
    let three = uniform_marginal(3).unwrap();
    let two = uniform_marginal(2).unwrap();
    assert!(sinkhorn(&c, &three, &two, &SinkhornParams::new(0.1)).is_err());
}

#[test]
fn exact_rectangular_matches_expanded_assignment() {
    // A uniform n×m problem equals an assignment problem on lcm(n, m)
    // copies of each point, solved here by permutation search.
    let mut r = rng(11);
    for (n, m) in [(2, 3), (3, 2), (1, 4), (2, 4), (3, 6), (2, 1)] {
        let c = random_cost(&mut r, n, m);
        let l = lcm(n, m);
        let expanded: Vec<f64> = (0..l)
            .flat_map(|a| (0..l).map(move |b| (a / (l / n), b / (l / m))))
            .map(|(i, j)| c.get(i, j))
            .collect();
        let oracle = brute_force_assignment(&CostMatrix::new(l, l, expanded).unwrap());
        let got = exact_ot(&c, &uniform_marginal(n).unwrap(), &uniform_marginal(m).unwrap()).unwrap();
        assert!((got.wd - oracle).abs() < 1e-12, "{n}x{m}: {} vs {oracle}", got.wd);
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[test]
fn solver_config_defaults() {
    let cfg = SolverConfig::default();
    assert_eq!((cfg.epsilon, cfg.max_iter, cfg.tol), (None, 2000, 1e-6));
    let c = CostMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 2.0]]).unwrap();
    assert!((cfg.params_for(&c).epsilon - 0.02).abs() < 1e-15);
}

#[test]
fn exact_plan_is_feasible_for_non_uniform_marginals() {
    let mut r = rng(5);
    for _ in 0..30 {
        let n = r.gen_range(1..=9);
        let m = r.gen_range(1..=9);
        let c = random_cost(&mut r, n, m);
        let mu = random_marginal(&mut r, n);
        let nu = random_marginal(&mut r, m);
        let t = exact_ot(&c, &mu, &nu).unwrap();
        assert!(t.marginal_violation(&mu, &nu) < 1e-12);
    }
}

fn problem(max_n: usize, max_m: usize) -> impl Strategy<Value = (CostMatrix, Marginal, Marginal)> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(0.0..1.0f64, n * m),
            prop::collection::vec(0.05..1.0f64, n),
            prop::collection::vec(0.05..1.0f64, m),
            any::<bool>(),
        )
            .prop_map(move |(c, a, b, uniform)| {
                let normalize = |w: Vec<f64>| {
                    let s: f64 = w.iter().sum();
                    Marginal::new(w.into_iter().map(|x| x / s).collect()).unwrap()
                };
                let (mu, nu) = if uniform {
                    (uniform_marginal(n).unwrap(), uniform_marginal(m).unwrap())
                } else {
                    (normalize(a), normalize(b))
                };
                (CostMatrix::new(n, m, c).unwrap(), mu, nu)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinkhorn_plans_are_feasible((c, mu, nu) in problem(12, 12)) {
        let t = SolverConfig::default().sinkhorn(&c, &mu, &nu).unwrap();
        prop_assert!(t.marginal_violation(&mu, &nu) <= 1e-6);
        prop_assert!(t.plan().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn exact_never_exceeds_sinkhorn((c, mu, nu) in problem(8, 8), eps in 0.001..0.5f64) {
        let exact = exact_ot(&c, &mu, &nu).unwrap();
        let entropic = sinkhorn(&c, &mu, &nu, &SinkhornParams::new(eps)).unwrap();
        prop_assert!(exact.wd <= entropic.wd + 1e-9, "{} > {}", exact.wd, entropic.wd);
    }

    #[test]
    fn exact_square_uniform_matches_permutation_search(c in (1..=6usize).prop_flat_map(|n| {
        prop::collection::vec(0.0..1.0f64, n * n).prop_map(move |v| CostMatrix::new(n, n, v).unwrap())
    })) {
        let u = uniform_marginal(c.rows()).unwrap();
        let got = exact_ot(&c, &u, &u).unwrap().wd;
        prop_assert!((got - brute_force_assignment(&c)).abs() < 1e-12);
    }

    #[test]
    fn sinkhorn_converges_to_exact(c in prop::collection::vec(0.0..1.0f64, 25)) {
        let c = CostMatrix::new(5, 5, c).unwrap();
        let u = uniform_marginal(5).unwrap();
        let exact = exact_ot(&c, &u, &u).unwrap().wd;
        let entropic = sinkhorn(&c, &u, &u, &SinkhornParams::new(0.005)).unwrap().wd;
        prop_assert!((entropic - exact).abs() <= 0.02);
    }

    #[test]
    fn identical_point_sets_have_zero_distance(points in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..8)) {
        let c = euclidean_cost(&points, &points).unwrap();
        let u = uniform_marginal(points.len()).unwrap();
        prop_assert_eq!(exact_ot(&c, &u, &u).unwrap().wd, 0.0);
    }

    #[test]
    fn transpose_symmetry((c, mu, nu) in problem(7, 7)) {
        let a = exact_ot(&c, &mu, &nu).unwrap().wd;
        let b = exact_ot(&c.transpose(), &nu, &mu).unwrap().wd;
        prop_assert!((a - b).abs() < 1e-9);
        // Both orientations stop at different iterates; compare near the
        // shared fixed point.
        let tight = SinkhornParams { epsilon: 0.05, max_iter: 100_000, tol: 1e-12 };
        let sa = sinkhorn(&c, &mu, &nu, &tight).unwrap();
        let sb = sinkhorn(&c.transpose(), &nu, &mu, &tight).unwrap();
        prop_assert!(sa.converged && sb.converged);
        prop_assert!((sa.wd - sb.wd).abs() < 1e-9, "{} vs {}", sa.wd, sb.wd);
    }

    #[test]
    fn scale_equivariance((c, mu, nu) in problem(7, 7), a in 0.1..10.0f64) {
        let scaled = c.scaled(a).unwrap();
        let base = exact_ot(&c, &mu, &nu).unwrap().wd;
        let got = exact_ot(&scaled, &mu, &nu).unwrap().wd;
        prop_assert!((got - a * base).abs() <= 1e-9 * (1.0 + a * base));
        let s_base = sinkhorn(&c, &mu, &nu, &SinkhornParams::new(0.05)).unwrap().wd;
        let s_got = sinkhorn(&scaled, &mu, &nu, &SinkhornParams::new(0.05 * a)).unwrap().wd;
        prop_assert!((s_got - a * s_base).abs() <= 1e-6 * (1.0 + a * s_base));
    }

    #[test]
    fn inverse_min_distance_is_a_distribution(c in (1..=6usize, 1..=6usize).prop_flat_map(|(n, m)| {
        prop::collection::vec(0.0..1.0f64, n * m).prop_map(move |v| CostMatrix::new(n, m, v).unwrap())
    })) {
        for side in [Side::Source, Side::Target] {
            let w = inverse_min_distance_marginal(&c, side);
            let sum: f64 = w.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(w.weights().iter().all(|&x| x > 0.0));
        }
    }
}
