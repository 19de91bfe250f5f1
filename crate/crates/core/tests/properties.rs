use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relusolve_core::calculus::{concat, concat_sparse, identity_net, parallelize};
use relusolve_core::iter::{
    build_solver, richardson_step_net, Method, SolverConfig, SpectralClass,
};
use relusolve_core::{
    gen_laplacian, random_rhs, random_spd, solve_exact, sparse_matvec_net, square_net, Layer,
    ReluNetwork, SparsityPattern,
};

fn layer_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Layer> {
    (
        proptest::collection::vec(proptest::option::weighted(0.6, -4.0f64..4.0), rows * cols),
        proptest::collection::vec(-2.0f64..2.0, rows),
    )
        .prop_map(move |(dense, bias)| {
            let triplets = dense
                .iter()
                .enumerate()
                .filter_map(|(k, v)| v.map(|v| (k / cols, k % cols, v)));
            Layer::from_triplets(rows, cols, triplets, bias).unwrap()
        })
}

fn net_strategy(input: usize, output: usize) -> impl Strategy<Value = ReluNetwork> {
    proptest::collection::vec(1usize..5, 0..3).prop_flat_map(move |hidden| {
        let mut dims = vec![input];
        dims.extend(hidden);
        dims.push(output);
        let layers: Vec<_> = dims.windows(2).map(|w| layer_strategy(w[1], w[0])).collect();
        layers.prop_map(|layers| ReluNetwork::new(layers).unwrap())
    })
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
}

proptest! {
    #[test]
    fn weight_count_is_a_recount(net in net_strategy(3, 2)) {
        let recount: usize = net
            .layers()
            .iter()
            .map(|l| l.triplets().filter(|t| t.2 != 0.0).count() + l.bias().iter().filter(|b| **b != 0.0).count())
            .sum();
        prop_assert_eq!(net.weight_count(), recount);
        let stats = net.stats();
        prop_assert_eq!(stats.per_layer.iter().sum::<usize>(), stats.weights);
    }

    #[test]
    fn evaluation_is_deterministic(net in net_strategy(3, 2), x in proptest::collection::vec(-5.0f64..5.0, 3)) {
        let a = net.evaluate(&x).unwrap();
        let b = net.evaluate(&x).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn sparse_concat_composes(
        f in net_strategy(2, 3),
        g in net_strategy(3, 2),
        x in proptest::collection::vec(-5.0f64..5.0, 3),
    ) {
        let expected = f.evaluate(&g.evaluate(&x).unwrap()).unwrap();
        let (lf, lg, mf, mg) = (f.depth(), g.depth(), f.weight_count(), g.weight_count());
        let fg = concat_sparse(f, g).unwrap();
        prop_assert!(close(&fg.evaluate(&x).unwrap(), &expected));
        prop_assert!(fg.depth() <= lf + lg);
        prop_assert!(fg.weight_count() <= 3 * (mf + mg));
    }

    #[test]
    fn plain_concat_composes(
        f in net_strategy(2, 3),
        g in net_strategy(3, 2),
        x in proptest::collection::vec(-5.0f64..5.0, 3),
    ) {
        let expected = f.evaluate(&g.evaluate(&x).unwrap()).unwrap();
        let depth = f.depth() + g.depth() - 1;
        let fg = concat(f, g).unwrap();
        prop_assert_eq!(fg.depth(), depth);
        let out = fg.evaluate(&x).unwrap();
        prop_assert!(out.iter().zip(&expected).all(|(a, b)| (a - b).abs() <= 1e-10 * (1.0 + b.abs())));
    }

    #[test]
    fn padding_is_neutral(
        f in net_strategy(2, 2),
        g in net_strategy(1, 3),
        x in proptest::collection::vec(-5.0f64..5.0, 3),
    ) {
        let mut expected = f.evaluate(&x[..2]).unwrap();
        expected.extend(g.evaluate(&x[2..]).unwrap());
        let par = parallelize(vec![f, g]).unwrap();
        prop_assert!(close(&par.evaluate(&x).unwrap(), &expected));
    }

    #[test]
    fn identity_handles_every_sign(x in proptest::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], 1..6), depth in 2usize..7) {
        let id = identity_net(x.len(), depth).unwrap();
        prop_assert_eq!(id.evaluate(&x).unwrap(), x);
    }

    #[test]
    fn square_net_is_one_sided(x in -3.0f64..3.0, s in 1u32..10) {
        let net = square_net(s, 3.0).unwrap();
        let y = net.evaluate(&[x]).unwrap()[0];
        let bound = 9.0 * 2f64.powi(-2 * s as i32 - 2);
        prop_assert!(y - x * x >= -1e-12);
        prop_assert!(y - x * x <= bound + 1e-12);
    }
}

#[test]
fn matvec_rows_carry_their_share() {
    let pattern = SparsityPattern::five_point(4).unwrap();
    let n = pattern.n();
    let eps = 1e-3;
    let net = sparse_matvec_net(&pattern, eps, 3.0).unwrap();
    let spec = SpectralClass::new(0.1, 1.0).unwrap();
    for seed in 0..20 {
        let a = random_spd(&pattern, &spec, seed).unwrap();
        let r = random_rhs(n, 3.0, 1.0, seed + 100);
        let mut input = a.values().to_vec();
        input.extend(&r);
        let out = net.evaluate(&input).unwrap();
        let exact = a.matvec(&r);
        for i in 0..n {
            assert!((out[i] - exact[i]).abs() <= eps / (n as f64).sqrt(), "row {i}");
        }
    }
}

#[test]
fn matvec_cost_is_monotone() {
    let patterns = [
        SparsityPattern::diagonal(16).unwrap(),
        SparsityPattern::tridiagonal(16).unwrap(),
        SparsityPattern::five_point(4).unwrap(),
    ];
    let mut last = 0;
    for p in &patterns {
        let m = sparse_matvec_net(p, 1e-3, 2.0).unwrap().weight_count();
        assert!(m >= last);
        last = m;
    }
    let p = SparsityPattern::tridiagonal(8).unwrap();
    let mut last = 0;
    for k in 1..12 {
        let m = sparse_matvec_net(&p, 2f64.powi(-k), 2.0).unwrap().weight_count();
        assert!(m >= last);
        last = m;
    }
}

#[test]
fn step_chain_depth_adds_up() {
    let problem = gen_laplacian(1, 6).unwrap();
    let config = SolverConfig::new(Method::Richardson, 0.5, 1.0).unwrap();
    let solver = build_solver(problem.pattern(), &problem.spectral, &config).unwrap();
    let m = solver.meta.m;
    let delta = relusolve_core::iter::richardson_delta(0.5, m);
    let step = richardson_step_net(problem.pattern(), delta, m as f64 + 3.0).unwrap();
    assert_eq!(solver.network.depth(), (m + 1) * step.depth());
    assert_eq!(solver.junction_layers().len(), m);
}

/// Admissible random instances for both methods on two patterns, with the
/// largest admissible right-hand side scale.
#[test]
fn random_instances_meet_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let patterns = [
        SparsityPattern::tridiagonal(6).unwrap(),
        SparsityPattern::five_point(3).unwrap(),
    ];
    let spec = SpectralClass::new(0.5, 6.0).unwrap();
    for pattern in &patterns {
        for method in [Method::Richardson, Method::ChebyshevCg] {
            for c_sc in [1.0, SolverConfig::c_sc_limit(method, &spec)] {
                let eps = 0.1;
                let config = SolverConfig::new(method, eps, c_sc).unwrap();
                let solver = build_solver(pattern, &spec, &config).unwrap();
                for _ in 0..20 {
                    let a = random_spd(pattern, &spec, rng.random()).unwrap();
                    let len = rng.random_range(0.0..=c_sc);
                    let r = random_rhs(pattern.n(), len, spec.lambda_min(), rng.random());
                    let x = solve_exact(&a, &r).unwrap();
                    let y = solver.solve(a.values(), &r).unwrap();
                    let err = x.iter().zip(&y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
                    assert!(err <= eps, "{method:?} c_sc={c_sc}: {err}");
                }
            }
        }
    }
}

#[test]
fn zero_rhs_gives_exact_zero() {
    let problem = gen_laplacian(2, 3).unwrap();
    for method in [Method::Richardson, Method::ChebyshevCg] {
        let config = SolverConfig::new(method, 0.1, 1.0).unwrap();
        let solver = build_solver(problem.pattern(), &problem.spectral, &config).unwrap();
        let out = solver.solve(problem.matrix.values(), &vec![0.0; problem.n()]).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }
}
