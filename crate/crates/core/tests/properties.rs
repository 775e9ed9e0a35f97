mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treentropy::checks::{run_operator_checks, CheckOptions};
use treentropy::covering::{min_ball_cover, min_order_net, CoverMode};
use treentropy::gaussian::GaussianRun;
use treentropy::rates::{fit_log_points, fit_points, FitModel, FitOptions};
use treentropy::{MetricEvaluator, NodeId, Tree, WeightSystem};

fn instance(seed: u64, n: usize, q: f64) -> (Tree, WeightSystem<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(&mut rng, n);
    let ws = random_weights(&mut rng, &tree, q);
    (tree, ws)
}

fn q_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), 1.0f64..6.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn meet_is_a_lattice_operation(seed in any::<u64>(), n in 1usize..80, a in 0usize..80, b in 0usize..80) {
        let (tree, _) = instance(seed, n, 2.0);
        let (a, b) = (NodeId((a % n) as u32), NodeId((b % n) as u32));
        let m = tree.meet(a, b);
        prop_assert_eq!(m, tree.meet(b, a));
        prop_assert_eq!(tree.meet(a, a), a);
        prop_assert!(tree.precedes(m, a) && tree.precedes(m, b));
        prop_assert_eq!(m.index(), meet(&tree, a.index(), b.index()));
    }

    #[test]
    fn edge_list_round_trips(seed in any::<u64>(), n in 1usize..100) {
        let (tree, _) = instance(seed, n, 2.0);
        let back = Tree::from_edge_list(&tree.to_edge_list()).unwrap();
        prop_assert_eq!(back.len(), tree.len());
        for i in 0..n {
            let t = NodeId(i as u32);
            prop_assert_eq!(back.parent(t), tree.parent(t));
        }
    }

    #[test]
    fn scaling_sigma_scales_the_metric(seed in any::<u64>(), n in 1usize..30, q in q_strategy(), c in 0.01f64..100.0) {
        let (tree, ws) = instance(seed, n, q);
        let scaled = ws.with_sigma(&tree, ws.sigmas().iter().map(|s| c * s).collect()).unwrap();
        let (m1, m2) = (MetricEvaluator::new(&tree, &ws).unwrap(), MetricEvaluator::new(&tree, &scaled).unwrap());
        for i in 0..n {
            for j in 0..n {
                let (s, t) = (NodeId(i as u32), NodeId(j as u32));
                let (d1, d2) = (m1.dist(s, t), m2.dist(s, t));
                prop_assert!((d2 - c * d1).abs() <= 1e-12 * c * d1.max(f64::MIN_POSITIVE), "{} vs {}", d2, c * d1);
            }
        }
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>(), n in 1usize..25, q in q_strategy()) {
        let (tree, ws) = instance(seed, n, q);
        let d = MetricEvaluator::new(&tree, &ws).unwrap().matrix();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(le_rel(d[i * n + j], d[i * n + k] + d[k * n + j], 1e-12));
                }
            }
        }
    }

    #[test]
    fn order_nets_bracket_ball_covers(seed in any::<u64>(), n in 1usize..30, q in q_strategy(), frac in 0.01f64..1.1) {
        let (tree, ws) = instance(seed, n, q);
        let me = MetricEvaluator::new(&tree, &ws).unwrap();
        let diam = me.matrix().into_iter().fold(0.0, f64::max);
        let eps = (frac * diam).max(1e-9);
        let ball = min_ball_cover(&me, eps, CoverMode::Exact).unwrap().len();
        prop_assert!(ball <= min_order_net(&me, eps).unwrap().len());
        prop_assert!(min_order_net(&me, 2.0 * eps).unwrap().len() <= ball);
    }

    #[test]
    fn power_fit_recovers_exponent(a in 0.3f64..4.0, c0 in -3.0f64..3.0, ratio in 0.3f64..0.8) {
        let pts: Vec<(f64, f64)> = (0..14).map(|k| {
            let e = 0.5 * ratio.powi(k);
            (e, (c0 + a * (1.0 / e).ln()).exp())
        }).collect();
        let f = fit_points(&pts, FitModel::Power { log_term: false }, &FitOptions { min_decades: 0.0, ..FitOptions::default() }).unwrap();
        prop_assert!((f.a - a).abs() < 1e-8 && (f.c0 - c0).abs() < 1e-7, "{:?}", f);
    }

    #[test]
    fn stretched_fit_recovers_exponent(a in 0.3f64..2.0, ratio in 0.4f64..0.8) {
        let pts: Vec<(f64, f64)> = (0..12).map(|k| {
            let e = 0.5 * ratio.powi(k);
            (e, e.powf(-a))
        }).collect();
        let f = fit_log_points(&pts, FitModel::Stretched, &FitOptions { min_decades: 0.0, ..FitOptions::default() }).unwrap();
        prop_assert!((f.a - a).abs() < 1e-8, "{:?}", f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sample_fields_are_reproducible(seed in any::<u64>(), index in 0usize..1000) {
        let (tree, ws) = instance(seed, 50, 2.0);
        let a = GaussianRun::new(&tree, &ws, seed, 1000, vec![0.5]).unwrap();
        let b = GaussianRun::new(&tree, &ws, seed, 1000, vec![0.5]).unwrap();
        prop_assert_eq!(a.sample_field(index), b.sample_field(index));
        let other = GaussianRun::new(&tree, &ws, seed.wrapping_add(1), 1000, vec![0.5]).unwrap();
        prop_assert_ne!(a.sample_field(index), other.sample_field(index));
    }
}

#[test]
fn operator_checks_are_reproducible() {
    let opts = CheckOptions { seed: 77, instances: 6, max_nodes: 12, probes: 10 };
    assert_eq!(run_operator_checks(&opts).unwrap(), run_operator_checks(&opts).unwrap());
}

#[test]
fn small_deviation_is_reproducible() {
    let tree = Tree::binary(5).unwrap();
    let ws = WeightSystem::from_tables(&tree, vec![0.5; tree.len()], vec![1.0; tree.len()], 2.0).unwrap();
    let run = |seed| GaussianRun::new(&tree, &ws, seed, 2000, vec![2.0, 1.0, 0.5]).unwrap().small_deviation();
    assert_eq!(run(3), run(3));
}
