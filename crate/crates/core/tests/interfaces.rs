use treentropy::covering::{min_ball_cover, min_order_net, verify_cover, CoverCertificate, CoverMode};
use treentropy::operator::OperatorBundle;
use treentropy::rates::{
    predict, run_experiment, ConfigOverrides, EpsGrid, ExperimentConfig, Family, Law, Mode, PredictParams, Verdict,
};
use treentropy::{Error, MetricEvaluator, NodeId, Tree, WeightLaw, WeightSystem};

fn unit_path(levels: usize, q: f64) -> (Tree, WeightSystem<f64>) {
    let t = Tree::path(levels).unwrap();
    let w = WeightSystem::assign(&t, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), q).unwrap();
    (t, w)
}

#[test]
fn path_distances_follow_level_counts() {
    let (t, w) = unit_path(5, 2.0);
    let me = MetricEvaluator::new(&t, &w).unwrap();
    // unit weights: d(t, s)^q is the number of steps between them
    assert_eq!(me.dist(NodeId(0), NodeId(4)), 2.0);
    assert_eq!(me.dist(NodeId(1), NodeId(2)), 1.0);
    assert_eq!(me.dist(NodeId(3), NodeId(3)), 0.0);
}

#[test]
fn sibling_distance_goes_through_the_meet() {
    let t = Tree::binary(1).unwrap();
    let w = WeightSystem::assign(&t, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), 1.0).unwrap();
    let me = MetricEvaluator::new(&t, &w).unwrap();
    assert_eq!(t.meet(NodeId(1), NodeId(2)), NodeId::ROOT);
    assert_eq!(me.dist(NodeId(1), NodeId(2)), 2.0);
}

#[test]
fn three_node_path_needs_three_balls_at_unit_radius() {
    let (t, w) = unit_path(3, 1.0);
    let me = MetricEvaluator::new(&t, &w).unwrap();
    // open balls: neighbours at distance exactly 1 are not covered
    assert_eq!(min_ball_cover(&me, 1.0, CoverMode::Exact).unwrap().len(), 3);
    assert_eq!(min_ball_cover(&me, 1.5, CoverMode::Exact).unwrap().len(), 1);
    assert_eq!(min_order_net(&me, 1.5).unwrap().len(), 2);
}

#[test]
fn certificates_round_trip_through_json() {
    let (t, w) = unit_path(10, 2.0);
    let me = MetricEvaluator::new(&t, &w).unwrap();
    let cert = min_order_net(&me, 1.2).unwrap();
    let back: CoverCertificate<f64> = serde_json::from_str(&cert.to_json().unwrap()).unwrap();
    assert_eq!(back, cert);
    assert!(verify_cover(&me, &back).ok);
}

#[test]
fn single_precision_agrees_with_double() {
    let t = Tree::binary(6).unwrap();
    let w64 = WeightSystem::assign(&t, &WeightLaw::polynomial(2.5), &WeightLaw::constant(1.0), 2.0).unwrap();
    let w32 = WeightSystem::<f32>::assign(&t, &WeightLaw::polynomial(2.5f32), &WeightLaw::constant(1.0f32), 2.0).unwrap();
    let (m64, m32) = (MetricEvaluator::new(&t, &w64).unwrap(), MetricEvaluator::new(&t, &w32).unwrap());
    for (a, b) in [(0, 100), (5, 77), (126, 64)] {
        let (a, b) = (NodeId(a), NodeId(b));
        assert!((m64.dist(a, b) - m32.dist(a, b) as f64).abs() < 1e-5);
    }
}

#[test]
fn weights_load_from_csv() {
    let t = Tree::path(3).unwrap();
    let w = WeightSystem::<f64>::from_csv_str(&t, "node,alpha,sigma\n0,1,1\n1,0.5,1\n2,0.25,0.5\n", 2.0).unwrap();
    assert_eq!(w.alpha(NodeId(2)), 0.25);
    assert_eq!(w.sigma(NodeId(2)), 0.5);
}

#[test]
fn bad_inputs_are_typed_errors() {
    assert!(Tree::from_edge_list("1 0\n2 5\n").is_err());
    let t = Tree::path(3).unwrap();
    let rising = WeightSystem::from_tables(&t, vec![1.0; 3], vec![1.0, 2.0, 2.0], 2.0);
    assert!(rising.is_err());
    let (t, w) = unit_path(3, 2.0);
    let me = MetricEvaluator::new(&t, &w).unwrap();
    assert!(matches!(min_order_net(&me, -1.0), Err(Error::InvalidParameter(_)) | Err(Error::Domain(_))));
}

#[test]
fn operator_columns_are_sums_of_ancestors() {
    let (t, w) = unit_path(4, 2.0);
    let me = MetricEvaluator::new(&t, &w).unwrap();
    let ob = OperatorBundle::new(&me);
    let col = ob.column(NodeId(3));
    assert_eq!(col.support_len(), 4);
    assert_eq!(col.norm(2.0), 2.0);
    assert_eq!(ob.norm(), 2.0);
}

#[test]
fn prediction_is_serializable() {
    let p = predict(PredictParams { family: Family::Biased { lambda: 1 }, law: Law::Polynomial, q: 2.0, gamma: 2.5 }).unwrap();
    let json = serde_json::to_value(&p).unwrap();
    assert!(json.is_object());
}

#[test]
fn small_experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = ConfigOverrides {
        eps_start: Some(0.3),
        eps_count: Some(4),
        out: Some(dir.path().to_path_buf()),
        ..ConfigOverrides::default()
    };
    let config = ExperimentConfig::resolve(Mode::Covering, &[&o]);
    assert_eq!(config.eps, EpsGrid { start: 0.3, ratio: config.eps.ratio, count: 4 });
    // four points cannot support a fit
    assert!(matches!(run_experiment(&config), Err(Error::InsufficientData(_))));
    let o = ConfigOverrides { depth: Some(300), eps_count: Some(10), ..o };
    let report = run_experiment(&ExperimentConfig::resolve(Mode::Covering, &[&o])).unwrap();
    assert_ne!(report.verdict, Verdict::Fail);
    assert_eq!(report.files.len(), 3);
    for f in &report.files {
        assert!(f.exists(), "{}", f.display());
    }
    assert!(dir.path().join("covering.csv").exists());
}
