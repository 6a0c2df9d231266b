use rdlab_core::attractor::{
    correlation_dimension, covering_radius, find_equilibrium, greedy_epsilon_net, segment_cloud, stationary_residual,
    torus_cloud, DimensionOptions, NormTag, PointCloud, SamplingPlan,
};
use rdlab_core::profiles::member_rng;
use rdlab_core::{DomainSpec, NonlinearitySpec, ProblemSpec, Scheme};

fn line(m: usize) -> DomainSpec {
    DomainSpec::new(1, 1.0, m).unwrap()
}

fn chafee_infante(beta: f64, m: usize) -> ProblemSpec {
    ProblemSpec::unforced(1.0, NonlinearitySpec::chafee_infante(beta), line(m)).unwrap()
}

const TAGS: [NormTag; 4] = [NormTag::Lebesgue(2.0), NormTag::Lebesgue(4.0), NormTag::Lebesgue(6.0), NormTag::H1];

#[test]
fn equilibrium_is_a_fixed_point() {
    let problem = chafee_infante(15.0, 127);
    let d = *problem.domain();
    let guess = d.eigenmode([1, 0]);
    let eq = find_equilibrium(&problem, &guess, 30.0, 20_000, 1e-11).unwrap();
    assert!(eq.state.max_abs() > 1.0);
    assert!(stationary_residual(&problem, &eq.state).unwrap() <= 1e-8);
    let zero = stationary_residual(&problem, &d.zeros()).unwrap();
    assert_eq!(zero, 0.0);
}

#[test]
fn subcritical_attractor_is_the_origin() {
    let problem = chafee_infante(5.0, 63);
    let plan = SamplingPlan {
        ensemble_size: 4,
        spin_up: 10.0,
        samples: 20,
        sample_interval: 0.05,
        sample_duration: 1.0,
        min_spacing: 0.0,
        initial_norm: (0.5, 2.0),
    };
    let cloud = rdlab_core::attractor::sample_attractor(&problem, &plan, 1e-3, Scheme::ImexCnAb2, 3).unwrap();
    assert!(cloud.states.iter().all(|s| s.l2_norm() <= 1e-6));
}

#[test]
fn synthetic_dimension_oracles() {
    let problem = chafee_infante(15.0, 127);
    let d = *problem.domain();
    let phi = find_equilibrium(&problem, &d.eigenmode([1, 0]), 30.0, 20_000, 1e-11).unwrap().state;
    let opts = DimensionOptions::default();
    let segment = segment_cloud(&phi, 600, &mut member_rng(1, 0));
    let torus = torus_cloud(&d, (1.0, 0.5), 800, &mut member_rng(1, 1)).unwrap();
    for tag in TAGS {
        let s = correlation_dimension(&segment, tag, &opts).unwrap();
        assert!((s.dimension - 1.0).abs() <= 0.15, "{tag}: {}", s.dimension);
        let t = correlation_dimension(&torus, tag, &opts).unwrap();
        assert!((t.dimension - 2.0).abs() <= 0.2, "{tag}: {}", t.dimension);
    }
}

#[test]
fn degenerate_clouds_have_dimension_zero() {
    let d = line(31);
    let opts = DimensionOptions::default();
    let same = PointCloud::from_states(vec![d.eigenmode([1, 0]); 10]).unwrap();
    let e = correlation_dimension(&same, NormTag::Lebesgue(2.0), &opts).unwrap();
    assert!(e.degenerate && e.dimension == 0.0);
    let two = PointCloud::from_states(vec![d.zeros(), d.eigenmode([2, 0])]).unwrap();
    let e = correlation_dimension(&two, NormTag::H1, &opts).unwrap();
    assert!(e.degenerate && e.dimension == 0.0);
}

#[test]
fn translation_leaves_nets_and_dimension_unchanged() {
    let d = line(63);
    let cloud = torus_cloud(&d, (1.0, 0.4), 600, &mut member_rng(5, 0)).unwrap();
    let z0 = d.eigenmode([3, 0]).scale(0.7);
    let moved = cloud.translated(&z0).unwrap();
    let opts = DimensionOptions::default();
    for tag in TAGS {
        for eps in [0.5, 0.2, 0.1] {
            let a = greedy_epsilon_net(&cloud, eps, tag).unwrap();
            let b = greedy_epsilon_net(&moved, eps, tag).unwrap();
            assert_eq!(a.indices, b.indices);
            assert!(b.covering_radius <= eps);
        }
        let a = correlation_dimension(&cloud, tag, &opts).unwrap();
        let b = correlation_dimension(&moved, tag, &opts).unwrap();
        assert!((a.dimension - b.dimension).abs() <= 1e-12);
    }
}

#[test]
fn net_size_is_monotone_in_eps() {
    let d = line(63);
    let cloud = torus_cloud(&d, (1.0, 0.4), 300, &mut member_rng(6, 0)).unwrap();
    let tag = NormTag::Lebesgue(4.0);
    let diameter = cloud.diameter(tag).unwrap();
    let mut previous = usize::MAX;
    for i in 0..12 {
        let eps = 1e-3 * (diameter * 1.01 / 1e-3).powf(i as f64 / 11.0);
        let net = greedy_epsilon_net(&cloud, eps, tag).unwrap();
        let e = cloud.embed(tag).unwrap();
        assert!(covering_radius(&e, &net.indices) <= eps);
        assert!(net.len() <= previous);
        previous = net.len();
    }
    assert_eq!(previous, 1);
    assert_eq!(greedy_epsilon_net(&cloud, 1e-9, tag).unwrap().len(), cloud.len());
}
