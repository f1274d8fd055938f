use approx::assert_abs_diff_eq;

use hadamard_flow::destabilizer::{
    escape_test, extract_ray, sharpness_report, uniqueness_probe, Case, PipelineOptions,
};
use hadamard_flow::flow::{mayer_flow, FlowConfig};
use hadamard_flow::geodesic::GeodesicSpace;
use hadamard_flow::model::euclidean::{Euclidean, EuclideanFunctional};
use hadamard_flow::model::tripod::{Tripod, TripodLinear, TripodPoint};
use hadamard_flow::ray::ray_norm;
use hadamard_flow::registry::{EuclidKind, EuclidModel, Model, TripodModel};
use hadamard_flow::Error;

fn plane() -> Euclidean {
    Euclidean::new(2).unwrap()
}

fn line() -> Euclidean {
    Euclidean::new(1).unwrap()
}

#[test]
fn escape_examples() {
    let cfg = FlowConfig::default();
    let a = EuclideanFunctional::Linear(vec![3.0, 4.0]);
    let t = mayer_flow(&plane(), &a, &vec![0.0, 0.0], 8.0, 64, &cfg).unwrap();
    let v = escape_test(&plane(), &t, 1.0, 1e-2).unwrap();
    assert_eq!(v.case, Case::Escaping);
    assert_abs_diff_eq!(v.rate, 5.0, epsilon = 1e-9);
    assert!(!v.inconclusive);

    let q = mayer_flow(&line(), &EuclideanFunctional::Quadratic, &vec![1.0], 16.0, 128, &cfg).unwrap();
    assert_eq!(escape_test(&line(), &q, 1.0, 1e-2).unwrap().case, Case::Bounded);

    // Far from the start but stalled: the two criteria disagree.
    let abs = mayer_flow(&line(), &EuclideanFunctional::Abs, &vec![5.0], 16.0, 128, &cfg).unwrap();
    let v = escape_test(&line(), &abs, 1.0, 1e-2).unwrap();
    assert_eq!(v.case, Case::Bounded);
    assert!(v.inconclusive);
}

#[test]
fn extraction_examples() {
    let cfg = FlowConfig::default();
    let a = EuclideanFunctional::Linear(vec![3.0, 4.0]);
    let t = mayer_flow(&plane(), &a, &vec![0.0, 0.0], 8.0, 64, &cfg).unwrap();
    let (ray, ex) = extract_ray(&plane(), &t, 4.0).unwrap();
    let (b, p) = (ray.base(), ray.position(&plane(), 1.0).unwrap());
    assert_abs_diff_eq!(p[0] - b[0], -0.6, epsilon = 1e-12);
    assert_abs_diff_eq!(p[1] - b[1], -0.8, epsilon = 1e-12);
    assert!(ex.nodes.len() >= 2);

    let g = TripodLinear::new([-1.0, 2.0, 2.0], false).unwrap();
    let t = mayer_flow(&Tripod, &g, &TripodPoint::new(2, 1.5), 32.0, 256, &cfg).unwrap();
    let (ray, _) = extract_ray(&Tripod, &t, 8.0).unwrap();
    let far = ray.position(&Tripod, 8.0).unwrap();
    assert_eq!(far.branch, 1);
    assert_abs_diff_eq!(ray_norm(&ray), 1.0, epsilon = 1e-9);

    let e = EuclideanFunctional::ExpLinear { weight: 1.0 };
    let t = mayer_flow(&line(), &e, &vec![0.0], 32.0, 1024, &cfg).unwrap();
    let (ray, _) = extract_ray(&line(), &t, 4.0).unwrap();
    let step = ray.position(&line(), 4.0).unwrap()[0] - ray.base()[0];
    assert_abs_diff_eq!(step, 4.0, epsilon = 1e-5);

    assert!(extract_ray(&plane(), &t_short(), 4.0).is_err());
    assert!(extract_ray(&line(), &t, 0.5).is_err());
}

fn t_short() -> hadamard_flow::flow::FlowTrajectory<Vec<f64>> {
    let a = EuclideanFunctional::Linear(vec![3.0, 4.0]);
    mayer_flow(&plane(), &a, &vec![0.0, 0.0], 1.0, 1, &FlowConfig::default()).unwrap()
}

fn report<M: Model>(
    model: &M,
    x0: &<M::Space as GeodesicSpace>::Point,
) -> hadamard_flow::destabilizer::SharpnessReport<<M::Space as GeodesicSpace>::Point> {
    sharpness_report(
        model.space(),
        model.functional(),
        model.dominating(),
        x0,
        &model.options(),
    )
    .unwrap()
}

#[test]
fn sharpness_examples() {
    let linear = EuclidModel::new("euclid.linear.3.4", EuclidKind::Linear(vec![3.0, 4.0])).unwrap();
    let r = report(&linear, &vec![0.0, 0.0]);
    assert_eq!(r.case, Case::Escaping);
    assert_abs_diff_eq!(r.b, 5.0, epsilon = 1e-6);
    assert_abs_diff_eq!(r.ratio, 5.0, epsilon = 1e-3);
    assert_abs_diff_eq!(r.norm, 1.0, epsilon = 1e-6);
    assert!(r.gap.abs() <= 1e-3);

    let quad = EuclidModel::new("euclid.quadratic", EuclidKind::Quadratic(1)).unwrap();
    let r = report(&quad, &vec![1.0]);
    assert_eq!(r.case, Case::Bounded);
    assert!(r.b <= 1e-4 && r.ray.is_trivial() && r.ratio == 0.0);

    // F = −x + e^{−x} flowed under the dominating G = −x + 2e^{−x}.
    let pair = EuclidModel::new("euclid.pair", EuclidKind::Pair).unwrap();
    let r = report(&pair, &vec![0.0]);
    assert_eq!(r.case, Case::Escaping);
    assert_abs_diff_eq!(r.b, 1.0, epsilon = 2e-3);
    assert_abs_diff_eq!(r.ratio, 1.0, epsilon = 2e-3);
    assert!(r.diagnostics.hypotheses.max_excess <= 0.0);
    assert!(r.diagnostics.hypotheses.max_increase <= 0.0);

    let tripod = TripodModel::new([-1.0, 2.0, 2.0], false).unwrap();
    let r = report(&tripod, &TripodPoint::origin());
    assert_eq!(r.case, Case::Escaping);
    assert_abs_diff_eq!(r.b, 1.0, epsilon = 1e-3);
    assert_eq!(r.ray.position(&Tripod, 4.0).unwrap().branch, 1);
    assert!(r.unstable(1e-3));
}

#[test]
fn nonnegative_tripod_is_bounded() {
    let tripod = TripodModel::new([0.0, 2.0, 2.0], false).unwrap();
    let r = report(&tripod, &TripodPoint::new(2, 1.0));
    assert_eq!(r.case, Case::Bounded);
    assert!(r.b <= 1e-6);
    assert!(!r.unstable(1e-3));
}

#[test]
fn hypothesis_failure() {
    let f = EuclideanFunctional::ExpLinear { weight: 2.0 };
    let g = EuclideanFunctional::ExpLinear { weight: 1.0 };
    let err = sharpness_report(&line(), &f, &g, &vec![0.0], &PipelineOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Hypothesis(_)));
}

#[test]
fn uniqueness_examples() {
    let linear = EuclidModel::new("euclid.linear.3.4", EuclidKind::Linear(vec![3.0, 4.0])).unwrap();
    let space = linear.space();
    let u = uniqueness_probe(
        space,
        linear.functional(),
        linear.dominating(),
        &linear.canonical_starts(),
        &linear.options(),
        |a, b| space.distance(a, b),
    )
    .unwrap();
    assert!(u.value <= 1e-4, "{}", u.value);
    assert_eq!(u.reports.len(), 3);

    let tripod = TripodModel::new([-1.0, 2.0, 2.0], false).unwrap();
    let u = uniqueness_probe(
        &Tripod,
        tripod.functional(),
        tripod.dominating(),
        &tripod.canonical_starts(),
        &tripod.options(),
        |a, b| Tripod.distance(a, b),
    )
    .unwrap();
    assert!(u.value <= 1e-4, "{}", u.value);

    let valley = EuclidModel::new("euclid.valley", EuclidKind::Valley).unwrap();
    let space = valley.space();
    let u = uniqueness_probe(
        space,
        valley.functional(),
        valley.dominating(),
        &valley.canonical_starts(),
        &valley.options(),
        |a, b| space.distance(a, b),
    )
    .unwrap();
    assert_eq!(u.value, 0.0);
    assert!(u.reports.iter().all(|r| r.case == Case::Bounded));
}
