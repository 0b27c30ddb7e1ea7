use std::f64::consts::PI;

use nullgeo::flow::{trace, FlowParams};
use nullgeo::geometry::{future_null_covector, AuxMetric, Metric, PhaseState, Vector};
use nullgeo::metrics::Minkowski;
use nullgeo::nullspace::{class_of, hausdorff_witness, intersection_components, limit_classes, ClassParams, ProbeWindow, Region};
use nullgeo::surface::{band_distance, ProductSpacetime};

fn diag_state(m: &Minkowski, x: f64, y: f64) -> PhaseState {
    future_null_covector(m, &Vector::from_vec(vec![x, y]), &Vector::from_vec(vec![1.0, 0.0])).unwrap()
}

#[test]
fn minkowski_minus_origin_family_has_two_limits() {
    let m = Minkowski::minus_origin(1e-8);
    let params = ClassParams::default().with_span(4.0);
    let seq: Vec<_> = (1..=16).map(|n| class_of(&m, &diag_state(&m, -1.0, -1.0 + 1.0 / n as f64), params.aux).unwrap()).collect();
    let probes = [ProbeWindow::new("lower", vec![-1.0, -1.0], 0.5), ProbeWindow::new("upper", vec![1.0, 1.0], 0.5)];
    let r = limit_classes(&m, "diagonal", &seq, None, &probes, &params).unwrap();
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
    assert_eq!(r.limits.len(), 2);
    assert!(r.hausdorff_violation);
    assert!(r.pairwise_separations[0][1] > 1e-3);
}

#[test]
fn full_minkowski_family_has_one_limit() {
    let m = Minkowski::new(2);
    let params = ClassParams::default().with_span(4.0);
    let probes = [ProbeWindow::new("lower", vec![-1.0, -1.0], 0.5), ProbeWindow::new("upper", vec![1.0, 1.0], 0.5)];
    let sched: Vec<f64> = (1..=16).map(|n| 1.0 / n as f64).collect();
    let (w, r) = hausdorff_witness(&m, "diagonal", |e| Ok(diag_state(&m, -1.0, -1.0 + e)), &sched, &probes, &params).unwrap();
    assert!(w.is_none());
    assert_eq!(r.limits.len(), 1);
}

#[test]
fn revolution_meridian_family_violates_hausdorff() {
    let st = ProductSpacetime::sine8pi();
    let tb = band_distance(&st.surface, 1e-9, 0.5).unwrap() * 2.0;
    let probes =
        [ProbeWindow::new("outgoing", vec![0.0, 0.5, 0.0], 0.3), ProbeWindow::new("returning", vec![tb, 0.5, 0.195], 0.3)];
    let sched: Vec<f64> = (8..24).map(|n| 1.0 / n as f64).collect();
    for aux in [AuxMetric::WickFlip, AuxMetric::Euclidean] {
        let params = ClassParams::default().with_span(1.6).with_aux(aux);
        let t = std::time::Instant::now();
        let (w, r) =
            hausdorff_witness(&st, "meridian", |e| Ok(st.null_state(0.0, 0.5, 0.0, PI - e)), &sched, &probes, &params).unwrap();
        println!("{} {:?}", serde_json::to_string_pretty(&r).unwrap(), t.elapsed());
        assert!(w.is_some());
        assert!(r.limits.len() >= 2);
    }
}

#[test]
fn cylinder_geodesic_meets_region_twice() {
    let m = Minkowski::cylinder();
    let s = PhaseState::new(vec![0.25, 0.25], vec![-1.0, -1.0]);
    assert!(nullgeo::geometry::is_future_null(&m, &s, 1e-12).unwrap());
    let seg = trace(&m, &s, (-3.0, 3.0), &FlowParams::default()).unwrap();
    let region = Region::convex_hull(&[[0.0, 0.0], [1.5, 0.5], [1.0, 1.0], [0.5, -0.5]]).with_lift(0, 1.0);
    let r = intersection_components(&seg, &region);
    println!("{r:?} {}", m.name());
    assert_eq!(r.components, 2);
}
