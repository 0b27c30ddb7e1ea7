//! Scenarios on flat, quotient and deleted-point Minkowski charts, plus the
//! contact identities on random null states.

use std::sync::Arc;

use rand::Rng;
use serde_json::json;

use super::Ctx;
use crate::causal::closedness::{minkowski_horismos, straddling_null_sequence};
use crate::causal::{closedness_probe, leaf_causal, LeafFunctions, ProbeOutcome};
use crate::config::{key, Key};
use crate::error::Result;
use crate::flow::{contact_residuals, trace, FlowParams};
use crate::geometry::{future_null_covector, is_future_null, ChartPoint, Metric, PhaseState, Vector};
use crate::metrics::{Minkowski, SphereProduct};
use crate::nullspace::{hausdorff_witness, intersection_components, ClassParams, LimitReport, ProbeWindow, Region};
use crate::surface::ProductSpacetime;

pub const MINUS_POINT_KEYS: &[Key] = &[
    key("family_len", "16", "number of lines y = x + 1/n"),
    key("hole_radius", "1e-8", "radius resolving the deleted origin"),
    key("probe_radius", "0.5", "radius of the two observation windows"),
    key("span", "4", "half-width of the traced parameter window"),
    key("straddle_len", "12", "pairs in the straddling horismos sequence"),
];

fn diagonal_state(m: &Minkowski, x: f64, y: f64) -> Result<PhaseState> {
    future_null_covector(m, &Vector::from_vec(vec![x, y]), &Vector::from_vec(vec![1.0, 0.0]))
}

fn limit_rows(r: &LimitReport) -> Vec<Vec<f64>> {
    r.limits
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let s = &l.class.representative;
            std::iter::once(i as f64).chain(s.base.coords.iter().copied()).chain(s.covector.iter().copied()).collect()
        })
        .collect()
}

fn min_offdiag(m: &[Vec<f64>]) -> f64 {
    (0..m.len()).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| m[i][j]).fold(f64::INFINITY, f64::min)
}

pub fn minus_point(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.cfg.usize("family_len")?;
    let holed = Minkowski::minus_origin(ctx.cfg.f64("hole_radius")?);
    let full = Minkowski::new(2);
    let params = ClassParams { flow: ctx.flow_params()?, ..ClassParams::default() }.with_span(ctx.cfg.f64("span")?);
    let radius = ctx.cfg.f64("probe_radius")?;
    let probes = [ProbeWindow::new("lower", vec![-1.0, -1.0], radius), ProbeWindow::new("upper", vec![1.0, 1.0], radius)];
    let schedule: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();

    let (_, r) =
        hausdorff_witness(&holed, "y = x + 1/n", |e| diagonal_state(&holed, -1.0, -1.0 + e), &schedule, &probes, &params)?;
    ctx.check_eq("distinct limit classes", 2, r.limits.len());
    ctx.check_eq("hausdorff violation", true, r.hausdorff_violation);
    let sep = min_offdiag(&r.pairwise_separations);
    ctx.check_above("limit separation", params.delta_distinct, sep);
    ctx.plot("limits", &["limit", "x", "y", "alpha_x", "alpha_y"], limit_rows(&r));
    ctx.record("limit_report", &r);

    let (_, baseline) =
        hausdorff_witness(&full, "y = x + 1/n", |e| diagonal_state(&full, -1.0, -1.0 + e), &schedule, &probes, &params)?;
    ctx.check_eq("full Minkowski limit classes", 1, baseline.limits.len());
    ctx.record("full_minkowski_limits", baseline.limits.len());

    let len = ctx.cfg.usize("straddle_len")?;
    let tol = 1e-9;
    let holed_probe = closedness_probe(
        |a, b, t| Ok(minkowski_horismos(&holed, a, b, t)),
        [straddling_null_sequence(len)],
        holed.domain(),
        tol,
    )?;
    let full_probe =
        closedness_probe(|a, b, t| Ok(minkowski_horismos(&full, a, b, t)), [straddling_null_sequence(len)], full.domain(), tol)?;
    ctx.check_eq("E+ closedness with origin deleted", "Witness", outcome_name(&holed_probe));
    ctx.check_eq("E+ closedness in full Minkowski", "Pass", outcome_name(&full_probe));
    ctx.record("horismos_probe", json!({ "minus_origin": holed_probe, "full": full_probe }));
    Ok(())
}

pub fn outcome_name(o: &ProbeOutcome) -> &'static str {
    match o {
        ProbeOutcome::Pass { .. } => "Pass",
        ProbeOutcome::Witness { .. } => "Witness",
    }
}

pub const CYLINDER_KEYS: &[Key] = &[key("span", "3", "half-width of the traced parameter window")];

pub fn cylinder(ctx: &mut Ctx) -> Result<()> {
    let m = Minkowski::cylinder();
    let span = ctx.cfg.f64("span")?;
    // Velocity (−1, 1) lowers to the covector (−1, −1).
    let s = PhaseState::new(vec![0.25, 0.25], vec![-1.0, -1.0]);
    ctx.check_eq("start state is future null", true, is_future_null(&m, &s, 1e-12)?);
    let seg = trace(&m, &s, (-span, span), &ctx.flow_params()?)?;
    let region = Region::convex_hull(&[[0.0, 0.0], [1.5, 0.5], [1.0, 1.0], [0.5, -0.5]]).with_lift(0, 1.0);
    let report = intersection_components(&seg, &region);
    ctx.check_eq("intersection components", 2, report.components);
    ctx.record("intersection_components", report.components);
    ctx.record("intervals", &report.intervals);
    let rows = seg
        .dense_parameters(16)
        .into_iter()
        .map(|t| {
            let p = m.domain().wrap(&seg.base_at(t));
            vec![t, p[0], p[1], if region.contains(&p) { 1.0 } else { 0.0 }]
        })
        .collect();
    ctx.plot("trace", &["t", "x", "y", "inside"], rows);
    Ok(())
}

pub const LEAVES_KEYS: &[Key] = &[
    key("pairs", "10000", "random pairs compared with the analytic cone"),
    key("traced_pairs", "200", "pairs compared using traced null foliations"),
    key("extent", "2", "sampling box half-width"),
];

pub fn flat_leaves(ctx: &mut Ctx) -> Result<()> {
    let pairs = ctx.cfg.usize("pairs")?;
    let traced = ctx.cfg.usize("traced_pairs")?;
    let extent = ctx.cfg.f64("extent")?;
    let analytic = LeafFunctions::minkowski2();
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-extent..extent)).collect();
        (ChartPoint::new(vec![v[0], v[1]]), ChartPoint::new(vec![v[2], v[3]]))
    };
    let cone = |p: &ChartPoint, q: &ChartPoint| {
        let d = &q.coords - &p.coords;
        (d[1] >= d[0].abs(), d[1] - d[0].abs())
    };
    let (mut disagree, mut related) = (0usize, 0usize);
    for _ in 0..pairs {
        let (p, q) = sample(&mut ctx.rng);
        let truth = cone(&p, &q).0;
        related += truth as usize;
        if leaf_causal(&analytic, &p, &q)? != truth {
            disagree += 1;
        }
    }
    ctx.check_eq("analytic leaf functions vs cone disagreements", 0, disagree);
    ctx.record("analytic", json!({ "pairs": pairs, "causal": related, "disagreements": disagree }));

    let flow = FlowParams { max_param: 4.0 * extent, ..ctx.flow_params()? };
    let foliated = LeafFunctions::from_null_foliations(Arc::new(Minkowski::new(2)), 0.0, 0.0, flow)?;
    let (mut disagree, mut skipped) = (0usize, 0usize);
    let mut rows = Vec::new();
    for _ in 0..traced {
        let (p, q) = sample(&mut ctx.rng);
        let (truth, margin) = cone(&p, &q);
        if margin.abs() < 1e-6 {
            skipped += 1;
            continue;
        }
        let got = leaf_causal(&foliated, &p, &q)?;
        disagree += (got != truth) as usize;
        let (f1, f2) = foliated.eval(&p.coords)?;
        rows.push(vec![p.coords[0], p.coords[1], f1, f2]);
    }
    ctx.check_eq("traced leaf functions vs cone disagreements", 0, disagree);
    ctx.record("traced", json!({ "pairs": traced, "skipped_near_cone": skipped, "disagreements": disagree }));
    ctx.plot("leaf-values", &["x", "y", "f1", "f2"], rows);
    Ok(())
}

pub const CONTACT_KEYS: &[Key] = &[key("states", "1000", "random null states, spread over four metrics")];

fn random_null<M: Metric + ?Sized, R: Rng>(m: &M, rng: &mut R, base: Vector) -> Result<PhaseState> {
    loop {
        let spatial = Vector::from_fn(m.dim(), |_, _| rng.gen_range(-1.0..1.0));
        if let Ok(s) = future_null_covector(m, &base, &spatial) {
            return Ok(s);
        }
    }
}

pub fn contact(ctx: &mut Ctx) -> Result<()> {
    let states = ctx.cfg.usize("states")?;
    let m3 = Minkowski::new(3);
    let m4 = Minkowski::new(4);
    let sphere = SphereProduct::new();
    let product = ProductSpacetime::sine8pi();
    let (mut theta_x, mut theta_xi, mut nu_min) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut per_metric = std::collections::BTreeMap::new();
    for i in 0..states {
        let rng = &mut ctx.rng;
        let (name, res) = match i % 4 {
            0 => {
                let b = Vector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
                (m3.name().to_string(), contact_residuals(&m3, &random_null(&m3, rng, b)?)?)
            }
            1 => {
                let b = Vector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
                (m4.name().to_string(), contact_residuals(&m4, &random_null(&m4, rng, b)?)?)
            }
            2 => {
                let b = Vector::from_vec(vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.3..2.8),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ]);
                (sphere.name().to_string(), contact_residuals(&sphere, &random_null(&sphere, rng, b)?)?)
            }
            _ => {
                let b = Vector::from_vec(vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.1..0.9),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ]);
                (product.name().to_string(), contact_residuals(&product, &random_null(&product, rng, b)?)?)
            }
        };
        theta_x = theta_x.max(res.theta_hamiltonian.abs());
        theta_xi = theta_xi.max(res.theta_euler.abs());
        nu_min = nu_min.min(res.nu.abs());
        let e = per_metric.entry(name).or_insert((0usize, f64::INFINITY));
        e.0 += 1;
        e.1 = e.1.min(res.nu.abs());
    }
    ctx.check_below("max |theta(X_g)|", 1e-10, theta_x);
    ctx.check_below("max |theta(xi)|", 1e-10, theta_xi);
    ctx.check_above("min |nu|", 1e-6, nu_min);
    ctx.record("states", states);
    ctx.record("max_theta_hamiltonian", theta_x);
    ctx.record("max_theta_euler", theta_xi);
    ctx.record("min_nu", nu_min);
    ctx.record(
        "per_metric",
        per_metric.into_iter().map(|(k, (n, nu))| (k, json!({ "states": n, "min_nu": nu }))).collect::<serde_json::Map<_, _>>(),
    );
    Ok(())
}
