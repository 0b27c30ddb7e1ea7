//! Scenarios on the product spacetime over the sine-profile surface.

use std::f64::consts::PI;

use rand::Rng;
use serde_json::json;

use super::lorentz::outcome_name;
use super::Ctx;
use crate::causal::closedness::{meridian_approach_sequence, product_causal, random_product_sequences};
use crate::causal::{causal_relation_points, closedness_probe, GridOracle, GridSpec, CAUSAL_TOL};
use crate::config::{key, Key};
use crate::error::{GeoError, Result};
use crate::flow::{flow, trace, FlowParams, NullProjection};
use crate::geometry::{energy, legendre, AuxMetric, ChartPoint, Metric, TangentVector, Vector};
use crate::nullspace::{hausdorff_witness, ClassParams, LimitReport, ProbeWindow};
use crate::quad::integrate_scalar;
use crate::surface::{
    band_distance, circle_length, clairaut_constant, distance, turning_points, DistanceEstimate, ProductSpacetime, SurfaceMetric,
};

pub const HAUSDORFF_KEYS: &[Key] = &[
    key("family_start", "8", "first n of the angle schedule 1/n"),
    key("family_len", "16", "number of family members"),
    key("span", "1.6", "half-width of the traced parameter window"),
    key("probe_radius", "0.3", "radius of the observation windows"),
    key("sequences", "200", "seeded convergent sequences for the J+ closedness probe"),
    key("sequence_len", "6", "pairs per convergent sequence"),
    key("grid_resolution", "32", "grid oracle nodes per axis"),
    key("grid_time_steps", "6", "time steps spanned by one grid edge"),
    key("grid_sources", "25", "grid source nodes"),
    key("grid_targets", "20", "targets per grid source"),
    key("grid_cache", "", "optional grid cache file"),
];

fn limit_summary(r: &LimitReport) -> serde_json::Value {
    json!({
        "limits": r.limits.len(),
        "hausdorff_violation": r.hausdorff_violation,
        "windows": r.windows,
        "pairwise_separations": r.pairwise_separations,
    })
}

fn min_offdiag(m: &[Vec<f64>]) -> f64 {
    (0..m.len()).flat_map(|i| (0..i).map(move |j| m[i][j])).fold(f64::INFINITY, f64::min)
}

pub fn hausdorff(ctx: &mut Ctx) -> Result<()> {
    let st = ProductSpacetime::sine8pi();
    let fp = ctx.flow_params()?;
    witness_part(ctx, &st, &fp)?;
    closedness_part(ctx, &st, &fp)?;
    oracle_part(ctx, &st, &fp)
}

/// Geodesics leaving `(0, 1/2, 0)` at angle `1/n` from the downward meridian.
fn witness_part(ctx: &mut Ctx, st: &ProductSpacetime, fp: &FlowParams) -> Result<()> {
    let start = ctx.cfg.usize("family_start")?.max(1);
    let len = ctx.cfg.usize("family_len")?;
    let radius = ctx.cfg.f64("probe_radius")?;
    let schedule: Vec<f64> = (start..start + len).map(|n| 1.0 / n as f64).collect();
    // A near-meridian geodesic comes back from the x = 0 end after about
    // twice the band length, rotated by the cone holonomy.
    let t_back = 2.0 * band_distance(&st.surface, 1e-9, 0.5)?;
    let slope = st.surface.profile.dr(0.0);
    let shift = (PI * (1.0 + slope * slope).sqrt() / slope).rem_euclid(2.0 * PI);
    let probes = [
        ProbeWindow::new("outgoing", vec![0.0, 0.5, 0.0], radius),
        ProbeWindow::new("returning", vec![t_back, 0.5, shift], radius),
    ];
    let mut verdicts = Vec::new();
    let mut summary = serde_json::Map::new();
    for aux in [AuxMetric::WickFlip, AuxMetric::Euclidean] {
        let params = ClassParams { flow: fp.clone(), ..ClassParams::default() }.with_span(ctx.cfg.f64("span")?).with_aux(aux);
        let (_, r) = hausdorff_witness(
            st,
            "meridian approach",
            |e| Ok(st.null_state(0.0, 0.5, 0.0, PI - e)),
            &schedule,
            &probes,
            &params,
        )?;
        ctx.check_above(&format!("distinct limit classes ({})", aux.label()), 1.5, r.limits.len() as f64);
        ctx.check_above(
            &format!("limit separation ({})", aux.label()),
            params.delta_distinct,
            min_offdiag(&r.pairwise_separations),
        );
        if aux == AuxMetric::WickFlip {
            let rows = r
                .limits
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let s = &l.class.representative;
                    std::iter::once(i as f64).chain(s.base.coords.iter().copied()).chain(s.covector.iter().copied()).collect()
                })
                .collect();
            ctx.plot("limits", &["limit", "t", "x", "phi", "alpha_t", "alpha_x", "alpha_phi"], rows);
            ctx.record("limit_report", &r);
        }
        summary.insert(aux.label().to_string(), limit_summary(&r));
        verdicts.push(r.hausdorff_violation);
    }
    ctx.check_eq("hausdorff violation", true, verdicts[0]);
    ctx.check_eq("verdict stable under aux swap", verdicts[0], verdicts[1]);
    ctx.record("aux_comparison", summary);
    ctx.record("probe_centers", json!({ "returning_time": t_back, "returning_phi": shift }));
    Ok(())
}

fn closedness_part(ctx: &mut Ctx, st: &ProductSpacetime, fp: &FlowParams) -> Result<()> {
    let count = ctx.cfg.usize("sequences")?;
    let len = ctx.cfg.usize("sequence_len")?;
    let mut seqs = random_product_sequences(st, &mut ctx.rng, count, len, fp)?;
    seqs.push(meridian_approach_sequence(st, 0.5, 0.0, 0.3, len.max(4), fp)?);
    let n = seqs.len();
    let outcome = closedness_probe(product_causal(st, fp), seqs, st.domain(), CAUSAL_TOL)?;
    ctx.check_eq("J+ closedness probe", "Pass", outcome_name(&outcome));
    ctx.record("closedness", json!({ "sequences": n, "outcome": outcome }));
    Ok(())
}

/// Unit-speed surface geodesic from `p` along the estimated minimizer.
fn shot_miss(surface: &SurfaceMetric, p: &ChartPoint, q: &ChartPoint, est: &DistanceEstimate, fp: &FlowParams) -> Result<f64> {
    if est.distance == 0.0 {
        return Ok(surface.domain().distance(&p.coords, &q.coords));
    }
    let (vx, vphi) = est.initial_velocity;
    let s = legendre(surface, &TangentVector::new(p.coords.iter().copied().collect(), vec![vx, vphi]))?;
    let end = flow(surface, &s, est.distance, fp)?;
    Ok(surface.domain().distance(&end.base.coords, &q.coords))
}

fn oracle_part(ctx: &mut Ctx, st: &ProductSpacetime, fp: &FlowParams) -> Result<()> {
    let res = ctx.cfg.usize("grid_resolution")?;
    let spec =
        GridSpec::new(vec![0.0, 0.02, 0.0], vec![0.6, 0.98, 2.0 * PI], res).with_time_steps(ctx.cfg.usize("grid_time_steps")?);
    let grid = GridOracle::build_cached(st, &spec, ctx.cfg.path("grid_cache"))?;
    let h = grid.cell_size().to_vec();
    // Chart cell diagonal in the product metric, with the largest |r'| and r.
    let (r_max, _) = st.surface.profile.maximum();
    let s_max = st.surface.profile.speed(0.0);
    let diam = (h[0].powi(2) + (h[1] * s_max).powi(2) + (h[2] * r_max).powi(2)).sqrt();
    let sources = ctx.cfg.usize("grid_sources")?;
    let targets = ctx.cfg.usize("grid_targets")?;
    let (mut agree, mut hard, mut near, mut uncertain, mut shots, mut shot_fail) =
        (0usize, 0usize, 0usize, 0usize, 0usize, 0usize);
    let mut worst_shot = 0.0f64;
    let mut rows = Vec::new();
    let early = grid.node_count() / 4;
    for _ in 0..sources {
        let src = loop {
            let i = ctx.rng.gen_range(0..early);
            if grid.is_active(i) {
                break i;
            }
        };
        let set = grid.reach_set(src);
        let pu = grid.node_position(src);
        for _ in 0..targets {
            let dst = ctx.rng.gen_range(0..grid.node_count());
            let pv = grid.node_position(dst);
            let (a, b) = (ChartPoint::from_vector(pu.clone()), ChartPoint::from_vector(pv.clone()));
            let verdict = match causal_relation_points(st, &a, &b, None, fp) {
                Ok(v) => v,
                Err(GeoError::CausalUncertain { .. }) => {
                    uncertain += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            // Shooting evidence: the minimizer behind the verdict is an actual geodesic.
            let (sp, sq) = (st.spatial(&pu), st.spatial(&pv));
            let est = distance(&st.surface, &sp, &sq, fp)?;
            let miss = shot_miss(&st.surface, &sp, &sq, &est, fp)?;
            shots += 1;
            worst_shot = worst_shot.max(miss);
            if miss > 1e-6 {
                shot_fail += 1;
            }
            let reach = GridOracle::contains(&set, dst);
            rows.push(vec![pu[0], pu[1], pu[2], pv[0], pv[1], pv[2], verdict.margin, reach as u8 as f64]);
            if verdict.margin.abs() < 2.0 * diam {
                near += 1;
            } else if reach == verdict.relation.is_causal() {
                agree += 1;
            } else {
                hard += 1;
            }
        }
    }
    ctx.check_eq("grid oracle hard disagreements", 0, hard);
    ctx.check_eq("shooting evidence failures", 0, shot_fail);
    ctx.record(
        "grid_oracle",
        json!({
            "pairs": sources * targets,
            "agree": agree,
            "hard_disagreements": hard,
            "within_two_cells": near,
            "uncertain": uncertain,
            "cell_diameter": diam,
            "resolution": res,
            "stencil": grid.stencil_len(),
        }),
    );
    ctx.record("shooting", json!({ "shots": shots, "failures": shot_fail, "worst_endpoint_miss": worst_shot }));
    ctx.plot("grid-pairs", &["t_p", "x_p", "phi_p", "t_q", "x_q", "phi_q", "margin", "grid_reach"], rows);
    Ok(())
}

pub const DISTANCE_KEYS: &[Key] = &[
    key("pairs", "100", "random pairs for the band bound"),
    key("geodesics", "100", "random geodesics for the conservation check"),
    key("conservation_span", "20", "parameter span of each conservation trace"),
];

pub fn distances(ctx: &mut Ctx) -> Result<()> {
    let st = ProductSpacetime::sine8pi();
    let surface = &st.surface;
    let fp = ctx.flow_params()?;

    // Length of the parallel x = 1/2 by quadrature of the metric along φ.
    let x0 = 0.5;
    let oracle =
        integrate_scalar(|phi| surface.components(&Vector::from_vec(vec![x0, phi]))[(1, 1)].sqrt(), 0.0, 2.0 * PI, 1e-15, 1e-14)
            .0;
    let len = circle_length(surface, x0)?;
    ctx.check_below("circle_length(0.5) vs quadrature", 1e-10, (len - oracle).abs());
    ctx.check_below("circle_length(0.5) vs 1/4", 1e-10, (len - 0.25).abs());
    ctx.record("circle_length", json!({ "x": x0, "value": len, "quadrature": oracle }));

    let pairs = ctx.cfg.usize("pairs")?;
    let (mut band_violations, mut dist_violations) = (0usize, 0usize);
    let mut worst_gap = f64::INFINITY;
    let mut rows = Vec::new();
    for _ in 0..pairs {
        let (x1, x2) = (ctx.rng.gen_range(0.01..0.99), ctx.rng.gen_range(0.01..0.99));
        let (f1, f2) = (ctx.rng.gen_range(0.0..2.0 * PI), ctx.rng.gen_range(0.0..2.0 * PI));
        let band = band_distance(surface, x1, x2)?;
        let d = distance(surface, &ChartPoint::new(vec![x1, f1]), &ChartPoint::new(vec![x2, f2]), &fp)?;
        worst_gap = worst_gap.min(band - (x1 - x2).abs());
        band_violations += (band < (x1 - x2).abs()) as usize;
        dist_violations += (d.distance < band - d.uncertainty - 1e-12) as usize;
        rows.push(vec![x1, f1, x2, f2, band, d.distance]);
    }
    ctx.check_eq("band_distance < |dx| cases", 0, band_violations);
    ctx.check_eq("distance < band_distance cases", 0, dist_violations);
    ctx.record("band_bound", json!({ "pairs": pairs, "min_band_minus_dx": worst_gap }));
    ctx.plot("distances", &["x_p", "phi_p", "x_q", "phi_q", "band", "distance"], rows);

    // Opposite points on a small parallel near either end: the minimizer
    // crosses the short way round and never reaches the deleted end.
    let mut near_end = Vec::new();
    let mut confined = true;
    for (xa, xb) in [(0.01, 0.01), (0.02, 0.04), (0.99, 0.99), (0.97, 0.985)] {
        let (p, q) = (ChartPoint::new(vec![xa, 0.0]), ChartPoint::new(vec![xb, PI]));
        let d = distance(surface, &p, &q, &fp)?;
        let via_end = band_distance(surface, 1e-12, xa)? + band_distance(surface, 1e-12, xb)?;
        let via_end =
            if xa > 0.5 { band_distance(surface, xa, 1.0 - 1e-12)? + band_distance(surface, xb, 1.0 - 1e-12)? } else { via_end };
        let ok = d.x_range.0 > 0.0 && d.x_range.1 < 1.0 && d.distance < via_end;
        confined &= ok;
        near_end.push(json!({ "p": [xa, 0.0], "q": [xb, PI], "distance": d.distance, "via_end": via_end, "x_range": d.x_range, "pattern": d.pattern }));
    }
    ctx.check_eq("near-end minimizers confined to the open band", true, confined);
    ctx.record("near_end", near_end);

    conservation(ctx, &st)
}

/// Clairaut constant, energy and `α_t` along random null geodesics that stay
/// between their turning points.
fn conservation(ctx: &mut Ctx, st: &ProductSpacetime) -> Result<()> {
    let n = ctx.cfg.usize("geodesics")?;
    let span = ctx.cfg.f64("conservation_span")?;
    let fp = FlowParams { null_projection: NullProjection::Never, max_param: span, ..ctx.flow_params()? };
    let (mut dc, mut de, mut dt, mut rejected) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    let mut done = 0;
    while done < n {
        let x0 = ctx.rng.gen_range(0.2..0.8);
        let psi = ctx.rng.gen_range(0.0..2.0 * PI);
        let phi = ctx.rng.gen_range(0.0..2.0 * PI);
        let s = st.null_state(0.0, x0, phi, psi);
        let c = clairaut_constant(&s);
        let (lo, hi) = turning_points(&st.surface.profile, x0, c.abs());
        if !(lo > 0.05 && hi < 0.95) {
            rejected += 1;
            continue;
        }
        let seg = trace(st, &s, (0.0, span), &fp)?;
        if seg.truncated() {
            return Err(GeoError::Numeric(format!("conservation trace from x = {x0}, psi = {psi} truncated")));
        }
        let e0 = energy(st, &s)?;
        for (_, state) in &seg.samples {
            dc = dc.max((clairaut_constant(state) - c).abs());
            de = de.max((energy(st, state)? - e0).abs());
            dt = dt.max((state.covector[0] - s.covector[0]).abs());
        }
        done += 1;
    }
    ctx.check_below("Clairaut drift", 1e-9, dc);
    ctx.check_below("energy drift", 1e-9, de);
    ctx.record("conservation", json!({ "geodesics": n, "span": span, "clairaut_drift": dc, "energy_drift": de, "alpha_t_drift": dt, "rejected_samples": rejected }));
    Ok(())
}
