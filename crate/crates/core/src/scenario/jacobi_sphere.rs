//! Conjugate points and index definiteness on `ℝ × S²`, plus the
//! equivalence check on sampled segments of all bundled metrics.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::Ctx;
use crate::config::{key, Key};
use crate::error::Result;
use crate::geometry::{Metric, PhaseState};
use crate::jacobi::{conjugate_points, frame_along, index_matrix, jacobi_solve, Definiteness};
use crate::metrics::{Minkowski, SphereProduct};
use crate::surface::ProductSpacetime;

pub const KEYS: &[Key] = &[
    key("basis_size", "50", "hat functions in the index matrix"),
    key("segments", "50", "sampled segments in the equivalence check"),
];

fn equator() -> PhaseState {
    PhaseState::new(vec![0.0, PI / 2.0, 0.0], vec![-1.0, 0.0, 1.0])
}

#[derive(Serialize)]
struct Segment {
    metric: String,
    length: f64,
    conjugate_points: Vec<f64>,
    marginal: Vec<f64>,
    verdict: Definiteness,
    max_eigenvalue: f64,
    agree: bool,
}

fn check_segment<M: Metric + ?Sized>(metric: &M, s: &PhaseState, length: f64, m: usize) -> Result<Option<Segment>> {
    let frame = match frame_along(metric, s, (0.0, length)) {
        Ok(f) => f,
        // Segments that leave the chart are resampled.
        Err(crate::GeoError::Domain { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let cp = conjugate_points(&frame)?;
    // Keep segments at least 1e-2 away from their conjugate parameters.
    if cp.points.iter().chain(&cp.marginal).any(|t| (t - length).abs() < 1e-2) {
        return Ok(None);
    }
    let im = index_matrix(&frame, m)?;
    let agree = cp.is_empty() == (im.verdict == Definiteness::NegativeDefinite);
    Ok(Some(Segment {
        metric: metric.name().to_string(),
        length,
        conjugate_points: cp.points,
        marginal: cp.marginal,
        verdict: im.verdict,
        max_eigenvalue: im.eigenvalues.last().copied().unwrap_or(f64::NEG_INFINITY),
        agree,
    }))
}

pub fn run(ctx: &mut Ctx) -> Result<()> {
    let m = ctx.cfg.usize("basis_size")?;
    let sphere = SphereProduct::new();

    let long = frame_along(&sphere, &equator(), (0.0, 3.5))?;
    let cp = conjugate_points(&long)?;
    let first = cp.points.first().copied().unwrap_or(f64::NAN);
    ctx.check_below("conjugate point at pi", 1e-6, (first - PI).abs());
    let v = jacobi_solve(&long, &[0.0], &[1.0])?;
    let sin_err = v.nodes.iter().zip(&v.coefficients).map(|(t, c)| (c[0] - t.sin()).abs()).fold(0.0, f64::max);
    ctx.check_below("Jacobi field vs sin t", 1e-7, sin_err);
    ctx.plot(
        "jacobi-field",
        &["t", "V", "sin_t"],
        v.nodes.iter().zip(&v.coefficients).map(|(t, c)| vec![*t, c[0], t.sin()]).collect(),
    );

    let long_index = index_matrix(&long, m)?;
    let short = frame_along(&sphere, &equator(), (0.0, PI - 0.1))?;
    let short_index = index_matrix(&short, m)?;
    let flat = Minkowski::new(3);
    let flat_frame = frame_along(&flat, &PhaseState::new(vec![0.0, 0.0, 0.0], vec![0.6, 0.8, -1.0]), (0.0, 3.5))?;
    let flat_index = index_matrix(&flat_frame, m)?;
    ctx.check_eq("index verdict, length 3.5", "Indefinite", &*format!("{:?}", long_index.verdict));
    ctx.check_eq("index verdict, length pi - 0.1", "NegativeDefinite", &*format!("{:?}", short_index.verdict));
    ctx.check_eq("index verdict, flat segment", "NegativeDefinite", &*format!("{:?}", flat_index.verdict));
    ctx.record(
        "sphere",
        json!({
            "conjugate_points": cp.points,
            "jacobi_sin_error": sin_err,
            "index_3_5": { "verdict": long_index.verdict, "max_eigenvalue": long_index.eigenvalues.last() },
            "index_pi_minus_0_1": { "verdict": short_index.verdict, "max_eigenvalue": short_index.eigenvalues.last() },
            "index_flat": { "verdict": flat_index.verdict, "max_eigenvalue": flat_index.eigenvalues.last() },
        }),
    );

    let wanted = ctx.cfg.usize("segments")?;
    let m4 = Minkowski::new(4);
    let product = ProductSpacetime::sine8pi();
    let mut segments = Vec::new();
    let mut rejected = 0usize;
    let mut i = 0usize;
    while segments.len() < wanted {
        let rng = &mut ctx.rng;
        let seg = match i % 5 {
            0 => {
                let a: f64 = rng.gen_range(0.0..2.0 * PI);
                let s = PhaseState::new(vec![0.0, 0.0, 0.0], vec![a.cos(), a.sin(), -1.0]);
                check_segment(&flat, &s, rng.gen_range(0.5..4.0), m)?
            }
            1 => {
                let (a, b): (f64, f64) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(-1.0..1.0f64).acos());
                let s = PhaseState::new(vec![0.0; 4], vec![b.sin() * a.cos(), b.sin() * a.sin(), b.cos(), -1.0]);
                check_segment(&m4, &s, rng.gen_range(0.5..4.0), m)?
            }
            2 | 3 => {
                // Unit speed on the sphere factor; keep the great circle away from the poles.
                let th: f64 = rng.gen_range(0.8..PI - 0.8);
                let heading: f64 = rng.gen_range(0.0..2.0 * PI);
                if (th.sin() * heading.sin()).abs() < 0.5 {
                    rejected += 1;
                    continue;
                }
                let s = PhaseState::new(
                    vec![0.0, th, rng.gen_range(0.0..2.0 * PI)],
                    vec![-1.0, heading.cos(), th.sin() * heading.sin()],
                );
                check_segment(&sphere, &s, rng.gen_range(0.5..6.0), m)?
            }
            _ => {
                let s =
                    product.null_state(0.0, rng.gen_range(0.3..0.7), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                check_segment(&product, &s, rng.gen_range(0.1..1.5), m)?
            }
        };
        i += 1;
        match seg {
            Some(s) => segments.push(s),
            None => rejected += 1,
        }
    }
    let disagreements = segments.iter().filter(|s| !s.agree).count();
    let with_conjugate = segments.iter().filter(|s| !s.conjugate_points.is_empty()).count();
    ctx.check_eq("conjugate/index disagreements", 0, disagreements);
    ctx.record(
        "equivalence",
        json!({ "segments": segments.len(), "with_conjugate_points": with_conjugate, "rejected_samples": rejected, "disagreements": disagreements }),
    );
    ctx.record("segments", &segments);
    Ok(())
}
