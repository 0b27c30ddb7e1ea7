//! Closedness probes for causal relations, with sequence generators.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::flow::{trace, FlowParams};
use crate::geometry::{ChartDomain, ChartPoint, Exclusion, Metric, Vector};
use crate::metrics::Minkowski;
use crate::surface::{distance, ProductSpacetime};

use super::causal_relation_points;

/// Pairs converging to a declared limit pair.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergentSequence {
    pub label: String,
    pub pairs: Vec<(ChartPoint, ChartPoint)>,
    pub limit: (ChartPoint, ChartPoint),
}

#[derive(Clone, Debug, Serialize)]
pub enum ProbeOutcome {
    Pass { sequences: usize },
    Witness { sequence: ConvergentSequence },
}

impl ProbeOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ProbeOutcome::Pass { .. })
    }
}

fn pair_gap(domain: &ChartDomain, a: &(ChartPoint, ChartPoint), b: &(ChartPoint, ChartPoint)) -> f64 {
    domain.distance(&a.0.coords, &b.0.coords).max(domain.distance(&a.1.coords, &b.1.coords))
}

/// Checks that every sequence consists of related pairs converging to its
/// limit, and that each limit is related within `tol`. The first failing
/// limit is returned as a witness.
pub fn closedness_probe<R, I>(mut relation: R, sequences: I, domain: &ChartDomain, tol: f64) -> Result<ProbeOutcome>
where
    R: FnMut(&ChartPoint, &ChartPoint, f64) -> Result<bool>,
    I: IntoIterator<Item = ConvergentSequence>,
{
    let mut count = 0;
    for seq in sequences {
        if seq.pairs.len() < 2 {
            return Err(GeoError::Protocol(format!("sequence `{}` has fewer than two pairs", seq.label)));
        }
        let gaps: Vec<f64> = seq.pairs.iter().map(|p| pair_gap(domain, p, &seq.limit)).collect();
        let first = gaps.iter().cloned().fold(0.0, f64::max);
        let last = *gaps.last().unwrap();
        if !last.is_finite() || (last > 0.5 * first && last > 1e-12) {
            return Err(GeoError::Protocol(format!(
                "sequence `{}` does not approach its limit ({first:e} -> {last:e})",
                seq.label
            )));
        }
        for (k, (a, b)) in seq.pairs.iter().enumerate() {
            if !relation(a, b, tol)? {
                return Err(GeoError::Protocol(format!("sequence `{}` pair {k} is not related", seq.label)));
            }
        }
        count += 1;
        if !relation(&seq.limit.0, &seq.limit.1, tol)? {
            return Ok(ProbeOutcome::Witness { sequence: seq });
        }
    }
    Ok(ProbeOutcome::Pass { sequences: count })
}

fn cp(v: [f64; 2]) -> ChartPoint {
    ChartPoint::new(v.to_vec())
}

/// Horismos in flat 2D space with deleted balls: `q` on the future null cone
/// of `p` and the null segment between them avoiding every exclusion.
pub fn minkowski_horismos(metric: &Minkowski, p: &ChartPoint, q: &ChartPoint, tol: f64) -> bool {
    let domain = metric.domain();
    if !domain.contains(&p.coords) || !domain.contains(&q.coords) {
        return false;
    }
    let d = &q.coords - &p.coords;
    let n = d.len();
    let dt = d[n - 1];
    let spatial = d.rows(0, n - 1).norm();
    if dt < -tol || (dt - spatial).abs() > tol {
        return false;
    }
    domain.exclusions.iter().all(|e| {
        let Exclusion::Point { center, radius } = e;
        let len2 = d.norm_squared();
        let s = if len2 > 0.0 { ((center - &p.coords).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (&p.coords + &d * s - center).norm() > *radius
    })
}

/// Null pairs on `y = x + s_n`, `s_n = (−1)^n / (n + 1)`, from `x = −1` to
/// `x = 1`, alternating around the line through the origin.
pub fn straddling_null_sequence(n: usize) -> ConvergentSequence {
    let pairs = (0..n)
        .map(|k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
            (cp([-1.0, -1.0 + s]), cp([1.0, 1.0 + s]))
        })
        .collect();
    ConvergentSequence { label: "straddling".into(), pairs, limit: (cp([-1.0, -1.0]), cp([1.0, 1.0])) }
}

/// Random convergent sequences of `J⁺`-related pairs in the product spacetime.
///
/// Half of the limits sit exactly on the horismos `τ − σ = dist`, the other
/// half inside the chronological future.
pub fn random_product_sequences<R: Rng>(
    st: &ProductSpacetime,
    rng: &mut R,
    count: usize,
    len: usize,
    params: &FlowParams,
) -> Result<Vec<ConvergentSequence>> {
    let mut out = Vec::with_capacity(count);
    let band = (0.15, 0.85);
    for i in 0..count {
        let xp = rng.gen_range(band.0..band.1);
        let xq = rng.gen_range(band.0..band.1);
        let (fp, fq) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        let sigma = rng.gen_range(-1.0..1.0);
        let slack = if i % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.1) };
        let (p, q) = (cp([xp, fp]), cp([xq, fq]));
        let d = distance(&st.surface, &p, &q, params)?.distance;
        let limit = (ChartPoint::new(vec![sigma, xp, fp]), ChartPoint::new(vec![sigma + d + slack, xq, fq]));
        let mut pairs = Vec::with_capacity(len);
        for n in 0..len {
            let delta = 0.1 / 2f64.powi(n as i32);
            let mut jitter = || rng.gen_range(-1.0..1.0) * delta;
            let (xpn, fpn, sn) = (xp + jitter(), fp + jitter(), sigma + jitter());
            let (xqn, fqn) = (xq + jitter(), fq + jitter());
            let extra = rng.gen_range(0.0..1.0) * delta;
            let dn = distance(&st.surface, &cp([xpn, fpn]), &cp([xqn, fqn]), params)?.distance;
            pairs.push((ChartPoint::new(vec![sn, xpn, fpn]), ChartPoint::new(vec![sn + dn + slack + extra, xqn, fqn])));
        }
        out.push(ConvergentSequence { label: format!("random-{i}"), pairs, limit });
    }
    Ok(out)
}

/// Null-related pairs whose connecting surface geodesics leave `(x0, φ0)`
/// at angle `ε_n = 2^{−n}` from the upward meridian, converging to the
/// meridian segment of length `len`.
pub fn meridian_approach_sequence(
    st: &ProductSpacetime,
    x0: f64,
    phi0: f64,
    len: f64,
    n: usize,
    params: &FlowParams,
) -> Result<ConvergentSequence> {
    let surface = &st.surface;
    let end = |psi: f64| -> Result<Vector> {
        let seg = trace(surface, &surface.unit_state(x0, phi0, psi), (0.0, len), params)?;
        if seg.truncated() {
            return Err(GeoError::Truncated { parameter: seg.interval.1, reason: seg.termination });
        }
        Ok(seg.base_at(len))
    };
    let pairs = (1..=n)
        .map(|k| {
            let q = end(0.5f64.powi(k as i32))?;
            Ok((ChartPoint::new(vec![0.0, x0, phi0]), ChartPoint::new(vec![len, q[0], q[1]])))
        })
        .collect::<Result<Vec<_>>>()?;
    let q = end(0.0)?;
    Ok(ConvergentSequence {
        label: format!("meridian-{x0}-{phi0}"),
        pairs,
        limit: (ChartPoint::new(vec![0.0, x0, phi0]), ChartPoint::new(vec![len, q[0], q[1]])),
    })
}

/// `J⁺` predicate of the product spacetime for [`closedness_probe`].
pub fn product_causal<'a>(
    st: &'a ProductSpacetime,
    params: &'a FlowParams,
) -> impl FnMut(&ChartPoint, &ChartPoint, f64) -> Result<bool> + 'a {
    move |a, b, tol| Ok(causal_relation_points(st, a, b, Some(tol), params)?.relation.is_causal())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straddling_witness_and_full_pass() {
        let holed = Minkowski::minus_origin(1e-8);
        let out = closedness_probe(
            |a, b, tol| Ok(minkowski_horismos(&holed, a, b, tol)),
            [straddling_null_sequence(40)],
            holed.domain(),
            1e-9,
        )
        .unwrap();
        assert!(!out.passed());
        let flat = Minkowski::new(2);
        let out = closedness_probe(
            |a, b, tol| Ok(minkowski_horismos(&flat, a, b, tol)),
            [straddling_null_sequence(40)],
            flat.domain(),
            1e-9,
        )
        .unwrap();
        assert!(out.passed());
    }

    #[test]
    fn protocol_errors() {
        let flat = Minkowski::new(2);
        let mut seq = straddling_null_sequence(4);
        seq.limit = (cp([5.0, 5.0]), cp([6.0, 6.0]));
        let r = closedness_probe(|a, b, tol| Ok(minkowski_horismos(&flat, a, b, tol)), [seq], flat.domain(), 1e-9);
        assert!(matches!(r, Err(GeoError::Protocol(_))));
        let mut seq = straddling_null_sequence(4);
        seq.pairs[1].1 = cp([3.0, 0.0]);
        let r = closedness_probe(|a, b, tol| Ok(minkowski_horismos(&flat, a, b, tol)), [seq], flat.domain(), 1e-9);
        assert!(matches!(r, Err(GeoError::Protocol(_))));
    }

    #[test]
    fn meridian_sequence_passes() {
        let st = ProductSpacetime::sine8pi();
        let fp = FlowParams::default();
        let seq = meridian_approach_sequence(&st, 0.5, 1.0, 0.3, 10, &fp).unwrap();
        let out = closedness_probe(product_causal(&st, &fp), [seq], st.domain(), 1e-6).unwrap();
        assert!(out.passed());
    }
}
