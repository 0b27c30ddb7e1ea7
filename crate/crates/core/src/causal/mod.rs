//! Causal relations: the exact oracle for products over a revolution
//! surface, leaf functions in two dimensions, a brute-force grid oracle, and
//! closedness probing.

pub mod closedness;
pub mod grid;
pub mod leaf;

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::flow::FlowParams;
use crate::geometry::ChartPoint;
use crate::surface::{distance, DistanceEstimate, ProductSpacetime};

pub use closedness::{closedness_probe, ConvergentSequence, ProbeOutcome};
pub use grid::{GridOracle, GridSpec};
pub use leaf::{leaf_causal, LeafFunctions};

/// Base tolerance of the causal oracle before adding distance uncertainty.
pub const CAUSAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Chronological,
    Horismos,
    Unrelated,
}

impl Relation {
    /// Whether the pair lies in `J⁺`.
    pub fn is_causal(self) -> bool {
        self != Relation::Unrelated
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalVerdict {
    pub relation: Relation,
    /// `(τ − σ) − dist_k(p, q)`.
    pub margin: f64,
    /// Effective tolerance used for the verdict.
    pub tol: f64,
    /// Set when the verdict is Horismos only because of the distance uncertainty.
    pub widened: bool,
    pub distance: f64,
}

/// Verdict for `(σ, p)` and `(τ, q)` in `ℝ × Σ`; `tol` defaults to [`CAUSAL_TOL`].
pub fn causal_relation(
    spacetime: &ProductSpacetime,
    a: (f64, &ChartPoint),
    b: (f64, &ChartPoint),
    tol: Option<f64>,
    params: &FlowParams,
) -> Result<CausalVerdict> {
    let base_tol = tol.unwrap_or(CAUSAL_TOL);
    let dt = b.0 - a.0;
    match distance(&spacetime.surface, a.1, b.1, params) {
        Ok(DistanceEstimate { distance: d, uncertainty, .. }) => {
            let margin = dt - d;
            let tol = base_tol + uncertainty;
            let relation = if margin > tol {
                Relation::Chronological
            } else if margin < -tol {
                Relation::Unrelated
            } else {
                Relation::Horismos
            };
            Ok(CausalVerdict {
                relation,
                margin,
                tol,
                widened: margin.abs() > base_tol && relation == Relation::Horismos,
                distance: d,
            })
        }
        Err(GeoError::DistanceUncertain { lower, upper, best }) => {
            // Hard verdicts survive when the whole interval agrees.
            let (m_lo, m_hi) = (dt - upper, dt - lower);
            let relation = if m_lo > base_tol {
                Relation::Chronological
            } else if m_hi < -base_tol {
                Relation::Unrelated
            } else {
                return Err(GeoError::CausalUncertain { margin_low: m_lo, margin_high: m_hi });
            };
            Ok(CausalVerdict { relation, margin: dt - best, tol: base_tol + (upper - lower), widened: false, distance: best })
        }
        Err(e) => Err(e),
    }
}

/// [`causal_relation`] on product chart points `(t, x, φ)`.
pub fn causal_relation_points(
    spacetime: &ProductSpacetime,
    a: &ChartPoint,
    b: &ChartPoint,
    tol: Option<f64>,
    params: &FlowParams,
) -> Result<CausalVerdict> {
    if a.dim() != 3 || b.dim() != 3 {
        return Err(GeoError::Shape("product points are (t, x, φ) triples".into()));
    }
    let (pa, pb) = (spacetime.spatial(&a.coords), spacetime.spatial(&b.coords));
    causal_relation(spacetime, (a.coords[0], &pa), (b.coords[0], &pb), tol, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, phi: f64) -> ChartPoint {
        ChartPoint::new(vec![x, phi])
    }

    #[test]
    fn same_point_verdicts() {
        let st = ProductSpacetime::sine8pi();
        let fp = FlowParams::default();
        let p = pt(0.4, 1.0);
        let v = causal_relation(&st, (0.0, &p), (0.3, &p), None, &fp).unwrap();
        assert_eq!(v.relation, Relation::Chronological);
        let v = causal_relation(&st, (0.0, &p), (0.0, &p), None, &fp).unwrap();
        assert_eq!(v.relation, Relation::Horismos);
        assert_eq!(v.margin, 0.0);
    }

    #[test]
    fn equality_case_is_horismos() {
        let st = ProductSpacetime::sine8pi();
        let fp = FlowParams::default();
        let (p, q) = (pt(0.3, 0.2), pt(0.6, 2.5));
        let d = distance(&st.surface, &p, &q, &fp).unwrap().distance;
        let v = causal_relation(&st, (0.0, &p), (d, &q), None, &fp).unwrap();
        assert_eq!(v.relation, Relation::Horismos);
        let v = causal_relation(&st, (0.0, &p), (d - 1e-3, &q), None, &fp).unwrap();
        assert_eq!(v.relation, Relation::Unrelated);
        let v = causal_relation(&st, (0.0, &p), (d + 1e-3, &q), None, &fp).unwrap();
        assert_eq!(v.relation, Relation::Chronological);
    }
}
