//! Leaf functions of the two null foliations of a 2D spacetime.

use std::sync::Arc;

use crate::error::{GeoError, Result};
use crate::flow::{trace, FlowParams};
use crate::geometry::{ChartPoint, Metric, PhaseState, Vector};
use crate::quad::integrate_scalar;

type ScalarField = Arc<dyn Fn(&Vector) -> Result<f64> + Send + Sync>;

/// First integrals `f1`, `f2` of the right- and left-moving null foliations,
/// both nondecreasing along future causal curves.
#[derive(Clone)]
pub struct LeafFunctions {
    f1: ScalarField,
    f2: ScalarField,
}

impl std::fmt::Debug for LeafFunctions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LeafFunctions")
    }
}

impl LeafFunctions {
    pub fn new<F1, F2>(f1: F1, f2: F2) -> Self
    where
        F1: Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
        F2: Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
    {
        Self { f1: Arc::new(f1), f2: Arc::new(f2) }
    }

    /// `f1 = y − x`, `f2 = y + x` on `dx² − dy²` with time `y`.
    pub fn minkowski2() -> Self {
        Self::new(|p: &Vector| Ok(p[1] - p[0]), |p: &Vector| Ok(p[1] + p[0]))
    }

    pub fn eval(&self, p: &Vector) -> Result<(f64, f64)> {
        Ok(((self.f1)(p)?, (self.f2)(p)?))
    }

    /// Central-difference derivatives `(df1(v), df2(v))` at `p`.
    pub fn derivatives(&self, p: &Vector, v: &Vector, h: f64) -> Result<(f64, f64)> {
        let (a1, a2) = self.eval(&(p + v * h))?;
        let (b1, b2) = self.eval(&(p - v * h))?;
        Ok(((a1 - b1) / (2.0 * h), (a2 - b2) / (2.0 * h)))
    }

    /// Leaf functions of an arbitrary 2D metric, obtained by following each
    /// null leaf through `p` to the slice `{time = t0}` and reading off the
    /// arclength coordinate there measured from `x_ref`.
    pub fn from_null_foliations<M>(metric: Arc<M>, t0: f64, x_ref: f64, params: FlowParams) -> Result<Self>
    where
        M: Metric + 'static,
    {
        if metric.dim() != 2 {
            return Err(GeoError::Shape("leaf functions need a 2D chart".into()));
        }
        let ta = metric.time_axis().ok_or_else(|| GeoError::DegenerateInput("metric has no time axis".into()))?;
        let leaf = move |family: f64| {
            let metric = metric.clone();
            let params = params.clone();
            move |p: &Vector| -> Result<f64> {
                let x_hit = follow_leaf(metric.as_ref(), ta, p, family, t0, &params)?;
                let sa = 1 - ta;
                let arclength = |x: f64| {
                    let mut q = Vector::zeros(2);
                    q[ta] = t0;
                    q[sa] = x;
                    metric.components(&q)[(sa, sa)].sqrt()
                };
                let (s, _) = integrate_scalar(arclength, x_ref, x_hit, 1e-13, 1e-12);
                Ok(-family * s)
            }
        };
        Ok(Self::new(leaf(1.0), leaf(-1.0)))
    }
}

/// Future null covector at `p` whose spatial velocity has sign `family`.
fn null_leaf_state<M: Metric + ?Sized>(metric: &M, ta: usize, p: &Vector, family: f64) -> Result<PhaseState> {
    let sa = 1 - ta;
    let g = metric.components(p);
    // g(λ e_s + e_t, same) = g_ss λ² + 2 g_st λ + g_tt = 0
    let (a, b, c) = (g[(sa, sa)], 2.0 * g[(sa, ta)], g[(ta, ta)]);
    let disc = b * b - 4.0 * a * c;
    if !(a > 0.0 && disc > 0.0) {
        return Err(GeoError::NumericalDegeneracy(format!("no null directions at {:?}", p.as_slice())));
    }
    let r1 = (-b + disc.sqrt()) / (2.0 * a);
    let r2 = (-b - disc.sqrt()) / (2.0 * a);
    let lambda = if family > 0.0 { r1.max(r2) } else { r1.min(r2) };
    let mut v = Vector::zeros(2);
    v[sa] = lambda;
    v[ta] = 1.0;
    let t = metric.time_orientation(p).unwrap_or_else(|| {
        let mut e = Vector::zeros(2);
        e[ta] = 1.0;
        e
    });
    if (t.transpose() * &g * &v)[(0, 0)] > 0.0 {
        v = -v;
    }
    Ok(PhaseState::from_parts(ChartPoint::from_vector(p.clone()), &g * v))
}

fn follow_leaf<M: Metric + ?Sized>(metric: &M, ta: usize, p: &Vector, family: f64, t0: f64, params: &FlowParams) -> Result<f64> {
    let sa = 1 - ta;
    if p[ta] == t0 {
        return Ok(p[sa]);
    }
    let s = null_leaf_state(metric, ta, p, family)?;
    let interval = if p[ta] > t0 { (-params.max_param, 0.0) } else { (0.0, params.max_param) };
    let seg = trace(metric, &s, interval, params)?;
    let gap = |t: f64| seg.base_at(t)[ta] - t0;
    let ts = seg.dense_parameters(4);
    let sign0 = (p[ta] - t0).signum();
    let mut ordered: Vec<f64> = ts;
    if sign0 > 0.0 {
        ordered.reverse();
    }
    for w in ordered.windows(2) {
        let (a, b) = (w[0], w[1]);
        if gap(b).signum() != sign0 || gap(b) == 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if gap(mid).signum() == sign0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(seg.base_at(0.5 * (lo + hi))[sa]);
        }
    }
    Err(GeoError::Truncated { parameter: seg.interval.1, reason: seg.termination })
}

/// `f1(q) ≥ f1(p)` and `f2(q) ≥ f2(p)`.
pub fn leaf_causal(lf: &LeafFunctions, p: &ChartPoint, q: &ChartPoint) -> Result<bool> {
    let (p1, p2) = lf.eval(&p.coords)?;
    let (q1, q2) = lf.eval(&q.coords)?;
    Ok(q1 >= p1 && q2 >= p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Minkowski;

    fn cp(x: f64, y: f64) -> ChartPoint {
        ChartPoint::new(vec![x, y])
    }

    #[test]
    fn minkowski_examples() {
        let lf = LeafFunctions::minkowski2();
        assert!(leaf_causal(&lf, &cp(0.0, 0.0), &cp(1.0, 2.0)).unwrap());
        assert!(!leaf_causal(&lf, &cp(0.0, 0.0), &cp(2.0, 1.0)).unwrap());
        assert!(leaf_causal(&lf, &cp(0.0, 0.0), &cp(-1.0, 1.0)).unwrap());
    }

    #[test]
    fn monotone_along_future_vectors() {
        let lf = LeafFunctions::minkowski2();
        let p = Vector::from_vec(vec![0.3, -0.2]);
        for v in [[0.0, 1.0], [1.0, 1.0], [-1.0, 1.0], [0.5, 2.0]] {
            let (d1, d2) = lf.derivatives(&p, &Vector::from_vec(v.to_vec()), 1e-4).unwrap();
            assert!(d1 >= -1e-12 && d2 >= -1e-12);
        }
    }

    #[test]
    fn traced_foliations_reproduce_minkowski() {
        let lf = LeafFunctions::from_null_foliations(Arc::new(Minkowski::new(2)), 0.0, 0.0, FlowParams::default()).unwrap();
        for p in [[0.3, 0.7], [-0.4, -1.1], [1.5, 0.2]] {
            let v = Vector::from_vec(p.to_vec());
            let (f1, f2) = lf.eval(&v).unwrap();
            assert!((f1 - (p[1] - p[0])).abs() < 1e-9, "{f1}");
            assert!((f2 - (p[1] + p[0])).abs() < 1e-9, "{f2}");
        }
    }
}
