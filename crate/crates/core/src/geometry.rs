//! Chart-based metrics, covectors, null cones and time orientation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{GeoError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default null tolerance for normalized covectors.
pub const TOL_NULL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    #[serde(serialize_with = "as_list")]
    pub coords: Vector,
}

/// Serializes a vector as a flat list of numbers.
pub fn as_list<S: serde::Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords: Vector::from_vec(coords) }
    }

    pub fn from_vector(coords: Vector) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

/// A base point together with a covector `α ∈ T*_p M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseState {
    pub base: ChartPoint,
    #[serde(serialize_with = "as_list")]
    pub covector: Vector,
}

impl PhaseState {
    pub fn new(base: Vec<f64>, covector: Vec<f64>) -> Self {
        Self { base: ChartPoint::new(base), covector: Vector::from_vec(covector) }
    }

    pub fn from_parts(base: ChartPoint, covector: Vector) -> Self {
        Self { base, covector }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { base: self.base.clone(), covector: &self.covector * t }
    }

    /// Flattened `(x, α)` phase-space vector.
    pub fn to_flat(&self) -> Vec<f64> {
        self.base.coords.iter().chain(self.covector.iter()).copied().collect()
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self::new(y[..n].to_vec(), y[n..].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub vector: Vector,
}

impl TangentVector {
    pub fn new(base: Vec<f64>, vector: Vec<f64>) -> Self {
        Self { base: ChartPoint::new(base), vector: Vector::from_vec(vector) }
    }
}

/// Points removed from the chart box.
#[derive(Clone, Debug, PartialEq)]
pub enum Exclusion {
    /// A deleted point, resolved numerically as a ball of the given radius.
    Point { center: Vector, radius: f64 },
}

impl Exclusion {
    pub fn point(center: Vec<f64>, radius: f64) -> Self {
        Exclusion::Point { center: Vector::from_vec(center), radius }
    }
}

/// An axis-aligned chart box, optionally periodic along some axes and with
/// deleted points.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Period of each axis, `None` for ordinary axes.
    pub periodic: Vec<Option<f64>>,
    pub exclusions: Vec<Exclusion>,
}

impl ChartDomain {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = lower.len();
        assert_eq!(n, upper.len());
        Self { lower, upper, periodic: vec![None; n], exclusions: Vec::new() }
    }

    pub fn unbounded(n: usize) -> Self {
        Self::boxed(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    pub fn with_period(mut self, axis: usize, period: f64) -> Self {
        self.periodic[axis] = Some(period);
        self
    }

    pub fn with_exclusion(mut self, e: Exclusion) -> Self {
        self.exclusions.push(e);
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Difference `b − a`, reduced into `(−P/2, P/2]` along periodic axes.
    pub fn displacement(&self, a: &Vector, b: &Vector) -> Vector {
        let mut d = b - a;
        for (i, p) in self.periodic.iter().enumerate() {
            if let Some(p) = p {
                d[i] = wrap_centered(d[i], *p);
            }
        }
        d
    }

    pub fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        self.displacement(a, b).norm()
    }

    /// Canonical representative with periodic coordinates in `[lower, lower + P)`.
    pub fn wrap(&self, p: &Vector) -> Vector {
        let mut q = p.clone();
        for (i, per) in self.periodic.iter().enumerate() {
            if let Some(per) = per {
                let lo = if self.lower[i].is_finite() { self.lower[i] } else { 0.0 };
                q[i] = lo + (q[i] - lo).rem_euclid(*per);
            }
        }
        q
    }

    /// Distance to the nearest non-periodic box face (infinite when unbounded).
    pub fn boundary_gap(&self, p: &Vector) -> f64 {
        let mut gap = f64::INFINITY;
        for i in 0..self.dim() {
            if self.periodic[i].is_some() {
                continue;
            }
            gap = gap.min(p[i] - self.lower[i]).min(self.upper[i] - p[i]);
        }
        gap
    }

    pub fn in_box(&self, p: &Vector) -> bool {
        p.len() == self.dim() && p.iter().all(|c| c.is_finite()) && self.boundary_gap(p) >= 0.0
    }

    /// Index of the exclusion containing `p`, if any.
    pub fn excluded_by(&self, p: &Vector) -> Option<usize> {
        self.exclusions.iter().position(|e| match e {
            Exclusion::Point { center, radius } => self.distance(p, center) < *radius,
        })
    }

    pub fn contains(&self, p: &Vector) -> bool {
        self.in_box(p) && self.excluded_by(p).is_none()
    }

    pub fn check(&self, p: &Vector) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GeoError::Domain { point: p.iter().copied().collect() })
        }
    }
}

pub fn wrap_centered(d: f64, period: f64) -> f64 {
    let mut r = d.rem_euclid(period);
    if r > 0.5 * period {
        r -= period;
    }
    r
}

/// Curvature tensor `R^a_{bcd}` stored densely, index order `[a][b][c][d]`.
#[derive(Clone, Debug)]
pub struct Riemann {
    pub n: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    /// `(R(v, u)u)^a = R^a_{bcd} u^b v^c u^d`, the operator in `J'' + R(J, u)u = 0`.
    pub fn jacobi_operator(&self, u: &Vector, v: &Vector) -> Vector {
        let n = self.n;
        let mut out = Vector::zeros(n);
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                if u[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    if v[c] == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        s += self.get(a, b, c, d) * u[b] * v[c] * u[d];
                    }
                }
            }
            out[a] = s;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Riemann) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// A pseudo-Riemannian metric on a single chart.
pub trait Metric: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn domain(&self) -> &ChartDomain;

    /// `g_ij(p)`.
    fn components(&self, p: &Vector) -> Matrix;

    /// `g^ij(p)`.
    fn inverse(&self, p: &Vector) -> Matrix {
        self.components(p).try_inverse().unwrap_or_else(|| Matrix::from_element(self.dim(), self.dim(), f64::NAN))
    }

    /// `∂_k g_ij(p)`, one matrix per `k`. Central differences unless overridden.
    fn derivatives(&self, p: &Vector) -> Vec<Matrix> {
        fd_metric_derivatives(self, p)
    }

    /// Analytic curvature, when the metric provides one.
    fn riemann_override(&self, _p: &Vector) -> Option<Riemann> {
        None
    }

    /// Future-pointing timelike field `T(p)`; `None` for Riemannian metrics.
    fn time_orientation(&self, _p: &Vector) -> Option<Vector> {
        None
    }

    /// Chart axis used as the time coordinate when re-projecting onto the null cone.
    fn time_axis(&self) -> Option<usize> {
        None
    }
}

/// Central differences with step `1e-5 (1 + |x_k|)`.
pub fn fd_metric_derivatives<M: Metric + ?Sized>(metric: &M, p: &Vector) -> Vec<Matrix> {
    let n = metric.dim();
    (0..n)
        .map(|k| {
            let h = 1e-5 * (1.0 + p[k].abs());
            let mut xp = p.clone();
            let mut xm = p.clone();
            xp[k] += h;
            xm[k] -= h;
            (metric.components(&xp) - metric.components(&xm)) / (2.0 * h)
        })
        .collect()
}

/// Christoffel symbols `Γ^a_{bc}`, returned as `gamma[a][(b, c)]`.
pub fn christoffel<M: Metric + ?Sized>(metric: &M, p: &Vector) -> Vec<Matrix> {
    let n = metric.dim();
    let ginv = metric.inverse(p);
    let dg = metric.derivatives(p);
    let mut gamma = vec![Matrix::zeros(n, n); n];
    // lowered[d](b, c) = ½ (∂_b g_dc + ∂_c g_db − ∂_d g_bc)
    let mut lowered = vec![Matrix::zeros(n, n); n];
    for d in 0..n {
        for b in 0..n {
            for c in 0..n {
                lowered[d][(b, c)] = 0.5 * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
            }
        }
    }
    for a in 0..n {
        for d in 0..n {
            let w = ginv[(a, d)];
            if w != 0.0 {
                gamma[a] += &lowered[d] * w;
            }
        }
    }
    gamma
}

/// Riemann tensor from Christoffel symbols, differentiating them by central
/// differences, unless the metric supplies an analytic override.
pub fn riemann<M: Metric + ?Sized>(metric: &M, p: &Vector) -> Riemann {
    if let Some(r) = metric.riemann_override(p) {
        return r;
    }
    riemann_fd(metric, p, 2e-5)
}

pub fn riemann_fd<M: Metric + ?Sized>(metric: &M, p: &Vector, rel_step: f64) -> Riemann {
    let n = metric.dim();
    let gamma = christoffel(metric, p);
    let dgamma: Vec<Vec<Matrix>> = (0..n)
        .map(|k| {
            let h = rel_step * (1.0 + p[k].abs());
            let mut xp = p.clone();
            let mut xm = p.clone();
            xp[k] += h;
            xm[k] -= h;
            let gp = christoffel(metric, &xp);
            let gm = christoffel(metric, &xm);
            gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let mut r = Riemann::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dgamma[c][a][(d, b)] - dgamma[d][a][(c, b)];
                    for e in 0..n {
                        v += gamma[a][(c, e)] * gamma[e][(d, b)] - gamma[a][(d, e)] * gamma[e][(c, b)];
                    }
                    r.set(a, b, c, d, v);
                }
            }
        }
    }
    r
}

fn check_state<M: Metric + ?Sized>(metric: &M, base: &ChartPoint, len: usize) -> Result<()> {
    if base.dim() != metric.dim() || len != metric.dim() {
        return Err(GeoError::Shape(format!("expected dimension {}, got base {} / fiber {}", metric.dim(), base.dim(), len)));
    }
    metric.domain().check(&base.coords)
}

/// `E_g(α) = g^ij α_i α_j`.
pub fn energy<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Result<f64> {
    check_state(metric, &s.base, s.covector.len())?;
    let ginv = metric.inverse(&s.base.coords);
    Ok(s.covector.dot(&(ginv * &s.covector)))
}

/// `α = g(v, ·)`.
pub fn legendre<M: Metric + ?Sized>(metric: &M, v: &TangentVector) -> Result<PhaseState> {
    check_state(metric, &v.base, v.vector.len())?;
    let g = metric.components(&v.base.coords);
    Ok(PhaseState { base: v.base.clone(), covector: g * &v.vector })
}

/// `v = g^{-1}(α)`.
pub fn legendre_inverse<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Result<TangentVector> {
    check_state(metric, &s.base, s.covector.len())?;
    let ginv = metric.inverse(&s.base.coords);
    Ok(TangentVector { base: s.base.clone(), vector: ginv * &s.covector })
}

/// Riemannian metric used to normalize class representatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AuxMetric {
    /// `g` with the sign of its negative eigenspace reversed.
    #[default]
    WickFlip,
    /// The Euclidean metric of the chart.
    Euclidean,
}

impl AuxMetric {
    /// Dual (covector) Gram matrix of the auxiliary metric at `p`.
    pub fn dual_matrix<M: Metric + ?Sized>(&self, metric: &M, p: &Vector) -> Matrix {
        match self {
            AuxMetric::Euclidean => Matrix::identity(metric.dim(), metric.dim()),
            AuxMetric::WickFlip => {
                let eig = SymmetricEigen::new(metric.components(p));
                let n = metric.dim();
                let mut d = Matrix::zeros(n, n);
                for i in 0..n {
                    d[(i, i)] = 1.0 / eig.eigenvalues[i].abs();
                }
                &eig.eigenvectors * d * eig.eigenvectors.transpose()
            }
        }
    }

    pub fn covector_norm<M: Metric + ?Sized>(&self, metric: &M, p: &Vector, alpha: &Vector) -> f64 {
        match self {
            AuxMetric::Euclidean => alpha.norm(),
            AuxMetric::WickFlip => alpha.dot(&(self.dual_matrix(metric, p) * alpha)).max(0.0).sqrt(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AuxMetric::WickFlip => "wick-flip",
            AuxMetric::Euclidean => "euclidean",
        }
    }
}

/// Rescales `α` by `t > 0` so that its auxiliary norm is one.
pub fn null_normalize<M: Metric + ?Sized>(metric: &M, s: &PhaseState, aux: AuxMetric) -> Result<PhaseState> {
    check_state(metric, &s.base, s.covector.len())?;
    let norm = aux.covector_norm(metric, &s.base.coords, &s.covector);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(GeoError::DegenerateInput("zero covector cannot be normalized".into()));
    }
    Ok(s.scaled(1.0 / norm))
}

/// `α(T) < 0` where `T` is the time orientation.
pub fn is_future_pointing<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Result<bool> {
    check_state(metric, &s.base, s.covector.len())?;
    match metric.time_orientation(&s.base.coords) {
        Some(t) => Ok(s.covector.dot(&t) < 0.0),
        None => Ok(false),
    }
}

pub fn is_future_null<M: Metric + ?Sized>(metric: &M, s: &PhaseState, tol: f64) -> Result<bool> {
    let e = energy(metric, s)?;
    Ok(e.abs() <= tol && is_future_pointing(metric, s)?)
}

/// Re-solves the time component of `α` so that `g^ij α_i α_j = 0`, choosing
/// the root closest to the current value.
pub fn project_to_null_cone<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Option<PhaseState> {
    let tau = metric.time_axis()?;
    let ginv = metric.inverse(&s.base.coords);
    let alpha = &s.covector;
    let n = alpha.len();
    let a = ginv[(tau, tau)];
    let mut b = 0.0;
    let mut c = 0.0;
    for i in 0..n {
        if i == tau {
            continue;
        }
        b += ginv[(tau, i)] * alpha[i];
        for j in 0..n {
            if j != tau {
                c += ginv[(i, j)] * alpha[i] * alpha[j];
            }
        }
    }
    // a x² + 2 b x + c = 0
    let disc = b * b - a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let r1 = (-b + sq) / a;
    let r2 = (-b - sq) / a;
    let cur = alpha[tau];
    let root = if (r1 - cur).abs() <= (r2 - cur).abs() { r1 } else { r2 };
    let mut out = s.clone();
    out.covector[tau] = root;
    Some(out)
}

/// Builds a future null covector at `base` from its non-time components.
pub fn future_null_covector<M: Metric + ?Sized>(metric: &M, base: &Vector, spatial: &Vector) -> Result<PhaseState> {
    let tau = metric.time_axis().ok_or_else(|| GeoError::DegenerateInput("metric has no time axis".into()))?;
    metric.domain().check(base)?;
    let ginv = metric.inverse(base);
    let mut alpha = spatial.clone();
    alpha[tau] = 0.0;
    let n = alpha.len();
    let a = ginv[(tau, tau)];
    let mut b = 0.0;
    for i in 0..n {
        if i != tau {
            b += ginv[(tau, i)] * alpha[i];
        }
    }
    let c = alpha.dot(&(&ginv * &alpha));
    let disc = b * b - a * c;
    if disc < 0.0 || a == 0.0 || c <= 0.0 {
        return Err(GeoError::DegenerateInput("spatial covector does not complete to a null covector".into()));
    }
    let t = metric.time_orientation(base).expect("time axis implies orientation");
    for root in [(-b + disc.sqrt()) / a, (-b - disc.sqrt()) / a] {
        let mut cand = alpha.clone();
        cand[tau] = root;
        if cand.dot(&t) < 0.0 {
            return Ok(PhaseState { base: ChartPoint::from_vector(base.clone()), covector: cand });
        }
    }
    Err(GeoError::DegenerateInput("no future-pointing root".into()))
}

/// Number of negative eigenvalues of `g(p)`.
pub fn negative_eigenvalues<M: Metric + ?Sized>(metric: &M, p: &Vector) -> usize {
    SymmetricEigen::new(metric.components(p)).eigenvalues.iter().filter(|e| **e < 0.0).count()
}

/// Checks symmetry, the inverse, Lorentzian signature and the time orientation at `p`.
pub fn validate_lorentzian<M: Metric + ?Sized>(metric: &M, p: &Vector) -> Result<()> {
    metric.domain().check(p)?;
    let g = metric.components(p);
    let n = metric.dim();
    let asym = (&g - g.transpose()).amax();
    if asym > 1e-12 * (1.0 + g.amax()) {
        return Err(GeoError::NumericalDegeneracy(format!("metric not symmetric (defect {asym:e})")));
    }
    let id_err = (&g * metric.inverse(p) - Matrix::identity(n, n)).amax();
    if id_err > 1e-10 {
        return Err(GeoError::NumericalDegeneracy(format!("g·g⁻¹ deviates from identity by {id_err:e}")));
    }
    let neg = negative_eigenvalues(metric, p);
    if neg != 1 {
        return Err(GeoError::NumericalDegeneracy(format!("{neg} negative eigenvalues")));
    }
    let t = metric.time_orientation(p).ok_or_else(|| GeoError::DegenerateInput("no time orientation".into()))?;
    if t.dot(&(&g * &t)) >= 0.0 {
        return Err(GeoError::NumericalDegeneracy("time orientation not timelike".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Minkowski;

    #[test]
    fn minkowski_energy_examples() {
        let m = Minkowski::new(2);
        let null = PhaseState::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(energy(&m, &null).unwrap(), 0.0);
        let dx = PhaseState::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(energy(&m, &dx).unwrap(), 1.0);
    }

    #[test]
    fn legendre_signs_and_zero() {
        let m = Minkowski::new(2);
        let s = legendre(&m, &TangentVector::new(vec![0.0, 0.0], vec![1.0, 1.0])).unwrap();
        assert_eq!(s.covector.as_slice(), &[1.0, -1.0]);
        let z = legendre(&m, &TangentVector::new(vec![0.3, 0.1], vec![0.0, 0.0])).unwrap();
        assert_eq!(z.covector.norm(), 0.0);
    }

    #[test]
    fn future_null_examples() {
        let m = Minkowski::new(2);
        let future = PhaseState::new(vec![0.0, 0.0], vec![1.0, -1.0]);
        let past = PhaseState::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let spacelike = PhaseState::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert!(is_future_null(&m, &future, TOL_NULL).unwrap());
        assert!(!is_future_null(&m, &past, TOL_NULL).unwrap());
        assert!(!is_future_null(&m, &spacelike, TOL_NULL).unwrap());
    }

    #[test]
    fn normalize_rejects_zero_and_is_idempotent() {
        let m = Minkowski::new(2);
        let z = PhaseState::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(matches!(null_normalize(&m, &z, AuxMetric::WickFlip), Err(GeoError::DegenerateInput(_))));
        let s = PhaseState::new(vec![0.0, 0.0], vec![3.0, -3.0]);
        let n1 = null_normalize(&m, &s, AuxMetric::WickFlip).unwrap();
        let n2 = null_normalize(&m, &n1, AuxMetric::WickFlip).unwrap();
        assert!((AuxMetric::WickFlip.covector_norm(&m, &n1.base.coords, &n1.covector) - 1.0).abs() < 1e-15);
        assert!((&n1.covector - &n2.covector).norm() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let m = Minkowski::new(2).with_exclusion(Exclusion::point(vec![0.0, 0.0], 1e-9));
        let s = PhaseState::new(vec![0.0, 0.0], vec![1.0, -1.0]);
        assert!(matches!(energy(&m, &s), Err(GeoError::Domain { .. })));
    }

    #[test]
    fn periodic_displacement() {
        let d = ChartDomain::boxed(vec![0.0, -1.0], vec![1.0, 1.0]).with_period(0, 1.0);
        let a = Vector::from_vec(vec![0.95, 0.0]);
        let b = Vector::from_vec(vec![0.05, 0.0]);
        assert!((d.displacement(&a, &b)[0] - 0.1).abs() < 1e-12);
        assert!((d.wrap(&Vector::from_vec(vec![-0.25, 0.0]))[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn null_projection_restores_cone() {
        let m = Minkowski::new(3);
        let s = PhaseState::new(vec![0.0, 0.0, 0.0], vec![0.6, 0.8, -1.0 - 1e-7]);
        let p = project_to_null_cone(&m, &s).unwrap();
        assert!(energy(&m, &p).unwrap().abs() < 1e-15);
        assert!((p.covector[2] + 1.0).abs() < 1e-15);
    }
}
