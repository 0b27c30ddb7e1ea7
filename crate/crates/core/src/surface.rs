//! Surfaces of revolution `k = (1 + r'²) dx² + r² dφ²` over the band
//! `(0, 1) × S¹` and the product spacetime `−dt² + k`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::flow::{golden_min, trace, FlowParams, Termination};
use crate::geometry::{legendre_inverse, wrap_centered, ChartDomain, ChartPoint, Matrix, Metric, PhaseState, Vector};
use crate::quad::{integrate, integrate_scalar};

/// Default distance from the band ends used by traces and searches.
pub const END_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ProfileKind {
    /// `r(x) = sin(πx) / (8π)`.
    Sine8Pi,
    /// `r(x) = Σ c_k x^k`.
    Polynomial(Vec<f64>),
}

/// Revolution profile `r` with its first two derivatives.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileFunction {
    pub kind: ProfileKind,
    pub validity_samples: usize,
    pub end_margin: f64,
}

impl ProfileFunction {
    pub fn sine8pi() -> Self {
        Self { kind: ProfileKind::Sine8Pi, validity_samples: 2048, end_margin: END_MARGIN }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let p = Self { kind: ProfileKind::Polynomial(coeffs), validity_samples: 2048, end_margin: END_MARGIN };
        p.validate()?;
        Ok(p)
    }

    /// Parses `sine8pi` or `poly:c0,c1,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "sine8pi" {
            return Ok(Self::sine8pi());
        }
        if let Some(list) = spec.strip_prefix("poly:") {
            let coeffs = list
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| GeoError::Config(format!("bad coefficient `{c}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            return Self::polynomial(coeffs);
        }
        Err(GeoError::Config(format!("unknown profile `{spec}`")))
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ProfileKind::Sine8Pi => "sine8pi".into(),
            ProfileKind::Polynomial(c) => {
                format!("poly:{}", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }

    pub fn r(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Sine8Pi => (PI * x).sin() / (8.0 * PI),
            ProfileKind::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
        }
    }

    pub fn dr(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Sine8Pi => (PI * x).cos() / 8.0,
            ProfileKind::Polynomial(c) => c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, ck)| acc * x + k as f64 * ck),
        }
    }

    pub fn ddr(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Sine8Pi => -PI * (PI * x).sin() / 8.0,
            ProfileKind::Polynomial(c) => {
                c.iter().enumerate().skip(2).rev().fold(0.0, |acc, (k, ck)| acc * x + (k * (k - 1)) as f64 * ck)
            }
        }
    }

    /// `r(x0 + h) − r(x0)` without cancellation.
    pub fn r_increment(&self, x0: f64, h: f64) -> f64 {
        match &self.kind {
            ProfileKind::Sine8Pi => (PI * (x0 + 0.5 * h)).cos() * (0.5 * PI * h).sin() / (4.0 * PI),
            ProfileKind::Polynomial(c) => {
                let x1 = x0 + h;
                let mut total = 0.0;
                for (k, ck) in c.iter().enumerate().skip(1) {
                    // (x0 + h)^k − x0^k = h Σ_j x1^j x0^(k−1−j)
                    let mut sum = 0.0;
                    for j in 0..k {
                        sum += x1.powi(j as i32) * x0.powi((k - 1 - j) as i32);
                    }
                    total += ck * h * sum;
                }
                total
            }
        }
    }

    /// `√(1 + r'²)`, the meridian arclength density.
    pub fn speed(&self, x: f64) -> f64 {
        self.dr(x).hypot(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (r0, r1) = (self.r(0.0), self.r(1.0));
        if r0.abs() > 1e-12 || r1.abs() > 1e-12 {
            return Err(GeoError::Config(format!("profile must vanish at both ends (r(0) = {r0:e}, r(1) = {r1:e})")));
        }
        let bound = 1.0 / (2.0 * PI);
        if self.dr(0.0).abs() >= bound || self.dr(1.0).abs() >= bound {
            return Err(GeoError::Config(format!(
                "end slopes |r'(0)| = {}, |r'(1)| = {} must be below 1/(2π)",
                self.dr(0.0).abs(),
                self.dr(1.0).abs()
            )));
        }
        let n = self.validity_samples.max(2);
        let (a, b) = (self.end_margin, 1.0 - self.end_margin);
        for i in 0..=n {
            let x = a + (b - a) * i as f64 / n as f64;
            if !(self.r(x) > 0.0) {
                return Err(GeoError::Config(format!("profile not positive at x = {x}")));
            }
        }
        Ok(())
    }

    /// Location and value of the sampled maximum of `r` on `[0, 1]`.
    pub fn maximum(&self) -> (f64, f64) {
        let n = self.validity_samples.max(16);
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let r = self.r(x);
            if r > best.1 {
                best = (x, r);
            }
        }
        let h = 1.0 / n as f64;
        let (x, v) = golden_min(|x| -self.r(x), (best.0 - h).max(0.0), (best.0 + h).min(1.0), 1e-14);
        if -v > best.1 {
            (x, -v)
        } else {
            best
        }
    }

    /// Gaussian curvature `−r'' / (r (1 + r'²)²)` of the induced metric.
    pub fn gaussian_curvature(&self, x: f64) -> f64 {
        let s2 = 1.0 + self.dr(x).powi(2);
        -self.ddr(x) / (self.r(x) * s2 * s2)
    }
}

fn band_domain(extra_leading: bool) -> ChartDomain {
    let two_pi = 2.0 * PI;
    if extra_leading {
        ChartDomain::boxed(vec![f64::NEG_INFINITY, 0.0, 0.0], vec![f64::INFINITY, 1.0, two_pi]).with_period(2, two_pi)
    } else {
        ChartDomain::boxed(vec![0.0, 0.0], vec![1.0, two_pi]).with_period(1, two_pi)
    }
}

/// The Riemannian surface `(Σ, k)` in the chart `(x, φ)`.
#[derive(Clone, Debug)]
pub struct SurfaceMetric {
    pub profile: ProfileFunction,
    domain: ChartDomain,
}

impl SurfaceMetric {
    pub fn new(profile: ProfileFunction) -> Result<Self> {
        profile.validate()?;
        Ok(Self { profile, domain: band_domain(false) })
    }

    pub fn sine8pi() -> Self {
        Self::new(ProfileFunction::sine8pi()).expect("builtin profile is valid")
    }

    pub fn r(&self, x: f64) -> f64 {
        self.profile.r(x)
    }

    pub fn end_margin(&self) -> f64 {
        self.profile.end_margin
    }

    /// Unit covector at `(x, φ)` whose velocity makes angle `psi` with `+∂x`.
    pub fn unit_state(&self, x: f64, phi: f64, psi: f64) -> PhaseState {
        let s = self.profile.speed(x);
        let r = self.r(x);
        PhaseState::new(vec![x, phi], vec![s * psi.cos(), r * psi.sin()])
    }

    /// Velocity `(ẋ, φ̇)` for a unit covector state.
    pub fn unit_velocity(&self, x: f64, psi: f64) -> (f64, f64) {
        (psi.cos() / self.profile.speed(x), psi.sin() / self.r(x))
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if x > 0.0 && x < 1.0 && x.is_finite() {
            Ok(())
        } else {
            Err(GeoError::Domain { point: vec![x] })
        }
    }
}

impl Metric for SurfaceMetric {
    fn name(&self) -> &str {
        "revolution-surface"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn components(&self, p: &Vector) -> Matrix {
        let x = p[0];
        Matrix::from_diagonal(&Vector::from_vec(vec![1.0 + self.profile.dr(x).powi(2), self.r(x).powi(2)]))
    }

    fn inverse(&self, p: &Vector) -> Matrix {
        let x = p[0];
        Matrix::from_diagonal(&Vector::from_vec(vec![1.0 / (1.0 + self.profile.dr(x).powi(2)), 1.0 / self.r(x).powi(2)]))
    }

    fn derivatives(&self, p: &Vector) -> Vec<Matrix> {
        let x = p[0];
        let (r, dr, ddr) = (self.r(x), self.profile.dr(x), self.profile.ddr(x));
        let mut dx = Matrix::zeros(2, 2);
        dx[(0, 0)] = 2.0 * dr * ddr;
        dx[(1, 1)] = 2.0 * r * dr;
        vec![dx, Matrix::zeros(2, 2)]
    }
}

/// `(ℝ × Σ, −dt² + k)` in the chart `(t, x, φ)` with `T = ∂t`.
#[derive(Clone, Debug)]
pub struct ProductSpacetime {
    pub surface: SurfaceMetric,
    domain: ChartDomain,
}

impl ProductSpacetime {
    pub fn new(surface: SurfaceMetric) -> Self {
        Self { surface, domain: band_domain(true) }
    }

    pub fn sine8pi() -> Self {
        Self::new(SurfaceMetric::sine8pi())
    }

    /// Future null covector over the unit surface covector at angle `psi`.
    pub fn null_state(&self, t: f64, x: f64, phi: f64, psi: f64) -> PhaseState {
        let s = self.surface.unit_state(x, phi, psi);
        PhaseState::new(vec![t, x, phi], vec![-1.0, s.covector[0], s.covector[1]])
    }

    pub fn spatial(&self, p: &Vector) -> ChartPoint {
        ChartPoint::new(vec![p[1], p[2]])
    }
}

impl Metric for ProductSpacetime {
    fn name(&self) -> &str {
        "product-revolution"
    }

    fn dim(&self) -> usize {
        3
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn components(&self, p: &Vector) -> Matrix {
        let x = p[1];
        let pr = &self.surface.profile;
        Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0 + pr.dr(x).powi(2), pr.r(x).powi(2)]))
    }

    fn inverse(&self, p: &Vector) -> Matrix {
        let x = p[1];
        let pr = &self.surface.profile;
        Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0 / (1.0 + pr.dr(x).powi(2)), 1.0 / pr.r(x).powi(2)]))
    }

    fn derivatives(&self, p: &Vector) -> Vec<Matrix> {
        let x = p[1];
        let pr = &self.surface.profile;
        let mut dx = Matrix::zeros(3, 3);
        dx[(1, 1)] = 2.0 * pr.dr(x) * pr.ddr(x);
        dx[(2, 2)] = 2.0 * pr.r(x) * pr.dr(x);
        vec![Matrix::zeros(3, 3), dx, Matrix::zeros(3, 3)]
    }

    fn time_orientation(&self, _p: &Vector) -> Option<Vector> {
        Some(Vector::from_vec(vec![1.0, 0.0, 0.0]))
    }

    fn time_axis(&self) -> Option<usize> {
        Some(0)
    }
}

/// Clairaut integral `r² φ̇ = α_φ` of a surface or product state.
pub fn clairaut_constant(s: &PhaseState) -> f64 {
    s.covector[s.dim() - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GeodesicKind {
    Complete,
    AsymptoticToEnds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEvidence {
    pub x_min: f64,
    pub x_max: f64,
    pub lower: Termination,
    pub upper: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicClassification {
    pub kind: GeodesicKind,
    pub turning_points: Option<(f64, f64)>,
    pub clairaut: f64,
    pub evidence: TraceEvidence,
}

/// Connected component of `{r ≥ c}` around `x0`, as `(x_lo, x_hi)`.
pub fn turning_points(profile: &ProfileFunction, x0: f64, c: f64) -> (f64, f64) {
    let c = c.abs();
    if c == 0.0 {
        return (0.0, 1.0);
    }
    if (profile.r(x0) - c).abs() <= 1e-13 && profile.dr(x0).abs() < 1e-9 {
        return (x0, x0);
    }
    // Roots are returned on the `r ≥ c` side so that `r² − c²` stays
    // non-negative over the whole integration range.
    let below = |x: f64| profile.r(x) < c;
    let root = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            if (outside - inside).abs() < 1e-16 {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if below(mid) {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        inside
    };
    let n = profile.validity_samples.max(64);
    let h = 1.0 / n as f64;
    let scan = |dir: f64| {
        let mut prev = x0;
        loop {
            let x = (prev + dir * h).clamp(0.0, 1.0);
            if below(x) {
                return root(prev, x);
            }
            if x == 0.0 || x == 1.0 {
                return x;
            }
            prev = x;
        }
    };
    (scan(-1.0), scan(1.0))
}

/// Clairaut classification of a unit-speed surface state, confirmed by a trace.
pub fn classify_geodesic(surface: &SurfaceMetric, s: &PhaseState, params: &FlowParams) -> Result<GeodesicClassification> {
    let e = crate::geometry::energy(surface, s)?;
    if (e - 1.0).abs() > 1e-8 {
        return Err(GeoError::DegenerateInput(format!("classification expects a unit-speed state, |α|² = {e}")));
    }
    let c = clairaut_constant(s);
    let x0 = s.base.coords[0];
    let margin = params.boundary_margin;
    let seg = trace(surface, s, (-params.max_param, params.max_param), params)?;
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in seg.dense_parameters(4) {
        let x = seg.base_at(t)[0];
        xmin = xmin.min(x);
        xmax = xmax.max(x);
    }
    let evidence = TraceEvidence { x_min: xmin, x_max: xmax, lower: seg.termination_lower, upper: seg.termination };
    let hit_both = seg.termination == Termination::HitBoundary && seg.termination_lower == Termination::HitBoundary;

    if c.abs() <= 1e-14 {
        if !hit_both {
            return Err(GeoError::ClassificationUncertain(format!(
                "meridian trace did not reach both ends (x in [{xmin}, {xmax}])"
            )));
        }
        return Ok(GeodesicClassification { kind: GeodesicKind::AsymptoticToEnds, turning_points: None, clairaut: c, evidence });
    }
    let (lo, hi) = turning_points(&surface.profile, x0, c);
    if lo <= 0.0 || hi >= 1.0 {
        return Err(GeoError::ClassificationUncertain(format!("no turning points for c = {c}")));
    }
    for (x, side) in [(lo, "lower"), (hi, "upper")] {
        if (surface.r(x) - c.abs()).abs() > 1e-8 {
            return Err(GeoError::ClassificationUncertain(format!("{side} turning point residual too large")));
        }
    }
    if lo < margin || hi > 1.0 - margin {
        return Err(GeoError::ClassificationUncertain(format!(
            "turning points ({lo}, {hi}) lie beyond the end margin {margin}; trace cannot confirm"
        )));
    }
    if seg.truncated() || xmin < lo - 1e-6 || xmax > hi + 1e-6 {
        return Err(GeoError::ClassificationUncertain(format!(
            "trace leaves the Clairaut band [{lo}, {hi}]: observed [{xmin}, {xmax}]"
        )));
    }
    Ok(GeodesicClassification { kind: GeodesicKind::Complete, turning_points: Some((lo, hi)), clairaut: c, evidence })
}

/// `L^k({x = x0}) = 2π r(x0)`.
pub fn circle_length(surface: &SurfaceMetric, x0: f64) -> Result<f64> {
    surface.check_x(x0)?;
    Ok(2.0 * PI * surface.r(x0))
}

/// `|∫_{x0}^{x1} √(1 + r'²) dx|`.
pub fn band_distance(surface: &SurfaceMetric, x0: f64, x1: f64) -> Result<f64> {
    surface.check_x(x0)?;
    surface.check_x(x1)?;
    Ok(band_integral(&surface.profile, x0, x1))
}

fn band_integral(profile: &ProfileFunction, x0: f64, x1: f64) -> f64 {
    if x0 == x1 {
        return 0.0;
    }
    integrate_scalar(|x| profile.speed(x), x0, x1, 1e-15, 1e-14).0.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MinimizerPattern {
    /// Monotone in `x`.
    Direct,
    /// Turns once below the lower endpoint.
    LowerTurn,
    /// Turns once above the upper endpoint.
    UpperTurn,
    /// Turns below, then above.
    LowerUpper,
    /// Turns above, then below.
    UpperLower,
    Meridian,
    Parallel,
    Shooting,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub distance: f64,
    pub lower: f64,
    pub upper: f64,
    pub uncertainty: f64,
    pub clairaut: f64,
    pub pattern: MinimizerPattern,
    /// Unit tangent `(ẋ, φ̇)` of the minimizer at the first point.
    pub initial_velocity: (f64, f64),
    /// `x`-range swept by the minimizer.
    pub x_range: (f64, f64),
    pub candidates: usize,
}

struct Pieces<'a> {
    profile: &'a ProfileFunction,
    xa: f64,
    xb: f64,
    margin: f64,
    c_lo_min: f64,
    c_hi_min: f64,
}

/// `[Φ, L]` over `[lo, hi]` for Clairaut constant `c`. An end flagged in
/// `turns` is taken to satisfy `r = c` exactly.
fn clairaut_integrals(profile: &ProfileFunction, lo: f64, hi: f64, c: f64, turns: (bool, bool)) -> ([f64; 2], f64) {
    if hi <= lo {
        return ([0.0, 0.0], 0.0);
    }
    // Each half uses x = end ± u² and evaluates r − c as a increment from
    // that end, which keeps the inverse square root accurate near turning points.
    let mid = 0.5 * (lo + hi);
    let half = |end: f64, sign: f64, len: f64, turn: bool| {
        // Rounding in r(turn) − c would otherwise leak into Φ as its square root.
        let excess = if turn { 0.0 } else { profile.r(end) - c };
        integrate::<2, _>(
            |u| {
                let h = sign * u * u;
                let x = end + h;
                let r = profile.r(x);
                let rm = excess + profile.r_increment(end, h);
                let d2 = rm * (r + c);
                if !(d2 > 0.0) {
                    return [0.0, 0.0];
                }
                let w = 2.0 * u * profile.speed(x) / d2.sqrt();
                [w * c / r, w * r]
            },
            0.0,
            len.sqrt(),
            0.5e-13,
            1e-12,
        )
    };
    let left = half(lo, 1.0, mid - lo, turns.0);
    let right = half(hi, -1.0, hi - mid, turns.1);
    ([left.value[0] + right.value[0], left.value[1] + right.value[1]], left.error + right.error)
}

#[derive(Clone, Copy)]
struct PatternValue {
    phi: f64,
    len: f64,
    err: f64,
    lo: f64,
    hi: f64,
}

const PATTERNS: [MinimizerPattern; 5] = [
    MinimizerPattern::Direct,
    MinimizerPattern::LowerTurn,
    MinimizerPattern::UpperTurn,
    MinimizerPattern::LowerUpper,
    MinimizerPattern::UpperLower,
];

#[derive(Clone, Copy)]
struct TurnPiece {
    value: [f64; 2],
    err: f64,
    turn: f64,
}

#[derive(Clone, Copy)]
struct SeedPieces {
    ab: [f64; 2],
    e_ab: f64,
    lo: Option<TurnPiece>,
    hi: Option<TurnPiece>,
}

fn needs_turns(pattern: MinimizerPattern) -> (bool, bool) {
    use MinimizerPattern::*;
    (matches!(pattern, LowerTurn | LowerUpper | UpperLower), matches!(pattern, UpperTurn | LowerUpper | UpperLower))
}

impl Pieces<'_> {
    fn pieces(&self, c: f64, want_lo: bool, want_hi: bool) -> SeedPieces {
        let (ab, e_ab) = clairaut_integrals(self.profile, self.xa, self.xb, c, (false, false));
        let lo = (want_lo && c > 0.0 && c >= self.c_lo_min)
            .then(|| turning_points(self.profile, self.xa, c).0)
            .filter(|x| *x >= self.margin)
            .map(|turn| {
                let (value, err) = clairaut_integrals(self.profile, turn, self.xa, c, (true, false));
                TurnPiece { value, err, turn }
            });
        let hi = (want_hi && c > 0.0 && c >= self.c_hi_min)
            .then(|| turning_points(self.profile, self.xb, c).1)
            .filter(|x| *x <= 1.0 - self.margin)
            .map(|turn| {
                let (value, err) = clairaut_integrals(self.profile, self.xb, turn, c, (false, true));
                TurnPiece { value, err, turn }
            });
        SeedPieces { ab, e_ab, lo, hi }
    }

    /// Total `(Φ, L)` of a pattern, `None` when a required turning point is
    /// beyond the end margin or the pattern cannot beat the upper bound.
    fn combine(&self, sp: &SeedPieces, pattern: MinimizerPattern) -> Option<PatternValue> {
        let (need_lo, need_hi) = needs_turns(pattern);
        let zero = TurnPiece { value: [0.0; 2], err: 0.0, turn: f64::NAN };
        let lo = if need_lo { sp.lo? } else { zero };
        let hi = if need_hi { sp.hi? } else { zero };
        let ab = sp.ab;
        let combine = |k: usize| match pattern {
            MinimizerPattern::Direct => ab[k],
            MinimizerPattern::LowerTurn => 2.0 * lo.value[k] + ab[k],
            MinimizerPattern::UpperTurn => ab[k] + 2.0 * hi.value[k],
            MinimizerPattern::LowerUpper => 2.0 * lo.value[k] + ab[k] + 2.0 * hi.value[k],
            MinimizerPattern::UpperLower => 2.0 * lo.value[k] + 3.0 * ab[k] + 2.0 * hi.value[k],
            _ => f64::NAN,
        };
        let v = PatternValue {
            phi: combine(0),
            len: combine(1),
            err: 3.0 * (sp.e_ab + lo.err + hi.err),
            lo: if need_lo { lo.turn } else { self.xa },
            hi: if need_hi { hi.turn } else { self.xb },
        };
        (v.phi.is_finite() && v.len.is_finite()).then_some(v)
    }

    fn eval(&self, pattern: MinimizerPattern, c: f64) -> Option<PatternValue> {
        let (need_lo, need_hi) = needs_turns(pattern);
        self.combine(&self.pieces(c, need_lo, need_hi), pattern)
    }
}

/// Direction of travel in `x` when leaving `xa` and when arriving at `xb`.
fn pattern_directions(p: MinimizerPattern) -> (f64, f64) {
    match p {
        MinimizerPattern::Direct => (1.0, 1.0),
        MinimizerPattern::LowerTurn => (-1.0, 1.0),
        MinimizerPattern::UpperTurn => (1.0, -1.0),
        MinimizerPattern::LowerUpper => (-1.0, -1.0),
        MinimizerPattern::UpperLower => (1.0, 1.0),
        _ => (0.0, 0.0),
    }
}

fn illinois<F: FnMut(f64) -> Option<f64>>(mut f: F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> Option<f64> {
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() < 1e-16 * (1.0 + c.abs()) || fc.abs() < 1e-14 {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Some(0.5 * (a + b))
}

struct Candidate {
    len: f64,
    err: f64,
    c: f64,
    sigma: f64,
    pattern: MinimizerPattern,
    lo: f64,
    hi: f64,
    /// Unit velocities at both ends, known only for shooting candidates.
    shot: Option<((f64, f64), (f64, f64))>,
}

/// Riemannian distance `dist_k(p, q)` on the band.
pub fn distance(surface: &SurfaceMetric, p: &ChartPoint, q: &ChartPoint, params: &FlowParams) -> Result<DistanceEstimate> {
    for pt in [p, q] {
        if pt.dim() != 2 || !pt.is_finite() {
            return Err(GeoError::Shape("surface points are (x, φ) pairs".into()));
        }
    }
    let margin = params.boundary_margin.max(0.0);
    for pt in [p, q] {
        let x = pt.coords[0];
        if !(x > 0.0 && x < 1.0) {
            return Err(GeoError::Domain { point: pt.coords.iter().copied().collect() });
        }
    }
    let profile = &surface.profile;
    let swapped = p.coords[0] > q.coords[0];
    let (a, b) = if swapped { (q, p) } else { (p, q) };
    let (xa, xb) = (a.coords[0], b.coords[0]);
    let delta = wrap_centered(b.coords[1] - a.coords[1], 2.0 * PI);
    let big_d = delta.abs();
    let band = band_integral(profile, xa, xb);

    let m_ab = {
        let mut m = profile.r(xa).min(profile.r(xb));
        for i in 1..64 {
            m = m.min(profile.r(xa + (xb - xa) * i as f64 / 64.0));
        }
        m
    };
    let upper = band + m_ab * big_d;
    let lower = band;
    if big_d == 0.0 && xa == xb {
        return Ok(DistanceEstimate {
            distance: 0.0,
            lower: 0.0,
            upper: 0.0,
            uncertainty: 0.0,
            clairaut: 0.0,
            pattern: MinimizerPattern::Meridian,
            initial_velocity: (0.0, 0.0),
            x_range: (xa, xa),
            candidates: 1,
        });
    }

    // A turn below x_a costs at least twice its x-excursion, so turns deeper
    // than half the slack to the upper bound cannot be minimal.
    let slack = upper - band + 1e-9;
    let min_r = |lo: f64, hi: f64| (0..=64).map(|i| profile.r(lo + (hi - lo) * i as f64 / 64.0)).fold(f64::INFINITY, f64::min);
    let c_lo_min = min_r((xa - 0.5 * slack).max(0.0), xa);
    let c_hi_min = min_r(xb, (xb + 0.5 * slack).min(1.0));
    let pieces = Pieces { profile, xa, xb, margin, c_lo_min, c_hi_min };
    let mut candidates: Vec<Candidate> = Vec::new();
    if big_d <= 1e-15 {
        candidates.push(Candidate {
            len: band,
            err: 1e-14,
            c: 0.0,
            sigma: 1.0,
            pattern: MinimizerPattern::Meridian,
            lo: xa,
            hi: xb,
            shot: None,
        });
    }
    if xa == xb && profile.dr(xa).abs() < 1e-12 {
        let r = profile.r(xa);
        candidates.push(Candidate {
            len: r * big_d,
            err: 1e-15,
            c: r,
            sigma: 1.0,
            pattern: MinimizerPattern::Parallel,
            lo: xa,
            hi: xa,
            shot: None,
        });
    }

    // Chebyshev nodes on [0, m); with the orientation sign this is the
    // symmetric 256-node sweep over [−m, m].
    const SEEDS: usize = 128;
    let mut seeds: Vec<f64> =
        (0..SEEDS).map(|j| 0.5 * m_ab * (1.0 - (PI * j as f64 / (SEEDS - 1) as f64).cos())).filter(|c| *c < m_ab).collect();
    seeds.push(m_ab * (1.0 - 1e-10));
    seeds.sort_by(f64::total_cmp);
    seeds.dedup();

    let cached: Vec<SeedPieces> = seeds.iter().map(|c| pieces.pieces(*c, true, true)).collect();
    for pattern in PATTERNS {
        let values: Vec<Option<PatternValue>> = cached.iter().map(|sp| pieces.combine(sp, pattern)).collect();
        for w in 0..seeds.len() - 1 {
            let (Some(v0), Some(v1)) = (values[w], values[w + 1]) else { continue };
            let (pmin, pmax) = (v0.phi.min(v1.phi), v0.phi.max(v1.phi));
            let kmax = (pmax / (2.0 * PI)).ceil() as i64 + 1;
            for k in 0..=kmax {
                for (target, family) in [(big_d + 2.0 * PI * k as f64, 1.0), (2.0 * PI * k as f64 - big_d, -1.0)] {
                    if target < 0.0 || target < pmin || target > pmax || (family < 0.0 && k == 0) {
                        continue;
                    }
                    let f0 = v0.phi - target;
                    let f1 = v1.phi - target;
                    let c_root = if f0 == 0.0 {
                        Some(seeds[w])
                    } else if f1 == 0.0 {
                        Some(seeds[w + 1])
                    } else if f0.signum() != f1.signum() {
                        // Φ has a square-root branch at c = m, so refine in u = √(m − c).
                        let to_c = |u: f64| m_ab - u * u;
                        let (u0, u1) = ((m_ab - seeds[w]).max(0.0).sqrt(), (m_ab - seeds[w + 1]).max(0.0).sqrt());
                        illinois(|u| pieces.eval(pattern, to_c(u)).map(|v| v.phi - target), u0, f0, u1, f1).map(to_c)
                    } else {
                        None
                    };
                    let Some(c_root) = c_root else { continue };
                    let Some(v) = pieces.eval(pattern, c_root) else { continue };
                    if (v.phi - target).abs() > 1e-9 {
                        continue;
                    }
                    let sign_delta = if delta >= 0.0 { 1.0 } else { -1.0 };
                    candidates.push(Candidate {
                        len: v.len,
                        err: v.err,
                        c: c_root,
                        sigma: family * sign_delta,
                        pattern,
                        lo: v.lo,
                        hi: v.hi,
                        shot: None,
                    });
                }
            }
        }
    }

    let n_candidates = candidates.len();
    let best =
        candidates.into_iter().filter(|c| c.len >= lower - 1e-9 && c.len <= upper + 1e-9).min_by(|x, y| x.len.total_cmp(&y.len));
    let best = match best {
        Some(b) => b,
        None => match shooting_distance(surface, a, b, upper, params) {
            Some(c) => c,
            None => return Err(GeoError::DistanceUncertain { lower, upper, best: upper }),
        },
    };

    let (dir_a, dir_b) = pattern_directions(best.pattern);
    let velocity_at = |x: f64, dir: f64, c: f64, sigma: f64| {
        let r = profile.r(x);
        let xdot = dir * ((r * r - c * c).max(0.0)).sqrt() / (profile.speed(x) * r);
        (xdot, sigma * c / (r * r))
    };
    let initial_velocity = match best.pattern {
        MinimizerPattern::Meridian => (if xb >= xa { 1.0 } else { -1.0 } / profile.speed(xa), 0.0),
        MinimizerPattern::Parallel => (0.0, delta.signum() / profile.r(xa)),
        MinimizerPattern::Shooting => best.shot.map_or((f64::NAN, f64::NAN), |s| s.0),
        _ => velocity_at(xa, dir_a, best.c, best.sigma),
    };
    let initial_velocity = if swapped {
        match best.pattern {
            MinimizerPattern::Meridian => (-1.0 / profile.speed(xb), 0.0),
            MinimizerPattern::Parallel => (0.0, -delta.signum() / profile.r(xb)),
            MinimizerPattern::Shooting => best.shot.map_or((f64::NAN, f64::NAN), |s| (-s.1 .0, -s.1 .1)),
            _ => {
                let v = velocity_at(xb, dir_b, best.c, best.sigma);
                (-v.0, -v.1)
            }
        }
    } else {
        initial_velocity
    };
    let x_range = (best.lo.min(xa), best.hi.max(xb));
    Ok(DistanceEstimate {
        distance: best.len,
        lower,
        upper,
        uncertainty: best.err.max(1e-12),
        clairaut: best.sigma * best.c,
        pattern: best.pattern,
        initial_velocity,
        x_range,
        candidates: n_candidates,
    })
}

/// Angle sweep from `a`, keeping the closest approach to `b` within arclength `budget`.
fn shooting_distance(
    surface: &SurfaceMetric,
    a: &ChartPoint,
    b: &ChartPoint,
    budget: f64,
    params: &FlowParams,
) -> Option<Candidate> {
    let fp = FlowParams { max_param: budget * 1.05, null_projection: crate::flow::NullProjection::Never, ..params.clone() };
    let (xa, pa) = (a.coords[0], a.coords[1]);
    let (xb, pb) = (b.coords[0], b.coords[1]);
    let rb = surface.r(xb);
    let miss = |psi: f64| -> (f64, f64) {
        let s = surface.unit_state(xa, pa, psi);
        let Ok(seg) = trace(surface, &s, (0.0, fp.max_param), &fp) else { return (f64::INFINITY, 0.0) };
        let ts = seg.dense_parameters(8);
        let d = |t: f64| {
            let y = seg.base_at(t);
            (y[0] - xb).hypot(rb * wrap_centered(y[1] - pb, 2.0 * PI))
        };
        let mut best = (f64::INFINITY, 0.0);
        for w in ts.windows(2) {
            let (t, v) = golden_min(d, w[0], w[1], 1e-12);
            if v < best.0 {
                best = (v, t);
            }
        }
        best
    };
    const ANGLES: usize = 720;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..ANGLES {
        let psi = -PI + 2.0 * PI * i as f64 / ANGLES as f64;
        let (m, t) = miss(psi);
        if m < best.0 {
            best = (m, t, psi);
        }
    }
    let h = 2.0 * PI / ANGLES as f64;
    let (psi, m) = golden_min(|psi| miss(psi).0, best.2 - h, best.2 + h, 1e-13);
    if m > 1e-8 {
        return None;
    }
    let (_, len) = miss(psi);
    let seg = trace(surface, &surface.unit_state(xa, pa, psi), (0.0, fp.max_param), &fp).ok()?;
    let (mut lo, mut hi) = (xa, xa);
    for t in seg.dense_parameters(8).into_iter().filter(|t| *t <= len).chain([len]) {
        let x = seg.base_at(t)[0];
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let end = seg.state_at(len);
    let v_end = legendre_inverse(surface, &end).ok()?.vector;
    Some(Candidate {
        len,
        err: 1e-7,
        c: surface.r(xa) * psi.sin(),
        sigma: 1.0,
        pattern: MinimizerPattern::Shooting,
        lo,
        hi,
        shot: Some((surface.unit_velocity(xa, psi), (v_end[0], v_end[1]))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow;
    use crate::geometry::energy;

    fn surf() -> SurfaceMetric {
        SurfaceMetric::sine8pi()
    }

    #[test]
    fn sine_profile_constraints() {
        let p = ProfileFunction::sine8pi();
        p.validate().unwrap();
        assert!((p.dr(0.0) - 0.125).abs() < 1e-15);
        let (xm, rm) = p.maximum();
        assert!((xm - 0.5).abs() < 1e-6);
        assert!((rm - 1.0 / (8.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn polynomial_profile_parse_and_reject() {
        // r = x (1 − x) / 10
        let p = ProfileFunction::parse("poly:0,0.1,-0.1").unwrap();
        assert!((p.r(0.5) - 0.025).abs() < 1e-15);
        assert!((p.dr(0.0) - 0.1).abs() < 1e-15);
        assert!((p.ddr(0.3) + 0.2).abs() < 1e-15);
        assert!(ProfileFunction::parse("poly:0,1,-1").is_err());
        assert!(ProfileFunction::parse("poly:1,-1").is_err());
        assert!(ProfileFunction::parse("cosine").is_err());
    }

    #[test]
    fn product_energy_example() {
        let m = ProductSpacetime::sine8pi();
        let r = m.surface.r(0.5);
        let s = PhaseState::new(vec![0.0, 0.5, 0.0], vec![1.0, 0.0, r]);
        assert!(energy(&m, &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn clairaut_examples() {
        let s = surf();
        assert_eq!(clairaut_constant(&s.unit_state(0.5, 0.0, 0.0)), 0.0);
        let c = clairaut_constant(&s.unit_state(0.5, 0.0, PI / 2.0));
        assert!((c - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((c - 0.039_788_7).abs() < 1e-7);
    }

    #[test]
    fn classification_examples() {
        let s = surf();
        let p = FlowParams { max_param: 20.0, ..Default::default() };
        let meridian = classify_geodesic(&s, &s.unit_state(0.5, 0.0, PI), &p).unwrap();
        assert_eq!(meridian.kind, GeodesicKind::AsymptoticToEnds);

        let eq = classify_geodesic(&s, &s.unit_state(0.5, 0.0, PI / 2.0), &p).unwrap();
        assert_eq!(eq.kind, GeodesicKind::Complete);
        let (lo, hi) = eq.turning_points.unwrap();
        assert_eq!((lo, hi), (0.5, 0.5));

        let psi = (0.9f64).asin();
        let mixed = classify_geodesic(&s, &s.unit_state(0.3, 0.0, psi), &p).unwrap();
        assert_eq!(mixed.kind, GeodesicKind::Complete);
        let (lo, hi) = mixed.turning_points.unwrap();
        let c = 0.9 * s.r(0.3);
        assert!((s.r(lo) - c).abs() < 1e-8 && (s.r(hi) - c).abs() < 1e-8);
        assert!(lo < 0.3 && hi > 0.7);
    }

    #[test]
    fn circle_lengths() {
        let s = surf();
        assert!((circle_length(&s, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((circle_length(&s, 0.25).unwrap() - 2f64.sqrt() / 8.0).abs() < 1e-15);
        assert!(circle_length(&s, 0.0).is_err());
        assert!(circle_length(&s, 1e-3).unwrap() < 2.0 * PI * s.r(2e-3));
    }

    #[test]
    fn band_distance_bounds() {
        let s = surf();
        assert_eq!(band_distance(&s, 0.3, 0.3).unwrap(), 0.0);
        let d = band_distance(&s, 0.25, 0.75).unwrap();
        assert!(d >= 0.5);
        let fine = integrate_scalar(|x| s.profile.speed(x), 0.25, 0.75, 1e-16, 1e-15).0;
        assert!((d - fine).abs() < 1e-10);
    }

    #[test]
    fn distance_same_meridian_is_band() {
        let s = surf();
        let p = FlowParams::default();
        let d = distance(&s, &ChartPoint::new(vec![0.2, 1.0]), &ChartPoint::new(vec![0.7, 1.0]), &p).unwrap();
        let band = band_distance(&s, 0.2, 0.7).unwrap();
        assert!((d.distance - band).abs() < 1e-7);
    }

    #[test]
    fn distance_half_circle_on_equator() {
        let s = surf();
        let p = FlowParams::default();
        let d = distance(&s, &ChartPoint::new(vec![0.5, 0.0]), &ChartPoint::new(vec![0.5, PI]), &p).unwrap();
        assert!(d.distance <= PI * s.r(0.5) + 1e-12);
        assert!(d.distance > 0.0);
    }

    #[test]
    fn distance_minimizer_reaches_target() {
        let s = surf();
        let p = FlowParams::default();
        let a = ChartPoint::new(vec![0.3, 0.2]);
        let b = ChartPoint::new(vec![0.6, 2.0]);
        let d = distance(&s, &a, &b, &p).unwrap();
        let (vx, vp) = d.initial_velocity;
        let state = PhaseState::new(vec![0.3, 0.2], vec![(1.0 + s.profile.dr(0.3).powi(2)) * vx, s.r(0.3).powi(2) * vp]);
        let end = flow(&s, &state, d.distance, &p).unwrap();
        assert!((end.base.coords[0] - 0.6).abs() < 1e-7);
        assert!(wrap_centered(end.base.coords[1] - 2.0, 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn surface_metric_is_metric_like() {
        let s = surf();
        let d =
            distance(&s, &ChartPoint::new(vec![0.4, 0.0]), &ChartPoint::new(vec![0.45, 0.1]), &FlowParams::default()).unwrap();
        assert!(d.distance >= d.lower - 1e-12 && d.distance <= d.upper + 1e-12);
    }
}
