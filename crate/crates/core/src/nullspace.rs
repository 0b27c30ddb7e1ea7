//! The space of null geodesics: class representatives, class comparison,
//! limits of class sequences and intersection diagnostics.

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::flow::{golden_min, trace, FlowParams, GeodesicSegment};
use crate::geometry::{
    as_list, energy, is_future_pointing, null_normalize, project_to_null_cone, AuxMetric, ChartPoint, Metric, PhaseState, Vector,
};

pub const DELTA_BASE: f64 = 1e-6;
pub const DELTA_DIR: f64 = 1e-6;
pub const DELTA_DISTINCT: f64 = 1e-3;

/// Normalized future null representative of a leaf of the null foliation.
#[derive(Clone, Debug, Serialize)]
pub struct NullGeodesicClass {
    pub representative: PhaseState,
    pub spacetime: String,
    pub aux: &'static str,
    #[serde(skip)]
    aux_metric: AuxMetric,
}

impl NullGeodesicClass {
    pub fn aux_metric(&self) -> AuxMetric {
        self.aux_metric
    }
}

#[derive(Clone, Debug)]
pub struct ClassParams {
    pub flow: FlowParams,
    pub aux: AuxMetric,
    pub delta_base: f64,
    pub delta_dir: f64,
    pub delta_distinct: f64,
    /// Half-width of the parameter window searched for approaches.
    pub span: f64,
}

impl Default for ClassParams {
    fn default() -> Self {
        let flow = FlowParams::default();
        Self {
            span: flow.max_param,
            flow,
            aux: AuxMetric::default(),
            delta_base: DELTA_BASE,
            delta_dir: DELTA_DIR,
            delta_distinct: DELTA_DISTINCT,
        }
    }
}

impl ClassParams {
    pub fn with_span(mut self, span: f64) -> Self {
        self.span = span;
        self.flow.max_param = self.flow.max_param.max(span);
        self
    }

    pub fn with_aux(mut self, aux: AuxMetric) -> Self {
        self.aux = aux;
        self
    }
}

/// Class of a future null state, normalized in the auxiliary metric.
pub fn class_of<M: Metric + ?Sized>(metric: &M, s: &PhaseState, aux: AuxMetric) -> Result<NullGeodesicClass> {
    let e = energy(metric, s)?;
    let scale = aux.covector_norm(metric, &s.base.coords, &s.covector);
    if !(scale > 0.0) {
        return Err(GeoError::DegenerateInput("zero covector".into()));
    }
    if e.abs() > 1e-8 * scale * scale || !is_future_pointing(metric, s)? {
        return Err(GeoError::NotNull { energy: e });
    }
    Ok(NullGeodesicClass {
        representative: null_normalize(metric, s, aux)?,
        spacetime: metric.name().to_string(),
        aux: aux.label(),
        aux_metric: aux,
    })
}

/// Closest approach of a traced geodesic to a target base point.
#[derive(Clone, Debug)]
pub struct Approach {
    pub parameter: f64,
    pub base_distance: f64,
    /// Normalized state at the approach.
    pub state: PhaseState,
}

fn trace_class<M: Metric + ?Sized>(metric: &M, c: &NullGeodesicClass, params: &ClassParams) -> Result<GeodesicSegment> {
    trace(metric, &c.representative, (-params.span, params.span), &params.flow)
}

/// Global minimum over the segment of the chart distance to `target`.
pub fn closest_approach<M: Metric + ?Sized>(
    metric: &M,
    seg: &GeodesicSegment,
    target: &Vector,
    aux: AuxMetric,
) -> Result<Approach> {
    let domain = metric.domain();
    let d = |t: f64| domain.distance(&seg.base_at(t), target);
    let ts = seg.dense_parameters(8);
    let ds: Vec<f64> = ts.iter().map(|t| d(*t)).collect();
    let mut best = (f64::INFINITY, 0.0);
    let floor = ds.iter().cloned().fold(f64::INFINITY, f64::min);
    for i in 0..ts.len() {
        let left = if i > 0 { ds[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < ts.len() { ds[i + 1] } else { f64::INFINITY };
        if ds[i] > left || ds[i] > right || ds[i] > 2.0 * floor + 1e-3 {
            continue;
        }
        let a = if i > 0 { ts[i - 1] } else { ts[i] };
        let b = if i + 1 < ts.len() { ts[i + 1] } else { ts[i] };
        let (t, v) = if b > a { golden_min(d, a, b, 1e-13) } else { (ts[i], ds[i]) };
        let (t, v) = if ds[i] < v { (ts[i], ds[i]) } else { (t, v) };
        if v < best.0 {
            best = (v, t);
        }
    }
    // The end of a truncated trace may sit just inside an exclusion ball, so
    // normalize without the domain check.
    let raw = seg.state_at(best.1);
    let norm = aux.covector_norm(metric, &raw.base.coords, &raw.covector);
    if !(norm > 0.0) {
        return Err(GeoError::DegenerateInput("zero covector along trace".into()));
    }
    let state = raw.scaled(1.0 / norm);
    Ok(Approach { parameter: best.1, base_distance: best.0, state })
}

fn dir_distance<M: Metric + ?Sized>(metric: &M, a: &PhaseState, b: &PhaseState, aux: AuxMetric) -> f64 {
    aux.covector_norm(metric, &b.base.coords, &(&a.covector - &b.covector))
}

/// Outcome of comparing two classes.
#[derive(Clone, Debug, Serialize)]
pub struct ClassComparison {
    pub same: bool,
    pub base_distance: f64,
    pub dir_distance: f64,
    /// At least one trace stopped at the domain boundary or an exclusion.
    pub truncated: bool,
}

fn one_way<M: Metric + ?Sized>(
    metric: &M,
    from: &NullGeodesicClass,
    to: &NullGeodesicClass,
    params: &ClassParams,
) -> Result<(f64, f64, bool, bool)> {
    let seg = trace_class(metric, from, params)?;
    let empty = seg.interval.1 - seg.interval.0 <= 0.0;
    let a = closest_approach(metric, &seg, &to.representative.base.coords, params.aux)?;
    let dir = dir_distance(metric, &a.state, &to.representative, params.aux);
    Ok((a.base_distance, dir, seg.truncated(), empty))
}

/// Compares classes in both directions; equal when either trace reaches the
/// other base within `delta_base` with matching normalized covector.
pub fn compare_classes<M: Metric + ?Sized>(
    metric: &M,
    c1: &NullGeodesicClass,
    c2: &NullGeodesicClass,
    params: &ClassParams,
    tol_base: f64,
    tol_dir: f64,
) -> Result<ClassComparison> {
    if c1.spacetime != c2.spacetime {
        return Err(GeoError::DegenerateInput(format!("classes of `{}` and `{}`", c1.spacetime, c2.spacetime)));
    }
    let f = one_way(metric, c1, c2, params)?;
    let b = one_way(metric, c2, c1, params)?;
    if f.3 && b.3 {
        return Err(GeoError::UndecidableByTruncation);
    }
    let score = |x: &(f64, f64, bool, bool)| x.0.max(x.1);
    let best = if score(&f) <= score(&b) { f } else { b };
    Ok(ClassComparison {
        same: best.0 <= tol_base && best.1 <= tol_dir,
        base_distance: best.0,
        dir_distance: best.1,
        truncated: f.2 || b.2,
    })
}

pub fn same_class<M: Metric + ?Sized>(
    metric: &M,
    c1: &NullGeodesicClass,
    c2: &NullGeodesicClass,
    params: &ClassParams,
) -> Result<bool> {
    Ok(compare_classes(metric, c1, c2, params, params.delta_base, params.delta_dir)?.same)
}

/// Class distance `max(base, direction)` at the best approach.
pub fn class_separation<M: Metric + ?Sized>(
    metric: &M,
    c1: &NullGeodesicClass,
    c2: &NullGeodesicClass,
    params: &ClassParams,
) -> Result<f64> {
    let c = compare_classes(metric, c1, c2, params, 0.0, 0.0)?;
    Ok(c.base_distance.max(c.dir_distance))
}

/// Compact chart ball in which limits are observed.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeWindow {
    pub label: String,
    #[serde(serialize_with = "as_list")]
    pub center: Vector,
    pub radius: f64,
}

impl ProbeWindow {
    pub fn new(label: impl Into<String>, center: Vec<f64>, radius: f64) -> Self {
        Self { label: label.into(), center: Vector::from_vec(center), radius }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitClass {
    pub class: NullGeodesicClass,
    pub window: String,
    /// Spread between extrapolants of different order.
    pub uncertainty: f64,
    pub members: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowSummary {
    pub label: String,
    pub entered: usize,
    /// Limits seen in this window (indices into `limits` after deduplication).
    pub limits: Vec<usize>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub sequence: String,
    pub aux: &'static str,
    pub limits: Vec<LimitClass>,
    pub pairwise_separations: Vec<Vec<f64>>,
    pub windows: Vec<WindowSummary>,
    pub hausdorff_violation: bool,
}

struct Entry {
    eps: f64,
    state: PhaseState,
}

/// Neville extrapolation of `(eps_i, y_i)` to `eps = 0`.
fn extrapolate(eps: &[f64], ys: &[Vector]) -> Vector {
    let n = eps.len();
    let mut p: Vec<Vector> = ys.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            let den = eps[i] - eps[i + m];
            p[i] = if den == 0.0 { p[i + 1].clone() } else { (&p[i + 1] * eps[i] - &p[i] * eps[i + m]) / den };
        }
    }
    p[0].clone()
}

fn feature<M: Metric + ?Sized>(metric: &M, s: &PhaseState, reference: &Vector) -> Vector {
    let disp = metric.domain().displacement(reference, &s.base.coords);
    let n = disp.len();
    Vector::from_iterator(2 * n, (reference + disp).iter().chain(s.covector.iter()).copied())
}

fn limit_of_cluster<M: Metric + ?Sized>(metric: &M, members: &[&Entry], aux: AuxMetric) -> Result<(PhaseState, f64)> {
    let last = members.last().expect("cluster is non-empty");
    let reference = last.state.base.coords.clone();
    let n = reference.len();
    let tail: Vec<&&Entry> = members.iter().rev().take(3).collect();
    let eps: Vec<f64> = tail.iter().map(|e| e.eps).collect();
    let ys: Vec<Vector> = tail.iter().map(|e| feature(metric, &e.state, &reference)).collect();
    let quad = extrapolate(&eps, &ys);
    let lin = extrapolate(&eps[..eps.len().min(2)], &ys[..ys.len().min(2)]);
    let uncertainty = (&quad - &lin).amax();
    let build = |y: &Vector| -> Option<PhaseState> {
        let base = metric.domain().wrap(&y.rows(0, n).into_owned());
        if !metric.domain().contains(&base) {
            return None;
        }
        let s = PhaseState::from_parts(ChartPoint::from_vector(base), y.rows(n, n).into_owned());
        let s = match metric.time_axis() {
            Some(_) => project_to_null_cone(metric, &s)?,
            None => s,
        };
        null_normalize(metric, &s, aux).ok()
    };
    match build(&quad) {
        Some(s) => Ok((s, uncertainty)),
        None => Ok((last.state.clone(), (&ys[0] - &ys[ys.len().min(2) - 1]).amax())),
    }
}

/// Splits tail states into single-linkage clusters.
fn clusters<'a, M: Metric + ?Sized>(metric: &M, tail: &'a [Entry]) -> Vec<Vec<&'a Entry>> {
    let reference = tail[0].state.base.coords.clone();
    let feats: Vec<Vector> = tail.iter().map(|e| feature(metric, &e.state, &reference)).collect();
    let dist = |i: usize, j: usize| (&feats[i] - &feats[j]).norm();
    let n = tail.len();
    let nn_max = (0..n).map(|i| (0..n).filter(|j| *j != i).map(|j| dist(i, j)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let link = 4.0 * nn_max;
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if dist(i, j) <= link {
                let (a, b) = (label[i], label[j]);
                if a != b {
                    label.iter_mut().for_each(|l| {
                        if *l == a {
                            *l = b;
                        }
                    });
                }
            }
        }
    }
    let mut ids: Vec<usize> = label.clone();
    ids.sort_unstable();
    ids.dedup();
    ids.iter().map(|id| (0..n).filter(|i| label[*i] == *id).map(|i| &tail[i]).collect()).collect()
}

/// Distinct limit classes of `sequence` seen through `probes`. `schedule`
/// gives the family parameter of each element (default `1/(n+1)`), used to
/// extrapolate each convergent subsequence to its limit.
pub fn limit_classes<M: Metric + ?Sized>(
    metric: &M,
    label: &str,
    sequence: &[NullGeodesicClass],
    schedule: Option<&[f64]>,
    probes: &[ProbeWindow],
    params: &ClassParams,
) -> Result<LimitReport> {
    if sequence.len() < 8 {
        return Err(GeoError::Shape(format!("limit detection needs at least 8 classes, got {}", sequence.len())));
    }
    if let Some(s) = schedule {
        if s.len() != sequence.len() {
            return Err(GeoError::Shape("schedule length differs from sequence length".into()));
        }
    }
    let segments: Vec<GeodesicSegment> = sequence.iter().map(|c| trace_class(metric, c, params)).collect::<Result<_>>()?;
    let mut raw: Vec<LimitClass> = Vec::new();
    let mut windows = Vec::new();
    for probe in probes {
        let mut entries = Vec::new();
        for (k, seg) in segments.iter().enumerate() {
            let a = closest_approach(metric, seg, &probe.center, params.aux)?;
            if a.base_distance <= probe.radius {
                let eps = schedule.map_or(1.0 / (k as f64 + 1.0), |s| s[k]);
                entries.push(Entry { eps, state: a.state });
            }
        }
        let entered = entries.len();
        let mut note = None;
        let mut found = Vec::new();
        if entered < 3 {
            note = Some(format!("only {entered} traces entered the window"));
        } else {
            let start = entered - (entered / 2).max(3);
            for cluster in clusters(metric, &entries[start..]) {
                if cluster.len() < 3 {
                    continue;
                }
                let (state, uncertainty) = limit_of_cluster(metric, &cluster, params.aux)?;
                found.push(raw.len());
                raw.push(LimitClass {
                    class: NullGeodesicClass {
                        representative: state,
                        spacetime: metric.name().to_string(),
                        aux: params.aux.label(),
                        aux_metric: params.aux,
                    },
                    window: probe.label.clone(),
                    uncertainty,
                    members: cluster.len(),
                });
            }
        }
        windows.push((probe.label.clone(), entered, found, note));
    }

    // Deduplicate with tolerances widened by the extrapolation spread.
    let mut rep: Vec<usize> = (0..raw.len()).collect();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..raw.len() {
        let mut merged = None;
        for &k in &kept {
            let widen = 10.0 * (raw[i].uncertainty + raw[k].uncertainty);
            let c = compare_classes(
                metric,
                &raw[k].class,
                &raw[i].class,
                params,
                params.delta_base + widen,
                params.delta_dir + widen,
            )?;
            if c.same {
                merged = Some(k);
                break;
            }
        }
        match merged {
            Some(k) => rep[i] = k,
            None => kept.push(i),
        }
    }
    let index_of = |i: usize| kept.iter().position(|k| *k == rep[i]).expect("representative is kept");
    let limits: Vec<LimitClass> = kept.iter().map(|&k| raw[k].clone()).collect();
    let mut sep = vec![vec![0.0; limits.len()]; limits.len()];
    for i in 0..limits.len() {
        for j in 0..i {
            let s = class_separation(metric, &limits[i].class, &limits[j].class, params)?;
            sep[i][j] = s;
            sep[j][i] = s;
        }
    }
    let violation = (0..limits.len()).any(|i| (0..i).any(|j| sep[i][j] > params.delta_distinct));
    let windows = windows
        .into_iter()
        .map(|(label, entered, found, note)| {
            let mut idx: Vec<usize> = found.iter().map(|i| index_of(*i)).collect();
            idx.sort_unstable();
            idx.dedup();
            WindowSummary { label, entered, limits: idx, note }
        })
        .collect();
    Ok(LimitReport {
        sequence: label.to_string(),
        aux: params.aux.label(),
        limits,
        pairwise_separations: sep,
        windows,
        hausdorff_violation: violation,
    })
}

/// Runs [`limit_classes`] on `family(ε)` for `ε` in `schedule` and returns
/// the report when it shows a Hausdorff violation.
pub fn hausdorff_witness<M, F>(
    metric: &M,
    label: &str,
    family: F,
    schedule: &[f64],
    probes: &[ProbeWindow],
    params: &ClassParams,
) -> Result<(Option<LimitReport>, LimitReport)>
where
    M: Metric + ?Sized,
    F: Fn(f64) -> Result<PhaseState>,
{
    let classes = schedule.iter().map(|e| class_of(metric, &family(*e)?, params.aux)).collect::<Result<Vec<_>>>()?;
    let report = limit_classes(metric, label, &classes, Some(schedule), probes, params)?;
    Ok((report.hausdorff_violation.then(|| report.clone()), report))
}

/// Chart region for intersection counts.
#[derive(Clone, Debug)]
pub enum Region {
    Ball {
        center: Vector,
        radius: f64,
    },
    /// Open convex polygon in a 2D chart, optionally the projection of the
    /// polygon under `x ↦ x + k·period` along `axis`.
    ConvexPolygon {
        vertices: Vec<[f64; 2]>,
        lift: Option<(usize, f64)>,
    },
}

impl Region {
    /// Open convex hull of `points` (any order).
    pub fn convex_hull(points: &[[f64; 2]]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        let mut hull: Vec<[f64; 2]> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
                if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
            for &p in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        Region::ConvexPolygon { vertices: hull, lift: None }
    }

    pub fn with_lift(self, axis: usize, period: f64) -> Self {
        match self {
            Region::ConvexPolygon { vertices, .. } => Region::ConvexPolygon { vertices, lift: Some((axis, period)) },
            other => other,
        }
    }

    pub fn contains(&self, p: &Vector) -> bool {
        match self {
            Region::Ball { center, radius } => (p - center).norm() < *radius,
            Region::ConvexPolygon { vertices, lift } => {
                let inside = |q: [f64; 2]| {
                    (0..vertices.len()).all(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % vertices.len()];
                        (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) > 0.0
                    })
                };
                let q = [p[0], p[1]];
                match lift {
                    None => inside(q),
                    Some((axis, period)) => {
                        let lo = vertices.iter().map(|v| v[*axis]).fold(f64::INFINITY, f64::min);
                        let hi = vertices.iter().map(|v| v[*axis]).fold(f64::NEG_INFINITY, f64::max);
                        let k0 = ((lo - q[*axis]) / period).floor() as i64;
                        let k1 = ((hi - q[*axis]) / period).ceil() as i64;
                        (k0..=k1).any(|k| {
                            let mut r = q;
                            r[*axis] += k as f64 * period;
                            inside(r)
                        })
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionReport {
    pub components: usize,
    /// Parameter intervals of the components, ends refined by bisection.
    pub intervals: Vec<(f64, f64)>,
}

/// Connected components of `{t : base(t) ∈ region}` at the sample spacing.
pub fn intersection_components(segment: &GeodesicSegment, region: &Region) -> IntersectionReport {
    let ts = segment.dense_parameters(16);
    let inside = |t: f64| region.contains(&segment.base_at(t));
    let flags: Vec<bool> = ts.iter().map(|t| inside(*t)).collect();
    let refine = |mut a: f64, mut b: f64| {
        // inside(a) != inside(b); returns the crossing parameter.
        let fa = inside(a);
        while b - a > 1e-8 {
            let m = 0.5 * (a + b);
            if inside(m) == fa {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..ts.len() {
        match (flags[i], start) {
            (true, None) => start = Some(if i == 0 { ts[0] } else { refine(ts[i - 1], ts[i]) }),
            (false, Some(s)) => {
                intervals.push((s, refine(ts[i - 1], ts[i])));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push((s, *ts.last().unwrap()));
    }
    IntersectionReport { components: intervals.len(), intervals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow;
    use crate::geometry::{future_null_covector, legendre, TangentVector};
    use crate::metrics::Minkowski;

    fn null_at(m: &Minkowski, x: f64, y: f64, dir: f64) -> PhaseState {
        future_null_covector(m, &Vector::from_vec(vec![x, y]), &Vector::from_vec(vec![dir, 0.0])).unwrap()
    }

    fn params() -> ClassParams {
        ClassParams::default().with_span(5.0)
    }

    #[test]
    fn class_of_is_euler_and_flow_invariant() {
        let m = Minkowski::new(2);
        let s = null_at(&m, 0.2, 0.1, 1.0);
        let c = class_of(&m, &s, AuxMetric::WickFlip).unwrap();
        let c3 = class_of(&m, &s.scaled(3.0), AuxMetric::WickFlip).unwrap();
        assert!((&c.representative.covector - &c3.representative.covector).amax() < 1e-15);
        let again = class_of(&m, &c.representative, AuxMetric::WickFlip).unwrap();
        assert!((&again.representative.covector - &c.representative.covector).amax() < 1e-15);
        let moved = flow(&m, &s, 2.7, &FlowParams::default()).unwrap();
        let cm = class_of(&m, &moved, AuxMetric::WickFlip).unwrap();
        assert!(same_class(&m, &c, &cm, &params()).unwrap());
    }

    #[test]
    fn non_null_input_is_rejected() {
        let m = Minkowski::new(2);
        let s = PhaseState::new(vec![0.0, 0.0], vec![0.5, -1.0]);
        assert!(matches!(class_of(&m, &s, AuxMetric::WickFlip), Err(GeoError::NotNull { .. })));
    }

    #[test]
    fn parallel_lines_and_severed_rays_differ() {
        let m = Minkowski::new(2);
        let a = class_of(&m, &null_at(&m, 0.0, 0.0, 1.0), AuxMetric::WickFlip).unwrap();
        let b = class_of(&m, &null_at(&m, 0.1, 0.0, 1.0), AuxMetric::WickFlip).unwrap();
        assert!(same_class(&m, &a, &a, &params()).unwrap());
        assert!(!same_class(&m, &a, &b, &params()).unwrap());

        let holed = Minkowski::minus_origin(1e-8);
        let lo = class_of(&holed, &null_at(&holed, -1.0, -1.0, 1.0), AuxMetric::WickFlip).unwrap();
        let hi = class_of(&holed, &null_at(&holed, 1.0, 1.0, 1.0), AuxMetric::WickFlip).unwrap();
        let cmp = compare_classes(&holed, &lo, &hi, &params(), DELTA_BASE, DELTA_DIR).unwrap();
        assert!(!cmp.same && cmp.truncated);
        // Without the hole the two points lie on one leaf.
        let lo = class_of(&m, &null_at(&m, -1.0, -1.0, 1.0), AuxMetric::WickFlip).unwrap();
        let hi = class_of(&m, &null_at(&m, 1.0, 1.0, 1.0), AuxMetric::WickFlip).unwrap();
        assert!(same_class(&m, &lo, &hi, &params()).unwrap());
    }

    #[test]
    fn constant_sequence_has_one_limit() {
        let m = Minkowski::new(2);
        let c = class_of(&m, &null_at(&m, 0.0, 0.0, 1.0), AuxMetric::WickFlip).unwrap();
        let seq = vec![c.clone(); 10];
        let probes = [ProbeWindow::new("origin", vec![0.0, 0.0], 0.5)];
        let r = limit_classes(&m, "constant", &seq, None, &probes, &params()).unwrap();
        assert_eq!(r.limits.len(), 1);
        assert!(!r.hausdorff_violation);
        assert!(same_class(&m, &r.limits[0].class, &c, &params()).unwrap());
    }

    #[test]
    fn too_short_sequence_is_rejected() {
        let m = Minkowski::new(2);
        let c = class_of(&m, &null_at(&m, 0.0, 0.0, 1.0), AuxMetric::WickFlip).unwrap();
        let probes = [ProbeWindow::new("origin", vec![0.0, 0.0], 0.5)];
        assert!(limit_classes(&m, "short", &vec![c; 5], None, &probes, &params()).is_err());
    }

    #[test]
    fn region_membership() {
        let r = Region::convex_hull(&[[0.0, 0.0], [1.5, 0.5], [1.0, 1.0], [0.5, -0.5]]).with_lift(0, 1.0);
        assert!(r.contains(&Vector::from_vec(vec![0.75, 0.25])));
        assert!(!r.contains(&Vector::from_vec(vec![0.25, 0.25])));
        assert!(r.contains(&Vector::from_vec(vec![0.3, 0.2])));
        assert!(r.contains(&Vector::from_vec(vec![0.3 - 2.0, 0.2])));
        assert!(!r.contains(&Vector::from_vec(vec![0.5, 2.0])));
    }

    #[test]
    fn intersection_trivial_cases() {
        let m = Minkowski::new(2);
        let s = legendre(&m, &TangentVector::new(vec![0.0, 0.0], vec![1.0, 1.0])).unwrap();
        let seg = trace(&m, &s, (-1.0, 1.0), &FlowParams::default()).unwrap();
        let big = Region::Ball { center: Vector::from_vec(vec![0.0, 0.0]), radius: 10.0 };
        assert_eq!(intersection_components(&seg, &big).components, 1);
        let far = Region::Ball { center: Vector::from_vec(vec![5.0, 0.0]), radius: 1.0 };
        assert_eq!(intersection_components(&seg, &far).components, 0);
    }
}
