//! Cogeodesic flow on `T*M`, dense traces with domain events, the
//! exponential map and pointwise contact identities.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::geometry::{
    energy, legendre, project_to_null_cone, ChartPoint, Exclusion, Matrix, Metric, PhaseState, TangentVector, Vector,
};
use crate::ode::{Control, DenseStep, Dopri5, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
pub enum NullProjection {
    /// Re-project onto the null cone when the requested span exceeds 10.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowParams {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_param: f64,
    pub boundary_margin: f64,
    pub null_projection: NullProjection,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 0.05,
            max_param: 50.0,
            boundary_margin: 1e-3,
            null_projection: NullProjection::Auto,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.max_param > 0.0
            && self.boundary_margin >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(GeoError::Config(format!("invalid flow parameters {self:?}")))
        }
    }

    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol / factor, abs_tol: self.abs_tol / factor, ..self.clone() }
    }

    fn integrator(&self) -> Dopri5 {
        Dopri5::new(self.rel_tol, self.abs_tol, self.max_step)
    }

    fn projects(&self, span: f64) -> bool {
        match self.null_projection {
            NullProjection::Always => true,
            NullProjection::Never => false,
            NullProjection::Auto => span > 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    ReachedParam,
    HitBoundary,
    HitExclusion,
}

/// Right-hand side of the geodesic flow of `½ g^ij α_i α_j`:
/// `ẋ = g⁻¹α`, `α̇_k = ½ vᵀ (∂_k g) v` with `v = g⁻¹α`.
pub fn geodesic_rhs<M: Metric + ?Sized>(metric: &M, y: &[f64], out: &mut [f64]) {
    let n = metric.dim();
    let x = Vector::from_column_slice(&y[..n]);
    let alpha = Vector::from_column_slice(&y[n..]);
    let v = metric.inverse(&x) * alpha;
    let dg = metric.derivatives(&x);
    for i in 0..n {
        out[i] = v[i];
        out[n + i] = 0.5 * v.dot(&(&dg[i] * &v));
    }
}

/// One direction of a trace.
#[derive(Clone, Debug)]
struct Branch {
    solution: Solution,
    termination: Termination,
}

/// A traced geodesic with dense output on `[interval.0, interval.1]`.
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    pub initial: PhaseState,
    /// Affine-parameter range actually covered.
    pub interval: (f64, f64),
    /// Accepted step nodes, strictly increasing in parameter.
    pub samples: Vec<(f64, PhaseState)>,
    /// Termination at the upper end.
    pub termination: Termination,
    /// Termination at the lower end.
    pub termination_lower: Termination,
    requested: (f64, f64),
    forward: Option<Branch>,
    backward: Option<Branch>,
}

impl GeodesicSegment {
    pub fn requested(&self) -> (f64, f64) {
        self.requested
    }

    pub fn truncated(&self) -> bool {
        self.termination != Termination::ReachedParam || self.termination_lower != Termination::ReachedParam
    }

    pub fn exclusion_hits(&self) -> usize {
        [self.termination, self.termination_lower].iter().filter(|t| **t == Termination::HitExclusion).count()
    }

    /// Dense state at `t`, clamped to the covered interval.
    pub fn state_at(&self, t: f64) -> PhaseState {
        let t = t.clamp(self.interval.0, self.interval.1);
        let branch = if t >= 0.0 { &self.forward } else { &self.backward };
        match branch {
            Some(b) => PhaseState::from_flat(&b.solution.eval(t)),
            None => self.initial.clone(),
        }
    }

    pub fn base_at(&self, t: f64) -> Vector {
        self.state_at(t).base.coords
    }

    /// Accepted step intervals `[t_lo, t_hi]` in increasing order.
    pub fn step_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if let Some(b) = &self.backward {
            for s in b.solution.steps.iter().rev() {
                out.push((s.t1(), s.t0));
            }
        }
        if let Some(f) = &self.forward {
            for s in &f.solution.steps {
                out.push((s.t0, s.t1()));
            }
        }
        out.retain(|(a, b)| b > a);
        out.iter_mut().for_each(|iv| {
            iv.0 = iv.0.max(self.interval.0);
            iv.1 = iv.1.min(self.interval.1);
        });
        out.retain(|(a, b)| b > a);
        out
    }

    /// Uniform resampling with at least `n` points and at least one per step.
    pub fn dense_parameters(&self, per_step: usize) -> Vec<f64> {
        let mut ts = Vec::new();
        for (a, b) in self.step_intervals() {
            for k in 0..per_step {
                ts.push(a + (b - a) * k as f64 / per_step as f64);
            }
        }
        ts.push(self.interval.1);
        ts.dedup();
        ts
    }
}

fn exclusion_distance(domain: &crate::geometry::ChartDomain, e: &Exclusion, y: &[f64]) -> f64 {
    let Exclusion::Point { center, .. } = e;
    let n = center.len();
    let x = Vector::from_column_slice(&y[..n]);
    domain.distance(&x, center)
}

fn bisect<F: FnMut(f64) -> f64>(mut g: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // g(lo) > 0, g(hi) <= 0
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal function on `[a, b]` by golden-section search.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Searches an accepted step for the first domain event.
fn step_event<M: Metric + ?Sized>(metric: &M, step: &DenseStep, margin: f64) -> Option<(f64, Termination)> {
    let domain = metric.domain();
    let n = metric.dim();
    let gap = |t: f64| {
        let y = step.eval(t);
        domain.boundary_gap(&Vector::from_column_slice(&y[..n])) - margin
    };
    let mut best: Option<(f64, Termination)> = None;
    let ahead = |a: f64, b: f64| (b - a) * step.h.signum() < 0.0;

    let end = step.end_value();
    if domain.boundary_gap(&Vector::from_column_slice(&end[..n])) - margin <= 0.0 {
        let t = if gap(step.t0) <= 0.0 { step.t0 } else { bisect(gap, step.t0, step.t1(), 1e-13 * (1.0 + step.t0.abs())) };
        best = Some((t, Termination::HitBoundary));
    }

    const SAMPLES: usize = 8;
    for e in &domain.exclusions {
        let Exclusion::Point { radius, .. } = e;
        let dist = |t: f64| exclusion_distance(domain, e, &step.eval(t));
        let mut k_min = 0;
        let mut d_min = f64::INFINITY;
        let mut values = [0.0; SAMPLES + 1];
        for (k, v) in values.iter_mut().enumerate() {
            let t = step.t0 + step.h * k as f64 / SAMPLES as f64;
            *v = dist(t);
            if *v < d_min {
                d_min = *v;
                k_min = k;
            }
        }
        let (mut t_min, mut d_best) = (step.t0 + step.h * k_min as f64 / SAMPLES as f64, d_min);
        if d_min >= *radius {
            let lo = step.t0 + step.h * (k_min.saturating_sub(1)) as f64 / SAMPLES as f64;
            let hi = step.t0 + step.h * ((k_min + 1).min(SAMPLES)) as f64 / SAMPLES as f64;
            let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
            let (tm, dm) = golden_min(dist, a, b, 1e-15 * (1.0 + a.abs()).max(1e-300));
            if dm < d_best {
                t_min = tm;
                d_best = dm;
            }
        }
        if d_best < *radius {
            let g = |t: f64| dist(t) - radius;
            let t_hit = if g(step.t0) <= 0.0 { step.t0 } else { bisect(g, step.t0, t_min, 1e-14 * (1.0 + step.t0.abs())) };
            if best.map_or(true, |(tb, _)| ahead(t_hit, tb)) {
                best = Some((t_hit, Termination::HitExclusion));
            }
        }
    }
    best
}

fn integrate_branch<M: Metric + ?Sized>(
    metric: &M,
    s: &PhaseState,
    t_end: f64,
    params: &FlowParams,
    project: bool,
) -> Result<Branch> {
    let y0 = s.to_flat();
    let n = metric.dim();
    let e0 = energy(metric, s)?;
    let project = project && e0.abs() <= 1e-8 && metric.time_axis().is_some();
    let mut termination = Termination::ReachedParam;
    let solution = params.integrator().solve(
        |_, y, out| geodesic_rhs(metric, y, out),
        0.0,
        &y0,
        t_end,
        |step, end| {
            if let Some((t, kind)) = step_event(metric, step, params.boundary_margin) {
                termination = kind;
                return Control::Stop { t };
            }
            if project {
                let st = PhaseState::from_flat(end);
                if let Some(p) = project_to_null_cone(metric, &st) {
                    end[n..].copy_from_slice(p.covector.as_slice());
                }
            }
            Control::Continue
        },
    )?;
    Ok(Branch { solution, termination })
}

fn check_start<M: Metric + ?Sized>(metric: &M, s: &PhaseState, params: &FlowParams) -> Result<()> {
    params.validate()?;
    energy(metric, s)?;
    if metric.domain().boundary_gap(&s.base.coords) < params.boundary_margin {
        return Err(GeoError::Domain { point: s.base.coords.iter().copied().collect() });
    }
    Ok(())
}

/// State of the cogeodesic flow at parameter `t`.
pub fn flow<M: Metric + ?Sized>(metric: &M, s: &PhaseState, t: f64, params: &FlowParams) -> Result<PhaseState> {
    check_start(metric, s, params)?;
    if t.abs() > params.max_param {
        return Err(GeoError::DegenerateInput(format!("|t| = {} exceeds max_param {}", t.abs(), params.max_param)));
    }
    if t == 0.0 {
        return Ok(s.clone());
    }
    let b = integrate_branch(metric, s, t, params, params.projects(t.abs()))?;
    if b.solution.stopped {
        return Err(GeoError::Truncated { parameter: b.solution.t_end, reason: b.termination });
    }
    Ok(PhaseState::from_flat(&b.solution.y_end))
}

/// Traces the geodesic of `s` over `[a, b]` (clamped to `±max_param`),
/// integrating forward and backward from parameter 0.
pub fn trace<M: Metric + ?Sized>(
    metric: &M,
    s: &PhaseState,
    interval: (f64, f64),
    params: &FlowParams,
) -> Result<GeodesicSegment> {
    check_start(metric, s, params)?;
    let (a, b) = interval;
    if !(a <= b) {
        return Err(GeoError::DegenerateInput(format!("empty interval [{a}, {b}]")));
    }
    let hi = b.max(0.0).min(params.max_param);
    let lo = a.min(0.0).max(-params.max_param);
    let project = params.projects(hi - lo);
    let forward = if hi > 0.0 { Some(integrate_branch(metric, s, hi, params, project)?) } else { None };
    let backward = if lo < 0.0 { Some(integrate_branch(metric, s, lo, params, project)?) } else { None };

    let reached_hi = forward.as_ref().map_or(0.0, |f| f.solution.t_end);
    let reached_lo = backward.as_ref().map_or(0.0, |f| f.solution.t_end);
    let termination = forward.as_ref().map_or(Termination::ReachedParam, |f| f.termination);
    let termination_lower = backward.as_ref().map_or(Termination::ReachedParam, |f| f.termination);

    let mut samples: Vec<(f64, PhaseState)> = Vec::new();
    if let Some(bw) = &backward {
        samples.push((bw.solution.t_end, PhaseState::from_flat(&bw.solution.y_end)));
        for st in bw.solution.steps.iter().rev() {
            if st.t0 > bw.solution.t_end {
                samples.push((st.t0, PhaseState::from_flat(st.y0())));
            }
        }
    } else {
        samples.push((0.0, s.clone()));
    }
    if let Some(fw) = &forward {
        for st in &fw.solution.steps {
            if st.t0 > 0.0 && st.t0 < fw.solution.t_end {
                samples.push((st.t0, PhaseState::from_flat(st.y0())));
            }
        }
        if backward.is_some() {
            samples.push((0.0, s.clone()));
        }
        samples.push((fw.solution.t_end, PhaseState::from_flat(&fw.solution.y_end)));
    } else if backward.is_some() {
        samples.push((0.0, s.clone()));
    }
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    samples.dedup_by(|x, y| x.0 <= y.0);
    let interval = (reached_lo.max(a.min(reached_hi)), reached_hi.min(b.max(reached_lo)));
    samples.retain(|(t, _)| *t >= interval.0 && *t <= interval.1);

    Ok(GeodesicSegment {
        initial: s.clone(),
        interval,
        samples,
        termination,
        termination_lower,
        requested: (a, b),
        forward,
        backward,
    })
}

/// `Exp(v) = (π(v), π(Φ(1, v)))`.
pub fn exp_map<M: Metric + ?Sized>(metric: &M, v: &TangentVector, params: &FlowParams) -> Result<(ChartPoint, ChartPoint)> {
    let s = legendre(metric, v)?;
    if v.vector.iter().all(|c| *c == 0.0) {
        return Ok((v.base.clone(), v.base.clone()));
    }
    let end = flow(metric, &s, 1.0, params)?;
    Ok((v.base.clone(), end.base))
}

/// Hamiltonian vector field of `E_g = g^ij α_i α_j` as a `(δx, δα)` vector.
pub fn hamiltonian_field<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Vector {
    let n = metric.dim();
    let x = &s.base.coords;
    let v = metric.inverse(x) * &s.covector;
    let dg = metric.derivatives(x);
    let mut out = Vector::zeros(2 * n);
    for i in 0..n {
        out[i] = 2.0 * v[i];
        out[n + i] = v.dot(&(&dg[i] * &v));
    }
    out
}

/// `dE_g` as a row vector on `(δx, δα)`.
pub fn energy_differential<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Vector {
    let n = metric.dim();
    let x = &s.base.coords;
    let v = metric.inverse(x) * &s.covector;
    let dg = metric.derivatives(x);
    let mut out = Vector::zeros(2 * n);
    for i in 0..n {
        out[i] = -v.dot(&(&dg[i] * &v));
        out[n + i] = 2.0 * v[i];
    }
    out
}

/// `dθ(U, W) = U_α · W_x − U_x · W_α` for `θ = α_i dx^i`.
pub fn symplectic_form(u: &Vector, w: &Vector) -> f64 {
    let n = u.len() / 2;
    let mut s = 0.0;
    for i in 0..n {
        s += u[n + i] * w[i] - u[i] * w[n + i];
    }
    s
}

/// Pfaffian of a real skew-symmetric matrix by pivoted `LTLᵀ` elimination.
pub fn pfaffian(a: &Matrix) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n % 2 == 1 {
        return 0.0;
    }
    let mut a = a.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        for j in k + 1..n {
            if a[(j, k)].abs() > a[(kp, k)].abs() {
                kp = j;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        if a[(k + 1, k)] == 0.0 {
            return 0.0;
        }
        pf *= a[(k, k + 1)];
        if k + 2 < n {
            let piv = a[(k, k + 1)];
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|j| a[(j, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactResiduals {
    /// `θ(X_g)`.
    pub theta_hamiltonian: f64,
    /// `θ(ξ)`.
    pub theta_euler: f64,
    /// `(dθ)ⁿ(W, X_g, ξ, V_1, …, V_{2n−3})` on a unit-normalized basis.
    pub nu: f64,
    /// `|dθ(W, X_g)|`; on the null cone `|ν| = n! · transverse · |restricted_pfaffian|`.
    pub transverse: f64,
    /// Pfaffian of `dθ` restricted to `span{ξ, V_i}`.
    pub restricted_pfaffian: f64,
    pub attempts: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Pointwise contact identities at a covector `s`.
///
/// The `V_i` complete `{X_g, ξ}` to a basis of `ker dE_g`; `W` is the
/// `dθ`-dual direction transverse to the cone.  Seeds come from a fixed RNG
/// stream, so the result is a pure function of `s`.
pub fn contact_residuals<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Result<ContactResiduals> {
    energy(metric, s)?;
    let n = metric.dim();
    let xg = hamiltonian_field(metric, s);
    let mut xi = Vector::zeros(2 * n);
    xi.rows_mut(n, n).copy_from(&s.covector);
    let theta = |w: &Vector| s.covector.dot(&w.rows(0, n));
    let theta_hamiltonian = theta(&xg);
    let theta_euler = theta(&xi);

    let de = energy_differential(metric, s);
    let de_n = de.norm();
    let xg_norm = xg.norm();
    let xi_norm = xi.norm();
    if xg_norm == 0.0 || xi_norm == 0.0 || de_n == 0.0 {
        return Err(GeoError::NumericalDegeneracy("zero covector".into()));
    }
    let x_hat = &xg / xg_norm;
    let xi_hat = &xi / xi_norm;

    const ATTEMPTS: usize = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e75_6c6c);
    for attempt in 1..=ATTEMPTS {
        // On the null cone the V_i span ker dE together with X̂ and ξ̂.
        let tangent_to_level = de.dot(&xi_hat).abs() <= 1e-8 * de_n;
        let mut ortho: Vec<Vector> = if tangent_to_level { vec![&de / de_n] } else { Vec::new() };
        let push = |v: Vector, ortho: &mut Vec<Vector>| -> Option<Vector> {
            let mut w = v;
            for _ in 0..2 {
                for o in ortho.iter() {
                    let c = o.dot(&w);
                    w -= o * c;
                }
            }
            let nw = w.norm();
            if nw < 1e-6 {
                return None;
            }
            let w = w / nw;
            ortho.push(w.clone());
            Some(w)
        };
        let Some(xh) = push(x_hat.clone(), &mut ortho) else {
            return Err(GeoError::NumericalDegeneracy("X_g not tangent to the energy level".into()));
        };
        let Some(xih) = push(xi_hat.clone(), &mut ortho) else {
            return Err(GeoError::NumericalDegeneracy("X_g and ξ are parallel".into()));
        };
        let mut vs = Vec::with_capacity(2 * n - 3);
        let mut failed = false;
        for _ in 0..(2 * n - 3) {
            let seed = Vector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0));
            match push(seed, &mut ortho) {
                Some(v) => vs.push(v),
                None => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            continue;
        }
        let w = if tangent_to_level {
            // W: dθ-orthogonal to ξ and every V_i, Euclidean-orthogonal to X̂.
            let om_row = |u: &Vector| {
                Vector::from_fn(2 * n, |j, _| {
                    let mut ej = Vector::zeros(2 * n);
                    ej[j] = 1.0;
                    symplectic_form(&ej, u)
                })
            };
            let mut rows: Vec<Vector> = vec![om_row(&xih)];
            rows.extend(vs.iter().map(om_row));
            rows.push(xh.clone());
            let a = Matrix::from_fn(rows.len(), 2 * n, |i, j| rows[i][j]);
            let eig = SymmetricEigen::new(a.transpose() * &a);
            let (imin, lmin) =
                eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |b, (i, l)| if *l < b.1 { (i, *l) } else { b });
            if lmin > 1e-10 * eig.eigenvalues.amax().max(1.0) {
                continue;
            }
            let w = eig.eigenvectors.column(imin).into_owned();
            &w / w.norm()
        } else {
            let seed = Vector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0));
            match push(seed, &mut ortho) {
                Some(w) => w,
                None => continue,
            }
        };

        let mut basis = vec![w.clone(), xh.clone(), xih.clone()];
        basis.extend(vs.iter().cloned());
        let m = basis.len();
        let omega = Matrix::from_fn(m, m, |i, j| symplectic_form(&basis[i], &basis[j]));
        let pf = pfaffian(&omega);
        let transverse = symplectic_form(&w, &xh).abs();
        let rest = omega.view((2, 2), (m - 2, m - 2)).into_owned();
        let restricted = pfaffian(&rest);
        let nu = factorial(n) * pf;
        if nu.abs() < 1e-9 {
            continue;
        }
        return Ok(ContactResiduals {
            theta_hamiltonian,
            theta_euler,
            nu,
            transverse,
            restricted_pfaffian: restricted,
            attempts: attempt,
        });
    }
    Err(GeoError::NumericalDegeneracy(format!("basis completion degenerate after {ATTEMPTS} attempts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{future_null_covector, Exclusion};
    use crate::metrics::{Minkowski, SphereProduct};

    fn null_diag() -> PhaseState {
        PhaseState::new(vec![0.0, 0.0], vec![1.0, -1.0])
    }

    #[test]
    fn minkowski_unit_flow() {
        let m = Minkowski::new(2);
        let out = flow(&m, &null_diag(), 1.0, &FlowParams::default()).unwrap();
        assert!((out.base.coords[0] - 1.0).abs() < 1e-12);
        assert!((out.base.coords[1] - 1.0).abs() < 1e-12);
        assert_eq!(out.covector, null_diag().covector);
    }

    #[test]
    fn zero_parameter_is_identity() {
        let m = SphereProduct::new();
        let s = PhaseState::new(vec![0.0, 1.0, 0.5], vec![-1.0, 0.3, 0.2]);
        assert_eq!(flow(&m, &s, 0.0, &FlowParams::default()).unwrap(), s);
    }

    #[test]
    fn trace_misses_and_hits_deleted_origin() {
        let m = Minkowski::minus_origin(1e-8);
        let p = FlowParams::default();
        let miss = PhaseState::new(vec![0.0, 0.1], vec![1.0, -1.0]);
        let seg = trace(&m, &miss, (-2.0, 2.0), &p).unwrap();
        assert_eq!(seg.termination, Termination::ReachedParam);
        assert_eq!(seg.termination_lower, Termination::ReachedParam);
        assert_eq!(seg.exclusion_hits(), 0);

        let hit = PhaseState::new(vec![-1.0, -1.0], vec![1.0, -1.0]);
        let seg = trace(&m, &hit, (0.0, 3.0), &p).unwrap();
        assert_eq!(seg.termination, Termination::HitExclusion);
        assert!((seg.interval.1 - 1.0).abs() < 1e-7);
        let err = flow(&m, &hit, 2.0, &p).unwrap_err();
        assert!(matches!(err, GeoError::Truncated { reason: Termination::HitExclusion, .. }));
    }

    #[test]
    fn trace_samples_increase() {
        let m = Minkowski::new(3);
        let s = PhaseState::new(vec![0.0, 0.0, 0.0], vec![0.6, 0.8, -1.0]);
        let seg = trace(&m, &s, (-3.0, 4.0), &FlowParams { max_step: 0.3, ..Default::default() }).unwrap();
        assert!(seg.samples.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(seg.interval, (-3.0, 4.0));
        let b = seg.base_at(-2.5);
        assert!((b[0] + 1.5).abs() < 1e-12 && (b[2] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn sphere_equator_closes_after_two_pi() {
        let m = SphereProduct::new();
        let s = future_null_covector(
            &m,
            &Vector::from_vec(vec![0.0, std::f64::consts::FRAC_PI_2, 0.0]),
            &Vector::from_vec(vec![0.0, 0.0, 1.0]),
        )
        .unwrap();
        let out = flow(&m, &s, 2.0 * std::f64::consts::PI, &FlowParams::default()).unwrap();
        assert!((out.base.coords[2] - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!((out.base.coords[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn exp_map_flat_and_zero() {
        let m = Minkowski::new(2);
        let p = FlowParams::default();
        let (a, b) = exp_map(&m, &TangentVector::new(vec![0.0, 0.0], vec![1.0, 1.0]), &p).unwrap();
        assert_eq!(a.coords.as_slice(), &[0.0, 0.0]);
        assert!((b.coords[0] - 1.0).abs() < 1e-12 && (b.coords[1] - 1.0).abs() < 1e-12);
        let (a, b) = exp_map(&m, &TangentVector::new(vec![0.2, 0.3], vec![0.0, 0.0]), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pfaffian_matches_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2usize, 4, 6] {
            let r = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let a = &r - r.transpose();
            let pf = pfaffian(&a);
            assert!((pf * pf - a.determinant()).abs() < 1e-10 * (1.0 + a.determinant().abs()));
        }
        let two = Matrix::from_row_slice(2, 2, &[0.0, 2.5, -2.5, 0.0]);
        assert_eq!(pfaffian(&two), 2.5);
    }

    #[test]
    fn contact_identities_minkowski() {
        let m = Minkowski::new(3);
        let s = PhaseState::new(vec![0.1, 0.2, 0.3], vec![0.6, 0.8, -1.0]);
        let r = contact_residuals(&m, &s).unwrap();
        assert!(r.theta_hamiltonian.abs() < 1e-10);
        assert_eq!(r.theta_euler, 0.0);
        assert!(r.nu.abs() > 1e-6);
        let pf_from_factors = r.transverse * r.restricted_pfaffian.abs() * 6.0;
        assert!((pf_from_factors - r.nu.abs()).abs() < 1e-9);
    }

    #[test]
    fn contact_timelike_value() {
        let m = Minkowski::new(2);
        let s = PhaseState::new(vec![0.0, 0.0], vec![0.0, -1.0]);
        let r = contact_residuals(&m, &s).unwrap();
        assert!((r.theta_hamiltonian + 2.0).abs() < 1e-12);
    }

    #[test]
    fn exclusion_resolved_by_ball() {
        let m = Minkowski::new(2).with_exclusion(Exclusion::point(vec![0.5, 0.5], 0.1));
        let s = PhaseState::new(vec![0.0, 0.0], vec![1.0, -1.0]);
        let seg = trace(&m, &s, (0.0, 2.0), &FlowParams::default()).unwrap();
        assert_eq!(seg.termination, Termination::HitExclusion);
        let b = seg.base_at(seg.interval.1);
        assert!(((b[0] - 0.5).hypot(b[1] - 0.5) - 0.1).abs() < 1e-9);
    }
}
