//! Jacobi classes along a null geodesic: a parallel screen for `γ⊥/span(γ̇)`,
//! the quotient curvature endomorphism, conjugate points and the index form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::geometry::{christoffel, energy, riemann, riemann_fd, Metric, PhaseState, Vector};
use crate::ode::{Control, Dopri5, Solution};

/// Definiteness margin for index matrices.
pub const EPS_DEF: f64 = 1e-7;
/// Smallest singular value below which a tangential zero is reported.
pub const SIGMA_MARGINAL: f64 = 1e-9;

const FRAME_RTOL: f64 = 1e-12;
const FRAME_ATOL: f64 = 1e-14;

/// Parallel-transported screen `E_1 … E_{n−2}` along a null geodesic, with
/// the transported auxiliary null field `N` (`g(N, γ̇) = −1`).
pub struct QuotientFrame<'m, M: Metric + ?Sized> {
    metric: &'m M,
    /// Parameters `a, b` of the segment.
    pub interval: (f64, f64),
    /// Uniform node grid on `[a, b]`.
    pub nodes: Vec<f64>,
    /// Relative step for finite-difference curvature.
    pub fd_step: f64,
    solution: Solution,
    n: usize,
}

/// Geodesic state, velocity and screen at one parameter.
#[derive(Clone, Debug)]
pub struct FrameSample {
    pub state: PhaseState,
    pub velocity: Vector,
    pub screen: Vec<Vector>,
    pub null_partner: Vector,
}

#[derive(Clone, Debug)]
pub struct FrameOptions {
    pub elements: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub fd_step: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { elements: 200, rtol: FRAME_RTOL, atol: FRAME_ATOL, max_step: 0.02, fd_step: 2e-5 }
    }
}

fn transport_rhs<M: Metric + ?Sized>(metric: &M, n: usize, y: &[f64], out: &mut [f64]) {
    let x = Vector::from_column_slice(&y[..n]);
    let alpha = Vector::from_column_slice(&y[n..2 * n]);
    let v = metric.inverse(&x) * alpha;
    let dg = metric.derivatives(&x);
    for i in 0..n {
        out[i] = v[i];
        out[n + i] = 0.5 * v.dot(&(&dg[i] * &v));
    }
    let gamma = christoffel(metric, &x);
    let fields = (y.len() - 2 * n) / n;
    for f in 0..fields {
        let off = 2 * n + f * n;
        let e = Vector::from_column_slice(&y[off..off + n]);
        for k in 0..n {
            out[off + k] = -v.dot(&(&gamma[k] * &e));
        }
    }
}

/// Screen at the start: `N = e/λ − u/(2λ²)` from the unit future timelike
/// `e`, then an orthonormal basis of `{u, N}^⊥` from the coordinate axes.
fn initial_screen<M: Metric + ?Sized>(metric: &M, s: &PhaseState) -> Result<(Vector, Vec<Vector>)> {
    let x = &s.base.coords;
    let n = metric.dim();
    let g = metric.components(x);
    let u = metric.inverse(x) * &s.covector;
    let t = metric.time_orientation(x).ok_or_else(|| GeoError::Frame("metric has no time orientation".into()))?;
    let tt = t.dot(&(&g * &t));
    if !(tt < 0.0) {
        return Err(GeoError::Frame("time orientation is not timelike".into()));
    }
    let e = &t / (-tt).sqrt();
    let lambda = -u.dot(&(&g * &e));
    if !(lambda > 0.0) {
        return Err(GeoError::Frame("geodesic is not future-pointing".into()));
    }
    let nvec = &e / lambda - &u / (2.0 * lambda * lambda);
    let ip = |a: &Vector, b: &Vector| a.dot(&(&g * b));
    let mut screen: Vec<Vector> = Vec::new();
    let mut candidates: Vec<Vector> = (0..n)
        .map(|i| {
            let w = Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
            &w + &u * ip(&w, &nvec) + &nvec * ip(&w, &u)
        })
        .collect();
    while screen.len() < n - 2 {
        // Largest remaining component after removing the current screen.
        let residual: Vec<Vector> =
            candidates.iter().map(|w| screen.iter().fold(w.clone(), |acc, e| &acc - e * ip(&acc, e))).collect();
        let (best, norm2) =
            residual
                .iter()
                .enumerate()
                .map(|(i, r)| (i, ip(r, r)))
                .fold((0, f64::NEG_INFINITY), |m, c| if c.1 > m.1 { c } else { m });
        if !(norm2 > 1e-12) {
            return Err(GeoError::Frame("screen construction degenerated".into()));
        }
        screen.push(&residual[best] / norm2.sqrt());
        candidates.remove(best);
    }
    Ok((nvec, screen))
}

impl<'m, M: Metric + ?Sized> QuotientFrame<'m, M> {
    /// Transports the screen along the geodesic of `s`, where `s` is the
    /// state at parameter `a`.
    pub fn build(metric: &'m M, s: &PhaseState, interval: (f64, f64), opts: &FrameOptions) -> Result<Self> {
        let (a, b) = interval;
        if !(b > a) || opts.elements == 0 {
            return Err(GeoError::DegenerateInput(format!("frame interval [{a}, {b}]")));
        }
        let n = metric.dim();
        metric.domain().check(&s.base.coords)?;
        let scale = s.covector.norm();
        let e = energy(metric, s)?;
        if e.abs() > 1e-8 * scale * scale {
            return Err(GeoError::NotNull { energy: e });
        }
        let (nvec, screen) = initial_screen(metric, s)?;
        let mut y0 = s.to_flat();
        for e in screen.iter().chain(std::iter::once(&nvec)) {
            y0.extend(e.iter());
        }
        let domain = metric.domain();
        let mut left = None;
        let solution = Dopri5::new(opts.rtol, opts.atol, opts.max_step).solve(
            |_, y, out| transport_rhs(metric, n, y, out),
            a,
            &y0,
            b,
            |step, end| {
                let x = Vector::from_column_slice(&end[..n]);
                if !domain.contains(&x) {
                    left = Some(step.t0);
                    return Control::Stop { t: step.t0 };
                }
                Control::Continue
            },
        )?;
        if let Some(t) = left {
            return Err(GeoError::Domain { point: solution.eval(t)[..n].to_vec() });
        }
        let k = opts.elements;
        let nodes = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
        Ok(Self { metric, interval, nodes, fd_step: opts.fd_step, solution, n })
    }

    pub fn metric(&self) -> &M {
        self.metric
    }

    /// Fiber dimension `n − 2`.
    pub fn fiber_dim(&self) -> usize {
        self.n - 2
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let (a, b) = self.interval;
        if t >= a - 1e-12 && t <= b + 1e-12 {
            Ok(())
        } else {
            Err(GeoError::DegenerateInput(format!("parameter {t} outside [{a}, {b}]")))
        }
    }

    pub fn sample(&self, t: f64) -> FrameSample {
        let n = self.n;
        let y = self.solution.eval(t);
        let state = PhaseState::from_flat(&y[..2 * n]);
        let velocity = self.metric.inverse(&state.base.coords) * &state.covector;
        let screen = (0..n - 2).map(|i| Vector::from_column_slice(&y[2 * n + i * n..2 * n + (i + 1) * n])).collect();
        let off = 2 * n + (n - 2) * n;
        let null_partner = Vector::from_column_slice(&y[off..off + n]);
        FrameSample { state, velocity, screen, null_partner }
    }

    /// Largest `|g(E_i, γ̇)|` at `t`.
    pub fn orthogonality_defect(&self, t: f64) -> f64 {
        let s = self.sample(t);
        let g = self.metric.components(&s.state.base.coords);
        s.screen.iter().map(|e| e.dot(&(&g * &s.velocity)).abs()).fold(0.0, f64::max)
    }

    /// Gram matrix of the screen under `g` at `t`.
    pub fn gram(&self, t: f64) -> DMatrix<f64> {
        let s = self.sample(t);
        let g = self.metric.components(&s.state.base.coords);
        let k = s.screen.len();
        DMatrix::from_fn(k, k, |i, j| s.screen[i].dot(&(&g * &s.screen[j])))
    }

    /// `K_ij = g(R(E_j, γ̇)γ̇, E_i)` at `t`.
    pub fn curvature_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        self.curvature_matrix_with_step(t, self.fd_step)
    }

    pub fn curvature_matrix_with_step(&self, t: f64, fd_step: f64) -> Result<DMatrix<f64>> {
        self.check_t(t)?;
        let s = self.sample(t);
        let x = &s.state.base.coords;
        self.metric.domain().check(x)?;
        let r = match self.metric.riemann_override(x) {
            Some(r) => r,
            None if fd_step == self.fd_step => riemann(self.metric, x),
            None => riemann_fd(self.metric, x, fd_step),
        };
        let g = self.metric.components(x);
        let k = s.screen.len();
        let images: Vec<Vector> = s.screen.iter().map(|e| r.jacobi_operator(&s.velocity, e)).collect();
        Ok(DMatrix::from_fn(k, k, |i, j| s.screen[i].dot(&(&g * &images[j]))))
    }
}

/// Components of `R̄(V, γ̇)γ̇` in the screen at `t`.
pub fn curvature_action<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>, t: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != frame.fiber_dim() {
        return Err(GeoError::Shape(format!("fiber vector of length {}, expected {}", v.len(), frame.fiber_dim())));
    }
    Ok(frame.curvature_matrix(t)? * v)
}

/// Screen components of a section at the frame nodes; linear in between.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientSection {
    pub nodes: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
}

impl QuotientSection {
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(nodes: &[f64], f: F) -> Self {
        Self { nodes: nodes.to_vec(), coefficients: nodes.iter().map(|t| f(*t)).collect() }
    }

    pub fn zero(nodes: &[f64], k: usize) -> Self {
        Self::from_fn(nodes, |_| vec![0.0; k])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            coefficients: self.coefficients.iter().map(|v| v.iter().map(|x| c * x).collect()).collect(),
        }
    }
}

fn linear_rhs(k: usize, kmat: &DMatrix<f64>, y: &[f64], out: &mut [f64], cols: usize) {
    // y = [V (k×cols), V' (k×cols)], column-major.
    let kc = k * cols;
    out[..kc].copy_from_slice(&y[kc..2 * kc]);
    for c in 0..cols {
        for i in 0..k {
            let mut s = 0.0;
            for j in 0..k {
                s += kmat[(i, j)] * y[c * k + j];
            }
            out[kc + c * k + i] = -s;
        }
    }
}

fn solve_linear<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>, y0: Vec<f64>, cols: usize) -> Result<Solution> {
    let k = frame.fiber_dim();
    let (a, b) = frame.interval;
    let mut failure = None;
    let sol = Dopri5::new(1e-12, 1e-14, 0.02).solve(
        |t, y, out| match frame.curvature_matrix(t.clamp(a, b)) {
            Ok(km) => linear_rhs(k, &km, y, out, cols),
            Err(e) => {
                failure.get_or_insert(e);
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        },
        a,
        &y0,
        b,
        |_, _| Control::Continue,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(sol),
    }
}

/// Jacobi solution with `V(a) = v0`, `V'(a) = v0_prime`, sampled at the frame nodes.
pub fn jacobi_solve<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>, v0: &[f64], v0_prime: &[f64]) -> Result<QuotientSection> {
    let k = frame.fiber_dim();
    if v0.len() != k || v0_prime.len() != k {
        return Err(GeoError::Shape(format!("initial data must have length {k}")));
    }
    let y0: Vec<f64> = v0.iter().chain(v0_prime).copied().collect();
    let sol = solve_linear(frame, y0, 1)?;
    Ok(QuotientSection::from_fn(&frame.nodes, |t| sol.eval(t)[..k].to_vec()))
}

/// Fundamental `2k × 2k` matrix of `(V, V')` at `t` from the identity at `a`.
pub fn fundamental_matrix<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>, t: f64) -> Result<DMatrix<f64>> {
    let k = frame.fiber_dim();
    let cols = 2 * k;
    // Column c holds data for (V, V') with initial value e_c in R^{2k};
    // store V block then V' block per column.
    let mut v = vec![0.0; k * cols];
    let mut vp = vec![0.0; k * cols];
    for c in 0..cols {
        if c < k {
            v[c * k + c] = 1.0;
        } else {
            vp[c * k + (c - k)] = 1.0;
        }
    }
    let y0: Vec<f64> = v.into_iter().chain(vp).collect();
    let sol = solve_linear(frame, y0, cols)?;
    let y = sol.eval(t);
    let kc = k * cols;
    Ok(DMatrix::from_fn(cols, cols, |r, c| if r < k { y[c * k + r] } else { y[kc + c * k + (r - k)] }))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConjugateSearch {
    /// Parameters where `det M` changes sign.
    pub points: Vec<f64>,
    /// Near-zeros of `σ_min(M)` without a sign change.
    pub marginal: Vec<f64>,
}

impl ConjugateSearch {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.marginal.is_empty()
    }
}

/// Zeros of `det M` on `(a, b]` where `M'' + K M = 0`, `M(a) = 0`, `M'(a) = I`.
pub fn conjugate_points<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>) -> Result<ConjugateSearch> {
    let k = frame.fiber_dim();
    if k == 0 {
        return Ok(ConjugateSearch::default());
    }
    let mut vp = vec![0.0; k * k];
    for c in 0..k {
        vp[c * k + c] = 1.0;
    }
    let y0: Vec<f64> = vec![0.0; k * k].into_iter().chain(vp).collect();
    let sol = solve_linear(frame, y0, k)?;
    let (a, b) = frame.interval;
    let mat = |t: f64| DMatrix::from_column_slice(k, k, &sol.eval(t)[..k * k]);
    // det M ~ (t − a)^k near a, so scale it out to keep the sign test clean.
    let det = |t: f64| mat(t).determinant() / (t - a).powi(k as i32);
    let sigma = |t: f64| mat(t).singular_values().min() / (t - a);

    let samples = 4 * (frame.nodes.len() - 1).max(64);
    let ts: Vec<f64> = (1..=samples).map(|i| a + (b - a) * i as f64 / samples as f64).collect();
    let ds: Vec<f64> = ts.iter().map(|t| det(*t)).collect();
    if ds.iter().all(|d| *d == 0.0) {
        return Err(GeoError::Frame("det M vanishes identically".into()));
    }
    let mut out = ConjugateSearch::default();
    for i in 0..ts.len() {
        if ds[i] == 0.0 {
            out.points.push(ts[i]);
            continue;
        }
        if i > 0 && ds[i - 1] != 0.0 && ds[i - 1].signum() != ds[i].signum() {
            let (mut lo, mut hi) = (ts[i - 1], ts[i]);
            let slo = ds[i - 1].signum();
            while hi - lo > 1e-10 {
                let m = 0.5 * (lo + hi);
                if det(m).signum() == slo {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            out.points.push(0.5 * (lo + hi));
        }
    }
    let ss: Vec<f64> = ts.iter().map(|t| sigma(*t)).collect();
    for i in 1..ts.len().saturating_sub(1) {
        if ss[i] <= ss[i - 1] && ss[i] <= ss[i + 1] && ss[i] < 1e-3 {
            let (t, v) = crate::flow::golden_min(sigma, ts[i - 1], ts[i + 1], 1e-12);
            let near_sign_change = out.points.iter().any(|p| (p - t).abs() < 2.0 * (b - a) / samples as f64);
            if v < SIGMA_MARGINAL && !near_sign_change {
                out.marginal.push(t);
            }
        }
    }
    // The final sample may sit exactly on a zero.
    if ss[ts.len() - 1] < SIGMA_MARGINAL && out.points.iter().all(|p| (p - b).abs() > 1e-8) {
        out.points.push(b);
    }
    Ok(out)
}

const GAUSS3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// `Ī(V, W) = −∫ [ḡ(V′, W′) − ḡ(R̄(V, γ̇)γ̇, W)] dt` for piecewise-linear sections.
pub fn index_form<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>, v: &QuotientSection, w: &QuotientSection) -> Result<f64> {
    let k = frame.fiber_dim();
    if v.nodes != w.nodes || v.coefficients.len() != v.nodes.len() || w.coefficients.len() != w.nodes.len() {
        return Err(GeoError::Shape("sections live on different grids".into()));
    }
    if v.coefficients.iter().chain(&w.coefficients).any(|c| c.len() != k) {
        return Err(GeoError::Shape(format!("section coefficients must have length {k}")));
    }
    let mut total = 0.0;
    for e in 0..v.nodes.len().saturating_sub(1) {
        let (t0, t1) = (v.nodes[e], v.nodes[e + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            return Err(GeoError::Shape("section nodes must increase".into()));
        }
        let (v0, v1) = (DVector::from_column_slice(&v.coefficients[e]), DVector::from_column_slice(&v.coefficients[e + 1]));
        let (w0, w1) = (DVector::from_column_slice(&w.coefficients[e]), DVector::from_column_slice(&w.coefficients[e + 1]));
        let dv = (&v1 - &v0) / h;
        let dw = (&w1 - &w0) / h;
        let mut part = h * dv.dot(&dw);
        if k > 0 {
            for (xi, wt) in GAUSS3 {
                let s = 0.5 * (1.0 + xi);
                let t = t0 + s * h;
                let vv = &v0 * (1.0 - s) + &v1 * s;
                let ww = &w0 * (1.0 - s) + &w1 * s;
                let km = frame.curvature_matrix(t)?;
                // Symmetrized to keep Ī exactly symmetric in floating point.
                let kv = (&km + km.transpose()) * 0.5 * vv;
                part -= 0.5 * h * wt * kv.dot(&ww);
            }
        }
        total -= part;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    NegativeDefinite,
    Indefinite,
    Marginal,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexMatrix {
    pub basis_size: usize,
    pub fiber_dim: usize,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub verdict: Definiteness,
}

/// Gram matrix of `Ī` on `m` interior hat functions times the screen basis.
pub fn index_matrix<M: Metric + ?Sized>(frame: &QuotientFrame<'_, M>, m: usize) -> Result<IndexMatrix> {
    let k = frame.fiber_dim();
    if m == 0 {
        return Err(GeoError::DegenerateInput("index basis must be non-empty".into()));
    }
    let (a, b) = frame.interval;
    let h = (b - a) / (m + 1) as f64;
    let dim = m * k;
    let mut mat = DMatrix::zeros(dim, dim);
    // Element e spans [a + e h, a + (e+1) h]; hats i = 1..m peak at a + i h.
    for e in 0..=m {
        let t0 = a + e as f64 * h;
        let mut kq = Vec::with_capacity(3);
        for (xi, wt) in GAUSS3 {
            let s = 0.5 * (1.0 + xi);
            let km = frame.curvature_matrix(t0 + s * h)?;
            kq.push((s, wt, (&km + km.transpose()) * 0.5));
        }
        // Local hats: left = node e (value 1 − s), right = node e+1 (value s).
        let locals: Vec<(usize, f64)> =
            [(e, -1.0), (e + 1, 1.0)].into_iter().filter(|(node, _)| *node >= 1 && *node <= m).collect();
        for &(ni, si) in &locals {
            for &(nj, sj) in &locals {
                let stiff = h * (si / h) * (sj / h);
                for p in 0..k {
                    for q in 0..k {
                        let mut val = if p == q { -stiff } else { 0.0 };
                        for (s, wt, km) in &kq {
                            let phi = |sign: f64| if sign < 0.0 { 1.0 - s } else { *s };
                            val += 0.5 * h * wt * km[(p, q)] * phi(si) * phi(sj);
                        }
                        mat[((ni - 1) * k + p, (nj - 1) * k + q)] += val;
                    }
                }
            }
        }
    }
    let mat = (&mat + mat.transpose()) * 0.5;
    let eigenvalues: Vec<f64> = if dim == 0 {
        Vec::new()
    } else {
        let eig = SymmetricEigen::try_new(mat.clone(), 1e-15, 10_000)
            .ok_or_else(|| GeoError::Numeric("symmetric eigensolver did not converge".into()))?;
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    };
    let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let verdict = if dim == 0 || max < -EPS_DEF {
        Definiteness::NegativeDefinite
    } else if max > EPS_DEF {
        Definiteness::Indefinite
    } else {
        Definiteness::Marginal
    };
    Ok(IndexMatrix { basis_size: m, fiber_dim: k, matrix: mat, eigenvalues, verdict })
}

/// Frame over the geodesic of `s` with default options.
pub fn frame_along<'m, M: Metric + ?Sized>(metric: &'m M, s: &PhaseState, interval: (f64, f64)) -> Result<QuotientFrame<'m, M>> {
    QuotientFrame::build(metric, s, interval, &FrameOptions::default())
}
