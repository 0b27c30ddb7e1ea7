//! Flat and round builtin spacetimes.

use crate::geometry::{ChartDomain, Exclusion, Matrix, Metric, Riemann, Vector};

/// Flat metric `dx_1² + … + dx_{n−1}² − dx_n²`; the last coordinate is time.
#[derive(Clone, Debug)]
pub struct Minkowski {
    n: usize,
    name: String,
    domain: ChartDomain,
}

impl Minkowski {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "spacetime dimension must be at least 2");
        Self { n, name: format!("minkowski{n}"), domain: ChartDomain::unbounded(n) }
    }

    /// 2D Minkowski with the origin deleted (resolved as a ball of `radius`).
    pub fn minus_origin(radius: f64) -> Self {
        let mut m = Self::new(2).with_exclusion(Exclusion::point(vec![0.0, 0.0], radius));
        m.name = "minkowski2-minus-origin".into();
        m
    }

    /// `ℝ²/ℤ` with `(x, y) ~ (x + k, y)`, realized as `x ∈ [0, 1)` with wrap-around.
    pub fn cylinder() -> Self {
        let mut m = Self::new(2);
        m.domain = ChartDomain::boxed(vec![0.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]).with_period(0, 1.0);
        m.name = "cylinder-quotient".into();
        m
    }

    pub fn with_exclusion(mut self, e: Exclusion) -> Self {
        self.domain.exclusions.push(e);
        self
    }

    pub fn with_domain(mut self, domain: ChartDomain) -> Self {
        assert_eq!(domain.dim(), self.n);
        self.domain = domain;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl Metric for Minkowski {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn components(&self, _p: &Vector) -> Matrix {
        let mut g = Matrix::identity(self.n, self.n);
        g[(self.n - 1, self.n - 1)] = -1.0;
        g
    }

    fn inverse(&self, p: &Vector) -> Matrix {
        self.components(p)
    }

    fn derivatives(&self, _p: &Vector) -> Vec<Matrix> {
        vec![Matrix::zeros(self.n, self.n); self.n]
    }

    fn riemann_override(&self, _p: &Vector) -> Option<Riemann> {
        Some(Riemann::zeros(self.n))
    }

    fn time_orientation(&self, _p: &Vector) -> Option<Vector> {
        let mut t = Vector::zeros(self.n);
        t[self.n - 1] = 1.0;
        Some(t)
    }

    fn time_axis(&self) -> Option<usize> {
        Some(self.n - 1)
    }
}

/// `−dt² + dθ² + sin²θ dφ²` on `ℝ × S²`, coordinates `(t, θ, φ)`.
#[derive(Clone, Debug)]
pub struct SphereProduct {
    domain: ChartDomain,
    analytic_curvature: bool,
}

impl Default for SphereProduct {
    fn default() -> Self {
        Self::new()
    }
}

impl SphereProduct {
    pub const POLE_MARGIN: f64 = 1e-6;

    pub fn new() -> Self {
        let m = Self::POLE_MARGIN;
        let domain = ChartDomain::boxed(
            vec![f64::NEG_INFINITY, m, 0.0],
            vec![f64::INFINITY, std::f64::consts::PI - m, 2.0 * std::f64::consts::PI],
        )
        .with_period(2, 2.0 * std::f64::consts::PI);
        Self { domain, analytic_curvature: true }
    }

    /// Same metric, but the curvature tensor is obtained by finite differences.
    pub fn finite_difference_curvature(mut self) -> Self {
        self.analytic_curvature = false;
        self
    }
}

impl Metric for SphereProduct {
    fn name(&self) -> &str {
        "sphere-product"
    }

    fn dim(&self) -> usize {
        3
    }

    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn components(&self, p: &Vector) -> Matrix {
        let s = p[1].sin();
        Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0, s * s]))
    }

    fn inverse(&self, p: &Vector) -> Matrix {
        let s = p[1].sin();
        Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0, 1.0 / (s * s)]))
    }

    fn derivatives(&self, p: &Vector) -> Vec<Matrix> {
        let mut d = vec![Matrix::zeros(3, 3); 3];
        d[1][(2, 2)] = 2.0 * p[1].sin() * p[1].cos();
        d
    }

    fn riemann_override(&self, p: &Vector) -> Option<Riemann> {
        if !self.analytic_curvature {
            return None;
        }
        // Unit sphere: R^a_{bcd} = δ^a_c g_bd − δ^a_d g_bc on the (θ, φ) block.
        let g = self.components(p);
        let mut r = Riemann::zeros(3);
        for a in 1..3 {
            for b in 1..3 {
                for c in 1..3 {
                    for d in 1..3 {
                        let dac = if a == c { 1.0 } else { 0.0 };
                        let dad = if a == d { 1.0 } else { 0.0 };
                        let v = dac * g[(b, d)] - dad * g[(b, c)];
                        if v != 0.0 {
                            r.set(a, b, c, d, v);
                        }
                    }
                }
            }
        }
        Some(r)
    }

    fn time_orientation(&self, _p: &Vector) -> Option<Vector> {
        Some(Vector::from_vec(vec![1.0, 0.0, 0.0]))
    }

    fn time_axis(&self) -> Option<usize> {
        Some(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{christoffel, fd_metric_derivatives, riemann_fd, validate_lorentzian};

    #[test]
    fn sphere_analytic_matches_finite_differences() {
        let m = SphereProduct::new();
        let p = Vector::from_vec(vec![0.3, 1.1, 0.4]);
        let fd = fd_metric_derivatives(&m, &p);
        let an = m.derivatives(&p);
        for k in 0..3 {
            assert!((&fd[k] - &an[k]).amax() < 1e-9);
        }
        let r_an = m.riemann_override(&p).unwrap();
        let r_fd = riemann_fd(&m, &p, 1e-4);
        assert!(r_an.max_abs_diff(&r_fd) < 1e-6);
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let m = SphereProduct::new();
        let th: f64 = 0.7;
        let p = Vector::from_vec(vec![0.0, th, 0.0]);
        let g = christoffel(&m, &p);
        assert!((g[1][(2, 2)] + th.sin() * th.cos()).abs() < 1e-14);
        assert!((g[2][(1, 2)] - th.cos() / th.sin()).abs() < 1e-14);
    }

    #[test]
    fn builtins_are_lorentzian() {
        let p2 = Vector::from_vec(vec![0.2, -0.4]);
        validate_lorentzian(&Minkowski::new(2), &p2).unwrap();
        validate_lorentzian(&Minkowski::cylinder(), &Vector::from_vec(vec![0.2, 3.0])).unwrap();
        validate_lorentzian(&Minkowski::new(3), &Vector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        validate_lorentzian(&SphereProduct::new(), &Vector::from_vec(vec![0.0, 1.0, 1.0])).unwrap();
    }

    #[test]
    fn cylinder_wraps_x() {
        let m = Minkowski::cylinder();
        let p = Vector::from_vec(vec![1.75, 0.0]);
        assert!(m.domain().contains(&p));
        assert!((m.domain().wrap(&p)[0] - 0.75).abs() < 1e-15);
    }
}
