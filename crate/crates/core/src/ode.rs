//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The stepper works in either time direction; every accepted step is kept as
//! a [`DenseStep`] so callers can evaluate the solution anywhere inside it.

use crate::error::{GeoError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    /// Signed step length.
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn dim(&self) -> usize {
        self.rcont[0].len()
    }

    pub fn y0(&self) -> &[f64] {
        &self.rcont[0]
    }

    /// Value at the fraction `theta ∈ [0, 1]` of the step.
    pub fn eval_theta(&self, theta: f64, out: &mut [f64]) {
        let t1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + t1 * (r3[i] + theta * (r4[i] + t1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_theta(((t - self.t0) / self.h).clamp(0.0, 1.0), &mut out);
        out
    }

    pub fn end_value(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_theta(1.0, &mut out);
        out
    }
}

/// What the step monitor wants the integrator to do next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Control {
    Continue,
    /// Stop at parameter `t` inside the step just accepted.
    Stop {
        t: f64,
    },
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub t0: f64,
    pub steps: Vec<DenseStep>,
    pub t_end: f64,
    pub y_end: Vec<f64>,
    /// True when the monitor requested a stop before `t_end` was reached.
    pub stopped: bool,
}

impl Solution {
    fn locate(&self, t: f64) -> Option<&DenseStep> {
        if self.steps.is_empty() {
            return None;
        }
        let forward = self.steps[0].h > 0.0;
        let idx = self.steps.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        Some(&self.steps[idx.min(self.steps.len() - 1)])
    }

    /// Dense evaluation at `t`; clamps to the covered range.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self.locate(t) {
            None => self.y_end.clone(),
            Some(step) => step.eval(t),
        }
    }

    pub fn covers(&self, t: f64) -> bool {
        let (lo, hi) = if self.t_end >= self.t0 { (self.t0, self.t_end) } else { (self.t_end, self.t0) };
        t >= lo && t <= hi
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_step: f64::INFINITY, max_steps: 500_000 }
    }
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64, max_step: f64) -> Self {
        Self { rtol, atol, max_step, ..Self::default() }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end`.
    ///
    /// The monitor sees every accepted step and may overwrite the step's end
    /// state (used for projections) or request a stop inside the step.
    pub fn solve<F, M>(&self, mut f: F, t0: f64, y0: &[f64], t_end: f64, mut monitor: M) -> Result<Solution>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        M: FnMut(&DenseStep, &mut Vec<f64>) -> Control,
    {
        let n = y0.len();
        let span = t_end - t0;
        let mut sol = Solution { t0, steps: Vec::new(), t_end: t0, y_end: y0.to_vec(), stopped: false };
        if span == 0.0 {
            return Ok(sol);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        f(t, &y, &mut k1);

        let mut h = self.initial_step(&mut f, t, &y, &k1, dir, span.abs());
        let mut steps = 0usize;
        let mut last_rejected = false;

        loop {
            if steps >= self.max_steps {
                return Err(GeoError::Integrator(format!("step budget exhausted at t = {t} (span {t0} -> {t_end})")));
            }
            let remaining = t_end - t;
            let mut last = false;
            if (h.abs() * 1.0000001) >= remaining.abs() {
                h = remaining;
                last = true;
            }
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(GeoError::Integrator(format!("step size underflow at t = {t}")));
            }

            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ytmp, &mut k2);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ytmp, &mut k3);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ytmp, &mut k4);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ytmp, &mut k5);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &ytmp, &mut k6);
            for i in 0..n {
                ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, &ynew, &mut k7);
            steps += 1;

            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h *= 0.25;
                last_rejected = true;
                continue;
            }

            if err <= 1.0 {
                let r2: Vec<f64> = (0..n).map(|i| ynew[i] - y[i]).collect();
                let r3: Vec<f64> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
                let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
                let r5: Vec<f64> =
                    (0..n).map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])).collect();
                let step = DenseStep { t0: t, h, rcont: [y.clone(), r2, r3, r4, r5] };
                let mut end_state = ynew.clone();
                let control = monitor(&step, &mut end_state);
                sol.steps.push(step);
                match control {
                    Control::Stop { t: ts } => {
                        let step = sol.steps.last().expect("step just pushed");
                        sol.y_end = step.eval(ts);
                        sol.t_end = ts;
                        sol.stopped = true;
                        return Ok(sol);
                    }
                    Control::Continue => {}
                }
                let modified = end_state != ynew;
                t += h;
                y = end_state;
                if last {
                    t = t_end;
                    sol.t_end = t;
                    sol.y_end = y;
                    return Ok(sol);
                }
                if modified {
                    f(t, &y, &mut k1);
                } else {
                    std::mem::swap(&mut k1, &mut k7);
                }
                let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, 10.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                h *= fac;
                last_rejected = false;
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h *= fac;
                last_rejected = true;
            }
            if h.abs() > self.max_step {
                h = dir * self.max_step;
            }
        }
    }

    fn initial_step<F>(&self, f: &mut F, t: f64, y: &[f64], f0: &[f64], dir: f64, span: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let sc: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.max_step).min(span);
        let y1: Vec<f64> = (0..n).map(|i| y[i] + dir * h0 * f0[i]).collect();
        let mut f1 = vec![0.0; n];
        f(t + dir * h0, &y1, &mut f1);
        let d2 = ((0..n).map(|i| ((f1[i] - f0[i]) / sc[i]).powi(2)).sum::<f64>() / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        dir * (100.0 * h0).min(h1).min(self.max_step).min(span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let solver = Dopri5::new(1e-11, 1e-13, 0.5);
        let sol = solver
            .solve(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[0.0, 1.0],
                10.0,
                |_, _| Control::Continue,
            )
            .unwrap();
        assert!((sol.y_end[0] - 10f64.sin()).abs() < 1e-9);
        for k in 0..100 {
            let t = 0.1 * k as f64 + 0.037;
            let y = sol.eval(t);
            assert!((y[0] - t.sin()).abs() < 1e-8, "dense output at {t}");
        }
    }

    #[test]
    fn backward_integration() {
        let solver = Dopri5::new(1e-11, 1e-13, 0.5);
        let sol = solver.solve(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], -2.0, |_, _| Control::Continue).unwrap();
        assert!((sol.y_end[0] - (-2f64).exp()).abs() < 1e-10);
        assert!((sol.eval(-1.3)[0] - (-1.3f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn monitor_stop_inside_step() {
        let solver = Dopri5::new(1e-10, 1e-12, 0.25);
        let sol = solver
            .solve(
                |_, _, dy| dy[0] = 1.0,
                0.0,
                &[0.0],
                5.0,
                |step, _| {
                    if step.t1() > 1.0 {
                        Control::Stop { t: 1.0 }
                    } else {
                        Control::Continue
                    }
                },
            )
            .unwrap();
        assert!(sol.stopped);
        assert!((sol.y_end[0] - 1.0).abs() < 1e-12);
    }
}
