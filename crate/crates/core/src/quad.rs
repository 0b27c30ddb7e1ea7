//! Adaptive Gauss–Kronrod (7/15) quadrature for small vector-valued integrands.

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for k in 0..N {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = hl * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..N {
            kron[k] += WGK[j] * (f1[k] + f2[k]);
        }
        if j % 2 == 1 {
            for k in 0..N {
                gauss[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
    }
    let mut err: f64 = 0.0;
    for k in 0..N {
        kron[k] *= hl;
        gauss[k] *= hl;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    (kron, err)
}

struct Piece<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]` by globally adaptive bisection until the
/// estimated error is below `max(abs_tol, rel_tol * |I|)` in every component.
pub fn integrate<const N: usize, F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult<N>
where
    F: FnMut(f64) -> [f64; N],
{
    if a == b {
        return QuadResult { value: [0.0; N], error: 0.0, evaluations: 0 };
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&mut f, a, b);
    let mut total = v;
    let mut err = e;
    heap.push(Piece { lo: a, hi: b, value: v, error: e });
    let mut evaluations = 15;
    const MAX_INTERVALS: usize = 2000;
    loop {
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= abs_tol.max(rel_tol * scale) || heap.len() >= MAX_INTERVALS {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo.min(worst.hi) || mid >= worst.lo.max(worst.hi) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.hi);
        evaluations += 30;
        for k in 0..N {
            total[k] += v1[k] + v2[k] - worst.value[k];
        }
        err += e1 + e2 - worst.error;
        heap.push(Piece { lo: worst.lo, hi: mid, value: v1, error: e1 });
        heap.push(Piece { lo: mid, hi: worst.hi, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running totals.
    let mut value = [0.0; N];
    let mut error = 0.0;
    for p in heap.iter() {
        for k in 0..N {
            value[k] += p.value[k];
        }
        error += p.error;
    }
    QuadResult { value, error, evaluations }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let r = integrate::<1, _>(|x| [f(x)], a, b, abs_tol, rel_tol);
    (r.value[0], r.error)
}

/// Integrates over `[a, b]` with the substitutions `x = a + u²` on the first
/// half and `x = b − u²` on the second, which removes inverse square-root
/// singularities at either endpoint.
pub fn integrate_endpoint_singular<const N: usize, F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult<N>
where
    F: FnMut(f64) -> [f64; N],
{
    if a == b {
        return QuadResult { value: [0.0; N], error: 0.0, evaluations: 0 };
    }
    let sign = if b > a { 1.0 } else { -1.0 };
    let (lo, hi) = if b > a { (a, b) } else { (b, a) };
    let mid = 0.5 * (lo + hi);
    let ulen = (mid - lo).sqrt();
    let left = integrate::<N, _>(
        |u| {
            let v = f(lo + u * u);
            let mut out = [0.0; N];
            for k in 0..N {
                out[k] = 2.0 * u * v[k];
            }
            out
        },
        0.0,
        ulen,
        0.5 * abs_tol,
        rel_tol,
    );
    let ulen2 = (hi - mid).sqrt();
    let right = integrate::<N, _>(
        |u| {
            let v = f(hi - u * u);
            let mut out = [0.0; N];
            for k in 0..N {
                out[k] = 2.0 * u * v[k];
            }
            out
        },
        0.0,
        ulen2,
        0.5 * abs_tol,
        rel_tol,
    );
    let mut value = [0.0; N];
    for k in 0..N {
        value[k] = sign * (left.value[k] + right.value[k]);
    }
    QuadResult { value, error: left.error + right.error, evaluations: left.evaluations + right.evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate_scalar(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 1/sqrt(x(1-x)) dx = π
        let r = integrate_endpoint_singular::<1, _>(|x| [1.0 / (x * (1.0 - x)).sqrt()], 0.0, 1.0, 1e-13, 1e-13);
        assert!((r.value[0] - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_change_sign() {
        let (a, _) = integrate_scalar(|x| x.exp(), 0.0, 1.0, 1e-14, 1e-14);
        let r = integrate_endpoint_singular::<1, _>(|x| [x.exp()], 1.0, 0.0, 1e-14, 1e-14);
        assert!((a + r.value[0]).abs() < 1e-13);
    }
}
