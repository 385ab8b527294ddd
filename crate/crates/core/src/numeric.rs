//! Scalar minimization, quadrature and grid helpers shared by the envelope
//! calculus and the tail transform.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)`. Infinite objective values are allowed; NaN is
/// treated as `+inf`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    let g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    let mut iter = 0;
    while (b - a).abs() > x_tol && iter < 200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = g(x2);
        }
        iter += 1;
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimizes `f` on `[lo, hi]`: a uniform scan of `scan_points` points
/// (endpoints included) locates the best cell, golden-section refines it.
pub fn scan_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, scan_points: usize) -> (f64, f64) {
    let n = scan_points.max(3);
    if hi <= lo {
        return (lo, f(lo));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_k = 0;
    let mut best_v = f64::INFINITY;
    for k in 0..n {
        let x = if k == n - 1 { hi } else { lo + step * k as f64 };
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    if !best_v.is_finite() {
        return (lo + step * best_k as f64, best_v);
    }
    let a = lo + step * best_k.saturating_sub(1) as f64;
    let b = (lo + step * (best_k + 1) as f64).min(hi);
    let tol = 1e-13 * (hi - lo).max(f64::MIN_POSITIVE) + 1e-15 * a.abs().max(b.abs());
    let (x, v) = golden_section(&f, a, b, tol);
    if v < best_v {
        (x, v)
    } else {
        let x = if best_k == n - 1 { hi } else { lo + step * best_k as f64 };
        (x, best_v)
    }
}

/// `n` Chebyshev–Lobatto points on `[a, b]`, endpoints included, increasing.
pub fn chebyshev_grid(n: usize, a: f64, b: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let mut g: Vec<f64> = (0..n)
                .map(|k| {
                    let t = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                    a + (b - a) * 0.5 * (1.0 - t.cos())
                })
                .collect();
            g[0] = a;
            g[n - 1] = b;
            g
        }
    }
}

/// `n` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace(n: usize, a: f64, b: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
///
/// Stops when the summed error estimate falls below
/// `max(abs_tol, rel_tol * |value|)` or after 4000 subdivisions.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0 };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut splits = 0;
    while total_err > abs_tol.max(rel_tol * total.abs()) && splits < 4000 {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        splits += 1;
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, error) = heap.iter().fold((0.0, 0.0), |(s, e), g| (s + g.value, e + g.err));
    Integral { value, error }
}

/// Integrates a non-negative, eventually decaying `f` over `[a, inf)` by
/// doubling chunks `[a, a+1], [a+1, a+3], ...` until a chunk contributes less
/// than `rel_tol` of the running total.
///
/// Returns `None` when the chunks stop shrinking before `max_extent`, which
/// signals a divergent (or too slowly converging) integral.
pub fn integrate_to_infinity(
    f: impl Fn(f64) -> f64,
    a: f64,
    rel_tol: f64,
    max_extent: f64,
) -> Option<Integral> {
    let mut lo = a;
    let mut width = 1.0;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut prev_chunk = f64::INFINITY;
    let mut growing = 0;
    loop {
        let hi = lo + width;
        let chunk = integrate(&f, lo, hi, 1e-300, rel_tol * 0.1);
        if !chunk.value.is_finite() {
            return None;
        }
        total += chunk.value;
        err += chunk.error;
        // per-unit-length density: a convergent tail makes this shrink
        let density = chunk.value / width;
        if density >= prev_chunk && chunk.value > rel_tol * total {
            growing += 1;
            if growing >= 4 {
                return None;
            }
        } else {
            growing = 0;
        }
        prev_chunk = density;
        if chunk.value.abs() <= rel_tol * total.abs() && f(hi).abs() * width <= rel_tol * total.abs() {
            return Some(Integral { value: total, error: err });
        }
        if hi - a > max_extent {
            return None;
        }
        lo = hi;
        width *= 2.0;
    }
}

/// Log-linear interpolation of `ln y` at `x` on an increasing grid.
/// Returns `None` outside `[xs[0], xs[n-1]]`.
pub fn interp_log_linear(xs: &[f64], ln_ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(ln_ys[0]);
    }
    let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(k) => return Some(ln_ys[k]),
        Err(k) => k,
    };
    let (x0, x1) = (xs[k - 1], xs[k]);
    let (y0, y1) = (ln_ys[k - 1], ln_ys[k]);
    if y0 == f64::INFINITY || y1 == f64::INFINITY {
        return Some(f64::INFINITY);
    }
    let t = (x - x0) / (x1 - x0);
    Some(y0 + t * (y1 - y0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_section(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scan_handles_infinite_regions() {
        let f = |x: f64| if x < 0.7 { f64::INFINITY } else { (x - 0.8).abs() };
        let (x, v) = scan_then_golden(f, 0.0, 1.0, 64);
        assert!((x - 0.8).abs() < 1e-8, "x = {x}");
        assert!(v < 1e-8);
    }

    #[test]
    fn scan_keeps_boundary_minimum() {
        let (x, v) = scan_then_golden(|x| -x, 0.0, 2.0, 16);
        assert_eq!(x, 2.0);
        assert_eq!(v, -2.0);
    }

    #[test]
    fn chebyshev_has_endpoints() {
        let g = chebyshev_grid(5, 1.0, 3.0);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[4], 3.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_relative_eq!(g[2], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_kronrod_polynomials_and_singular_integrand() {
        let r = integrate(|x| x * x, 0.0, 3.0, 1e-14, 1e-14);
        assert_relative_eq!(r.value, 9.0, epsilon = 1e-12);
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-12);
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn infinite_range_exponential() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1e-14, 1e4).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
        assert!(integrate_to_infinity(|_| 1.0, 0.0, 1e-12, 1e4).is_none());
    }

    #[test]
    fn log_linear_interpolation() {
        let xs = [1.0, 2.0];
        let ln = [0.0, 2.0_f64.ln()];
        assert_relative_eq!(interp_log_linear(&xs, &ln, 1.5).unwrap().exp(), 2f64.sqrt(), epsilon = 1e-14);
        assert!(interp_log_linear(&xs, &ln, 2.5).is_none());
    }
}
