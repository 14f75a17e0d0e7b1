//! Globally adaptive Gauss–Kronrod (7-15) quadrature.

use crate::error::{CoreError, Result};

// QUADPACK QK15 abscissae (positive half) and weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// 15-point Kronrod rule on [a, b] with embedded 7-point Gauss estimate.
/// Returns (integral, error estimate).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let result = res_kronrod * half;
    let err = rescale_error(
        (res_kronrod - res_gauss) * half,
        res_abs * half.abs(),
        res_asc * half.abs(),
    );
    (result, err)
}

#[derive(Clone, Copy)]
struct Interval {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

/// Adaptive integration of `f` over [a, b] to `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    let (val, err) = qk15(&f, a, b);
    let mut intervals = vec![Interval { a, b, val, err }];

    loop {
        let total: f64 = intervals.iter().map(|i| i.val).sum();
        let total_err: f64 = intervals.iter().map(|i| i.err).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        if intervals.len() >= max_intervals {
            return Err(CoreError::QuadratureFailure {
                error: total_err,
                intervals: intervals.len(),
            });
        }
        // bisect the worst interval
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty");
        let iv = intervals.swap_remove(worst);
        let mid = 0.5 * (iv.a + iv.b);
        let (lv, le) = qk15(&f, iv.a, mid);
        let (rv, re) = qk15(&f, mid, iv.b);
        intervals.push(Interval {
            a: iv.a,
            b: mid,
            val: lv,
            err: le,
        });
        intervals.push(Interval {
            a: mid,
            b: iv.b,
            val: rv,
            err: re,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 1e-12, 100).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-12, 1e-12, 1000).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn sharp_peak_converges() {
        // 1/(2 + sin u) over a period; exact value 2π/√3
        let v = integrate(|u| 1.0 / (2.0 + u.sin()), 0.0, 2.0 * PI, 1e-12, 1e-10, 2000).unwrap();
        let exact = 2.0 * PI / 3f64.sqrt();
        assert!((v - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn budget_exhaustion_reports_error() {
        let r = integrate(|x| (1e6 * x).sin().abs(), 0.0, 1.0, 1e-14, 1e-14, 8);
        assert!(matches!(r, Err(CoreError::QuadratureFailure { .. })));
    }
}
