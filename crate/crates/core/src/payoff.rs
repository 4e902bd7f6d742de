//! Payoff vectors for the exit transform.
//!
//! The contract pays `f(x) = (e^x - q)^+` at exit. For barriers above the
//! kink (`ln q <= h < H`) the exponential integrals have closed forms; a
//! quadrature route is kept alongside as an independent check.

use crate::error::{Error, Result};
use crate::model::JumpParams;
use crate::passage::PayoffVector;

/// `e^z - 1 - z` without cancellation near zero.
fn expm1_minus_linear(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let tail = 1.0 + z / 7.0;
        let tail = 1.0 + z / 6.0 * tail;
        let tail = 1.0 + z / 5.0 * tail;
        let tail = 1.0 + z / 4.0 * tail;
        let tail = 1.0 + z / 3.0 * tail;
        0.5 * z * z * tail
    } else {
        z.exp_m1() - z
    }
}

/// The call payoff `(e^x - q)^+`.
pub fn call_payoff(q: f64, x: f64) -> f64 {
    (x.exp() - q).max(0.0)
}

/// Closed-form payoff vector of `(e^x - q)^+` for barriers `ln q <= h < H`.
pub fn call_payoff_vector(
    q: f64,
    lower: f64,
    upper: f64,
    jumps: &JumpParams,
) -> Result<PayoffVector> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!(
            "principal must be positive (q = {q})"
        )));
    }
    // Distance of the lower barrier above the kink; a few ulps of slack for
    // h = ln(q/d) with d = 1.
    let above_kink = lower - q.ln();
    if above_kink < -1e-12 * (1.0 + lower.abs()) {
        return Err(Error::Domain(format!(
            "closed forms need ln q <= h (ln q = {}, h = {lower})",
            q.ln()
        )));
    }
    if !(lower < upper) {
        return Err(Error::Domain(format!(
            "closed forms need h < H (h = {lower}, H = {upper})"
        )));
    }
    let s = above_kink.max(0.0);
    let e_upper = upper.exp();

    let f_u = std::iter::once(e_upper - q)
        .chain(jumps.eta.iter().map(|&eta| e_upper / (eta - 1.0) - q / eta))
        .collect();
    // q e^{-s theta}/(theta(1+theta)) + e^h/(1+theta) - q/theta, regrouped
    // into two nonnegative terms.
    let f_d = std::iter::once(q * s.exp_m1())
        .chain(jumps.theta.iter().map(|&theta| {
            q / (theta * (1.0 + theta))
                * (expm1_minus_linear(-s * theta) + theta * expm1_minus_linear(s))
        }))
        .collect();
    Ok(PayoffVector { f_u, f_d })
}

// Gauss-Kronrod 7/15 nodes and weights.
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

const TOLERANCE: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-12,
};

const MAX_INTERVALS: usize = 4000;

/// Globally adaptive Gauss-Kronrod integration on a finite interval.
pub(crate) fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    let (value, error) = gauss_kronrod(f, a, b);
    let mut intervals = vec![(a, b, value, error)];
    let mut total = value;
    let mut total_error = error;
    while total_error > tol.abs.max(tol.rel * total.abs()) {
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence {
                error_estimate: total_error,
                intervals: intervals.len(),
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, v, e) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::NonConvergence {
                error_estimate: total_error,
                intervals: intervals.len() + 1,
            });
        }
        let (v1, e1) = gauss_kronrod(f, lo, mid);
        let (v2, e2) = gauss_kronrod(f, mid, hi);
        total += v1 + v2 - v;
        total_error += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // Re-sum to shed accumulated update roundoff.
    Ok(intervals.iter().map(|iv| iv.2).sum())
}

/// `int_0^inf g(y) dy` for a decaying integrand, integrated on doubling
/// pieces `[0,1], [1,2], [2,4], ...` until the weight `e^{-rate y}` is
/// negligible and the last piece no longer moves the total. `split` is
/// an interior point where `g` has a kink.
fn integrate_half_line(g: &impl Fn(f64) -> f64, rate: f64, split: Option<f64>) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let piece = match split.filter(|s| lo < *s && *s < hi) {
            Some(s) => integrate(g, lo, s, TOLERANCE)? + integrate(g, s, hi, TOLERANCE)?,
            None => integrate(g, lo, hi, TOLERANCE)?,
        };
        total += piece;
        let negligible_weight = (-rate * hi).exp() < 1e-16;
        if (negligible_weight && piece.abs() <= 1e-17 * total.abs()) || hi > 1e7 {
            return Ok(total);
        }
        lo = hi;
        hi *= 2.0;
    }
}

/// Payoff vector of an arbitrary nonnegative payoff by quadrature.
///
/// `kink` is a point in log-price where `payoff` is not smooth; it is
/// used as a split point in every integral it falls inside.
pub fn quadrature_payoff_vector(
    payoff: impl Fn(f64) -> f64,
    kink: Option<f64>,
    lower: f64,
    upper: f64,
    jumps: &JumpParams,
) -> Result<PayoffVector> {
    let mut f_u = vec![payoff(upper)];
    for &eta in &jumps.eta {
        let g = |y: f64| payoff(upper + y) * (-eta * y).exp();
        f_u.push(integrate_half_line(&g, eta, kink.map(|k| k - upper))?);
    }
    let mut f_d = vec![payoff(lower)];
    for &theta in &jumps.theta {
        // Reflected: int_{-inf}^0 f(y + h) e^{theta y} dy = int_0^inf f(h - y) e^{-theta y} dy.
        let g = |y: f64| payoff(lower - y) * (-theta * y).exp();
        f_d.push(integrate_half_line(&g, theta, kink.map(|k| lower - k))?);
    }
    Ok(PayoffVector { f_u, f_d })
}
