//! Real roots of `G~(x) - alpha`.
//!
//! For `alpha >= M(G~)` the equation has `m + n + 2` real roots which
//! interlace with the poles:
//!
//! ```text
//! -g_{n+1} < -theta_n < ... < -g_2 < -theta_1 < -g_1 <= b_1 < eta_1 < b_2 < ... < eta_m < b_{m+1}
//! ```
//!
//! Each root is isolated in its own bracket (poles on both sides, or a pole
//! and the minimizer on the central interval) and found by bisection.
//!
//! Note that the negative-side roots are stored by magnitude in
//! [`RootSet::gamma_mag`]; they are unrelated to the loan rate `gamma`.

use crate::error::{Error, Result};
use crate::model::{Exponent, JumpParams, LevyModel};

/// Roots of the drifted exponent minus `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub alpha: f64,
    /// Positive-side roots `beta_1 < ... < beta_{m+1}`.
    pub beta: Vec<f64>,
    /// Magnitudes of the negative-side roots; root `j` is `-gamma_mag[j]`.
    pub gamma_mag: Vec<f64>,
    /// Minimizer and minimum of `G~` on the central interval.
    pub x_star: f64,
    pub minimum: f64,
}

impl RootSet {
    pub fn m(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn n(&self) -> usize {
        self.gamma_mag.len() - 1
    }

    /// All roots in ascending order.
    pub fn ascending(&self) -> Vec<f64> {
        self.gamma_mag
            .iter()
            .rev()
            .map(|g| -g)
            .chain(self.beta.iter().copied())
            .collect()
    }

    /// Gap between the two central roots, `beta_1 + gamma_1`.
    pub fn central_gap(&self) -> f64 {
        self.beta[0] + self.gamma_mag[0]
    }

    /// `|G~(root) - alpha|` for every root, in ascending root order.
    pub fn residuals(&self, model: &LevyModel) -> Vec<f64> {
        self.ascending()
            .into_iter()
            .map(|x| (model.exponent_unchecked(x, Exponent::Drifted) - self.alpha).abs())
            .collect()
    }

    /// Checks the strict interlacing chain against the jump rates.
    pub fn is_interlaced(&self, jumps: &JumpParams) -> bool {
        if self.beta.len() != jumps.m() + 1 || self.gamma_mag.len() != jumps.n() + 1 {
            return false;
        }
        // Ascending sequence: -g_{n+1}, -theta_n, ..., -theta_1, -g_1 | b_1, eta_1, ..., eta_m, b_{m+1}
        let mut left = Vec::with_capacity(2 * jumps.n() + 1);
        for j in (0..=jumps.n()).rev() {
            left.push(-self.gamma_mag[j]);
            if j > 0 {
                left.push(-jumps.theta[j - 1]);
            }
        }
        let mut right = Vec::with_capacity(2 * jumps.m() + 1);
        for i in 0..=jumps.m() {
            right.push(self.beta[i]);
            if i < jumps.m() {
                right.push(jumps.eta[i]);
            }
        }
        let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        strictly_increasing(&left)
            && strictly_increasing(&right)
            && -self.gamma_mag[0] <= self.beta[0]
            && left.iter().chain(&right).all(|x| x.is_finite())
    }
}

fn pole_offset(pole: f64) -> f64 {
    1e-9 * (1.0 + pole.abs())
}

/// Bisection to machine resolution on a bracket with a sign change.
/// Returns the endpoint with the smaller residual.
fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return lo;
    }
    if g_hi == 0.0 {
        return hi;
    }
    let mut g_hi = g_hi;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return if g_lo.abs() <= g_hi.abs() { lo } else { hi };
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
}

/// Moves `start` away from `anchor` by doubling distances until `g` is positive.
fn expand_bracket(g: &impl Fn(f64) -> f64, anchor: f64, direction: f64) -> Option<f64> {
    let mut distance = 1.0;
    for _ in 0..=60 {
        let x = anchor + direction * distance;
        if g(x) > 0.0 {
            return Some(x);
        }
        distance *= 2.0;
    }
    None
}

/// Computes all `m + n + 2` roots of `G~(x) - alpha`.
pub fn solve_roots(model: &LevyModel, alpha: f64) -> Result<RootSet> {
    let jumps = model.jumps();
    if jumps.lambda == 0.0 {
        return Err(Error::Domain(
            "root machinery requires lambda > 0 (without jumps the contract is riskless)".into(),
        ));
    }
    let (x_star, minimum) = model.exponent_minimum(Exponent::Drifted);
    if alpha < minimum {
        return Err(Error::NoRealRoots { alpha, minimum });
    }
    let g = |x: f64| model.exponent_unchecked(x, Exponent::Drifted) - alpha;
    let search_failed = |lo: f64, hi: f64, reason: &'static str| Error::RootSearch {
        alpha,
        lo,
        hi,
        reason,
    };
    let in_bracket = |lo: f64, hi: f64| -> Result<f64> {
        if (g(lo) > 0.0) == (g(hi) > 0.0) {
            return Err(search_failed(lo, hi, "no sign change"));
        }
        // G~(0) = 0 exactly, so alpha = 0 has the exact root 0.
        if lo <= 0.0 && 0.0 <= hi && g(0.0) == 0.0 {
            return Ok(0.0);
        }
        Ok(bisect(&g, lo, hi))
    };

    let (lo_guard, hi_guard) = model.central_interval();
    let lo_central = match lo_guard {
        Some(lo) => lo,
        None => expand_bracket(&g, x_star, -1.0)
            .ok_or_else(|| search_failed(f64::NEG_INFINITY, x_star, "unbounded bracket"))?,
    };
    let hi_central = match hi_guard {
        Some(hi) => hi,
        None => expand_bracket(&g, x_star, 1.0)
            .ok_or_else(|| search_failed(x_star, f64::INFINITY, "unbounded bracket"))?,
    };

    let mut beta = Vec::with_capacity(jumps.m() + 1);
    let mut gamma_mag = Vec::with_capacity(jumps.n() + 1);

    let lower_central = if g(x_star) == 0.0 {
        x_star
    } else {
        in_bracket(lo_central, x_star)?
    };
    let upper_central = if g(x_star) == 0.0 {
        x_star
    } else {
        in_bracket(x_star, hi_central)?
    };
    if upper_central - lower_central < 1e-8 {
        return Err(Error::DegenerateRoots {
            alpha,
            lower: lower_central,
            upper: upper_central,
        });
    }
    beta.push(upper_central);
    gamma_mag.push(-lower_central);

    for pair in jumps.eta.windows(2) {
        let lo = pair[0] + pole_offset(pair[0]);
        let hi = pair[1] - pole_offset(pair[1]);
        beta.push(in_bracket(lo, hi)?);
    }
    if let Some(&last) = jumps.eta.last() {
        let lo = last + pole_offset(last);
        let hi = expand_bracket(&g, last, 1.0)
            .ok_or_else(|| search_failed(lo, f64::INFINITY, "no sign change after 60 doublings"))?;
        beta.push(in_bracket(lo, hi)?);
    }

    for pair in jumps.theta.windows(2) {
        let lo = -pair[1] + pole_offset(pair[1]);
        let hi = -pair[0] - pole_offset(pair[0]);
        gamma_mag.push(-in_bracket(lo, hi)?);
    }
    if let Some(&last) = jumps.theta.last() {
        let hi = -last - pole_offset(last);
        let lo = expand_bracket(&g, -last, -1.0).ok_or_else(|| {
            search_failed(f64::NEG_INFINITY, hi, "no sign change after 60 doublings")
        })?;
        gamma_mag.push(-in_bracket(lo, hi)?);
    }

    let roots = RootSet {
        alpha,
        beta,
        gamma_mag,
        x_star,
        minimum,
    };
    let tolerance = 1e-10 * (1.0 + alpha.abs());
    if let Some((root, _)) = roots
        .ascending()
        .into_iter()
        .map(|x| (x, g(x).abs()))
        .find(|&(_, r)| r > tolerance)
    {
        return Err(search_failed(root, root, "residual above tolerance"));
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketParams;

    fn table_model(lambda: f64) -> LevyModel {
        LevyModel::new(
            MarketParams {
                r: 0.05,
                delta: 0.02,
                sigma: 0.15,
                gamma: 0.07,
                q: 80.0,
                d: 80.0 / 90.0,
            },
            JumpParams::double_exponential(lambda, 0.09, 2.3, 1.8),
        )
        .unwrap()
    }

    fn sign_changes(model: &LevyModel, alpha: f64, lo: f64, hi: f64, points: usize) -> usize {
        let g = |x: f64| model.drifted_exponent(x).unwrap() - alpha;
        let mut count = 0;
        let mut prev = g(lo);
        for k in 1..=points {
            let x = lo + (hi - lo) * k as f64 / points as f64;
            let cur = g(x);
            if (cur > 0.0) != (prev > 0.0) {
                count += 1;
            }
            prev = cur;
        }
        count
    }

    #[test]
    fn table_roots_interlace_and_are_unique() {
        let model = table_model(0.5);
        let roots = solve_roots(&model, -0.02).unwrap();
        assert!(roots.is_interlaced(model.jumps()));
        assert_eq!(roots.ascending().len(), 4);
        for r in roots.residuals(&model) {
            assert!(r <= 1e-10 * 1.02);
        }
        let [g2, g1, b1, b2] = roots.ascending()[..] else {
            panic!()
        };
        assert!(g2 < -1.8 && -1.8 < g1 && g1 <= b1 && b1 < 2.3 && 2.3 < b2);

        // Dense sign scans: exactly one crossing per bracket.
        let eps = 1e-7;
        assert_eq!(
            sign_changes(&model, -0.02, -1.8 + eps, roots.x_star, 10_000),
            1
        );
        assert_eq!(
            sign_changes(&model, -0.02, roots.x_star, 2.3 - eps, 10_000),
            1
        );
        assert_eq!(sign_changes(&model, -0.02, 2.3 + eps, b2 + 50.0, 10_000), 1);
        assert_eq!(
            sign_changes(&model, -0.02, g2 - 50.0, -1.8 - eps, 10_000),
            1
        );
    }

    #[test]
    fn zero_alpha_has_exact_zero_root() {
        let model = table_model(1.0);
        let roots = solve_roots(&model, 0.0).unwrap();
        // G~'(0) < 0 here, so 0 is the left central root.
        assert!(model.exponent_derivative(0.0, Exponent::Drifted).unwrap() < 0.0);
        assert_eq!(roots.gamma_mag[0], 0.0);
    }

    #[test]
    fn alpha_below_minimum_has_no_roots() {
        let model = table_model(1.0);
        let (_, m) = model.exponent_minimum(Exponent::Drifted);
        assert!(matches!(
            solve_roots(&model, m - 0.1),
            Err(Error::NoRealRoots { .. })
        ));
    }

    #[test]
    fn alpha_at_minimum_is_degenerate() {
        let model = table_model(1.0);
        let (_, m) = model.exponent_minimum(Exponent::Drifted);
        assert!(matches!(
            solve_roots(&model, m),
            Err(Error::DegenerateRoots { .. })
        ));
    }

    #[test]
    fn one_sided_jumps() {
        let market = *table_model(1.0).market();
        let up_only = LevyModel::new(
            market,
            JumpParams {
                lambda: 1.0,
                p: vec![0.3, 0.7],
                eta: vec![1.5, 4.0],
                qw: vec![],
                theta: vec![],
            },
        )
        .unwrap();
        let roots = solve_roots(&up_only, 0.3).unwrap();
        assert_eq!(roots.beta.len(), 3);
        assert_eq!(roots.gamma_mag.len(), 1);
        assert!(roots.is_interlaced(up_only.jumps()));

        let down_only = LevyModel::new(
            market,
            JumpParams {
                lambda: 2.0,
                p: vec![],
                eta: vec![],
                qw: vec![1.0],
                theta: vec![3.0],
            },
        )
        .unwrap();
        let roots = solve_roots(&down_only, 0.1).unwrap();
        assert_eq!(roots.beta.len(), 1);
        assert_eq!(roots.gamma_mag.len(), 2);
        assert!(roots.is_interlaced(down_only.jumps()));
    }

    #[test]
    fn no_jumps_is_a_domain_error() {
        assert!(matches!(
            solve_roots(&table_model(0.0), 0.1),
            Err(Error::Domain(_))
        ));
    }
}
