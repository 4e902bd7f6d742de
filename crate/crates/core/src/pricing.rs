//! Stock-loan valuation by threshold search.
//!
//! The client redeems when the loan-to-collateral ratio `q e^{gamma t - X_t}`
//! falls to a level `u in (0, d)`; the lender liquidates when it rises to
//! `d`. In the drifted log-price this is a two-barrier exit from
//! `(ln(q/d), ln(q/u))` discounted at `alpha = r - gamma`, and the client
//! value is the best such threshold (or immediate redemption).

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::passage::{expected_discounted_payoff, BarrierProblem};
use crate::payoff::{call_payoff, call_payoff_vector};
use crate::roots::{solve_roots, RootSet};

/// Grid resolution and refinement switch for the threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Number of interior thresholds `u_j = j d / (grid_n + 1)`.
    pub grid_n: usize,
    /// Golden-section pass around the best grid threshold.
    pub refine: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_n: 999,
            refine: true,
        }
    }
}

/// Client value and search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationResult {
    /// Client contract value.
    pub v: f64,
    /// Best redemption threshold, `None` when immediate redemption or
    /// liquidation is optimal.
    pub u_star: Option<f64>,
    pub grid_n: usize,
    pub refined: bool,
    /// Worst pivot-ratio condition estimate over all transform solves.
    pub condition_worst: f64,
    /// Largest magnitude of a negative transform value clamped to zero.
    pub clamped: f64,
}

struct ThresholdObjective<'a> {
    model: &'a LevyModel,
    roots: RootSet,
    x: f64,
    lower: f64,
}

impl ThresholdObjective<'_> {
    /// Value of redeeming at ratio `u`, clamped at zero, with its condition estimate.
    fn eval(&self, u: f64) -> Result<(f64, f64, f64)> {
        let q = self.model.market().q;
        let upper = (q / u).ln();
        if self.x >= upper {
            return Ok((call_payoff(q, self.x), 1.0, 0.0));
        }
        let problem = BarrierProblem::new(self.lower, upper, self.x, self.roots.alpha)?;
        let payoff = call_payoff_vector(q, self.lower, upper, self.model.jumps())?;
        let t = expected_discounted_payoff(&problem, &self.roots, self.model.jumps(), &payoff)?;
        if t.value < 0.0 {
            Ok((0.0, t.condition, -t.value))
        } else {
            Ok((t.value, t.condition, 0.0))
        }
    }
}

/// Client value `v(x)` of the contract at log collateral price `x`.
pub fn value_client(model: &LevyModel, x: f64, opts: SearchOptions) -> Result<ValuationResult> {
    model.check_finiteness()?;
    if opts.grid_n == 0 {
        return Err(Error::Domain("grid_n must be at least 1".into()));
    }
    let market = model.market();
    let immediate = call_payoff(market.q, x);
    let mut result = ValuationResult {
        v: immediate,
        u_star: None,
        grid_n: opts.grid_n,
        refined: false,
        condition_worst: 1.0,
        clamped: 0.0,
    };

    // Without downward jumps liquidation always happens exactly at the
    // level d <= 1, so the lender carries no risk.
    let jumps = model.jumps();
    if jumps.lambda == 0.0 || jumps.n() == 0 {
        return Ok(result);
    }
    let lower = market.liquidation_log_level();
    if x <= lower {
        return Ok(result);
    }

    let objective = ThresholdObjective {
        model,
        roots: solve_roots(model, market.r - market.gamma)?,
        x,
        lower,
    };
    let d = market.d;
    let step = d / (opts.grid_n as f64 + 1.0);
    let mut best: Option<usize> = None;
    for j in 1..=opts.grid_n {
        let (value, condition, clamped) = objective.eval(j as f64 * step)?;
        result.condition_worst = result.condition_worst.max(condition);
        result.clamped = result.clamped.max(clamped);
        if value > result.v {
            result.v = value;
            best = Some(j);
        }
    }
    let Some(j) = best else {
        return Ok(result);
    };
    let mut u_star = j as f64 * step;

    if opts.refine {
        let lo = ((j - 1) as f64 * step).max(1e-6 * u_star);
        let hi = ((j + 1) as f64 * step).min(d * (1.0 - 1e-12));
        let mut worst = (result.condition_worst, result.clamped);
        let (u, value) = golden_section_max(lo, hi, d * 1e-6, |u| {
            let (value, condition, clamped) = objective.eval(u)?;
            worst = (worst.0.max(condition), worst.1.max(clamped));
            Ok(value)
        })?;
        (result.condition_worst, result.clamped) = worst;
        if value > result.v {
            result.v = value;
            u_star = u;
        }
        result.refined = true;
    }
    result.u_star = Some(u_star);
    Ok(result)
}

/// Maximizes a unimodal function on `[lo, hi]` to interval width `tol`.
fn golden_section_max(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b)?;
        }
    }
    Ok(if fa >= fb { (a, fa) } else { (b, fb) })
}

/// Lender value `u(x) = e^x - v(x)`.
pub fn value_lender(model: &LevyModel, x: f64, opts: SearchOptions) -> Result<f64> {
    Ok(x.exp() - value_client(model, x, opts)?.v)
}

/// Client value, lender value and rational premium at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractQuote {
    pub valuation: ValuationResult,
    /// `e^x - v`.
    pub lender: f64,
    /// Up-front premium `c = v - (e^x - q)`, clamped at zero.
    pub premium: f64,
    /// Magnitude removed by clamping the premium.
    pub premium_clamped: f64,
}

pub fn quote(model: &LevyModel, x: f64, opts: SearchOptions) -> Result<ContractQuote> {
    let valuation = value_client(model, x, opts)?;
    let collateral = x.exp();
    let raw = valuation.v - (collateral - model.market().q);
    Ok(ContractQuote {
        lender: collateral - valuation.v,
        premium: raw.max(0.0),
        premium_clamped: (-raw).max(0.0),
        valuation,
    })
}

/// Rational premium `c` satisfying `v(x; gamma) = e^x - q + c`.
pub fn rational_premium(model: &LevyModel, x: f64, opts: SearchOptions) -> Result<f64> {
    Ok(quote(model, x, opts)?.premium)
}

/// Loan rate solving the rational identity for a given premium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    pub gamma: f64,
    /// Whether the premium was monotone across the bracket endpoints and
    /// midpoint.
    pub monotone: bool,
}

/// Loan rate `gamma` in `[r, gamma_hi]` at which the rational premium
/// equals `target`. The `gamma` already in `model` is ignored.
///
/// For `target = 0` the result is the smallest rate at which the premium
/// vanishes; if it already vanishes at `r` there is no sign change and
/// `NoBracket` is returned.
pub fn rational_rate(
    model: &LevyModel,
    x: f64,
    target: f64,
    opts: SearchOptions,
    gamma_hi: f64,
) -> Result<RateSolution> {
    if !(target >= 0.0) {
        return Err(Error::Domain(format!(
            "target premium must be nonnegative (c = {target})"
        )));
    }
    let r = model.market().r;
    let gap = |gamma: f64| -> Result<f64> {
        Ok(rational_premium(&model.with_gamma(gamma)?, x, opts)? - target)
    };
    let (mut lo, mut hi) = (r, gamma_hi);
    let (g_lo, g_hi) = (gap(lo)?, gap(hi)?);
    // The premium falls as the rate rises; either orientation is accepted.
    let decreasing = g_lo > 0.0 && g_hi <= 0.0;
    let increasing = g_lo < 0.0 && g_hi >= 0.0;
    if !(decreasing || increasing) {
        return Err(Error::NoBracket { lo, hi, g_lo, g_hi });
    }
    let g_mid = gap(0.5 * (lo + hi))?;
    let monotone = if decreasing {
        g_lo >= g_mid && g_mid >= g_hi
    } else {
        g_lo <= g_mid && g_mid <= g_hi
    };

    // Invariant: the premium is strictly on the `lo` side of the target at `lo`.
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid)?;
        let on_lo_side = if decreasing { g > 0.0 } else { g < 0.0 };
        if on_lo_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RateSolution {
        gamma: 0.5 * (lo + hi),
        monotone,
    })
}

/// Exercise threshold `k = inf{x > ln(q/d) : u(x) >= q}`.
///
/// Returns `ln(q/d)` when the free boundary is collapsed. The search runs
/// over `(ln(q/d), ln(q/d) + span]`.
pub fn exercise_threshold_k(model: &LevyModel, opts: SearchOptions, span: f64) -> Result<f64> {
    let market = model.market();
    let (q, lower) = (market.q, market.liquidation_log_level());
    let exercised = |x: f64| -> Result<bool> { Ok(value_lender(model, x, opts)? >= q - 1e-6) };

    let mut lo = lower;
    let mut hi = lower + span;
    if exercised(lower + 1e-9 * (1.0 + lower.abs()))? {
        return Ok(lower);
    }
    if !exercised(hi)? {
        return Err(Error::NotFound { lo, hi });
    }
    while hi - lo > 1e-8 * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if exercised(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JumpParams, MarketParams};

    fn market(q: f64) -> MarketParams {
        MarketParams {
            r: 0.05,
            delta: 0.02,
            sigma: 0.15,
            gamma: 0.07,
            q,
            d: 80.0 / 90.0,
        }
    }

    fn model(lambda: f64, q: f64) -> LevyModel {
        LevyModel::new(
            market(q),
            JumpParams::double_exponential(lambda, 0.09, 2.3, 1.8),
        )
        .unwrap()
    }

    fn x100() -> f64 {
        100f64.ln()
    }

    #[test]
    fn riskless_without_jumps() {
        let m = model(0.0, 80.0);
        for s in [50.0, 85.0, 100.0, 300.0] {
            let r = value_client(&m, f64::ln(s), SearchOptions::default()).unwrap();
            assert_eq!(r.v, call_payoff(80.0, f64::ln(s)));
            assert_eq!(r.u_star, None);
        }
        let u = value_lender(&m, x100(), SearchOptions::default()).unwrap();
        assert!((u - 80.0).abs() < 1e-12);
    }

    #[test]
    fn table_value_lambda_one() {
        let r = value_client(&model(1.0, 80.0), x100(), SearchOptions::default()).unwrap();
        assert!((r.v - 30.91).abs() < 0.05, "v = {}", r.v);
        let u = r.u_star.unwrap();
        assert!(u > 0.0 && u < 80.0 / 90.0);
        assert!(r.refined);
    }

    #[test]
    fn below_liquidation_level_is_immediate() {
        let m = model(1.0, 80.0);
        let x = 90f64.ln() - 0.1;
        let r = value_client(&m, x, SearchOptions::default()).unwrap();
        assert_eq!(r.v, (x.exp() - 80.0).max(0.0));
    }

    #[test]
    fn lender_values_from_table() {
        let u40 = value_lender(&model(1.0, 40.0), x100(), SearchOptions::default()).unwrap();
        assert!((u40 - 39.29).abs() < 0.05, "{u40}");
        let u80 = value_lender(&model(2.0, 80.0), x100(), SearchOptions::default()).unwrap();
        assert!((u80 - 64.14).abs() < 0.05, "{u80}");
    }

    #[test]
    fn premiums_from_table() {
        let opts = SearchOptions::default();
        let c80 = rational_premium(&model(1.0, 80.0), x100(), opts).unwrap();
        assert!((c80 - 10.91).abs() < 0.05, "{c80}");
        let c30 = rational_premium(&model(1.0, 30.0), x100(), opts).unwrap();
        assert!(c30.abs() < 0.05, "{c30}");
        let c50 = rational_premium(&model(2.0, 50.0), x100(), opts).unwrap();
        assert!((c50 - 6.23).abs() < 0.05, "{c50}");
    }

    #[test]
    fn nested_grids_are_monotone() {
        let m = model(1.0, 80.0);
        let coarse = SearchOptions {
            grid_n: 199,
            refine: false,
        };
        let v = |grid_n| {
            value_client(&m, x100(), SearchOptions { grid_n, ..coarse })
                .unwrap()
                .v
        };
        let (a, b, c) = (v(199), v(399), v(799));
        assert!(b >= a - 1e-9 && c >= b - 1e-9, "{a} {b} {c}");
    }

    #[test]
    fn rate_round_trip() {
        let m = model(0.5, 80.0);
        let opts = SearchOptions::default();
        let c = rational_premium(&m, x100(), opts).unwrap();
        let rate = rational_rate(&m, x100(), c, opts, 1.0).unwrap();
        assert!((rate.gamma - 0.07).abs() < 1e-4, "{rate:?}");
        assert!(rate.monotone);
    }

    #[test]
    fn rate_for_table_premium() {
        let rate = rational_rate(
            &model(1.0, 80.0),
            x100(),
            10.91,
            SearchOptions::default(),
            1.0,
        )
        .unwrap();
        assert!((rate.gamma - 0.07).abs() < 2e-3, "{rate:?}");
    }

    #[test]
    fn zero_premium_returns_first_vanishing_rate() {
        let opts = SearchOptions::default();
        let m = model(1.0, 30.0);
        let rate = rational_rate(&m, x100(), 0.0, opts, 1.0).unwrap();
        // c = 0 already holds at gamma = 0.07 for q = 30.
        assert!(rate.gamma <= 0.07);
        let below = rational_premium(&m.with_gamma(rate.gamma - 1e-4).unwrap(), x100(), opts);
        assert!(below.unwrap() > 0.0);
        let above = rational_premium(&m.with_gamma(rate.gamma + 1e-4).unwrap(), x100(), opts);
        assert_eq!(above.unwrap(), 0.0);
    }

    #[test]
    fn unreachable_premium_has_no_bracket() {
        let err = rational_rate(
            &model(1.0, 80.0),
            x100(),
            500.0,
            SearchOptions::default(),
            1.0,
        );
        assert!(matches!(err, Err(Error::NoBracket { .. })), "{err:?}");
    }

    #[test]
    fn threshold_without_jumps() {
        // With d = 1 the liquidation level is ln q itself.
        let m = LevyModel::new(
            MarketParams {
                d: 1.0,
                ..market(80.0)
            },
            JumpParams::double_exponential(0.0, 0.09, 2.3, 1.8),
        )
        .unwrap();
        let k = exercise_threshold_k(&m, SearchOptions::default(), 10.0).unwrap();
        assert!((k - 80f64.ln()).abs() < 1e-12);
        // With d < 1 the boundary is collapsed onto ln(q/d).
        let k = exercise_threshold_k(&model(0.0, 80.0), SearchOptions::default(), 10.0).unwrap();
        assert_eq!(k, 90f64.ln());
    }

    #[test]
    fn threshold_brackets_table_rows() {
        let opts = SearchOptions {
            grid_n: 199,
            refine: true,
        };
        let k30 = exercise_threshold_k(&model(1.0, 30.0), opts, 10.0).unwrap();
        assert!(k30 <= x100());
        let k80 = exercise_threshold_k(&model(2.0, 80.0), opts, 10.0).unwrap();
        assert!(k80 > x100());
    }

    #[test]
    fn finiteness_violation_is_reported() {
        let m = LevyModel::new(
            MarketParams {
                delta: 0.0,
                gamma: 0.05,
                ..market(80.0)
            },
            JumpParams::double_exponential(0.0, 0.09, 2.3, 1.8),
        )
        .unwrap();
        assert!(matches!(
            value_client(&m, x100(), SearchOptions::default()),
            Err(Error::FinitenessViolation { .. })
        ));
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (u, v) = golden_section_max(0.0, 1.0, 1e-9, |u| Ok(-(u - 0.3) * (u - 0.3))).unwrap();
        assert!((u - 0.3).abs() < 1e-8 && v <= 0.0);
    }
}
