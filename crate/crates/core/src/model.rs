//! Market and jump parameters, and the Lévy exponent of the
//! hyper-exponential jump-diffusion.
//!
//! The log-price follows `X_t = x + mu t + sigma W_t + sum Y_i` where the
//! jumps `Y_i` arrive at rate `lambda` and have the two-sided density
//!
//! ```text
//! sum_i p_i eta_i e^{-eta_i y} 1{y >= 0} + sum_j q_j theta_j e^{theta_j y} 1{y < 0}
//! ```
//!
//! The drift is pinned by the risk-neutral condition
//! `mu = r - delta - sigma^2/2 - lambda zeta` with `zeta = E[e^Y] - 1`.
//! The loan accrues at rate `gamma`, and the drifted process
//! `X_t - gamma t` has exponent `G~(x) = G(x) - gamma x`.

use crate::error::{Error, Result};

/// Contract and market scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Riskless rate.
    pub r: f64,
    /// Dividend rate.
    pub delta: f64,
    pub sigma: f64,
    /// Loan interest rate.
    pub gamma: f64,
    /// Loan principal.
    pub q: f64,
    /// Liquidation ratio.
    pub d: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        check("d", "0<d≤1", self.d, self.d > 0.0 && self.d <= 1.0)?;
        check("delta", "δ≥0", self.delta, self.delta >= 0.0)?;
        check("r", "γ≥r≥0", self.r, self.r >= 0.0)?;
        check("gamma", "γ≥r≥0", self.gamma, self.gamma >= self.r)?;
        check("sigma", "σ>0", self.sigma, self.sigma > 0.0)?;
        check("q", "q>0", self.q, self.q > 0.0)?;
        Ok(())
    }

    /// Log of the liquidation level, `ln(q/d)`.
    pub fn liquidation_log_level(&self) -> f64 {
        (self.q / self.d).ln()
    }
}

/// Jump intensity and the hyper-exponential mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpParams {
    pub lambda: f64,
    /// Up-jump mixture weights.
    pub p: Vec<f64>,
    /// Up-jump rates, strictly increasing and above 1.
    pub eta: Vec<f64>,
    /// Down-jump mixture weights.
    pub qw: Vec<f64>,
    /// Down-jump rates, strictly increasing and positive.
    pub theta: Vec<f64>,
}

impl JumpParams {
    /// Double-exponential jumps (one up and one down component).
    pub fn double_exponential(lambda: f64, p_up: f64, eta: f64, theta: f64) -> Self {
        JumpParams {
            lambda,
            p: vec![p_up],
            eta: vec![eta],
            qw: vec![1.0 - p_up],
            theta: vec![theta],
        }
    }

    /// Number of up-jump components.
    pub fn m(&self) -> usize {
        self.eta.len()
    }

    /// Number of down-jump components.
    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        check("lambda", "λ≥0", self.lambda, self.lambda >= 0.0)?;
        if self.p.len() != self.eta.len() {
            return Err(invalid("p", "len(p) = len(eta)", self.p.len()));
        }
        if self.qw.len() != self.theta.len() {
            return Err(invalid("qw", "len(qw) = len(theta)", self.qw.len()));
        }
        if self.m() + self.n() == 0 {
            return Err(invalid("eta", "m+n≥1", 0));
        }
        for &w in &self.p {
            check("p", "p_i>0", w, w > 0.0)?;
        }
        for &w in &self.qw {
            check("qw", "q_j>0", w, w > 0.0)?;
        }
        let total: f64 = self.p.iter().chain(&self.qw).sum();
        check("p", "Σp_i+Σq_j=1", total, (total - 1.0).abs() <= 1e-12)?;
        if let Some(&first) = self.eta.first() {
            check("eta", "1<η₁<⋯<η_m", first, first > 1.0)?;
        }
        for pair in self.eta.windows(2) {
            check("eta", "1<η₁<⋯<η_m", pair[1], pair[1] > pair[0])?;
        }
        if let Some(&first) = self.theta.first() {
            check("theta", "0<θ₁<⋯<θ_n", first, first > 0.0)?;
        }
        for pair in self.theta.windows(2) {
            check("theta", "0<θ₁<⋯<θ_n", pair[1], pair[1] > pair[0])?;
        }
        Ok(())
    }

    fn up(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.p.iter().copied().zip(self.eta.iter().copied())
    }

    fn down(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.qw.iter().copied().zip(self.theta.iter().copied())
    }
}

fn invalid(name: &'static str, requirement: &'static str, value: impl ToString) -> Error {
    Error::InvalidParameter {
        name,
        requirement,
        value: value.to_string(),
    }
}

fn check(name: &'static str, requirement: &'static str, value: f64, ok: bool) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, requirement, value))
    }
}

/// Mean relative jump size `E[e^Y] - 1`.
pub fn jump_mean_zeta(jumps: &JumpParams) -> f64 {
    // Written as deviations from 1 so that the weights cancel exactly.
    let up: f64 = jumps.up().map(|(p, eta)| p / (eta - 1.0)).sum();
    let down: f64 = jumps.down().map(|(q, theta)| q / (theta + 1.0)).sum();
    up - down
}

/// Which exponent to evaluate: the plain Lévy exponent `G`, or `G~ = G - gamma x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Plain,
    Drifted,
}

/// Validated model with cached drift and mean jump size.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    market: MarketParams,
    jumps: JumpParams,
    mu: f64,
    zeta: f64,
}

impl LevyModel {
    pub fn new(market: MarketParams, jumps: JumpParams) -> Result<Self> {
        market.validate()?;
        jumps.validate()?;
        let zeta = jump_mean_zeta(&jumps);
        let mu = market.r - market.delta - 0.5 * market.sigma * market.sigma - jumps.lambda * zeta;
        Ok(LevyModel {
            market,
            jumps,
            mu,
            zeta,
        })
    }

    pub fn market(&self) -> &MarketParams {
        &self.market
    }

    pub fn jumps(&self) -> &JumpParams {
        &self.jumps
    }

    /// Drift of the log-price.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Copy of the model with a different loan rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        LevyModel::new(
            MarketParams {
                gamma,
                ..self.market
            },
            self.jumps.clone(),
        )
    }

    /// Poles of the exponent: `eta_i` and `-theta_j`.
    pub fn poles(&self) -> impl Iterator<Item = f64> + '_ {
        self.jumps
            .eta
            .iter()
            .copied()
            .chain(self.jumps.theta.iter().map(|t| -t))
    }

    fn guard_poles(&self, x: f64) -> Result<()> {
        if self.jumps.lambda == 0.0 {
            return Ok(());
        }
        match self
            .poles()
            .find(|&pole| (x - pole).abs() < 1e-10 * (1.0 + pole.abs()))
        {
            Some(pole) => Err(Error::PoleEvaluation { x, pole }),
            None => Ok(()),
        }
    }

    fn drift_of(&self, kind: Exponent) -> f64 {
        match kind {
            Exponent::Plain => self.mu,
            Exponent::Drifted => self.mu - self.market.gamma,
        }
    }

    /// `G(x)` (or `G~(x)`), evaluated as a rational function on the real
    /// line minus the poles.
    pub fn exponent(&self, x: f64, kind: Exponent) -> Result<f64> {
        self.guard_poles(x)?;
        Ok(self.exponent_unchecked(x, kind))
    }

    pub(crate) fn exponent_unchecked(&self, x: f64, kind: Exponent) -> f64 {
        let sigma = self.market.sigma;
        let diffusion = 0.5 * sigma * sigma * x * x + self.drift_of(kind) * x;
        if self.jumps.lambda == 0.0 {
            return diffusion;
        }
        // p eta/(eta - x) - p = p x/(eta - x); the `- 1` is absorbed by the weights.
        let up: f64 = self.jumps.up().map(|(p, eta)| p * x / (eta - x)).sum();
        let down: f64 = self
            .jumps
            .down()
            .map(|(q, theta)| q * x / (theta + x))
            .sum();
        diffusion + self.jumps.lambda * (up - down)
    }

    pub fn levy_exponent(&self, x: f64) -> Result<f64> {
        self.exponent(x, Exponent::Plain)
    }

    pub fn drifted_exponent(&self, x: f64) -> Result<f64> {
        self.exponent(x, Exponent::Drifted)
    }

    pub fn exponent_derivative(&self, x: f64, kind: Exponent) -> Result<f64> {
        self.guard_poles(x)?;
        Ok(self.derivative_unchecked(x, kind))
    }

    fn derivative_unchecked(&self, x: f64, kind: Exponent) -> f64 {
        let sigma = self.market.sigma;
        let mut value = sigma * sigma * x + self.drift_of(kind);
        if self.jumps.lambda != 0.0 {
            let up: f64 = self
                .jumps
                .up()
                .map(|(p, eta)| p * eta / ((eta - x) * (eta - x)))
                .sum();
            let down: f64 = self
                .jumps
                .down()
                .map(|(q, theta)| q * theta / ((theta + x) * (theta + x)))
                .sum();
            value += self.jumps.lambda * (up - down);
        }
        value
    }

    /// Open interval `(-theta_1, eta_1)` shrunk by the pole guard; an
    /// absent side is `None`.
    pub fn central_interval(&self) -> (Option<f64>, Option<f64>) {
        let lo = self.jumps.theta.first().map(|&t| -t + 1e-9 * (1.0 + t));
        let hi = self.jumps.eta.first().map(|&e| e - 1e-9 * (1.0 + e));
        (lo, hi)
    }

    /// Minimizer and minimum of the exponent over the central interval.
    ///
    /// The exponent is convex there, so the minimizer is found by bisection
    /// on the sign of the derivative. Without jumps on one side the interval
    /// is unbounded on that side and is widened until the slope turns.
    pub fn exponent_minimum(&self, kind: Exponent) -> (f64, f64) {
        let slope = |x: f64| self.derivative_unchecked(x, kind);
        let (lo_guard, hi_guard) = self.central_interval();

        let mut lo = match lo_guard {
            Some(lo) => lo,
            None => expand_until(-1.0, |x| slope(x) < 0.0),
        };
        let mut hi = match hi_guard {
            Some(hi) => hi,
            None => expand_until(1.0, |x| slope(x) > 0.0),
        };

        let x_star = if slope(lo) >= 0.0 {
            lo
        } else if slope(hi) <= 0.0 {
            hi
        } else {
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break if slope(lo).abs() < slope(hi).abs() {
                        lo
                    } else {
                        hi
                    };
                }
                let s = slope(mid);
                if s == 0.0 {
                    break mid;
                }
                if s < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        };
        (x_star, self.exponent_unchecked(x_star, kind))
    }

    /// Checks that the discounted payoff has finite expected supremum:
    /// either `delta > 0`, or `delta = 0` and `dG~/dx(1) < 0`.
    pub fn check_finiteness(&self) -> Result<()> {
        if self.market.delta > 0.0 {
            return Ok(());
        }
        let slope = self.derivative_unchecked(1.0, Exponent::Drifted);
        if slope < 0.0 {
            Ok(())
        } else {
            Err(Error::FinitenessViolation {
                delta: self.market.delta,
                slope,
                gamma: self.market.gamma,
            })
        }
    }
}

/// Doubles `start` until `done` holds; the quadratic term guarantees this
/// terminates for `sigma > 0`.
fn expand_until(start: f64, done: impl Fn(f64) -> bool) -> f64 {
    let mut x = start;
    for _ in 0..1100 {
        if done(x) {
            return x;
        }
        x *= 2.0;
    }
    x
}
