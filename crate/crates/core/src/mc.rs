//! Monte Carlo estimate of `E[e^{-alpha tau} f(X~_tau)]` for the exit of the
//! drifted jump-diffusion from `(h, H)`.
//!
//! Jump epochs are drawn exactly from the exponential inter-arrival law.
//! Between epochs the Brownian part is stepped with steps no longer than
//! `dt_max`, optionally with a Brownian-bridge test for crossings inside a
//! step. A diffusive exit lands on the barrier; a jump exit lands on the
//! overshot point.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path)`, and
//! paths are reduced in fixed-size blocks in index order, so results do not
//! depend on the number of worker threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{JumpParams, LevyModel};
use crate::payoff::call_payoff;

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    /// Longest Brownian sub-step, in years.
    pub dt_max: f64,
    /// Brownian-bridge crossing test within each sub-step.
    pub bridge: bool,
    /// Paths still inside the corridor at this time contribute zero.
    pub t_max: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 200_000,
            seed: 0x005E_ED0F_10A4,
            dt_max: 1e-3,
            bridge: true,
            t_max: 200.0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || !(self.dt_max > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::Domain(format!(
                "Monte Carlo config needs paths >= 1, dt_max > 0, t_max > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Payoff applied at the exit point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McPayoff {
    /// `(e^x - q)^+`.
    Call {
        q: f64,
    },
    Constant(f64),
    /// One when the exit is through the upper barrier.
    UpperIndicator,
}

impl McPayoff {
    fn at(&self, x: f64, upper: f64) -> f64 {
        match *self {
            McPayoff::Call { q } => call_payoff(q, x),
            McPayoff::Constant(c) => c,
            McPayoff::UpperIndicator => {
                if x >= upper {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Draws one jump size from the hyper-exponential mixture.
pub fn sample_jump<R: Rng + ?Sized>(jumps: &JumpParams, rng: &mut R) -> f64 {
    let magnitude: f64 = rng.sample(Exp1);
    let mut u: f64 = rng.gen();
    for (&p, &eta) in jumps.p.iter().zip(&jumps.eta) {
        if u < p {
            return magnitude / eta;
        }
        u -= p;
    }
    for (&q, &theta) in jumps.qw.iter().zip(&jumps.theta) {
        if u < q {
            return -magnitude / theta;
        }
        u -= q;
    }
    // Weights sum to one up to rounding; the leftover mass goes to the last component.
    match jumps.theta.last() {
        Some(&theta) => -magnitude / theta,
        None => magnitude / jumps.eta.last().copied().unwrap_or(1.0),
    }
}

/// Estimate with standard error and exit-time diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Fraction of paths still alive at `t_max`.
    pub truncated_fraction: f64,
    /// Mean of `min(tau, t_max)`.
    pub mean_exit_time: f64,
    pub exit_time_stderr: f64,
    /// Set when the truncated mass may exceed 10% of the standard error.
    pub truncation_warning: Option<String>,
}

/// Exit problem for the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSpec {
    pub lower: f64,
    pub upper: f64,
    pub x: f64,
    pub alpha: f64,
    pub payoff: McPayoff,
}

struct PathOutcome {
    discounted: f64,
    exit_time: f64,
    truncated: bool,
}

#[derive(Default, Clone, Copy)]
struct BlockStats {
    count: u64,
    sum: f64,
    sum_sq: f64,
    truncated: u64,
    time_sum: f64,
    time_sum_sq: f64,
}

impl BlockStats {
    fn push(&mut self, o: &PathOutcome) {
        self.count += 1;
        self.sum += o.discounted;
        self.sum_sq += o.discounted * o.discounted;
        self.truncated += o.truncated as u64;
        self.time_sum += o.exit_time;
        self.time_sum_sq += o.exit_time * o.exit_time;
    }

    fn merge(mut self, other: BlockStats) -> BlockStats {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.truncated += other.truncated;
        self.time_sum += other.time_sum;
        self.time_sum_sq += other.time_sum_sq;
        self
    }
}

const BLOCK: u64 = 4096;

struct PathSimulator<'a> {
    jumps: &'a JumpParams,
    drift: f64,
    sigma: f64,
    spec: ExitSpec,
    cfg: McConfig,
}

impl PathSimulator<'_> {
    fn run(&self, path: u64) -> PathOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(path);
        let ExitSpec {
            lower,
            upper,
            alpha,
            payoff,
            ..
        } = self.spec;
        let lambda = self.jumps.lambda;
        let variance_rate = self.sigma * self.sigma;
        let exit = |x: f64, t: f64| PathOutcome {
            discounted: (-alpha * t).exp() * payoff.at(x, upper),
            exit_time: t,
            truncated: false,
        };

        let mut x = self.spec.x;
        let mut t = 0.0;
        let mut next_jump = if lambda > 0.0 {
            rng.sample::<f64, _>(Exp1) / lambda
        } else {
            f64::INFINITY
        };
        while t < self.cfg.t_max {
            let t_end = next_jump.min(t + self.cfg.dt_max).min(self.cfg.t_max);
            let dt = t_end - t;
            let z: f64 = rng.sample(StandardNormal);
            let x_end = x + self.drift * dt + self.sigma * dt.sqrt() * z;
            if x_end <= lower {
                return exit(lower, t_end);
            }
            if x_end >= upper {
                return exit(upper, t_end);
            }
            if self.cfg.bridge {
                let crossing = |a: f64| (-2.0 * (x - a) * (x_end - a) / (variance_rate * dt)).exp();
                let (p_lower, p_upper) = (crossing(lower), crossing(upper));
                let u: f64 = rng.gen();
                if u < p_lower {
                    return exit(lower, t_end);
                }
                if u < p_lower + (1.0 - p_lower) * p_upper {
                    return exit(upper, t_end);
                }
            }
            x = x_end;
            t = t_end;
            if t == next_jump {
                x += sample_jump(self.jumps, &mut rng);
                if x <= lower || x >= upper {
                    return exit(x, t);
                }
                next_jump += rng.sample::<f64, _>(Exp1) / lambda;
            }
        }
        PathOutcome {
            discounted: 0.0,
            exit_time: self.cfg.t_max,
            truncated: true,
        }
    }
}

/// Simulates the drifted process (drift `mu - gamma`) from `spec.x` until it
/// leaves `(spec.lower, spec.upper)`.
pub fn simulate_exit_expectation(
    model: &LevyModel,
    spec: ExitSpec,
    cfg: McConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    if !(spec.lower < spec.x && spec.x < spec.upper) {
        return Err(Error::Domain(format!(
            "start must lie strictly between the barriers (h = {}, x = {}, H = {})",
            spec.lower, spec.x, spec.upper
        )));
    }
    let sim = PathSimulator {
        jumps: model.jumps(),
        drift: model.mu() - model.market().gamma,
        sigma: model.market().sigma,
        spec,
        cfg,
    };
    let blocks = cfg.paths.div_ceil(BLOCK);
    let per_block: Vec<BlockStats> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stats = BlockStats::default();
            for path in b * BLOCK..((b + 1) * BLOCK).min(cfg.paths) {
                stats.push(&sim.run(path));
            }
            stats
        })
        .collect();
    let total = per_block
        .into_iter()
        .fold(BlockStats::default(), BlockStats::merge);

    let n = total.count as f64;
    let mean_and_se = |sum: f64, sum_sq: f64| {
        let mean = sum / n;
        let var = if total.count > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };
    let (estimate, stderr) = mean_and_se(total.sum, total.sum_sq);
    let (mean_exit_time, exit_time_stderr) = mean_and_se(total.time_sum, total.time_sum_sq);
    let truncated_fraction = total.truncated as f64 / n;

    let payoff_bound = spec
        .payoff
        .at(spec.upper, spec.upper)
        .max(spec.payoff.at(spec.lower, spec.upper));
    let truncated_mass = truncated_fraction * (-spec.alpha * cfg.t_max).exp() * payoff_bound;
    let truncation_warning = (truncated_mass > 0.1 * stderr).then(|| {
        format!(
            "{:.3e} of paths truncated at t_max = {}; truncated mass {truncated_mass:.3e} exceeds 10% of the standard error {stderr:.3e}",
            truncated_fraction, cfg.t_max
        )
    });

    Ok(McEstimate {
        estimate,
        stderr,
        truncated_fraction,
        mean_exit_time,
        exit_time_stderr,
        truncation_warning,
    })
}
