//! Fixed suite comparing the analytic exit transform with simulation.

use stockloan::mc::{simulate_exit_expectation, ExitSpec, McConfig, McEstimate, McPayoff};
use stockloan::passage::{expected_discounted_payoff, BarrierProblem, PayoffVector};
use stockloan::payoff::call_payoff_vector;
use stockloan::{solve_roots, JumpParams, LevyModel, MarketParams, Result};

pub struct ValidationCase {
    pub name: &'static str,
    pub model: LevyModel,
    pub spec: ExitSpec,
}

fn table_market() -> MarketParams {
    MarketParams {
        r: 0.05,
        delta: 0.02,
        sigma: 0.15,
        gamma: 0.07,
        q: 80.0,
        d: 80.0 / 90.0,
    }
}

fn double_exp(lambda: f64) -> JumpParams {
    JumpParams::double_exponential(lambda, 0.09, 2.3, 1.8)
}

fn case(
    name: &'static str,
    market: MarketParams,
    jumps: JumpParams,
    (lower, upper, x): (f64, f64, f64),
    alpha: f64,
    payoff: McPayoff,
) -> ValidationCase {
    ValidationCase {
        name,
        model: LevyModel::new(market, jumps).expect("suite parameters are valid"),
        spec: ExitSpec {
            lower: lower.ln(),
            upper: upper.ln(),
            x: x.ln(),
            alpha,
            payoff,
        },
    }
}

/// Ten configurations; the first is the default contract with the
/// liquidation barrier at 90, redemption at 160 and collateral at 100.
pub fn default_suite() -> Vec<ValidationCase> {
    let call = McPayoff::Call { q: 80.0 };
    let corridor = (90.0, 160.0, 100.0);
    vec![
        case(
            "default",
            table_market(),
            double_exp(0.5),
            corridor,
            -0.02,
            call,
        ),
        case(
            "lambda1",
            table_market(),
            double_exp(1.0),
            corridor,
            -0.02,
            call,
        ),
        case(
            "lambda2",
            table_market(),
            double_exp(2.0),
            corridor,
            -0.02,
            call,
        ),
        case(
            "narrow",
            table_market(),
            double_exp(1.0),
            (90.0, 120.0, 100.0),
            -0.02,
            call,
        ),
        case(
            "near-liquidation",
            table_market(),
            double_exp(1.0),
            (90.0, 160.0, 93.0),
            -0.02,
            call,
        ),
        case(
            "discounted",
            table_market(),
            double_exp(0.5),
            corridor,
            0.05,
            call,
        ),
        case(
            "unit-payoff",
            table_market(),
            double_exp(1.0),
            corridor,
            0.03,
            McPayoff::Constant(1.0),
        ),
        case(
            "upper-exit-prob",
            table_market(),
            double_exp(1.0),
            corridor,
            0.0,
            McPayoff::UpperIndicator,
        ),
        case(
            "hyper-2x2",
            table_market(),
            JumpParams {
                lambda: 1.5,
                p: vec![0.05, 0.05],
                eta: vec![2.5, 5.0],
                qw: vec![0.5, 0.4],
                theta: vec![1.5, 4.0],
            },
            corridor,
            -0.02,
            call,
        ),
        case(
            "high-vol-1x2",
            MarketParams {
                sigma: 0.3,
                delta: 0.0,
                gamma: 0.08,
                q: 60.0,
                ..table_market()
            },
            JumpParams {
                lambda: 0.8,
                p: vec![0.2],
                eta: vec![3.0],
                qw: vec![0.5, 0.3],
                theta: vec![2.0, 6.0],
            },
            (70.0, 130.0, 85.0),
            0.0,
            McPayoff::Call { q: 60.0 },
        ),
    ]
}

fn payoff_vector(case: &ValidationCase) -> Result<PayoffVector> {
    let jumps = case.model.jumps();
    let ExitSpec { lower, upper, .. } = case.spec;
    Ok(match case.spec.payoff {
        McPayoff::Call { q } => call_payoff_vector(q, lower, upper, jumps)?,
        McPayoff::Constant(c) => {
            let ones = PayoffVector::constant_one(jumps);
            PayoffVector {
                f_u: ones.f_u.iter().map(|v| c * v).collect(),
                f_d: ones.f_d.iter().map(|v| c * v).collect(),
            }
        }
        McPayoff::UpperIndicator => PayoffVector {
            f_u: PayoffVector::constant_one(jumps).f_u,
            f_d: vec![0.0; jumps.n() + 1],
        },
    })
}

/// `w(x) N^{-1} f` for the case's payoff.
pub fn analytic_value(case: &ValidationCase) -> Result<f64> {
    let ExitSpec {
        lower,
        upper,
        x,
        alpha,
        ..
    } = case.spec;
    let roots = solve_roots(&case.model, alpha)?;
    let problem = BarrierProblem::new(lower, upper, x, alpha)?;
    Ok(
        expected_discounted_payoff(&problem, &roots, case.model.jumps(), &payoff_vector(case)?)?
            .value,
    )
}

pub struct Comparison {
    pub name: &'static str,
    pub analytic: f64,
    pub mc: McEstimate,
}

impl Comparison {
    pub fn z(&self) -> f64 {
        let diff = self.mc.estimate - self.analytic;
        if self.mc.stderr > 0.0 {
            diff / self.mc.stderr
        } else if diff.abs() <= 1e-9 * (1.0 + self.analytic.abs()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn passed(&self) -> bool {
        self.z().abs() <= 3.0
    }
}

/// Runs every case; `perturb` is added to each analytic value.
pub fn run_suite(cfg: McConfig, perturb: f64) -> Result<Vec<Comparison>> {
    default_suite()
        .iter()
        .map(|case| {
            Ok(Comparison {
                name: case.name,
                analytic: analytic_value(case)? + perturb,
                mc: simulate_exit_expectation(&case.model, case.spec, cfg)?,
            })
        })
        .collect()
}
