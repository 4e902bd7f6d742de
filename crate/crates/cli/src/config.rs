//! Contract configuration: built-in defaults, overridden by a JSON file,
//! overridden by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stockloan::{JumpParams, LevyModel, MarketParams, SearchOptions};

/// Every key is optional; missing keys fall back to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub r: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub q: Option<f64>,
    pub d: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub qw: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    /// Initial collateral value `e^x`.
    pub s0: Option<f64>,
    pub grid_n: Option<usize>,
    pub refine: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Values in `other` take precedence.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            r: other.r.or(self.r),
            delta: other.delta.or(self.delta),
            sigma: other.sigma.or(self.sigma),
            gamma: other.gamma.or(self.gamma),
            q: other.q.or(self.q),
            d: other.d.or(self.d),
            lambda: other.lambda.or(self.lambda),
            p: other.p.or(self.p),
            eta: other.eta.or(self.eta),
            qw: other.qw.or(self.qw),
            theta: other.theta.or(self.theta),
            s0: other.s0.or(self.s0),
            grid_n: other.grid_n.or(self.grid_n),
            refine: other.refine.or(self.refine),
        }
    }
}

/// Fully resolved contract.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub market: MarketParams,
    pub jumps: JumpParams,
    pub s0: f64,
    pub search: SearchOptions,
}

impl Default for Contract {
    fn default() -> Self {
        Contract {
            market: MarketParams {
                r: 0.05,
                delta: 0.02,
                sigma: 0.15,
                gamma: 0.07,
                q: 80.0,
                d: 80.0 / 90.0,
            },
            jumps: JumpParams {
                lambda: 0.5,
                p: vec![0.09],
                eta: vec![2.3],
                qw: vec![0.91],
                theta: vec![1.8],
            },
            s0: 100.0,
            search: SearchOptions::default(),
        }
    }
}

impl Contract {
    pub fn from_file(file: &ConfigFile) -> Contract {
        let base = Contract::default();
        Contract {
            market: MarketParams {
                r: file.r.unwrap_or(base.market.r),
                delta: file.delta.unwrap_or(base.market.delta),
                sigma: file.sigma.unwrap_or(base.market.sigma),
                gamma: file.gamma.unwrap_or(base.market.gamma),
                q: file.q.unwrap_or(base.market.q),
                d: file.d.unwrap_or(base.market.d),
            },
            jumps: JumpParams {
                lambda: file.lambda.unwrap_or(base.jumps.lambda),
                p: file.p.clone().unwrap_or(base.jumps.p),
                eta: file.eta.clone().unwrap_or(base.jumps.eta),
                qw: file.qw.clone().unwrap_or(base.jumps.qw),
                theta: file.theta.clone().unwrap_or(base.jumps.theta),
            },
            s0: file.s0.unwrap_or(base.s0),
            search: SearchOptions {
                grid_n: file.grid_n.unwrap_or(base.search.grid_n),
                refine: file.refine.unwrap_or(base.search.refine),
            },
        }
    }

    pub fn model(&self) -> stockloan::Result<LevyModel> {
        LevyModel::new(self.market, self.jumps.clone())
    }

    /// Log initial collateral price.
    pub fn x(&self) -> stockloan::Result<f64> {
        if self.s0 > 0.0 && self.s0.is_finite() {
            Ok(self.s0.ln())
        } else {
            Err(stockloan::Error::InvalidParameter {
                name: "s0",
                requirement: "s0>0",
                value: self.s0.to_string(),
            })
        }
    }
}
