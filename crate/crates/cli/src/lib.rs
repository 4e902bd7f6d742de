//! Command-line front end for the stock-loan pricer.
//!
//! Exit codes: 0 success, 2 invalid input (the violated assumption is
//! named on stderr), 3 numerical failure, 4 validation mismatch.
//! Data goes to stdout; diagnostics go to stderr.

pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stockloan::mc::McConfig;
use stockloan::pricing::{quote, ContractQuote};
use stockloan::{solve_roots, Error, Exponent};

use config::{ConfigFile, Contract};
use output::{error_field, num, opt_num, write_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "stockloan",
    version,
    about = "Price stock loans with forced liquidation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryKey {
    /// Initial collateral value e^x.
    X,
    Lambda,
    Q,
    Gamma,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file (keys: r, delta, sigma, gamma, q, d, lambda, p, eta, qw, theta, s0, grid_n, refine).
    #[arg(long, global = true, env = "STOCKLOAN_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long = "grid-n", global = true)]
    pub grid_n: Option<usize>,
    #[arg(long = "no-refine", global = true)]
    pub no_refine: bool,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub qw: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Initial collateral value e^x.
    #[arg(long, global = true)]
    pub s0: Option<f64>,
}

impl CommonArgs {
    fn as_overrides(&self) -> ConfigFile {
        ConfigFile {
            r: self.r,
            delta: self.delta,
            sigma: self.sigma,
            gamma: self.gamma,
            q: self.q,
            d: self.d,
            lambda: self.lambda,
            p: self.p.clone(),
            eta: self.eta.clone(),
            qw: self.qw.clone(),
            theta: self.theta.clone(),
            s0: self.s0,
            grid_n: self.grid_n,
            refine: self.no_refine.then_some(false),
        }
    }

    pub fn contract(&self) -> Result<Contract, String> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Ok(Contract::from_file(&file.overlay(self.as_overrides())))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Client value, lender value and rational premium of one contract.
    Price,
    /// Re-price while one parameter moves over a linear range.
    Sweep {
        #[arg(long, value_enum)]
        vary: VaryKey,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Rational values of c for lambda in {1, 2} and q in {30, ..., 100}.
    Table,
    /// Compare the analytic transform with Monte Carlo on a fixed suite.
    Validate {
        #[arg(long, default_value_t = 200_000)]
        paths: u64,
        #[arg(long, default_value_t = McConfig::default().seed)]
        seed: u64,
        #[arg(long = "dt-max", default_value_t = 1e-3)]
        dt_max: f64,
        /// Test hook: offset added to every analytic value.
        #[arg(
            long = "perturb-analytic",
            hide = true,
            default_value_t = 0.0,
            allow_hyphen_values = true
        )]
        perturb_analytic: f64,
    },
    /// Roots of the drifted exponent at alpha = r - gamma.
    Roots {
        /// Solve at this alpha instead of r - gamma.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            ..Default::default()
        }
    }

    fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        stderr.push('\n');
        Outcome {
            stdout: String::new(),
            stderr,
            code,
        }
    }

    fn from_error(err: &Error) -> Self {
        let code = if err.is_validation() {
            EXIT_INVALID
        } else {
            EXIT_NUMERICAL
        };
        Outcome::fail(code, format!("error: {err}"))
    }
}

/// Parses arguments and runs the command.
pub fn run_from<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome::fail(code, text.trim_end())
            } else {
                Outcome::ok(text)
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let contract = match cli.common.contract() {
        Ok(c) => c,
        Err(msg) => return Outcome::fail(EXIT_INVALID, format!("error: {msg}")),
    };
    let format = cli.common.format;
    match &cli.command {
        Command::Price => cmd_price(&contract, format.unwrap_or(Format::Human)),
        Command::Sweep {
            vary,
            from,
            to,
            points,
        } => cmd_sweep(
            &contract,
            *vary,
            *from,
            *to,
            *points,
            format.unwrap_or(Format::Csv),
        ),
        Command::Table => cmd_table(&contract, format.unwrap_or(Format::Csv)),
        Command::Validate {
            paths,
            seed,
            dt_max,
            perturb_analytic,
        } => cmd_validate(
            McConfig {
                paths: *paths,
                seed: *seed,
                dt_max: *dt_max,
                ..McConfig::default()
            },
            *perturb_analytic,
            format.unwrap_or(Format::Human),
        ),
        Command::Roots { alpha } => cmd_roots(&contract, *alpha, format.unwrap_or(Format::Human)),
    }
}

fn price_contract(contract: &Contract) -> stockloan::Result<ContractQuote> {
    let model = contract.model()?;
    quote(&model, contract.x()?, contract.search)
}

#[derive(Serialize)]
struct PriceReport {
    s0: f64,
    v: f64,
    lender_u: f64,
    premium_c: f64,
    u_star: Option<f64>,
    grid_n: usize,
    refined: bool,
    condition_worst: f64,
    clamped: f64,
}

impl PriceReport {
    fn new(s0: f64, quote: &ContractQuote) -> Self {
        let val = &quote.valuation;
        PriceReport {
            s0,
            v: val.v,
            lender_u: quote.lender,
            premium_c: quote.premium,
            u_star: val.u_star,
            grid_n: val.grid_n,
            refined: val.refined,
            condition_worst: val.condition_worst,
            clamped: val.clamped.max(quote.premium_clamped),
        }
    }
}

pub fn cmd_price(contract: &Contract, format: Format) -> Outcome {
    let quote = match price_contract(contract) {
        Ok(q) => q,
        Err(e) => return Outcome::from_error(&e),
    };
    let report = PriceReport::new(contract.s0, &quote);
    let mut stderr = String::new();
    if report.clamped > 0.0 {
        let _ = writeln!(
            stderr,
            "warning: clamped negative roundoff of {:.3e}",
            report.clamped
        );
    }
    let stdout = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
        Format::Csv => write_csv(
            &[
                "s0",
                "v",
                "lender_u",
                "premium_c",
                "u_star",
                "grid_n",
                "refined",
                "condition_worst",
            ],
            &[vec![
                num(report.s0),
                num(report.v),
                num(report.lender_u),
                num(report.premium_c),
                opt_num(report.u_star),
                report.grid_n.to_string(),
                u8::from(report.refined).to_string(),
                num(report.condition_worst),
            ]],
        ),
        Format::Human => {
            let mut s = String::new();
            let _ = writeln!(s, "collateral e^x      {:.2}", report.s0);
            let _ = writeln!(s, "client value v      {:.2}", report.v);
            let _ = writeln!(s, "lender value u(x)   {:.2}", report.lender_u);
            let _ = writeln!(s, "rational premium c  {:.2}", report.premium_c);
            match report.u_star {
                Some(u) => {
                    let _ = writeln!(s, "redemption ratio u* {u:.6}");
                }
                None => {
                    let _ = writeln!(s, "redemption ratio u* none (immediate)");
                }
            }
            let _ = writeln!(
                s,
                "grid_n {}, refined {}, worst condition {:.3e}",
                report.grid_n, report.refined, report.condition_worst
            );
            s
        }
    };
    Outcome {
        stdout,
        stderr,
        code: EXIT_OK,
    }
}

/// One priced row of a sweep or table.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub key: Vec<f64>,
    pub v: Option<f64>,
    pub lender_u: Option<f64>,
    pub premium_c: Option<f64>,
    pub u_star: Option<f64>,
    pub error: Option<String>,
}

impl Row {
    fn priced(key: Vec<f64>, result: stockloan::Result<ContractQuote>) -> Row {
        match result {
            Ok(q) => Row {
                key,
                v: Some(q.valuation.v),
                lender_u: Some(q.lender),
                premium_c: Some(q.premium),
                u_star: q.valuation.u_star,
                error: None,
            },
            Err(e) => Row {
                key,
                v: None,
                lender_u: None,
                premium_c: None,
                u_star: None,
                error: Some(e.to_string()),
            },
        }
    }

    fn csv_fields(&self) -> Vec<String> {
        self.key
            .iter()
            .map(|&k| num(k))
            .chain([
                opt_num(self.v),
                opt_num(self.lender_u),
                opt_num(self.premium_c),
                opt_num(self.u_star),
                self.error.as_deref().map(error_field).unwrap_or_default(),
            ])
            .collect()
    }
}

fn render_rows(key_names: &[&str], rows: &[Row], format: Format) -> String {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct JsonRow<'a> {
                #[serde(flatten)]
                key: std::collections::BTreeMap<&'a str, f64>,
                #[serde(flatten)]
                row: &'a Row,
            }
            let out: Vec<_> = rows
                .iter()
                .map(|row| JsonRow {
                    key: key_names
                        .iter()
                        .copied()
                        .zip(row.key.iter().copied())
                        .collect(),
                    row,
                })
                .collect();
            let mut value = serde_json::to_value(&out).expect("serializable");
            if let Some(items) = value.as_array_mut() {
                for item in items {
                    if let Some(obj) = item.as_object_mut() {
                        obj.remove("key");
                    }
                }
            }
            serde_json::to_string_pretty(&value).expect("serializable") + "\n"
        }
        Format::Csv => {
            let header: Vec<&str> = key_names
                .iter()
                .copied()
                .chain(["v", "lender_u", "premium_c", "u_star", "error"])
                .collect();
            let fields: Vec<Vec<String>> = rows.iter().map(Row::csv_fields).collect();
            write_csv(&header, &fields)
        }
        Format::Human => {
            let mut s = String::new();
            for name in key_names {
                let _ = write!(s, "{name:>10}");
            }
            let _ = writeln!(s, "{:>10}{:>10}{:>10}{:>10}", "v", "u(x)", "c", "u*");
            for row in rows {
                for k in &row.key {
                    let _ = write!(s, "{k:>10.4}");
                }
                match &row.error {
                    Some(e) => {
                        let _ = writeln!(s, "  error: {e}");
                    }
                    None => {
                        let cell = |v: Option<f64>| {
                            v.map(|v| format!("{v:>10.2}"))
                                .unwrap_or(format!("{:>10}", "-"))
                        };
                        let u = row
                            .u_star
                            .map(|u| format!("{u:>10.4}"))
                            .unwrap_or(format!("{:>10}", "-"));
                        let _ = writeln!(
                            s,
                            "{}{}{}{u}",
                            cell(row.v),
                            cell(row.lender_u),
                            cell(row.premium_c)
                        );
                    }
                }
            }
            s
        }
    }
}

fn failed_rows_note(rows: &[Row]) -> String {
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed == 0 {
        String::new()
    } else {
        format!(
            "warning: {failed} of {} rows failed; see the error column\n",
            rows.len()
        )
    }
}

/// Values of a linear sweep, endpoints included.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub fn sweep_rows(contract: &Contract, vary: VaryKey, values: &[f64]) -> Vec<Row> {
    values
        .iter()
        .map(|&value| {
            let mut c = contract.clone();
            match vary {
                VaryKey::X => c.s0 = value,
                VaryKey::Lambda => c.jumps.lambda = value,
                VaryKey::Q => c.market.q = value,
                VaryKey::Gamma => c.market.gamma = value,
            }
            Row::priced(vec![value], price_contract(&c))
        })
        .collect()
}

pub fn cmd_sweep(
    contract: &Contract,
    vary: VaryKey,
    from: f64,
    to: f64,
    points: usize,
    format: Format,
) -> Outcome {
    if points == 0 || !from.is_finite() || !to.is_finite() {
        return Outcome::fail(
            EXIT_INVALID,
            "error: sweep needs finite --from/--to and --points >= 1",
        );
    }
    let rows = sweep_rows(contract, vary, &linspace(from, to, points));
    Outcome {
        stdout: render_rows(&["vary_value"], &rows, format),
        stderr: failed_rows_note(&rows),
        code: EXIT_OK,
    }
}

pub const TABLE_LAMBDAS: [f64; 2] = [1.0, 2.0];
pub const TABLE_PRINCIPALS: [f64; 8] = [30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

pub fn table_rows(contract: &Contract) -> Vec<Row> {
    TABLE_LAMBDAS
        .iter()
        .flat_map(|&lambda| TABLE_PRINCIPALS.iter().map(move |&q| (lambda, q)))
        .map(|(lambda, q)| {
            let mut c = contract.clone();
            c.jumps.lambda = lambda;
            c.market.q = q;
            Row::priced(vec![lambda, q], price_contract(&c))
        })
        .collect()
}

pub fn cmd_table(contract: &Contract, format: Format) -> Outcome {
    let rows = table_rows(contract);
    let stdout = match format {
        Format::Human => {
            let mut s = String::new();
            for &lambda in &TABLE_LAMBDAS {
                let panel: Vec<&Row> = rows.iter().filter(|r| r.key[0] == lambda).collect();
                let _ = writeln!(
                    s,
                    "lambda = {lambda}  (gamma = {}, e^x = {})",
                    contract.market.gamma, contract.s0
                );
                let line = |label: &str, f: &dyn Fn(&Row) -> String| {
                    let cells: Vec<String> = panel.iter().map(|r| format!("{:>8}", f(r))).collect();
                    format!("{label:>6}{}\n", cells.concat())
                };
                let show = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or("err".into());
                s += &line("q", &|r| format!("{}", r.key[1]));
                s += &line("u(x)", &|r| show(r.lender_u));
                s += &line("c", &|r| show(r.premium_c));
                s.push('\n');
            }
            s
        }
        _ => render_rows(&["lambda", "q"], &rows, format),
    };
    Outcome {
        stdout,
        stderr: failed_rows_note(&rows),
        code: EXIT_OK,
    }
}

pub fn cmd_validate(cfg: McConfig, perturb: f64, format: Format) -> Outcome {
    let comparisons = match validate::run_suite(cfg, perturb) {
        Ok(c) => c,
        Err(e) => return Outcome::from_error(&e),
    };
    let mut stderr = String::new();
    for c in &comparisons {
        if let Some(w) = &c.mc.truncation_warning {
            let _ = writeln!(stderr, "warning: {}: {w}", c.name);
        }
    }
    let all_pass = comparisons.iter().all(|c| c.passed());
    let stdout = match format {
        Format::Human => {
            let mut s = format!(
                "{:<18}{:>14}{:>14}{:>12}{:>9}  result\n",
                "case", "analytic", "mc", "stderr", "z"
            );
            for c in &comparisons {
                let _ = writeln!(
                    s,
                    "{:<18}{:>14.6}{:>14.6}{:>12.6}{:>9.3}  {}",
                    c.name,
                    c.analytic,
                    c.mc.estimate,
                    c.mc.stderr,
                    c.z(),
                    if c.passed() { "ok" } else { "FAIL" }
                );
            }
            let _ = writeln!(
                s,
                "{} ({} paths, seed {}, dt_max {})",
                if all_pass {
                    "all cases within 3 standard errors"
                } else {
                    "validation FAILED"
                },
                cfg.paths,
                cfg.seed,
                cfg.dt_max
            );
            s
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = comparisons
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        i.to_string(),
                        num(c.analytic),
                        num(c.mc.estimate),
                        num(c.mc.stderr),
                        num(c.z()),
                        num(c.mc.truncated_fraction),
                    ]
                })
                .collect();
            write_csv(
                &[
                    "case",
                    "analytic",
                    "mc",
                    "stderr",
                    "z",
                    "truncated_fraction",
                ],
                &rows,
            )
        }
        Format::Json => {
            let items: Vec<_> = comparisons
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "case": c.name,
                        "analytic": c.analytic,
                        "mc": c.mc.estimate,
                        "stderr": c.mc.stderr,
                        "z": c.z(),
                        "truncated_fraction": c.mc.truncated_fraction,
                        "passed": c.passed(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&items).expect("serializable") + "\n"
        }
    };
    if !all_pass {
        let _ = writeln!(
            stderr,
            "error: analytic and Monte Carlo values disagree beyond 3 standard errors"
        );
    }
    Outcome {
        stdout,
        stderr,
        code: if all_pass { EXIT_OK } else { EXIT_VALIDATION },
    }
}

pub fn cmd_roots(contract: &Contract, alpha: Option<f64>, format: Format) -> Outcome {
    let model = match contract.model() {
        Ok(m) => m,
        Err(e) => return Outcome::from_error(&e),
    };
    let jumps = model.jumps();
    let alpha = alpha.unwrap_or(model.market().r - model.market().gamma);
    let (x_star, minimum) = model.exponent_minimum(Exponent::Drifted);
    if jumps.lambda == 0.0 {
        return Outcome::ok(format!(
            "lambda = 0: the contract is riskless (v = (e^x - q)^+) and the root machinery is bypassed\n\
             alpha = {alpha}, M(G~) = {minimum}\n"
        ));
    }
    let roots = match solve_roots(&model, alpha) {
        Ok(r) => r,
        Err(e) => return Outcome::from_error(&e),
    };
    let interlaced = roots.is_interlaced(jumps);
    let labelled: Vec<(String, f64)> = roots
        .gamma_mag
        .iter()
        .enumerate()
        .rev()
        .map(|(j, g)| (format!("-g{}", j + 1), -g))
        .chain(
            roots
                .beta
                .iter()
                .enumerate()
                .map(|(i, b)| (format!("b{}", i + 1), *b)),
        )
        .collect();
    let residuals = roots.residuals(&model);
    let stdout = match format {
        Format::Json => {
            serde_json::to_string_pretty(&serde_json::json!({
                "alpha": alpha,
                "minimum": minimum,
                "x_star": x_star,
                "roots": labelled.iter().zip(&residuals).map(|((name, x), r)| {
                    serde_json::json!({"label": name, "root": x, "residual": r})
                }).collect::<Vec<_>>(),
                "interlaced": interlaced,
            }))
            .expect("serializable")
                + "\n"
        }
        Format::Csv => write_csv(
            &["index", "root", "residual"],
            &residuals
                .iter()
                .zip(&labelled)
                .enumerate()
                .map(|(i, (r, (_, x)))| vec![i.to_string(), num(*x), num(*r)])
                .collect::<Vec<_>>(),
        ),
        Format::Human => {
            let mut s = String::new();
            let _ = writeln!(s, "alpha = {alpha}");
            let _ = writeln!(s, "M(G~) = {minimum:.12} at x* = {x_star:.12}");
            let _ = writeln!(s, "{} roots (bK: beta_K, -gK: -gamma_K)", labelled.len());
            for ((name, x), r) in labelled.iter().zip(&residuals) {
                let _ = writeln!(s, "  {name:>5} = {x:>22.15}   residual {r:.2e}");
            }
            let _ = writeln!(
                s,
                "interlacing: {}",
                if interlaced { "OK" } else { "VIOLATED" }
            );
            s
        }
    };
    Outcome {
        stdout,
        stderr: String::new(),
        code: if interlaced { EXIT_OK } else { EXIT_NUMERICAL },
    }
}
