//! Discounted payoff at the first exit of the drifted process from `(h, H)`.
//!
//! With roots `beta_k`, `-gamma_l` of `G~ - alpha` and `xbar = e^{h-H}`,
//!
//! ```text
//! E[e^{-alpha tau} f(X_tau)] = w(x) N^{-1} f
//! ```
//!
//! where `w(x) = (e^{beta_k (x-H)}, e^{-gamma_l (x-h)})` and `N` matches
//! the exit conditions at both barriers (rows for the value at the barrier
//! and for each exponential overshoot component).

use crate::error::{Error, Result};
use crate::model::JumpParams;
use crate::roots::RootSet;

/// Two flat barriers around a starting log-price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierProblem {
    /// Lower log-barrier.
    pub lower: f64,
    /// Upper log-barrier.
    pub upper: f64,
    /// Starting log-price.
    pub x: f64,
    /// Discount rate; negative values grow with the exit time.
    pub alpha: f64,
}

impl BarrierProblem {
    pub fn new(lower: f64, upper: f64, x: f64, alpha: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::Domain(format!(
                "barriers must satisfy h < H (h = {lower}, H = {upper})"
            )));
        }
        if !(lower < x && x < upper) {
            return Err(Error::Domain(format!(
                "start must lie strictly between the barriers (h = {lower}, x = {x}, H = {upper})"
            )));
        }
        Ok(BarrierProblem {
            lower,
            upper,
            x,
            alpha,
        })
    }

    /// `e^{h - H}`.
    pub fn xbar(&self) -> f64 {
        (self.lower - self.upper).exp()
    }
}

/// Payoff column `(f_0^u, ..., f_m^u, f_0^d, ..., f_n^d)`.
///
/// `f_0^u = f(H)`, `f_i^u = int_0^inf f(y+H) e^{-eta_i y} dy`,
/// `f_0^d = f(h)`, `f_j^d = int_{-inf}^0 f(y+h) e^{theta_j y} dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffVector {
    pub f_u: Vec<f64>,
    pub f_d: Vec<f64>,
}

impl PayoffVector {
    /// Payoff identically one.
    pub fn constant_one(jumps: &JumpParams) -> Self {
        PayoffVector {
            f_u: std::iter::once(1.0)
                .chain(jumps.eta.iter().map(|e| 1.0 / e))
                .collect(),
            f_d: std::iter::once(1.0)
                .chain(jumps.theta.iter().map(|t| 1.0 / t))
                .collect(),
        }
    }

    pub fn to_column(&self) -> Vec<f64> {
        self.f_u.iter().chain(&self.f_d).copied().collect()
    }

    pub fn add(&self, other: &PayoffVector) -> PayoffVector {
        let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        PayoffVector {
            f_u: sum(&self.f_u, &other.f_u),
            f_d: sum(&self.f_d, &other.f_d),
        }
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    size: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(size: usize) -> Self {
        SquareMatrix {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let size = rows.len();
        assert!(
            rows.iter().all(|r| r.len() == size),
            "matrix must be square"
        );
        SquareMatrix {
            size,
            data: rows.concat(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.size + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.size + j]
    }
}

/// Solution of a dense linear system with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    /// Ratio of the largest to the smallest pivot magnitude.
    pub condition: f64,
    /// `||N x - f||_inf` after one refinement step.
    pub residual: f64,
}

struct Lu {
    lu: SquareMatrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(matrix: &SquareMatrix) -> Result<(Lu, f64)> {
        let n = matrix.size();
        let mut lu = matrix.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale: Vec<f64> = (0..n)
            .map(|i| matrix.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let (mut max_pivot, mut min_pivot) = (0.0f64, f64::INFINITY);

        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&a, &b| lu[(a, col)].abs().total_cmp(&lu[(b, col)].abs()))
                .expect("non-empty range");
            if pivot_row != col {
                for j in 0..n {
                    lu.data.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[(col, col)];
            max_pivot = max_pivot.max(pivot.abs());
            min_pivot = min_pivot.min(pivot.abs());
            if !(pivot.abs() >= 1e-13 * scale[perm[col]]) || scale[perm[col]] == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot,
                    column: col,
                    condition: max_pivot / min_pivot,
                });
            }
            for i in col + 1..n {
                let factor = lu[(i, col)] / pivot;
                lu[(i, col)] = factor;
                for j in col + 1..n {
                    let delta = factor * lu[(col, j)];
                    lu[(i, j)] -= delta;
                }
            }
        }
        let condition = if n == 0 { 1.0 } else { max_pivot / min_pivot };
        Ok((Lu { lu, perm }, condition))
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.size();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[(i, j)] * y[j];
            }
            y[i] /= self.lu[(i, i)];
        }
        y
    }
}

fn residual_inf(matrix: &SquareMatrix, x: &[f64], rhs: &[f64]) -> Vec<f64> {
    matrix
        .mul_vec(x)
        .iter()
        .zip(rhs)
        .map(|(ax, b)| b - ax)
        .collect()
}

/// Gaussian elimination with partial pivoting and one step of iterative
/// refinement.
pub fn solve_linear(matrix: &SquareMatrix, rhs: &[f64]) -> Result<LinearSolution> {
    if rhs.len() != matrix.size() {
        return Err(Error::Domain(format!(
            "right-hand side has length {} for a {}x{} system",
            rhs.len(),
            matrix.size(),
            matrix.size()
        )));
    }
    let (lu, condition) = Lu::factor(matrix)?;
    let mut x = lu.solve(rhs);
    let correction = lu.solve(&residual_inf(matrix, &x, rhs));
    for (xi, ci) in x.iter_mut().zip(&correction) {
        *xi += ci;
    }
    let residual = residual_inf(matrix, &x, rhs)
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(LinearSolution {
        x,
        condition,
        residual,
    })
}

/// The exit-condition matrix `N` and the weight row `w(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitSystem {
    pub matrix: SquareMatrix,
    pub weights: Vec<f64>,
}

fn check_distinct(roots: &RootSet) -> Result<()> {
    if roots.central_gap() < 1e-8 {
        return Err(Error::DegenerateRoots {
            alpha: roots.alpha,
            lower: -roots.gamma_mag[0],
            upper: roots.beta[0],
        });
    }
    Ok(())
}

/// Assembles `N` and `w(x)`. Columns run over `beta_1..beta_{m+1}` then
/// `gamma_1..gamma_{n+1}`; rows over the upper barrier value, the `eta_i`
/// overshoot components, the lower barrier value, then the `theta_j`
/// components.
pub fn build_system(
    problem: &BarrierProblem,
    roots: &RootSet,
    jumps: &JumpParams,
) -> Result<ExitSystem> {
    check_distinct(roots)?;
    let (m, n) = (roots.m(), roots.n());
    if m != jumps.m() || n != jumps.n() {
        return Err(Error::Domain(format!(
            "root set has m = {m}, n = {n} but jumps have m = {}, n = {}",
            jumps.m(),
            jumps.n()
        )));
    }
    let span = problem.lower - problem.upper;
    let size = m + n + 2;
    let mut matrix = SquareMatrix::zeros(size);

    for (k, &beta) in roots.beta.iter().enumerate() {
        let decay = (beta * span).exp();
        matrix[(0, k)] = 1.0;
        for (i, &eta) in jumps.eta.iter().enumerate() {
            matrix[(1 + i, k)] = 1.0 / (eta - beta);
        }
        matrix[(m + 1, k)] = decay;
        for (j, &theta) in jumps.theta.iter().enumerate() {
            matrix[(m + 2 + j, k)] = decay / (theta + beta);
        }
    }
    for (l, &gamma) in roots.gamma_mag.iter().enumerate() {
        let col = m + 1 + l;
        let decay = (gamma * span).exp();
        matrix[(0, col)] = decay;
        for (i, &eta) in jumps.eta.iter().enumerate() {
            matrix[(1 + i, col)] = decay / (eta + gamma);
        }
        matrix[(m + 1, col)] = 1.0;
        for (j, &theta) in jumps.theta.iter().enumerate() {
            matrix[(m + 2 + j, col)] = 1.0 / (theta - gamma);
        }
    }

    let weights = roots
        .beta
        .iter()
        .map(|b| (b * (problem.x - problem.upper)).exp())
        .chain(
            roots
                .gamma_mag
                .iter()
                .map(|g| (-g * (problem.x - problem.lower)).exp()),
        )
        .collect();
    Ok(ExitSystem { matrix, weights })
}

/// Raw transform value with the linear-system condition estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: f64,
    pub condition: f64,
}

/// `E[e^{-alpha tau} f(X_tau)]` for the drifted process started at `problem.x`.
///
/// The value is not clamped; small negative results from roundoff are
/// passed through.
pub fn expected_discounted_payoff(
    problem: &BarrierProblem,
    roots: &RootSet,
    jumps: &JumpParams,
    payoff: &PayoffVector,
) -> Result<TransformValue> {
    if problem.alpha != roots.alpha {
        return Err(Error::Domain(format!(
            "problem alpha {} differs from root alpha {}",
            problem.alpha, roots.alpha
        )));
    }
    let system = build_system(problem, roots, jumps)?;
    let column = payoff.to_column();
    if column.len() != system.matrix.size() {
        return Err(Error::Domain(format!(
            "payoff vector has length {} but the system has size {}",
            column.len(),
            system.matrix.size()
        )));
    }
    let solution = solve_linear(&system.matrix, &column)?;
    let value = system
        .weights
        .iter()
        .zip(&solution.x)
        .map(|(w, c)| w * c)
        .sum();
    Ok(TransformValue {
        value,
        condition: solution.condition,
    })
}
