//! Zero-sum matrix games.
//!
//! The row player maximizes and the column player minimizes. Games without a
//! pure saddle point are solved by shifting the payoffs to strict positivity
//! and running a dense tableau simplex on
//!
//! ```text
//! maximize 1'q  subject to  B q <= 1,  q >= 0
//! ```
//!
//! where `B = A + shift`. The optimal `q` normalizes to the column player's
//! strategy; the slack reduced costs give the row player's strategy. Pivoting
//! follows Bland's rule, so degenerate tableaus cannot cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance for probability vectors.
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Optimality tolerance for guarantee inequalities.
pub const OPTIMALITY_TOL: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix by evaluating `f(i, j)` at every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Minimax value and a pair of optimal mixed strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGameSolution {
    pub value: f64,
    /// Row (maximizer) strategy.
    pub x: Vec<f64>,
    /// Column (minimizer) strategy.
    pub y: Vec<f64>,
}

/// Worst-case payoff of the row strategy `x`: `min_j x'A e_j`.
pub fn row_security(a: &Matrix, x: &[f64]) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| x[i] * a.get(i, j)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Worst-case payoff of the column strategy `y`: `max_i e_i'A y`.
pub fn col_security(a: &Matrix, y: &[f64]) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().zip(y).map(|(v, p)| v * p).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves the mixed extension of the zero-sum game with payoff matrix `a`.
///
/// Output is a deterministic function of the input. When several optimal
/// strategies exist, the one reached by the pivot order is returned.
pub fn solve_matrix_game(a: &Matrix) -> Result<MatrixGameSolution> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch(format!("empty {m}x{n} matrix game")));
    }
    if let Some(bad) = a.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry(format!("matrix game entry {bad}")));
    }

    if let Some(sol) = pure_saddle(a) {
        return Ok(sol);
    }
    simplex_solve(a)
}

fn unit(len: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[at] = 1.0;
    v
}

/// Returns the pure solution when maximin equals minimax over pure actions.
fn pure_saddle(a: &Matrix) -> Option<MatrixGameSolution> {
    let (m, n) = (a.rows(), a.cols());
    let mut best_row = 0;
    let mut lower = f64::NEG_INFINITY;
    for i in 0..m {
        let row_min = a.row(i).iter().copied().fold(f64::INFINITY, f64::min);
        if row_min > lower {
            lower = row_min;
            best_row = i;
        }
    }
    let mut best_col = 0;
    let mut upper = f64::INFINITY;
    for j in 0..n {
        let col_max = (0..m).map(|i| a.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
        if col_max < upper {
            upper = col_max;
            best_col = j;
        }
    }
    (lower == upper).then(|| MatrixGameSolution {
        value: lower,
        x: unit(m, best_row),
        y: unit(n, best_col),
    })
}

fn normalize(v: &mut [f64]) {
    for p in v.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    for p in v.iter_mut() {
        *p /= total;
    }
}

fn simplex_solve(a: &Matrix) -> Result<MatrixGameSolution> {
    let (m, n) = (a.rows(), a.cols());
    let min_entry = a.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min_entry;

    // Columns: q_0..q_{n-1}, slack_0..slack_{m-1}, rhs.
    let width = n + m + 1;
    let rhs = n + m;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        for (dst, &x) in row.iter_mut().zip(a.row(i)) {
            *dst = x + shift;
        }
        row[n + i] = 1.0;
        row[rhs] = 1.0;
    }
    // Objective row holds reduced costs; its rhs holds -z.
    let obj = m * width;
    for j in 0..n {
        t[obj + j] = 1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (m + n) * (m + n) + 100;
    let mut pivots = 0;
    while let Some(enter) = (0..n + m).find(|&j| t[obj + j] > PIVOT_TOL) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[i * width + enter];
            if coef > PIVOT_TOL {
                let ratio = t[i * width + rhs] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= PIVOT_TOL * (1.0 + best.abs());
                        if ratio < best && !tie || tie && basis[i] < basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::SolverDefect("an unbounded program"));
        };
        pivot(&mut t, width, m, row, enter);
        basis[row] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SolverDefect("a pivot cycle"));
        }
    }

    let z = -t[obj + rhs];
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::SolverDefect("a non-positive objective"));
    }
    let mut y = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            y[b] = t[i * width + rhs];
        }
    }
    let mut x: Vec<f64> = (0..m).map(|i| -t[obj + n + i]).collect();
    normalize(&mut x);
    normalize(&mut y);

    Ok(MatrixGameSolution {
        value: 1.0 / z - shift,
        x,
        y,
    })
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    t[row * width + col] = 1.0;
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for r in 0..=m {
        if r == row {
            continue;
        }
        let factor = t[r * width + col];
        if factor == 0.0 {
            continue;
        }
        let dst = &mut t[r * width..(r + 1) * width];
        for (d, s) in dst.iter_mut().zip(&pivot_row) {
            *d -= factor * s;
        }
        dst[col] = 0.0;
    }
}
