//! Solver and verification harness for zero-sum recursive stochastic games.
//!
//! A recursive game pays nothing before absorption. This crate computes
//! discounted and n-stage values through the Shapley operator, estimates the
//! limit value as the discount vanishes, certifies candidate vectors against
//! the Everett regions `ξ⁺`/`ξ⁻`, extracts stationary strategies from a
//! certificate, and checks the long-run guarantees of those strategies by
//! best-response computation and Monte Carlo play.
//!
//! Modules:
//! - [`model`]: game representation and the JSON game file.
//! - [`matgame`]: one-shot zero-sum matrix games.
//! - [`shapley`]: `Φ(λ,·)`, `v_λ`, `v_n` and the vanishing-discount limit.
//! - [`everett`]: certificate margins, search and strategy extraction.
//! - [`respond`]: best responses against a fixed stationary strategy.
//! - [`sim`]: seeded Monte Carlo play and the guarantee harness.
//! - [`zoo`]: example games, random generators and grid discretization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod everett;
pub mod matgame;
pub mod model;
pub mod respond;
pub mod shapley;
pub mod sim;
pub mod zoo;

pub use error::{Error, Result};
pub use everett::{CertificateReport, Side, Tolerances};
pub use matgame::{solve_matrix_game, Matrix, MatrixGameSolution};
pub use model::{GameSpec, Player, StationaryStrategy, ValueVector};
pub use respond::BestResponseResult;
pub use shapley::{DiscountCurve, LimitEstimate};
pub use sim::{GuaranteeReport, SimulationReport};

/// Formats a number with 12 significant digits, `%g` style.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
