//! Published experiment configurations and their reference tables.

use serde::Serialize;

use super::{Check, ExperimentConfig, RateTable};
use crate::dynamics::{GhisdProjection, Mode};
use crate::error::{HisdError, Result};
use crate::frame::DirectionFrame;
use crate::landscape::ModelKind;

pub const PRESET_NAMES: [&str; 5] = ["table1", "table2", "table3", "table4", "example3"];

/// Relative tolerance on each tabulated error.
pub const ERR_REL_TOL: f64 = 0.05;
/// Absolute tolerance on each tabulated rate.
pub const RATE_ABS_TOL: f64 = 0.1;
/// `Err(v_1)` and `Err(v_2)` must agree this closely where the table prints one column.
pub const TWIN_REL_TOL: f64 = 0.01;

const TABLE_TAUS: [f64; 4] = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
const TABLE_TAU_REF: f64 = 1.0 / 8192.0;

fn frame(vectors: Vec<Vec<f64>>) -> DirectionFrame {
    DirectionFrame::normalized(vectors, 1e-12).expect("preset frames are orthogonal")
}

fn table(name: &str, model: ModelKind, x0: [f64; 2], vectors: Vec<Vec<f64>>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        model,
        mode: Mode::HiSD,
        beta: 1.0,
        gamma: 1.0,
        t_final: 1.0,
        x0: x0.to_vec(),
        frame: frame(vectors),
        taus: TABLE_TAUS.to_vec(),
        tau_ref: TABLE_TAU_REF,
        projection: GhisdProjection::FullBracket,
    }
}

/// Named configuration; see [`PRESET_NAMES`].
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use ModelKind::{Eckhardt, MinyaevQuapp};
    Ok(match name {
        "table1" => table(name, MinyaevQuapp, [1.0, 1.0], vec![vec![0.0, 1.0]]),
        "table2" => table(
            name,
            MinyaevQuapp,
            [1.0, 1.0],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ),
        "table3" => table(name, Eckhardt, [-2.0, 1.0], vec![vec![-1.0, 1.0]]),
        "table4" => table(
            name,
            Eckhardt,
            [-2.0, 1.0],
            vec![vec![-1.0, 3.0], vec![3.0, 1.0]],
        ),
        "example3" => {
            let mut cfg = table(name, Eckhardt, [1.5, 1.2], vec![vec![-1.0, 2.0]]);
            cfg.t_final = 5.0;
            cfg.taus = (2..=8).map(|p| 2f64.powi(-p)).collect();
            cfg.tau_ref = 2f64.powi(-8);
            cfg
        }
        other => {
            return Err(HisdError::InvalidParameter(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

/// Printed errors and rates for one of the four convergence tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedTable {
    pub name: String,
    pub taus: Vec<f64>,
    pub err_x: Vec<f64>,
    pub rate_x: Vec<f64>,
    /// One column per direction; duplicated when the table prints a shared column.
    pub err_v: Vec<Vec<f64>>,
    pub rate_v: Vec<Vec<f64>>,
}

pub fn expected_table(name: &str) -> Result<ExpectedTable> {
    let (err_x, rate_x, err_v, rate_v, k): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, usize) =
        match name {
            "table1" => (
                vec![2.19e-2, 1.03e-2, 4.95e-3, 2.40e-3],
                vec![1.09, 1.05, 1.04],
                vec![1.72e-2, 8.29e-3, 4.05e-3, 1.98e-3],
                vec![1.05, 1.03, 1.03],
                1,
            ),
            "table2" => (
                vec![1.50e-2, 7.41e-3, 3.66e-3, 1.79e-3],
                vec![1.02, 1.02, 1.03],
                vec![1.31e-2, 6.52e-3, 3.23e-3, 1.59e-3],
                vec![1.01, 1.01, 1.02],
                2,
            ),
            "table3" => (
                vec![1.41e-2, 6.98e-3, 3.45e-3, 1.70e-3],
                vec![1.01, 1.01, 1.02],
                vec![2.16e-3, 1.09e-3, 5.46e-4, 2.70e-4],
                vec![0.98, 1.00, 1.02],
                1,
            ),
            "table4" => (
                vec![5.78e-3, 2.86e-3, 1.41e-3, 6.95e-4],
                vec![1.02, 1.02, 1.03],
                vec![2.25e-3, 1.11e-3, 5.51e-4, 2.71e-4],
                vec![1.01, 1.02, 1.03],
                2,
            ),
            other => {
                return Err(HisdError::InvalidParameter(format!(
                    "no reference table for '{other}'"
                )))
            }
        };
    Ok(ExpectedTable {
        name: name.to_string(),
        taus: TABLE_TAUS.to_vec(),
        err_x,
        rate_x,
        err_v: vec![err_v; k],
        rate_v: vec![rate_v; k],
    })
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// One check per tabulated error and rate, plus the twin-column agreement
/// when `k > 1`.
pub fn compare_with_expected(table: &RateTable, expected: &ExpectedTable) -> Vec<Check> {
    let mut out = Vec::new();
    if table.rows.len() != expected.taus.len()
        || table.k() != expected.err_v.len()
        || table
            .rows
            .iter()
            .zip(&expected.taus)
            .any(|(r, t)| (r.tau - t).abs() > 1e-12 * t)
    {
        out.push(Check::new(
            format!("{} shape", expected.name),
            false,
            format!(
                "got {} rows with k={}, expected {} rows with k={}",
                table.rows.len(),
                table.k(),
                expected.taus.len(),
                expected.err_v.len()
            ),
        ));
        return out;
    }

    let mut err_check = |col: &str, i: usize, got: f64, want: f64| {
        let rel = rel_err(got, want);
        out.push(Check::new(
            format!(
                "{} Err({col}) tau=1/{}",
                expected.name,
                (1.0 / table.rows[i].tau).round()
            ),
            rel <= ERR_REL_TOL,
            format!(
                "{got:.4e} vs {want:.3e} ({:+.1}%)",
                100.0 * (got - want) / want
            ),
        ));
    };
    for (i, row) in table.rows.iter().enumerate() {
        err_check("x", i, row.err_x, expected.err_x[i]);
        for (c, e) in row.err_v.iter().enumerate() {
            err_check(&format!("v{}", c + 1), i, *e, expected.err_v[c][i]);
        }
    }

    let mut rate_check = |col: &str, i: usize, got: Option<f64>, want: f64| {
        let passed = got.is_some_and(|g| (g - want).abs() <= RATE_ABS_TOL);
        out.push(Check::new(
            format!(
                "{} rate({col}) tau=1/{}",
                expected.name,
                (1.0 / table.rows[i].tau).round()
            ),
            passed,
            match got {
                Some(g) => format!("{g:.3} vs {want:.2}"),
                None => format!("undefined vs {want:.2}"),
            },
        ));
    };
    for (i, rates) in table.rates.iter().enumerate().skip(1) {
        rate_check("x", i, rates.rate_x, expected.rate_x[i - 1]);
        for (c, r) in rates.rate_v.iter().enumerate() {
            rate_check(&format!("v{}", c + 1), i, *r, expected.rate_v[c][i - 1]);
        }
    }

    if table.k() > 1 {
        for row in &table.rows {
            let (lo, hi) = row
                .err_v
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
                    (lo.min(e), hi.max(e))
                });
            out.push(Check::new(
                format!(
                    "{} Err(v) columns agree tau=1/{}",
                    expected.name,
                    (1.0 / row.tau).round()
                ),
                hi - lo <= TWIN_REL_TOL * hi,
                format!("spread {:.2e} of {hi:.4e}", hi - lo),
            ));
        }
    }
    out
}
