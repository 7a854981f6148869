use serde::Serialize;

use super::{grid_ratio, par_map, ExperimentConfig};
use crate::dynamics::Trajectory;
use crate::error::{HisdError, Result};
use crate::linalg::distance;

/// Sup-norm errors of one coarse run against the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub tau: f64,
    /// `max_n ||x(t_n) - x_n||`
    pub err_x: f64,
    /// `max_n ||v_i(t_n) - v_{i,n}||`, one entry per direction.
    pub err_v: Vec<f64>,
}

/// Observed orders between consecutive rows; the first row has none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub tau: f64,
    pub rate_x: Option<f64>,
    pub rate_v: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    /// Sorted by decreasing tau.
    pub rows: Vec<ErrorReport>,
    pub rates: Vec<RateRow>,
}

impl RateTable {
    pub fn from_reports(mut rows: Vec<ErrorReport>) -> Self {
        rows.sort_by(|a, b| b.tau.total_cmp(&a.tau));
        let rates = rows
            .iter()
            .enumerate()
            .map(|(i, row)| match i.checked_sub(1).map(|p| &rows[p]) {
                None => RateRow {
                    tau: row.tau,
                    rate_x: None,
                    rate_v: vec![None; row.err_v.len()],
                },
                Some(prev) => RateRow {
                    tau: row.tau,
                    rate_x: convergence_rate(prev.err_x, row.err_x, prev.tau / row.tau),
                    rate_v: prev
                        .err_v
                        .iter()
                        .zip(&row.err_v)
                        .map(|(c, f)| convergence_rate(*c, *f, prev.tau / row.tau))
                        .collect(),
                },
            })
            .collect();
        RateTable { rows, rates }
    }

    pub fn k(&self) -> usize {
        self.rows.first().map_or(0, |r| r.err_v.len())
    }

    /// Every defined rate, as `(column, row index, rate)`.
    pub fn all_rates(&self) -> impl Iterator<Item = (String, usize, f64)> + '_ {
        self.rates.iter().enumerate().flat_map(|(i, r)| {
            r.rate_x.map(|v| ("x".to_string(), i, v)).into_iter().chain(
                r.rate_v
                    .iter()
                    .enumerate()
                    .filter_map(move |(c, v)| v.map(|v| (format!("v{}", c + 1), i, v))),
            )
        })
    }
}

/// `log2(err_coarse / err_fine) / log2(step_ratio)`; `None` unless both
/// errors are positive.
pub fn convergence_rate(err_coarse: f64, err_fine: f64, step_ratio: f64) -> Option<f64> {
    (err_coarse > 0.0 && err_fine > 0.0 && step_ratio > 1.0)
        .then(|| (err_coarse / err_fine).log2() / step_ratio.log2())
}

/// Compares `coarse` with `reference` at the coarse grid points
/// `t_n = n tau`, `n = 1..N_T`.
pub fn sup_errors(coarse: &Trajectory, reference: &Trajectory) -> Result<ErrorReport> {
    if (coarse.t_final - reference.t_final).abs() > 1e-12 * coarse.t_final.abs().max(1.0) {
        return Err(HisdError::GridMismatch(format!(
            "final times differ: {} vs {}",
            coarse.t_final, reference.t_final
        )));
    }
    if coarse.k() != reference.k() {
        return Err(HisdError::GridMismatch(format!(
            "saddle index differs: {} vs {}",
            coarse.k(),
            reference.k()
        )));
    }
    if coarse.initial() != reference.initial() {
        return Err(HisdError::GridMismatch("initial conditions differ".into()));
    }
    let ratio = grid_ratio(coarse.tau(), reference.tau())?;
    let n_coarse = coarse.records.len() - 1;
    if n_coarse * ratio >= reference.records.len() {
        return Err(HisdError::GridMismatch(format!(
            "reference has {} records, need {}",
            reference.records.len(),
            n_coarse * ratio + 1
        )));
    }
    let k = coarse.k();
    let mut report = ErrorReport {
        tau: coarse.tau(),
        err_x: 0.0,
        err_v: vec![0.0; k],
    };
    for n in 1..=n_coarse {
        let c = &coarse.records[n].state;
        let r = &reference.records[n * ratio].state;
        report.err_x = report.err_x.max(distance(&c.x, &r.x));
        for (i, e) in report.err_v.iter_mut().enumerate() {
            *e = e.max(distance(c.frame.vector(i), r.frame.vector(i)));
        }
    }
    Ok(report)
}

/// Runs the reference once and every coarse step once, in parallel.
pub fn rate_table(config: &ExperimentConfig) -> Result<RateTable> {
    config.validate()?;
    if config.taus.len() < 2 {
        return Err(HisdError::InvalidParameter(
            "a rate table needs at least two step sizes".into(),
        ));
    }
    let mut steps = vec![config.tau_ref];
    steps.extend_from_slice(&config.taus);
    let mut runs = par_map(&steps, |&tau| config.run(tau, false)).into_iter();
    let reference = runs.next().expect("reference run")?;
    let reports = runs
        .map(|coarse| sup_errors(&coarse?, &reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::from_reports(reports))
}
