use serde::Serialize;

use super::{grid_ratio, par_map, ExperimentConfig};
use crate::diagnostics::{morse_index_at, stationarity_residual, MorseIndex};
use crate::dynamics::Trajectory;
use crate::error::{HisdError, Result};
use crate::linalg::distance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathwayRow {
    pub tau: f64,
    /// `max_n ||x_n - x^fine(t_n)||` over this run's grid.
    pub sup_to_finest: f64,
    /// Same against the next finer step in the list.
    pub sup_to_next: Option<f64>,
    /// `||x_N - x^fine(T)||`
    pub final_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalDiagnostics {
    pub x: Vec<f64>,
    pub force_norm: f64,
    pub eigen_residual: f64,
    pub morse: MorseIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathwayTable {
    pub finest_tau: f64,
    /// Decreasing tau; the finest run itself is not listed.
    pub rows: Vec<PathwayRow>,
    /// End state of the finest run (gradient models only).
    pub terminal: Option<TerminalDiagnostics>,
}

impl PathwayTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_to_finest < w[0].sup_to_finest)
    }

    pub fn adjacent_strictly_decreasing(&self) -> bool {
        let adj: Vec<f64> = self.rows.iter().filter_map(|r| r.sup_to_next).collect();
        adj.windows(2).all(|w| w[1] < w[0])
    }
}

fn sup_position_distance(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    let r = grid_ratio(coarse.tau(), fine.tau())?;
    if (coarse.records.len() - 1) * r >= fine.records.len() {
        return Err(HisdError::GridMismatch(
            "finer run is shorter than the coarse one".into(),
        ));
    }
    Ok(coarse
        .records
        .iter()
        .enumerate()
        .map(|(n, rec)| distance(&rec.state.x, &fine.records[n * r].state.x))
        .fold(0.0, f64::max))
}

/// Runs every step in `taus`; the smallest serves as the proxy exact path.
pub fn pathway_convergence(config: &ExperimentConfig, taus: &[f64]) -> Result<PathwayTable> {
    if taus.is_empty() {
        return Err(HisdError::InvalidParameter("the tau list is empty".into()));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    let finest_tau = *taus.last().expect("non-empty");
    for &tau in &taus {
        grid_ratio(tau, finest_tau)?;
    }
    let runs = par_map(&taus, |&tau| config.run(tau, false))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let finest = runs.last().expect("non-empty");

    let mut rows = Vec::with_capacity(runs.len() - 1);
    for (i, run) in runs[..runs.len() - 1].iter().enumerate() {
        rows.push(PathwayRow {
            tau: run.tau(),
            sup_to_finest: sup_position_distance(run, finest)?,
            sup_to_next: Some(sup_position_distance(run, &runs[i + 1])?),
            final_gap: distance(&run.last().x, &finest.last().x),
        });
    }

    let model = config.model.build();
    let terminal = model.as_model().landscape().map(|l| {
        let end = finest.last();
        let (force_norm, eigen_residual) = stationarity_residual(end, l);
        TerminalDiagnostics {
            x: end.x.clone(),
            force_norm,
            eigen_residual,
            morse: morse_index_at(l, &end.x),
        }
    });
    Ok(PathwayTable {
        finest_tau,
        rows,
        terminal,
    })
}
