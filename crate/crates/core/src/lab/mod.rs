//! Convergence laboratory: fine-step references, sup-norm errors on nested
//! grids, observed orders, auxiliary-estimate checks and pathway studies.

mod lemmas;
mod pathway;
mod presets;
mod rates;

pub use lemmas::{
    lemma_report, lemma_suite, DecayCheck, LemmaReport, LemmaRow, DECAY_BAND, GAP_BOUND,
    NORM_BOUND, ROUNDOFF_FLOOR,
};
pub use pathway::{pathway_convergence, PathwayRow, PathwayTable, TerminalDiagnostics};
pub use presets::{
    compare_with_expected, expected_table, preset, ExpectedTable, ERR_REL_TOL, PRESET_NAMES,
    RATE_ABS_TOL, TWIN_REL_TOL,
};
pub use rates::{convergence_rate, rate_table, sup_errors, ErrorReport, RateRow, RateTable};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::dynamics::{
    run_trajectory, step_count, GhisdProjection, Mode, SaddleState, SchemeParams, Trajectory,
};
use crate::error::{HisdError, Result};
use crate::frame::DirectionFrame;
use crate::landscape::ModelKind;

/// Environment variable capping the number of concurrent trajectory runs.
pub const THREADS_ENV: &str = "HISD_THREADS";

/// Everything needed to rerun one convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelKind,
    pub mode: Mode,
    pub beta: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub x0: Vec<f64>,
    pub frame: DirectionFrame,
    /// Coarse steps, typically halving.
    pub taus: Vec<f64>,
    pub tau_ref: f64,
    pub projection: GhisdProjection,
}

impl ExperimentConfig {
    pub fn k(&self) -> usize {
        self.frame.k()
    }

    pub fn params(&self, tau: f64) -> SchemeParams {
        let mut p = match self.mode {
            Mode::HiSD => SchemeParams::hisd(self.k(), tau, self.beta, self.gamma),
            Mode::GHiSD => SchemeParams::ghisd(self.k(), tau),
        };
        p.projection = self.projection;
        p
    }

    pub fn initial_state(&self) -> Result<SaddleState> {
        SaddleState::new(self.x0.clone(), self.frame.clone())
    }

    /// Checks that every step divides `T` and is a multiple of `tau_ref`.
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(HisdError::InvalidParameter("the tau list is empty".into()));
        }
        step_count(self.t_final, self.tau_ref)?;
        for &tau in &self.taus {
            step_count(self.t_final, tau)?;
            grid_ratio(tau, self.tau_ref)?;
        }
        Ok(())
    }

    pub fn run(&self, tau: f64, record_intermediates: bool) -> Result<Trajectory> {
        let model = self.model.build();
        run_trajectory(
            &self.initial_state()?,
            &self.params(tau),
            model.as_model(),
            self.t_final,
            record_intermediates,
        )
    }

    /// Same experiment with a different step list.
    pub fn with_taus(&self, taus: Vec<f64>) -> Self {
        ExperimentConfig {
            taus,
            ..self.clone()
        }
    }
}

/// `coarse / fine` as an integer, or `GridMismatch`.
pub fn grid_ratio(coarse: f64, fine: f64) -> Result<usize> {
    let ratio = coarse / fine;
    let r = ratio.round();
    if !(r >= 1.0) || (ratio - r).abs() > 1e-9 * ratio {
        return Err(HisdError::GridMismatch(format!(
            "tau = {coarse} is not an integer multiple of {fine}"
        )));
    }
    Ok(r as usize)
}

/// Worker count from `HISD_THREADS`, defaulting to the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on up to [`worker_count`] threads. Output order
/// follows input order.
pub fn par_map<A: Sync, R: Send>(items: &[A], f: impl Fn(&A) -> R + Sync) -> Vec<R> {
    let workers = worker_count().min(items.len()).max(1);
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(&items[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Outcome of one named property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Largest per-component difference between two trajectories on the same grid,
/// over positions and all frame vectors.
pub fn max_component_deviation(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.records.len() != b.records.len() || a.k() != b.k() {
        return Err(HisdError::GridMismatch(
            "trajectories have different shapes".into(),
        ));
    }
    let mut worst = 0.0f64;
    for (ra, rb) in a.records.iter().zip(&b.records) {
        let (sa, sb) = (&ra.state, &rb.state);
        for (p, q) in sa.x.iter().zip(&sb.x) {
            worst = worst.max((p - q).abs());
        }
        for (va, vb) in sa.frame.vectors().iter().zip(sb.frame.vectors()) {
            for (p, q) in va.iter().zip(vb) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    Ok(worst)
}

/// Runs a gradient-surface experiment in both HiSD and GHiSD mode with
/// `beta = gamma = 1` and reports the largest component deviation.
pub fn ghisd_equivalence(config: &ExperimentConfig, tau: f64) -> Result<f64> {
    if !config.model.is_gradient() {
        return Err(HisdError::ModeMismatch(format!(
            "{} is not a gradient system",
            config.model
        )));
    }
    let base = ExperimentConfig {
        beta: 1.0,
        gamma: 1.0,
        projection: GhisdProjection::FullBracket,
        ..config.clone()
    };
    let hisd = ExperimentConfig {
        mode: Mode::HiSD,
        ..base.clone()
    };
    let ghisd = ExperimentConfig {
        mode: Mode::GHiSD,
        ..base
    };
    max_component_deviation(&hisd.run(tau, false)?, &ghisd.run(tau, false)?)
}
