//! Checks on the pre-orthonormalization directions `t_{i,n}`.
//!
//! For one direction every step must satisfy
//! `| ||t_n||^2 - 1 | <= tau^2 gamma^2 J^2` and `||v_n - t_n|| <= tau^2 gamma^2 J^2`,
//! with `J` the largest recorded `||J(x_m)||` along the run. For any number of
//! directions the drift quantities are `O(tau^2)`, so halving `tau` should
//! shrink each maximum by about four.

use serde::Serialize;

use super::{grid_ratio, par_map, Check, ExperimentConfig};
use crate::dynamics::Trajectory;
use crate::error::{BoundViolation, HisdError, Result};
use crate::linalg::{distance, dot};

/// Accepted shrink factor per halving of `tau`.
pub const DECAY_BAND: (f64, f64) = (3.5, 4.5);

/// Maxima at or below this level are round-off; a quantity that stays there
/// at both resolutions is reported as vanishing instead of given a ratio.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

pub const NORM_BOUND: &str = "tilde-norm drift bound";
pub const GAP_BOUND: &str = "normalization gap bound";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow {
    pub tau: f64,
    pub steps: usize,
    /// Largest recorded `||J(x_{n-1})||`.
    pub hat_j: f64,
    /// `tau^2 gamma^2 hat_j^2`
    pub bound: f64,
    /// `max_{n,i} | ||t_{i,n}||^2 - 1 |`
    pub norm_drift: f64,
    /// `max_{n, m<i} |t_{m,n} . t_{i,n}|`; zero for one direction.
    pub cross_overlap: f64,
    /// `max_{n,i} ||v_{i,n} - t_{i,n}||`
    pub frame_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCheck {
    pub quantity: String,
    pub coarse_tau: f64,
    pub fine_tau: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `None` when both maxima are below [`ROUNDOFF_FLOOR`].
    pub ratio: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub k: usize,
    pub gamma: f64,
    pub rows: Vec<LemmaRow>,
    pub decay: Vec<DecayCheck>,
    pub violations: Vec<BoundViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.decay.iter().all(|d| d.passed)
    }

    /// First failure as an error.
    pub fn check(&self) -> Result<()> {
        if let Some(v) = self.violations.first() {
            return Err(HisdError::BoundViolation(v.clone()));
        }
        if let Some(d) = self.decay.iter().find(|d| !d.passed) {
            return Err(HisdError::BoundViolation(BoundViolation {
                lemma: format!("O(tau^2) decay of {}", d.quantity),
                tau: d.fine_tau,
                step: 0,
                lhs: d.ratio.unwrap_or(f64::NAN),
                rhs: DECAY_BAND.0,
            }));
        }
        Ok(())
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        if self.k == 1 {
            for row in &self.rows {
                let bad = self.violations.iter().filter(|v| v.tau == row.tau).count();
                out.push(Check::new(
                    format!("hard bounds tau={}", row.tau),
                    bad == 0,
                    format!(
                        "max drift {:.3e}, max gap {:.3e}, bound {:.3e}, {bad} violations",
                        row.norm_drift, row.frame_gap, row.bound
                    ),
                ));
            }
        }
        for d in &self.decay {
            let detail = match d.ratio {
                Some(r) => format!("{:.3e} -> {:.3e}, ratio {r:.3}", d.coarse, d.fine),
                None => format!("{:.1e} -> {:.1e}, vanishes at round-off", d.coarse, d.fine),
            };
            out.push(Check::new(
                format!("{} decay tau={}->{}", d.quantity, d.coarse_tau, d.fine_tau),
                d.passed,
                detail,
            ));
        }
        out
    }
}

fn measure(
    traj: &Trajectory,
    gamma: f64,
    violations: &mut Vec<BoundViolation>,
) -> Result<LemmaRow> {
    let tau = traj.tau();
    let mut row = LemmaRow {
        tau,
        steps: traj.records.len() - 1,
        hat_j: 0.0,
        bound: 0.0,
        norm_drift: 0.0,
        cross_overlap: 0.0,
        frame_gap: 0.0,
    };
    let mut per_step = Vec::with_capacity(row.steps);
    for rec in &traj.records[1..] {
        let (Some(tilde), Some(jn)) = (&rec.tilde_vectors, rec.neg_hessian_norm) else {
            return Err(HisdError::InvalidParameter(
                "trajectory was run without recorded intermediates".into(),
            ));
        };
        row.hat_j = row.hat_j.max(jn);
        let mut drift = 0.0f64;
        let mut gap = 0.0f64;
        for (i, t) in tilde.iter().enumerate() {
            drift = drift.max((dot(t, t) - 1.0).abs());
            gap = gap.max(distance(rec.state.frame.vector(i), t));
            for s in &tilde[..i] {
                row.cross_overlap = row.cross_overlap.max(dot(s, t).abs());
            }
        }
        row.norm_drift = row.norm_drift.max(drift);
        row.frame_gap = row.frame_gap.max(gap);
        per_step.push((drift, gap));
    }
    row.bound = (tau * gamma * row.hat_j).powi(2);
    if traj.k() == 1 {
        for (n, (drift, gap)) in per_step.into_iter().enumerate() {
            for (lemma, lhs) in [(NORM_BOUND, drift), (GAP_BOUND, gap)] {
                if lhs > row.bound {
                    violations.push(BoundViolation {
                        lemma: lemma.to_string(),
                        tau,
                        step: n + 1,
                        lhs,
                        rhs: row.bound,
                    });
                }
            }
        }
    }
    Ok(row)
}

fn decay(quantity: &str, coarse: &LemmaRow, fine: &LemmaRow, a: f64, b: f64) -> Result<DecayCheck> {
    let step_ratio = grid_ratio(coarse.tau, fine.tau)? as f64;
    let scale = (step_ratio / 2.0).powi(2);
    let (lo, hi) = (DECAY_BAND.0 * scale, DECAY_BAND.1 * scale);
    let vanishing = a <= ROUNDOFF_FLOOR && b <= ROUNDOFF_FLOOR;
    let ratio = (!vanishing).then(|| a / b);
    Ok(DecayCheck {
        quantity: quantity.to_string(),
        coarse_tau: coarse.tau,
        fine_tau: fine.tau,
        coarse: a,
        fine: b,
        ratio,
        passed: vanishing || ratio.is_some_and(|r| r >= lo && r <= hi),
    })
}

/// Runs `config` at each step in `taus` with intermediates recorded and
/// evaluates the hard bounds (one direction) and the decay ratios between
/// consecutive steps.
pub fn lemma_suite(config: &ExperimentConfig, taus: &[f64]) -> Result<LemmaReport> {
    if taus.is_empty() {
        return Err(HisdError::InvalidParameter("the tau list is empty".into()));
    }
    let runs = par_map(taus, |&tau| config.run(tau, true))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    lemma_report(&runs, config.params(1.0).gamma)
}

/// Same analysis over trajectories that were already computed with
/// intermediates recorded. All runs must share `k`.
pub fn lemma_report(runs: &[Trajectory], gamma: f64) -> Result<LemmaReport> {
    let Some(first) = runs.first() else {
        return Err(HisdError::InvalidParameter(
            "no trajectories to analyse".into(),
        ));
    };
    let k = first.k();
    if runs.iter().any(|r| r.k() != k) {
        return Err(HisdError::GridMismatch(
            "runs have different saddle indices".into(),
        ));
    }
    let mut order: Vec<&Trajectory> = runs.iter().collect();
    order.sort_by(|a, b| b.tau().total_cmp(&a.tau()));
    let mut violations = Vec::new();
    let rows = order
        .into_iter()
        .map(|run| measure(run, gamma, &mut violations))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for pair in rows.windows(2) {
        let (c, f) = (&pair[0], &pair[1]);
        checks.push(decay("norm drift", c, f, c.norm_drift, f.norm_drift)?);
        if k > 1 {
            checks.push(decay(
                "cross overlap",
                c,
                f,
                c.cross_overlap,
                f.cross_overlap,
            )?);
        }
        checks.push(decay("frame gap", c, f, c.frame_gap, f.frame_gap)?);
    }
    Ok(LemmaReport {
        k,
        gamma,
        rows,
        decay: checks,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::DirectionFrame;
    use crate::lab::preset;
    use crate::landscape::ModelKind;

    #[test]
    fn one_direction_bounds_hold_per_step() {
        let cfg = preset("table1").unwrap();
        let report = lemma_suite(&cfg, &[1.0 / 32.0]).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.rows[0].norm_drift <= report.rows[0].bound);
        report.check().unwrap();
    }

    #[test]
    fn stationary_eigenframe_has_no_drift() {
        // Eckhardt origin: F = 0 and J is diagonal.
        let mut cfg = preset("table4").unwrap();
        cfg.x0 = vec![0.0, 0.0];
        cfg.frame = DirectionFrame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(cfg.model, ModelKind::Eckhardt);
        let report = lemma_suite(&cfg, &[1.0 / 32.0, 1.0 / 64.0]).unwrap();
        for row in &report.rows {
            assert_eq!(
                (row.norm_drift, row.cross_overlap, row.frame_gap),
                (0.0, 0.0, 0.0)
            );
        }
        assert!(report.passed());
        assert!(report.decay.iter().all(|d| d.ratio.is_none()));
    }

    #[test]
    fn requires_recorded_intermediates() {
        let cfg = preset("table1").unwrap();
        let traj = cfg.run(0.25, false).unwrap();
        assert!(measure(&traj, 1.0, &mut Vec::new()).is_err());
    }

    #[test]
    fn violation_is_reported_as_error() {
        let report = LemmaReport {
            k: 1,
            gamma: 1.0,
            rows: vec![],
            decay: vec![],
            violations: vec![BoundViolation {
                lemma: NORM_BOUND.into(),
                tau: 0.5,
                step: 3,
                lhs: 2.0,
                rhs: 1.0,
            }],
        };
        let err = report.check().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(NORM_BOUND) && msg.contains("step 3"), "{msg}");
    }
}
