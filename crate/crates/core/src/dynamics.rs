//! Explicit Euler steppers for k-index saddle dynamics (HiSD) and its
//! non-gradient generalization (GHiSD).
//!
//! One step maps `(x_{n-1}, {v_{i,n-1}})` to `(x_n, {v_{i,n}})` using only
//! step-(n-1) quantities:
//!
//! ```text
//! x_n      = x_{n-1} + tau beta (I - 2 sum_j v_j v_j^T) F(x_{n-1})
//! t_i      = v_i + tau gamma (I - v_i v_i^T - 2 sum_{j<i} v_j v_j^T) J(x_{n-1}) v_i
//! {v_i,n}  = gram_schmidt({t_i})
//! ```
//!
//! GHiSD replaces `2 J` in the `j < i` projections by `J~ + J~^T` and fixes
//! `beta = gamma = 1`.

use serde::Serialize;

use crate::error::{HisdError, Result};
use crate::frame::{gram_schmidt, DirectionFrame, DEGENERACY_EPS, FRAME_TOL};
use crate::landscape::{DynamicalSystem, EnergyLandscape, GradientSystem, Model};
use crate::linalg::{axpy, dot, operator_norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(rename = "hisd")]
    HiSD,
    #[serde(rename = "ghisd")]
    GHiSD,
}

impl std::str::FromStr for Mode {
    type Err = HisdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hisd" => Ok(Mode::HiSD),
            "ghisd" => Ok(Mode::GHiSD),
            other => Err(HisdError::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// How the `j < i` symmetrized projection enters the GHiSD direction update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GhisdProjection {
    /// `t_i = v_i + tau [ (I - v_i v_i^T) J~ v_i - sum_{j<i} v_j v_j^T (J~ + J~^T) v_i ]`,
    /// the Euler discretization of the continuous dynamics.
    #[default]
    FullBracket,
    /// Same, but the projection sum is added without the factor `tau`.
    Unscaled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeParams {
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub k: usize,
    pub mode: Mode,
    pub projection: GhisdProjection,
}

impl SchemeParams {
    pub fn hisd(k: usize, tau: f64, beta: f64, gamma: f64) -> Self {
        SchemeParams {
            beta,
            gamma,
            tau,
            k,
            mode: Mode::HiSD,
            projection: GhisdProjection::FullBracket,
        }
    }

    pub fn ghisd(k: usize, tau: f64) -> Self {
        SchemeParams {
            beta: 1.0,
            gamma: 1.0,
            tau,
            k,
            mode: Mode::GHiSD,
            projection: GhisdProjection::FullBracket,
        }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        SchemeParams {
            tau,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("tau", self.tau),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(HisdError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.k == 0 {
            return Err(HisdError::InvalidParameter(
                "saddle index k must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleState {
    pub t: f64,
    pub x: Vec<f64>,
    pub frame: DirectionFrame,
}

impl SaddleState {
    pub fn new(x: Vec<f64>, frame: DirectionFrame) -> Result<Self> {
        if let Some(index) = x.iter().position(|c| !c.is_finite()) {
            return Err(HisdError::NonFinite { index });
        }
        if frame.dim() != x.len() {
            return Err(HisdError::DimensionMismatch {
                expected: x.len(),
                got: frame.dim(),
            });
        }
        Ok(SaddleState { t: 0.0, x, frame })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// Post-orthonormalization state.
    pub state: SaddleState,
    /// Pre-orthonormalization directions `t_{i,n}`.
    pub tilde_vectors: Option<Vec<Vec<f64>>>,
    /// Gram-Schmidt normalization constants `Y_{i,n}`.
    pub y_values: Option<Vec<f64>>,
    /// `||J(x_{n-1})||` (or `||J~(x_{n-1})||` in GHiSD mode).
    pub neg_hessian_norm: Option<f64>,
}

impl StepRecord {
    fn initial(state: SaddleState) -> Self {
        StepRecord {
            state,
            tilde_vectors: None,
            y_values: None,
            neg_hessian_norm: None,
        }
    }

    fn strip_intermediates(mut self) -> Self {
        self.tilde_vectors = None;
        self.y_values = None;
        self.neg_hessian_norm = None;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub params: SchemeParams,
    pub t_final: f64,
    /// `records[0]` is the initial condition, `records[n]` the state at `t_n = n tau`.
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    /// `N_T`, the number of steps the full run takes (not the number recorded
    /// if the run was aborted).
    pub fn n_steps(&self) -> usize {
        step_count(self.t_final, self.params.tau).unwrap_or(self.records.len() - 1)
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn initial(&self) -> &SaddleState {
        &self.records[0].state
    }

    pub fn last(&self) -> &SaddleState {
        &self.records[self.records.len() - 1].state
    }

    pub fn states(&self) -> impl Iterator<Item = &SaddleState> {
        self.records.iter().map(|r| &r.state)
    }

    /// Largest `|t_n - n tau|`, which should stay at round-off.
    pub fn time_grid_defect(&self) -> f64 {
        self.records
            .iter()
            .enumerate()
            .map(|(n, r)| (r.state.t - n as f64 * self.params.tau).abs())
            .fold(0.0, f64::max)
    }
}

/// `N_T = T / tau`, required to be integral to `1e-9` relative.
pub fn step_count(t_final: f64, tau: f64) -> Result<usize> {
    if !(t_final.is_finite() && t_final > 0.0 && tau.is_finite() && tau > 0.0) {
        return Err(HisdError::InvalidParameter(format!(
            "need positive finite T and tau, got T = {t_final}, tau = {tau}"
        )));
    }
    let ratio = t_final / tau;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(HisdError::NonIntegerStepCount { t_final, tau });
    }
    Ok(n as usize)
}

/// `(I - 2 sum_j v_j v_j^T) F`
fn reflect(frame: &DirectionFrame, force: &[f64]) -> Vec<f64> {
    let mut out = force.to_vec();
    for v in frame.vectors() {
        axpy(-2.0 * dot(v, force), v, &mut out);
    }
    out
}

fn advance_position(x: &[f64], direction: &[f64], scale: f64) -> Vec<f64> {
    x.iter()
        .zip(direction)
        .map(|(xi, di)| xi + scale * di)
        .collect()
}

fn finish_step(
    state: &SaddleState,
    tau: f64,
    x_next: Vec<f64>,
    tilde: Vec<Vec<f64>>,
    jac_norm: f64,
) -> Result<StepRecord> {
    let (frame, ys) = gram_schmidt(&tilde, DEGENERACY_EPS)?;
    // Accumulated time would drift, so recompute from the step index.
    let n = (state.t / tau).round() + 1.0;
    Ok(StepRecord {
        state: SaddleState {
            t: n * tau,
            x: x_next,
            frame,
        },
        tilde_vectors: Some(tilde),
        y_values: Some(ys),
        neg_hessian_norm: Some(jac_norm),
    })
}

/// One explicit Euler step of k-index saddle dynamics on a gradient system.
///
/// With `k = 1` the orthonormalization reduces to `v_n = t_n / ||t_n||`.
pub fn step_hisd(
    state: &SaddleState,
    params: &SchemeParams,
    landscape: &dyn EnergyLandscape,
) -> Result<StepRecord> {
    let x = &state.x;
    let frame = &state.frame;
    let force = landscape.force(x);
    let j = landscape.neg_hessian(x);

    let x_next = advance_position(x, &reflect(frame, &force), params.tau * params.beta);

    let scale = params.tau * params.gamma;
    let tilde = frame
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let jv = j.mul_vec(v);
            let mut d = jv.clone();
            axpy(-dot(v, &jv), v, &mut d);
            for w in &frame.vectors()[..i] {
                axpy(-2.0 * dot(w, &jv), w, &mut d);
            }
            advance_position(v, &d, scale)
        })
        .collect();

    finish_step(state, params.tau, x_next, tilde, operator_norm(&j))
}

/// One explicit Euler step of generalized saddle dynamics. `beta` and
/// `gamma` are not used.
pub fn step_ghisd(
    state: &SaddleState,
    params: &SchemeParams,
    system: &dyn DynamicalSystem,
) -> Result<StepRecord> {
    let x = &state.x;
    let frame = &state.frame;
    let tau = params.tau;
    let force = system.force(x);
    let jac = system.jacobian(x);

    let x_next = advance_position(x, &reflect(frame, &force), tau);

    let jv: Vec<Vec<f64>> = frame.vectors().iter().map(|v| jac.mul_vec(v)).collect();
    let tilde = frame
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let jtv = jac.tr_mul_vec(v);
            let mut d = jv[i].clone();
            axpy(-dot(v, &jv[i]), v, &mut d);
            let mut proj = vec![0.0; v.len()];
            for w in &frame.vectors()[..i] {
                // w^T (J~ + J~^T) v
                axpy(dot(w, &jv[i]) + dot(w, &jtv), w, &mut proj);
            }
            match params.projection {
                GhisdProjection::FullBracket => {
                    axpy(-1.0, &proj, &mut d);
                    advance_position(v, &d, tau)
                }
                GhisdProjection::Unscaled => {
                    let mut t = advance_position(v, &d, tau);
                    axpy(-1.0, &proj, &mut t);
                    t
                }
            }
        })
        .collect();

    finish_step(state, tau, x_next, tilde, operator_norm(&jac))
}

type Stepper<'a> = dyn Fn(&SaddleState) -> Result<StepRecord> + 'a;

/// Integrates from `initial` over `[0, t_final]` on the uniform grid
/// `t_n = n tau`.
///
/// HiSD mode needs a gradient model; GHiSD accepts either kind and views a
/// landscape through [`GradientSystem`]. A failed step returns
/// [`HisdError::Aborted`] carrying the records computed so far.
pub fn run_trajectory(
    initial: &SaddleState,
    params: &SchemeParams,
    model: Model<'_>,
    t_final: f64,
    record_intermediates: bool,
) -> Result<Trajectory> {
    params.validate()?;
    let n_steps = step_count(t_final, params.tau)?;
    let dim = model.dim();
    if initial.x.len() != dim {
        return Err(HisdError::DimensionMismatch {
            expected: dim,
            got: initial.x.len(),
        });
    }
    if initial.frame.dim() != dim {
        return Err(HisdError::DimensionMismatch {
            expected: dim,
            got: initial.frame.dim(),
        });
    }
    if initial.frame.k() != params.k {
        return Err(HisdError::InvalidFrame(format!(
            "frame has {} vectors but k = {}",
            initial.frame.k(),
            params.k
        )));
    }
    initial.frame.validate(FRAME_TOL)?;

    let gradient_view;
    let stepper: Box<Stepper<'_>> = match (params.mode, model) {
        (Mode::HiSD, Model::Landscape(l)) => Box::new(move |s| step_hisd(s, params, l)),
        (Mode::HiSD, Model::System(_)) => {
            return Err(HisdError::ModeMismatch(
                "HiSD needs a gradient system; use GHiSD for non-gradient models".into(),
            ))
        }
        (Mode::GHiSD, Model::Landscape(l)) => {
            gradient_view = GradientSystem(l);
            let sys = &gradient_view;
            Box::new(move |s| step_ghisd(s, params, sys))
        }
        (Mode::GHiSD, Model::System(sys)) => Box::new(move |s| step_ghisd(s, params, sys)),
    };

    let mut start = initial.clone();
    start.t = 0.0;
    let mut records = Vec::with_capacity(n_steps + 1);
    records.push(StepRecord::initial(start));
    for step in 1..=n_steps {
        let prev = &records[step - 1].state;
        match stepper(prev) {
            Ok(rec) => {
                let rec = if record_intermediates {
                    rec
                } else {
                    rec.strip_intermediates()
                };
                records.push(rec);
            }
            Err(err) => {
                return Err(HisdError::Aborted {
                    step,
                    partial: Box::new(Trajectory {
                        params: params.clone(),
                        t_final,
                        records,
                    }),
                    source: Box::new(err),
                })
            }
        }
    }
    Ok(Trajectory {
        params: params.clone(),
        t_final,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{Eckhardt, MinyaevQuapp, ToyRotational};
    use crate::linalg::norm;

    fn state(x: &[f64], vs: &[&[f64]]) -> SaddleState {
        let frame = DirectionFrame::new(vs.iter().map(|v| v.to_vec()).collect()).unwrap();
        SaddleState::new(x.to_vec(), frame).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn mq_single_step_hand_values() {
        let s = state(&[1.0, 1.0], &[&[0.0, 1.0]]);
        let p = SchemeParams::hisd(1, 1.0 / 32.0, 1.0, 1.0);
        let rec = step_hisd(&s, &p, &MinyaevQuapp).unwrap();
        assert!(
            close(&rec.state.x, &[1.056831, 0.943169], 1e-5),
            "{:?}",
            rec.state.x
        );
        let tilde = &rec.tilde_vectors.as_ref().unwrap()[0];
        assert!(close(tilde, &[-0.071250, 1.0], 1e-5), "{tilde:?}");
        assert!(close(
            rec.state.frame.vector(0),
            &[-0.071070, 0.997472],
            1e-5
        ));
        assert_eq!(rec.state.t, 1.0 / 32.0);
        let drift = (norm(tilde).powi(2) - 1.0).abs();
        assert!((drift - 5.077e-3).abs() < 1e-6, "{drift}");
        let jn = rec.neg_hessian_norm.unwrap();
        assert!((jn - 2.89541).abs() < 1e-5);
        assert!(drift <= (p.tau * jn).powi(2));
    }

    /// Literal transcription of the one-direction scheme, kept apart from the
    /// k-direction code path on purpose.
    fn literal_one_direction_step(
        x: &[f64],
        v: &[f64],
        tau: f64,
        beta: f64,
        gamma: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let mq = MinyaevQuapp;
        let f = mq.force(x);
        let j = mq.neg_hessian(x);
        let vf = v[0] * f[0] + v[1] * f[1];
        let x_next: Vec<f64> = (0..2)
            .map(|l| x[l] + (tau * beta) * (f[l] + (-2.0 * vf) * v[l]))
            .collect();
        let jv = [
            j[(0, 0)] * v[0] + j[(0, 1)] * v[1],
            j[(1, 0)] * v[0] + j[(1, 1)] * v[1],
        ];
        let vjv = v[0] * jv[0] + v[1] * jv[1];
        let tilde: Vec<f64> = (0..2)
            .map(|l| v[l] + (tau * gamma) * (jv[l] + (-vjv) * v[l]))
            .collect();
        let len = (tilde[0] * tilde[0] + tilde[1] * tilde[1]).sqrt();
        (x_next, tilde.iter().map(|c| c / len).collect())
    }

    #[test]
    fn one_direction_path_matches_literal_scheme_bitwise() {
        let p = SchemeParams::hisd(1, 1.0 / 64.0, 0.7, 1.3);
        let mut s = state(&[1.0, 1.0], &[&[0.0, 1.0]]);
        let (mut x, mut v) = (vec![1.0, 1.0], vec![0.0, 1.0]);
        for _ in 0..200 {
            s = step_hisd(&s, &p, &MinyaevQuapp).unwrap().state;
            (x, v) = literal_one_direction_step(&x, &v, p.tau, p.beta, p.gamma);
            assert_eq!(s.x, x);
            assert_eq!(s.frame.vector(0), v.as_slice());
        }
    }

    #[test]
    fn stationary_eigenvector_frame_is_fixed() {
        // MQ origin: J = [[6.28, -2.28], [-2.28, 6.28]], eigenvectors (1, +-1)/sqrt 2.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = state(&[0.0, 0.0], &[&[r, -r], &[r, r]]);
        let rec = step_hisd(&s, &SchemeParams::hisd(2, 0.1, 1.0, 1.0), &MinyaevQuapp).unwrap();
        assert_eq!(rec.state.x, vec![0.0, 0.0]);
        assert!(close(rec.state.frame.vector(0), &[r, -r], 1e-15));
        assert!(close(rec.state.frame.vector(1), &[r, r], 1e-15));

        let toy = ToyRotational { a: 0.0 };
        let s = state(&[0.0, 0.0], &[&[1.0, 0.0]]);
        let rec = step_ghisd(&s, &SchemeParams::ghisd(1, 0.1), &toy).unwrap();
        assert_eq!(rec.state.x, vec![0.0, 0.0]);
        assert_eq!(rec.state.frame.vector(0), &[1.0, 0.0]);
    }

    #[test]
    fn two_direction_step_keeps_frame_orthonormal() {
        let s10 = 10f64.sqrt();
        let s = state(
            &[-2.0, 1.0],
            &[&[-1.0 / s10, 3.0 / s10], &[3.0 / s10, 1.0 / s10]],
        );
        let rec = step_hisd(&s, &SchemeParams::hisd(2, 1.0 / 32.0, 1.0, 1.0), &Eckhardt).unwrap();
        rec.state.frame.validate(FRAME_TOL).unwrap();
        assert!(rec.y_values.unwrap().iter().all(|y| *y > 0.0));
    }

    #[test]
    fn toy_rotational_hand_step() {
        let s = state(&[1.0, 0.0], &[&[1.0, 0.0]]);
        let rec = step_ghisd(&s, &SchemeParams::ghisd(1, 0.1), &ToyRotational::default()).unwrap();
        assert!(close(&rec.state.x, &[1.1, -0.1], 1e-15));
        assert!(close(&rec.tilde_vectors.unwrap()[0], &[1.0, -0.1], 1e-15));
        assert!(close(
            rec.state.frame.vector(0),
            &[0.995037, -0.099504],
            1e-6
        ));
    }

    #[test]
    fn ghisd_on_gradient_system_matches_hisd_step() {
        let s10 = 10f64.sqrt();
        let s = state(
            &[-2.0, 1.0],
            &[&[-1.0 / s10, 3.0 / s10], &[3.0 / s10, 1.0 / s10]],
        );
        let tau = 1.0 / 32.0;
        let a = step_hisd(&s, &SchemeParams::hisd(2, tau, 1.0, 1.0), &Eckhardt).unwrap();
        let b = step_ghisd(&s, &SchemeParams::ghisd(2, tau), &GradientSystem(Eckhardt)).unwrap();
        assert!(close(&a.state.x, &b.state.x, 1e-14));
        for i in 0..2 {
            assert!(close(
                a.state.frame.vector(i),
                b.state.frame.vector(i),
                1e-14
            ));
        }
    }

    #[test]
    fn unscaled_projection_differs_only_beyond_first_vector() {
        let s10 = 10f64.sqrt();
        let s = state(
            &[-2.0, 1.0],
            &[&[-1.0 / s10, 3.0 / s10], &[3.0 / s10, 1.0 / s10]],
        );
        let mut p = SchemeParams::ghisd(2, 1.0 / 64.0);
        let full = step_ghisd(&s, &p, &GradientSystem(Eckhardt)).unwrap();
        p.projection = GhisdProjection::Unscaled;
        let raw = step_ghisd(&s, &p, &GradientSystem(Eckhardt)).unwrap();
        let (tf, tr) = (full.tilde_vectors.unwrap(), raw.tilde_vectors.unwrap());
        assert_eq!(tf[0], tr[0]);
        assert!(
            norm(
                &tf[1]
                    .iter()
                    .zip(&tr[1])
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>()
            ) > 1e-3
        );
    }

    #[test]
    fn run_records_every_grid_point() {
        let s = state(&[1.0, 1.0], &[&[0.0, 1.0]]);
        let p = SchemeParams::hisd(1, 1.0, 1.0, 1.0);
        let traj = run_trajectory(&s, &p, Model::Landscape(&MinyaevQuapp), 1.0, false).unwrap();
        assert_eq!(traj.records.len(), 2);

        let p = SchemeParams::hisd(1, 1.0 / 256.0, 1.0, 1.0);
        let traj = run_trajectory(&s, &p, Model::Landscape(&MinyaevQuapp), 1.0, true).unwrap();
        assert_eq!(traj.records.len(), 257);
        assert!(traj.time_grid_defect() <= 1e-12 * 256.0);
        assert_eq!(traj.last().t, 1.0);
        for r in &traj.records {
            assert!(r.state.x.iter().all(|c| c.is_finite()));
            r.state.frame.validate(FRAME_TOL).unwrap();
        }
        assert!(traj.records[0].tilde_vectors.is_none());
        assert!(traj.records[1].tilde_vectors.is_some());
    }

    #[test]
    fn run_without_intermediates_drops_them() {
        let s = state(&[1.0, 1.0], &[&[0.0, 1.0]]);
        let p = SchemeParams::hisd(1, 0.25, 1.0, 1.0);
        let traj = run_trajectory(&s, &p, Model::Landscape(&MinyaevQuapp), 1.0, false).unwrap();
        assert!(traj
            .records
            .iter()
            .all(|r| r.y_values.is_none() && r.neg_hessian_norm.is_none()));
    }

    #[test]
    fn non_integer_step_count() {
        let s = state(&[1.0, 1.0], &[&[0.0, 1.0]]);
        let p = SchemeParams::hisd(1, 0.3, 1.0, 1.0);
        let err = run_trajectory(&s, &p, Model::Landscape(&MinyaevQuapp), 1.0, false).unwrap_err();
        assert!(matches!(err, HisdError::NonIntegerStepCount { .. }));
        assert_eq!(step_count(1.0, 1.0 / 8192.0).unwrap(), 8192);
        assert_eq!(step_count(1.0, 0.1).unwrap(), 10);
    }

    #[test]
    fn hisd_on_non_gradient_model_is_rejected() {
        let s = state(&[1.0, 0.0], &[&[1.0, 0.0]]);
        let toy = ToyRotational::default();
        let err = run_trajectory(
            &s,
            &SchemeParams::hisd(1, 0.1, 1.0, 1.0),
            Model::System(&toy),
            1.0,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, HisdError::ModeMismatch(_)));
    }

    #[test]
    fn frame_size_must_match_k() {
        let s = state(&[1.0, 1.0], &[&[0.0, 1.0]]);
        let err = run_trajectory(
            &s,
            &SchemeParams::hisd(2, 0.5, 1.0, 1.0),
            Model::Landscape(&Eckhardt),
            1.0,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, HisdError::InvalidFrame(_)));
    }

    #[test]
    fn degenerate_step_aborts_with_partial_trajectory() {
        // Constant force along x1; the Jacobian blows up once x1 > 0.5, which
        // makes Y non-finite and trips the degeneracy check.
        struct Blowup;
        impl DynamicalSystem for Blowup {
            fn dim(&self) -> usize {
                2
            }
            fn force(&self, _x: &[f64]) -> Vec<f64> {
                vec![1.0, 0.0]
            }
            fn jacobian(&self, x: &[f64]) -> crate::linalg::Matrix {
                let d = if x[0] > 0.5 { f64::NAN } else { 1.0 };
                crate::linalg::Matrix::from_rows(&[vec![d, 1.0], vec![0.0, d]]).unwrap()
            }
        }
        let s = state(&[0.0, 0.0], &[&[0.0, 1.0]]);
        let p = SchemeParams::ghisd(1, 0.5);
        let err = run_trajectory(&s, &p, Model::System(&Blowup), 2.0, false).unwrap_err();
        match &err {
            HisdError::Aborted {
                step,
                partial,
                source,
            } => {
                assert_eq!(*step, 3);
                assert_eq!(partial.records.len(), 3);
                // Step 1 tilts v to (1,2)/sqrt5, so step 2 moves along the
                // reflected force (0.6, -0.8).
                let x = &partial.last().x;
                assert!(
                    (x[0] - 0.8).abs() < 1e-15 && (x[1] + 0.4).abs() < 1e-15,
                    "{x:?}"
                );
                assert!(matches!(
                    **source,
                    HisdError::DegenerateFrame { index: 1, .. }
                ));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(matches!(err.root(), HisdError::DegenerateFrame { .. }));
    }
}
