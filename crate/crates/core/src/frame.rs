//! Orthonormal direction frames and the classical Gram-Schmidt step that
//! restores orthonormality after each explicit update.

use serde::Serialize;

use crate::error::{HisdError, Result};
use crate::linalg::{dot, norm};

/// Tolerance for the unit-norm and orthogonality invariants.
pub const FRAME_TOL: f64 = 1e-12;

/// Default threshold below which a Gram-Schmidt normalization constant is
/// treated as loss of linear independence.
pub const DEGENERACY_EPS: f64 = 1e-10;

/// Ordered orthonormal vectors `v_1..v_k` in R^N with `1 <= k <= N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DirectionFrame {
    vectors: Vec<Vec<f64>>,
}

impl DirectionFrame {
    /// Validates the frame invariants at [`FRAME_TOL`].
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(vectors, FRAME_TOL)
    }

    pub fn with_tolerance(vectors: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let frame = DirectionFrame { vectors };
        frame.validate(tol)?;
        Ok(frame)
    }

    /// Normalizes each vector and checks mutual orthogonality of the results
    /// at `orth_tol`. The input need not be unit length.
    pub fn normalized(vectors: Vec<Vec<f64>>, orth_tol: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.into_iter().enumerate() {
            if let Some(index) = v.iter().position(|c| !c.is_finite()) {
                return Err(HisdError::InvalidFrame(format!(
                    "vector {} has a non-finite entry at {index}",
                    i + 1
                )));
            }
            let n = norm(&v);
            if n == 0.0 {
                return Err(HisdError::InvalidFrame(format!("vector {} is zero", i + 1)));
            }
            out.push(v.iter().map(|c| c / n).collect::<Vec<_>>());
        }
        let frame = DirectionFrame { vectors: out };
        frame.check_shape()?;
        for i in 0..frame.k() {
            for j in 0..i {
                let c = dot(&frame.vectors[i], &frame.vectors[j]).abs();
                if c > orth_tol {
                    return Err(HisdError::InvalidFrame(format!(
                        "vectors {} and {} are not orthogonal (|cos| = {c:e})",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(frame)
    }

    /// Wraps vectors produced by Gram-Schmidt without re-checking them.
    pub(crate) fn from_orthonormalized(vectors: Vec<Vec<f64>>) -> Self {
        DirectionFrame { vectors }
    }

    fn check_shape(&self) -> Result<()> {
        let k = self.vectors.len();
        if k == 0 {
            return Err(HisdError::InvalidFrame("frame is empty".into()));
        }
        let n = self.vectors[0].len();
        if let Some(bad) = self.vectors.iter().position(|v| v.len() != n) {
            return Err(HisdError::InvalidFrame(format!(
                "vector {} has dimension {}, expected {n}",
                bad + 1,
                self.vectors[bad].len()
            )));
        }
        if k > n {
            return Err(HisdError::InvalidFrame(format!(
                "{k} vectors cannot be orthonormal in dimension {n}"
            )));
        }
        Ok(())
    }

    /// Checks `| ||v_i|| - 1 | <= tol` and `|v_i . v_j| <= tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_shape()?;
        let (norm_dev, orth_dev) = self.orthonormality_defect();
        if norm_dev > tol || orth_dev > tol {
            return Err(HisdError::InvalidFrame(format!(
                "orthonormality defect: norm {norm_dev:e}, overlap {orth_dev:e} (tol {tol:e})"
            )));
        }
        Ok(())
    }

    /// `(max_i | ||v_i|| - 1 |, max_{i != j} |v_i . v_j|)`
    pub fn orthonormality_defect(&self) -> (f64, f64) {
        let mut norm_dev = 0.0f64;
        let mut orth_dev = 0.0f64;
        for (i, v) in self.vectors.iter().enumerate() {
            norm_dev = norm_dev.max((norm(v) - 1.0).abs());
            for w in &self.vectors[..i] {
                orth_dev = orth_dev.max(dot(v, w).abs());
            }
        }
        (norm_dev, orth_dev)
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }
}

/// Classical Gram-Schmidt in index order:
///
/// `w_i = t_i - sum_{j<i} (t_i . v_j) v_j`, `Y_i = ||w_i||`, `v_i = w_i / Y_i`.
///
/// Projections use the raw `t_i` against the already-normalized `v_j`, with no
/// re-orthogonalization pass. Returns the frame and the `Y_i`.
pub fn gram_schmidt(tilde: &[Vec<f64>], eps: f64) -> Result<(DirectionFrame, Vec<f64>)> {
    if !(eps > 0.0) {
        return Err(HisdError::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let k = tilde.len();
    if k == 0 {
        return Err(HisdError::InvalidFrame(
            "no vectors to orthonormalize".into(),
        ));
    }
    let n = tilde[0].len();
    if k > n {
        return Err(HisdError::InvalidFrame(format!(
            "{k} vectors cannot be orthonormal in dimension {n}"
        )));
    }
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    for (i, t) in tilde.iter().enumerate() {
        if t.len() != n {
            return Err(HisdError::DimensionMismatch {
                expected: n,
                got: t.len(),
            });
        }
        let mut w = t.clone();
        for v in &frame {
            let c = dot(t, v);
            for (wl, vl) in w.iter_mut().zip(v) {
                *wl -= c * vl;
            }
        }
        let y = norm(&w);
        if !(y > eps) {
            return Err(HisdError::DegenerateFrame {
                index: i + 1,
                norm: y,
                eps,
            });
        }
        for wl in &mut w {
            *wl /= y;
        }
        frame.push(w);
        ys.push(y);
    }
    Ok((DirectionFrame::from_orthonormalized(frame), ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_vector_is_normalized() {
        let (f, y) = gram_schmidt(&[vec![3.0, 4.0]], DEGENERACY_EPS).unwrap();
        assert_eq!(f.vector(0), &[0.6, 0.8]);
        assert_eq!(y, vec![5.0]);
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let (f, y) = gram_schmidt(&[vec![1.0, 0.0], vec![0.0, 1.0]], DEGENERACY_EPS).unwrap();
        assert_eq!(f.vectors(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(y, vec![1.0, 1.0]);
    }

    #[test]
    fn projection_removes_earlier_component() {
        let (f, y) = gram_schmidt(&[vec![2.0, 0.0], vec![1.0, 1.0]], DEGENERACY_EPS).unwrap();
        assert_eq!(f.vectors(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(y, vec![2.0, 1.0]);
    }

    #[test]
    fn parallel_vectors_are_degenerate() {
        let err = gram_schmidt(&[vec![1.0, 1.0], vec![2.0, 2.0]], DEGENERACY_EPS).unwrap_err();
        assert!(matches!(err, HisdError::DegenerateFrame { index: 2, .. }));
        let err = gram_schmidt(&[vec![0.0, 0.0]], DEGENERACY_EPS).unwrap_err();
        assert!(matches!(err, HisdError::DegenerateFrame { index: 1, .. }));
    }

    #[test]
    fn too_many_vectors() {
        assert!(gram_schmidt(&[vec![1.0], vec![2.0]], DEGENERACY_EPS).is_err());
    }

    #[test]
    fn frame_validation() {
        assert!(DirectionFrame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        assert!(DirectionFrame::new(vec![vec![1.0, 1e-5]]).is_err());
        assert!(DirectionFrame::new(vec![vec![1.0, 0.0], vec![0.6, 0.8]]).is_err());
        assert!(DirectionFrame::new(vec![]).is_err());
    }

    #[test]
    fn normalized_accepts_scaled_orthogonal_vectors() {
        let f = DirectionFrame::normalized(vec![vec![-1.0, 3.0], vec![3.0, 1.0]], 1e-6).unwrap();
        let s = 10f64.sqrt();
        assert_relative_eq!(f.vector(0)[0], -1.0 / s, epsilon = 1e-16);
        assert_relative_eq!(f.vector(1)[1], 1.0 / s, epsilon = 1e-16);
        assert!(DirectionFrame::normalized(vec![vec![1.0, 0.0], vec![1.0, 1.0]], 1e-6).is_err());
        assert!(DirectionFrame::normalized(vec![vec![0.0, 0.0]], 1e-6).is_err());
    }

    proptest! {
        #[test]
        fn output_is_orthonormal(
            raw in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 1..=4),
        ) {
            // Diagonal dominance keeps the inputs well conditioned.
            let tilde: Vec<Vec<f64>> = raw
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut v = v.clone();
                    v[i] += 3.0;
                    v
                })
                .collect();
            let (frame, ys) = gram_schmidt(&tilde, DEGENERACY_EPS).unwrap();
            prop_assert!(frame.validate(FRAME_TOL).is_ok());
            prop_assert!(ys.iter().all(|y| *y > 0.0));
            // Y_i^2 = ||t_i||^2 - sum_{j<i} (t_i . v_j)^2
            for (i, t) in tilde.iter().enumerate() {
                let proj: f64 = (0..i).map(|j| dot(t, frame.vector(j)).powi(2)).sum();
                let expected = (dot(t, t) - proj).sqrt();
                prop_assert!((ys[i] - expected).abs() <= 1e-12 * (1.0 + expected));
            }
        }
    }
}
