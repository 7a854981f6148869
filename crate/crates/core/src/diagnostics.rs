//! Classification of the terminal state of a saddle search.

use serde::Serialize;

use crate::dynamics::SaddleState;
use crate::landscape::EnergyLandscape;
use crate::linalg::{axpy, dot, norm, SymmetricMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseIndex {
    /// Number of eigenvalues strictly below `-tol`.
    pub index: usize,
    /// Some eigenvalue has `|lambda| <= tol`; the count may be unreliable.
    pub near_singular: bool,
    pub eigenvalues: Vec<f64>,
    pub tol: f64,
}

/// `1e-8 (1 + ||H||_F)`
pub fn default_morse_tol(hessian: &SymmetricMatrix) -> f64 {
    1e-8 * (1.0 + hessian.frobenius_norm())
}

/// Counts negative eigenvalues of the energy Hessian `hess E = -J`.
///
/// Pass the Hessian itself, not the negative Hessian a landscape returns.
pub fn morse_index(hessian: &SymmetricMatrix, tol: Option<f64>) -> MorseIndex {
    let tol = tol.unwrap_or_else(|| default_morse_tol(hessian)).max(0.0);
    let eigenvalues = hessian.eigenvalues();
    MorseIndex {
        index: eigenvalues.iter().filter(|&&l| l < -tol).count(),
        near_singular: eigenvalues.iter().any(|l| l.abs() <= tol),
        eigenvalues,
        tol,
    }
}

/// Morse index of `landscape` at `x`.
pub fn morse_index_at(landscape: &dyn EnergyLandscape, x: &[f64]) -> MorseIndex {
    morse_index(&landscape.neg_hessian(x).negated(), None)
}

/// `(||F(x)||, max_i ||(I - v_i v_i^T) J(x) v_i||)`; both vanish at a
/// stationary point whose frame consists of eigenvectors of `J`.
pub fn stationarity_residual(state: &SaddleState, landscape: &dyn EnergyLandscape) -> (f64, f64) {
    let force_norm = norm(&landscape.force(&state.x));
    let j = landscape.neg_hessian(&state.x);
    let eigen_residual = state
        .frame
        .vectors()
        .iter()
        .map(|v| {
            let mut r = j.mul_vec(v);
            let c = dot(v, &r);
            axpy(-c, v, &mut r);
            norm(&r)
        })
        .fold(0.0, f64::max);
    (force_norm, eigen_residual)
}
