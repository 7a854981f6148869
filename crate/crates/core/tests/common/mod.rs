#![allow(dead_code)]

use hisd_core::linalg::SymmetricMatrix;
use hisd_core::EnergyLandscape;

/// `E = x^T A x / 2 + sum x_i^4 / 4` in three dimensions with a coupled,
/// indefinite `A`. With two directions in R^3 the overlap of the raw updated
/// directions is genuinely second order, unlike in the plane where it
/// vanishes identically.
pub struct Quartic3;

pub const A: [[f64; 3]; 3] = [[-2.0, 0.5, 0.3], [0.5, -1.0, 0.4], [0.3, 0.4, 1.5]];

impl EnergyLandscape for Quartic3 {
    fn dim(&self) -> usize {
        3
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                e += 0.5 * x[i] * A[i][j] * x[j];
            }
            e += 0.25 * x[i].powi(4);
        }
        e
    }

    fn force(&self, x: &[f64]) -> Vec<f64> {
        (0..3)
            .map(|i| -(0..3).map(|j| A[i][j] * x[j]).sum::<f64>() - x[i].powi(3))
            .collect()
    }

    fn neg_hessian(&self, x: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_lower(3, |i, j| {
            -A[i][j] - if i == j { 3.0 * x[i] * x[i] } else { 0.0 }
        })
    }
}

pub const QUARTIC3_X0: [f64; 3] = [0.5, -0.3, 0.2];

pub fn quartic3_frame() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]
}

pub const TABLE_TAUS: [f64; 4] = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
