//! High-index saddle dynamics: energy surfaces, explicit Euler schemes with
//! Gram-Schmidt re-orthonormalization, and a laboratory for measuring their
//! convergence order.
//!
//! ```
//! use hisd_core::lab::{preset, rate_table};
//!
//! let cfg = preset("table1").unwrap().with_taus(vec![1.0 / 32.0, 1.0 / 64.0]);
//! let table = rate_table(&cfg).unwrap();
//! let rate = table.rates[1].rate_x.unwrap();
//! assert!((0.9..1.15).contains(&rate));
//! ```

// `!(a > b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod frame;
pub mod io;
pub mod lab;
pub mod landscape;
pub mod linalg;

pub use diagnostics::{morse_index, morse_index_at, stationarity_residual, MorseIndex};
pub use dynamics::{
    run_trajectory, step_ghisd, step_hisd, GhisdProjection, Mode, SaddleState, SchemeParams,
    StepRecord, Trajectory,
};
pub use error::{BoundViolation, HisdError, Result};
pub use frame::{gram_schmidt, DirectionFrame};
pub use landscape::{
    DynamicalSystem, Eckhardt, EnergyLandscape, GradientSystem, MinyaevQuapp, Model, ModelKind,
    Point, ToyRotational,
};
pub use linalg::{Matrix, SymmetricMatrix};
