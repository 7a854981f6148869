//! Energy surfaces, dynamical systems and the finite-difference oracle used
//! to check their analytic derivatives.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{HisdError, Result};
use crate::linalg::{norm, Matrix, SymmetricMatrix};

/// A position in R^N with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(HisdError::NonFinite { index });
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(HisdError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// A gradient system: energy `E`, force `F = -grad E` and negative Hessian
/// `J = -hess E`.
///
/// The unchecked methods assume `x.len() == self.dim()`; the `try_` variants
/// validate it first.
pub trait EnergyLandscape: Send + Sync {
    fn dim(&self) -> usize;
    fn energy(&self, x: &[f64]) -> f64;
    fn force(&self, x: &[f64]) -> Vec<f64>;
    fn neg_hessian(&self, x: &[f64]) -> SymmetricMatrix;

    fn try_energy(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(self.energy(x))
    }

    fn try_force(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        Ok(self.force(x))
    }

    fn try_neg_hessian(&self, x: &[f64]) -> Result<SymmetricMatrix> {
        check_dim(self.dim(), x)?;
        Ok(self.neg_hessian(x))
    }
}

/// An autonomous system `dx/dt = F(x)` with Jacobian `J~ = dF/dx`, which need
/// not be symmetric.
pub trait DynamicalSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn force(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Matrix;

    fn try_force(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        Ok(self.force(x))
    }

    fn try_jacobian(&self, x: &[f64]) -> Result<Matrix> {
        check_dim(self.dim(), x)?;
        Ok(self.jacobian(x))
    }
}

impl<L: EnergyLandscape + ?Sized> EnergyLandscape for &L {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, x: &[f64]) -> f64 {
        (**self).energy(x)
    }
    fn force(&self, x: &[f64]) -> Vec<f64> {
        (**self).force(x)
    }
    fn neg_hessian(&self, x: &[f64]) -> SymmetricMatrix {
        (**self).neg_hessian(x)
    }
}

/// Views a gradient system as a dynamical system with `J~ := J`.
#[derive(Debug, Clone, Copy)]
pub struct GradientSystem<L>(pub L);

impl<L: EnergyLandscape> DynamicalSystem for GradientSystem<L> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn force(&self, x: &[f64]) -> Vec<f64> {
        self.0.force(x)
    }
    fn jacobian(&self, x: &[f64]) -> Matrix {
        self.0.neg_hessian(x).into_matrix()
    }
}

/// `E = cos(2 x1) + cos(2 x2) + 0.57 cos(2 x1 - 2 x2)`
#[derive(Debug, Clone, Copy, Default)]
pub struct MinyaevQuapp;

const MQ_COUPLING: f64 = 0.57;

impl EnergyLandscape for MinyaevQuapp {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        (2.0 * a).cos() + (2.0 * b).cos() + MQ_COUPLING * (2.0 * a - 2.0 * b).cos()
    }

    fn force(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (x[0], x[1]);
        let s = 2.0 * MQ_COUPLING * (2.0 * a - 2.0 * b).sin();
        vec![2.0 * (2.0 * a).sin() + s, 2.0 * (2.0 * b).sin() - s]
    }

    fn neg_hessian(&self, x: &[f64]) -> SymmetricMatrix {
        let (a, b) = (x[0], x[1]);
        let c = 4.0 * MQ_COUPLING * (2.0 * a - 2.0 * b).cos();
        let j11 = 4.0 * (2.0 * a).cos() + c;
        let j22 = 4.0 * (2.0 * b).cos() + c;
        SymmetricMatrix::from_lower(2, |i, j| match (i, j) {
            (0, 0) => j11,
            (1, 1) => j22,
            _ => -c,
        })
    }
}

/// Two Gaussian wells at `(0, +-1)`, a central Gaussian bump and a
/// confining `x2^2 / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Eckhardt;

impl Eckhardt {
    /// `(e1, e2, e3)`: the two side Gaussians and the weighted central one.
    fn terms(x: &[f64]) -> (f64, f64, f64) {
        let (a, b) = (x[0], x[1]);
        let e1 = (-a * a - (b + 1.0) * (b + 1.0)).exp();
        let e2 = (-a * a - (b - 1.0) * (b - 1.0)).exp();
        let e3 = 4.0 * (-1.5 * (a * a + b * b)).exp();
        (e1, e2, e3)
    }
}

impl EnergyLandscape for Eckhardt {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let (e1, e2, e3) = Self::terms(x);
        e1 + e2 + e3 + 0.5 * x[1] * x[1]
    }

    fn force(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (x[0], x[1]);
        let (e1, e2, e3) = Self::terms(x);
        vec![
            2.0 * a * (e1 + e2) + 3.0 * a * e3,
            2.0 * (b + 1.0) * e1 + 2.0 * (b - 1.0) * e2 + 3.0 * b * e3 - b,
        ]
    }

    fn neg_hessian(&self, x: &[f64]) -> SymmetricMatrix {
        let (a, b) = (x[0], x[1]);
        let (e1, e2, e3) = Self::terms(x);
        let bp = b + 1.0;
        let bm = b - 1.0;
        let h11 = (4.0 * a * a - 2.0) * (e1 + e2) + (9.0 * a * a - 3.0) * e3;
        let h22 = (4.0 * bp * bp - 2.0) * e1
            + (4.0 * bm * bm - 2.0) * e2
            + (9.0 * b * b - 3.0) * e3
            + 1.0;
        let h12 = 4.0 * a * bp * e1 + 4.0 * a * bm * e2 + 9.0 * a * b * e3;
        SymmetricMatrix::from_lower(2, |i, j| match (i, j) {
            (0, 0) => -h11,
            (1, 1) => -h22,
            _ => -h12,
        })
    }
}

/// Linear non-gradient test system `F(x) = (-x1 + a x2, -a x1 - x2)`.
#[derive(Debug, Clone, Copy)]
pub struct ToyRotational {
    pub a: f64,
}

impl Default for ToyRotational {
    fn default() -> Self {
        ToyRotational { a: 1.0 }
    }
}

impl DynamicalSystem for ToyRotational {
    fn dim(&self) -> usize {
        2
    }

    fn force(&self, x: &[f64]) -> Vec<f64> {
        vec![-x[0] + self.a * x[1], -self.a * x[0] - x[1]]
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 0)] = -1.0;
        m[(0, 1)] = self.a;
        m[(1, 0)] = -self.a;
        m[(1, 1)] = -1.0;
        m
    }
}

/// Borrowed view of whatever drives an integration.
#[derive(Clone, Copy)]
pub enum Model<'a> {
    Landscape(&'a dyn EnergyLandscape),
    System(&'a dyn DynamicalSystem),
}

impl Model<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Model::Landscape(l) => l.dim(),
            Model::System(s) => s.dim(),
        }
    }

    pub fn force(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Model::Landscape(l) => l.force(x),
            Model::System(s) => s.force(x),
        }
    }

    pub fn landscape(&self) -> Option<&dyn EnergyLandscape> {
        match self {
            Model::Landscape(l) => Some(*l),
            Model::System(_) => None,
        }
    }
}

/// Names accepted by the surface registry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    MinyaevQuapp,
    Eckhardt,
    ToyRotational,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::MinyaevQuapp,
        ModelKind::Eckhardt,
        ModelKind::ToyRotational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MinyaevQuapp => "minyaev-quapp",
            ModelKind::Eckhardt => "eckhardt",
            ModelKind::ToyRotational => "toy-rotational",
        }
    }

    pub fn is_gradient(self) -> bool {
        !matches!(self, ModelKind::ToyRotational)
    }

    pub fn build(self) -> BuiltinModel {
        match self {
            ModelKind::MinyaevQuapp => BuiltinModel::MinyaevQuapp(MinyaevQuapp),
            ModelKind::Eckhardt => BuiltinModel::Eckhardt(Eckhardt),
            ModelKind::ToyRotational => BuiltinModel::ToyRotational(ToyRotational::default()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = HisdError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HisdError::UnknownModel(s.to_string()))
    }
}

/// An owned built-in model.
#[derive(Debug, Clone, Copy)]
pub enum BuiltinModel {
    MinyaevQuapp(MinyaevQuapp),
    Eckhardt(Eckhardt),
    ToyRotational(ToyRotational),
}

impl BuiltinModel {
    pub fn as_model(&self) -> Model<'_> {
        match self {
            BuiltinModel::MinyaevQuapp(m) => Model::Landscape(m),
            BuiltinModel::Eckhardt(m) => Model::Landscape(m),
            BuiltinModel::ToyRotational(m) => Model::System(m),
        }
    }
}

/// Looks up a built-in model by registry name.
pub fn builtin(name: &str) -> Result<BuiltinModel> {
    Ok(name.parse::<ModelKind>()?.build())
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian; column `j` is `(F(x + h e_j) - F(x - h e_j)) / 2h`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Matrix {
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = x.len();
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        probe[j] = x[j] + h;
        let plus = f(&probe);
        probe[j] = x[j] - h;
        let minus = f(&probe);
        probe[j] = x[j];
        columns.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let rows = columns.first().map_or(0, Vec::len);
    Matrix::from_fn(rows, n, |i, j| columns[j][i])
}

/// Four-point central-difference Hessian of a scalar function.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Matrix {
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = x.len();
    let mut probe = x.to_vec();
    let mut eval = |di: (usize, f64), dj: (usize, f64)| {
        probe.copy_from_slice(x);
        probe[di.0] += di.1;
        probe[dj.0] += dj.1;
        f(&probe)
    };
    Matrix::from_fn(n, n, |i, j| {
        let pp = eval((i, h), (j, h));
        let pm = eval((i, h), (j, -h));
        let mp = eval((i, -h), (j, h));
        let mm = eval((i, -h), (j, -h));
        (pp - pm - mp + mm) / (4.0 * h * h)
    })
}

pub const FD_STEP: f64 = 1e-5;
pub const FORCE_REL_TOL: f64 = 1e-6;
pub const HESSIAN_ABS_TOL: f64 = 1e-4;

/// Worst-case agreement between analytic derivatives and the FD oracle over
/// a batch of points.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub points: usize,
    /// `max ||F - (-fd grad E)|| / (1 + ||F||)`
    pub force_rel_error: f64,
    /// `max |J_ij - (-fd hess E)_ij|`
    pub hessian_abs_error: f64,
    /// `max |J_ij - J_ji|` as stored
    pub asymmetry: f64,
}

impl DerivativeReport {
    pub fn passes(&self) -> bool {
        self.force_rel_error <= FORCE_REL_TOL
            && self.hessian_abs_error <= HESSIAN_ABS_TOL
            && self.asymmetry == 0.0
    }
}

pub fn check_derivatives(
    landscape: &dyn EnergyLandscape,
    points: &[Vec<f64>],
    h: f64,
) -> DerivativeReport {
    let mut report = DerivativeReport {
        points: points.len(),
        force_rel_error: 0.0,
        hessian_abs_error: 0.0,
        asymmetry: 0.0,
    };
    let energy = |y: &[f64]| landscape.energy(y);
    for x in points {
        let force = landscape.force(x);
        let grad = fd_gradient(energy, x, h);
        let diff: Vec<f64> = force.iter().zip(&grad).map(|(f, g)| f + g).collect();
        report.force_rel_error = report
            .force_rel_error
            .max(norm(&diff) / (1.0 + norm(&force)));

        let j = landscape.neg_hessian(x);
        let fd = fd_hessian(energy, x, h).scaled(-1.0);
        report.hessian_abs_error = report.hessian_abs_error.max(j.max_abs_diff(&fd));
        report.asymmetry = report.asymmetry.max(j.asymmetry());
    }
    report
}

/// Reproducible uniform samples from the box `[lo, hi]^dim`.
pub fn sample_points(count: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect()
}
