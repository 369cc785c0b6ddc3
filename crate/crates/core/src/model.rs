//! Problem data and the objectives of the cubic subproblem and its lifted
//! convex reformulations.
//!
//! The cubic regularization subproblem is
//!
//! ```text
//! min_x  f1(x) = 1/2 x'Ax + b'x + rho/3 |x|^3
//! ```
//!
//! Lifting `y >= |x|^2` and adding a shift `s >= 0` to the quadratic gives
//! the family
//!
//! ```text
//! F_s(x, y) = 1/2 x'(A + sI)x + b'x + rho/3 y^{3/2} - s/2 y
//! ```
//!
//! minimized over `|x|^2 <= y, y >= l`. With `s = -lambda_min(A)` this is
//! the exact convex reformulation; with `s = -theta + epsilon` for an
//! approximate eigenvalue `theta` it is the surrogate problem; `s = -theta`
//! gives the plain substitution variant. On the boundary `y = |x|^2` every
//! member agrees with `f1`.

use std::fmt;
use std::path::Path;

use crate::error::{check_dim, CrsError, Result};
use crate::linalg::{dot, norm, norm_sq};
use crate::operators::{read_matrix, read_vector, LinearOperator, SymmetricOperator};
use crate::projections::LiftedPoint;

/// `min 1/2 x'Ax + b'x + rho/3 |x|^3`.
#[derive(Debug, Clone)]
pub struct CrsProblem {
    pub a: SymmetricOperator,
    pub b: Vec<f64>,
    pub rho: f64,
}

impl CrsProblem {
    pub fn new(a: SymmetricOperator, b: Vec<f64>, rho: f64) -> Result<Self> {
        check_dim(a.dim(), b.len())?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(CrsError::InvalidArgument(format!(
                "rho must be positive and finite, got {rho}"
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(CrsError::InvalidArgument("b has non-finite entries".into()));
        }
        Ok(Self { a, b, rho })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Loads a problem from a `key = value` manifest naming the matrix file
    /// (`matrix`), the right-hand side file (`rhs`) and the scalar `rho`.
    /// Relative paths are resolved against the manifest's directory.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CrsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let (mut matrix, mut rhs, mut rho) = (None, None, None);
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| CrsError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected 'key = value'".into()))?;
            let value = value.trim();
            match key.trim() {
                "matrix" => matrix = Some(base.join(value)),
                "rhs" => rhs = Some(base.join(value)),
                "rho" => {
                    rho = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| parse_err(format!("rho: {e}")))?,
                    )
                }
                other => return Err(parse_err(format!("unknown key '{other}'"))),
            }
        }
        let missing = |k: &str| CrsError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("missing key '{k}'"),
        };
        let a = read_matrix(&matrix.ok_or_else(|| missing("matrix"))?)?;
        let b = read_vector(&rhs.ok_or_else(|| missing("rhs"))?)?;
        Self::new(a, b, rho.ok_or_else(|| missing("rho"))?)
    }

    /// `f1(x)` given a precomputed `A x`.
    pub(crate) fn f1_with_ax(&self, x: &[f64], ax: &[f64]) -> f64 {
        0.5 * dot(x, ax) + dot(&self.b, x) + self.rho / 3.0 * norm(x).powi(3)
    }

    /// `grad f1(x) = Ax + b + rho |x| x` given a precomputed `A x`.
    pub(crate) fn f1_grad_with_ax(&self, x: &[f64], ax: &[f64]) -> Vec<f64> {
        let r = self.rho * norm(x);
        ax.iter()
            .zip(&self.b)
            .zip(x)
            .map(|((a, b), xi)| a + b + r * xi)
            .collect()
    }

    /// Cubic objective; one product with `A`.
    pub fn f1_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let ax = self.a.apply(x)?;
        Ok(self.f1_with_ax(x, &ax))
    }

    /// Gradient of the cubic objective; one product with `A`.
    pub fn f1_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let ax = self.a.apply(x)?;
        Ok(self.f1_grad_with_ax(x, &ax))
    }

    /// Value and gradient sharing one product.
    pub fn f1_value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim(), x.len())?;
        let ax = self.a.apply(x)?;
        Ok((self.f1_with_ax(x, &ax), self.f1_grad_with_ax(x, &ax)))
    }
}

/// Which lifted problem a [`SurrogateSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Surrogate with `s = -theta + epsilon`.
    Sp,
    /// Direct substitution `s = -theta`.
    Ap,
    /// Exact reformulation from a known `lambda_min`.
    Exact,
    /// `A` is positive semidefinite: no shift, no lower bound.
    Convex,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sp => "SP",
            Variant::Ap => "AP",
            Variant::Exact => "EXACT",
            Variant::Convex => "RP",
        })
    }
}

/// Shift and lower bound defining one member of the lifted family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateSpec {
    /// Eigenvalue estimate the spec was built from.
    pub theta: f64,
    pub epsilon: f64,
    pub variant: Variant,
    /// `s`, added to the diagonal of `A`.
    pub shift: f64,
    /// `l = s^2 / rho^2`.
    pub lower_bound: f64,
}

impl SurrogateSpec {
    fn from_shift(theta: f64, epsilon: f64, variant: Variant, shift: f64, rho: f64) -> Result<Self> {
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(CrsError::InvalidArgument(format!(
                "{variant} shift must be non-negative, got {shift}; use the convex branch when theta >= 0"
            )));
        }
        if !(rho > 0.0) {
            return Err(CrsError::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            theta,
            epsilon,
            variant,
            shift,
            lower_bound: (shift / rho).powi(2),
        })
    }

    /// Surrogate problem: `s = -theta + epsilon`.
    pub fn sp(theta: f64, epsilon: f64, rho: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(CrsError::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Self::from_shift(theta, epsilon, Variant::Sp, -theta + epsilon, rho)
    }

    /// Substitution variant: `s = -theta`, `l = theta^2 / rho^2`.
    pub fn ap(theta: f64, rho: f64) -> Result<Self> {
        Self::from_shift(theta, 0.0, Variant::Ap, -theta, rho)
    }

    /// Exact reformulation from the true minimum eigenvalue.
    pub fn exact(lambda_min: f64, rho: f64) -> Result<Self> {
        Self::from_shift(lambda_min, 0.0, Variant::Exact, -lambda_min, rho)
    }

    /// Positive semidefinite branch.
    pub fn convex(theta: f64) -> Self {
        Self {
            theta,
            epsilon: 0.0,
            variant: Variant::Convex,
            shift: 0.0,
            lower_bound: 0.0,
        }
    }

    /// Builds `variant` from an eigenvalue estimate, switching to the convex
    /// branch when `theta >= 0`.
    pub fn select(variant: Variant, theta: f64, epsilon: f64, rho: f64) -> Result<Self> {
        if theta >= 0.0 {
            return Ok(Self::convex(theta));
        }
        match variant {
            Variant::Sp => Self::sp(theta, epsilon, rho),
            Variant::Ap => Self::ap(theta, rho),
            Variant::Exact => Self::exact(theta, rho),
            Variant::Convex => Ok(Self::convex(theta)),
        }
    }

    /// `rho/3 y^{3/2} - s/2 y`, the part of the objective depending on `y`.
    pub fn y_part(&self, rho: f64, y: f64) -> f64 {
        rho / 3.0 * y.max(0.0).powf(1.5) - 0.5 * self.shift * y
    }

    /// Derivative of [`Self::y_part`].
    pub fn y_part_grad(&self, rho: f64, y: f64) -> f64 {
        0.5 * rho * y.max(0.0).sqrt() - 0.5 * self.shift
    }
}

/// Value and gradient of a lifted objective.
#[derive(Debug, Clone)]
pub struct LiftedEval {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: f64,
}

impl LiftedEval {
    pub fn grad_point(&self) -> LiftedPoint {
        LiftedPoint::new(self.grad_x.clone(), self.grad_y)
    }

    pub fn grad_norm(&self) -> f64 {
        (norm_sq(&self.grad_x) + self.grad_y * self.grad_y).sqrt()
    }
}

/// Lifted value and gradient from a precomputed `A x`.
pub(crate) fn lifted_with_ax(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    x: &[f64],
    y: f64,
    ax: &[f64],
) -> LiftedEval {
    let s = spec.shift;
    let grad_x: Vec<f64> = ax
        .iter()
        .zip(x)
        .zip(&prob.b)
        .map(|((a, xi), b)| a + s * xi + b)
        .collect();
    let quad = 0.5 * (dot(x, ax) + s * norm_sq(x));
    let value = quad + dot(&prob.b, x) + spec.y_part(prob.rho, y);
    LiftedEval {
        value,
        grad_x,
        grad_y: spec.y_part_grad(prob.rho, y),
    }
}

/// Lifted objective and gradient at `p`; exactly one product with `A`.
pub fn lifted_value_grad(prob: &CrsProblem, spec: &SurrogateSpec, p: &LiftedPoint) -> Result<LiftedEval> {
    check_dim(prob.dim(), p.dim())?;
    if !(p.y >= 0.0) {
        return Err(CrsError::Domain(format!(
            "lifted objective needs y >= 0, got {}",
            p.y
        )));
    }
    let ax = prob.a.apply(&p.x)?;
    Ok(lifted_with_ax(prob, spec, &p.x, p.y, &ax))
}

/// Upper bound on the gradient's Lipschitz constant over `y >= l`:
/// `max{ U(A + sI), rho / (4 sqrt l) }` with `U` the infinity-norm bound.
pub fn lipschitz_gamma(prob: &CrsProblem, spec: &SurrogateSpec) -> Result<f64> {
    if !(spec.lower_bound > 0.0) {
        return Err(CrsError::InvalidArgument(
            "the lifted gradient is not Lipschitz near y = 0; lower bound must be positive".into(),
        ));
    }
    let op_bound = prob.a.shifted(spec.shift).norm_upper_bound();
    Ok(op_bound.max(prob.rho / (4.0 * spec.lower_bound.sqrt())))
}
