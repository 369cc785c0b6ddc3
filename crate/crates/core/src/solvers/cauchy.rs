use crate::error::{check_dim, CrsError, Result};
use crate::linalg::{dot, norm_sq};
use crate::operators::LinearOperator;

/// Minimizer of `m(s) = 1/2 s'Bs + g's + sigma/3 |s|^3` along `-g`.
///
/// `alpha` is the positive root of `sigma |g|^3 a^2 + (g'Bg) a - |g|^2`;
/// the two algebraically equivalent forms of the quadratic formula are
/// chosen by the sign of `g'Bg` to avoid cancellation. One product with `B`.
pub fn cauchy_point<O>(b: &O, g: &[f64], sigma: f64) -> Result<Vec<f64>>
where
    O: LinearOperator + ?Sized,
{
    check_dim(b.dim(), g.len())?;
    if !(sigma > 0.0) {
        return Err(CrsError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let gg = norm_sq(g);
    if gg == 0.0 {
        return Err(CrsError::InvalidArgument("gradient is zero".into()));
    }
    let gn = gg.sqrt();
    let bg = b.apply(g)?;
    let gbg = dot(g, &bg);
    let root = (gbg * gbg + 4.0 * sigma * gg * gg * gn).sqrt();
    let alpha = if gbg >= 0.0 {
        2.0 * gg / (gbg + root)
    } else {
        (root - gbg) / (2.0 * sigma * gg * gn)
    };
    Ok(g.iter().map(|v| -alpha * v).collect())
}
