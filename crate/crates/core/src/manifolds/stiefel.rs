use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{qr_positive, sym};

/// `A − X sym(XᵀA)`
pub(super) fn project(x: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    a - x * sym(&(x.transpose() * a))
}

fn checked_qr(sum: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (q, r) = qr_positive(sum);
    let scale = r.amax();
    for j in 0..r.ncols() {
        let d = r[(j, j)];
        if !(d > 1e-14 * scale) || !d.is_finite() {
            return Err(Error::RetractionFailed(format!(
                "x + η is numerically rank deficient (R[{j},{j}] = {d:e})"
            )));
        }
    }
    Ok((q, r))
}

/// Q factor of `X + η = QR` with `diag(R) > 0`.
pub(super) fn retract(sum: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(checked_qr(sum)?.0)
}

/// Derivative of the Q factor: with `Y = QR` and `W = ξR⁻¹`,
/// `DQ(Y)[ξ] = Q ρ(QᵀW) + (I − QQᵀ)W`, where `ρ(A)` is the skew-symmetric
/// matrix whose strictly lower triangle agrees with that of `A`.
pub(super) fn retraction_differential(
    sum: &DMatrix<f64>,
    xi: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (q, r) = checked_qr(sum)?;
    // W R = ξ  ⇔  Rᵀ Wᵀ = ξᵀ
    let w = r
        .transpose()
        .solve_lower_triangular(&xi.transpose())
        .ok_or_else(|| Error::RetractionFailed("singular R factor".into()))?
        .transpose();
    let a = q.transpose() * &w;
    let p = a.ncols();
    let skew = DMatrix::from_fn(p, p, |i, j| {
        if i > j {
            a[(i, j)]
        } else if i < j {
            -a[(j, i)]
        } else {
            0.0
        }
    });
    Ok(&q * skew + &w - &q * a)
}
