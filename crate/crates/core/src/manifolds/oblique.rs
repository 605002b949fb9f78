//! Column-wise unit-norm geometry. The sphere is the single-column case.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `A − X ddiag(XᵀA)`, i.e. remove from each column its component along the
/// matching column of `X`.
pub(super) fn project(x: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let xj = x.column(j);
        let c = xj.dot(&col);
        col.axpy(-c, &xj, 1.0);
    }
    out
}

/// Normalises every column of `sum = X + η`.
pub(super) fn retract(sum: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = sum.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let nrm = col.norm();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::RetractionFailed(format!(
                "column {j} of x + η has norm {nrm}"
            )));
        }
        col /= nrm;
    }
    Ok(out)
}

/// `D(z ↦ z/‖z‖)(x + η)[ξ]` per column: `(ξ − y yᵀξ)/‖x + η‖` with `y` the
/// normalised column.
pub(super) fn retraction_differential(sum: &DMatrix<f64>, xi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = xi.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let z = sum.column(j);
        let nrm = z.norm();
        let y = z / nrm;
        let c = y.dot(&col);
        col.axpy(-c, &y, 1.0);
        col /= nrm;
    }
    out
}
