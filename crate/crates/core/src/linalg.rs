//! Small dense linear-algebra helpers shared by the manifolds and objectives.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// `(B + Bᵀ) / 2`
pub fn sym(b: &DMatrix<f64>) -> DMatrix<f64> {
    (b + b.transpose()) * 0.5
}

/// Diagonal part of a square matrix as a full matrix.
pub fn ddiag(b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&b.diagonal())
}

/// `B - ddiag(B)`
pub fn offdiag(b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = b.clone();
    out.fill_diagonal(0.0);
    out
}

/// Frobenius inner product `tr(AᵀB)`.
pub fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Neumaier-compensated sum; the error is independent of the number of
/// terms to first order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let s = sum + t;
        comp += if sum.abs() >= t.abs() {
            (sum - s) + t
        } else {
            (t - s) + sum
        };
        sum = s;
    }
    sum + comp
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Thin QR factorisation `A = QR` normalised so that `diag(R) >= 0`.
///
/// Returns `(Q, R)` with `Q: rows × r`, `R: r × cols`, `r = min(rows, cols)`.
pub fn qr_positive(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..r.nrows().min(r.ncols()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Thin SVD `A = U diag(s) Vᵀ` with singular values in decreasing order.
///
/// Computed with faer: nalgebra 0.35's SVD returns inaccurate factors for
/// some small matrices mixing large entries with exact zeros, which is the
/// typical shape of the fixed-rank retraction's core matrix.
pub fn svd_sorted(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    let fa = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = fa.thin_svd().expect("SVD of a finite matrix");
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let r = fs.nrows();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| fs[j].total_cmp(&fs[i]));
    let u = DMatrix::from_fn(rows, r, |i, c| fu[(i, order[c])]);
    let v = DMatrix::from_fn(cols, r, |i, c| fv[(i, order[c])]);
    let s = DVector::from_iterator(r, order.iter().map(|&i| fs[i]));
    (u, s, v)
}

/// Horizontal concatenation `[A B]`.
pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Eigenvalues of a symmetric matrix in increasing order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
