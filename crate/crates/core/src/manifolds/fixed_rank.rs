//! Embedded geometry of the manifold of rank-k matrices in factored form.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{LowRank, TangentRepr};
use crate::error::{Error, Result};
use crate::linalg::{hcat, qr_positive, standard_normal, svd_sorted};

/// Tangent projection at `X = U S Vᵀ`:
/// `M = UᵀAV`, `U_p = AV − UM`, `V_p = AᵀU − VMᵀ`.
pub(super) fn project(x: &LowRank, a: &DMatrix<f64>) -> TangentRepr {
    let av = a * &x.v;
    let atu = a.transpose() * &x.u;
    let m = x.u.transpose() * &av;
    let up = av - &x.u * &m;
    let vp = atu - &x.v * m.transpose();
    TangentRepr::LowRank { m, up, vp }
}

pub(super) fn tangent_to_ambient(
    x: &LowRank,
    m: &DMatrix<f64>,
    up: &DMatrix<f64>,
    vp: &DMatrix<f64>,
) -> DMatrix<f64> {
    (&x.u * m + up) * x.v.transpose() + &x.u * vp.transpose()
}

/// Thin SVD `U_r Σ_r V_rᵀ` of `X + ξ` (all `r ≤ 2k` singular triplets,
/// decreasing), computed from the factored form.
///
/// `X + ξ = [U U_p] K [V V_p]ᵀ` with `K = [[S + M, I], [I, 0]]`, so only a
/// `2k × 2k` SVD is needed after two thin QR factorisations.
fn sum_svd(x: &LowRank, xi: &TangentRepr) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let TangentRepr::LowRank { m, up, vp } = xi else {
        unreachable!("fixed-rank tangents are factored");
    };
    let k = x.s.len();
    let mut core = DMatrix::zeros(2 * k, 2 * k);
    core.view_mut((0, 0), (k, k))
        .copy_from(&(DMatrix::from_diagonal(&x.s) + m));
    core.view_mut((0, k), (k, k)).fill_with_identity();
    core.view_mut((k, 0), (k, k)).fill_with_identity();

    let (q1, r1) = qr_positive(&hcat(&x.u, up));
    let (q2, r2) = qr_positive(&hcat(&x.v, vp));
    let (su, ss, sv) = svd_sorted(&(r1 * core * r2.transpose()));
    (q1 * su, ss, q2 * sv)
}

fn check_gap(s: &DVector<f64>, k: usize) -> Result<()> {
    if s.len() < k {
        return Err(Error::RetractionFailed(format!(
            "sum has rank at most {} < {k}",
            s.len()
        )));
    }
    let lead = s[0];
    let last = s[k - 1];
    if !(last > 1e-14 * lead) || !last.is_finite() {
        return Err(Error::RetractionFailed(format!(
            "rank collapse: σ_k = {last:e}, σ_1 = {lead:e}"
        )));
    }
    Ok(())
}

/// Best rank-k approximation of `X + ξ`.
pub(super) fn retract(x: &LowRank, xi: &TangentRepr, k: usize) -> Result<LowRank> {
    let (u, s, v) = sum_svd(x, xi);
    check_gap(&s, k)?;
    Ok(LowRank {
        u: u.columns(0, k).into_owned(),
        s: s.rows(0, k).into_owned(),
        v: v.columns(0, k).into_owned(),
    })
}

/// `Z B` for a tangent `Z` at `x` given in factored form.
fn apply(x: &LowRank, z: &TangentRepr, b: &DMatrix<f64>) -> DMatrix<f64> {
    let TangentRepr::LowRank { m, up, vp } = z else {
        unreachable!("fixed-rank tangents are factored");
    };
    let vtb = x.v.transpose() * b;
    &x.u * (m * &vtb + vp.transpose() * b) + up * vtb
}

/// `Zᵀ A` for a tangent `Z` at `x` given in factored form.
fn apply_t(x: &LowRank, z: &TangentRepr, a: &DMatrix<f64>) -> DMatrix<f64> {
    let TangentRepr::LowRank { m, up, vp } = z else {
        unreachable!("fixed-rank tangents are factored");
    };
    let uta = x.u.transpose() * a;
    &x.v * (m.transpose() * &uta + up.transpose() * a) + vp * uta
}

/// Exact derivative of the truncated-SVD retraction, `DR_x(η)[ξ]`.
///
/// With `Y = X + η = Σ σ_a u_a v_aᵀ`, retained indices `i < k` and discarded
/// ones `j ≥ k`, and `N` the projector onto the complement of the column
/// space of `Y`,
///
/// `DP_k(Y)[Z] = U_kU_kᵀZ + N Z V_kV_kᵀ + Σ_{i,j} c_ij (σ_i u_j v_iᵀ + σ_j u_i v_jᵀ)`
///
/// where `c_ij = (σ_i u_jᵀZv_i + σ_j u_iᵀZv_j) / (σ_i² − σ_j²)`. The result is
/// returned in factored form at `R_x(η) = U_k Σ_k V_kᵀ`.
pub(super) fn retraction_differential(
    x: &LowRank,
    eta: &TangentRepr,
    xi: &TangentRepr,
    k: usize,
) -> Result<TangentRepr> {
    let (ur, sr, vr) = sum_svd(x, eta);
    check_gap(&sr, k)?;
    let r = sr.len();
    let uk = ur.columns(0, k);
    let vk = vr.columns(0, k);

    let z_vr = apply(x, xi, &vr);
    let zr = ur.transpose() * &z_vr; // zr[(a, b)] = u_aᵀ Z v_b
    let z_vk = z_vr.columns(0, k);

    let mut c_left = DMatrix::zeros(r - k, k);
    let mut c_right = DMatrix::zeros(r - k, k);
    for i in 0..k {
        for j in k..r {
            let (si, sj) = (sr[i], sr[j]);
            let c = (si * zr[(j, i)] + sj * zr[(i, j)]) / ((si - sj) * (si + sj));
            c_left[(j - k, i)] = c * si;
            c_right[(j - k, i)] = c * sj;
        }
    }
    let ud = ur.columns(k, r - k);
    let vd = vr.columns(k, r - k);

    let m = zr.view((0, 0), (k, k)).into_owned();
    let up = z_vk - &ur * zr.columns(0, k) + ud * c_left;
    let zt_uk = apply_t(x, xi, &uk.into_owned());
    let vp = &zt_uk - vk * (vk.transpose() * &zt_uk) + vd * c_right;
    Ok(TangentRepr::LowRank { m, up, vp })
}

pub(super) fn random_point<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, k: usize) -> LowRank {
    // G Hᵀ with Gaussian factors, refactored into orthonormal/diagonal form.
    let g = standard_normal(rng, m, k);
    let h = standard_normal(rng, n, k);
    let (q1, r1) = qr_positive(&g);
    let (q2, r2) = qr_positive(&h);
    let (su, ss, sv) = svd_sorted(&(r1 * r2.transpose()));
    LowRank {
        u: q1 * su,
        s: ss,
        v: q2 * sv,
    }
}

pub(super) fn random_tangent<R: Rng + ?Sized>(rng: &mut R, x: &LowRank) -> TangentRepr {
    let (m, k) = x.u.shape();
    let n = x.v.nrows();
    let mm = standard_normal(rng, k, k);
    let up = standard_normal(rng, m, k);
    let vp = standard_normal(rng, n, k);
    let up = &up - &x.u * (x.u.transpose() * &up);
    let vp = &vp - &x.v * (x.v.transpose() * &vp);
    TangentRepr::LowRank { m: mm, up, vp }
}
