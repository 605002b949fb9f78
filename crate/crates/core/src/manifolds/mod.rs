//! Embedded matrix manifolds with retraction, differentiated retraction and
//! scaled vector transport.
//!
//! All four manifolds carry the metric inherited from the ambient Euclidean
//! (Frobenius) space. Points and tangent vectors are stored in ambient
//! coordinates, except on the fixed-rank manifold where both are kept in
//! factored form so that every geometric operation costs `O((m + n) k²)`.

mod fixed_rank;
mod oblique;
mod stiefel;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg;

/// One of the four supported manifolds together with its dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    /// Unit sphere `S^{n-1}` in `R^n`.
    Sphere { n: usize },
    /// Stiefel manifold `St(p, n)` of `n × p` matrices with orthonormal columns.
    Stiefel { n: usize, p: usize },
    /// `m × n` matrices of rank exactly `k`.
    FixedRank { m: usize, n: usize, k: usize },
    /// Oblique manifold `OB(n, p)` of `n × p` matrices with unit-norm columns.
    Oblique { n: usize, p: usize },
}

/// Factored representation `U diag(s) Vᵀ` of a fixed-rank point.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRank {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl LowRank {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.s[j];
        }
        us * self.v.transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointRepr {
    Dense(DMatrix<f64>),
    LowRank(LowRank),
}

/// A point on a manifold. Cloning is cheap; tangent vectors keep a handle to
/// the point they are based at.
#[derive(Debug, Clone)]
pub struct ManifoldPoint(Arc<PointRepr>);

impl ManifoldPoint {
    pub fn dense(x: DMatrix<f64>) -> Self {
        Self(Arc::new(PointRepr::Dense(x)))
    }

    pub fn low_rank(u: DMatrix<f64>, s: DVector<f64>, v: DMatrix<f64>) -> Self {
        Self(Arc::new(PointRepr::LowRank(LowRank { u, s, v })))
    }

    pub fn repr(&self) -> &PointRepr {
        &self.0
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match &*self.0 {
            PointRepr::Dense(x) => Some(x),
            PointRepr::LowRank(_) => None,
        }
    }

    pub fn as_low_rank(&self) -> Option<&LowRank> {
        match &*self.0 {
            PointRepr::Dense(_) => None,
            PointRepr::LowRank(f) => Some(f),
        }
    }

    /// Ambient matrix of the point (densified for fixed-rank points).
    pub fn to_ambient(&self) -> DMatrix<f64> {
        match &*self.0 {
            PointRepr::Dense(x) => x.clone(),
            PointRepr::LowRank(f) => f.to_dense(),
        }
    }

    /// True when both handles denote the same point.
    pub fn same_as(&self, other: &ManifoldPoint) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

/// Coordinates of a tangent vector.
///
/// Fixed-rank tangents at `(U, S, V)` are triples `(M, U_p, V_p)` standing for
/// `U M Vᵀ + U_p Vᵀ + U V_pᵀ` with `Uᵀ U_p = 0` and `Vᵀ V_p = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentRepr {
    Dense(DMatrix<f64>),
    LowRank {
        m: DMatrix<f64>,
        up: DMatrix<f64>,
        vp: DMatrix<f64>,
    },
}

impl TangentRepr {
    fn same_shape(&self, other: &TangentRepr) -> bool {
        match (self, other) {
            (TangentRepr::Dense(a), TangentRepr::Dense(b)) => a.shape() == b.shape(),
            (
                TangentRepr::LowRank { m, up, vp },
                TangentRepr::LowRank {
                    m: m2,
                    up: up2,
                    vp: vp2,
                },
            ) => m.shape() == m2.shape() && up.shape() == up2.shape() && vp.shape() == vp2.shape(),
            _ => false,
        }
    }

    /// Coordinate inner product. Equals the ambient Frobenius product for
    /// both representations.
    fn dot(&self, other: &TangentRepr) -> f64 {
        match (self, other) {
            (TangentRepr::Dense(a), TangentRepr::Dense(b)) => linalg::frob(a, b),
            (
                TangentRepr::LowRank { m, up, vp },
                TangentRepr::LowRank {
                    m: m2,
                    up: up2,
                    vp: vp2,
                },
            ) => m.dot(m2) + up.dot(up2) + vp.dot(vp2),
            _ => unreachable!("shape checked by caller"),
        }
    }

    fn scaled(&self, a: f64) -> TangentRepr {
        match self {
            TangentRepr::Dense(x) => TangentRepr::Dense(x * a),
            TangentRepr::LowRank { m, up, vp } => TangentRepr::LowRank {
                m: m * a,
                up: up * a,
                vp: vp * a,
            },
        }
    }

    fn lincomb(a: f64, u: &TangentRepr, b: f64, v: &TangentRepr) -> TangentRepr {
        match (u, v) {
            (TangentRepr::Dense(x), TangentRepr::Dense(y)) => TangentRepr::Dense(x * a + y * b),
            (
                TangentRepr::LowRank { m, up, vp },
                TangentRepr::LowRank {
                    m: m2,
                    up: up2,
                    vp: vp2,
                },
            ) => TangentRepr::LowRank {
                m: m * a + m2 * b,
                up: up * a + up2 * b,
                vp: vp * a + vp2 * b,
            },
            _ => unreachable!("shape checked by caller"),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            TangentRepr::Dense(x) => x.iter().all(|&v| v == 0.0),
            TangentRepr::LowRank { m, up, vp } => m
                .iter()
                .chain(up.iter())
                .chain(vp.iter())
                .all(|&v| v == 0.0),
        }
    }
}

/// A tangent vector together with the point it is based at.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: ManifoldPoint,
    value: TangentRepr,
}

impl TangentVector {
    pub fn new(base: ManifoldPoint, value: TangentRepr) -> Self {
        Self { base, value }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn value(&self) -> &TangentRepr {
        &self.value
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match &self.value {
            TangentRepr::Dense(x) => Some(x),
            TangentRepr::LowRank { .. } => None,
        }
    }

    pub fn scaled(&self, a: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            value: self.value.scaled(a),
        }
    }

    /// `a·u + b·v`; both vectors must share a base point.
    pub fn lincomb(a: f64, u: &TangentVector, b: f64, v: &TangentVector) -> Result<TangentVector> {
        if !u.base.same_as(&v.base) {
            return Err(Error::BaseMismatch);
        }
        if !u.value.same_shape(&v.value) {
            return Err(Error::ShapeMismatch {
                expected: "tangents of equal shape".into(),
                got: "differently shaped tangents".into(),
            });
        }
        Ok(TangentVector {
            base: u.base.clone(),
            value: TangentRepr::lincomb(a, &u.value, b, &v.value),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Re-attach the same coordinates to another (equal) base point handle.
    pub(crate) fn rebased(&self, base: &ManifoldPoint) -> TangentVector {
        TangentVector {
            base: base.clone(),
            value: self.value.clone(),
        }
    }

    /// Coordinate inner product without base checks; the metric is the
    /// ambient one, so this equals [`Manifold::inner`] for vectors at the
    /// same point.
    pub(crate) fn dot(&self, other: &TangentVector) -> f64 {
        self.value.dot(&other.value)
    }

    /// `self − other` in coordinates, keeping `self`'s base. The caller
    /// guarantees both vectors live in the same tangent space.
    pub(crate) fn minus(&self, other: &TangentVector) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            value: TangentRepr::lincomb(1.0, &self.value, -1.0, &other.value),
        }
    }

    pub(crate) fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Differentiated retraction along a fixed `η`, with the retracted point
/// `R_x(η)` computed once and shared by every transported vector.
#[derive(Debug, Clone)]
pub struct Transporter<'a> {
    manifold: &'a Manifold,
    x: ManifoldPoint,
    eta: TangentVector,
    target: ManifoldPoint,
    eta_is_zero: bool,
}

impl Transporter<'_> {
    /// The retracted point `R_x(η)`.
    pub fn target(&self) -> &ManifoldPoint {
        &self.target
    }

    /// `T^R_η(ξ) = DR_x(η)[ξ]`, based at `R_x(η)`.
    pub fn diff(&self, xi: &TangentVector) -> Result<TangentVector> {
        self.manifold.check_tangent_at(&self.x, xi)?;
        if self.eta_is_zero {
            return Ok(xi.rebased(&self.target));
        }
        let value = match (self.manifold, self.x.repr(), self.target.repr()) {
            (Manifold::Sphere { .. } | Manifold::Oblique { .. }, PointRepr::Dense(x), _) => {
                let sum = x + dense(&self.eta);
                TangentRepr::Dense(oblique::retraction_differential(&sum, dense(xi)))
            }
            (Manifold::Stiefel { .. }, PointRepr::Dense(x), _) => {
                let sum = x + dense(&self.eta);
                TangentRepr::Dense(stiefel::retraction_differential(&sum, dense(xi))?)
            }
            (Manifold::FixedRank { k, .. }, PointRepr::LowRank(x), PointRepr::LowRank(_)) => {
                fixed_rank::retraction_differential(x, &self.eta.value, &xi.value, *k)?
            }
            _ => unreachable!("representation checked on construction"),
        };
        Ok(TangentVector::new(self.target.clone(), value))
    }

    /// Scaled vector transport `T^S_η(ξ)` and the scale factor applied.
    ///
    /// The differentiated transport is shrunk onto the sphere of radius
    /// `‖ξ‖_x` whenever it would be longer than that, so
    /// `‖T^S_η(ξ)‖ ≤ ‖ξ‖` always holds and the factor lies in `(0, 1]`.
    pub fn scaled(&self, xi: &TangentVector) -> Result<(TangentVector, f64)> {
        let t = self.diff(xi)?;
        let t_norm = t.norm();
        let xi_norm = xi.norm();
        if t_norm <= xi_norm || t_norm == 0.0 {
            return Ok((t, 1.0));
        }
        let scale = xi_norm / t_norm;
        Ok((t.scaled(scale), scale))
    }
}

fn dense(v: &TangentVector) -> &DMatrix<f64> {
    v.as_dense().expect("dense tangent checked by caller")
}

impl Manifold {
    pub fn sphere(n: usize) -> Result<Self> {
        Self::Sphere { n }.validated()
    }

    pub fn stiefel(n: usize, p: usize) -> Result<Self> {
        Self::Stiefel { n, p }.validated()
    }

    pub fn fixed_rank(m: usize, n: usize, k: usize) -> Result<Self> {
        Self::FixedRank { m, n, k }.validated()
    }

    pub fn oblique(n: usize, p: usize) -> Result<Self> {
        Self::Oblique { n, p }.validated()
    }

    /// Checks the dimension constraints of the manifold.
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Manifold::Sphere { n } => n >= 2,
            Manifold::Stiefel { n, p } => p >= 1 && p <= n,
            Manifold::FixedRank { m, n, k } => k >= 1 && k <= m.min(n),
            Manifold::Oblique { n, p } => n >= 1 && p >= 1,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidManifold(format!("{self:?}")))
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Manifold::Sphere { n } => format!("Sphere({n})"),
            Manifold::Stiefel { n, p } => format!("Stiefel({p},{n})"),
            Manifold::FixedRank { m, n, k } => format!("FixedRank({m},{n},{k})"),
            Manifold::Oblique { n, p } => format!("Oblique({n},{p})"),
        }
    }

    /// Shape `(rows, cols)` of ambient matrices (Euclidean gradients, dense
    /// points).
    pub fn ambient_shape(&self) -> (usize, usize) {
        match *self {
            Manifold::Sphere { n } => (n, 1),
            Manifold::Stiefel { n, p } | Manifold::Oblique { n, p } => (n, p),
            Manifold::FixedRank { m, n, .. } => (m, n),
        }
    }

    fn check_ambient(&self, a: &DMatrix<f64>) -> Result<()> {
        let expected = self.ambient_shape();
        if a.shape() != expected {
            return Err(shape_err(expected, a.shape()));
        }
        Ok(())
    }

    /// Verifies that `x` has the representation and shape of a point on this
    /// manifold (not that it satisfies the constraints; see [`Self::point_residual`]).
    pub fn check_point(&self, x: &ManifoldPoint) -> Result<()> {
        match (self, x.repr()) {
            (Manifold::FixedRank { m, n, k }, PointRepr::LowRank(f)) => {
                if f.u.shape() != (*m, *k) {
                    return Err(shape_err((*m, *k), f.u.shape()));
                }
                if f.v.shape() != (*n, *k) {
                    return Err(shape_err((*n, *k), f.v.shape()));
                }
                if f.s.len() != *k {
                    return Err(shape_err((*k, 1), (f.s.len(), 1)));
                }
                Ok(())
            }
            (Manifold::FixedRank { .. }, PointRepr::Dense(x)) => Err(Error::ShapeMismatch {
                expected: "factored fixed-rank point".into(),
                got: format!("dense {}x{}", x.nrows(), x.ncols()),
            }),
            (_, PointRepr::Dense(x)) => self.check_ambient(x),
            (_, PointRepr::LowRank(_)) => Err(Error::ShapeMismatch {
                expected: format!("dense point on {}", self.name()),
                got: "factored point".into(),
            }),
        }
    }

    fn check_tangent_at(&self, x: &ManifoldPoint, v: &TangentVector) -> Result<()> {
        if !v.base.same_as(x) {
            return Err(Error::BaseMismatch);
        }
        match (self, &v.value) {
            (Manifold::FixedRank { m, n, k }, TangentRepr::LowRank { m: mm, up, vp }) => {
                if mm.shape() != (*k, *k) || up.shape() != (*m, *k) || vp.shape() != (*n, *k) {
                    return Err(Error::ShapeMismatch {
                        expected: format!("({k}x{k}, {m}x{k}, {n}x{k})"),
                        got: format!("({:?}, {:?}, {:?})", mm.shape(), up.shape(), vp.shape()),
                    });
                }
                Ok(())
            }
            (Manifold::FixedRank { .. }, TangentRepr::Dense(_)) => Err(Error::ShapeMismatch {
                expected: "factored fixed-rank tangent".into(),
                got: "dense tangent".into(),
            }),
            (_, TangentRepr::Dense(a)) => self.check_ambient(a),
            (_, TangentRepr::LowRank { .. }) => Err(Error::ShapeMismatch {
                expected: format!("dense tangent on {}", self.name()),
                got: "factored tangent".into(),
            }),
        }
    }

    /// Riemannian (embedded) metric `⟨u, v⟩_x`.
    pub fn inner(&self, x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        self.check_tangent_at(x, u)?;
        self.check_tangent_at(x, v)?;
        Ok(u.dot(v))
    }

    pub fn norm(&self, x: &ManifoldPoint, u: &TangentVector) -> Result<f64> {
        Ok(self.inner(x, u, u)?.sqrt())
    }

    pub fn zero_tangent(&self, x: &ManifoldPoint) -> TangentVector {
        let value = match (self, x.repr()) {
            (Manifold::FixedRank { m, n, k }, _) => TangentRepr::LowRank {
                m: DMatrix::zeros(*k, *k),
                up: DMatrix::zeros(*m, *k),
                vp: DMatrix::zeros(*n, *k),
            },
            _ => {
                let (r, c) = self.ambient_shape();
                TangentRepr::Dense(DMatrix::zeros(r, c))
            }
        };
        TangentVector::new(x.clone(), value)
    }

    /// Orthogonal projection of the ambient matrix `a` onto `T_x M`.
    pub fn project(&self, x: &ManifoldPoint, a: &DMatrix<f64>) -> Result<TangentVector> {
        self.check_point(x)?;
        self.check_ambient(a)?;
        let value = match (self, x.repr()) {
            (Manifold::Sphere { .. } | Manifold::Oblique { .. }, PointRepr::Dense(x)) => {
                TangentRepr::Dense(oblique::project(x, a))
            }
            (Manifold::Stiefel { .. }, PointRepr::Dense(x)) => {
                TangentRepr::Dense(stiefel::project(x, a))
            }
            (Manifold::FixedRank { .. }, PointRepr::LowRank(f)) => fixed_rank::project(f, a),
            _ => unreachable!("checked by check_point"),
        };
        Ok(TangentVector::new(x.clone(), value))
    }

    /// Ambient matrix of a tangent vector.
    pub fn tangent_to_ambient(&self, v: &TangentVector) -> DMatrix<f64> {
        match (&v.value, v.base.repr()) {
            (TangentRepr::Dense(a), _) => a.clone(),
            (TangentRepr::LowRank { m, up, vp }, PointRepr::LowRank(f)) => {
                fixed_rank::tangent_to_ambient(f, m, up, vp)
            }
            _ => unreachable!("tangent representation follows its base point"),
        }
    }

    /// Retraction `R_x(η)`: normalisation (sphere, oblique), Q factor of the
    /// positive-diagonal QR (Stiefel), rank-k truncated SVD (fixed rank).
    pub fn retract(&self, x: &ManifoldPoint, eta: &TangentVector) -> Result<ManifoldPoint> {
        self.check_point(x)?;
        self.check_tangent_at(x, eta)?;
        if eta.is_zero() {
            return Ok(x.clone());
        }
        self.retract_unchecked(x, &eta.value)
    }

    fn retract_unchecked(&self, x: &ManifoldPoint, eta: &TangentRepr) -> Result<ManifoldPoint> {
        match (self, x.repr(), eta) {
            (
                Manifold::Sphere { .. } | Manifold::Oblique { .. },
                PointRepr::Dense(x),
                TangentRepr::Dense(e),
            ) => Ok(ManifoldPoint::dense(oblique::retract(&(x + e))?)),
            (Manifold::Stiefel { .. }, PointRepr::Dense(x), TangentRepr::Dense(e)) => {
                Ok(ManifoldPoint::dense(stiefel::retract(&(x + e))?))
            }
            (Manifold::FixedRank { k, .. }, PointRepr::LowRank(f), eta) => {
                let out = fixed_rank::retract(f, eta, *k)?;
                Ok(ManifoldPoint(Arc::new(PointRepr::LowRank(out))))
            }
            _ => unreachable!("checked by caller"),
        }
    }

    /// Prepares `T^R_η` / `T^S_η` at `x`, retracting once.
    pub fn transporter(&self, x: &ManifoldPoint, eta: &TangentVector) -> Result<Transporter<'_>> {
        let target = self.retract(x, eta)?;
        Ok(Transporter {
            manifold: self,
            x: x.clone(),
            eta: eta.clone(),
            target,
            eta_is_zero: eta.is_zero(),
        })
    }

    /// Differentiated retraction `T^R_η(ξ) = DR_x(η)[ξ]`.
    pub fn transport_diff(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        xi: &TangentVector,
    ) -> Result<TangentVector> {
        self.transporter(x, eta)?.diff(xi)
    }

    /// Scaled vector transport `T^S_η(ξ)` and its scale factor.
    pub fn transport_scaled(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        xi: &TangentVector,
    ) -> Result<(TangentVector, f64)> {
        self.transporter(x, eta)?.scaled(xi)
    }

    /// Deterministic pseudo-random point.
    pub fn random_point(&self, seed: u64) -> ManifoldPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            Manifold::Sphere { n } => {
                let g = linalg::standard_normal(&mut rng, n, 1);
                ManifoldPoint::dense(oblique::retract(&g).expect("gaussian sample is nonzero"))
            }
            Manifold::Oblique { n, p } => {
                let g = linalg::standard_normal(&mut rng, n, p);
                ManifoldPoint::dense(oblique::retract(&g).expect("gaussian sample is nonzero"))
            }
            Manifold::Stiefel { n, p } => {
                let g = linalg::standard_normal(&mut rng, n, p);
                ManifoldPoint::dense(linalg::qr_positive(&g).0)
            }
            Manifold::FixedRank { m, n, k } => {
                let f = fixed_rank::random_point(&mut rng, m, n, k);
                ManifoldPoint(Arc::new(PointRepr::LowRank(f)))
            }
        }
    }

    /// Deterministic pseudo-random tangent vector at `x`.
    pub fn random_tangent(&self, x: &ManifoldPoint, seed: u64) -> Result<TangentVector> {
        self.check_point(x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match (self, x.repr()) {
            (Manifold::FixedRank { .. }, PointRepr::LowRank(f)) => Ok(TangentVector::new(
                x.clone(),
                fixed_rank::random_tangent(&mut rng, f),
            )),
            _ => {
                let (r, c) = self.ambient_shape();
                self.project(x, &linalg::standard_normal(&mut rng, r, c))
            }
        }
    }

    /// Largest violation of the defining constraints of the manifold at `x`.
    ///
    /// Sphere: `|‖x‖ − 1|`; Stiefel: `‖XᵀX − I‖_F`; Oblique: largest
    /// `|‖x_j‖² − 1|`; fixed rank: orthonormality defects of `U` and `V`,
    /// or infinity if some singular value is not positive.
    pub fn point_residual(&self, x: &ManifoldPoint) -> Result<f64> {
        self.check_point(x)?;
        Ok(match (self, x.repr()) {
            (Manifold::Sphere { .. }, PointRepr::Dense(x)) => (x.norm() - 1.0).abs(),
            (Manifold::Oblique { .. }, PointRepr::Dense(x)) => x
                .column_iter()
                .map(|c| (c.norm_squared() - 1.0).abs())
                .fold(0.0, f64::max),
            (Manifold::Stiefel { p, .. }, PointRepr::Dense(x)) => {
                (x.transpose() * x - DMatrix::identity(*p, *p)).norm()
            }
            (Manifold::FixedRank { k, .. }, PointRepr::LowRank(f)) => {
                if f.s.iter().any(|&s| !(s > 0.0)) {
                    f64::INFINITY
                } else {
                    let id = DMatrix::identity(*k, *k);
                    let du = (f.u.transpose() * &f.u - &id).norm();
                    let dv = (f.v.transpose() * &f.v - &id).norm();
                    du.max(dv)
                }
            }
            _ => unreachable!("checked by check_point"),
        })
    }

    /// Relative distance between `v` and its projection onto `T_x M`.
    pub fn tangent_residual(&self, x: &ManifoldPoint, v: &TangentVector) -> Result<f64> {
        self.check_tangent_at(x, v)?;
        let ambient = self.tangent_to_ambient(v);
        let projected = self.tangent_to_ambient(&self.project(x, &ambient)?);
        let scale = ambient.norm().max(1.0);
        Ok((projected - &ambient).norm() / scale)
    }
}
