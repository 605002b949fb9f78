//! Benchmark objectives: Rayleigh quotient on the sphere, Brockett cost on the
//! Stiefel manifold, masked low-rank completion on the fixed-rank manifold and
//! the off-diagonal (joint diagonalisation) cost on the oblique manifold.

mod io;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, offdiag, qr_positive, standard_normal};
use crate::manifolds::{Manifold, ManifoldPoint, PointRepr, TangentVector};

/// A smooth cost on a manifold, described by its value and Euclidean
/// gradient. The Riemannian gradient is the tangent projection of the
/// Euclidean one, which is valid for embedded submanifolds with the induced
/// metric.
pub trait Objective: Send + Sync {
    fn manifold(&self) -> &Manifold;

    fn cost(&self, x: &ManifoldPoint) -> Result<f64>;

    fn euclidean_gradient(&self, x: &ManifoldPoint) -> Result<DMatrix<f64>>;

    fn rgrad(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        let egrad = self.euclidean_gradient(x)?;
        self.manifold().project(x, &egrad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Rayleigh,
    Brockett,
    Completion,
    OffDiag,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Rayleigh,
        ProblemKind::Brockett,
        ProblemKind::Completion,
        ProblemKind::OffDiag,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Rayleigh => "rayleigh",
            ProblemKind::Brockett => "brockett",
            ProblemKind::Completion => "completion",
            ProblemKind::OffDiag => "off_diag",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rayleigh" => Ok(ProblemKind::Rayleigh),
            "brockett" => Ok(ProblemKind::Brockett),
            "completion" => Ok(ProblemKind::Completion),
            "off_diag" | "offdiag" => Ok(ProblemKind::OffDiag),
            _ => Err(Error::UnknownProblem(s.to_string())),
        }
    }
}

/// Problem sizes used when generating an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Rayleigh {
        n: usize,
    },
    /// Weights are `N = diag(1, 2, …, p)`.
    Brockett {
        n: usize,
        p: usize,
    },
    Completion {
        m: usize,
        n: usize,
        k: usize,
        observe_prob: f64,
    },
    OffDiag {
        n: usize,
        p: usize,
        count: usize,
    },
}

impl ProblemSpec {
    /// Sizes of the reference experiments.
    pub fn standard(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Rayleigh => ProblemSpec::Rayleigh { n: 100 },
            ProblemKind::Brockett => ProblemSpec::Brockett { n: 20, p: 5 },
            ProblemKind::Completion => ProblemSpec::Completion {
                m: 100,
                n: 100,
                k: 4,
                observe_prob: 0.5,
            },
            ProblemKind::OffDiag => ProblemSpec::OffDiag {
                n: 100,
                p: 5,
                count: 10,
            },
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemSpec::Rayleigh { .. } => ProblemKind::Rayleigh,
            ProblemSpec::Brockett { .. } => ProblemKind::Brockett,
            ProblemSpec::Completion { .. } => ProblemKind::Completion,
            ProblemSpec::OffDiag { .. } => ProblemKind::OffDiag,
        }
    }

    pub fn manifold(&self) -> Result<Manifold> {
        match *self {
            ProblemSpec::Rayleigh { n } => Manifold::sphere(n),
            ProblemSpec::Brockett { n, p } => Manifold::stiefel(n, p),
            ProblemSpec::Completion { m, n, k, .. } => Manifold::fixed_rank(m, n, k),
            ProblemSpec::OffDiag { n, p, .. } => Manifold::oblique(n, p),
        }
    }

    fn tag(&self) -> String {
        match *self {
            ProblemSpec::Rayleigh { n } => format!("n{n}"),
            ProblemSpec::Brockett { n, p } => format!("n{n}p{p}"),
            ProblemSpec::Completion { m, n, k, .. } => format!("m{m}n{n}k{k}"),
            ProblemSpec::OffDiag { n, p, count } => format!("n{n}p{p}N{count}"),
        }
    }
}

/// `w · vᵀAv` with compensated summation over the `n²` products.
fn quadratic_form<S>(
    a: &DMatrix<f64>,
    v: nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S>,
    w: f64,
) -> f64
where
    S: nalgebra::storage::Storage<f64, nalgebra::Dyn, nalgebra::U1>,
{
    let n = v.len();
    linalg::compensated_sum((0..n).flat_map(|j| {
        let wvj = w * v[j];
        let v = &v;
        (0..n).map(move |i| a[(i, j)] * v[i] * wvj)
    }))
}

/// Problem data of an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemData {
    /// `f(x) = xᵀAx`, `A` symmetric positive definite.
    Rayleigh { a: DMatrix<f64> },
    /// `f(X) = tr(XᵀAXN)` with `N = diag(weights)`.
    Brockett {
        a: DMatrix<f64>,
        weights: DVector<f64>,
    },
    /// `f(X) = ‖P_Ω(X − A)‖²_F`. `omega` lists observed `(row, col)` pairs in
    /// row-major order.
    Completion {
        a: DMatrix<f64>,
        omega: Vec<(usize, usize)>,
    },
    /// `f(X) = Σᵢ ‖XᵀCᵢX − ddiag(XᵀCᵢX)‖²_F`, each `Cᵢ` symmetric.
    OffDiag { c: Vec<DMatrix<f64>> },
}

/// A generated (or imported) benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveInstance {
    pub id: String,
    pub seed: u64,
    manifold: Manifold,
    data: ProblemData,
}

impl ObjectiveInstance {
    /// Builds an instance, checking that the data matches the manifold and
    /// satisfies the symmetry/definiteness requirements of its kind.
    pub fn new(id: String, seed: u64, manifold: Manifold, data: ProblemData) -> Result<Self> {
        let inst = Self {
            id,
            seed,
            manifold: manifold.validated()?,
            data,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn kind(&self) -> ProblemKind {
        match self.data {
            ProblemData::Rayleigh { .. } => ProblemKind::Rayleigh,
            ProblemData::Brockett { .. } => ProblemKind::Brockett,
            ProblemData::Completion { .. } => ProblemKind::Completion,
            ProblemData::OffDiag { .. } => ProblemKind::OffDiag,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Instance(msg));
        match (&self.manifold, &self.data) {
            (Manifold::Sphere { n }, ProblemData::Rayleigh { a }) => {
                check_square(a, *n)?;
                check_symmetric(a)?;
                check_positive_definite(a)?;
            }
            (Manifold::Stiefel { n, p }, ProblemData::Brockett { a, weights }) => {
                check_square(a, *n)?;
                check_symmetric(a)?;
                check_positive_definite(a)?;
                if weights.len() != *p {
                    return bad(format!("expected {p} weights, got {}", weights.len()));
                }
                if weights.iter().any(|&w| !(w >= 0.0))
                    || weights.as_slice().windows(2).any(|w| w[0] > w[1])
                {
                    return bad("weights must be nonnegative and nondecreasing".into());
                }
            }
            (Manifold::FixedRank { m, n, .. }, ProblemData::Completion { a, omega }) => {
                if a.shape() != (*m, *n) {
                    return bad(format!("target is {:?}, expected {m}x{n}", a.shape()));
                }
                if let Some(&(i, j)) = omega.iter().find(|&&(i, j)| i >= *m || j >= *n) {
                    return bad(format!("observed index ({i}, {j}) outside {m}x{n}"));
                }
            }
            (Manifold::Oblique { n, .. }, ProblemData::OffDiag { c }) => {
                for ci in c {
                    check_square(ci, *n)?;
                    check_symmetric(ci)?;
                }
            }
            (m, _) => {
                return bad(format!(
                    "{:?} data does not live on {}",
                    self.kind(),
                    m.name()
                ))
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue of `A` for Rayleigh instances (the optimal value).
    pub fn rayleigh_minimum(&self) -> Option<f64> {
        match &self.data {
            ProblemData::Rayleigh { a } => linalg::sym_eigenvalues(a).first().copied(),
            _ => None,
        }
    }

    fn dense_point<'a>(&self, x: &'a ManifoldPoint) -> Result<&'a DMatrix<f64>> {
        self.manifold.check_point(x)?;
        Ok(x.as_dense().expect("checked by check_point"))
    }
}

fn check_square(a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.shape() != (n, n) {
        return Err(Error::Instance(format!(
            "matrix is {:?}, expected {n}x{n}",
            a.shape()
        )));
    }
    Ok(())
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let asym = (a - a.transpose()).norm();
    if !(asym <= 1e-12 * a.norm().max(1.0)) {
        return Err(Error::Instance(format!(
            "matrix not symmetric (defect {asym:e})"
        )));
    }
    Ok(())
}

fn check_positive_definite(a: &DMatrix<f64>) -> Result<()> {
    let lmin = linalg::sym_eigenvalues(a)[0];
    if !(lmin > 0.0) {
        return Err(Error::Instance(format!(
            "matrix not positive definite (λ_min = {lmin:e})"
        )));
    }
    Ok(())
}

impl Objective for ObjectiveInstance {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn cost(&self, x: &ManifoldPoint) -> Result<f64> {
        match &self.data {
            // Near a minimiser the decreases a line search must resolve are a
            // few ulps of the cost, so the quadratic forms are summed
            // accurately term by term.
            ProblemData::Rayleigh { a } => {
                let x = self.dense_point(x)?;
                Ok(quadratic_form(a, x.column(0), 1.0))
            }
            ProblemData::Brockett { a, weights } => {
                let x = self.dense_point(x)?;
                Ok(linalg::compensated_sum(
                    x.column_iter()
                        .zip(weights.iter())
                        .map(|(xj, &w)| quadratic_form(a, xj, w)),
                ))
            }
            ProblemData::Completion { a, omega } => {
                self.manifold.check_point(x)?;
                let PointRepr::LowRank(f) = x.repr() else {
                    unreachable!("checked by check_point");
                };
                // Only the observed entries of U S Vᵀ are needed.
                let us = {
                    let mut us = f.u.clone();
                    for (j, mut col) in us.column_iter_mut().enumerate() {
                        col *= f.s[j];
                    }
                    us
                };
                Ok(linalg::compensated_sum(omega.iter().map(|&(i, j)| {
                    let xij = us.row(i).dot(&f.v.row(j));
                    let r = xij - a[(i, j)];
                    r * r
                })))
            }
            ProblemData::OffDiag { c } => {
                let x = self.dense_point(x)?;
                Ok(c.iter()
                    .map(|ci| offdiag(&(x.transpose() * (ci * x))).norm_squared())
                    .sum())
            }
        }
    }

    fn euclidean_gradient(&self, x: &ManifoldPoint) -> Result<DMatrix<f64>> {
        match &self.data {
            ProblemData::Rayleigh { a } => {
                let x = self.dense_point(x)?;
                Ok(a * x * 2.0)
            }
            ProblemData::Brockett { a, weights } => {
                let x = self.dense_point(x)?;
                let mut g = a * x * 2.0;
                for (j, mut col) in g.column_iter_mut().enumerate() {
                    col *= weights[j];
                }
                Ok(g)
            }
            ProblemData::Completion { a, omega } => {
                self.manifold.check_point(x)?;
                let dense = x.to_ambient();
                let mut g = DMatrix::zeros(a.nrows(), a.ncols());
                for &(i, j) in omega {
                    g[(i, j)] = 2.0 * (dense[(i, j)] - a[(i, j)]);
                }
                Ok(g)
            }
            ProblemData::OffDiag { c } => {
                let x = self.dense_point(x)?;
                let mut g = DMatrix::zeros(x.nrows(), x.ncols());
                for ci in c {
                    let cx = ci * x;
                    let off = offdiag(&(x.transpose() * &cx));
                    g += cx * off * 4.0;
                }
                Ok(g)
            }
        }
    }
}

/// Random symmetric positive definite matrix `Q D Qᵀ` with `Q` orthogonal
/// (Q factor of a Gaussian matrix) and `D` uniform on `[1, 2]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let (q, _) = qr_positive(&standard_normal(rng, n, n));
    let d = DVector::from_fn(n, |_, _| rng.random_range(1.0..=2.0));
    let mut a = &q * DMatrix::from_diagonal(&d) * q.transpose();
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    a
}

/// Instance of `kind` at the reference sizes.
pub fn make_instance(kind: ProblemKind, seed: u64) -> Result<ObjectiveInstance> {
    make_instance_with(&ProblemSpec::standard(kind), seed)
}

/// Instance with explicit sizes; identical `(spec, seed)` give identical data.
pub fn make_instance_with(spec: &ProblemSpec, seed: u64) -> Result<ObjectiveInstance> {
    let manifold = spec.manifold()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = match *spec {
        ProblemSpec::Rayleigh { n } => ProblemData::Rayleigh {
            a: random_spd(&mut rng, n),
        },
        ProblemSpec::Brockett { n, p } => ProblemData::Brockett {
            a: random_spd(&mut rng, n),
            weights: DVector::from_fn(p, |i, _| (i + 1) as f64),
        },
        ProblemSpec::Completion {
            m, n, observe_prob, ..
        } => {
            if !(0.0..=1.0).contains(&observe_prob) {
                return Err(Error::InvalidConfig(format!(
                    "observation probability {observe_prob} outside [0, 1]"
                )));
            }
            let a = standard_normal(&mut rng, m, n);
            let mut omega = Vec::new();
            for i in 0..m {
                for j in 0..n {
                    if rng.random_bool(observe_prob) {
                        omega.push((i, j));
                    }
                }
            }
            ProblemData::Completion { a, omega }
        }
        ProblemSpec::OffDiag { n, count, .. } => ProblemData::OffDiag {
            c: (0..count)
                .map(|_| {
                    let b = standard_normal(&mut rng, n, n);
                    (&b + b.transpose()) * 0.5
                })
                .collect(),
        },
    };
    let id = format!("{}-{}-s{seed}", spec.kind(), spec.tag());
    ObjectiveInstance::new(id, seed, manifold, data)
}
