//! Fibre Lie algebras: structure constants, brackets, adjoint maps, centre,
//! Killing form and ad-invariant metrics.
//!
//! Structure constants are stored densely as `C[a][b][c]` with
//! `[e_b, e_c] = sum_a C[a][b][c] e_a`.
//!
//! Named algebras and their bases:
//!
//! * `u1^k` (and `u1` = `u1^1`): abelian, all constants zero.
//! * `su2`, `so3`: basis `e_k = -i sigma_k / 2` (resp. the rotation
//!   generators), `[e_i, e_j] = eps_ijk e_k`.
//! * `u1+su2`: `e1` spans `u(1)`, `e2..e4` are the `su2` basis above.
//! * `heisenberg3`: `[e1, e2] = e3`, everything else zero.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LieError {
    #[error("unknown algebra tag '{0}'")]
    UnknownAlgebra(String),
    #[error("structure constants must be a nonempty dim x dim x dim array")]
    BadShape,
    #[error("AntisymmetryViolation: C[{a}][{b}][{c}] + C[{a}][{c}][{b}] = {residual}")]
    AntisymmetryViolation {
        a: usize,
        b: usize,
        c: usize,
        residual: f64,
    },
    #[error("JacobiViolation: residual {residual} at (a,b,c,e) = ({a},{b},{c},{e})")]
    JacobiViolation {
        a: usize,
        b: usize,
        c: usize,
        e: usize,
        residual: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("fibre metric is not symmetric positive definite")]
    NotPositiveDefinite,
}

/// Tolerance on the antisymmetry and Jacobi residuals accepted at construction.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;

/// Relative singular-value cutoff used for every nullspace and
/// pseudo-inverse in this crate.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// What to build an algebra from.
#[derive(Clone, Debug)]
pub enum AlgebraSpec {
    Named(String),
    Constants(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebra {
    dim: usize,
    constants: Vec<f64>,
    name: Option<String>,
}

fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn su2_block(dim: usize, offset: usize) -> Vec<Vec<Vec<f64>>> {
    let mut c = vec![vec![vec![0.0; dim]; dim]; dim];
    for a in 0..3 {
        for b in 0..3 {
            for d in 0..3 {
                c[a + offset][b + offset][d + offset] = epsilon(b, d, a);
            }
        }
    }
    c
}

/// Expands a named algebra tag into its structure constants.
fn named_constants(tag: &str) -> Result<Vec<Vec<Vec<f64>>>, LieError> {
    let tag = tag.trim();
    match tag {
        "su2" | "so3" => Ok(su2_block(3, 0)),
        "u1+su2" | "su2+u1" => Ok(su2_block(4, 1)),
        "heisenberg3" => {
            let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
            c[2][0][1] = 1.0;
            c[2][1][0] = -1.0;
            Ok(c)
        }
        "u1" => Ok(vec![vec![vec![0.0]]]),
        _ => {
            let k = tag
                .strip_prefix("u1^")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|k| *k >= 1)
                .ok_or_else(|| LieError::UnknownAlgebra(tag.to_string()))?;
            Ok(vec![vec![vec![0.0; k]; k]; k])
        }
    }
}

/// Builds and validates an algebra from a tag or raw constants.
pub fn make_algebra(spec: &AlgebraSpec) -> Result<LieAlgebra, LieError> {
    match spec {
        AlgebraSpec::Named(tag) => {
            let mut alg = LieAlgebra::from_constants(&named_constants(tag)?)?;
            alg.name = Some(tag.trim().to_string());
            Ok(alg)
        }
        AlgebraSpec::Constants(c) => LieAlgebra::from_constants(c),
    }
}

impl LieAlgebra {
    pub fn named(tag: &str) -> Result<Self, LieError> {
        make_algebra(&AlgebraSpec::Named(tag.to_string()))
    }

    pub fn from_constants(c: &[Vec<Vec<f64>>]) -> Result<Self, LieError> {
        let dim = c.len();
        if dim == 0 || c.iter().any(|m| m.len() != dim || m.iter().any(|r| r.len() != dim)) {
            return Err(LieError::BadShape);
        }
        let constants = c
            .iter()
            .flat_map(|m| m.iter().flat_map(|r| r.iter().copied()))
            .collect();
        let alg = Self {
            dim,
            constants,
            name: None,
        };
        alg.validate()?;
        Ok(alg)
    }

    /// Jacobi is checked first so that a single corrupted entry, which
    /// breaks both laws, reports the Jacobi defect.
    fn validate(&self) -> Result<(), LieError> {
        let (residual, idx) = self.jacobi_residual();
        if residual > STRUCTURE_TOLERANCE {
            return Err(LieError::JacobiViolation {
                a: idx[0] + 1,
                b: idx[1] + 1,
                c: idx[2] + 1,
                e: idx[3] + 1,
                residual,
            });
        }
        let n = self.dim;
        let mut worst = (0.0, 0, 0, 0);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let r = (self.c(a, b, c) + self.c(a, c, b)).abs();
                    if r > worst.0 {
                        worst = (r, a, b, c);
                    }
                }
            }
        }
        if worst.0 > STRUCTURE_TOLERANCE {
            return Err(LieError::AntisymmetryViolation {
                a: worst.1 + 1,
                b: worst.2 + 1,
                c: worst.3 + 1,
                residual: worst.0,
            });
        }
        Ok(())
    }

    /// Worst Jacobi defect over all index quadruples and where it occurs.
    pub fn jacobi_residual(&self) -> (f64, [usize; 4]) {
        let n = self.dim;
        let mut worst = (0.0, [0; 4]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let s: f64 = (0..n)
                            .map(|d| {
                                self.c(a, d, e) * self.c(d, b, c)
                                    + self.c(a, d, b) * self.c(d, c, e)
                                    + self.c(a, d, c) * self.c(d, e, b)
                            })
                            .sum();
                        if s.abs() > worst.0 {
                            worst = (s.abs(), [a, b, c, e]);
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// `C[a][b][c]`, the `e_a` coefficient of `[e_b, e_c]`.
    #[inline]
    pub fn c(&self, a: usize, b: usize, c: usize) -> f64 {
        self.constants[(a * self.dim + b) * self.dim + c]
    }

    pub fn structure_constants(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|a| {
                (0..self.dim)
                    .map(|b| (0..self.dim).map(|c| self.c(a, b, c)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.constants.iter().all(|c| *c == 0.0)
    }

    /// Nonzero constants as `(a, b, c, C[a][b][c])`.
    pub fn nonzero_constants(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let n = self.dim;
        self.constants
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, v)| (i / (n * n), (i / n) % n, i % n, *v))
    }

    fn check_len(&self, len: usize) -> Result<(), LieError> {
        if len != self.dim {
            return Err(LieError::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }

    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>, LieError> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        let mut w = vec![0.0; self.dim];
        for (a, b, c, k) in self.nonzero_constants() {
            w[a] += k * u[b] * v[c];
        }
        Ok(w)
    }

    /// `M[a][c] = sum_b C[a][b][c] u[b]`, so that `M v = [u, v]`.
    pub fn ad_matrix(&self, u: &[f64]) -> Result<DMatrix<f64>, LieError> {
        self.check_len(u.len())?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (a, b, c, k) in self.nonzero_constants() {
            m[(a, c)] += k * u[b];
        }
        Ok(m)
    }

    /// The linear map `v -> ad(v)` as a `dim^2 x dim` matrix, row `a*dim + c`.
    pub fn stacked_ad(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n * n, n);
        for (a, b, c, k) in self.nonzero_constants() {
            m[(a * n + c, b)] += k;
        }
        m
    }

    /// Orthonormal basis of the centre as matrix columns (possibly zero
    /// columns).
    pub fn centre_basis(&self) -> DMatrix<f64> {
        nullspace(&self.stacked_ad())
    }

    /// `B[x][y] = tr(ad(e_x) ad(e_y))`.
    pub fn killing_form(&self) -> DMatrix<f64> {
        let n = self.dim;
        let ads: Vec<DMatrix<f64>> = (0..n)
            .map(|x| {
                let mut e = vec![0.0; n];
                e[x] = 1.0;
                self.ad_matrix(&e).expect("basis vector has algebra dimension")
            })
            .collect();
        DMatrix::from_fn(n, n, |x, y| (&ads[x] * &ads[y]).trace())
    }

    /// Max over basis triples of `|k([e_z,e_x],e_y) + k(e_x,[e_z,e_y])|`.
    pub fn check_ad_invariance(&self, kappa: &FibreMetric) -> Result<f64, LieError> {
        self.check_len(kappa.dim())?;
        let n = self.dim;
        let k = kappa.matrix();
        let mut worst: f64 = 0.0;
        for z in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let s: f64 = (0..n)
                        .map(|a| self.c(a, z, x) * k[(a, y)] + k[(x, a)] * self.c(a, z, y))
                        .sum();
                    worst = worst.max(s.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Orthonormal nullspace basis of `m` (as columns) under [`RANK_THRESHOLD`].
pub fn nullspace(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Work with the square Gram matrix so V is always complete.
    let gram = m.transpose() * m;
    let svd = gram.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_THRESHOLD * largest.sqrt().max(1.0);
    let null: Vec<usize> = (0..cols)
        .filter(|&i| svd.singular_values[i].max(0.0).sqrt() < cutoff)
        .collect();
    let mut basis = DMatrix::zeros(cols, null.len());
    for (j, &i) in null.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}

/// Minimum-norm least-squares pseudo-inverse with the crate rank threshold.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_THRESHOLD * largest.max(1.0);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut pinv = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s >= cutoff {
            pinv += v_t.row(i).transpose() * u.column(i).transpose() / *s;
        }
    }
    pinv
}

/// Constant fibre metric `kappa_ab`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibreMetric {
    matrix: DMatrix<f64>,
}

impl FibreMetric {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, LieError> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(LieError::BadShape);
        }
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > STRUCTURE_TOLERANCE || matrix.clone().cholesky().is_none() {
            return Err(LieError::NotPositiveDefinite);
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LieError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LieError::BadShape);
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }
}

/// An ad-invariant metric for `alg`: the identity when it is invariant,
/// otherwise minus the Killing form when that is positive definite.
pub fn invariant_metric(alg: &LieAlgebra) -> Option<FibreMetric> {
    let id = FibreMetric::identity(alg.dim());
    if alg.check_ad_invariance(&id).ok()? < STRUCTURE_TOLERANCE {
        return Some(id);
    }
    let neg_killing = FibreMetric::new(-alg.killing_form()).ok()?;
    (alg.check_ad_invariance(&neg_killing).ok()? < STRUCTURE_TOLERANCE).then_some(neg_killing)
}
