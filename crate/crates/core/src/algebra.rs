//! Block-diagonal matrix algebras with weighted traces.
//!
//! A [`TracialAlgebra`] is the direct sum `M_{n_1} ⊕ … ⊕ M_{n_k}` carrying the
//! trace `τ(x) = Σ c_i Tr(x_i)` with strictly positive weights `c_i`. Every
//! element is bounded, so the whole algebra doubles as each `L^p(M, τ)` with
//! the norm `‖x‖_p = τ(|x|^p)^{1/p}`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Finite model of a von Neumann algebra with a faithful normal trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracialAlgebra {
    dims: Vec<usize>,
    weights: Vec<f64>,
}

impl TracialAlgebra {
    pub fn new(dims: Vec<usize>, weights: Vec<f64>) -> Result<Arc<Self>> {
        if dims.is_empty() {
            return Err(Error::InvalidAlgebra(
                "at least one block is required".into(),
            ));
        }
        if dims.len() != weights.len() {
            return Err(Error::InvalidAlgebra(format!(
                "{} blocks but {} weights",
                dims.len(),
                weights.len()
            )));
        }
        if let Some(i) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidAlgebra(format!("block {i} has dimension 0")));
        }
        if let Some(i) = weights.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidAlgebra(format!(
                "weight {i} = {} is not strictly positive and finite",
                weights[i]
            )));
        }
        Ok(Arc::new(Self { dims, weights }))
    }

    /// One `n × n` block with unit weight.
    pub fn matrix(n: usize) -> Result<Arc<Self>> {
        Self::new(vec![n], vec![1.0])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    /// Σ n_i, the dimension of the underlying Hilbert space.
    pub fn dimension(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Σ n_i², the complex dimension of the algebra itself.
    pub fn vec_dim(&self) -> usize {
        self.dims.iter().map(|n| n * n).sum()
    }

    /// τ(1) = Σ c_i n_i.
    pub fn total_trace(&self) -> f64 {
        self.dims
            .iter()
            .zip(&self.weights)
            .map(|(&n, &c)| c * n as f64)
            .sum()
    }

    /// Weighted trace of `x`, rejecting operators from another algebra.
    pub fn trace(&self, x: &Operator) -> Result<Complex64> {
        if *x.alg != *self {
            return Err(Error::AlgebraMismatch);
        }
        Ok(x.trace())
    }
}

/// Element of a [`TracialAlgebra`], stored block by block.
#[derive(Debug, Clone)]
pub struct Operator {
    alg: Arc<TracialAlgebra>,
    blocks: Vec<CMatrix>,
}

impl Operator {
    pub fn from_blocks(alg: &Arc<TracialAlgebra>, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != alg.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                alg.num_blocks(),
                blocks.len()
            )));
        }
        for (i, (b, &n)) in blocks.iter().zip(alg.dims()).enumerate() {
            if b.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} has shape {:?}, expected ({n}, {n})",
                    b.shape()
                )));
            }
        }
        Ok(Self {
            alg: alg.clone(),
            blocks,
        })
    }

    pub fn zero(alg: &Arc<TracialAlgebra>) -> Self {
        Self::scalar(alg, ZERO)
    }

    pub fn identity(alg: &Arc<TracialAlgebra>) -> Self {
        Self::scalar(alg, ONE)
    }

    pub fn scalar(alg: &Arc<TracialAlgebra>, c: Complex64) -> Self {
        let blocks = alg
            .dims()
            .iter()
            .map(|&n| CMatrix::from_diagonal_element(n, n, c))
            .collect();
        Self {
            alg: alg.clone(),
            blocks,
        }
    }

    /// Diagonal operator from the concatenated diagonal over all blocks.
    pub fn diagonal(alg: &Arc<TracialAlgebra>, values: &[f64]) -> Result<Self> {
        if values.len() != alg.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} diagonal entries, got {}",
                alg.dimension(),
                values.len()
            )));
        }
        let mut offset = 0;
        let blocks = alg
            .dims()
            .iter()
            .map(|&n| {
                let d = DVector::from_iterator(
                    n,
                    values[offset..offset + n]
                        .iter()
                        .map(|&v| Complex64::new(v, 0.0)),
                );
                offset += n;
                CMatrix::from_diagonal(&d)
            })
            .collect();
        Ok(Self {
            alg: alg.clone(),
            blocks,
        })
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn same_algebra(&self, other: &Operator) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Operator {
        assert!(
            self.same_algebra(other),
            "operators belong to different algebras"
        );
        Operator {
            alg: self.alg.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn map_blocks(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Operator {
        Operator {
            alg: self.alg.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn adjoint(&self) -> Operator {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        self.map_blocks(|b| b * c)
    }

    pub fn scale_real(&self, c: f64) -> Operator {
        self.map_blocks(|b| b * Complex64::new(c, 0.0))
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: Complex64, other: &Operator) {
        assert!(
            self.same_algebra(other),
            "operators belong to different algebras"
        );
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * c;
        }
    }

    /// τ(x) = Σ c_i Tr(x_i).
    pub fn trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .zip(self.alg.weights())
            .map(|(b, &c)| b.trace() * c)
            .sum()
    }

    pub fn singular_values(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| b.clone().singular_values().iter().copied().collect())
            .collect()
    }

    /// Operator norm: the largest singular value over all blocks.
    pub fn norm_inf(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    /// ‖x‖_p = τ(|x|^p)^{1/p}; `p = f64::INFINITY` gives the operator norm.
    pub fn pnorm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
        }
        if p.is_infinite() {
            return Ok(self.norm_inf());
        }
        let sv = self.singular_values();
        let scale = sv
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(0.0);
        }
        let sum: f64 = sv
            .iter()
            .zip(self.alg.weights())
            .map(|(v, &c)| c * v.iter().map(|s| (s / scale).powf(p)).sum::<f64>())
            .sum();
        Ok(scale * sum.powf(1.0 / p))
    }

    /// ‖x − y‖_∞.
    pub fn dist_inf(&self, other: &Operator) -> f64 {
        (self - other).norm_inf()
    }

    /// (x + x*)/2.
    pub fn hermitian_part(&self) -> Operator {
        self.map_blocks(|b| (b + b.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// ‖x − x*‖_∞.
    pub fn hermitian_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.adjoint()).clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol * self.norm_inf().max(f64::MIN_POSITIVE)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_part()
            .blocks
            .iter()
            .map(|b| SymmetricEigen::new(b.clone()).eigenvalues.min())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue of the Hermitian part.
    pub fn max_eigenvalue(&self) -> f64 {
        self.hermitian_part()
            .blocks
            .iter()
            .map(|b| SymmetricEigen::new(b.clone()).eigenvalues.max())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Tolerance-qualified positivity: self-adjoint and min eigenvalue `>= -tol‖x‖`.
    pub fn is_positive(&self, tol: f64) -> bool {
        let scale = self.norm_inf();
        if scale == 0.0 {
            return true;
        }
        self.hermitian_residual() <= tol * scale && self.min_eigenvalue() >= -tol * scale
    }

    /// |x| = (x* x)^{1/2}.
    pub fn abs(&self) -> Operator {
        self.map_blocks(|b| {
            let eig = SymmetricEigen::new(b.adjoint() * b);
            let v = &eig.eigenvectors;
            let d = DVector::from_iterator(
                eig.eigenvalues.len(),
                eig.eigenvalues
                    .iter()
                    .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
            );
            v * CMatrix::from_diagonal(&d) * v.adjoint()
        })
    }

    /// Eigendecomposition of a self-adjoint operator (ascending eigenvalues).
    pub fn spectral_resolution(&self, tol: f64) -> Result<SpectralResolution> {
        let scale = self.norm_inf();
        let residual = self.hermitian_residual();
        if residual > tol * scale.max(f64::MIN_POSITIVE) && residual > 0.0 {
            return Err(Error::NotSelfAdjoint {
                residual: residual / scale,
            });
        }
        let sym = self.hermitian_part();
        let mut eigenvalues = Vec::with_capacity(sym.blocks.len());
        let mut eigenvectors = Vec::with_capacity(sym.blocks.len());
        for b in &sym.blocks {
            let eig = SymmetricEigen::new(b.clone());
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            eigenvalues.push(order.iter().map(|&i| eig.eigenvalues[i]).collect());
            eigenvectors.push(CMatrix::from_columns(
                &order
                    .iter()
                    .map(|&i| eig.eigenvectors.column(i).into_owned())
                    .collect::<Vec<_>>(),
            ));
        }
        Ok(SpectralResolution {
            alg: self.alg.clone(),
            eigenvalues,
            eigenvectors,
        })
    }

    /// Functional calculus `f(x)` for self-adjoint `x`.
    pub fn apply_function(&self, tol: f64, f: impl Fn(f64) -> f64) -> Result<Operator> {
        Ok(self.spectral_resolution(tol)?.map(f))
    }

    /// `x^p` for positive `x`; small negative eigenvalues are clamped to zero.
    pub fn positive_power(&self, p: f64, tol: f64) -> Result<Operator> {
        self.apply_function(tol, |l| l.max(0.0).powf(p))
    }

    /// `e x e`.
    pub fn compress(&self, e: &Projection) -> Operator {
        let p = e.operator();
        &(p * self) * p
    }

    /// Row-major concatenation of all block entries.
    pub fn to_vec(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.alg.vec_dim(),
            self.blocks.iter().flat_map(|b| {
                (0..b.nrows()).flat_map(move |r| (0..b.ncols()).map(move |c| b[(r, c)]))
            }),
        )
    }

    pub fn from_vec(alg: &Arc<TracialAlgebra>, v: &DVector<Complex64>) -> Result<Self> {
        if v.len() != alg.vec_dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for algebra of dimension {}",
                v.len(),
                alg.vec_dim()
            )));
        }
        let mut offset = 0;
        let blocks = alg
            .dims()
            .iter()
            .map(|&n| {
                let b =
                    CMatrix::from_row_iterator(n, n, v.iter().skip(offset).take(n * n).copied());
                offset += n * n;
                b
            })
            .collect();
        Ok(Self {
            alg: alg.clone(),
            blocks,
        })
    }

    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson {
                    dim: b.nrows(),
                    re: (0..b.nrows())
                        .map(|r| (0..b.ncols()).map(|c| b[(r, c)].re).collect())
                        .collect(),
                    im: (0..b.nrows())
                        .map(|r| (0..b.ncols()).map(|c| b[(r, c)].im).collect())
                        .collect(),
                })
                .collect(),
            weights: self.alg.weights().to_vec(),
        }
    }

    /// Parses the operator JSON schema, building the algebra it describes.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let parsed: OperatorJson =
            serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
        parsed.to_operator()
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.map_blocks(|b| -b)
    }
}

/// Wire format: `{ "blocks": [{ "dim": n, "re": [[..]], "im": [[..]] }], "weights": [..] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub blocks: Vec<BlockJson>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn to_operator(&self) -> Result<Operator> {
        let alg = TracialAlgebra::new(
            self.blocks.iter().map(|b| b.dim).collect(),
            self.weights.clone(),
        )?;
        self.to_operator_in(&alg)
    }

    /// Builds the operator inside an existing algebra, checking that dimensions agree.
    pub fn to_operator_in(&self, alg: &Arc<TracialAlgebra>) -> Result<Operator> {
        let dims: Vec<usize> = self.blocks.iter().map(|b| b.dim).collect();
        if dims != alg.dims() {
            return Err(Error::ShapeMismatch(format!(
                "json blocks {dims:?} do not match algebra {:?}",
                alg.dims()
            )));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let n = b.dim;
            let ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
            if !ok(&b.re) || !ok(&b.im) {
                return Err(Error::ShapeMismatch(format!(
                    "block {i}: re/im must be {n} x {n}"
                )));
            }
            blocks.push(CMatrix::from_fn(n, n, |r, c| {
                Complex64::new(b.re[r][c], b.im[r][c])
            }));
        }
        Operator::from_blocks(alg, blocks)
    }
}

/// Eigendecomposition of a self-adjoint operator: ascending eigenvalues and
/// orthonormal eigenvector columns per block.
#[derive(Debug, Clone)]
pub struct SpectralResolution {
    alg: Arc<TracialAlgebra>,
    eigenvalues: Vec<Vec<f64>>,
    eigenvectors: Vec<CMatrix>,
}

impl SpectralResolution {
    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[CMatrix] {
        &self.eigenvectors
    }

    /// All eigenvalues paired with their block's trace weight.
    pub fn weighted_eigenvalues(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.eigenvalues
            .iter()
            .zip(self.alg.weights())
            .flat_map(|(ls, &c)| ls.iter().map(move |&l| (l, c)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Operator {
        let blocks = self
            .eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(ls, v)| {
                let d =
                    DVector::from_iterator(ls.len(), ls.iter().map(|&l| Complex64::new(f(l), 0.0)));
                v * CMatrix::from_diagonal(&d) * v.adjoint()
            })
            .collect();
        Operator {
            alg: self.alg.clone(),
            blocks,
        }
    }

    pub fn reconstruct(&self) -> Operator {
        self.map(|l| l)
    }

    /// max_i ‖V_i* V_i − 1‖_∞.
    pub fn gram_residual(&self) -> f64 {
        self.eigenvectors
            .iter()
            .map(|v| {
                let n = v.ncols();
                (v.adjoint() * v - CMatrix::identity(n, n))
                    .singular_values()
                    .max()
            })
            .fold(0.0, f64::max)
    }

    /// Projection onto eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projection_where(&self, keep: impl Fn(f64) -> bool) -> Projection {
        let blocks = self
            .eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(ls, v)| {
                let n = v.nrows();
                let cols: Vec<_> = ls
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| keep(l))
                    .map(|(k, _)| v.column(k).into_owned())
                    .collect();
                range_projector(n, &cols)
            })
            .collect();
        Projection {
            op: Operator {
                alg: self.alg.clone(),
                blocks,
            },
        }
    }

    /// The spectral projection `e_λ`: eigenvectors with eigenvalue `<= level + tol`.
    pub fn spectral_projection(&self, level: f64, tol: f64) -> Projection {
        self.projection_where(|l| l <= level + tol)
    }

    /// τ(1 − e_λ), the weighted count of eigenvalues strictly above `level + tol`.
    pub fn cotrace_above(&self, level: f64, tol: f64) -> f64 {
        self.weighted_eigenvalues()
            .filter(|&(l, _)| l > level + tol)
            .map(|(_, c)| c)
            .sum()
    }
}

/// Free-function form of [`SpectralResolution::spectral_projection`].
pub fn spectral_projection(res: &SpectralResolution, level: f64, tol: f64) -> Projection {
    res.spectral_projection(level, tol)
}

fn range_projector(n: usize, cols: &[DVector<Complex64>]) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for v in cols {
        p += v * v.adjoint();
    }
    p
}

/// Self-adjoint idempotent element of the algebra.
#[derive(Debug, Clone)]
pub struct Projection {
    op: Operator,
}

impl Projection {
    /// Validates `‖p² − p‖ <= tol` and `‖p − p*‖ <= tol`.
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        let idempotency = (&(&op * &op) - &op).norm_inf();
        let adjointness = op.hermitian_residual();
        if idempotency > tol || adjointness > tol {
            return Err(Error::NotAProjection {
                idempotency,
                adjointness,
            });
        }
        Ok(Self { op })
    }

    pub fn identity(alg: &Arc<TracialAlgebra>) -> Self {
        Self {
            op: Operator::identity(alg),
        }
    }

    pub fn zero(alg: &Arc<TracialAlgebra>) -> Self {
        Self {
            op: Operator::zero(alg),
        }
    }

    /// Projection onto the span of the given columns, one list per block.
    /// Columns are orthonormalised first.
    pub fn from_spanning_columns(
        alg: &Arc<TracialAlgebra>,
        columns: &[Vec<DVector<Complex64>>],
    ) -> Result<Self> {
        if columns.len() != alg.num_blocks() {
            return Err(Error::ShapeMismatch("one column list per block".into()));
        }
        let blocks = alg
            .dims()
            .iter()
            .zip(columns)
            .map(|(&n, cols)| {
                if cols.is_empty() {
                    return CMatrix::zeros(n, n);
                }
                let m = CMatrix::from_columns(cols);
                let svd = m.svd(true, false);
                let u = svd.u.expect("u requested");
                let smax = svd.singular_values.max();
                let basis: Vec<_> = (0..svd.singular_values.len())
                    .filter(|&k| svd.singular_values[k] > 1e-10 * smax.max(1.0))
                    .map(|k| u.column(k).into_owned())
                    .collect();
                range_projector(n, &basis)
            })
            .collect();
        Ok(Self {
            op: Operator::from_blocks(alg, blocks)?,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        self.op.algebra()
    }

    /// e⊥ = 1 − e.
    pub fn complement(&self) -> Projection {
        Projection {
            op: &Operator::identity(self.algebra()) - &self.op,
        }
    }

    /// τ(e).
    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    /// τ(e⊥) = τ(1) − τ(e).
    pub fn cotrace(&self) -> f64 {
        self.complement().trace().max(0.0)
    }

    pub fn idempotency_residual(&self) -> f64 {
        (&(&self.op * &self.op) - &self.op).norm_inf()
    }

    pub fn adjointness_residual(&self) -> f64 {
        self.op.hermitian_residual()
    }

    /// `self <= other` in the projection lattice, i.e. `other · self = self`.
    pub fn is_below(&self, other: &Projection, tol: f64) -> bool {
        (&(&other.op * &self.op) - &self.op).norm_inf() <= tol
    }

    pub fn meet(&self, other: &Projection, tol: &Tolerances) -> Projection {
        proj_meet(self, other, tol)
    }
}

/// Projection onto `range(p) ∩ range(q)`.
///
/// Per block, the intersection is the null space of the stacked complements
/// `[(1 − p); (1 − q)]`, read off from right singular vectors whose singular
/// value is at most `tol.meet_singular * n`.
pub fn proj_meet(p: &Projection, q: &Projection, tol: &Tolerances) -> Projection {
    assert!(
        p.op.same_algebra(&q.op),
        "projections belong to different algebras"
    );
    let blocks =
        p.op.blocks
            .iter()
            .zip(&q.op.blocks)
            .map(|(pb, qb)| {
                let n = pb.nrows();
                let id = CMatrix::identity(n, n);
                let mut stacked = CMatrix::zeros(2 * n, n);
                stacked.rows_mut(0, n).copy_from(&(&id - pb));
                stacked.rows_mut(n, n).copy_from(&(&id - qb));
                let svd = stacked.svd(false, true);
                let v_t = svd.v_t.expect("v_t requested");
                let threshold = tol.meet_singular * n as f64;
                let cols: Vec<_> = (0..svd.singular_values.len())
                    .filter(|&k| svd.singular_values[k] <= threshold)
                    .map(|k| v_t.row(k).adjoint())
                    .collect();
                range_projector(n, &cols)
            })
            .collect();
    Projection {
        op: Operator {
            alg: p.op.alg.clone(),
            blocks,
        },
    }
}

/// Meet of a finite family; the empty meet is the identity.
pub fn meet_all<'a>(
    alg: &Arc<TracialAlgebra>,
    projections: impl IntoIterator<Item = &'a Projection>,
    tol: &Tolerances,
) -> Projection {
    projections
        .into_iter()
        .fold(Projection::identity(alg), |acc, p| proj_meet(&acc, p, tol))
}

/// Weighted trace with an explicit algebra argument.
pub fn trace(alg: &TracialAlgebra, x: &Operator) -> Result<Complex64> {
    alg.trace(x)
}

/// ‖x‖_p with an explicit algebra argument.
pub fn pnorm(alg: &TracialAlgebra, x: &Operator, p: f64) -> Result<f64> {
    if *x.alg != *alg {
        return Err(Error::AlgebraMismatch);
    }
    x.pnorm(p)
}
