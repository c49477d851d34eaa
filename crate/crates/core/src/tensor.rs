//! Dense Grassmannian and rank-3 tensor algebra.
//!
//! Planes are stored as orthogonal projection matrices, curvature tensors as
//! dense row-major `n³` arrays indexed `(i, j, k)`. The central routine is
//! [`solve_curvature_system`], which inverts the linear map
//! `a_ijk + c_jk Σ_q a_qiq = b_ijk` in closed form.

use std::ops::{Deref, Index, IndexMut};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
/// Largest ambient dimension for which the explicit `n³ × n³` matrix is built.
pub const FULL_SYSTEM_MAX_N: usize = 4;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for k in (j + 1)..n {
            dev = dev.max((m[(j, k)] - m[(k, j)]).abs());
        }
    }
    dev
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix with eigenpairs sorted by
/// decreasing eigenvalue. Ties keep the order produced by the solver.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// An element of the Grassmannian `G(d, n)`, stored as the `n × n`
/// orthogonal projection onto the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: DMatrix<f64>,
    rank: usize,
}

impl Projector {
    /// Validates a symmetric idempotent matrix of trace `rank`.
    pub fn new(matrix: DMatrix<f64>, rank: usize) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n == 0 {
            return Err(Error::InvalidInput("projector must be a non-empty square matrix".into()));
        }
        if rank == 0 || rank > n {
            return Err(Error::InvalidInput(format!("rank {rank} outside 1..={n}")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("projector has non-finite entries".into()));
        }
        let asym = asymmetry(&matrix);
        if asym > 1e-12 {
            return Err(Error::InvalidInput(format!("projector not symmetric (deviation {asym:e})")));
        }
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        if idem > 1e-10 {
            return Err(Error::InvalidInput(format!("projector not idempotent (deviation {idem:e})")));
        }
        let trace = matrix.trace();
        if (trace - rank as f64).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("projector trace {trace} differs from rank {rank}")));
        }
        Ok(Self { matrix, rank })
    }

    /// Projector onto the span of the columns of an `n × d` matrix with
    /// orthonormal columns.
    pub fn from_orthonormal_basis(basis: &DMatrix<f64>) -> Self {
        let matrix = symmetrized(&(basis * basis.transpose()));
        Self { matrix, rank: basis.ncols() }
    }

    /// Projector onto the span of arbitrary linearly independent vectors.
    pub fn from_span(vectors: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::InvalidInput("empty spanning set".into()));
        };
        let n = first.len();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != n {
                return Err(Error::InvalidInput("spanning vectors of unequal length".into()));
            }
            let mut w = v.clone();
            for b in &basis {
                let proj = b.dot(&w);
                w -= b * proj;
            }
            let norm = w.norm();
            if norm <= 1e-12 * v.norm().max(1e-300) {
                return Err(Error::InvalidInput("spanning vectors are linearly dependent".into()));
            }
            basis.push(w / norm);
        }
        Ok(Self::from_orthonormal_basis(&DMatrix::from_columns(&basis)))
    }

    /// The rank-`rank` projector closest to the symmetric part of `matrix`.
    pub fn nearest(matrix: &DMatrix<f64>, rank: usize) -> Self {
        let n = matrix.nrows();
        let (_, vectors) = sorted_symmetric_eigen(&symmetrized(matrix));
        let basis = vectors.columns(0, rank.min(n)).into_owned();
        Self::from_orthonormal_basis(&basis)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.matrix[(j, k)]
    }

    /// Column-major entries; symmetric, so row-major order is identical.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        self.matrix.as_slice()
    }

    /// `n × d` matrix whose columns form an orthonormal basis of the plane.
    pub fn tangent_basis(&self) -> DMatrix<f64> {
        let (_, vectors) = sorted_symmetric_eigen(&self.matrix);
        vectors.columns(0, self.rank).into_owned()
    }

    /// Unit vector spanning the normal line of a hyperplane. The sign makes
    /// the first component that is nonzero (above `1e-12`) positive.
    pub fn unit_normal(&self) -> Result<DVector<f64>> {
        let n = self.ambient_dim();
        if self.rank + 1 != n {
            return Err(Error::Codimension { d: self.rank, n });
        }
        let complement = DMatrix::identity(n, n) - &self.matrix;
        let (best, _) = (0..n)
            .map(|c| (c, complement.column(c).norm()))
            .fold((0, -1.0), |acc, (c, v)| if v > acc.1 { (c, v) } else { acc });
        let mut normal: DVector<f64> = complement.column(best).into_owned();
        normal /= normal.norm();
        if let Some(first) = normal.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                normal = -normal;
            }
        }
        Ok(normal)
    }

    /// `R P Rᵀ` for an orthogonal `R`.
    pub fn conjugate(&self, rotation: &DMatrix<f64>) -> Self {
        let matrix = symmetrized(&(rotation * &self.matrix * rotation.transpose()));
        Self { matrix, rank: self.rank }
    }
}

/// Symmetric positive semidefinite matrix with entries in `[-1, 1]`, the
/// averaged plane `c` entering the curvature system.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMatrix(DMatrix<f64>);

impl DirectionMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n == 0 {
            return Err(Error::InvalidDirectionMatrix("must be a non-empty square matrix".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("direction matrix has non-finite entries".into()));
        }
        let asym = asymmetry(&matrix);
        if asym > SYMMETRY_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::InvalidDirectionMatrix(format!("not symmetric (deviation {asym:e})")));
        }
        let mut sym = symmetrized(&matrix);
        let eig = SymmetricEigen::new(sym.clone());
        let min = eig.eigenvalues.min();
        if min < -PSD_TOL {
            return Err(Error::InvalidDirectionMatrix(format!("negative eigenvalue {min:e}")));
        }
        if min < 0.0 {
            let clamped = eig.eigenvalues.map(|v| v.max(0.0));
            sym = symmetrized(&(&eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()));
        }
        if max_abs(&sym) > 1.0 + SYMMETRY_TOL {
            return Err(Error::InvalidDirectionMatrix("entries exceed 1 in magnitude".into()));
        }
        Ok(Self(sym))
    }

    /// Exact plane, `c = P`.
    pub fn from_projector(p: &Projector) -> Self {
        Self(p.matrix().clone())
    }

    /// Convex combination `Σ w_l P_l / Σ w_l`.
    pub fn from_weighted_planes<'a, I>(weighted: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, &'a Projector)>,
    {
        let mut acc: Option<DMatrix<f64>> = None;
        let mut total = 0.0;
        for (w, p) in weighted {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidInput(format!("invalid plane weight {w}")));
            }
            total += w;
            match acc.as_mut() {
                Some(m) => *m += p.matrix() * w,
                None => acc = Some(p.matrix() * w),
            }
        }
        match acc {
            Some(m) if total > 0.0 => Self::new(m / total),
            _ => Err(Error::InvalidInput("no positive plane weights".into())),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn det_identity_plus(&self) -> f64 {
        (DMatrix::identity(self.dim(), self.dim()) + &self.0).determinant()
    }

    /// `(I + c)⁻¹`, via Cholesky since `I + c` is symmetric positive definite.
    pub fn identity_plus_inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let m = DMatrix::identity(n, n) + &self.0;
        match m.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => m.try_inverse().expect("I + c is positive definite"),
        }
    }

    /// Operator norm of `(I + c)⁻¹`, i.e. `1 / λ_min(I + c)`.
    pub fn inverse_operator_norm(&self) -> f64 {
        let eig = SymmetricEigen::new(self.0.clone());
        1.0 / (1.0 + eig.eigenvalues.min())
    }
}

/// Dense rank-3 tensor over `{0..n}³`, row-major in `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

/// Tensors of the `A`/`β` family: symmetric in `(j, k)`.
pub type CurvTensor = Tensor3;

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::InvalidInput(format!("expected {} entries, got {}", n * n * n, data.len())));
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.n, other.n, "tensor dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// `h_i = Σ_q t_qiq`.
    pub fn trace_outer(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| (0..self.n).map(|q| self[(q, i, q)]).sum())
    }

    /// `g_i = Σ_q t_iqq`.
    pub fn trace_inner(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| (0..self.n).map(|q| self[(i, q, q)]).sum())
    }

    pub fn jk_asymmetry(&self) -> f64 {
        let mut dev = 0.0_f64;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in (j + 1)..self.n {
                    dev = dev.max((self[(i, j, k)] - self[(i, k, j)]).abs());
                }
            }
        }
        dev
    }

    pub fn ij_asymmetry(&self) -> f64 {
        let mut dev = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                for k in 0..self.n {
                    dev = dev.max((self[(i, j, k)] - self[(j, i, k)]).abs());
                }
            }
        }
        dev
    }

    /// Contraction of the last index with `v`: `m_ij = Σ_k t_ijk v_k`.
    pub fn contract_last(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| (0..self.n).map(|k| self[(i, j, k)] * v[k]).sum())
    }

    /// Rank-3 action of an orthogonal matrix: `t'_abc = R_ai R_bj R_ck t_ijk`.
    pub fn rotate(&self, r: &DMatrix<f64>) -> Tensor3 {
        let n = self.n;
        let mut stage1 = Tensor3::zeros(n);
        for a in 0..n {
            for j in 0..n {
                for k in 0..n {
                    stage1[(a, j, k)] = (0..n).map(|i| r[(a, i)] * self[(i, j, k)]).sum();
                }
            }
        }
        let mut stage2 = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    stage2[(a, b, k)] = (0..n).map(|j| r[(b, j)] * stage1[(a, j, k)]).sum();
                }
            }
        }
        Tensor3::from_fn(n, |a, b, c| (0..n).map(|k| r[(c, k)] * stage2[(a, b, k)]).sum())
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// Extended second fundamental form `B_ij^k`, stored at `(i, j, k)` and
/// symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SffTensor(Tensor3);

impl SffTensor {
    pub fn new(t: Tensor3) -> Result<Self> {
        let dev = t.ij_asymmetry();
        if dev > SYMMETRY_TOL * t.max_abs().max(1.0) {
            return Err(Error::AsymmetricInput { indices: "ij", deviation: dev });
        }
        Ok(Self(t))
    }

    pub(crate) fn new_unchecked(t: Tensor3) -> Self {
        Self(t)
    }

    pub fn into_inner(self) -> Tensor3 {
        self.0
    }

    /// `B_ij = Σ_k B_ij^k ν_k` for a normal vector `ν`.
    pub fn along_normal(&self, normal: &DVector<f64>) -> DMatrix<f64> {
        symmetrized(&self.0.contract_last(normal))
    }
}

impl Deref for SffTensor {
    type Target = Tensor3;

    fn deref(&self) -> &Tensor3 {
        &self.0
    }
}

fn check_finite(t: &Tensor3) -> Result<()> {
    if t.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("tensor has non-finite entries".into()))
    }
}

/// Unique solution of `a_ijk + c_jk Σ_q a_qiq = b_ijk`, given explicitly by
/// `a_ijk = b_ijk − c_jk [(I + c)⁻¹ h]_i` with `h_i = Σ_q b_qiq`.
pub fn solve_curvature_system(c: &DirectionMatrix, b: &CurvTensor) -> Result<CurvTensor> {
    let n = c.dim();
    if b.dim() != n {
        return Err(Error::InvalidInput(format!("tensor dimension {} does not match matrix {n}", b.dim())));
    }
    check_finite(b)?;
    let u = c.identity_plus_inverse() * b.trace_outer();
    let cm = c.matrix();
    Ok(Tensor3::from_fn(n, |i, j, k| b[(i, j, k)] - cm[(j, k)] * u[i]))
}

/// `max_ijk |a_ijk + c_jk Σ_q a_qiq − b_ijk|`.
pub fn system_residual(c: &DirectionMatrix, a: &CurvTensor, b: &CurvTensor) -> f64 {
    let n = c.dim();
    let h = a.trace_outer();
    let cm = c.matrix();
    let mut res = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                res = res.max((a[(i, j, k)] + cm[(j, k)] * h[i] - b[(i, j, k)]).abs());
            }
        }
    }
    res
}

/// Lexicographic position of `(i, j, k)` in the vectorized system.
#[inline]
pub fn lex_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

/// The `n³ × n³` matrix `L` with `L vec(a) = vec(b)`.
pub fn build_full_system_matrix(c: &DirectionMatrix) -> Result<DMatrix<f64>> {
    let n = c.dim();
    if n > FULL_SYSTEM_MAX_N {
        return Err(Error::SizeLimit { n, limit: FULL_SYSTEM_MAX_N });
    }
    let size = n * n * n;
    let cm = c.matrix();
    let mut l = DMatrix::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let row = lex_index(n, i, j, k);
                l[(row, row)] += 1.0;
                for q in 0..n {
                    l[(row, lex_index(n, q, i, q))] += cm[(j, k)];
                }
            }
        }
    }
    Ok(l)
}

/// `B_ij^k = (A_ijk + A_jik − A_kij) / 2`.
pub fn a_to_b(a: &CurvTensor) -> Result<SffTensor> {
    let dev = a.jk_asymmetry();
    if dev > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::AsymmetricInput { indices: "jk", deviation: dev });
    }
    let n = a.dim();
    let b = Tensor3::from_fn(n, |i, j, k| 0.5 * (a[(i, j, k)] + a[(j, i, k)] - a[(k, i, j)]));
    Ok(SffTensor::new_unchecked(b))
}

/// `A_ijk = B_ij^k + B_ik^j`.
pub fn b_to_a(b: &SffTensor) -> CurvTensor {
    let n = b.dim();
    Tensor3::from_fn(n, |i, j, k| b[(i, j, k)] + b[(i, k, j)])
}
