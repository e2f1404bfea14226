//! Dense complex matrices with tolerance-aware rank, inversion and Hermitian tests.
//!
//! Every other module works in terms of [`ComplexMatrix`]. Zero-dimensional
//! matrices (0 rows and/or 0 columns) are ordinary values: they concatenate as
//! identities and multiply to zero blocks of the compatible shape, so the
//! degenerate block layouts of the canonical forms need no special casing.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix of size {dim}x{dim} is singular (numerical rank {rank})")]
    SingularMatrix { dim: usize, rank: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Dense rectangular complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Matrix with every entry equal to `value`.
    pub fn filled(rows: usize, cols: usize, value: Complex64) -> Self {
        Self(DMatrix::from_element(rows, cols, value))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        entries: Vec<Complex64>,
    ) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    /// Builds a matrix from real row-major entries. Panics on a length mismatch.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must equal rows*cols");
        Self::from_fn(rows, cols, |i, j| Complex64::new(entries[i * cols + j], 0.0))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn from_inner(inner: DMatrix<Complex64>) -> Self {
        Self(inner)
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0 || self.cols() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.0[(i, j)] = value;
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn to_nested(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Largest entry modulus; zero for an empty matrix.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise `|z|^2`.
    pub fn abs_squared(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)].norm_sqr()).collect())
            .collect()
    }

    /// `‖self − other‖_max`. Panics on a shape mismatch.
    pub fn max_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_distance shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.rows() != other.rows() {
            return Err(LinalgError::ShapeMismatch(format!(
                "hstack of {}x{} and {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        let (r, c1) = self.shape();
        Ok(Self::from_fn(r, c1 + other.cols(), |i, j| {
            if j < c1 {
                self.0[(i, j)]
            } else {
                other.0[(i, j - c1)]
            }
        }))
    }

    /// `[self; other]`.
    pub fn vstack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols() != other.cols() {
            return Err(LinalgError::ShapeMismatch(format!(
                "vstack of {}x{} and {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        let (r1, c) = self.shape();
        Ok(Self::from_fn(r1 + other.rows(), c, |i, j| {
            if i < r1 {
                self.0[(i, j)]
            } else {
                other.0[(i - r1, j)]
            }
        }))
    }

    /// Vertical concatenation of several blocks sharing a column count.
    pub fn vstack_all(blocks: &[&Self]) -> Result<Self, LinalgError> {
        let cols = blocks.first().map_or(0, |b| b.cols());
        blocks
            .iter()
            .try_fold(Self::zeros(0, cols), |acc, b| acc.vstack(b))
    }

    /// Horizontal concatenation of several blocks sharing a row count.
    pub fn hstack_all(blocks: &[&Self]) -> Result<Self, LinalgError> {
        let rows = blocks.first().map_or(0, |b| b.rows());
        blocks
            .iter()
            .try_fold(Self::zeros(rows, 0), |acc, b| acc.hstack(b))
    }

    /// Copies `block` into `self` with its top-left corner at `(row, col)`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &Self) {
        assert!(
            row + block.rows() <= self.rows() && col + block.cols() <= self.cols(),
            "block does not fit"
        );
        for i in 0..block.rows() {
            for j in 0..block.cols() {
                self.0[(row + i, col + j)] = block.0[(i, j)];
            }
        }
    }

    /// Contiguous sub-block.
    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        assert!(row + rows <= self.rows() && col + cols <= self.cols());
        Self::from_fn(rows, cols, |i, j| self.0[(row + i, col + j)])
    }

    /// Sub-matrix formed by the listed rows and columns, in the listed order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.0[(rows[i], cols[j])])
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let rows: Vec<usize> = (0..self.rows()).collect();
        self.select(&rows, cols)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols: Vec<usize> = (0..self.cols()).collect();
        self.select(rows, &cols)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        full_svd(&self.0).values
    }

    /// Number of singular values above `tol · σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let sv = self.singular_values();
        let largest = sv.first().copied().unwrap_or(0.0);
        self.rank_against(tol * largest)
    }

    /// Number of singular values strictly above the absolute threshold.
    pub fn rank_against(&self, threshold: f64) -> usize {
        self.singular_values()
            .into_iter()
            .filter(|&s| s > threshold && s > 0.0)
            .count()
    }

    /// Inverse of a square matrix, refusing numerically singular input.
    pub fn inverse(&self, tol: f64) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let n = self.rows();
        if n == 0 {
            return Ok(Self::zeros(0, 0));
        }
        let rank = self.rank(tol);
        if rank < n {
            return Err(LinalgError::SingularMatrix { dim: n, rank });
        }
        self.0
            .clone()
            .lu()
            .try_inverse()
            .map(Self)
            .ok_or(LinalgError::SingularMatrix { dim: n, rank })
    }

    /// True iff `‖M − M*‖_max ≤ tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_distance(&self.adjoint()) <= tol
    }

    /// `(M + M*)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// `‖M M* − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self * &self.adjoint();
        prod.max_distance(&Self::identity(self.rows()))
    }

    /// Orthonormal basis of the column space (rank decided relative to `σ_max`).
    pub fn column_basis(&self, tol: f64) -> Self {
        if self.is_empty() {
            return Self::zeros(self.rows(), 0);
        }
        let svd = full_svd(&self.0);
        let rank = svd.rank(tol);
        Self(svd.u.columns(0, rank).into_owned())
    }

    /// Left singular vectors whose singular value exceeds the absolute `threshold`.
    pub fn range_basis_above(&self, threshold: f64) -> Self {
        if self.is_empty() {
            return Self::zeros(self.rows(), 0);
        }
        let svd = full_svd(&self.0);
        let rank = svd.values.iter().filter(|&&s| s > threshold).count();
        Self(svd.u.columns(0, rank).into_owned())
    }

    /// Orthonormal basis of the left null space `{y : y* M = 0}`, i.e. of `ker M*`.
    pub fn left_null_basis(&self, tol: f64) -> Self {
        let n = self.rows();
        if self.cols() == 0 || n == 0 {
            return Self::identity(n);
        }
        let svd = full_svd(&self.0);
        let rank = svd.rank(tol);
        Self(svd.u.columns(rank, n - rank).into_owned())
    }

    /// The `dim` left singular vectors with the smallest singular values.
    /// For a matrix of rank `rows − dim` these span `ker M*` exactly.
    pub fn trailing_left_singular_vectors(&self, dim: usize) -> Self {
        let n = self.rows();
        assert!(dim <= n);
        if self.cols() == 0 || n == 0 {
            return Self::identity(n).block(0, n - dim, n, dim);
        }
        Self(full_svd(&self.0).u.columns(n - dim, dim).into_owned())
    }

    /// Right singular vectors whose singular value is at most `threshold`.
    pub fn near_null_basis(&self, threshold: f64) -> Self {
        let n = self.cols();
        if n == 0 {
            return Self::zeros(0, 0);
        }
        if self.rows() == 0 {
            return Self::identity(n);
        }
        let svd = full_svd(&self.0);
        // columns past the last singular value belong to the null space too
        let keep: Vec<usize> = (0..n)
            .filter(|&i| svd.values.get(i).is_none_or(|&s| s <= threshold))
            .collect();
        Self(svd.v.select_columns(&keep))
    }

    /// Orthogonal projector onto the column space of a full-column-rank matrix,
    /// `M (M*M)⁻¹ M*`.
    pub fn column_projector(&self, tol: f64) -> Result<Self, LinalgError> {
        let (q, _) = self.thin_qr(tol)?;
        Ok(&q * &q.adjoint())
    }

    /// `M = QR` with orthonormal columns in `Q` and `R` square upper
    /// triangular, for `M` of full column rank.
    pub fn thin_qr(&self, tol: f64) -> Result<(Self, Self), LinalgError> {
        let (rows, cols) = self.shape();
        if cols > rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "thin QR needs rows >= cols, got {rows}x{cols}"
            )));
        }
        let rank = self.rank(tol);
        if rank < cols {
            return Err(LinalgError::SingularMatrix { dim: cols, rank });
        }
        if cols == 0 {
            return Ok((Self::zeros(rows, 0), Self::zeros(0, 0)));
        }
        // Gram-Schmidt with one reorthogonalisation pass; unlike Householder
        // reflections it keeps rows that vanish in every column exactly zero
        let mut q = DMatrix::<Complex64>::zeros(rows, cols);
        let mut r = DMatrix::<Complex64>::zeros(cols, cols);
        for j in 0..cols {
            let mut v = self.0.column(j).into_owned();
            for _ in 0..2 {
                let basis = q.columns(0, j);
                let h = basis.adjoint() * &v;
                v -= basis * &h;
                let mut rj = r.view_mut((0, j), (j, 1));
                rj += h;
            }
            let norm = v.norm();
            r[(j, j)] = Complex64::new(norm, 0.0);
            q.set_column(j, &(v / Complex64::new(norm, 0.0)));
        }
        Ok((Self(q), Self(r)))
    }

    /// `M⁻¹ R` by LU with partial pivoting, refusing numerically singular `M`.
    pub fn solve(&self, rhs: &Self, tol: f64) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        if rhs.rows() != self.rows() {
            return Err(LinalgError::ShapeMismatch(format!(
                "solve: {}x{} system with {} right-hand rows",
                self.rows(),
                self.cols(),
                rhs.rows()
            )));
        }
        let n = self.rows();
        if n == 0 {
            return Ok(Self::zeros(0, rhs.cols()));
        }
        let rank = self.rank(tol);
        if rank < n {
            return Err(LinalgError::SingularMatrix { dim: n, rank });
        }
        self.0
            .clone()
            .lu()
            .solve(&rhs.0)
            .map(Self)
            .ok_or(LinalgError::SingularMatrix { dim: n, rank })
    }

    /// Eigenvalues of the Hermitian-definite pencil `(H, G)`, i.e. of `G⁻¹H`,
    /// with `G` Hermitian positive definite and `H` Hermitian. Ascending order.
    pub fn pencil_eigenvalues(h: &Self, g: &Self) -> Result<Vec<f64>, LinalgError> {
        if !h.is_square() || !g.is_square() || h.rows() != g.rows() {
            return Err(LinalgError::ShapeMismatch(
                "pencil matrices must be square and of equal size".into(),
            ));
        }
        if h.rows() == 0 {
            return Ok(Vec::new());
        }
        let chol = Cholesky::new(g.hermitian_part().0).ok_or(LinalgError::NotPositiveDefinite)?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or(LinalgError::NotPositiveDefinite)?;
        let reduced = &l_inv * &h.hermitian_part().0 * l_inv.adjoint();
        let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
        let mut values: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(values)
    }

    /// Integer matrix power for square matrices; `M⁰ = I`.
    pub fn pow(&self, exponent: u32) -> Self {
        assert!(self.is_square(), "pow needs a square matrix");
        (0..exponent).fold(Self::identity(self.rows()), |acc, _| &acc * self)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols(),
            rhs.rows(),
            "cannot multiply {}x{} by {}x{}",
            self.rows(),
            self.cols(),
            rhs.rows(),
            rhs.cols()
        );
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self - &rhs
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        -&self
    }
}

pub fn rank(m: &ComplexMatrix, tol: f64) -> usize {
    m.rank(tol)
}

pub fn inverse(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    m.inverse(tol)
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_hermitian(tol)
}

/// `a + b = s + e` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `ab = p + e` exactly.
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Real dot product accumulated as if in twice the working precision.
#[derive(Debug, Default, Clone, Copy)]
struct Dot2 {
    sum: f64,
    err: f64,
}

impl Dot2 {
    fn add(&mut self, x: f64, y: f64) {
        let (p, pe) = two_product(x, y);
        let (s, se) = two_sum(self.sum, p);
        self.sum = s;
        self.err += pe + se;
    }

    fn value(self) -> f64 {
        self.sum + self.err
    }
}

/// `Σ xᵢyᵢ` with compensated products and sums: the result is as accurate
/// as a twice-precision evaluation rounded once.
pub fn compensated_dot(terms: impl IntoIterator<Item = (Complex64, Complex64)>) -> Complex64 {
    let (mut re, mut im) = (Dot2::default(), Dot2::default());
    for (x, y) in terms {
        re.add(x.re, y.re);
        re.add(-x.im, y.im);
        im.add(x.re, y.im);
        im.add(x.im, y.re);
    }
    Complex64::new(re.value(), im.value())
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Full SVD `M = U Σ V*` with `U`, `V` square and singular values descending.
struct FullSvd {
    values: Vec<f64>,
    u: DMatrix<Complex64>,
    v: DMatrix<Complex64>,
}

impl FullSvd {
    fn rank(&self, tol: f64) -> usize {
        let largest = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|&&s| s > tol * largest && s > 0.0).count()
    }
}

fn full_svd(m: &DMatrix<Complex64>) -> FullSvd {
    let (rows, cols) = m.shape();
    let mat = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = mat.svd().expect("SVD iteration converges");
    let to_nalgebra = |f: faer::MatRef<'_, Complex64>| DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| f[(i, j)]);
    FullSvd {
        values: svd.S().column_vector().iter().map(|s| s.re).collect(),
        u: to_nalgebra(svd.U()),
        v: to_nalgebra(svd.V()),
    }
}
