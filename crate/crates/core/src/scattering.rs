//! Vertex scattering matrices `𝒮(k)`, their `k → 0` and `k → ∞` limits, and
//! the geometric series around both limits.
//!
//! `𝒮(k) = −(A + ikB)⁻¹(A − ikB)` is the reference path; the ST, reverse ST,
//! PQRS and projector formulas invert smaller blocks and must agree with it.
//! Form-based results are computed in the form's permuted coordinates and
//! conjugated back to the original edge numbering before they are returned.
//! `k = 0` and `k = ∞` are never substituted into a finite-`k` formula.

use num_complex::Complex64;

use crate::coupling::VertexCoupling;
use crate::forms::{FormError, PqrsForm, ProjectorForm, ReverseStForm, StForm};
use crate::linalg::{compensated_dot, ComplexMatrix, LinalgError, DEFAULT_RANK_TOL, I, ONE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScatteringError {
    #[error("momentum must be finite and positive, got {0}")]
    InvalidMomentum(f64),
    #[error("S block of size {size} is singular (rank {rank}); the low-momentum limit and series need a regular S")]
    SingularSBlock { size: usize, rank: usize },
    #[error("{kind:?} series does not converge at k={k}: geometric ratio needs k {} {bound}",
        if matches!(kind, SeriesKind::HighK) { ">" } else { "<" })]
    SeriesDivergence { kind: SeriesKind, k: f64, bound: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Scattering matrix at momentum `k`. The limits carry `k = 0` or `k = ∞`.
#[derive(Debug, Clone)]
pub struct SMatrix {
    k: f64,
    matrix: ComplexMatrix,
}

impl SMatrix {
    pub fn new(k: f64, matrix: ComplexMatrix) -> Self {
        Self { k, matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix.get(i, j)
    }

    /// `‖SS* − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.unitarity_defect()
    }

    /// `|S_ij|²`.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.matrix.abs_squared()
    }
}

fn check_momentum(k: f64) -> Result<(), ScatteringError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(ScatteringError::InvalidMomentum(k));
    }
    Ok(())
}

/// `𝒮(k) = −(A + ikB)⁻¹(A − ikB)`.
pub fn smatrix_direct(c: &VertexCoupling, k: f64) -> Result<SMatrix, ScatteringError> {
    check_momentum(k)?;
    let ikb = c.b().scale(I * k);
    let plus = c.a() + &ikb;
    let minus = c.a() - &ikb;
    let s = -plus.solve(&minus, c.tolerances().rank)?;
    // one refinement step against the accurately evaluated boundary residual
    let correction = plus.solve(&residual_matrix(c, &s, k), c.tolerances().rank)?;
    Ok(SMatrix::new(k, &s - &correction))
}

/// `(I ; T*)`, the column block shared by both ST formulas.
fn st_columns(t: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::identity(t.rows())
        .vstack(&t.adjoint())
        .expect("T has r rows")
}

/// `𝒮(k) = −I + 2(I; T*)(I + TT* − S/(ik))⁻¹(I, T)`; inverts an `r_B × r_B` matrix.
pub fn smatrix_st(f: &StForm, k: f64) -> Result<SMatrix, ScatteringError> {
    check_momentum(k)?;
    let e = st_columns(f.t());
    let r = f.rank_b();
    // −S/(ik) = (i/k)·S
    let core = &(&ComplexMatrix::identity(r) + &(f.t() * &f.t().adjoint())) + &f.s().scale(I / k);
    let inner = &(&e * &core.inverse(DEFAULT_RANK_TOL)?) * &e.adjoint();
    let s = &inner.scale_real(2.0) - &ComplexMatrix::identity(f.n());
    Ok(SMatrix::new(k, f.permutation().unpermute_operator(&s)))
}

/// `𝒮(k) = I − 2(I; T̃*)(I + T̃T̃* − ikS̃)⁻¹(I, T̃)`; inverts an `r_A × r_A` matrix.
pub fn smatrix_reverse_st(f: &ReverseStForm, k: f64) -> Result<SMatrix, ScatteringError> {
    check_momentum(k)?;
    let e = st_columns(f.t());
    let r = f.rank_a();
    let core = &(&ComplexMatrix::identity(r) + &(f.t() * &f.t().adjoint())) - &f.s().scale(I * k);
    let inner = &(&e * &core.inverse(DEFAULT_RANK_TOL)?) * &e.adjoint();
    let s = &ComplexMatrix::identity(f.n()) - &inner.scale_real(2.0);
    Ok(SMatrix::new(k, f.permutation().unpermute_operator(&s)))
}

/// `−I + 2(R*; I; Q*)(I + RR* + QQ*)⁻¹(R, I, Q)` in permuted coordinates:
/// the `k`-independent part shared by the PQRS formulas.
fn pqrs_static_part(f: &PqrsForm) -> Result<ComplexMatrix, LinalgError> {
    let proj = f.neumann_columns().column_projector(DEFAULT_RANK_TOL)?;
    Ok(&proj.scale_real(2.0) - &ComplexMatrix::identity(f.n()))
}

/// Auxiliary `n × (r_A + r_B − n)` matrix
/// `X = (I; 0; P*) − (R*; I; Q*)(I + RR* + QQ*)⁻¹(R + QP*)`,
/// whose columns span `ran 𝒞` (permuted coordinates).
pub fn build_x(f: &PqrsForm) -> Result<ComplexMatrix, LinalgError> {
    let [m, na, _] = f.block_sizes();
    let mut lead = ComplexMatrix::zeros(f.n(), m);
    lead.set_block(0, 0, &ComplexMatrix::identity(m));
    lead.set_block(m + na, 0, &f.p().adjoint());
    let y = f.neumann_columns();
    let g = (&y.adjoint() * &y).inverse(DEFAULT_RANK_TOL)?;
    let coupling = f.r() + &(f.q() * &f.p().adjoint());
    Ok(&lead - &(&(&y * &g) * &coupling))
}

/// `X = Q_X R_X` with `Q_X` orthonormal, together with the Hermitian
/// `H = R_X^{-*} S R_X^{-1}`, so that `X(X*X + iS/k)⁻¹X* = Q_X(I + iH/k)⁻¹Q_X*`.
///
/// `X` is re-orthogonalised against `ran Y` first; the two are orthogonal
/// in exact arithmetic.
pub(crate) fn orthonormal_x(f: &PqrsForm) -> Result<(ComplexMatrix, ComplexMatrix), LinalgError> {
    let (qy, _) = f.neumann_columns().thin_qr(DEFAULT_RANK_TOL)?;
    let x = build_x(f)?;
    let x = &x - &(&qy * &(&qy.adjoint() * &x));
    let (qx, rx) = x.thin_qr(DEFAULT_RANK_TOL)?;
    let rx_inv = rx.inverse(DEFAULT_RANK_TOL)?;
    let h = &(&rx_inv.adjoint() * f.s()) * &rx_inv;
    Ok((qx, h.hermitian_part()))
}

/// `𝒮(k) = −I + 2(R*; I; Q*)(I + RR* + QQ*)⁻¹(R, I, Q) + 2X(X*X − S/(ik))⁻¹X*`.
///
/// Inverts matrices of sizes `n − r_A` and `r_A + r_B − n` only, and stays
/// valid for a singular `S` because `X*X` is positive definite.
pub fn smatrix_pqrs(f: &PqrsForm, k: f64) -> Result<SMatrix, ScatteringError> {
    check_momentum(k)?;
    let mut s = pqrs_static_part(f)?;
    if !f.is_scale_invariant() {
        let (qx, h) = orthonormal_x(f)?;
        let core = &ComplexMatrix::identity(qx.cols()) + &h.scale(I / k);
        let term = &qx * &core.solve(&qx.adjoint(), DEFAULT_RANK_TOL)?;
        s = &s + &term.scale_real(2.0);
    }
    Ok(SMatrix::new(k, f.permutation().unpermute_operator(&s)))
}

/// `𝒮(k) = −𝒫 + 𝒬 − (Λ − ik)⁻¹(Λ + ik)𝒞`, with the inverse taken on `ran 𝒞`.
///
/// The last term is evaluated in an orthonormal basis of `ran 𝒞`: rounding
/// noise in `𝒞` would otherwise be scaled by `k`.
pub fn smatrix_projector(p: &ProjectorForm, k: f64) -> Result<SMatrix, ScatteringError> {
    check_momentum(k)?;
    // 𝒞 is a projector, so its singular values are 0 or 1
    let basis = p.c().range_basis_above(0.5);
    let lambda = &(&basis.adjoint() * p.lambda()) * &basis;
    let shift = ComplexMatrix::identity(basis.cols()).scale(I * k);
    let rotated = (&lambda - &shift).solve(&(&lambda + &shift), DEFAULT_RANK_TOL)?;
    let s = &(p.q() - p.p()) - &(&(&basis * &rotated) * &basis.adjoint());
    Ok(SMatrix::new(k, s))
}

/// `lim_{k→∞} 𝒮(k) = I − 2W[I + P*P + (RP − Q)*(RP − Q)]⁻¹W*` with `W = (−P; RP − Q; I)`.
/// Depends on `P`, `Q`, `R` only.
pub fn limit_high_k(f: &PqrsForm) -> Result<SMatrix, ScatteringError> {
    let proj = f.dirichlet_columns().column_projector(DEFAULT_RANK_TOL)?;
    let s = &ComplexMatrix::identity(f.n()) - &proj.scale_real(2.0);
    Ok(SMatrix::new(f64::INFINITY, f.permutation().unpermute_operator(&s)))
}

/// `lim_{k→0} 𝒮(k) = −I + 2(R*; I; Q*)(I + RR* + QQ*)⁻¹(R, I, Q)`.
///
/// Refuses a numerically singular `S`: the formula is the true limit only
/// when `S` is regular.
pub fn limit_low_k(f: &PqrsForm) -> Result<SMatrix, ScatteringError> {
    let m = f.overlap();
    let rank = f.s().rank(DEFAULT_RANK_TOL);
    if rank < m {
        return Err(ScatteringError::SingularSBlock { size: m, rank });
    }
    limit_low_k_unchecked(f)
}

/// The low-momentum formula evaluated without the regularity check. For a
/// singular `S` this is the scale-invariant part that `P`, `Q`, `R` alone
/// determine, not necessarily the limit of `𝒮(k)`.
pub fn limit_low_k_unchecked(f: &PqrsForm) -> Result<SMatrix, ScatteringError> {
    let s = pqrs_static_part(f)?;
    Ok(SMatrix::new(0.0, f.permutation().unpermute_operator(&s)))
}

/// `lim_{k→0} 𝒮(k)` for any Hermitian `S`, singular or not.
///
/// As `k → 0`, `(X*X + iS/k)⁻¹` tends to `N(N*X*XN)⁻¹N*` with `N` a basis of
/// `ker S`, which adds `2XN(N*X*XN)⁻¹N*X*` to the low-momentum formula.
/// The extra term vanishes for a regular `S`.
pub fn limit_low_k_general(f: &PqrsForm) -> Result<SMatrix, ScatteringError> {
    let mut s = pqrs_static_part(f)?;
    let sv = f.s().singular_values();
    let threshold = DEFAULT_RANK_TOL * sv.first().copied().unwrap_or(0.0).max(1.0);
    let kernel = f.s().near_null_basis(threshold);
    if kernel.cols() > 0 {
        let xn = &build_x(f)? * &kernel;
        s = &s + &xn.column_projector(DEFAULT_RANK_TOL)?.scale_real(2.0);
    }
    Ok(SMatrix::new(0.0, f.permutation().unpermute_operator(&s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Powers of `1/(ik)` around `k = ∞`.
    HighK,
    /// Powers of `ik` around `k = 0`.
    LowK,
}

/// Truncated series `Σ_j C_j z^j` with `z = 1/(ik)` (high k) or `z = ik` (low k).
/// Coefficients are stored in the original edge numbering.
#[derive(Debug, Clone)]
pub struct SeriesExpansion {
    kind: SeriesKind,
    coefficients: Vec<ComplexMatrix>,
    bound: f64,
}

impl SeriesExpansion {
    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn n(&self) -> usize {
        self.coefficients[0].rows()
    }

    pub fn coefficients(&self) -> &[ComplexMatrix] {
        &self.coefficients
    }

    /// Momentum at which the geometric ratio reaches one: the series
    /// converges for `k > bound` (high k) or `k < bound` (low k).
    pub fn convergence_bound(&self) -> f64 {
        self.bound
    }

    pub fn variable(&self, k: f64) -> Complex64 {
        match self.kind {
            SeriesKind::HighK => ONE / (I * k),
            SeriesKind::LowK => I * k,
        }
    }

    /// Partial sum at `k`. No convergence check.
    pub fn evaluate(&self, k: f64) -> ComplexMatrix {
        let z = self.variable(k);
        // Horner
        let n = self.n();
        self.coefficients
            .iter()
            .rev()
            .fold(ComplexMatrix::zeros(n, n), |acc, c| &acc.scale(z) + c)
    }

    pub fn check(&self, k: f64) -> Result<(), ScatteringError> {
        let ok = match self.kind {
            SeriesKind::HighK => k > self.bound,
            SeriesKind::LowK => k < self.bound,
        };
        if ok {
            Ok(())
        } else {
            Err(ScatteringError::SeriesDivergence {
                kind: self.kind,
                k,
                bound: self.bound,
            })
        }
    }

    pub fn evaluate_checked(&self, k: f64) -> Result<ComplexMatrix, ScatteringError> {
        self.check(k)?;
        Ok(self.evaluate(k))
    }
}

/// Forms that admit the series expansions.
#[derive(Debug, Clone, Copy)]
pub enum ExpansionSource<'a> {
    Pqrs(&'a PqrsForm),
    St(&'a StForm),
}

impl<'a> From<&'a PqrsForm> for ExpansionSource<'a> {
    fn from(f: &'a PqrsForm) -> Self {
        Self::Pqrs(f)
    }
}

impl<'a> From<&'a StForm> for ExpansionSource<'a> {
    fn from(f: &'a StForm) -> Self {
        Self::St(f)
    }
}

/// Series pieces in permuted coordinates: `static + 2E (G⁻¹ − S/(ik))⁻¹ E*`
/// with `G⁻¹` positive definite.
struct ResolventParts {
    n: usize,
    fixed: ComplexMatrix,
    edge: ComplexMatrix,
    gram: ComplexMatrix,
    s: ComplexMatrix,
}

impl ResolventParts {
    fn from_pqrs(f: &PqrsForm) -> Result<Self, ScatteringError> {
        let x = build_x(f)?;
        Ok(Self {
            n: f.n(),
            fixed: pqrs_static_part(f)?,
            gram: &x.adjoint() * &x,
            edge: x,
            s: f.s().clone(),
        })
    }

    fn from_st(f: &StForm) -> Self {
        let e = st_columns(f.t());
        Self {
            n: f.n(),
            fixed: ComplexMatrix::identity(f.n()).scale_real(-1.0),
            gram: &e.adjoint() * &e,
            edge: e,
            s: f.s().clone(),
        }
    }

    fn sandwich(&self, middle: &ComplexMatrix) -> ComplexMatrix {
        (&(&self.edge * middle) * &self.edge.adjoint()).scale_real(2.0)
    }

    fn high_k(&self, order: usize) -> Result<(Vec<ComplexMatrix>, f64), ScatteringError> {
        let gram_inv = self.gram.inverse(DEFAULT_RANK_TOL)?;
        let step = &gram_inv * &self.s;
        let mut coefficients = Vec::with_capacity(order + 1);
        let mut power = ComplexMatrix::identity(self.s.rows());
        for _ in 0..=order {
            coefficients.push(self.sandwich(&(&power * &gram_inv)));
            power = &power * &step;
        }
        coefficients[0] = &coefficients[0] + &self.fixed;
        let eig = ComplexMatrix::pencil_eigenvalues(&self.s, &self.gram)?;
        let bound = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Ok((coefficients, bound))
    }

    fn low_k(&self, order: usize) -> Result<(Vec<ComplexMatrix>, f64), ScatteringError> {
        let m = self.s.rows();
        let rank = self.s.rank(DEFAULT_RANK_TOL);
        if rank < m {
            return Err(ScatteringError::SingularSBlock { size: m, rank });
        }
        let s_inv = self.s.inverse(DEFAULT_RANK_TOL)?;
        let step = &s_inv * &self.gram;
        let mut coefficients = Vec::with_capacity(order + 1);
        coefficients.push(self.fixed.clone());
        let mut power = ComplexMatrix::identity(m);
        for _ in 1..=order {
            coefficients.push(self.sandwich(&(&power * &s_inv)).scale_real(-1.0));
            power = &power * &step;
        }
        let eig = ComplexMatrix::pencil_eigenvalues(&self.s, &self.gram)?;
        let bound = eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        Ok((coefficients, bound))
    }
}

/// Coefficients `C₀ … C_J` of the high- or low-momentum series.
///
/// `C₀` is the corresponding limit. The low-momentum series needs a regular
/// `S`; for an ST-form that means `r_A = n`.
pub fn expand<'a>(
    form: impl Into<ExpansionSource<'a>>,
    kind: SeriesKind,
    order: usize,
) -> Result<SeriesExpansion, ScatteringError> {
    let form = form.into();
    let (parts, permutation) = match form {
        ExpansionSource::Pqrs(f) => (ResolventParts::from_pqrs(f)?, f.permutation()),
        ExpansionSource::St(f) => (ResolventParts::from_st(f), f.permutation()),
    };
    debug_assert_eq!(parts.n, permutation.len());
    let (coefficients, bound) = match kind {
        SeriesKind::HighK => parts.high_k(order)?,
        SeriesKind::LowK => parts.low_k(order)?,
    };
    Ok(SeriesExpansion {
        kind,
        coefficients: coefficients
            .iter()
            .map(|c| permutation.unpermute_operator(c))
            .collect(),
        bound,
    })
}

/// Boundary data of the scattering state entering through edge `edge`:
/// `Ψ = (I + 𝒮)e_j`, `Ψ′ = ik(𝒮 − I)e_j`.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub edge: usize,
    pub k: f64,
    pub psi: Vec<Complex64>,
    pub psi_prime: Vec<Complex64>,
}

impl ScatteringSolution {
    pub fn new(s: &SMatrix, edge: usize) -> Self {
        let n = s.n();
        let k = s.k();
        let psi = (0..n)
            .map(|i| s.get(i, edge) + if i == edge { ONE } else { Complex64::new(0.0, 0.0) })
            .collect();
        let psi_prime = (0..n)
            .map(|i| (s.get(i, edge) - if i == edge { ONE } else { Complex64::new(0.0, 0.0) }) * I * k)
            .collect();
        Self {
            edge,
            k,
            psi,
            psi_prime,
        }
    }

    /// `‖AΨ + BΨ′‖_∞`.
    pub fn residual(&self, c: &VertexCoupling) -> f64 {
        let n = c.n();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| c.a().get(i, j) * self.psi[j] + c.b().get(i, j) * self.psi_prime[j])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `‖A(I + 𝒮) + ikB(𝒮 − I)‖_max`.
///
/// At the limits the dominant term is used: `‖A(I + 𝒮)‖` at `k = 0` and
/// `‖B(𝒮 − I)‖` at `k = ∞`, both of which vanish for the exact limit.
pub fn bc_residual(c: &VertexCoupling, s: &SMatrix) -> f64 {
    residual_matrix(c, s.matrix(), s.k()).max_norm()
}

/// `A(I + 𝒮) + ikB(𝒮 − I)` with compensated dot products. A plain evaluation
/// rounds `ikB(𝒮 − I)` at the level `k‖B‖ε`, which dominates for large `k`.
fn residual_matrix(c: &VertexCoupling, s: &ComplexMatrix, k: f64) -> ComplexMatrix {
    let n = c.n();
    let (a, b) = (c.a(), c.b());
    // the identity enters as a separate term so that I ± 𝒮 is never rounded
    let product = |m: &ComplexMatrix, i: usize, col: usize, shift: Complex64| {
        compensated_dot((0..n).map(|j| (m.get(i, j), s.get(j, col))).chain([(m.get(i, col), shift)]))
    };
    ComplexMatrix::from_fn(n, n, |i, col| {
        if k.is_infinite() {
            return product(b, i, col, -ONE);
        }
        let dirichlet = product(a, i, col, ONE);
        if k == 0.0 {
            dirichlet
        } else {
            dirichlet + I * k * product(b, i, col, -ONE)
        }
    })
}

/// Largest `‖𝒮₁(k) − 𝒮₂(k)‖_max` over the grid.
pub fn scattering_distance(
    c1: &VertexCoupling,
    c2: &VertexCoupling,
    ks: &[f64],
) -> Result<f64, ScatteringError> {
    let mut worst: f64 = 0.0;
    for &k in ks {
        let d = smatrix_direct(c1, k)?
            .matrix()
            .max_distance(smatrix_direct(c2, k)?.matrix());
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Extensional equality of couplings: equal `𝒮(k)` on the grid within `tol`.
pub fn same_scattering(
    c1: &VertexCoupling,
    c2: &VertexCoupling,
    ks: &[f64],
    tol: f64,
) -> Result<bool, ScatteringError> {
    Ok(c1.n() == c2.n() && scattering_distance(c1, c2, ks)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{to_pqrs_form, to_projector_form, to_reverse_st_form, to_st_form};
    use crate::linalg::re;

    fn minus_identity(n: usize) -> ComplexMatrix {
        ComplexMatrix::identity(n).scale_real(-1.0)
    }

    #[test]
    fn direct_formula_for_dirichlet_and_neumann() {
        for k in [0.01, 1.0, 50.0] {
            let s = smatrix_direct(&VertexCoupling::dirichlet(3), k).unwrap();
            assert!(s.matrix().max_distance(&minus_identity(3)) < 1e-15);
            let s = smatrix_direct(&VertexCoupling::neumann(3), k).unwrap();
            assert!(s.matrix().max_distance(&ComplexMatrix::identity(3)) < 1e-15);
        }
    }

    #[test]
    fn kirchhoff_three_edges() {
        let expected = ComplexMatrix::from_fn(3, 3, |i, j| re(if i == j { -1.0 / 3.0 } else { 2.0 / 3.0 }));
        let c = VertexCoupling::kirchhoff(3);
        let s = smatrix_direct(&c, 1.0).unwrap();
        assert!(s.matrix().max_distance(&expected) < 1e-14);
        // cross-check through the ST formula with S = 0, T = (1, 1)
        let st = to_st_form(&c).unwrap();
        assert!(st.s().max_norm() < 1e-14);
        assert!(st.t().max_distance(&ComplexMatrix::filled(1, 2, re(1.0))) < 1e-14);
        for k in [0.1, 1.0, 10.0] {
            assert!(smatrix_st(&st, k).unwrap().matrix().max_distance(&expected) < 1e-14);
        }
    }

    #[test]
    fn rejects_non_positive_momentum() {
        let c = VertexCoupling::kirchhoff(2);
        for k in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                smatrix_direct(&c, k),
                Err(ScatteringError::InvalidMomentum(_))
            ));
        }
    }

    #[test]
    fn st_formula_for_neumann_is_identity() {
        let st = to_st_form(&VertexCoupling::neumann(3)).unwrap();
        let s = smatrix_st(&st, 2.0).unwrap();
        assert!(s.matrix().max_distance(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn reverse_st_formula_for_dirichlet_is_minus_identity() {
        let rev = to_reverse_st_form(&VertexCoupling::dirichlet(3)).unwrap();
        let s = smatrix_reverse_st(&rev, 2.0).unwrap();
        assert!(s.matrix().max_distance(&minus_identity(3)) < 1e-15);
    }

    #[test]
    fn delta_coupling_all_paths_agree() {
        let c = VertexCoupling::delta(2, 2.0);
        let st = to_st_form(&c).unwrap();
        let rev = to_reverse_st_form(&c).unwrap();
        let pqrs = to_pqrs_form(&c).unwrap();
        let proj = to_projector_form(&c).unwrap();
        for k in [0.1, 1.0, 10.0] {
            let oracle = smatrix_direct(&c, k).unwrap();
            for s in [
                smatrix_st(&st, k).unwrap(),
                smatrix_reverse_st(&rev, k).unwrap(),
                smatrix_pqrs(&pqrs, k).unwrap(),
                smatrix_projector(&proj, k).unwrap(),
            ] {
                assert!(s.matrix().max_distance(oracle.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn build_x_examples() {
        let delta = to_pqrs_form(&VertexCoupling::delta(2, 2.0)).unwrap();
        let x = build_x(&delta).unwrap();
        assert!(x.max_distance(&ComplexMatrix::filled(2, 1, re(1.0))) < 1e-12);

        // r_A = r_B = n: all correction blocks are empty and X = I
        let u = crate::coupling::UnitaryForm::new(
            ComplexMatrix::diagonal(&[Complex64::from_polar(1.0, 1.0), Complex64::from_polar(1.0, -2.0)]),
            1e-12,
        )
        .unwrap();
        let full = to_pqrs_form(&crate::coupling::from_unitary(&u).unwrap()).unwrap();
        assert_eq!(full.block_sizes(), [2, 0, 0]);
        assert!(build_x(&full).unwrap().max_distance(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn scale_invariant_coupling_is_k_independent() {
        let f = to_pqrs_form(&VertexCoupling::kirchhoff(4)).unwrap();
        assert!(f.is_scale_invariant());
        let lim = limit_high_k(&f).unwrap();
        for k in [1e-3, 1.0, 1e3] {
            let s = smatrix_pqrs(&f, k).unwrap();
            assert!(s.matrix().max_distance(lim.matrix()) < 1e-13);
        }
        assert!(limit_low_k(&f).unwrap().matrix().max_distance(lim.matrix()) < 1e-13);
    }

    #[test]
    fn delta_limits() {
        let c = VertexCoupling::delta(2, 2.0);
        let f = to_pqrs_form(&c).unwrap();
        let high = limit_high_k(&f).unwrap();
        let swap = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(high.matrix().max_distance(&swap) < 1e-14);
        assert!(high.matrix().max_distance(smatrix_direct(&c, 1e6).unwrap().matrix()) < 1e-5);

        let low = limit_low_k(&f).unwrap();
        assert!(low.matrix().max_distance(&minus_identity(2)) < 1e-14);
        assert!(low.matrix().max_distance(smatrix_direct(&c, 1e-6).unwrap().matrix()) < 1e-5);
        assert!(bc_residual(&c, &high) < 1e-12);
        assert!(bc_residual(&c, &low) < 1e-12);
    }

    #[test]
    fn low_k_limit_refuses_singular_s() {
        let f = PqrsForm::new(
            3,
            3,
            2,
            crate::permutation::Permutation::identity(3),
            ComplexMatrix::zeros(2, 1),
            ComplexMatrix::zeros(0, 1),
            ComplexMatrix::zeros(0, 2),
            ComplexMatrix::filled(2, 2, re(1.0)),
        )
        .unwrap();
        assert!(matches!(
            limit_low_k(&f),
            Err(ScatteringError::SingularSBlock { size: 2, rank: 1 })
        ));
        assert!(limit_low_k_unchecked(&f).is_ok());
        let c = f.to_coupling().unwrap();
        let general = limit_low_k_general(&f).unwrap();
        let probe = smatrix_direct(&c, 1e-7).unwrap();
        assert!(general.matrix().max_distance(probe.matrix()) < 1e-5);
        assert!(general.unitarity_defect() < 1e-12);
        assert!(bc_residual(&c, &general) < 1e-12);
        assert!(matches!(
            expand(&f, SeriesKind::LowK, 2),
            Err(ScatteringError::SingularSBlock { .. })
        ));
    }

    #[test]
    fn order_zero_series_is_the_limit() {
        let f = to_pqrs_form(&VertexCoupling::delta(3, 1.5)).unwrap();
        let high = expand(&f, SeriesKind::HighK, 0).unwrap();
        assert_eq!(high.coefficients().len(), 1);
        assert!(high.coefficients()[0].max_distance(limit_high_k(&f).unwrap().matrix()) < 1e-13);
        let low = expand(&f, SeriesKind::LowK, 0).unwrap();
        assert!(low.coefficients()[0].max_distance(limit_low_k(&f).unwrap().matrix()) < 1e-13);
    }

    #[test]
    fn delta_high_k_series_at_k_100() {
        let c = VertexCoupling::delta(2, 2.0);
        let f = to_pqrs_form(&c).unwrap();
        let series = expand(&f, SeriesKind::HighK, 2).unwrap();
        // (X*X)⁻¹S = 2/2 = 1, so the series converges for k > 1
        assert!((series.convergence_bound() - 1.0).abs() < 1e-12);
        assert!(series.check(100.0).is_ok());
        assert!(series.check(0.5).is_err());
        let err = series
            .evaluate(100.0)
            .max_distance(smatrix_direct(&c, 100.0).unwrap().matrix());
        // next term is |1/(ik)|³ · ‖C₃‖ ≈ 1e-6
        assert!(err < 2e-6, "{err}");
        assert!(err > 1e-8, "{err}");
    }

    #[test]
    fn st_series_matches_pqrs_series() {
        let c = VertexCoupling::delta(3, -0.7);
        let st = to_st_form(&c).unwrap();
        let f = to_pqrs_form(&c).unwrap();
        let a = expand(&st, SeriesKind::HighK, 3).unwrap();
        let b = expand(&f, SeriesKind::HighK, 3).unwrap();
        for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
            assert!(x.max_distance(y) < 1e-12);
        }
    }

    #[test]
    fn scattering_solution_satisfies_the_boundary_condition() {
        let c = VertexCoupling::delta(3, 0.8);
        let s = smatrix_direct(&c, 1.3).unwrap();
        for j in 0..3 {
            assert!(ScatteringSolution::new(&s, j).residual(&c) < 1e-13);
        }
        assert!(bc_residual(&c, &s) < 1e-13);
        assert_eq!(bc_residual(&VertexCoupling::dirichlet(2), &SMatrix::new(1.0, minus_identity(2))), 0.0);
        assert_eq!(
            bc_residual(&VertexCoupling::neumann(2), &SMatrix::new(1.0, ComplexMatrix::identity(2))),
            0.0
        );
    }
}
