//! Vertex couplings `AΨ + BΨ′ = 0` and their unitary description
//! `(U − I)Ψ + i(U + I)Ψ′ = 0`.

use num_complex::Complex64;

use crate::linalg::{re, ComplexMatrix, LinalgError, DEFAULT_RANK_TOL, I, ONE};

/// Numerical knobs shared by every module.
///
/// A coupling stores the tolerances it was validated with, and all
/// canonical-form constructions read ranks and thresholds from there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for every rank decision.
    pub rank: f64,
    /// Hermitian test on `AB*`, scaled by `max(1, n‖A‖_max‖B‖_max)`.
    pub hermitian: f64,
    /// Absolute bound on `‖UU* − I‖_max`.
    pub unitary: f64,
    /// Absolute distance of an eigenvalue of `U` from `∓1` below which it is
    /// treated as exactly `∓1`.
    pub eigen_cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: DEFAULT_RANK_TOL,
            hermitian: 1e-9,
            unitary: 1e-9,
            eigen_cluster: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CouplingError {
    #[error("A and B must be square matrices of equal size n >= 1, got A {a:?} and B {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("rank(A|B) = {rank} < n = {n}")]
    RankDeficient { rank: usize, n: usize },
    #[error("A B* is not self-adjoint (defect {defect:.3e})")]
    NotSelfAdjoint { defect: f64 },
    #[error("matrix is not unitary (‖UU* − I‖_max = {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// An admissible coupling: `rank(A|B) = n` and `AB*` self-adjoint.
#[derive(Debug, Clone)]
pub struct VertexCoupling {
    a: ComplexMatrix,
    b: ComplexMatrix,
    rank_a: usize,
    rank_b: usize,
    tol: Tolerances,
}

impl VertexCoupling {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self, CouplingError> {
        validate(a, b, Tolerances::default())
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn rank_a(&self) -> usize {
        self.rank_a
    }

    pub fn rank_b(&self) -> usize {
        self.rank_b
    }

    /// Size `r_A + r_B − n` of the `S` block of the PQRS form.
    pub fn overlap(&self) -> usize {
        self.rank_a + self.rank_b - self.n()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `ψ = 0` on every edge.
    pub fn dirichlet(n: usize) -> Self {
        Self::new(ComplexMatrix::identity(n), ComplexMatrix::zeros(n, n))
            .expect("Dirichlet coupling is admissible")
    }

    /// `ψ′ = 0` on every edge.
    pub fn neumann(n: usize) -> Self {
        Self::new(ComplexMatrix::zeros(n, n), ComplexMatrix::identity(n))
            .expect("Neumann coupling is admissible")
    }

    /// Continuity `ψ₁ = … = ψₙ` together with `Σψ′ⱼ = α ψ₁`.
    pub fn delta(n: usize, alpha: f64) -> Self {
        assert!(n >= 1, "a vertex has at least one edge");
        let mut a = ComplexMatrix::zeros(n, n);
        let mut b = ComplexMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a.set(i, i, ONE);
            a.set(i, i + 1, -ONE);
        }
        a.set(n - 1, 0, re(-alpha));
        for j in 0..n {
            b.set(n - 1, j, ONE);
        }
        Self::new(a, b).expect("delta coupling is admissible")
    }

    /// Free coupling: the `α = 0` member of the δ family.
    pub fn kirchhoff(n: usize) -> Self {
        Self::delta(n, 0.0)
    }

    /// `(GA, GB)` for invertible `G`; describes the same vertex.
    pub fn left_multiplied(&self, g: &ComplexMatrix) -> Result<Self, CouplingError> {
        validate(g * &self.a, g * &self.b, self.tol)
    }
}

/// Checks admissibility of `(A, B)` and caches the ranks.
pub fn validate(
    a: ComplexMatrix,
    b: ComplexMatrix,
    tol: Tolerances,
) -> Result<VertexCoupling, CouplingError> {
    let n = a.rows();
    if n == 0 || !a.is_square() || a.shape() != b.shape() {
        return Err(CouplingError::ShapeMismatch {
            a: a.shape(),
            b: b.shape(),
        });
    }
    let joint = a.hstack(&b)?;
    let rank = joint.rank(tol.rank);
    if rank < n {
        return Err(CouplingError::RankDeficient { rank, n });
    }
    let ab = &a * &b.adjoint();
    let defect = ab.max_distance(&ab.adjoint());
    let scale = (n as f64 * a.max_norm() * b.max_norm()).max(1.0);
    if defect > tol.hermitian * scale {
        return Err(CouplingError::NotSelfAdjoint { defect });
    }
    let rank_a = a.rank(tol.rank);
    let rank_b = b.rank(tol.rank);
    debug_assert!(rank_a + rank_b >= n, "admissible couplings have r_A + r_B >= n");
    if rank_a + rank_b < n {
        return Err(CouplingError::RankDeficient {
            rank: rank_a + rank_b,
            n,
        });
    }
    Ok(VertexCoupling {
        a,
        b,
        rank_a,
        rank_b,
        tol,
    })
}

/// Unitary matrix `U` of the coupling `(U − I)Ψ + i(U + I)Ψ′ = 0`.
#[derive(Debug, Clone)]
pub struct UnitaryForm {
    u: ComplexMatrix,
}

impl UnitaryForm {
    pub fn new(u: ComplexMatrix, tol: f64) -> Result<Self, CouplingError> {
        if !u.is_square() || u.rows() == 0 {
            return Err(CouplingError::ShapeMismatch {
                a: u.shape(),
                b: u.shape(),
            });
        }
        let defect = u.unitarity_defect();
        if defect > tol {
            return Err(CouplingError::NotUnitary { defect });
        }
        Ok(Self { u })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }
}

/// `U = −(A + iB)⁻¹(A − iB)`, the scattering matrix at `k = 1`.
pub fn to_unitary(c: &VertexCoupling) -> Result<UnitaryForm, CouplingError> {
    let ib = c.b.scale(I);
    let plus = &c.a + &ib;
    let minus = &c.a - &ib;
    let u = -(&plus.inverse(c.tol.rank)? * &minus);
    UnitaryForm::new(u, c.tol.unitary.max(1e-8))
}

/// `A = U − I`, `B = i(U + I)`.
pub fn from_unitary(u: &UnitaryForm) -> Result<VertexCoupling, CouplingError> {
    from_unitary_with(u, Tolerances::default())
}

pub fn from_unitary_with(u: &UnitaryForm, tol: Tolerances) -> Result<VertexCoupling, CouplingError> {
    let id = ComplexMatrix::identity(u.n());
    let a = u.matrix() - &id;
    let b = (u.matrix() + &id).scale(I);
    validate(a, b, tol)
}

/// Builds the unitary `V diag(e^{iθ}) V*`.
pub fn unitary_from_spectrum(vectors: &ComplexMatrix, phases: &[f64]) -> ComplexMatrix {
    let d: Vec<Complex64> = phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    &(vectors * &ComplexMatrix::diagonal(&d)) * &vectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_and_neumann_validate() {
        let d = VertexCoupling::dirichlet(2);
        assert_eq!((d.rank_a(), d.rank_b()), (2, 0));
        let n = VertexCoupling::neumann(2);
        assert_eq!((n.rank_a(), n.rank_b()), (0, 2));
    }

    #[test]
    fn non_self_adjoint_pair_is_rejected() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let err = VertexCoupling::new(a, ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, CouplingError::NotSelfAdjoint { .. }));
    }

    #[test]
    fn rank_deficient_pair_is_rejected() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = ComplexMatrix::zeros(2, 2);
        let err = VertexCoupling::new(a, b).unwrap_err();
        assert!(matches!(err, CouplingError::RankDeficient { rank: 1, n: 2 }));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let err = VertexCoupling::new(ComplexMatrix::identity(2), ComplexMatrix::identity(3))
            .unwrap_err();
        assert!(matches!(err, CouplingError::ShapeMismatch { .. }));
        let err = VertexCoupling::new(ComplexMatrix::zeros(0, 0), ComplexMatrix::zeros(0, 0))
            .unwrap_err();
        assert!(matches!(err, CouplingError::ShapeMismatch { .. }));
    }

    #[test]
    fn unitary_of_standard_couplings() {
        let u = to_unitary(&VertexCoupling::dirichlet(3)).unwrap();
        assert!(u.matrix().max_distance(&ComplexMatrix::identity(3).scale_real(-1.0)) < 1e-15);
        let u = to_unitary(&VertexCoupling::neumann(3)).unwrap();
        assert!(u.matrix().max_distance(&ComplexMatrix::identity(3)) < 1e-15);

        // −(A+iB)⁻¹(A−iB) evaluated by hand for A=[[1,−1],[0,0]], B=[[0,0],[1,1]]:
        // A+iB = [[1,−1],[i,i]], its inverse is [[1/2, −i/2],[−1/2, −i/2]],
        // and the product with A−iB = [[1,−1],[−i,−i]] is [[0,−1],[−1,0]].
        let u = to_unitary(&VertexCoupling::kirchhoff(2)).unwrap();
        let swap = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(u.matrix().max_distance(&swap) < 1e-15);
    }

    #[test]
    fn from_unitary_examples() {
        let minus = UnitaryForm::new(ComplexMatrix::identity(2).scale_real(-1.0), 1e-12).unwrap();
        let c = from_unitary(&minus).unwrap();
        assert!(c.a().max_distance(&ComplexMatrix::identity(2).scale_real(-2.0)) < 1e-15);
        assert_eq!(c.b().max_norm(), 0.0);
        assert_eq!(c.rank_b(), 0);

        let plus = UnitaryForm::new(ComplexMatrix::identity(2), 1e-12).unwrap();
        let c = from_unitary(&plus).unwrap();
        assert_eq!(c.a().max_norm(), 0.0);
        assert!(c.b().max_distance(&ComplexMatrix::identity(2).scale(I * 2.0)) < 1e-15);
        assert_eq!(c.rank_a(), 0);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            UnitaryForm::new(m, 1e-9),
            Err(CouplingError::NotUnitary { .. })
        ));
    }

    #[test]
    fn delta_coupling_ranks() {
        let c = VertexCoupling::delta(2, 2.0);
        assert_eq!((c.rank_a(), c.rank_b()), (2, 1));
        let k = VertexCoupling::kirchhoff(3);
        assert_eq!((k.rank_a(), k.rank_b()), (2, 1));
    }
}
