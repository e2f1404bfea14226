use crate::coupling::{validate, CouplingError, Tolerances, UnitaryForm, VertexCoupling};
use crate::linalg::{ComplexMatrix, I};
use crate::scattering::orthonormal_x;

use super::{to_pqrs_form, FormError, PqrsForm};

/// `𝒫Ψ = 0`, `𝒬Ψ′ = 0`, `𝒞Ψ′ = Λ𝒞Ψ` with `𝒫 + 𝒬 + 𝒞 = I`.
/// Stored in the original edge numbering.
#[derive(Debug, Clone)]
pub struct ProjectorForm {
    p: ComplexMatrix,
    q: ComplexMatrix,
    c: ComplexMatrix,
    lambda: ComplexMatrix,
}

impl ProjectorForm {
    /// Checks the projector algebra within `tol`; `𝒞` is derived as `I − 𝒫 − 𝒬`.
    pub fn new(
        p: ComplexMatrix,
        q: ComplexMatrix,
        lambda: ComplexMatrix,
        tol: f64,
    ) -> Result<Self, FormError> {
        let n = p.rows();
        for (name, m) in [("P", &p), ("Q", &q), ("Lambda", &lambda)] {
            if m.shape() != (n, n) {
                return Err(FormError::InvalidShape(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let c = &(&ComplexMatrix::identity(n) - &p) - &q;
        let form = Self { p, q, c, lambda };
        form.check_invariants(tol)?;
        Ok(form)
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    /// Projector onto the Dirichlet part, `𝒫Ψ = 0`.
    pub fn p(&self) -> &ComplexMatrix {
        &self.p
    }

    /// Projector onto the Neumann part, `𝒬Ψ′ = 0`.
    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    /// `𝒞 = I − 𝒫 − 𝒬`.
    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn lambda(&self) -> &ComplexMatrix {
        &self.lambda
    }

    /// Largest violation among the projector identities.
    pub fn invariant_defects(&self) -> Vec<(&'static str, f64)> {
        let (p, q, c, l) = (&self.p, &self.q, &self.c, &self.lambda);
        let zero = ComplexMatrix::zeros(self.n(), self.n());
        vec![
            ("P^2 = P", (p * p).max_distance(p)),
            ("Q^2 = Q", (q * q).max_distance(q)),
            ("C^2 = C", (c * c).max_distance(c)),
            ("P = P*", p.max_distance(&p.adjoint())),
            ("Q = Q*", q.max_distance(&q.adjoint())),
            ("PQ = 0", (p * q).max_distance(&zero)),
            ("C Lambda = Lambda", (c * l).max_distance(l)),
            ("Lambda C = Lambda", (l * c).max_distance(l)),
            ("Lambda = Lambda*", l.max_distance(&l.adjoint())),
        ]
    }

    fn check_invariants(&self, tol: f64) -> Result<(), FormError> {
        for (name, defect) in self.invariant_defects() {
            if defect > tol {
                return Err(FormError::ProjectorInvariant(format!(
                    "{name} violated by {defect:.3e}"
                )));
            }
        }
        Ok(())
    }

    pub fn rank_c(&self, tol: f64) -> usize {
        self.c.rank(tol)
    }

    /// True when `Λ` is invertible on `ran 𝒞`.
    pub fn lambda_is_invertible(&self, tol: f64) -> bool {
        let id = ComplexMatrix::identity(self.n());
        let completed = &self.lambda + &(&id - &self.c);
        completed.rank(tol) == self.n()
    }

    /// `A = 𝒫 − Λ`, `B = 𝒬 + 𝒞`, which encodes all three projected equations.
    pub fn matrices(&self) -> (ComplexMatrix, ComplexMatrix) {
        (&self.p - &self.lambda, &self.q + &self.c)
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, FormError> {
        let (a, b) = self.matrices();
        Ok(validate(a, b, Tolerances::default())?)
    }

    /// Built from PQRS blocks: `𝒫`, `𝒬` project onto the column spaces of
    /// `(−P; RP−Q; I)` and `(R*; I; Q*)`, and `Λ = X(X*X)⁻¹S(X*X)⁻¹X*`.
    pub fn from_pqrs(f: &PqrsForm, tol: f64) -> Result<Self, FormError> {
        let perm = f.permutation();
        let p = f.dirichlet_columns().column_projector(tol)?;
        let q = f.neumann_columns().column_projector(tol)?;
        // X(X*X)⁻¹S(X*X)⁻¹X* = Q_X H Q_X*
        let (qx, h) = orthonormal_x(f)?;
        let lambda = &(&qx * &h) * &qx.adjoint();
        Self::new(
            perm.unpermute_operator(&p),
            perm.unpermute_operator(&q),
            perm.unpermute_operator(&lambda.hermitian_part()),
            1e-8,
        )
    }
}

/// Projector form obtained through the PQRS form.
pub fn to_projector_form(c: &VertexCoupling) -> Result<ProjectorForm, FormError> {
    let f = to_pqrs_form(c)?;
    ProjectorForm::from_pqrs(&f, c.tolerances().rank)
}

/// Projector form read off the spectrum of `U`: `𝒫` and `𝒬` are the
/// eigenprojectors for eigenvalues within `cluster_tol` of `−1` and `+1`,
/// and `Λ = i(U + I)⁻¹(U − I)` on the remaining subspace.
pub fn projector_form_from_unitary(
    u: &UnitaryForm,
    cluster_tol: f64,
) -> Result<ProjectorForm, FormError> {
    let n = u.n();
    let id = ComplexMatrix::identity(n);
    let um = u.matrix();
    let minus_space = (um + &id).near_null_basis(cluster_tol);
    let plus_space = (um - &id).near_null_basis(cluster_tol);
    let p = &minus_space * &minus_space.adjoint();
    let q = &plus_space * &plus_space.adjoint();
    let c = &(&id - &p) - &q;
    // U + I is singular exactly on ran 𝒫; adding 𝒫 restores invertibility
    // without touching the other eigenspaces
    let shifted = &(um + &id) + &p;
    let inv = shifted
        .inverse(1e-14)
        .map_err(|e| FormError::Coupling(CouplingError::Linalg(e)))?;
    let lambda = &(&(&c * &inv) * &(um - &id)) * &c;
    ProjectorForm::new(p, q, lambda.scale(I).hermitian_part(), 1e-7)
}
