use crate::coupling::{validate, Tolerances, VertexCoupling};
use crate::linalg::ComplexMatrix;
use crate::permutation::Permutation;

use super::{check_hermitian, expect_shape, front_loaded, greedy_columns, FormError};

/// `(I T; 0 0) Ψ̃′ = (S 0; −T* I) Ψ̃` with `S` of size `r_B × r_B`.
#[derive(Debug, Clone)]
pub struct StForm {
    n: usize,
    permutation: Permutation,
    s: ComplexMatrix,
    t: ComplexMatrix,
}

/// `(I T̃; 0 0) Ψ̃ = (S̃ 0; −T̃* I) Ψ̃′` with `S̃` of size `r_A × r_A`.
#[derive(Debug, Clone)]
pub struct ReverseStForm {
    n: usize,
    permutation: Permutation,
    s: ComplexMatrix,
    t: ComplexMatrix,
}

macro_rules! st_like_accessors {
    ($ty:ident, $rank:ident) => {
        impl $ty {
            pub fn new(
                n: usize,
                permutation: Permutation,
                s: ComplexMatrix,
                t: ComplexMatrix,
            ) -> Result<Self, FormError> {
                let r = s.rows();
                if permutation.len() != n || r > n {
                    return Err(FormError::InvalidShape(format!(
                        "permutation of length {} and S of size {r} for n={n}",
                        permutation.len()
                    )));
                }
                expect_shape(&s, "S", r, r)?;
                expect_shape(&t, "T", r, n - r)?;
                let s = check_hermitian(&s, "S", 1e-9)?;
                Ok(Self { n, permutation, s, t })
            }

            pub fn n(&self) -> usize {
                self.n
            }

            pub fn $rank(&self) -> usize {
                self.s.rows()
            }

            pub fn permutation(&self) -> &Permutation {
                &self.permutation
            }

            pub fn s(&self) -> &ComplexMatrix {
                &self.s
            }

            pub fn t(&self) -> &ComplexMatrix {
                &self.t
            }

            /// `(I T)` and `(S 0; −T* I)` in permuted coordinates.
            fn halves(&self) -> (ComplexMatrix, ComplexMatrix) {
                let (n, r) = (self.n, self.s.rows());
                let mut lhs = ComplexMatrix::zeros(n, n);
                lhs.set_block(0, 0, &ComplexMatrix::identity(r));
                lhs.set_block(0, r, &self.t);
                let mut rhs = ComplexMatrix::zeros(n, n);
                rhs.set_block(0, 0, &self.s);
                rhs.set_block(r, 0, &-&self.t.adjoint());
                rhs.set_block(r, r, &ComplexMatrix::identity(n - r));
                (lhs, rhs)
            }
        }
    };
}

st_like_accessors!(StForm, rank_b);
st_like_accessors!(ReverseStForm, rank_a);

impl StForm {
    /// `(A, B)` in the original edge numbering.
    pub fn matrices(&self) -> (ComplexMatrix, ComplexMatrix) {
        let (lhs, rhs) = self.halves();
        let a = self.permutation.unpermute_columns(&-&rhs);
        let b = self.permutation.unpermute_columns(&lhs);
        (a, b)
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, FormError> {
        let (a, b) = self.matrices();
        Ok(validate(a, b, Tolerances::default())?)
    }
}

impl ReverseStForm {
    /// `(A, B)` in the original edge numbering.
    pub fn matrices(&self) -> (ComplexMatrix, ComplexMatrix) {
        let (lhs, rhs) = self.halves();
        let a = self.permutation.unpermute_columns(&lhs);
        let b = self.permutation.unpermute_columns(&-&rhs);
        (a, b)
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, FormError> {
        let (a, b) = self.matrices();
        Ok(validate(a, b, Tolerances::default())?)
    }
}

/// Row reduction shared by both ST shapes.
///
/// For `X u + Y v = 0` with `rank(Y) = r`, finds the permutation and the
/// blocks of `(I T; 0 0) ṽ = (S 0; −T* I) ũ`. The first `r` permuted
/// coordinates are the lexicographically earliest independent columns of `Y`.
/// Once the permutation is fixed the reduction is unique, so it coincides
/// with the Gauss–Jordan reduction.
pub(crate) struct Reduction {
    pub permutation: Permutation,
    pub s: ComplexMatrix,
    pub t: ComplexMatrix,
}

pub(crate) fn reduce(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    rank_y: usize,
    tol: f64,
) -> Result<Reduction, FormError> {
    let n = y.rows();
    let r = rank_y;
    let pivots = greedy_columns(y, r, tol);
    if pivots.len() != r {
        return Err(FormError::RankMismatch {
            what: "pivot columns",
            expected: r,
            found: pivots.len(),
        });
    }
    let permutation = Permutation::new(front_loaded(&pivots, n)).expect("valid ordering");
    let xp = permutation.permute_columns(x);
    let yp = permutation.permute_columns(y);

    // the left multiplier M satisfies M (Y_lead | X_tail) = I, so a single
    // solve gives M X_lead = (−S ; −T*)
    let gate = yp.block(0, 0, n, r).hstack(&xp.block(0, r, n, n - r)).expect("n rows");
    let reduced = gate.solve(&xp.block(0, 0, n, r), tol)?;
    let s = check_hermitian(&-&reduced.block(0, 0, r, r), "S", 1e-6)?;
    let t = -reduced.block(r, 0, n - r, r).adjoint();

    Ok(Reduction { permutation, s, t })
}

/// ST-form of a coupling, organised by `rank(B)`.
pub fn to_st_form(c: &VertexCoupling) -> Result<StForm, FormError> {
    let red = reduce(c.a(), c.b(), c.rank_b(), c.tolerances().rank)?;
    StForm::new(c.n(), red.permutation, red.s, red.t)
}

/// Reverse ST-form, organised by `rank(A)`.
pub fn to_reverse_st_form(c: &VertexCoupling) -> Result<ReverseStForm, FormError> {
    let red = reduce(c.b(), c.a(), c.rank_a(), c.tolerances().rank)?;
    ReverseStForm::new(c.n(), red.permutation, red.s, red.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;

    #[test]
    fn neumann_has_full_s_block() {
        let st = to_st_form(&VertexCoupling::neumann(3)).unwrap();
        assert_eq!(st.rank_b(), 3);
        assert_eq!(st.t().shape(), (3, 0));
        assert_eq!(st.s().max_norm(), 0.0);
        assert!(st.permutation().is_identity());
    }

    #[test]
    fn dirichlet_st_form_degenerates() {
        let st = to_st_form(&VertexCoupling::dirichlet(3)).unwrap();
        assert_eq!(st.rank_b(), 0);
        assert_eq!(st.s().shape(), (0, 0));
        assert_eq!(st.t().shape(), (0, 3));
        let (a, b) = st.matrices();
        // bottom block only: 0 = −Ψ
        assert!(a.max_distance(&ComplexMatrix::identity(3).scale_real(-1.0)) < 1e-15);
        assert_eq!(b.max_norm(), 0.0);
    }

    #[test]
    fn delta_st_form() {
        let alpha = 1.7;
        let st = to_st_form(&VertexCoupling::delta(2, alpha)).unwrap();
        assert_eq!(st.rank_b(), 1);
        assert!((st.s().get(0, 0) - re(alpha)).norm() < 1e-12);
        assert!((st.t().get(0, 0) - re(1.0)).norm() < 1e-12);
    }

    #[test]
    fn reverse_forms_of_dirichlet_and_neumann() {
        let rev = to_reverse_st_form(&VertexCoupling::dirichlet(3)).unwrap();
        assert_eq!(rev.rank_a(), 3);
        assert_eq!(rev.s().max_norm(), 0.0);
        assert_eq!(rev.t().shape(), (3, 0));

        let rev = to_reverse_st_form(&VertexCoupling::neumann(3)).unwrap();
        assert_eq!(rev.rank_a(), 0);
        let (a, b) = rev.matrices();
        assert_eq!(a.max_norm(), 0.0);
        assert!(b.max_distance(&ComplexMatrix::identity(3).scale_real(-1.0)) < 1e-15);
    }

    #[test]
    fn pivot_columns_are_lexicographically_earliest() {
        // B has a zero first column, so edge 1 cannot lead.
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let c = VertexCoupling::new(a, b).unwrap();
        let st = to_st_form(&c).unwrap();
        assert_eq!(st.permutation().as_slice(), &[1, 0]);
    }

    #[test]
    fn constructor_rejects_bad_blocks() {
        let p = Permutation::identity(3);
        let s = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let t = ComplexMatrix::zeros(2, 1);
        assert!(matches!(
            StForm::new(3, p.clone(), s, t.clone()),
            Err(FormError::NotHermitian { .. })
        ));
        assert!(matches!(
            StForm::new(3, p, ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)),
            Err(FormError::InvalidShape(_))
        ));
    }
}
