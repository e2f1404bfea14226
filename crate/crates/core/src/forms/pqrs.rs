use crate::coupling::{validate, Tolerances, VertexCoupling};
use crate::linalg::ComplexMatrix;
use crate::permutation::Permutation;

use super::{check_hermitian, expect_shape, front_loaded, greedy_columns, to_st_form, FormError};

/// PQRS form
///
/// ```text
/// ( I  0  P )          ( S   −SR*      0 )
/// ( R  I  Q ) Ψ̃′  =   ( 0    0        0 ) Ψ̃
/// ( 0  0  0 )          ( −P* (RP−Q)*   I )
/// ```
///
/// with identity blocks of sizes `m = r_A + r_B − n`, `n − r_A` and `n − r_B`.
/// Blocks are stored in permuted coordinates.
#[derive(Debug, Clone)]
pub struct PqrsForm {
    n: usize,
    rank_a: usize,
    rank_b: usize,
    permutation: Permutation,
    p: ComplexMatrix,
    q: ComplexMatrix,
    r: ComplexMatrix,
    s: ComplexMatrix,
}

impl PqrsForm {
    /// Checks block shapes and that `S` is Hermitian. Regularity of `S` is
    /// not required here; see [`PqrsForm::is_regular`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        rank_a: usize,
        rank_b: usize,
        permutation: Permutation,
        p: ComplexMatrix,
        q: ComplexMatrix,
        r: ComplexMatrix,
        s: ComplexMatrix,
    ) -> Result<Self, FormError> {
        if rank_a > n || rank_b > n || rank_a + rank_b < n {
            return Err(FormError::InvalidRankPair { n, rank_a, rank_b });
        }
        if permutation.len() != n {
            return Err(FormError::InvalidShape(format!(
                "permutation of length {} for n={n}",
                permutation.len()
            )));
        }
        let m = rank_a + rank_b - n;
        expect_shape(&p, "P", m, n - rank_b)?;
        expect_shape(&q, "Q", n - rank_a, n - rank_b)?;
        expect_shape(&r, "R", n - rank_a, m)?;
        expect_shape(&s, "S", m, m)?;
        let s = check_hermitian(&s, "S", 1e-9)?;
        Ok(Self {
            n,
            rank_a,
            rank_b,
            permutation,
            p,
            q,
            r,
            s,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank_a(&self) -> usize {
        self.rank_a
    }

    pub fn rank_b(&self) -> usize {
        self.rank_b
    }

    /// `r_A + r_B − n`, the size of `S`.
    pub fn overlap(&self) -> usize {
        self.rank_a + self.rank_b - self.n
    }

    /// Sizes of the three edge blocks: `(r_A + r_B − n, n − r_A, n − r_B)`.
    pub fn block_sizes(&self) -> [usize; 3] {
        [self.overlap(), self.n - self.rank_a, self.n - self.rank_b]
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn p(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn r(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn s(&self) -> &ComplexMatrix {
        &self.s
    }

    /// True when the `S` block is absent, i.e. the coupling is scale invariant.
    pub fn is_scale_invariant(&self) -> bool {
        self.overlap() == 0
    }

    /// True when `S` is absent or numerically invertible.
    pub fn is_regular(&self, tol: f64) -> bool {
        self.s.rank(tol) == self.overlap()
    }

    /// `(R* ; I ; Q*)`, spanning the range of `𝒬`.
    pub fn neumann_columns(&self) -> ComplexMatrix {
        ComplexMatrix::vstack_all(&[
            &self.r.adjoint(),
            &ComplexMatrix::identity(self.n - self.rank_a),
            &self.q.adjoint(),
        ])
        .expect("block shapes checked at construction")
    }

    /// `(−P ; RP − Q ; I)`, spanning the range of `𝒫`.
    pub fn dirichlet_columns(&self) -> ComplexMatrix {
        let rp_q = &(&self.r * &self.p) - &self.q;
        ComplexMatrix::vstack_all(&[
            &-&self.p,
            &rp_q,
            &ComplexMatrix::identity(self.n - self.rank_b),
        ])
        .expect("block shapes checked at construction")
    }

    /// `(A, B)` in permuted coordinates.
    pub fn permuted_matrices(&self) -> (ComplexMatrix, ComplexMatrix) {
        let n = self.n;
        let [m, na, _] = self.block_sizes();
        let mut b = ComplexMatrix::zeros(n, n);
        b.set_block(0, 0, &ComplexMatrix::identity(m));
        b.set_block(0, m + na, &self.p);
        b.set_block(m, 0, &self.r);
        b.set_block(m, m, &ComplexMatrix::identity(na));
        b.set_block(m, m + na, &self.q);

        let rp_q = &(&self.r * &self.p) - &self.q;
        let mut rhs = ComplexMatrix::zeros(n, n);
        rhs.set_block(0, 0, &self.s);
        rhs.set_block(0, m, &-(&self.s * &self.r.adjoint()));
        rhs.set_block(m + na, 0, &-&self.p.adjoint());
        rhs.set_block(m + na, m, &rp_q.adjoint());
        rhs.set_block(m + na, m + na, &ComplexMatrix::identity(n - self.rank_b));
        (-&rhs, b)
    }

    /// `(A, B)` in the original edge numbering.
    pub fn matrices(&self) -> (ComplexMatrix, ComplexMatrix) {
        let (a, b) = self.permuted_matrices();
        (
            self.permutation.unpermute_columns(&a),
            self.permutation.unpermute_columns(&b),
        )
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, FormError> {
        pqrs_to_matrices(self)
    }
}

/// Assembles and validates `(A, B)` from the blocks. With a singular `S` the
/// validated ranks are smaller than the declared ones.
pub fn pqrs_to_matrices(f: &PqrsForm) -> Result<VertexCoupling, FormError> {
    let (a, b) = f.matrices();
    Ok(validate(a, b, Tolerances::default())?)
}

/// PQRS form of a coupling.
///
/// Starts from the ST-form, moves the earliest `r_A + r_B − n` independent
/// rows of `S_ST` to the front, splits `S_ST` and `T_ST` accordingly and
/// eliminates the dependent rows with the unique `R` satisfying
/// `(S₂₁ S₂₂) = −R (S₁₁ S₂₁*)`.
pub fn to_pqrs_form(c: &VertexCoupling) -> Result<PqrsForm, FormError> {
    let st = to_st_form(c)?;
    let tol = c.tolerances().rank;
    let (n, ra, rb) = (c.n(), c.rank_a(), c.rank_b());
    let m = ra + rb - n;
    let na = n - ra;

    // rows of S_ST are the columns of its adjoint
    let lead = greedy_columns(&st.s().adjoint(), m, tol);
    if lead.len() != m {
        return Err(FormError::RankMismatch {
            what: "rows of S_ST",
            expected: m,
            found: lead.len(),
        });
    }
    let inner_order = front_loaded(&lead, rb);
    let mut full_order = inner_order.clone();
    full_order.extend(rb..n);
    let inner = Permutation::new(full_order).expect("valid ordering");
    let permutation = st.permutation().compose(&inner);

    let s_st = st.s().select(&inner_order, &inner_order);
    let t_st = st.t().select_rows(&inner_order);

    let s11 = s_st.block(0, 0, m, m);
    let s21 = s_st.block(m, 0, na, m);
    let rank = s11.rank(tol);
    if rank < m {
        return Err(FormError::SingularSBlock { size: m, rank });
    }
    // least squares over the whole row block (S₁₁ S₂₁*), whose adjoint is
    // the first m columns of S_ST; far better conditioned than S₁₁ alone
    let (qw, rw) = s_st.block(0, 0, rb, m).thin_qr(tol)?;
    let r = -(&(&s_st.block(m, 0, na, rb) * &qw) * &rw.adjoint().inverse(tol)?);
    let t1 = t_st.block(0, 0, m, n - rb);
    let t2 = t_st.block(m, 0, na, n - rb);
    let q = &t2 + &(&r * &t1);

    debug_assert!(
        s_st.block(m, m, na, na)
            .max_distance(&-(&r * &s21.adjoint()))
            < 1e-6 * s_st.max_norm().max(1.0),
        "dependent rows of S_ST must be reproduced by R"
    );
    PqrsForm::new(n, ra, rb, permutation, t1, q, r, s11)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;

    #[test]
    fn dirichlet_keeps_only_the_bottom_identity() {
        let f = to_pqrs_form(&VertexCoupling::dirichlet(2)).unwrap();
        assert_eq!(f.block_sizes(), [0, 0, 2]);
        assert_eq!(f.p().shape(), (0, 2));
        assert_eq!(f.q().shape(), (0, 2));
        assert_eq!(f.r().shape(), (0, 0));
        assert_eq!(f.s().shape(), (0, 0));
        let (a, b) = f.matrices();
        assert!(a.max_distance(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-15);
        assert_eq!(b.max_norm(), 0.0);
    }

    #[test]
    fn delta_coupling_blocks() {
        let f = to_pqrs_form(&VertexCoupling::delta(2, 2.0)).unwrap();
        assert_eq!((f.rank_a(), f.rank_b()), (2, 1));
        assert!((f.p().get(0, 0) - re(1.0)).norm() < 1e-12);
        assert!((f.s().get(0, 0) - re(2.0)).norm() < 1e-12);
        assert_eq!(f.q().shape(), (0, 1));
        assert_eq!(f.r().shape(), (0, 1));
    }

    #[test]
    fn rejects_inadmissible_rank_pair() {
        let z = |r, c| ComplexMatrix::zeros(r, c);
        let err = PqrsForm::new(3, 1, 1, Permutation::identity(3), z(0, 2), z(2, 2), z(2, 0), z(0, 0))
            .unwrap_err();
        assert!(matches!(err, FormError::InvalidRankPair { .. }));
    }

    #[test]
    fn singular_s_lowers_the_validated_rank() {
        // S = 3·F⁽²ˣ²⁾ is rank one, so A loses a rank
        let f = PqrsForm::new(
            5,
            3,
            4,
            Permutation::identity(5),
            ComplexMatrix::filled(2, 1, re(2.5)),
            ComplexMatrix::filled(2, 1, re(1.2)),
            ComplexMatrix::zeros(2, 2),
            ComplexMatrix::filled(2, 2, re(3.0)),
        )
        .unwrap();
        assert!(!f.is_regular(1e-10));
        let c = pqrs_to_matrices(&f).unwrap();
        assert_eq!((c.rank_a(), c.rank_b()), (2, 4));
    }
}
