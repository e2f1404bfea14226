//! Canonical descriptions of a vertex coupling.
//!
//! * [`StForm`]: `(I T; 0 0)Ψ′ = (S 0; −T* I)Ψ`, organised by `rank(B)`.
//! * [`ReverseStForm`]: the same shape with `Ψ` and `Ψ′` exchanged, organised by `rank(A)`.
//! * [`PqrsForm`]: the symmetrised shape organised by both ranks.
//! * [`ProjectorForm`]: orthogonal projectors `𝒫, 𝒬, 𝒞` and `Λ` acting on `ran 𝒞`.
//!
//! Each form carries the edge permutation it was built in and converts back
//! into an `(A, B)` pair in the original edge numbering.

mod counting;
mod pqrs;
mod projector;
mod st;

pub use counting::{
    delta_from_subspaces, delta_parameters, parameter_count, rank_pairs, subfamily_count,
    subspace_parameters,
};
pub use pqrs::{pqrs_to_matrices, to_pqrs_form, PqrsForm};
pub use projector::{projector_form_from_unitary, to_projector_form, ProjectorForm};
pub use st::{to_reverse_st_form, to_st_form, ReverseStForm, StForm};

use crate::coupling::CouplingError;
use crate::linalg::{ComplexMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormError {
    #[error("inadmissible rank pair: n={n}, r_A={rank_a}, r_B={rank_b} (need r_A, r_B <= n and r_A + r_B >= n)")]
    InvalidRankPair {
        n: usize,
        rank_a: usize,
        rank_b: usize,
    },
    #[error("S block of size {size} is numerically singular (rank {rank}); R is not unique")]
    SingularSBlock { size: usize, rank: usize },
    #[error("found {found} independent {what}, expected {expected}")]
    RankMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("block shapes are inconsistent: {0}")]
    InvalidShape(String),
    #[error("{what} is not Hermitian (defect {defect:.3e})")]
    NotHermitian { what: &'static str, defect: f64 },
    #[error("projector invariant violated: {0}")]
    ProjectorInvariant(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Lexicographically earliest set of `target` linearly independent columns.
///
/// Independence is judged against `rel_tol · σ_max(m)`, so the scale of the
/// whole matrix decides what counts as a numerically zero direction.
pub(crate) fn greedy_columns(m: &ComplexMatrix, target: usize, rel_tol: f64) -> Vec<usize> {
    let threshold = rel_tol * m.singular_values().first().copied().unwrap_or(0.0);
    let mut chosen = Vec::with_capacity(target);
    for j in 0..m.cols() {
        if chosen.len() == target {
            break;
        }
        chosen.push(j);
        if m.select_columns(&chosen).rank_against(threshold) < chosen.len() {
            chosen.pop();
        }
    }
    chosen
}

/// `0..n` with `first` moved to the front, both parts in increasing order.
pub(crate) fn front_loaded(first: &[usize], n: usize) -> Vec<usize> {
    let mut order = first.to_vec();
    order.extend((0..n).filter(|j| !first.contains(j)));
    order
}

pub(crate) fn check_hermitian(
    m: &ComplexMatrix,
    what: &'static str,
    rel_tol: f64,
) -> Result<ComplexMatrix, FormError> {
    let defect = m.max_distance(&m.adjoint());
    if defect > rel_tol * m.max_norm().max(1.0) {
        return Err(FormError::NotHermitian { what, defect });
    }
    Ok(m.hermitian_part())
}

pub(crate) fn expect_shape(
    m: &ComplexMatrix,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<(), FormError> {
    if m.shape() != (rows, cols) {
        return Err(FormError::InvalidShape(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}
