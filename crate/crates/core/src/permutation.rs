//! Edge renumberings.
//!
//! A [`Permutation`] `π` maps permuted coordinates to original edges:
//! the permuted boundary vector is `Ψ̃_i = ψ_{π(i)}`. Canonical forms keep
//! their blocks in permuted coordinates and carry `π` alongside.

use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a permutation of 0..{len}: {entries:?}")]
pub struct InvalidPermutation {
    pub len: usize,
    pub entries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Zero-based images; `map[i]` is the original edge sitting at position `i`.
    pub fn new(map: Vec<usize>) -> Result<Self, InvalidPermutation> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(InvalidPermutation { len: n, entries: map });
            }
            seen[v] = true;
        }
        Ok(Self(map))
    }

    /// From the one-based notation used in documents.
    pub fn from_one_based(map: &[usize]) -> Result<Self, InvalidPermutation> {
        if map.contains(&0) {
            return Err(InvalidPermutation {
                len: map.len(),
                entries: map.to_vec(),
            });
        }
        Self::new(map.iter().map(|v| v - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// `self ∘ inner`: position `i` holds original edge `self(inner(i))`.
    pub fn compose(&self, inner: &Self) -> Self {
        assert_eq!(self.len(), inner.len());
        Self(inner.0.iter().map(|&j| self.0[j]).collect())
    }

    /// Matrix `Π` with `Π_{i, π(i)} = 1`, so that `Ψ̃ = Π Ψ`.
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            if self.0[i] == j {
                crate::linalg::ONE
            } else {
                crate::linalg::ZERO
            }
        })
    }

    /// Columns of a coefficient matrix reordered into permuted coordinates: `M Πᵀ`.
    pub fn permute_columns(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.select_columns(&self.0)
    }

    /// Inverse of [`Self::permute_columns`]: `M̃ Π`.
    pub fn unpermute_columns(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.select_columns(&self.inverse().0)
    }

    /// Brings an operator on permuted coordinates back to edge numbering: `Πᵀ M̃ Π`.
    pub fn unpermute_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let inv = self.inverse();
        m.select(&inv.0, &inv.0)
    }

    /// `Π M Πᵀ`.
    pub fn permute_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m.select(&self.0, &self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;

    #[test]
    fn rejects_non_permutations() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert_eq!(
            Permutation::from_one_based(&[2, 1, 3]).unwrap().as_slice(),
            &[1, 0, 2]
        );
    }

    #[test]
    fn index_helpers_agree_with_matrix_form() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let pm = p.matrix();
        let m = ComplexMatrix::from_fn(4, 4, |i, j| re((4 * i + j) as f64));
        assert_eq!(p.permute_columns(&m), &m * &pm.transpose());
        assert_eq!(p.unpermute_columns(&m), &m * &pm);
        assert_eq!(p.unpermute_operator(&m), &(&pm.transpose() * &m) * &pm);
        assert_eq!(p.permute_operator(&m), &(&pm * &m) * &pm.transpose());
        assert!(p.compose(&p.inverse()).is_identity());
    }
}
