use super::FormError;

fn check(n: usize, rank_a: usize, rank_b: usize) -> Result<(), FormError> {
    if rank_a > n || rank_b > n || rank_a + rank_b < n {
        return Err(FormError::InvalidRankPair { n, rank_a, rank_b });
    }
    Ok(())
}

/// Real parameters of the subfamily with ranks `(r_A, r_B)`:
/// `n² − (n − r_A)² − (n − r_B)²`.
pub fn parameter_count(n: usize, rank_a: usize, rank_b: usize) -> Result<usize, FormError> {
    check(n, rank_a, rank_b)?;
    Ok(n * n - (n - rank_a).pow(2) - (n - rank_b).pow(2))
}

/// Extra parameters fixing `ran 𝒫` and `ran 𝒬` beyond those of `Λ`:
/// `Δ = 2[r_A r_B − (r_A + r_B − n)²]`.
pub fn delta_parameters(n: usize, rank_a: usize, rank_b: usize) -> Result<usize, FormError> {
    check(n, rank_a, rank_b)?;
    let m = rank_a + rank_b - n;
    Ok(2 * (rank_a * rank_b - m * m))
}

/// Real parameters fixing an `dim`-dimensional subspace of `ℂ^ambient`,
/// `2·dim·(ambient − dim)`.
pub fn subspace_parameters(ambient: usize, dim: usize) -> usize {
    assert!(dim <= ambient, "subspace larger than the ambient space");
    2 * dim * (ambient - dim)
}

/// `Δ` counted as two subspace choices: the `(n − r_A)`-dimensional
/// complement of `ran A` in `ℂⁿ`, then `ker B*` of dimension `n − r_B`
/// inside the remaining `r_A`-dimensional space.
pub fn delta_from_subspaces(n: usize, rank_a: usize, rank_b: usize) -> Result<usize, FormError> {
    check(n, rank_a, rank_b)?;
    Ok(subspace_parameters(n, n - rank_a) + subspace_parameters(rank_a, n - rank_b))
}

/// Number of admissible rank pairs, `(n + 1)(n + 2)/2`.
pub fn subfamily_count(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// All admissible `(r_A, r_B)` for degree `n`, in lexicographic order.
pub fn rank_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..=n)
        .flat_map(|ra| (n - ra..=n).map(move |rb| (ra, rb)))
        .collect()
}
