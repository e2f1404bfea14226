//! Random unitaries and admissible couplings with prescribed ranks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::coupling::{unitary_from_spectrum, validate, Tolerances, VertexCoupling};
use crate::linalg::{ComplexMatrix, I, ONE};
use crate::permutation::Permutation;

/// Haar-distributed `n × n` unitary (QR of a complex Gaussian with the
/// phases of `diag R` divided out).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_inner(q)
}

/// Eigenphase whose `Λ` eigenvalue `−tan(θ/2)` has modulus in `[0.5, 3]`,
/// keeping random couplings away from the Dirichlet and Neumann ends.
fn moderate_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let lo = 2.0 * 0.5f64.atan();
    let hi = 2.0 * 3f64.atan();
    let theta = rng.random_range(lo..hi);
    if rng.random_bool(0.5) { theta } else { -theta }
}

/// Eigenphases: `0` with multiplicity `n − r_A`, `π` with multiplicity
/// `n − r_B`, moderate phases for the rest.
fn phases_with_ranks<R: Rng + ?Sized>(n: usize, rank_a: usize, rank_b: usize, rng: &mut R) -> Vec<f64> {
    assert!(rank_a <= n && rank_b <= n && rank_a + rank_b >= n, "inadmissible rank pair");
    let mut phases = vec![0.0; n - rank_a];
    phases.extend(std::iter::repeat_n(PI, n - rank_b));
    phases.extend((0..rank_a + rank_b - n).map(|_| moderate_phase(rng)));
    phases
}

/// Unitary with eigenvalue `+1` of multiplicity `n − r_A`, `−1` of
/// multiplicity `n − r_B`, and moderate phases elsewhere, in a Haar basis.
pub fn unitary_with_ranks<R: Rng + ?Sized>(n: usize, rank_a: usize, rank_b: usize, rng: &mut R) -> ComplexMatrix {
    // VV* is only I up to rounding, which would give U ∓ I a spurious full rank
    if rank_a == 0 {
        return ComplexMatrix::identity(n);
    }
    if rank_b == 0 {
        return -ComplexMatrix::identity(n);
    }
    let phases = phases_with_ranks(n, rank_a, rank_b, rng);
    unitary_from_spectrum(&haar_unitary(n, rng), &phases)
}

/// Diagonals of `D − I` and `i(D + I)` for `D = diag(e^{iθ})`, exact zero at
/// `θ = 0` and `θ = π` so the ranks do not pick up rounding noise.
fn spectral_diagonals(phases: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    phases
        .iter()
        .map(|&t| {
            let z = Complex64::from_polar(1.0, t);
            let zero = Complex64::new(0.0, 0.0);
            if t == 0.0 {
                (zero, Complex64::new(0.0, 2.0))
            } else if t == PI {
                (Complex64::new(-2.0, 0.0), zero)
            } else {
                (z - ONE, (z + ONE) * I)
            }
        })
        .unzip()
}

/// Well-conditioned random invertible matrix: unitary times a positive
/// diagonal with entries in `[0.5, 2]`.
fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let d: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(0.5..2.0), 0.0)).collect();
    &haar_unitary(n, rng) * &ComplexMatrix::diagonal(&d)
}

/// `(V(D − I)V*, iV(D + I)V*)` for a Haar `V`.
fn spectral_pair<R: Rng + ?Sized>(phases: &[f64], rng: &mut R) -> (ComplexMatrix, ComplexMatrix) {
    let v = haar_unitary(phases.len(), rng);
    let (a, b) = spectral_diagonals(phases);
    let conj = |d: &[Complex64]| &(&v * &ComplexMatrix::diagonal(d)) * &v.adjoint();
    (conj(&a), conj(&b))
}

fn mixed<R: Rng + ?Sized>(a: ComplexMatrix, b: ComplexMatrix, rng: &mut R) -> VertexCoupling {
    let g = random_invertible(a.rows(), rng);
    validate(&g * &a, &g * &b, Tolerances::default()).expect("generated coupling is admissible")
}

/// `(A, B) = G(U − I, i(U + I))` with ranks `(r_A, r_B)` and a random
/// invertible `G`, so the representation is not canonical.
pub fn random_coupling<R: Rng + ?Sized>(n: usize, rank_a: usize, rank_b: usize, rng: &mut R) -> VertexCoupling {
    let phases = phases_with_ranks(n, rank_a, rank_b, rng);
    let (a, b) = spectral_pair(&phases, rng);
    mixed(a, b, rng)
}

/// Coupling whose edges split into a generic part, isolated Dirichlet edges
/// and isolated Neumann edges, shuffled by a random permutation. The
/// isolated edges force nontrivial pivot permutations in the canonical forms.
pub fn random_structured_coupling<R: Rng + ?Sized>(
    n: usize,
    rank_a: usize,
    rank_b: usize,
    rng: &mut R,
) -> VertexCoupling {
    assert!(rank_a <= n && rank_b <= n && rank_a + rank_b >= n, "inadmissible rank pair");
    let dirichlet = rng.random_range(0..=n - rank_b);
    let neumann = rng.random_range(0..=n - rank_a);
    let core = n - dirichlet - neumann;
    // the core keeps the remaining ±1 multiplicities and all moderate phases
    let core_a = core - (n - rank_a - neumann);
    let core_b = core - (n - rank_b - dirichlet);
    let (core_alpha, core_beta) = spectral_pair(&phases_with_ranks(core, core_a, core_b, rng), rng);
    let mut a = ComplexMatrix::zeros(n, n);
    let mut b = ComplexMatrix::zeros(n, n);
    a.set_block(0, 0, &core_alpha);
    b.set_block(0, 0, &core_beta);
    for i in core..core + dirichlet {
        a.set(i, i, -ONE);
    }
    for i in core + dirichlet..n {
        b.set(i, i, ONE);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let perm = Permutation::new(order).expect("shuffled identity");
    mixed(perm.unpermute_operator(&a), perm.unpermute_operator(&b), rng)
}

/// Every admissible `(n, r_A, r_B)` with `n` in `1..=max_n`.
pub fn all_shapes(max_n: usize) -> Vec<(usize, usize, usize)> {
    (1..=max_n)
        .flat_map(|n| crate::forms::rank_pairs(n).into_iter().map(move |(a, b)| (n, a, b)))
        .collect()
}

/// `count` couplings cycling through all shapes with `n ≤ max_n`; every
/// other one is a structured coupling.
pub fn corpus<R: Rng + ?Sized>(count: usize, max_n: usize, rng: &mut R) -> Vec<VertexCoupling> {
    let shapes = all_shapes(max_n);
    (0..count)
        .map(|i| {
            let (n, a, b) = shapes[i % shapes.len()];
            if (i / shapes.len()) % 2 == 1 {
                random_structured_coupling(n, a, b, rng)
            } else {
                random_coupling(n, a, b, rng)
            }
        })
        .collect()
}
