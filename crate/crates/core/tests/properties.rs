mod common;

use common::checked;
use num_complex::Complex64;
use proptest::prelude::*;
use quantum_vertex::coupling::{from_unitary, to_unitary, UnitaryForm, VertexCoupling};
use quantum_vertex::document::{convert, Document, FormTarget};
use quantum_vertex::filters::{
    amplitude_limits, uniform_block_pqrs, uniformity_defect, FilterParams, CLOSED_FORM_TOL,
};
use quantum_vertex::forms::{
    delta_from_subspaces, delta_parameters, parameter_count, rank_pairs, subfamily_count, to_pqrs_form,
    to_projector_form, to_reverse_st_form, to_st_form,
};
use quantum_vertex::linalg::ComplexMatrix;
use quantum_vertex::permutation::Permutation;
use quantum_vertex::random::{
    all_shapes, haar_unitary, random_coupling, random_structured_coupling, unitary_with_ranks,
};
use quantum_vertex::scattering::{
    limit_high_k, limit_low_k_general, same_scattering, smatrix_direct, smatrix_pqrs,
    smatrix_projector, smatrix_reverse_st, smatrix_st,
};
use quantum_vertex::sweep::{k_grid, GridScale};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

const KS: [f64; 3] = [0.1, 1.0, 10.0];

fn gaussian(rows: usize, cols: usize, rng: &mut StdRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn well_conditioned(n: usize, rng: &mut StdRng) -> ComplexMatrix {
    let d: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(0.5..2.0), 0.0)).collect();
    &haar_unitary(n, rng) * &ComplexMatrix::diagonal(&d)
}

fn shape_strategy(max_n: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    let shapes = all_shapes(max_n);
    (0..shapes.len()).prop_map(move |i| shapes[i])
}

fn coupling_strategy() -> impl Strategy<Value = VertexCoupling> {
    (shape_strategy(5), any::<u64>(), any::<bool>()).prop_map(|((n, a, b), seed, structured)| {
        let mut rng = StdRng::seed_from_u64(seed);
        if structured {
            random_structured_coupling(n, a, b, &mut rng)
        } else {
            random_coupling(n, a, b, &mut rng)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_of_random_invertible(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = well_conditioned(n, &mut rng);
        let inv = m.inverse(1e-10).unwrap();
        prop_assert!((&m * &inv).max_distance(&ComplexMatrix::identity(n)) < 1e-10);
    }

    #[test]
    fn rank_survives_permutation_and_mixing(n in 1usize..7, r in 0usize..7, seed in any::<u64>()) {
        let r = r.min(n);
        let mut rng = StdRng::seed_from_u64(seed);
        let m = &gaussian(n, r, &mut rng) * &gaussian(r, n, &mut rng);
        prop_assert_eq!(m.rank(1e-10), r);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let p = Permutation::new(order).unwrap();
        prop_assert_eq!(p.permute_columns(&m).rank(1e-10), r);
        prop_assert_eq!(p.permute_operator(&m).rank(1e-10), r);
        prop_assert_eq!((&well_conditioned(n, &mut rng) * &m).rank(1e-10), r);
        prop_assert_eq!((&m * &well_conditioned(n, &mut rng)).rank(1e-10), r);
    }

    #[test]
    fn sum_with_adjoint_is_hermitian(n in 0usize..7, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = gaussian(n, n, &mut rng);
        prop_assert!((&m + &m.adjoint()).is_hermitian(0.0));
    }

    #[test]
    fn from_unitary_always_validates(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let u = UnitaryForm::new(haar_unitary(n, &mut rng), 1e-9).unwrap();
        let c = from_unitary(&u).unwrap();
        for k in KS {
            prop_assert!(checked(&c, smatrix_direct(&c, k).unwrap()).unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn equivalent_representations_scatter_alike(c in coupling_strategy(), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let g = well_conditioned(c.n(), &mut rng);
        let mixed = c.left_multiplied(&g).unwrap();
        prop_assert!(same_scattering(&c, &mixed, &KS, 1e-10).unwrap());
        let z = Complex64::from_polar(rng.random_range(0.3..3.0), rng.random_range(0.0..std::f64::consts::TAU));
        let scaled = VertexCoupling::new(c.a().scale(z), c.b().scale(z)).unwrap();
        prop_assert!(same_scattering(&c, &scaled, &KS, 1e-10).unwrap());
    }

    #[test]
    fn every_form_reconstructs_the_coupling((n, a, b) in shape_strategy(5), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let u = UnitaryForm::new(unitary_with_ranks(n, a, b, &mut rng), 1e-9).unwrap();
        let c = from_unitary(&u).unwrap();
        prop_assert_eq!((c.rank_a(), c.rank_b()), (a, b));
        let rebuilt = [
            to_st_form(&c).unwrap().to_coupling().unwrap(),
            to_reverse_st_form(&c).unwrap().to_coupling().unwrap(),
            to_pqrs_form(&c).unwrap().to_coupling().unwrap(),
            to_projector_form(&c).unwrap().to_coupling().unwrap(),
        ];
        for r in &rebuilt {
            prop_assert!(same_scattering(&c, r, &KS, 1e-9).unwrap());
        }
        let back = from_unitary(&to_unitary(&c).unwrap()).unwrap();
        prop_assert!(same_scattering(&c, &back, &KS, 1e-9).unwrap());
    }

    #[test]
    fn pqrs_conversion_is_deterministic(c in coupling_strategy()) {
        let f1 = to_pqrs_form(&c).unwrap();
        let f2 = to_pqrs_form(&c).unwrap();
        prop_assert_eq!(f1.permutation(), f2.permutation());
        prop_assert!(f1.p().max_distance(f2.p()) <= 1e-12);
        prop_assert!(f1.q().max_distance(f2.q()) <= 1e-12);
        prop_assert!(f1.r().max_distance(f2.r()) <= 1e-12);
        prop_assert!(f1.s().max_distance(f2.s()) <= 1e-12);
    }

    #[test]
    fn projector_algebra(c in coupling_strategy()) {
        let f = to_projector_form(&c).unwrap();
        for (name, defect) in f.invariant_defects() {
            prop_assert!(defect < 1e-10, "{} {:e}", name, defect);
        }
        let sum = &(f.p() + f.q()) + f.c();
        prop_assert!(sum.max_distance(&ComplexMatrix::identity(c.n())) < 1e-10);
    }

    #[test]
    fn all_formulas_are_unitary_and_agree(c in coupling_strategy()) {
        let st = to_st_form(&c).unwrap();
        let rev = to_reverse_st_form(&c).unwrap();
        let pqrs = to_pqrs_form(&c).unwrap();
        let proj = to_projector_form(&c).unwrap();
        for k in common::log_grid() {
            let direct = checked(&c, smatrix_direct(&c, k).unwrap());
            prop_assert!(direct.unitarity_defect() < 1e-10);
            for s in [
                smatrix_st(&st, k).unwrap(),
                smatrix_reverse_st(&rev, k).unwrap(),
                smatrix_pqrs(&pqrs, k).unwrap(),
                smatrix_projector(&proj, k).unwrap(),
            ] {
                let s = checked(&c, s);
                prop_assert!(s.unitarity_defect() < 1e-10);
                prop_assert!(s.matrix().max_distance(direct.matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn emitted_documents_reparse(c in coupling_strategy()) {
        let plain = Document::Coupling(quantum_vertex::document::CouplingDocument::from_coupling(&c));
        let reread = Document::parse(&plain.to_json()).unwrap().to_coupling().unwrap();
        // shortest round-trip formatting preserves every bit
        prop_assert_eq!(reread.a().max_distance(c.a()), 0.0);
        prop_assert_eq!(reread.b().max_distance(c.b()), 0.0);
        for target in [FormTarget::St, FormTarget::ReverseSt, FormTarget::Pqrs, FormTarget::Unitary, FormTarget::Projector] {
            let doc = Document::Form(convert(&c, target).unwrap());
            let parsed = Document::parse(&doc.to_json()).unwrap();
            prop_assert_eq!(&parsed, &doc);
            let back = parsed.to_coupling().unwrap();
            prop_assert!(same_scattering(&c, &back, &KS, 1e-9).unwrap());
        }
    }

    #[test]
    fn grids_are_strictly_ascending(lo in -4.0f64..0.0, span in 0.1f64..8.0, points in 2usize..200, log in any::<bool>()) {
        let (k_min, k_max) = (10f64.powf(lo), 10f64.powf(lo + span));
        let scale = if log { GridScale::Log } else { GridScale::Linear };
        let g = k_grid(k_min, k_max, points, scale).unwrap();
        prop_assert_eq!(g.len(), points);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}

fn filter_strategy() -> impl Strategy<Value = FilterParams> {
    (
        shape_strategy(6),
        -3.0f64..3.0,
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.1f64..3.0,
        any::<bool>(),
    )
        .prop_map(|((n, rank_a, rank_b), p, q, r, s, neg)| FilterParams {
            n,
            rank_a,
            rank_b,
            p,
            q,
            r,
            s: if neg { -s } else { s },
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_forms_match_limit_matrices(fp in filter_strategy()) {
        let lim = amplitude_limits(&fp).unwrap();
        let mismatches = lim.mismatches(CLOSED_FORM_TOL);
        prop_assert!(mismatches.is_empty(), "{}", lim.report());
        // the ker S correction never reaches the cross-block entries
        for mu in 0..3 {
            for nu in 0..3 {
                if mu != nu {
                    if let (Some(a), Some(b)) = (lim.low_k[mu][nu], lim.low_k_formula[mu][nu]) {
                        prop_assert!((a - b).abs() < 1e-10);
                    }
                }
            }
        }
        let f = uniform_block_pqrs(&fp).unwrap();
        let layout = fp.layout();
        prop_assert!(uniformity_defect(&limit_high_k(&f).unwrap(), &layout) < 1e-10);
        prop_assert!(uniformity_defect(&limit_low_k_general(&f).unwrap(), &layout) < 1e-10);
    }

    #[test]
    fn swept_points_are_unitary(fp in filter_strategy()) {
        let f = uniform_block_pqrs(&fp).unwrap();
        let c = f.to_coupling().unwrap();
        for k in [1e-2, 0.3, 1.0, 7.0, 1e2] {
            let s = checked(&c, smatrix_pqrs(&f, k).unwrap());
            prop_assert!(s.unitarity_defect() < 1e-10);
        }
    }
}

#[test]
fn counting_identities_up_to_degree_eight() {
    for n in 0..=8 {
        for (ra, rb) in rank_pairs(n) {
            let params = parameter_count(n, ra, rb).unwrap();
            assert_eq!(params + (n - ra).pow(2) + (n - rb).pow(2), n * n);
            assert_eq!(delta_parameters(n, ra, rb).unwrap(), delta_from_subspaces(n, ra, rb).unwrap());
        }
    }
}

#[test]
fn pqrs_block_shapes_for_every_rank_pair_at_degree_five() {
    let mut rng = StdRng::seed_from_u64(5);
    let pairs = rank_pairs(5);
    assert_eq!(pairs.len(), subfamily_count(5));
    for (ra, rb) in pairs {
        let f = to_pqrs_form(&random_coupling(5, ra, rb, &mut rng)).unwrap();
        let (m, na, nb) = (ra + rb - 5, 5 - ra, 5 - rb);
        assert_eq!(f.p().shape(), (m, nb));
        assert_eq!(f.q().shape(), (na, nb));
        assert_eq!(f.r().shape(), (na, m));
        assert_eq!(f.s().shape(), (m, m));
    }
}
