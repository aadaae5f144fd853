mod common;

use std::cmp::Ordering;

use common::*;
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trs_core::linear_systems::*;
use trs_core::series_core::blocks::direct_sum_mats;
use trs_core::series_core::*;
use trs_core::{Error, RMat, RPolyMatrix};

fn pm(coeffs: Vec<RMat>, trunc: usize) -> RPolyMatrix {
    PolyMatrix::from_coeffs(coeffs, trunc).unwrap()
}

fn sys(p: i64, coeffs: Vec<RMat>, trunc: usize) -> LinearSystem {
    LinearSystem::new(p, pm(coeffs, trunc)).unwrap()
}

fn ramified_example() -> LinearSystem {
    sys(2, vec![m(&[&[0, 0], &[1, 0]]), m(&[&[0, 1], &[0, 0]])], 12)
}

#[test]
fn singular_system_needs_nonzero_constant_term() {
    assert!(matches!(
        LinearSystem::new(1, pm(vec![m(&[&[0]]), m(&[&[1]])], 3)),
        Err(Error::Precondition(_))
    ));
    assert!(LinearSystem::new(-1, pm(vec![m(&[&[0]])], 3)).is_ok());
}

#[test]
fn identity_gauge_is_neutral() {
    let s = sys(1, vec![m(&[&[1, 2], &[3, 4]]), m(&[&[0, 1], &[1, 0]])], 5);
    let t = GaugeTransform::PolyRegular { p: RPolyMatrix::identity(2, 0) };
    assert!(is_admissible(&s, &t).unwrap());
    assert_eq!(apply_gauge(&s, &t).unwrap(), s);
}

#[test]
fn ramification_substitutes_and_rescales() {
    // x = t^2 turns x^2 y' = A0 y into t^3 y' = 2 A0 y
    let a0 = m(&[&[1, 2], &[0, -1]]);
    let s = sys(1, vec![a0.clone()], 4);
    let out = apply_gauge(&s, &GaugeTransform::Ramification { r: 2 }).unwrap();
    assert_eq!(out.p, 2);
    assert_eq!(out.a.coeff(0), &a0.scale(&r(2)));
    assert!(out.a.coeffs()[1..].iter().all(Mat::is_zero));
}

#[test]
fn diagonal_shift_block_formula() {
    let s = sys(1, vec![m(&[&[0, 0], &[1, 0]]), m(&[&[0, 1], &[0, 0]])], 6);
    let t = GaugeTransform::DiagMonomial { k: vec![1, 0] };
    assert!(is_admissible(&s, &t).unwrap());
    let out = apply_gauge(&s, &t).unwrap();
    assert_eq!(out.p, 1);
    assert_eq!(out.a.coeff(0), &m(&[&[0, 1], &[0, 0]]));
    assert_eq!(out.a.coeff(1), &m(&[&[-1, 0], &[1, 0]]));
}

#[test]
fn admissibility() {
    let nil = sys(1, vec![m(&[&[0, 1], &[0, 0]])], 4);
    assert!(!is_admissible(&nil, &GaugeTransform::DiagMonomial { k: vec![1, 0] }).unwrap());
    assert!(matches!(
        apply_gauge(&nil, &GaugeTransform::DiagMonomial { k: vec![1, 0] }),
        Err(Error::Inadmissible(_))
    ));
    let p = pm(vec![m(&[&[1, 1], &[0, 1]]), m(&[&[3, 0], &[1, 2]])], 1);
    assert!(is_admissible(&nil, &GaugeTransform::PolyRegular { p }).unwrap());
}

#[test]
fn recognizes_scalar_trs() {
    let f = recognize_trs(&sys(1, vec![m(&[&[1]])], 4)).unwrap();
    assert_eq!(f.q, 1);
    assert_eq!(f.exps, vec![Exponent::real(vec![r(1)])]);
    assert_eq!(f.c, m(&[&[0]]));
    assert!(f.v.is_zero());
}

#[test]
fn recognizes_rotation_as_complex_block() {
    let f = recognize_trs(&sys(1, vec![m(&[&[0, -1], &[1, 0]])], 4)).unwrap();
    assert_eq!(f.q, 1);
    assert_eq!(f.bs, BlockStructure::new(vec![Block::complex(1)]));
    assert_eq!(f.exps, vec![Exponent { re: vec![r(0)], im: vec![r(1)] }]);
    assert!(f.c.is_zero());
}

#[test]
fn rank_zero_allows_vanishing_d() {
    let f = recognize_trs(&sys(0, vec![m(&[&[0, 1], &[0, 0]])], 4)).unwrap();
    assert_eq!(f.q, 0);
    assert_eq!(f.c, m(&[&[0, 1], &[0, 0]]));
    assert!(f.exps.iter().all(Exponent::is_empty));
}

#[test]
fn good_spectrum() {
    assert!(has_good_spectrum(&RMat::diag(&[rat(-1, 2), rat(-1, 2)])).unwrap());
    assert!(!has_good_spectrum(&RMat::diag(&[r(0), r(1)])).unwrap());
    assert!(has_good_spectrum(&theta(r(-1), r(1))).unwrap());
    assert!(!has_good_spectrum(&RMat::diag(&[rat(1, 3), rat(-5, 3)])).unwrap());
}

#[test]
fn rotation_dominance() {
    let real = BlockStructure::new(vec![Block::real(2)]);
    assert!(no_dominant_rotation(&real, &[Exponent::real(vec![r(1), r(0)])]));
    let cplx = BlockStructure::new(vec![Block::complex(1)]);
    let i_plus_x = Exponent { re: vec![r(0), r(1)], im: vec![r(1), r(0)] };
    assert!(dominant_rotation(&i_plus_x));
    assert!(!no_dominant_rotation(&cplx, &[i_plus_x]));
    assert!(no_dominant_rotation(&cplx, &[Exponent { re: vec![r(1), r(0)], im: vec![r(0), r(1)] }]));
}

#[test]
fn unstability_counts() {
    let two = BlockStructure::new(vec![Block::real(1), Block::real(1)]);
    assert_eq!(unstability_index(&two, &[Exponent::real(vec![r(1)]), Exponent::real(vec![r(-1)])]).unwrap(), 1);
    let mixed = BlockStructure::new(vec![Block::complex(1), Block::real(1)]);
    let exps = [Exponent { re: vec![r(0), r(1)], im: vec![r(1), r(0)] }, Exponent::real(vec![r(0), r(-1)])];
    assert_eq!(unstability_index(&mixed, &exps).unwrap(), 2);
    let three = BlockStructure::new(vec![Block::real(1); 3]);
    let neg: Vec<Exponent> = (1..=3).map(|k| Exponent::real(vec![r(-k)])).collect();
    assert_eq!(unstability_index(&three, &neg).unwrap(), 0);
    assert!(matches!(
        unstability_index(&BlockStructure::new(vec![Block::real(1)]), &[Exponent::real(vec![r(0)])]),
        Err(Error::Undecidable(_))
    ));
}

fn scalar_form(v: RPolyMatrix) -> TRSLinearForm {
    let bs = BlockStructure::new(vec![Block::real(1)]);
    let exps = vec![Exponent::real(vec![r(1)])];
    let d = exponential_matrix(&bs, &exps, 1, v.trunc() + 2);
    TRSLinearForm { q: 1, bs, exps, d, c: RMat::diag(&[rat(-1, 2)]), v, perm: vec![0] }
}

#[test]
fn vestigial_part_already_small() {
    let f = scalar_form(pm(vec![m(&[&[0]]), m(&[&[0]]), m(&[&[0]]), m(&[&[5]])], 5));
    let (t, g) = kill_vestigial(&f, 3).unwrap();
    assert_eq!(g, f);
    let GaugeTransform::PolyRegular { p } = t else { panic!("expected a regular gauge") };
    assert_eq!(p.coeff(0), &RMat::identity(1));
    assert!(p.coeffs()[1..].iter().all(Mat::is_zero));
}

#[test]
fn vestigial_first_order_gauge() {
    // y = (1 + p1 x) z with x^2 y' = (1 - x/2 + x^2) y: the x^2 term of the
    // transformed matrix is 1 - p1, so p1 = 1
    let f = scalar_form(pm(vec![m(&[&[1]])], 4));
    let (t, g) = kill_vestigial(&f, 1).unwrap();
    let GaugeTransform::PolyRegular { p } = &t else { panic!("expected a regular gauge") };
    assert_eq!(p.coeff(0), &RMat::identity(1));
    assert_eq!(p.coeff(1), &m(&[&[1]]));
    assert_eq!((g.d.clone(), g.c.clone()), (f.d.clone(), f.c.clone()));
    assert!(g.v.order().at_least(1));
    check_vestigial_killed(&f, &t, 1).unwrap();
}

#[test]
fn already_trs_needs_no_gauge() {
    let s = sys(1, vec![m(&[&[1, 0], &[0, -1]])], 6);
    let red = reduce_linear_full(&s, ReduceOptions::new(6)).unwrap();
    assert!(red.chain.is_empty());
    let Reduced::Trs(f) = red.result else { panic!("expected a TRS form") };
    assert_eq!(f.q, 1);
    assert_eq!(f.d.coeff(0), &m(&[&[1, 0], &[0, -1]]));
}

#[test]
fn ramified_system_reduces() {
    let s = ramified_example();
    let red = reduce_linear_full(&s, ReduceOptions::new(12)).unwrap();
    assert!(red.chain.iter().any(|t| matches!(t, GaugeTransform::Ramification { r: 2 })));
    assert_eq!(replay(&s, &red.chain).unwrap(), red.system);
    let Reduced::Trs(f) = &red.result else { panic!("expected a TRS form") };
    assert_eq!(recognize_trs(&red.system).as_ref(), Some(f));
    assert_eq!(f.q, 3);
    assert_eq!(f.bs, BlockStructure::new(vec![Block::real(1), Block::real(1)]));
    let signs: Vec<_> = f.exps.iter().map(|e| e.re_sign().unwrap()).collect();
    assert!(signs.contains(&Ordering::Greater) && signs.contains(&Ordering::Less));
    let mut leads: Vec<Rational> = f.exps.iter().map(|e| e.re[0].clone()).collect();
    leads.sort();
    assert_eq!(leads, vec![r(-2), r(2)]);
    assert_eq!(f.c, RMat::diag(&[rat(-1, 2), rat(-1, 2)]));
}

#[test]
fn resonant_regular_singularity_is_shifted() {
    let s = sys(0, vec![m(&[&[0, 0], &[0, 1]])], 8);
    let red = reduce_linear_full(&s, ReduceOptions::new(8)).unwrap();
    assert!(red.chain.iter().any(|t| t.name() == "diag_monomial"));
    assert_eq!(replay(&s, &red.chain).unwrap(), red.system);
    let Reduced::Regular(reg) = &red.result else { panic!("expected a regular system") };
    assert!(reg.p < 0 || has_good_spectrum(reg.a.coeff(0)).unwrap());
}

#[test]
fn rotation_with_first_order_term() {
    let s = sys(1, vec![m(&[&[0, -1], &[1, 0]]), m(&[&[1, 2], &[3, 4]])], 8);
    let red = reduce_linear_full(&s, ReduceOptions::new(8)).unwrap();
    assert_eq!(replay(&s, &red.chain).unwrap(), red.system);
    let Reduced::Trs(f) = &red.result else { panic!("expected a TRS form") };
    assert_eq!(f.q, 1);
    assert_eq!(f.exps, vec![Exponent { re: vec![r(0)], im: vec![r(1)] }]);
    let c = Mat::from_rows(vec![vec![rat(5, 2), rat(-1, 2)], vec![rat(1, 2), rat(5, 2)]]).unwrap();
    assert_eq!(f.c, c);
}

#[test]
fn irrational_eigenvalues_are_undecidable() {
    let s = sys(1, vec![m(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, -1]]), m(&[&[1, 2, 0], &[3, 4, 1], &[1, 1, 1]])], 8);
    assert!(matches!(reduce_linear_full(&s, ReduceOptions::new(8)), Err(Error::Undecidable(_))));
}

#[test]
fn mixed_rank_two_system() {
    let s = sys(2, vec![m(&[&[2, 1, 0], &[-1, 2, 0], &[0, 0, 3]]), m(&[&[1, 2, 0], &[3, 4, 1], &[1, 1, 1]])], 8);
    let red = reduce_linear_full(&s, ReduceOptions::new(8)).unwrap();
    assert_eq!(replay(&s, &red.chain).unwrap(), red.system);
    let Reduced::Trs(f) = &red.result else { panic!("expected a TRS form") };
    assert_eq!(f.q, 2);
    assert_eq!(f.bs.n_complex(), 1);
    assert_eq!(f.bs.blocks.len(), 2);
    assert!(compatible(&PolyMatrix::constant(f.c.clone(), 0), &f.d, &f.bs).unwrap());
}

#[test]
fn json_roundtrip() {
    let s = ramified_example();
    assert_eq!(json::from_str::<LinearSystem>(&json::to_string_pretty(&s)).unwrap(), s);
    let red = reduce_linear_full(&s, ReduceOptions::new(12)).unwrap();
    for t in &red.chain {
        assert_eq!(&json::from_str::<GaugeTransform>(&json::to_string_pretty(t)).unwrap(), t);
    }
    let Reduced::Trs(f) = red.result else { panic!("expected a TRS form") };
    let back: TRSLinearForm = json::from_str(&json::to_string_pretty(&f)).unwrap();
    assert_eq!((back.q, &back.exps, &back.c, &back.v), (f.q, &f.exps, &f.c, &f.v));
    assert!(matches!(json::from_str::<LinearSystem>("{\"n\": 1}"), Err(Error::Parse(_))));
}

fn small_mat(n: usize) -> impl Strategy<Value = RMat> {
    prop::collection::vec(-3i64..=3, n * n).prop_map(move |v| Mat::from_fn(n, n, |i, j| r(v[i * n + j])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn vestigial_removal_is_exact(seed in any::<u64>(), n_order in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_trs_form(&mut rng, n_order);
        let (t, g) = kill_vestigial(&f, n_order).unwrap();
        prop_assert_eq!(&g.c, &f.c);
        prop_assert_eq!(g.d.truncate(f.q), f.d.truncate(f.q));
        prop_assert!(g.v.order().at_least(n_order));
        prop_assert_eq!(check_vestigial_killed(&f, &t, n_order), Ok(()));
    }

    #[test]
    fn nilpotent_gauge_inverts(a in small_mat(2), b in small_mat(2), c in -3i64..=3) {
        prop_assume!(!a.is_zero());
        let s = LinearSystem::new(1, pm(vec![a, b], 6)).unwrap();
        let nil = m(&[&[0, c], &[0, 0]]);
        let fwd = GaugeTransform::PolyRegular { p: pm(vec![RMat::identity(2), nil.clone()], 1) };
        let back = GaugeTransform::PolyRegular { p: pm(vec![RMat::identity(2), nil.scale(&r(-1))], 1) };
        prop_assert_eq!(replay(&s, &[fwd, back]).unwrap(), s);
    }

    #[test]
    fn reduction_replays(a0 in small_mat(2), a1 in small_mat(2), p in 0i64..=2) {
        prop_assume!(!a0.is_zero());
        let s = LinearSystem::new(p, pm(vec![a0, a1], 10)).unwrap();
        if let Ok(red) = reduce_linear_full(&s, ReduceOptions::new(10)) {
            let mut acc = s.clone();
            for t in &red.chain {
                prop_assert!(is_admissible(&acc, t).unwrap());
                acc = apply_gauge(&acc, t).unwrap();
            }
            prop_assert_eq!(acc, red.system);
        }
    }

    #[test]
    fn good_spectrum_is_similarity_invariant(c in small_mat(3), t in small_mat(3)) {
        prop_assume!(!t.det().is_zero());
        let conj = &(&t.inverse().unwrap() * &c) * &t;
        let (a, b) = (has_good_spectrum(&c), has_good_spectrum(&conj));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn unstability_ignores_block_order(leads in prop::collection::vec(-3i64..=3, 1..=4), cplx in any::<bool>()) {
        prop_assume!(leads.iter().all(|&l| l != 0));
        let mut blocks: Vec<Block> = leads.iter().map(|_| Block::real(1)).collect();
        let mut exps: Vec<Exponent> = leads.iter().map(|&l| Exponent::real(vec![r(l)])).collect();
        if cplx {
            blocks.push(Block::complex(1));
            exps.push(Exponent { re: vec![r(leads[0])], im: vec![r(1)] });
        }
        let u = unstability_index(&BlockStructure::new(blocks.clone()), &exps).unwrap();
        blocks.reverse();
        exps.reverse();
        prop_assert_eq!(unstability_index(&BlockStructure::new(blocks), &exps).unwrap(), u);
    }
}

#[test]
fn direct_sum_forms_are_compatible() {
    let bs = BlockStructure::new(vec![Block::complex(1), Block::real(1)]);
    let c = direct_sum_mats(&[theta(r(1), r(2)), m(&[&[3]])]);
    let exps = [Exponent { re: vec![r(1)], im: vec![r(1)] }, Exponent::real(vec![r(-1)])];
    let d = exponential_matrix(&bs, &exps, 1, 3);
    assert!(compatible(&PolyMatrix::constant(c, 0), &d, &bs).unwrap());
}
