mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use trs_core::linear_systems::{unstability_index, Exponent};
use trs_core::series_core::*;
use trs_core::straightener::*;
use trs_core::vf_couples::TRSVFForm;
use trs_core::{Error, FMat};

fn model(name: &str) -> TRSVFForm {
    let path = format!("{}/../../models/{name}.json", env!("CARGO_MANIFEST_DIR"));
    json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn unit_rotation() -> RotationalMatrix {
    RotationalMatrix::new(2, 0, vec![(0, vec![rint(1)])]).unwrap()
}

fn max_dev(a: &FMat, b: &FMat) -> f64 {
    (0..a.rows()).flat_map(|i| (0..a.cols()).map(move |j| (a[(i, j)] - b[(i, j)]).abs())).fold(0.0, f64::max)
}

#[test]
fn real_exponents_have_no_rotation() {
    let bs = BlockStructure::new(vec![Block::real(1), Block::real(1)]);
    let exps = [Exponent::real(vec![r(1), r(0)]), Exponent::real(vec![r(-1), r(2)])];
    assert_eq!(extract_rotational(&bs, &exps, 2), None);
}

#[test]
fn rotation_below_real_order() {
    // c = i + x^2, q = 3
    let bs = BlockStructure::new(vec![Block::complex(1)]);
    let exps = [Exponent { re: vec![r(0), r(0), r(1)], im: vec![r(1), r(0), r(0)] }];
    let rot = extract_rotational(&bs, &exps, 3).unwrap();
    assert_eq!(rot.degree, 2);
    assert_eq!(rot.pairs, vec![(0, vec![r(1), r(0), r(0)])]);
}

#[test]
fn only_dominant_blocks_rotate() {
    // c1 = 2ix + x^2, c2 = 1 + ix
    let bs = BlockStructure::new(vec![Block::complex(1), Block::complex(1)]);
    let exps = [
        Exponent { re: vec![r(0), r(0), r(1)], im: vec![r(0), r(2), r(0)] },
        Exponent { re: vec![r(1), r(0), r(0)], im: vec![r(0), r(1), r(0)] },
    ];
    let rot = extract_rotational(&bs, &exps, 3).unwrap();
    assert_eq!(rot.pairs, vec![(0, vec![r(0), r(2), r(0)])]);
    assert_eq!(rot.axis_dim(), 2);
}

#[test]
fn rotational_matrix_rejects_zero_and_overlap() {
    assert!(matches!(RotationalMatrix::new(2, 0, vec![(0, vec![r(0)])]), Err(Error::ShapeError(_))));
    assert!(matches!(
        RotationalMatrix::new(3, 0, vec![(0, vec![r(1)]), (1, vec![r(1)])]),
        Err(Error::ShapeError(_))
    ));
    assert!(matches!(omega_eval(&unit_rotation(), 0.0), Err(Error::DomainError(_))));
}

#[test]
fn full_turn_gives_identity() {
    let om = omega_eval(&unit_rotation(), 1.0 / (2.0 * PI)).unwrap();
    assert!(max_dev(&om, &Mat::identity(2)) < 1e-12);
}

#[test]
fn axis_is_fixed() {
    let rot = RotationalMatrix::new(3, 1, vec![(0, vec![r(1), rat(1, 2)])]).unwrap();
    for x in [1e-3, 0.05, 0.7] {
        let om = omega_eval(&rot, x).unwrap();
        assert_eq!((om[(2, 0)], om[(2, 1)], om[(2, 2)], om[(0, 2)]), (0.0, 0.0, 1.0, 0.0));
    }
}

#[test]
fn derivative_matches_closed_form() {
    // angle 1/x, so Omega' = -(1/x^2) J Omega
    let rot = unit_rotation();
    let x = 0.1;
    let h = 1e-7;
    let fd = (&omega_eval(&rot, x + h).unwrap() - &omega_eval(&rot, x - h).unwrap()).scale(&(1.0 / (2.0 * h)));
    let j: FMat = theta(0.0, 1.0);
    let exact = (&j * &omega_eval(&rot, x).unwrap()).scale(&(-1.0 / (x * x)));
    assert!(max_dev(&fd, &exact) < 1e-2);
}

#[test]
fn omega_properties_on_samples() {
    let rot = RotationalMatrix::new(4, 1, vec![(0, vec![r(1), r(2)]), (2, vec![r(-3), r(0)])]).unwrap();
    let partner = RotationalMatrix::new(4, 1, vec![(0, vec![r(2), r(-1)]), (2, vec![r(1), r(1)])]).unwrap();
    let xs: Vec<f64> = (0..40).map(|i| 1e-3 * 1000f64.powf(i as f64 / 39.0)).collect();
    let c = direct_sum_mats_r(&[theta(r(-1), r(0)), theta(r(2), r(5))]);
    let rep = verify_omega_properties(&rot, &partner, Some(&c), &xs).unwrap();
    assert!(rep.orthogonality <= 1e-12, "{rep:?}");
    assert!(rep.group_law <= 1e-10, "{rep:?}");
    assert!(rep.ode_integral <= 1e-6, "{rep:?}");
    assert!(rep.ode_direct > 0.1, "{rep:?}");
    assert_eq!(rep.supported, OmegaSign::Integral);
    assert!(rep.commutator.unwrap() <= 1e-12);
}

fn direct_sum_mats_r(blocks: &[trs_core::RMat]) -> trs_core::RMat {
    trs_core::series_core::blocks::direct_sum_mats(blocks)
}

#[test]
fn inverse_rotation_undoes() {
    let rot = RotationalMatrix::new(3, 2, vec![(1, vec![r(1), r(-2), rat(1, 3)])]).unwrap();
    let se = StraightenerEval::new(rot.clone());
    let back = StraightenerEval::new(rot.neg());
    for x in [1e-3, 1e-2, 0.3] {
        let y = [0.3, -1.2, 2.5];
        let z = se.apply(x, &y, false);
        let w = se.apply(x, &z, true);
        let v = back.apply(x, &z, false);
        for i in 0..3 {
            assert!((w[i] - y[i]).abs() < 1e-12 && (v[i] - y[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn decaying_entries_stay_bounded() {
    let rot = RotationalMatrix::new(2, 1, vec![(0, vec![r(1), r(1)])]).unwrap();
    for k in 1..=6 {
        let x = 10f64.powi(-k);
        let om = omega_eval(&rot, x).unwrap();
        let big = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| om[(i, j)].abs()).fold(0.0, f64::max);
        assert!(big <= 1.0 + 1e-15);
    }
}

#[test]
fn rotation_model_straightens() {
    let form = model("rotation");
    let rot = extract_rotational(&form.bs, &form.exps, form.q).unwrap();
    assert_eq!(rot.pairs, vec![(0, vec![r(1), r(0)])]);
    let sf = straighten_field(&form, &rot).unwrap();
    assert_eq!(sf.s, 1);
    assert_eq!(sf.exps, vec![Exponent::real(vec![r(0), r(1)])]);
    assert_eq!(sf.reduced_exps, vec![Exponent::real(vec![r(1)])]);
    assert_eq!(sf.reduced_type(), (1, 0, 0));
    assert!(sf.reduced_has_no_dominant_rotation());
    assert_eq!(
        unstability_index(&form.bs, &form.exps).unwrap(),
        unstability_index(&sf.bs, &sf.reduced_exps).unwrap()
    );
}

#[test]
fn pure_rotation_leaves_hyperbolic_part() {
    // D = Theta(i), C = -I, q = 1: D - R vanishes entirely
    let mut form = model("rotation");
    form.q = 1;
    form.exps = vec![Exponent { re: vec![r(0)], im: vec![r(1)] }];
    form.d = trs_core::linear_systems::exponential_matrix(&form.bs, &form.exps, 1, 8);
    form.c = Mat::diag(&[r(-1), r(-1)]);
    form.n_order = 12;
    form.m_order = 12;
    let rot = extract_rotational(&form.bs, &form.exps, 1).unwrap();
    let sf = straighten_field(&form, &rot).unwrap();
    assert_eq!(sf.s, 1);
    assert_eq!(sf.reduced_type(), (0, 0, 0));
    assert!(sf.reduced_exps.iter().all(Exponent::is_empty));
}

#[test]
fn straightening_hypothesis_is_checked() {
    let mut form = model("rotation");
    let rot = extract_rotational(&form.bs, &form.exps, form.q).unwrap();
    form.m_order = 0;
    form.n_order = 0;
    assert!(matches!(straighten_field(&form, &rot), Err(Error::HypothesisViolated(_))));
}

proptest! {
    #[test]
    fn omega_is_an_isometry(
        x in 1e-3f64..1.0,
        v in prop::collection::vec(-10.0f64..10.0, 4),
        b in prop::collection::vec(-5i64..=5, 4),
    ) {
        prop_assume!(b[0] != 0 || b[1] != 0);
        prop_assume!(b[2] != 0 || b[3] != 0);
        let rot = RotationalMatrix::new(4, 1, vec![(0, vec![r(b[0]), r(b[1])]), (2, vec![r(b[2]), r(b[3])])]).unwrap();
        let se = StraightenerEval::new(rot);
        let w = se.apply(x, &v, false);
        let norm = |u: &[f64]| u.iter().map(|t| t * t).sum::<f64>().sqrt();
        prop_assert!((norm(&w) - norm(&v)).abs() <= 1e-12 * norm(&v).max(1.0));
    }

    #[test]
    fn contact_is_transported(x in 1e-3f64..1.0, a in -3.0f64..3.0, k in 1i32..6) {
        // gamma - delta = a x^k (1, 1): the distance is unchanged after rotation
        let se = StraightenerEval::new(unit_rotation());
        let g = [1.0 + a * x.powi(k), -0.5 + a * x.powi(k)];
        let d = [1.0, -0.5];
        let (gz, dz) = (se.apply(x, &g, false), se.apply(x, &d, false));
        let dist = |p: &[f64], q: &[f64]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        prop_assert!((dist(&gz, &dz) - dist(&g, &d)).abs() <= 1e-13);
    }

    #[test]
    fn group_law_against_negation(x in 1e-3f64..1.0, b0 in 1i64..5, b1 in -5i64..5) {
        let rot = RotationalMatrix::new(2, 1, vec![(0, vec![r(b0), r(b1)])]).unwrap();
        let prod = &omega_eval(&rot, x).unwrap() * &omega_eval(&rot.neg(), x).unwrap();
        prop_assert!(max_dev(&prod, &Mat::identity(2)) <= 1e-10);
    }
}
