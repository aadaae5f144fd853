mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trs_core::linear_systems::{Exponent, LinearSystem};
use trs_core::series_core::*;
use trs_core::vf_couples::*;
use trs_core::{Error, RMultiSeries};

fn couple(xi_x: RMultiSeries, xi_y: Vec<RMultiSeries>, gamma: Vec<Vec<i64>>, k: usize) -> InvariantCouple {
    let curve = FormalCurve::new(gamma.iter().map(|g| series(g, k)).collect()).unwrap();
    InvariantCouple::new(VectorFieldJet::new(xi_x, xi_y).unwrap(), curve).unwrap()
}

fn radial(k: usize, gamma: Vec<i64>) -> InvariantCouple {
    couple(ms(1, k, &[(&[1, 0], 1)]), vec![ms(1, k, &[(&[0, 1], 1)])], vec![gamma], k)
}

#[test]
fn euler_curve_is_invariant() {
    let inv = check_invariance(&euler_couple(8)).unwrap();
    assert!(inv.holds);
    assert_eq!(inv.m, Some(2));
    assert_eq!(inv.failure, None);
}

#[test]
fn radial_lines() {
    assert!(check_invariance(&radial(6, vec![0, 1])).unwrap().holds);
    let bad = check_invariance(&radial(6, vec![0, 1, 1])).unwrap();
    assert!(!bad.holds);
    assert_eq!(bad.failure, Some(2));
}

#[test]
fn curve_in_singular_locus() {
    let c = couple(ms(1, 4, &[(&[1, 1], 1)]), vec![ms(1, 4, &[(&[0, 2], 1)])], vec![vec![0]], 4);
    assert!(matches!(check_invariance(&c), Err(Error::DegenerateCurve)));
}

#[test]
fn zero_translation_is_identity() {
    let c = euler_couple(8);
    let t = CoordTransform::PolyTranslation { beta: vec![RSeries::zero(3)] };
    assert_eq!(apply_coord_transform(&c, &t).unwrap(), c);
}

type RSeries = Series<Rational>;

#[test]
fn euler_translation_by_x() {
    let c = euler_couple(8);
    let t = CoordTransform::PolyTranslation { beta: vec![series(&[0, 1], 1)] };
    let out = apply_coord_transform(&c, &t).unwrap();
    assert_eq!(out.vf.xi_x, c.vf.xi_x);
    assert_eq!(out.vf.xi_y[0], ms(1, 8, &[(&[0, 1], 1), (&[2, 0], -1)]));
    assert_eq!(out.curve.gamma_y[0], &c.curve.gamma_y[0] - &series(&[0, 1], 8));
    assert!(check_invariance(&out).unwrap().holds);
}

#[test]
fn blow_up_divides_by_x() {
    let c = couple(ms(1, 6, &[(&[2, 0], 1)]), vec![ms(1, 6, &[(&[0, 1], 2)])], vec![vec![0]], 6);
    let out = apply_coord_transform(&c, &CoordTransform::blow_up(1)).unwrap();
    assert_eq!(out.vf.xi_y[0], ms(1, 5, &[(&[0, 1], 2), (&[1, 1], -1)]));
}

#[test]
fn blow_up_needs_contact_two() {
    let c = radial(6, vec![0, 1]);
    assert!(matches!(apply_coord_transform(&c, &CoordTransform::blow_up(1)), Err(Error::Inadmissible(_))));
}

#[test]
fn euler_normalization() {
    let nrm = normalize_x_component(&euler_couple(12)).unwrap();
    let names: Vec<_> = nrm.chain.steps.iter().map(CoordTransform::name).collect();
    assert_eq!(names, ["translation", "diag_monomial", "diag_monomial"]);
    assert_eq!((nrm.e, nrm.p), (0, 1));
    assert_eq!(nrm.eta.xi_x, ms(1, nrm.eta.xi_x.trunc(), &[(&[2, 0], 1)]));
}

#[test]
fn radial_field_normalization() {
    // x d/dx + y d/dy along y = 0: one blow-up gives x d/dx, so e = 1 and eta is regular
    let nrm = normalize_x_component(&radial(6, vec![0])).unwrap();
    assert_eq!((nrm.e, nrm.p), (1, -1));
}

#[test]
fn cubic_factor_extraction() {
    // xi_x = x^3, xi_y = x^3 y along y = 0
    let c = couple(ms(1, 10, &[(&[3, 0], 1)]), vec![ms(1, 10, &[(&[3, 1], 1)])], vec![vec![0]], 10);
    let nrm = normalize_x_component(&c).unwrap();
    assert_eq!(nrm.e + (nrm.p + 1) as usize, 3);
    assert_eq!((nrm.e, nrm.p), (2, 0));
}

#[test]
fn associated_system_of_linear_and_quadratic_fields() {
    let xx = |k| ms(2, k, &[(&[2, 0, 0], 1)]);
    let a0 = vec![ms(2, 6, &[(&[0, 1, 0], 1), (&[0, 0, 1], 2)]), ms(2, 6, &[(&[0, 0, 1], -1)])];
    let eta = VectorFieldJet::new(xx(6), a0).unwrap();
    let s = associated_linear_system(&eta, &FormalCurve::zero(2, 6)).unwrap();
    assert_eq!(s.p, 1);
    assert_eq!(s.a.coeff(0), &m(&[&[1, 2], &[0, -1]]));
    assert!(s.a.coeffs()[1..].iter().all(Mat::is_zero));
    let eta = VectorFieldJet::new(ms(1, 6, &[(&[2, 0], 1)]), vec![ms(1, 6, &[(&[0, 2], 1)])]).unwrap();
    let s = associated_linear_system(&eta, &FormalCurve::new(vec![series(&[0, 1], 6)]).unwrap()).unwrap();
    assert_eq!(s.a.entry(0, 0), series(&[0, 2], 5));
}

#[test]
fn euler_associated_system() {
    let nrm = normalize_x_component(&euler_couple(12)).unwrap();
    let s: LinearSystem = associated_linear_system(&nrm.eta, &nrm.couple.curve).unwrap();
    assert_eq!(s.p, 1);
    assert_eq!(s.a.entry(0, 0).truncate(1), series(&[1, -2], 1));
}

#[test]
fn determinacy_shifts() {
    assert_eq!(determinacy_shift(&TransformChain::new(), 5), 5);
    let three = TransformChain { steps: vec![CoordTransform::blow_up(1); 3] };
    assert_eq!(determinacy_shift(&three, 2), 5);
    let mixed = TransformChain {
        steps: vec![
            CoordTransform::PolyTranslation { beta: vec![series(&[0, 0, 1], 2)] },
            CoordTransform::blow_up(1),
            CoordTransform::Ramification { r: 2 },
        ],
    };
    assert_eq!(determinacy_shift(&mixed, 4), 5);
}

#[test]
fn euler_reduces_to_trs() {
    let c = euler_couple(40);
    let red = reduce_vf_trs(&c, VfOptions::new(40)).unwrap();
    let f = &red.form;
    assert_eq!((f.q, f.n()), (1, 1));
    assert_eq!(f.exps, vec![Exponent::real(vec![rint(1)])]);
    assert_eq!(f.c, m(&[&[-2]]));
    assert!(red.chain.len() >= 3);
    assert!(matches!(red.chain.steps[0], CoordTransform::PolyTranslation { .. }));
    assert_eq!(replay_chain(&c.truncate(40), &red.chain).unwrap(), red.couple);
    let again = recognize_trs_vf(&red.couple.vf, 1, 0, 0).unwrap();
    assert_eq!((again.q, &again.c), (1, &f.c));
}

#[test]
fn hyperbolic_saddle_is_already_trs() {
    let c = couple(ms(1, 6, &[(&[1, 0], 1)]), vec![ms(1, 6, &[(&[0, 1], -1)])], vec![vec![0]], 6);
    let red = reduce_vf_trs(&c, VfOptions::new(6)).unwrap();
    assert!(red.chain.is_empty());
    assert_eq!((red.form.q, red.form.e), (0, 0));
    assert_eq!(red.form.c, m(&[&[-1]]));
}

#[test]
fn regular_normalized_field_gets_extra_blow_up() {
    // x (d/dx + y d/dy)
    let c = couple(ms(1, 8, &[(&[1, 0], 1)]), vec![ms(1, 8, &[(&[1, 1], 1)])], vec![vec![0]], 8);
    let red = reduce_vf_trs(&c, VfOptions::new(8)).unwrap();
    assert!(red.chain.steps.iter().any(|t| t.name() == "diag_monomial"));
    assert_eq!(red.form.q, 0);
    assert_eq!(red.form.c, m(&[&[-1]]));
}

#[test]
fn euler_refinement_lowers_residual() {
    let red = reduce_vf_trs(&euler_couple(40), VfOptions::new(40)).unwrap();
    for (nn, c, len) in [(0usize, -3i64, 2usize), (2, -5, 4), (4, -7, 6), (6, -9, 8)] {
        let r = refine_trs(&red.couple, nn, 0).unwrap();
        assert_eq!(r.form.c, m(&[&[c]]), "N = {nn}");
        assert_eq!(r.chain.len(), len, "N = {nn}");
        let blowups = r.chain.steps.iter().filter(|t| t.name() == "diag_monomial").count() as i64;
        assert_eq!(c, -2 - blowups);
        assert_eq!(r.form.n_order, nn);
        assert!(vestigial_order(&r.couple.vf, 1, nn).unwrap() >= nn);
        assert_eq!(replay_chain(&red.couple, &r.chain).unwrap(), r.couple);
    }
}

#[test]
fn refined_form_rebuilds_its_field() {
    let red = reduce_vf_trs(&euler_couple(40), VfOptions::new(40)).unwrap();
    let r = refine_trs(&red.couple, 2, 0).unwrap();
    let k = 10;
    let rebuilt = r.form.to_field(k).unwrap();
    assert_eq!(rebuilt.xi_x.jet(k), r.couple.vf.xi_x.truncate(k).jet(k));
    assert_eq!(rebuilt.xi_y[0].jet(k), r.couple.vf.xi_y[0].truncate(k).jet(k));
}

#[test]
fn refinement_requires_trs_input() {
    assert!(matches!(refine_trs(&euler_couple(12), 1, 0), Err(Error::Precondition(_))));
}

#[test]
fn chain_serialization_replays_exactly() {
    let c = euler_couple(40);
    let red = reduce_vf_trs(&c, VfOptions::new(40)).unwrap();
    let text = serde_json::to_string(&red.chain.steps.iter().map(Json::to_json).collect::<Vec<_>>()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let steps = v.as_array().unwrap().iter().map(CoordTransform::from_json).collect::<trs_core::Result<Vec<_>>>().unwrap();
    let back = TransformChain { steps };
    assert_eq!(back, red.chain);
    assert_eq!(replay_chain(&c.truncate(40), &back).unwrap(), red.couple);
    let couple_back: InvariantCouple = json::from_str(&json::to_string_pretty(&c)).unwrap();
    assert_eq!(couple_back, c);
    let form_back: TRSVFForm = json::from_str(&json::to_string_pretty(&red.form)).unwrap();
    assert_eq!((form_back.q, &form_back.c, &form_back.exps), (red.form.q, &red.form.c, &red.form.exps));
}

#[test]
fn pipeline_steps_keep_invariance() {
    let c = euler_couple(40);
    let red = reduce_vf_trs(&c, VfOptions::new(40)).unwrap();
    let r = refine_trs(&red.couple, 2, 0).unwrap();
    let mut cur = c.truncate(40);
    for t in red.chain.steps.iter().chain(&r.chain.steps) {
        cur = apply_coord_transform(&cur, t).unwrap();
        let inv = check_invariance(&cur).unwrap();
        assert!(inv.holds, "after {}", t.name());
        // once the curve has contact m with the field, the zero section sees it too
        if let Some(m) = inv.m {
            if cur.curve.gamma_y.iter().all(|g| g.is_zero()) {
                let on_axis = cur.vf.xi_y[0].substitute_curve(&[RSeries::zero(cur.vf.trunc())]).unwrap();
                assert!(on_axis.order().at_least(m));
            }
        }
    }
}

fn jet_terms(f: &RMultiSeries, s: usize) -> Vec<(Vec<u32>, Rational)> {
    f.terms().iter().filter(|(a, _)| a.iter().sum::<u32>() as usize <= s).map(|(a, c)| (a.clone(), c.clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chains_only_see_finite_jets(seed in any::<u64>(), s in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, chain) = random_field_and_chain(&mut rng, 12);
        let base = replay_chain(&c, &chain);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let h = determinacy_shift(&chain, s);
        let n = c.n();
        let mut a = vec![0u32; n + 1];
        a[0] = 1;
        a[n] += (h) as u32;
        let mut pert = c.clone();
        let comp = (seed % (n as u64 + 1)) as usize;
        let target = if comp == 0 { &mut pert.vf.xi_x } else { &mut pert.vf.xi_y[comp - 1] };
        target.add_term(a, rint(1 + (seed % 5) as i64));
        let moved = replay_chain(&pert, &chain).unwrap();
        prop_assert!(moved.vf.trunc() >= s);
        prop_assert_eq!(jet_terms(&moved.vf.xi_x, s), jet_terms(&base.vf.xi_x, s));
        for (p, q) in moved.vf.xi_y.iter().zip(&base.vf.xi_y) {
            prop_assert_eq!(jet_terms(p, s), jet_terms(q, s));
        }
    }
}
