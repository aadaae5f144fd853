//! The nine end-to-end checks, one line each. Runs without the libtest
//! harness so the lines always reach the output; exits nonzero on a failure.

mod common;

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trs_core::dynamics_numeric::*;
use trs_core::linear_systems::*;
use trs_core::series_core::*;
use trs_core::straightener::*;
use trs_core::vf_couples::*;
use trs_core::RMultiSeries;

type Outcome = (bool, String);

fn model_path(name: &str) -> String {
    format!("{}/../../models/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn euler_model() -> InvariantCouple {
    json::from_str(&std::fs::read_to_string(model_path("euler")).unwrap()).unwrap()
}

fn form_model(name: &str) -> TRSVFForm {
    json::from_str(&std::fs::read_to_string(model_path(name)).unwrap()).unwrap()
}

fn euler_shot(window: (f64, f64)) -> trs_core::Result<CoupleShot> {
    let opts = CoupleShootOptions {
        n_order: 6,
        m_order: 0,
        working_order: None,
        straighten: true,
        shoot: ShootOptions::new(6, 8, window),
    };
    shoot_couple(&euler_model(), &opts)
}

fn euler_contact() -> Outcome {
    let start = Instant::now();
    let shot = match euler_shot((1e-2, 0.3)) {
        Ok(s) => s,
        Err(e) => return (false, format!("shoot_couple failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let r = &shot.shot.report;
    let ok = r.certified && r.n_contact >= 6 && r.bounded && secs < 60.0;
    (ok, format!("N = {}, slope {:.3}, sup |res|/x^7 = {:.3e}, bounded {}, {:.2} s", r.n_contact, r.slope, r.sup_ratio, r.bounded, secs))
}

fn vestigial_truncation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    for case in 0..50 {
        let n_order = rng.gen_range(1..=8);
        let f = random_trs_form(&mut rng, n_order);
        let res = kill_vestigial(&f, n_order)
            .map_err(|e| e.to_string())
            .and_then(|(t, _)| check_vestigial_killed(&f, &t, n_order));
        if let Err(e) = res {
            failures.push(format!("case {case} (n = {}, q = {}, N = {n_order}): {e}", f.d.n(), f.q));
        }
    }
    (failures.is_empty(), format!("50 forms, {} failures {}", failures.len(), failures.join("; ")))
}

fn jet_terms(f: &RMultiSeries, s: usize) -> Vec<(Vec<u32>, Rational)> {
    f.terms().iter().filter(|(a, _)| a.iter().sum::<u32>() as usize <= s).map(|(a, c)| (a.clone(), c.clone())).collect()
}

fn determinacy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut done, mut tried, mut failures) = (0, 0, Vec::new());
    while done < 20 && tried < 400 {
        tried += 1;
        let (c, chain) = random_field_and_chain(&mut rng, 14);
        let Ok(base) = replay_chain(&c, &chain) else { continue };
        let s = rng.gen_range(1..=3);
        let h = determinacy_shift(&chain, s);
        let n = c.n();
        let mut pert = c.clone();
        for _ in 0..3 {
            let mut a = vec![0u32; n + 1];
            for _ in 0..rng.gen_range(h + 1..=h + 2) {
                a[rng.gen_range(0..=n)] += 1;
            }
            let comp = rng.gen_range(0..=n);
            let target = if comp == 0 { &mut pert.vf.xi_x } else { &mut pert.vf.xi_y[comp - 1] };
            target.add_term(a, rint(rng.gen_range(1..=5)));
        }
        let same = match replay_chain(&pert, &chain) {
            Ok(moved) => {
                moved.vf.trunc() >= s
                    && jet_terms(&moved.vf.xi_x, s) == jet_terms(&base.vf.xi_x, s)
                    && moved.vf.xi_y.iter().zip(&base.vf.xi_y).all(|(p, q)| jet_terms(p, s) == jet_terms(q, s))
            }
            Err(_) => false,
        };
        if !same {
            failures.push(format!("case {done} (s = {s}, h = {h}, {} steps)", chain.len()));
        }
        done += 1;
    }
    (done == 20 && failures.is_empty(), format!("{done} chains, {} failures {}", failures.len(), failures.join("; ")))
}

fn random_rotation(rng: &mut ChaCha8Rng) -> RotationalMatrix {
    loop {
        let n = rng.gen_range(2..=5usize);
        let degree = rng.gen_range(0..=2usize);
        let mut pairs = Vec::new();
        let mut p = 0;
        while p + 1 < n {
            if rng.gen_bool(0.7) {
                let b: Vec<Rational> = (0..=degree).map(|_| rat(rng.gen_range(-4..=4), rng.gen_range(1..=3))).collect();
                pairs.push((p, b));
                p += 2;
            } else {
                p += 1;
            }
        }
        if pairs.is_empty() {
            continue;
        }
        if let Ok(r) = RotationalMatrix::new(n, degree, pairs) {
            return r;
        }
    }
}

fn straightener_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs: Vec<f64> = (0..50).map(|i| 1e-3 * 1000f64.powf(i as f64 / 49.0)).collect();
    let (mut orth, mut group, mut ode) = (0.0f64, 0.0f64, 0.0f64);
    let mut signs = Vec::new();
    for _ in 0..10 {
        let r = random_rotation(&mut rng);
        match verify_omega_properties(&r, &r.neg(), None, &xs) {
            Ok(rep) => {
                orth = orth.max(rep.orthogonality);
                group = group.max(rep.group_law);
                ode = ode.max(rep.ode_integral);
                signs.push(rep.supported);
            }
            Err(e) => return (false, format!("verify_omega_properties: {e}")),
        }
    }
    let ok = orth <= 1e-10 && group <= 1e-10 && ode <= 1e-6 && signs.iter().all(|s| *s == OmegaSign::Integral);
    (ok, format!("orthogonality {orth:.2e}, group law {group:.2e}, ODE residual {ode:.2e}, sign x^(d+2) Omega' = -R Omega"))
}

fn unlacing() -> Outcome {
    // x^3 y' = R(x) y, R = Theta(1 + x/2) on the first pair, third axis fixed
    let rot = RotationalMatrix::new(3, 1, vec![(0, vec![rint(1), rat(1, 2)])]).unwrap();
    let rm = rot.matrix().map(trs_core::series_core::scalar::rat_to_f64);
    let f = ClosureField {
        n: 3,
        f: move |x: f64, y: &[f64], o: &mut [f64]| {
            let r = rm.eval(&x);
            for i in 0..3 {
                o[i] = (0..3).map(|j| r[(i, j)] * y[j]).sum::<f64>() / x.powi(3);
            }
        },
        signs: None,
    };
    let opts = IntegratorOptions { rtol: 1e-13, atol: 1e-15, ..Default::default() };
    let t = match integrate(&f, 1.0, &[1.0, 0.5, -0.3], 0.05, &opts) {
        Ok(t) => t,
        Err(e) => return (false, format!("integrate: {e}")),
    };
    let se = StraightenerEval::new(rot);
    let zs: Vec<Vec<f64>> = t.xs.iter().zip(&t.ys).map(|(x, y)| se.apply(*x, y, false)).collect();
    let var = zs.iter().flat_map(|z| z.iter().zip(&zs[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
    let mut winding = 0.0;
    for w in t.ys.windows(2) {
        let mut d = w[1][1].atan2(w[1][0]) - w[0][1].atan2(w[0][0]);
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        winding += d;
    }
    let turns = winding.abs() / (2.0 * PI);
    (var < 1e-6 && turns >= 10.0, format!("sup variation of z {var:.2e} over [0.05, 1], y winds {turns:.1} turns"))
}

fn flat_contact() -> Outcome {
    let c = euler_model();
    let f = PolyField::from_jet(&c.vf);
    let jet = CurveJet::new(&c.curve);
    let x0 = 0.05;
    let y0 = jet.eval(jet.optimal_order(30, x0), x0);
    let opts = IntegratorOptions { outputs: (0..40).map(|i| 1e-2 * 5f64.powf(i as f64 / 39.0)).collect(), ..Default::default() };
    let res = integrate_pair(&f, x0, &y0, &[1e-6], 1e-2, &opts).and_then(|p| flat_contact_from_diff(&p.diff, 10, (1e-2, 5e-2)));
    match res {
        Ok(r) => (r.certified_order >= 10, format!("certified order {} (slope {:.1}) on [1e-2, 5e-2]", r.certified_order, r.slope)),
        Err(e) => (false, format!("{e}")),
    }
}

fn basin_dimension() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["basin_u0", "basin_u1", "basin_u2"] {
        let form = form_model(name);
        let u = unstability_index(&form.bs, &form.exps).unwrap();
        let horn = Horn { k: 1, c: 1.0, eps: 0.05 };
        let opts = BasinOptions { bisection_tol: 1e-6, ..Default::default() };
        let rep = TrsField::from_form(&form).and_then(|f| basin_probe(&f, &FormalCurve::zero(form.n(), 2), &horn, &opts));
        match rep {
            Ok(r) => {
                let width = r.boundaries.iter().map(|b| b.width).fold(0.0, f64::max);
                ok &= r.dimension == 1 + u && r.ambiguous_fraction < 0.01 && width <= 1e-6 && r.bisection_failures == 0;
                lines.push(format!("{name}: dim {} vs 1+u = {}, ambiguous {:.3}, width {width:.1e}", r.dimension, 1 + u, r.ambiguous_fraction));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{name}: {e}"));
            }
        }
    }
    (ok, lines.join("; "))
}

fn ramified_reduction() -> Outcome {
    let a = PolyMatrix::from_coeffs(vec![m(&[&[0, 0], &[1, 0]]), m(&[&[0, 1], &[0, 0]])], 12).unwrap();
    let s = LinearSystem::new(2, a).unwrap();
    let red = match reduce_linear_full(&s, ReduceOptions::new(12)) {
        Ok(r) => r,
        Err(e) => return (false, format!("reduce_linear_full: {e}")),
    };
    let replays = replay(&s, &red.chain).map(|out| out == red.system).unwrap_or(false);
    let Reduced::Trs(f) = &red.result else { return (false, "result is not a TRS form".into()) };
    let recognized = recognize_trs(&red.system).as_ref() == Some(f);
    let two_real = f.bs.blocks.len() == 2 && f.bs.blocks.iter().all(|b| b.kind == BlockKind::Real && b.size == 1);
    let signs: Vec<_> = f.exps.iter().filter_map(Exponent::re_sign).collect();
    let opposite = signs.contains(&Ordering::Greater) && signs.contains(&Ordering::Less);
    let leads: Vec<String> = f.exps.iter().map(|e| e.re[0].to_string()).collect();
    let c: Vec<String> = (0..f.c.rows()).map(|i| f.c[(i, i)].to_string()).collect();
    let diagonal = (0..2).all(|i| (0..2).all(|j| i == j || f.c[(i, j)].is_zero()));
    let ok = replays && recognized && two_real && opposite;
    (ok, format!("{} steps, replay {replays}, q = {}, leading exponents {}, C = {}diag({})",
        red.chain.len(), f.q, leads.join(", "), if diagonal { "" } else { "non-diagonal, " }, c.join(", ")))
}

fn iterated_tangents_match() -> Outcome {
    let shot = match euler_shot((1e-3, 0.3)) {
        Ok(s) => s,
        Err(e) => return (false, format!("shoot_couple failed: {e}")),
    };
    let formal = formal_iterated_tangents(&euler_model().curve, 4).unwrap();
    match iterated_tangents(&shot.shot.trajectory, &TangentOptions::new(4, (1e-3, 3e-2))) {
        Ok(rep) => {
            let errs: Vec<f64> = rep
                .directions
                .iter()
                .zip(&formal)
                .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
                .collect();
            let worst = errs.iter().copied().fold(0.0, f64::max);
            let list: Vec<String> = errs.iter().map(|e| format!("{e:.1e}")).collect();
            (errs.len() == 5 && worst <= 1e-4, format!("depth 4, errors per level [{}]", list.join(", ")))
        }
        Err(e) => (false, format!("iterated_tangents: {e}")),
    }
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("euler_contact", euler_contact),
        ("vestigial_truncation", vestigial_truncation),
        ("determinacy", determinacy),
        ("straightener_properties", straightener_properties),
        ("unlacing", unlacing),
        ("flat_contact", flat_contact),
        ("basin_dimension", basin_dimension),
        ("ramified_reduction", ramified_reduction),
        ("iterated_tangents", iterated_tangents_match),
    ];
    let mut failed = 0;
    for (i, (name, run)) in checks.iter().enumerate() {
        let (ok, detail) = run();
        println!("{} {}. {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("{failed} of 9 acceptance checks failed");
        std::process::exit(1);
    }
}
