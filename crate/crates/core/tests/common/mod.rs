#![allow(dead_code)]

use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trs_core::linear_systems::*;
use trs_core::series_core::blocks::direct_sum_mats;
use trs_core::series_core::*;
use trs_core::{RMat, RMultiSeries, RSeries};

pub fn r(v: i64) -> Rational {
    rint(v)
}

pub fn m(rows: &[&[i64]]) -> RMat {
    Mat::from_rows(rows.iter().map(|row| row.iter().map(|&v| rint(v)).collect()).collect()).unwrap()
}

pub fn ms(n: usize, k: usize, terms: &[(&[u32], i64)]) -> RMultiSeries {
    MultiSeries::from_terms(n, k, terms.iter().map(|(a, c)| (a.to_vec(), rint(*c)))).unwrap()
}

pub fn series(c: &[i64], k: usize) -> RSeries {
    Series::new(c.iter().map(|&v| rint(v)).collect(), k)
}

fn random_mat(n: usize, mut f: impl FnMut() -> Rational) -> RMat {
    Mat::from_rows((0..n).map(|_| (0..n).map(|_| f()).collect()).collect()).unwrap()
}

fn small(rng: &mut ChaCha8Rng) -> Rational {
    rat(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

/// Random TRS form with `n <= 3`, `q <= 3`, vestigial part known through `n_order + 2`.
/// Block exponents have distinct leading terms; `C` is compatible and has good spectrum.
pub fn random_trs_form(rng: &mut ChaCha8Rng, n_order: usize) -> TRSLinearForm {
    loop {
        let n = rng.gen_range(1..=3usize);
        let q = rng.gen_range(0..=3usize);
        let mut blocks = Vec::new();
        if q == 0 {
            blocks.push(Block::real(n));
        } else {
            let mut left = n;
            while left > 0 {
                let b = if left >= 2 && rng.gen_bool(0.4) {
                    if rng.gen_bool(0.5) { Block::complex(1) } else { Block::real(2) }
                } else {
                    Block::real(1)
                };
                left -= b.dim();
                blocks.push(b);
            }
        }
        let bs = BlockStructure::new(blocks);
        let mut leads: Vec<i64> = vec![-3, -2, -1, 1, 2, 3];
        let mut exps = Vec::new();
        let mut cs = Vec::new();
        for b in &bs.blocks {
            let mut re: Vec<Rational> = (0..q).map(|_| small(rng)).collect();
            let mut im: Vec<Rational> = vec![r(0); q];
            if q > 0 {
                re[0] = r(leads.remove(rng.gen_range(0..leads.len())));
            }
            match b.kind {
                BlockKind::Complex => {
                    for c in im.iter_mut() {
                        *c = small(rng);
                    }
                    im[0] = r(rng.gen_range(1..=3));
                    cs.push(theta(small(rng), small(rng)));
                }
                BlockKind::Real => cs.push(random_mat(b.size, || small(rng))),
            }
            exps.push(Exponent { re, im });
        }
        let c = direct_sum_mats(&cs);
        if (q == 0 && c.is_zero()) || !has_good_spectrum(&c).unwrap_or(false) {
            continue;
        }
        let trunc = n_order + 2;
        let coeffs = (0..=trunc)
            .map(|_| random_mat(n, || if rng.gen_bool(0.5) { r(rng.gen_range(-3..=3)) } else { r(0) }))
            .collect();
        let v = PolyMatrix::from_coeffs(coeffs, trunc).unwrap();
        let d = exponential_matrix(&bs, &exps, q, trunc + q + 1);
        return TRSLinearForm { q, bs, exps, d, c, v, perm: (0..n).collect() };
    }
}

/// Re-substitutes the gauge into the form's system and checks, exactly, that
/// the `D` and `C` coefficients are untouched and the vestigial part starts at
/// `x^{q+1+N}`. Returns a description of the first failure.
pub fn check_vestigial_killed(f: &TRSLinearForm, t: &GaugeTransform, n_order: usize) -> Result<(), String> {
    let s = f.system();
    let out = apply_gauge(&s, t).map_err(|e| format!("apply_gauge: {e}"))?;
    if out.p != s.p {
        return Err(format!("rank changed from {} to {}", s.p, out.p));
    }
    for k in 0..=f.q {
        if out.a.coeff(k) != s.a.coeff(k) {
            return Err(format!("coefficient x^{k} changed"));
        }
    }
    for k in f.q + 1..f.q + 1 + n_order {
        if k > out.a.trunc() {
            return Err(format!("result known only through x^{}", out.a.trunc()));
        }
        if !out.a.coeff(k).is_zero() {
            return Err(format!("vestigial coefficient at x^{k} survives"));
        }
    }
    let g = recognize_trs(&out).ok_or("result is not in TRS shape")?;
    if !g.v.order().at_least(n_order) {
        return Err(format!("recognized V has order {}", g.v.order()));
    }
    Ok(())
}

pub fn euler_couple(k: usize) -> trs_core::vf_couples::InvariantCouple {
    use trs_core::vf_couples::*;
    let xi_x = ms(1, k, &[(&[2, 0], 1)]);
    let xi_y = ms(1, k, &[(&[0, 1], 1), (&[1, 0], -1)]);
    let mut g = vec![r(0)];
    let mut f = r(1);
    for n in 1..=k {
        g.push(f.clone());
        f *= r(n as i64);
    }
    InvariantCouple::new(VectorFieldJet::new(xi_x, vec![xi_y]).unwrap(), FormalCurve::new(vec![Series::new(g, k)]).unwrap())
        .unwrap()
}

fn random_terms(rng: &mut ChaCha8Rng, n: usize, k: usize, min_x: u32, count: usize) -> RMultiSeries {
    let mut f = MultiSeries::zero(n, k);
    for _ in 0..count {
        let mut a = vec![0u32; n + 1];
        a[0] = min_x;
        let deg = rng.gen_range(min_x as usize..=k.min(5));
        for _ in min_x as usize..deg {
            a[rng.gen_range(0..=n)] += 1;
        }
        f.add_term(a, r(rng.gen_range(-3..=3)));
    }
    f
}

/// Random field with `n <= 2` whose `y` components only have terms divisible
/// by `x`, `xi_x = x^2 (1 + ..)`, the zero curve, and a chain of 2 to 4
/// translations, regular gauges and partial blow-ups.
pub fn random_field_and_chain(
    rng: &mut ChaCha8Rng,
    k: usize,
) -> (trs_core::vf_couples::InvariantCouple, trs_core::vf_couples::TransformChain) {
    use trs_core::vf_couples::*;
    let n = rng.gen_range(1..=2usize);
    let mut xi_x = ms(n, k, &[(&[2, 0, 0][..n + 1], 1)]);
    xi_x = &xi_x + &random_terms(rng, n, k, 3, 2);
    let xi_y: Vec<RMultiSeries> = (0..n).map(|_| random_terms(rng, n, k, 1, 4)).collect();
    let couple = InvariantCouple::new(VectorFieldJet::new(xi_x, xi_y).unwrap(), FormalCurve::zero(n, k)).unwrap();
    let mut chain = TransformChain::new();
    for _ in 0..rng.gen_range(2..=4) {
        let t = match rng.gen_range(0..3) {
            0 => CoordTransform::PolyTranslation {
                beta: (0..n).map(|_| Series::new(vec![r(0), r(0), r(rng.gen_range(-2..=2)), r(rng.gen_range(-2..=2))], 3)).collect(),
            },
            1 => {
                let c0 = loop {
                    let c = random_mat(n, || r(rng.gen_range(-2..=2)));
                    if !c.det().is_zero() {
                        break c;
                    }
                };
                let c1 = random_mat(n, || r(rng.gen_range(-2..=2)));
                CoordTransform::PolyRegular { p: PolyMatrix::from_coeffs(vec![c0, c1], 1).unwrap() }
            }
            _ => {
                let set: Vec<usize> = if n == 1 { vec![0] } else { [vec![0], vec![1], vec![0, 1]][rng.gen_range(0..3)].clone() };
                CoordTransform::DiagMonomial { set }
            }
        };
        chain.push(t);
    }
    (couple, chain)
}
