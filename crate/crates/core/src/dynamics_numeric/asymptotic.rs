//! From an invariant couple to a certified asymptotic trajectory: reduce,
//! refine, optionally straighten, shoot in the final chart, report in the
//! original one.

use super::chart::ChartMap;
use super::field::{Field, TrsField};
use super::shoot::{shoot_asymptotic, ShootOptions, Shot};
use crate::error::Result;
use crate::straightener::{extract_rotational, straighten_field, StraightenerEval};
use crate::vf_couples::{
    check_invariance, default_working_order, reduce_vf_trs, refine_trs, InvariantCouple, TransformChain, VfOptions,
    VfReduction,
};

#[derive(Clone, Debug)]
pub struct CoupleShootOptions {
    /// Vestigial height `N` of the refinement.
    pub n_order: usize,
    /// Smoothness parameter `M` of the refinement.
    pub m_order: usize,
    /// Symbolic working order; defaults to `default_working_order` with `q`
    /// replaced by `ord_x(xi_x o gamma)`.
    pub working_order: Option<usize>,
    /// Straighten dominant rotation when present.
    pub straighten: bool,
    pub shoot: ShootOptions,
}

#[derive(Clone, Debug)]
pub struct CoupleShot {
    pub reduction: VfReduction,
    pub refined: VfReduction,
    /// Reduction chain followed by the refinement chain.
    pub chain: TransformChain,
    pub straightened: bool,
    pub shot: Shot,
}

pub fn shoot_couple(c: &InvariantCouple, opts: &CoupleShootOptions) -> Result<CoupleShot> {
    let wo = match opts.working_order {
        Some(k) => k,
        None => {
            let m = check_invariance(c)?.m.unwrap_or(0);
            default_working_order(c.n(), m, opts.n_order, opts.m_order)
        }
    };
    let reduction = reduce_vf_trs(c, VfOptions::new(wo))?;
    let refined = refine_trs(&reduction.couple, opts.n_order, opts.m_order)?;
    let mut chain = reduction.chain.clone();
    chain.extend(refined.chain.clone());
    let mut chart = ChartMap::from_chain(&chain);
    let form = &refined.form;
    let rot = if opts.straighten { extract_rotational(&form.bs, &form.exps, form.q) } else { None };
    let straightened = rot.is_some();
    let field: Box<dyn Field> = match rot {
        Some(r) => {
            let sf = straighten_field(form, &r)?;
            chart = chart.then_straighten(StraightenerEval::new(r));
            Box::new(sf)
        }
        None => Box::new(TrsField::from_form(form)?),
    };
    let shot = shoot_asymptotic(field.as_ref(), &chart, &c.curve, &opts.shoot)?;
    Ok(CoupleShot { reduction, refined, chain, straightened, shot })
}
