use std::collections::BTreeMap;

use super::{composition_defects, Morphism};
use crate::diffiety::{dual_coefficients, Dependent, Diffiety};
use crate::error::{Error, Result};
use crate::geometry::OneForm;
use crate::symkernel::{CaseContext, Coordinate, Expr};

/// Total derivative on one half of the doubled chart; the other half is held
/// fixed.
fn half_total(e: &Expr, bar: bool) -> Expr {
    let mut acc = Expr::zero();
    for c in e.coordinates() {
        if c.is_barred() != bar {
            continue;
        }
        let k = if c.is_indep() {
            Expr::one()
        } else {
            match c.as_single_jet() {
                Some((j, s, _)) => Expr::coord(Coordinate::w(j, s + 1).with_bar(bar)),
                None => continue,
            }
        };
        acc = acc + k * e.diff(&c);
    }
    acc
}

fn rebar(e: &Expr, bar: bool) -> Expr {
    let map: BTreeMap<Coordinate, Expr> = e
        .coordinates()
        .into_iter()
        .filter(|c| c.is_barred() != bar && (c.is_indep() || c.as_single_jet().is_some()))
        .map(|c| {
            let t = Expr::coord(c.with_bar(bar));
            (c, t)
        })
        .collect();
    e.substitute(&map)
}

fn unknowns(m: usize, bar: bool) -> Vec<Coordinate> {
    let mut u = vec![Coordinate::x().with_bar(bar)];
    u.extend((1..=m).map(|j| Coordinate::w(j, 0).with_bar(bar)));
    u
}

/// Checks supplied seeds against the equations, or solves equations affine in
/// the unknowns.
fn seeds_for(
    eqs: &[Expr],
    unknowns: &[Coordinate],
    given: Option<&[Expr]>,
    ctx: &mut CaseContext,
) -> Result<Vec<Expr>> {
    if let Some(vals) = given {
        if vals.len() != unknowns.len() {
            return Err(Error::Rejected(format!("expected {} seed expressions", unknowns.len())));
        }
        let map: BTreeMap<Coordinate, Expr> = unknowns.iter().cloned().zip(vals.iter().cloned()).collect();
        for e in eqs {
            let r = e.substitute(&map);
            if !r.is_zero() {
                return Err(Error::Rejected(format!("equation {e} leaves residual {r}")));
            }
        }
        return Ok(vals.to_vec());
    }
    let zero: BTreeMap<Coordinate, Expr> = unknowns.iter().map(|u| (u.clone(), Expr::zero())).collect();
    let mut rows = Vec::new();
    let mut consts = Vec::new();
    for e in eqs {
        let coefs: Vec<Expr> = unknowns.iter().map(|u| e.diff(u)).collect();
        if coefs.iter().any(|k| unknowns.iter().any(|u| k.depends_on(u))) {
            return Err(Error::Rejected(format!("equation {e} is not affine in the unknowns")));
        }
        let k0 = e.substitute(&zero);
        let rebuilt = unknowns
            .iter()
            .zip(&coefs)
            .fold(k0.clone(), |acc, (u, k)| acc + k * &Expr::coord(u.clone()));
        if &rebuilt != e {
            return Err(Error::Rejected(format!("equation {e} is not affine in the unknowns")));
        }
        rows.push(OneForm::from_terms(unknowns.iter().cloned().zip(coefs)));
        consts.push(k0);
    }
    let dual = dual_coefficients(&rows, unknowns, ctx)?
        .ok_or_else(|| Error::Rejected("the wave system has no unique solution".into()))?;
    Ok(dual
        .iter()
        .map(|a| a.iter().zip(&consts).fold(Expr::zero(), |acc, (k, c)| acc - k * c))
        .collect())
}

/// A symmetry of the contact diffiety and its inverse from the wave method.
#[derive(Clone, Debug)]
pub struct WaveResult {
    pub forward: Morphism,
    pub backward: Morphism,
    /// `x̄ = F`, `w̄^j_0 = F^j_0`.
    pub forward_seeds: Vec<Expr>,
    /// `x = F̄`, `w^j_0 = F̄^j_0`, over the barred coordinates.
    pub backward_seeds: Vec<Expr>,
    /// The forward solution annihilates the backward equations.
    pub forward_implies_backward: bool,
    pub backward_implies_forward: bool,
    /// Coordinates up to `order` where `m ∘ m⁻¹` or `m⁻¹ ∘ m` is not the identity.
    pub defects: Vec<Coordinate>,
    pub order: usize,
}

impl WaveResult {
    pub fn certified(&self) -> bool {
        self.forward_implies_backward && self.backward_implies_forward && self.defects.is_empty()
    }
}

fn check_contact(om: &Diffiety) -> Result<usize> {
    let contact = om.n() == 1
        && om.first_integrals().is_empty()
        && om.dependents().iter().all(|d| matches!(d, Dependent::Free));
    if !contact {
        return Err(Error::Unsupported("the wave method applies to the contact diffiety".into()));
    }
    Ok(om.m())
}

fn build(
    om: &Diffiety,
    fwd_eqs: Vec<Expr>,
    bwd_eqs: Vec<Expr>,
    fwd: Option<&[Expr]>,
    bwd: Option<&[Expr]>,
    order: usize,
    ctx: &mut CaseContext,
) -> Result<WaveResult> {
    let m = om.m();
    let fs = seeds_for(&fwd_eqs, &unknowns(m, true), fwd, ctx)?;
    let bs = seeds_for(&bwd_eqs, &unknowns(m, false), bwd, ctx)?;
    let pair = |vals: &[Expr]| -> Vec<(Coordinate, Expr)> {
        (1..=m).map(|j| (Coordinate::w(j, 0), vals[j].clone())).collect()
    };
    let forward = Morphism::new(om, fs[0].clone(), pair(&fs), ctx)?;
    let bu: Vec<Expr> = bs.iter().map(|e| rebar(e, false)).collect();
    let backward = Morphism::new(om, bu[0].clone(), pair(&bu), ctx)?;

    let mut f_implies_b = true;
    for e in &bwd_eqs {
        let map: BTreeMap<Coordinate, Expr> = e
            .coordinates()
            .into_iter()
            .filter(|c| c.is_barred())
            .map(|c| {
                let img = forward.image(&c.with_bar(false));
                img.map(|i| (c, i))
            })
            .collect::<Result<_>>()?;
        if !e.substitute(&map).is_zero() {
            f_implies_b = false;
        }
    }
    let mut b_implies_f = true;
    for e in &fwd_eqs {
        let map: BTreeMap<Coordinate, Expr> = e
            .coordinates()
            .into_iter()
            .filter(|c| !c.is_barred())
            .map(|c| {
                let img = backward.image(&c);
                img.map(|i| (c, rebar(&i, true)))
            })
            .collect::<Result<_>>()?;
        if !e.substitute(&map).is_zero() {
            b_implies_f = false;
        }
    }
    let mut defects = composition_defects(&forward, &backward, order)?;
    for c in composition_defects(&backward, &forward, order)? {
        if !defects.contains(&c) {
            defects.push(c);
        }
    }
    Ok(WaveResult {
        forward,
        backward,
        forward_seeds: fs,
        backward_seeds: bs,
        forward_implies_backward: f_implies_b,
        backward_implies_forward: b_implies_f,
        defects,
        order,
    })
}

/// The wave method with `m` functions `W^j`: forward system
/// `W^1 = … = W^m = DW^1 = 0`, backward system with `D̄W^1`.
///
/// Seeds may be supplied; otherwise the systems must be affine in the unknowns.
pub fn wave_symmetry(
    w: &[Expr],
    om: &Diffiety,
    fwd: Option<&[Expr]>,
    bwd: Option<&[Expr]>,
    order: usize,
    ctx: &mut CaseContext,
) -> Result<WaveResult> {
    let m = check_contact(om)?;
    if w.len() != m {
        return Err(Error::Rejected(format!("expected {m} wave functions, got {}", w.len())));
    }
    let mut fe = w.to_vec();
    fe.push(half_total(&w[0], false));
    let mut be = w.to_vec();
    be.push(half_total(&w[0], true));
    build(om, fe, be, fwd, bwd, order, ctx)
}

/// The wave method with one function: `W = DW = … = D^m W = 0` and the
/// barred counterpart.
pub fn wave_symmetry_single(
    w: &Expr,
    om: &Diffiety,
    fwd: Option<&[Expr]>,
    bwd: Option<&[Expr]>,
    order: usize,
    ctx: &mut CaseContext,
) -> Result<WaveResult> {
    let m = check_contact(om)?;
    let tower = |bar: bool| {
        let mut eqs = vec![w.clone()];
        for _ in 0..m {
            let next = half_total(eqs.last().expect("nonempty"), bar);
            eqs.push(next);
        }
        eqs
    };
    build(om, tower(false), tower(true), fwd, bwd, order, ctx)
}
