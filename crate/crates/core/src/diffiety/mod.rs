//! Diffieties given by generator data, their filtrations on finite order
//! windows, and membership tests.

mod span;
mod system;

pub use span::{column_order, dual_coefficients, rank, relations, FormSpan};
pub use system::{ambient_total, Dependent, Diffiety, OdeSystem, ResolvedEquation};

use crate::error::Result;
use crate::geometry::{contract, lie_derivative, OneForm, TwoForm};
use crate::symkernel::CaseContext;

/// A filtration `Ω_0 ⊂ Ω_1 ⊂ …` realized on a window: explicit leading levels
/// followed by the natural levels of the diffiety, shifted.
///
/// Level `l < prefix.len()` is `prefix[l]`; level `l ≥ prefix.len()` is the
/// natural level `l − prefix.len() + tail_start`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Filtration {
    prefix: Vec<Vec<OneForm>>,
    tail_start: usize,
}

impl Filtration {
    /// The natural filtration by jet order.
    pub fn natural() -> Self {
        Filtration::default()
    }

    /// Explicit leading levels followed by natural levels from `tail_start`.
    pub fn explicit(prefix: Vec<Vec<OneForm>>, tail_start: usize) -> Self {
        Filtration { prefix, tail_start }
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    pub fn tail_start(&self) -> usize {
        self.tail_start
    }

    /// Puts `levels` in front: they become levels `0..levels.len()`.
    pub fn prepend(&self, mut levels: Vec<Vec<OneForm>>) -> Self {
        levels.extend(self.prefix.iter().cloned());
        Filtration {
            prefix: levels,
            tail_start: self.tail_start,
        }
    }

    /// The `c`-lift: new level `l` is old level `l + c`.
    pub fn lift(&self, c: usize) -> Self {
        if c <= self.prefix.len() {
            Filtration {
                prefix: self.prefix[c..].to_vec(),
                tail_start: self.tail_start,
            }
        } else {
            Filtration {
                prefix: Vec::new(),
                tail_start: self.tail_start + c - self.prefix.len(),
            }
        }
    }

    /// Generators of level `l`.
    pub fn level(&self, om: &Diffiety, l: usize) -> Result<Vec<OneForm>> {
        if l < self.prefix.len() {
            Ok(self.prefix[l].clone())
        } else {
            om.natural_level(l - self.prefix.len() + self.tail_start)
        }
    }

    /// Echelonized span of level `l`.
    pub fn level_span(&self, om: &Diffiety, l: usize, ctx: &mut CaseContext) -> Result<FormSpan> {
        if l >= self.prefix.len() {
            let rows = om.natural_rows(l - self.prefix.len() + self.tail_start)?;
            return Ok(FormSpan::from_reduced_rows(rows));
        }
        Ok(FormSpan::from_forms(&self.prefix[l], ctx)?)
    }

    /// Dimensions of levels `0..=top`.
    pub fn dims(&self, om: &Diffiety, top: usize, ctx: &mut CaseContext) -> Result<Vec<usize>> {
        (0..=top).map(|l| Ok(self.level_span(om, l, ctx)?.dim())).collect()
    }
}

/// The natural window span `Ω_L`.
pub fn window_span(om: &Diffiety, l: usize) -> Result<FormSpan> {
    Ok(FormSpan::from_reduced_rows(om.natural_rows(l)?))
}

/// The `c`-lift of a filtration.
pub fn lift(f: &Filtration, c: usize) -> Filtration {
    f.lift(c)
}

/// Verdict of a membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    Nonmember,
    UnknownAtWindow,
}

/// Tests `φ ∈ Ω`.
///
/// With one independent variable this is exact: `φ ∈ Ω` iff `φ(D) = 0`. With
/// several, `φ` is reduced against the window span; a verdict that changes
/// when the window grows by one is reported as unknown.
pub fn member_test(phi: &OneForm, om: &Diffiety, l: usize) -> Result<Membership> {
    if om.n() == 1 {
        let v = contract(om.d(), phi)?;
        return Ok(if v.is_zero() {
            Membership::Member
        } else {
            Membership::Nonmember
        });
    }
    member_by_reduction(phi, om, l)
}

/// Window-reduction membership, valid for any number of independent variables.
pub fn member_by_reduction(phi: &OneForm, om: &Diffiety, l: usize) -> Result<Membership> {
    let here = window_span(om, l)?.reduce(phi).is_zero();
    if here {
        return Ok(Membership::Member);
    }
    let next = window_span(om, l + 1)?.reduce(phi).is_zero();
    Ok(if next {
        Membership::UnknownAtWindow
    } else {
        Membership::Nonmember
    })
}

/// Tests `β ∈ Ω∧Ω` via `D_i⌟β = 0` for every total derivative.
pub fn in_omega_wedge_omega(beta: &TwoForm, om: &Diffiety) -> Result<bool> {
    for d in om.totals() {
        if !crate::geometry::contract2(d, beta)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of checking the good-filtration conditions on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct GoodFiltrationReport {
    pub window: usize,
    pub dims: Vec<usize>,
    /// Levels `l` where `Ω_l ⊆ Ω_{l+1}` fails.
    pub monotonicity_failures: Vec<usize>,
    /// Pairs `(l, generator index)` where `L_{D_i} γ ∉ Ω_{l+1}`.
    pub inclusion_failures: Vec<(usize, usize)>,
    /// First level from which `Ω_l + L_H Ω_l = Ω_{l+1}` holds through the window.
    pub equality_from: Option<usize>,
}

impl GoodFiltrationReport {
    pub fn inclusion_holds(&self) -> bool {
        self.monotonicity_failures.is_empty() && self.inclusion_failures.is_empty()
    }
}

/// Checks `L_H Ω_l ⊆ Ω_{l+1}` and eventual equality `Ω_l + L_H Ω_l = Ω_{l+1}`.
pub fn good_filtration_check(
    om: &Diffiety,
    filt: &Filtration,
    window: usize,
    ctx: &mut CaseContext,
) -> Result<GoodFiltrationReport> {
    let mut dims = Vec::new();
    let mut mono = Vec::new();
    let mut incl = Vec::new();
    let mut equal = Vec::new();
    for l in 0..window {
        let gens = filt.level(om, l)?;
        let here = FormSpan::from_forms(&gens, ctx)?;
        let next = filt.level_span(om, l + 1, ctx)?;
        dims.push(here.dim());
        if !next.contains_span(&here) {
            mono.push(l);
        }
        let mut grown = here.clone();
        for (k, g) in gens.iter().enumerate() {
            for d in om.totals() {
                let lg = lie_derivative(d, g)?;
                if !next.contains(&lg) {
                    incl.push((l, k));
                }
                grown.insert(&lg, ctx)?;
            }
        }
        equal.push(grown.same_span(&next));
    }
    dims.push(filt.level_span(om, window, ctx)?.dim());
    let mut equality_from = None;
    for l in (0..window).rev() {
        if equal[l] {
            equality_from = Some(l);
        } else {
            break;
        }
    }
    Ok(GoodFiltrationReport {
        window,
        dims,
        monotonicity_failures: mono,
        inclusion_failures: incl,
        equality_from,
    })
}
