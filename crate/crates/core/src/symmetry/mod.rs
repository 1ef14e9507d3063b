//! Morphisms and their prolongation, symmetry verification, variations and
//! infinitesimal symmetry conditions, and the wave method on the contact
//! diffiety.

mod variation;
mod wave;

pub use variation::{
    decompose_variation, group_finiteness_check, infinitesimal_conditions, variation_from_data,
    verify_variation, Finiteness, InfinitesimalConditions, VariationData, VariationFrame,
    VariationVerdict,
};
pub use wave::{wave_symmetry, wave_symmetry_single, WaveResult};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::diffiety::{member_test, Diffiety, FormSpan, Membership};
use crate::error::{Error, Result};
use crate::geometry::{d_fun, OneForm};
use crate::standard::r0;
use crate::symkernel::{CaseContext, Coordinate, Expr};

struct MorphismInner {
    om: Diffiety,
    f: Expr,
    df: Expr,
    seeds: BTreeMap<Coordinate, Expr>,
    cache: Mutex<BTreeMap<Coordinate, Expr>>,
}

/// A map `m` of the chart given by `m*x = F` and the images of the level-zero
/// coordinates; higher jets follow `F^j_{s+1} = D F^j_s / DF`.
#[derive(Clone)]
pub struct Morphism(Arc<MorphismInner>);

impl Morphism {
    /// Builds the prolonged map. Level-zero dependent coordinates need a seed;
    /// first integrals without a seed are kept fixed.
    pub fn new(om: &Diffiety, f: Expr, seeds: Vec<(Coordinate, Expr)>, ctx: &mut CaseContext) -> Result<Morphism> {
        if om.n() != 1 {
            return Err(Error::Unsupported(
                "morphism prolongation is implemented for one independent variable".into(),
            ));
        }
        let seeds: BTreeMap<Coordinate, Expr> = seeds.into_iter().collect();
        let level0 = om.coordinates_at_level(0);
        for c in seeds.keys() {
            if !level0.contains(c) {
                return Err(Error::Rejected(format!("seed for {c}, which is not a level-zero coordinate")));
            }
        }
        for c in &level0 {
            if !c.is_plain() && !seeds.contains_key(c) {
                return Err(Error::Rejected(format!("missing seed for {c}")));
            }
        }
        let df = om.total_derivative(0, &f)?;
        if df.is_zero() {
            return Err(Error::Rejected(format!("DF vanishes identically for F = {f}")));
        }
        ctx.decide_nonzero(&df, "morphism DF")?;
        Ok(Morphism(Arc::new(MorphismInner {
            om: om.clone(),
            f,
            df,
            seeds,
            cache: Mutex::new(BTreeMap::new()),
        })))
    }

    pub fn identity(om: &Diffiety) -> Morphism {
        let seeds = om
            .coordinates_at_level(0)
            .into_iter()
            .filter(|c| !c.is_plain())
            .map(|c| {
                let e = Expr::coord(c.clone());
                (c, e)
            })
            .collect();
        Morphism::new(om, Expr::coord(Coordinate::x()), seeds, &mut CaseContext::new(Default::default()))
            .expect("identity is a valid morphism")
    }

    pub fn diffiety(&self) -> &Diffiety {
        &self.0.om
    }

    /// `m*x`.
    pub fn f(&self) -> &Expr {
        &self.0.f
    }

    /// `D(m*x)`.
    pub fn df(&self) -> &Expr {
        &self.0.df
    }

    /// `m*c` for a chart coordinate.
    pub fn image(&self, c: &Coordinate) -> Result<Expr> {
        if let Some(e) = self.0.cache.lock().expect("cache lock").get(c) {
            return Ok(e.clone());
        }
        let e = if *c == Coordinate::x() {
            self.0.f.clone()
        } else if let Some(s) = self.0.seeds.get(c) {
            s.clone()
        } else if c.is_plain() && self.0.om.contains(c) {
            Expr::coord(c.clone())
        } else {
            match c.as_single_jet() {
                Some((j, s, false)) if s > 0 && self.0.om.contains(c) => {
                    let below = self.image(&Coordinate::w(j, s - 1))?;
                    (self.0.om.total_derivative(0, &below)? / &self.0.df).clone()
                }
                _ => return Err(Error::Rejected(format!("{c} is not a chart coordinate"))),
            }
        };
        self.0.cache.lock().expect("cache lock").insert(c.clone(), e.clone());
        Ok(e)
    }

    /// `m*e`.
    pub fn pullback_expr(&self, e: &Expr) -> Result<Expr> {
        let mut map = BTreeMap::new();
        for c in e.coordinates() {
            map.insert(c.clone(), self.image(&c)?);
        }
        Ok(e.substitute(&map))
    }

    /// `m*φ = Σ m*(a_c)·d(m*c)`.
    pub fn pullback(&self, phi: &OneForm) -> Result<OneForm> {
        let mut out = OneForm::zero();
        for (c, a) in phi.terms() {
            let k = self.pullback_expr(a)?;
            out = out.axpy(&k, &d_fun(&self.image(c)?));
        }
        Ok(out)
    }

    /// First window generator whose pullback leaves Ω.
    pub fn morphism_witness(&self, window: usize) -> Result<Option<OneForm>> {
        for g in self.0.om.natural_level(window)? {
            let pg = self.pullback(&g)?;
            if member_test(&pg, &self.0.om, window + 1)? != Membership::Member {
                return Ok(Some(g));
            }
        }
        Ok(None)
    }
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Morphism(x -> {}", self.0.f)?;
        for (c, e) in &self.0.seeds {
            write!(f, ", {c} -> {e}")?;
        }
        write!(f, ")")
    }
}

/// Prolongs seed data to a morphism and certifies `m*ω ∈ Ω` on the window.
pub fn prolong_morphism(
    f: Expr,
    seeds: Vec<(Coordinate, Expr)>,
    om: &Diffiety,
    window: usize,
    ctx: &mut CaseContext,
) -> Result<Morphism> {
    let m = Morphism::new(om, f, seeds, ctx)?;
    if let Some(g) = m.morphism_witness(window)? {
        return Err(Error::Rejected(format!("pullback of {g} is not in the diffiety")));
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryVerdict {
    Symmetry,
    MorphismOnly,
    Fail,
}

impl SymmetryVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SymmetryVerdict::Symmetry => "symmetry",
            SymmetryVerdict::MorphismOnly => "morphism-only",
            SymmetryVerdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymmetryReport {
    pub verdict: SymmetryVerdict,
    pub window: usize,
    pub witness: Option<String>,
}

/// Decides whether `m` is a morphism of Ω on the window, and whether it is
/// invertible by the criterion `Ω₀ ⊂ m*Ω`, `m*R⁰ = R⁰`.
pub fn verify_symmetry(m: &Morphism, window: usize, seed: u64, ctx: &mut CaseContext) -> Result<SymmetryReport> {
    let om = m.diffiety();
    let report = |verdict, witness| SymmetryReport {
        verdict,
        window,
        witness,
    };
    if let Some(g) = m.morphism_witness(window)? {
        return Ok(report(SymmetryVerdict::Fail, Some(format!("m*({g}) is not in the diffiety"))));
    }
    let mut pulled = Vec::new();
    for g in om.natural_level(window)? {
        pulled.push(m.pullback(&g)?);
    }
    let image = FormSpan::from_forms(&pulled, ctx)?;
    for g in om.natural_level(0)? {
        if !image.contains(&g) {
            return Ok(report(
                SymmetryVerdict::MorphismOnly,
                Some(format!("{g} is not in the pulled-back window")),
            ));
        }
    }
    let r = r0(om, window, seed, ctx)?.module;
    let mut taus = Vec::new();
    for t in r.basis() {
        taus.push(m.pullback(t)?);
    }
    let pr = FormSpan::from_forms(&taus, ctx)?;
    if !pr.same_span(&r) {
        return Ok(report(
            SymmetryVerdict::MorphismOnly,
            Some("the pullback does not preserve the first-integral module".into()),
        ));
    }
    Ok(report(SymmetryVerdict::Symmetry, None))
}

/// Chart coordinates of order `≤ order` on which `m̄*∘m*` is not the identity.
pub fn composition_defects(m: &Morphism, mbar: &Morphism, order: usize) -> Result<Vec<Coordinate>> {
    let om = m.diffiety();
    let mut coords = vec![Coordinate::x()];
    coords.extend(om.coordinates_at_level(order));
    let mut bad = Vec::new();
    for c in coords {
        let back = mbar.pullback_expr(&m.image(&c)?)?;
        if back != Expr::coord(c.clone()) {
            bad.push(c);
        }
    }
    Ok(bad)
}
