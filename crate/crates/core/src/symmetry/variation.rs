use std::collections::BTreeMap;

use crate::diffiety::{dual_coefficients, member_test, Diffiety, FormSpan, Membership};
use crate::error::{Error, Result};
use crate::geometry::{contract, d_fun, lie_derivative, OneForm, VectorField};
use crate::standard::StandardBasis;
use crate::symkernel::{CaseContext, Coordinate, Expr, Nonvanishing};

/// Free data of a variation: `z = Zx`, `p^j = π^j(Z)` and `z^k = τ^k(Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationData {
    pub z: Expr,
    pub p: Vec<Expr>,
    pub zk: Vec<Expr>,
}

impl VariationData {
    pub fn zero(b: &StandardBasis) -> Self {
        VariationData {
            z: Expr::zero(),
            p: vec![Expr::zero(); b.mu()],
            zk: vec![Expr::zero(); b.k()],
        }
    }

    fn coordinates(&self) -> Vec<Coordinate> {
        let mut out: Vec<Coordinate> = self.z.coordinates().into_iter().collect();
        for e in self.p.iter().chain(&self.zk) {
            out.extend(e.coordinates());
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Dx,
    Tau(usize),
    Pi(usize, usize),
}

/// The inverted change of basis between `{dx, τ^k, π^j_s}` and coordinate
/// differentials on a window, reusable for many variations.
#[derive(Clone, Debug)]
pub struct VariationFrame {
    pub window: usize,
    columns: Vec<Coordinate>,
    slots: Vec<Slot>,
    dual: Vec<Vec<Expr>>,
    taus: FormSpan,
}

impl VariationFrame {
    /// Covers the coordinates of order `≤ window + 1`.
    pub fn new(b: &StandardBasis, om: &Diffiety, window: usize, ctx: &mut CaseContext) -> Result<Self> {
        let mut forms = vec![OneForm::d(Coordinate::x())];
        let mut slots = vec![Slot::Dx];
        for (k, t) in b.taus.iter().enumerate() {
            forms.push(t.clone());
            slots.push(Slot::Tau(k));
        }
        for (j, s, f) in b.family_at(om, window + 1)? {
            forms.push(f);
            slots.push(Slot::Pi(j, s));
        }
        let mut columns = vec![Coordinate::x()];
        columns.extend(om.coordinates_at_level(window + 1));
        let dual = dual_coefficients(&forms, &columns, ctx)?
            .ok_or_else(|| Error::Degenerate("standard family is not a basis of the window".into()))?;
        Ok(VariationFrame {
            window,
            columns,
            slots,
            dual,
            taus: FormSpan::from_forms(&b.taus, ctx)?,
        })
    }

    /// The variation with the given free data.
    pub fn field(&self, v: &VariationData, om: &Diffiety) -> Result<VectorField> {
        if v.zk.len() != self.taus.dim() {
            return Err(Error::Rejected("one value per first-integral form is required".into()));
        }
        for zk in &v.zk {
            if !self.taus.contains(&d_fun(zk)) {
                return Err(Error::Rejected(format!("{zk} is not a function of the first integrals")));
            }
        }
        let mut powers: BTreeMap<(usize, usize), Expr> = BTreeMap::new();
        let mut values = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            values.push(match *slot {
                Slot::Dx => v.z.clone(),
                Slot::Tau(k) => v.zk[k].clone(),
                Slot::Pi(j, s) => {
                    let p = v
                        .p
                        .get(j)
                        .ok_or_else(|| Error::Rejected("one value per seed is required".into()))?;
                    let val = if s == 0 {
                        p.clone()
                    } else {
                        om.total_derivative(0, &powers[&(j, s - 1)])?
                    };
                    powers.insert((j, s), val.clone());
                    val
                }
            });
        }
        let coeffs: BTreeMap<Coordinate, Expr> = self
            .columns
            .iter()
            .zip(&self.dual)
            .map(|(c, a)| {
                let e = a.iter().zip(&values).fold(Expr::zero(), |acc, (k, v)| acc + k * v);
                (c.clone(), e)
            })
            .collect();
        Ok(VectorField::partial_field("Z", coeffs))
    }
}

/// The variation with data `v`, defined on coordinates of order `≤ window + 1`.
pub fn variation_from_data(
    v: &VariationData,
    b: &StandardBasis,
    om: &Diffiety,
    window: usize,
    ctx: &mut CaseContext,
) -> Result<VectorField> {
    VariationFrame::new(b, om, window, ctx)?.field(v, om)
}

/// Recovers `(z, p^j, z^k)` from a variation.
pub fn decompose_variation(z: &VectorField, b: &StandardBasis) -> Result<VariationData> {
    let zx = z.coeff(&Coordinate::x())?;
    let p = b
        .seeds
        .iter()
        .map(|s| contract(z, &s.form))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let zk = b
        .taus
        .iter()
        .map(|t| contract(z, t))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(VariationData { z: zx, p, zk })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationVerdict {
    pub is_variation: bool,
    /// A generator `γ` with `L_Z γ ∉ Ω`.
    pub witness: Option<OneForm>,
    /// `(L_D ω)(Z) = D(ω(Z))` for every generator checked.
    pub prolongation_rule: bool,
}

/// Checks `L_Z γ ∈ Ω` for the generators of `Ω_window`, together with the
/// prolongation rule `(L_D γ)(Z) = D(γ(Z))`.
pub fn verify_variation(z: &VectorField, om: &Diffiety, window: usize) -> Result<VariationVerdict> {
    let mut verdict = VariationVerdict {
        is_variation: true,
        witness: None,
        prolongation_rule: true,
    };
    for g in om.natural_level(window)? {
        let lz = lie_derivative(z, &g)?;
        match member_test(&lz, om, window + 1)? {
            Membership::Member => {}
            Membership::Nonmember => {
                verdict.is_variation = false;
                verdict.witness.get_or_insert(g.clone());
            }
            Membership::UnknownAtWindow => {
                return Err(Error::WindowEscalation(format!("membership of L_Z({g}) undecided")));
            }
        }
        if om.n() == 1 {
            let lhs = contract(z, &lie_derivative(om.d(), &g)?)?;
            let rhs = om.total_derivative(0, &contract(z, &g)?)?;
            if lhs != rhs {
                verdict.prolongation_rule = false;
            }
        }
    }
    Ok(verdict)
}

/// Conditions for a variation to be an infinitesimal symmetry in the sense
/// `L_Z π^j ≡ 0` modulo the seeds and first-integral forms.
#[derive(Clone, Debug)]
pub struct InfinitesimalConditions {
    pub window: usize,
    /// Coefficients of the reduced `L_Z π^j` on non-independent coordinates.
    pub raw: Vec<Expr>,
    /// The placeholder standing for `z`, if any, and its solved value.
    pub unknown: Option<(Coordinate, Expr)>,
    /// Remaining conditions after eliminating the placeholder.
    pub reduced: Vec<Expr>,
}

impl InfinitesimalConditions {
    pub fn satisfied(&self) -> bool {
        self.reduced.is_empty()
    }
}

fn dedupe(conds: Vec<Expr>) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    for c in conds {
        if c.is_zero() {
            continue;
        }
        let dup = out
            .iter()
            .any(|o| o.checked_div(&c).is_some_and(|q| q.as_constant().is_some()));
        if !dup {
            out.push(c);
        }
    }
    out
}

/// Assembles the infinitesimal-symmetry conditions for an ansatz.
///
/// If `ansatz.z` is a bare coordinate outside the chart it is treated as the
/// unknown `z`: it is solved from one condition (constant coefficients
/// preferred) and substituted into the rest.
pub fn infinitesimal_conditions(
    b: &StandardBasis,
    ansatz: &VariationData,
    om: &Diffiety,
    ctx: &mut CaseContext,
) -> Result<InfinitesimalConditions> {
    let unknown = ansatz
        .z
        .as_coord()
        .filter(|c| c.is_plain() && !om.contains(c));
    let mut top = 0;
    for c in ansatz.coordinates() {
        top = top.max(c.jet_order());
    }
    for s in &b.seeds {
        for c in s.form.support() {
            top = top.max(c.jet_order());
        }
    }
    let window = top;
    let z = variation_from_data(ansatz, b, om, window, ctx)?;
    let mut base: Vec<OneForm> = b.taus.clone();
    base.extend(b.seeds.iter().map(|s| s.form.clone()));
    let modulo = FormSpan::from_forms(&base, ctx)?;
    let mut raw = Vec::new();
    for s in &b.seeds {
        let res = modulo.reduce(&lie_derivative(&z, &s.form)?);
        for (c, e) in res.terms() {
            if !c.is_indep() {
                raw.push(e.clone());
            }
        }
    }
    let raw = dedupe(raw);
    let Some(u) = unknown else {
        return Ok(InfinitesimalConditions {
            window,
            raw: raw.clone(),
            unknown: None,
            reduced: raw,
        });
    };
    let coeffs: Vec<Expr> = raw.iter().map(|c| c.diff(&u)).collect();
    let pick = coeffs
        .iter()
        .position(|k| k.as_constant().is_some_and(|q| q != num_traits::Zero::zero()))
        .or_else(|| coeffs.iter().position(|k| ctx.classify(k) == Nonvanishing::NonZero))
        .or_else(|| coeffs.iter().position(|k| !k.is_zero()));
    let Some(i) = pick else {
        return Ok(InfinitesimalConditions {
            window,
            raw: raw.clone(),
            unknown: None,
            reduced: raw,
        });
    };
    ctx.decide_nonzero(&coeffs[i], "infinitesimal multiplier")?;
    let rest = &raw[i] - &coeffs[i] * &Expr::coord(u.clone());
    let value = -(rest / &coeffs[i]);
    let reduced = dedupe(
        raw.iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, c)| c.subs1(&u, &value))
            .collect(),
    );
    Ok(InfinitesimalConditions {
        window,
        raw,
        unknown: Some((u, value)),
        reduced,
    })
}

/// Dimensions of `span{L_Z^s π^j : s ≤ S}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Finiteness {
    pub dims: Vec<usize>,
    /// First step at which the span stopped growing.
    pub stable_at: Option<usize>,
}

impl Finiteness {
    pub fn is_finite(&self) -> bool {
        self.stable_at.is_some()
    }
}

/// Tests whether the forms `L_Z^s π^j` stay in a finite-dimensional module up
/// to `bound` steps.
pub fn group_finiteness_check(
    z: &VectorField,
    b: &StandardBasis,
    bound: usize,
    ctx: &mut CaseContext,
) -> Result<Finiteness> {
    let mut frontier: Vec<OneForm> = b.seeds.iter().map(|s| s.form.clone()).collect();
    let mut span = FormSpan::from_forms(&frontier, ctx)?;
    let mut dims = vec![span.dim()];
    for s in 1..=bound {
        frontier = frontier
            .iter()
            .map(|f| lie_derivative(z, f))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        span.extend(&frontier, ctx)?;
        dims.push(span.dim());
        if dims[s] == dims[s - 1] {
            return Ok(Finiteness {
                dims,
                stable_at: Some(s),
            });
        }
    }
    Ok(Finiteness { dims, stable_at: None })
}
