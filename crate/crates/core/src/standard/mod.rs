//! Ker-chain refinement of filtrations, the first-integral module R⁰, standard
//! bases, the growth classifier and the second Ker chain for several
//! independent variables.

mod basis;

pub use basis::{standard_basis, BasisCertificate, Seed, StandardBasis};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffiety::{relations, Diffiety, Filtration, FormSpan};
use crate::error::{Error, Result};
use crate::geometry::{lie_derivative, OneForm, VectorField};
use crate::symkernel::{CaseContext, Expr};

/// `Ker_X Θ`: the forms `θ ∈ Θ` with `L_X θ ∈ Θ`.
pub fn ker_field(x: &VectorField, theta: &FormSpan, ctx: &mut CaseContext) -> Result<FormSpan> {
    ker_field_modulo(x, theta, theta, ctx)
}

/// The forms `θ ∈ Θ` with `L_X θ ∈ target`.
pub fn ker_field_modulo(
    x: &VectorField,
    theta: &FormSpan,
    target: &FormSpan,
    ctx: &mut CaseContext,
) -> Result<FormSpan> {
    let images = theta
        .basis()
        .iter()
        .map(|t| lie_derivative(x, t))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rels = relations(&images, target, ctx)?;
    let forms: Vec<OneForm> = rels
        .iter()
        .map(|c| {
            theta
                .basis()
                .iter()
                .zip(c)
                .fold(OneForm::zero(), |acc, (t, k)| acc.axpy(k, t))
        })
        .collect();
    Ok(FormSpan::from_forms(&forms, ctx)?)
}

/// The descending chain `Ω₀ ⊃ Ker_X Ω₀ ⊃ (Ker_X)² Ω₀ ⊃ …` up to stationarity.
#[derive(Clone, Debug)]
pub struct KerChainResult {
    pub window: usize,
    /// `(Ker_X)^k Ω₀` for `k = 0..=depth`.
    pub modules: Vec<FormSpan>,
    /// Stationarity index: `(Ker_X)^{depth+1} Ω₀ = (Ker_X)^depth Ω₀`.
    pub depth: usize,
    pub field: String,
    start: Filtration,
}

impl KerChainResult {
    pub fn dims(&self) -> Vec<usize> {
        self.modules.iter().map(FormSpan::dim).collect()
    }

    /// The stationary module.
    pub fn stationary(&self) -> &FormSpan {
        &self.modules[self.depth]
    }

    /// The standard filtration: `Ω̄_l = (Ker_X)^{depth−1−l} Ω₀` for
    /// `l < depth`, followed by the starting levels `Ω̄_{depth−1+j} = Ω_j`.
    pub fn standard_filtration(&self) -> Filtration {
        if self.depth == 0 {
            return self.start.clone();
        }
        let prefix: Vec<Vec<OneForm>> = (1..self.depth)
            .rev()
            .map(|k| self.modules[k].basis().to_vec())
            .collect();
        self.start.prepend(prefix)
    }

    /// Ω̄-level holding the natural level `Ω_l`.
    pub fn bar_level_of_natural(&self, l: usize) -> usize {
        if self.depth == 0 {
            l
        } else {
            self.depth - 1 + l
        }
    }
}

/// Iterates `Ker_X` from level 0 of `start` until stationarity.
pub fn descending_chain_from(
    om: &Diffiety,
    start: &Filtration,
    x: &VectorField,
    window: usize,
    ctx: &mut CaseContext,
) -> Result<KerChainResult> {
    let first = start.level_span(om, 0, ctx)?;
    let cap = first.dim() + 2;
    let mut modules = vec![first];
    loop {
        let cur = modules.last().expect("nonempty chain");
        let next = ker_field(x, cur, ctx)?;
        if !cur.contains_span(&next) {
            return Err(Error::Certificate("Ker_X left the module it was applied to".into()));
        }
        if next.same_span(cur) {
            let depth = modules.len() - 1;
            return Ok(KerChainResult {
                window,
                modules,
                depth,
                field: x.name().to_string(),
                start: start.clone(),
            });
        }
        modules.push(next);
        if modules.len() > cap {
            return Err(Error::WindowEscalation(format!(
                "Ker chain did not become stationary within {cap} steps"
            )));
        }
    }
}

/// Iterates `Ker_X` from the natural `Ω₀`.
pub fn descending_chain(
    om: &Diffiety,
    x: &VectorField,
    window: usize,
    ctx: &mut CaseContext,
) -> Result<KerChainResult> {
    descending_chain_from(om, &Filtration::natural(), x, window, ctx)
}

/// A seeded "not too special" combination `Σ c_i D_i` with small integer `c_i`.
pub fn generic_field(om: &Diffiety, seed: u64, salt: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(salt));
    let terms: Vec<(Expr, VectorField)> = om
        .totals()
        .iter()
        .map(|d| (Expr::int(rng.gen_range(1..=9)), d.clone()))
        .collect();
    let label = terms
        .iter()
        .enumerate()
        .map(|(i, (c, _))| format!("{c}*D{}", i + 1))
        .collect::<Vec<_>>()
        .join(" + ");
    VectorField::combination(label, terms)
}

/// Result of the first task: the chain for `X = D` (or a random combination),
/// confirmed by a second seeded choice.
#[derive(Clone, Debug)]
pub struct FirstTask {
    pub chain: KerChainResult,
    pub second: KerChainResult,
}

/// Runs the chain twice with different admissible fields and checks they agree.
pub fn first_task_from(
    om: &Diffiety,
    start: &Filtration,
    window: usize,
    seed: u64,
    ctx: &mut CaseContext,
) -> Result<FirstTask> {
    let x1 = if om.n() == 1 {
        om.d().clone()
    } else {
        generic_field(om, seed, 1)
    };
    let x2 = generic_field(om, seed, 2);
    let chain = descending_chain_from(om, start, &x1, window, ctx)?;
    let second = descending_chain_from(om, start, &x2, window, ctx)?;
    let agree = chain.dims() == second.dims()
        && chain
            .modules
            .iter()
            .zip(&second.modules)
            .all(|(a, b)| a.same_span(b));
    if !agree {
        return Err(Error::NotGeneric(format!(
            "Ker dimensions {:?} for {} differ from {:?} for {}",
            chain.dims(),
            chain.field,
            second.dims(),
            second.field
        )));
    }
    Ok(FirstTask { chain, second })
}

pub fn first_task(om: &Diffiety, window: usize, seed: u64, ctx: &mut CaseContext) -> Result<FirstTask> {
    first_task_from(om, &Filtration::natural(), window, seed, ctx)
}

/// The module R⁰ of first-integral differentials, with its certificates.
#[derive(Clone, Debug)]
pub struct R0Result {
    pub module: FormSpan,
    /// `dτ ≡ 0 (mod R⁰)` for every basis form.
    pub frobenius: bool,
    /// `L_{D_i} R⁰ ⊆ R⁰`.
    pub invariant: bool,
}

impl R0Result {
    /// `K(Ω) = dim R⁰`.
    pub fn k(&self) -> usize {
        self.module.dim()
    }
}

/// Certifies the stationary module of a chain as R⁰.
pub fn r0_from_chain(om: &Diffiety, chain: &KerChainResult) -> Result<R0Result> {
    let module = chain.stationary().clone();
    let mut frobenius = true;
    let mut invariant = true;
    for tau in module.basis() {
        let dt = crate::geometry::exterior_d(tau);
        if !module.reduce_two_form(&dt).is_zero() {
            frobenius = false;
        }
        for d in om.totals() {
            if !module.contains(&lie_derivative(d, tau)?) {
                invariant = false;
            }
        }
    }
    if !frobenius {
        return Err(Error::Certificate(
            "Frobenius condition fails for the stationary module; window unstable".into(),
        ));
    }
    Ok(R0Result {
        module,
        frobenius,
        invariant,
    })
}

/// R⁰ of a diffiety on a window.
pub fn r0(om: &Diffiety, window: usize, seed: u64, ctx: &mut CaseContext) -> Result<R0Result> {
    let task = first_task(om, window, seed, ctx)?;
    r0_from_chain(om, &task.chain)
}

/// Growth class of `dim span{(L_H)^i ω : i ≤ k}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Growth {
    Bounded,
    LinearBounded,
    Superlinear,
}

impl Growth {
    pub fn as_str(self) -> &'static str {
        match self {
            Growth::Bounded => "bounded",
            Growth::LinearBounded => "linear-bounded",
            Growth::Superlinear => "superlinear",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    /// `dims[k] = dim span{(L_H)^i ω : i ≤ k}`.
    pub dims: Vec<usize>,
    pub class: Growth,
}

/// Classifies the growth of the iterated Lie derivatives of `ω`.
///
/// Bounded growth marks forms of R⁰. With one independent variable anything
/// else grows at least linearly and is reported as superlinear; with several,
/// eventually constant first differences are reported as linear-bounded.
pub fn growth_classifier(
    omega: &OneForm,
    om: &Diffiety,
    depth: usize,
    ctx: &mut CaseContext,
) -> Result<GrowthReport> {
    let mut span = FormSpan::new();
    let mut frontier = vec![omega.clone()];
    span.extend(&frontier, ctx)?;
    let mut dims = vec![span.dim()];
    for _ in 1..=depth {
        let mut next = Vec::new();
        for f in &frontier {
            for d in om.totals() {
                let g = lie_derivative(d, f)?;
                if span.insert(&g, ctx)? {
                    next.push(g);
                }
            }
        }
        frontier = next;
        dims.push(span.dim());
    }
    let class = classify_growth(&dims, om.n());
    Ok(GrowthReport { dims, class })
}

fn classify_growth(dims: &[usize], n: usize) -> Growth {
    let len = dims.len();
    if len < 3 || dims[len - 1] == dims[len - 2] && dims[len - 2] == dims[len - 3] {
        return Growth::Bounded;
    }
    if n == 1 {
        return Growth::Superlinear;
    }
    let d1: Vec<i64> = dims.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    let k = d1.len();
    if k >= 3 && d1[k - 1] == d1[k - 2] && d1[k - 2] == d1[k - 3] {
        Growth::LinearBounded
    } else {
        Growth::Superlinear
    }
}

/// Result of the second task for several independent variables.
#[derive(Clone, Debug)]
pub struct SecondTask {
    pub window: usize,
    /// Dimensions of `(Ker_Y)^k Ω(X)₀` truncated at the window.
    pub dims: Vec<usize>,
    pub depth: usize,
    /// Stationary module `R¹` truncated at the window.
    pub r1: FormSpan,
    /// Top graded dimension of each chain module on the window.
    pub e0: Vec<usize>,
    /// Whether the same chain dimensions pattern is found one window higher.
    pub stable: bool,
}

/// `Ω(X)_l` truncated at order `w`: all `L_X^k γ` for generators of level `l`
/// with `l + k ≤ w`.
fn omega_x_level(
    om: &Diffiety,
    x: &VectorField,
    l: usize,
    w: usize,
    ctx: &mut CaseContext,
) -> Result<FormSpan> {
    let mut forms = Vec::new();
    for g in om.natural_level(l)? {
        let mut cur = g;
        forms.push(cur.clone());
        for _ in l..w {
            cur = lie_derivative(x, &cur)?;
            forms.push(cur.clone());
        }
    }
    Ok(FormSpan::from_forms(&forms, ctx)?)
}

fn second_chain(
    om: &Diffiety,
    x: &VectorField,
    y: &VectorField,
    w: usize,
    cap: usize,
    ctx: &mut CaseContext,
) -> Result<(Vec<FormSpan>, usize)> {
    let mut rows: Vec<FormSpan> = (0..=cap + 1)
        .map(|k| omega_x_level(om, x, 0, w + k, ctx))
        .collect::<Result<_>>()?;
    let mut chain = vec![rows[0].clone()];
    for step in 0..cap {
        let next: Vec<FormSpan> = (0..rows.len() - 1)
            .map(|k| ker_field_modulo(y, &rows[k], &rows[k + 1], ctx))
            .collect::<Result<_>>()?;
        if next[0].same_span(&rows[0]) {
            return Ok((chain, step));
        }
        chain.push(next[0].clone());
        rows = next;
        if rows.len() < 2 {
            break;
        }
    }
    Err(Error::WindowEscalation(format!(
        "second Ker chain not stationary within {cap} steps at window {w}"
    )))
}

fn graded_top(span: &FormSpan, om: &Diffiety, w: usize, ctx: &mut CaseContext) -> Result<usize> {
    let inter = |l: usize, ctx: &mut CaseContext| -> Result<usize> {
        let level = crate::diffiety::window_span(om, l)?;
        let mut sum = level.clone();
        sum.extend(span.basis(), ctx)?;
        Ok(span.dim() + level.dim() - sum.dim())
    };
    if w == 0 {
        return inter(0, ctx);
    }
    Ok(inter(w, ctx)? - inter(w - 1, ctx)?)
}

/// The second Ker chain `(Ker_Y)^k Ω(X)₀` and the module R¹.
pub fn second_task(
    om: &Diffiety,
    x: &VectorField,
    y: &VectorField,
    window: usize,
    ctx: &mut CaseContext,
) -> Result<SecondTask> {
    if om.n() < 2 {
        return Err(Error::Unsupported(
            "the second task needs at least two independent variables".into(),
        ));
    }
    let cap = 4;
    let (chain, depth) = second_chain(om, x, y, window, cap, ctx)?;
    let (chain_up, depth_up) = second_chain(om, x, y, window + 1, cap, ctx)?;
    let dims: Vec<usize> = chain.iter().map(FormSpan::dim).collect();
    let r1 = chain[depth].clone();
    let e0 = chain
        .iter()
        .map(|m| graded_top(m, om, window, ctx))
        .collect::<Result<Vec<_>>>()?;
    let stable = depth == depth_up && chain_up[depth_up].dim() >= r1.dim() && chain_up[depth_up].contains_span(&r1);
    Ok(SecondTask {
        window,
        dims,
        depth,
        r1,
        e0,
        stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffiety::{OdeSystem, ResolvedEquation};
    use crate::geometry::d_fun;
    use crate::symkernel::{w, AssumptionSet, Coordinate};

    fn ctx() -> CaseContext {
        CaseContext::new(AssumptionSet::new())
    }

    fn example4() -> Diffiety {
        let mut a = AssumptionSet::new();
        a.insert(Expr::func_deriv("F", vec![2], vec![w(2, 1)]) * w(2, 2)).unwrap();
        Diffiety::from_resolved_ode(&OdeSystem {
            name: "example4".into(),
            dependents: 2,
            equations: vec![ResolvedEquation {
                dep: 1,
                order: 1,
                rhs: Expr::func("F", vec![w(2, 1)]),
            }],
            assumptions: a,
        })
        .unwrap()
    }

    #[test]
    fn example4_chain() {
        let om = example4();
        let mut c = CaseContext::new(om.assumptions().clone());
        let chain = descending_chain(&om, om.d(), 3, &mut c).unwrap();
        assert_eq!(chain.dims(), vec![2, 1, 0]);
        assert_eq!(chain.depth, 2);
        let fp = Expr::func_deriv("F", vec![1], vec![w(2, 1)]);
        let w10 = om.natural_form(&Coordinate::w(1, 0)).unwrap();
        let w20 = om.natural_form(&Coordinate::w(2, 0)).unwrap();
        assert_eq!(chain.modules[1].basis()[0], w10.axpy(&-fp, &w20));
        assert!(c.forks().is_empty());
    }

    #[test]
    fn contact_chain_vanishes_after_one_step() {
        let om = Diffiety::contact(2);
        let chain = descending_chain(&om, om.d(), 2, &mut ctx()).unwrap();
        assert_eq!(chain.dims(), vec![2, 0]);
        let r = r0_from_chain(&om, &chain).unwrap();
        assert_eq!(r.k(), 0);
    }

    #[test]
    fn ker_of_invariant_module_is_itself() {
        let om = Diffiety::contact(1).with_first_integrals(&["t"]);
        let mut c = ctx();
        let theta = FormSpan::from_forms(&[OneForm::d(Coordinate::plain("t"))], &mut c).unwrap();
        assert!(ker_field(om.d(), &theta, &mut c).unwrap().same_span(&theta));
    }

    #[test]
    fn growth_classes() {
        let om = example4();
        let mut c = CaseContext::new(om.assumptions().clone());
        let w20 = om.natural_form(&Coordinate::w(2, 0)).unwrap();
        let g = growth_classifier(&w20, &om, 6, &mut c).unwrap();
        assert_eq!(g.dims, vec![1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(g.class, Growth::Superlinear);
        let z = growth_classifier(&OneForm::zero(), &om, 4, &mut c).unwrap();
        assert_eq!(z.class, Growth::Bounded);
        let om1 = Diffiety::contact(1).with_first_integrals(&["t"]);
        let t = d_fun(&Expr::coord(Coordinate::plain("t")));
        assert_eq!(growth_classifier(&t, &om1, 4, &mut c).unwrap().class, Growth::Bounded);
    }

    #[test]
    fn second_task_guards_and_fixtures() {
        let om1 = Diffiety::contact(1);
        assert!(second_task(&om1, om1.d(), om1.d(), 2, &mut ctx()).is_err());
        let om = Diffiety::contact_multi(2, 1).unwrap();
        let x = generic_field(&om, 0, 1);
        let y = generic_field(&om, 0, 2);
        let r = second_task(&om, &x, &y, 2, &mut ctx()).unwrap();
        assert_eq!(r.r1.dim(), 0);
        let omt = om.with_first_integrals(&["t"]);
        let (x, y) = (generic_field(&omt, 0, 1), generic_field(&omt, 0, 2));
        let r = second_task(&omt, &x, &y, 2, &mut ctx()).unwrap();
        assert_eq!(r.r1.dim(), 1);
        assert!(r.stable);
        assert!(r.r1.contains(&OneForm::d(Coordinate::plain("t"))));
    }
}
