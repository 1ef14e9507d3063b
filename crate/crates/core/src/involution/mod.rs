//! Graded dimensions of a filtration, Hilbert polynomial fits, injectivity of
//! the multiplication maps on finite windows, and the Cartan test for
//! first-order solved systems.

mod cartan;

pub use cartan::{cartan_test, CartanReport, SolvedSystem};

use std::fmt;

use crate::diffiety::{Diffiety, Filtration, FormSpan};
use crate::error::{Error, Result};
use crate::geometry::{lie_derivative, OneForm, VectorField};
use crate::symkernel::CaseContext;

/// `dim Ω_l/Ω_{l−1}` for `l = 0..=window`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedDims {
    pub window: usize,
    pub dims: Vec<usize>,
}

impl GradedDims {
    pub fn from_dims(dims: Vec<usize>) -> Self {
        GradedDims {
            window: dims.len().saturating_sub(1),
            dims,
        }
    }
}

/// Tabulates the graded dimensions of `filt` through level `window`.
pub fn graded_dims(om: &Diffiety, filt: &Filtration, window: usize, ctx: &mut CaseContext) -> Result<GradedDims> {
    let mut dims = Vec::with_capacity(window + 1);
    let mut prev = FormSpan::new();
    for l in 0..=window {
        let here = filt.level_span(om, l, ctx)?;
        if !here.contains_span(&prev) {
            return Err(Error::Rejected(format!("level {} is not contained in level {l}", l - 1)));
        }
        dims.push(here.dim() - prev.dim());
        prev = here;
    }
    Ok(GradedDims { window, dims })
}

/// `dim M_l = e_ν C(l,ν) + … + e_0 C(l,0)` for `l ≥ onset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertFit {
    /// `ν`, or `−1` when the polynomial vanishes.
    pub degree: i64,
    /// `e_0, …, e_ν`.
    pub coeffs: Vec<i64>,
    pub onset: usize,
    pub window: usize,
}

impl HilbertFit {
    pub fn nu(&self) -> i64 {
        self.degree
    }

    /// The leading coefficient `e_ν`; zero in the degenerate case.
    pub fn mu(&self) -> i64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.degree < 0
    }

    pub fn eval(&self, l: usize) -> i64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, e)| e * binomial(l as i64, k) as i64)
            .sum()
    }
}

impl fmt::Display for HilbertFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nu={} mu={} e=(", self.degree, self.mu())?;
        for (k, e) in self.coeffs.iter().enumerate().rev() {
            write!(f, "{e}")?;
            if k > 0 {
                write!(f, ",")?;
            }
        }
        write!(f, ") onset={}", self.onset)
    }
}

/// `C(t, k)` for any integer `t`.
fn binomial(t: i64, k: usize) -> i128 {
    let mut acc: i128 = 1;
    for i in 0..k as i128 {
        acc = acc * (t as i128 - i) / (i + 1);
    }
    acc
}

fn differences(v: &[i128]) -> Vec<i128> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Fits the least-degree polynomial to the longest tail of `g`.
///
/// A degree-`d` fit needs at least `d + 2` tail values, so one value checks the
/// interpolation.
pub fn hilbert_fit(g: &GradedDims) -> Result<HilbertFit> {
    let vals: Vec<i128> = g.dims.iter().map(|&d| d as i128).collect();
    let len = vals.len();
    for d in 0..len.saturating_sub(1) {
        let fits = |start: usize| {
            let mut t = vals[start..].to_vec();
            for _ in 0..=d {
                t = differences(&t);
            }
            t.iter().all(|&x| x == 0)
        };
        if !fits(len - d - 2) {
            continue;
        }
        let mut onset = len - d - 2;
        while onset > 0 && fits(onset - 1) {
            onset -= 1;
        }
        let mut newton = Vec::with_capacity(d + 1);
        let mut t = vals[onset..].to_vec();
        for _ in 0..=d {
            newton.push(t[0]);
            t = differences(&t);
        }
        let at: Vec<i128> = (0..=d as i64)
            .map(|l| {
                newton
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * binomial(l - onset as i64, k))
                    .sum()
            })
            .collect();
        let mut coeffs = Vec::with_capacity(d + 1);
        let mut t = at;
        for _ in 0..=d {
            coeffs.push(i64::try_from(t[0]).map_err(|_| Error::Rejected("Hilbert coefficient overflow".into()))?);
            t = differences(&t);
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        return Ok(HilbertFit {
            degree: coeffs.len() as i64 - 1,
            coeffs,
            onset,
            window: g.window,
        });
    }
    Err(Error::WindowEscalation(format!(
        "no polynomial tail in {} graded dimensions",
        len
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InjectivityClass {
    Regular,
    Quasiregular,
    Ordinary { from: usize },
    NoneInWindow,
}

impl InjectivityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            InjectivityClass::Regular => "regular",
            InjectivityClass::Quasiregular => "quasiregular",
            InjectivityClass::Ordinary { .. } => "ordinary",
            InjectivityClass::NoneInWindow => "none-in-window",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectivityReport {
    pub window: usize,
    /// `injective[l][i]`: `Z_{i+1}: M(i)_l → M(i)_{l+1}` is injective.
    pub injective: Vec<Vec<bool>>,
    pub class: InjectivityClass,
    /// Levels that were injective although a later level is not.
    pub violations: Vec<usize>,
}

/// `Ω_{l−1} + L_{Z_1}Ω_{l−1} + … + L_{Z_i}Ω_{l−1}`, the part of `Ω_l` that
/// vanishes in `M(i)_l`.
fn quotient_base(
    om: &Diffiety,
    filt: &Filtration,
    fields: &[VectorField],
    i: usize,
    l: usize,
    ctx: &mut CaseContext,
) -> Result<FormSpan> {
    if l == 0 {
        return Ok(FormSpan::new());
    }
    let below = filt.level(om, l - 1)?;
    let mut span = FormSpan::from_forms(&below, ctx)?;
    for z in &fields[..i] {
        let imgs = below.iter().map(|g| lie_derivative(z, g)).collect::<std::result::Result<Vec<OneForm>, _>>()?;
        span.extend(&imgs, ctx)?;
    }
    Ok(span)
}

/// Tests the multiplication maps `Z_{i+1}: M(i)_l → M(i)_{l+1}` for
/// `l < window` and classifies the basis `Z_1, …, Z_n` on the window.
pub fn injectivity_window(
    om: &Diffiety,
    filt: &Filtration,
    fields: &[VectorField],
    window: usize,
    ctx: &mut CaseContext,
) -> Result<InjectivityReport> {
    if window == 0 {
        return Err(Error::Rejected("injectivity needs a window of at least one level".into()));
    }
    if fields.is_empty() {
        return Err(Error::Rejected("no vector fields given".into()));
    }
    let mut base: Vec<Vec<FormSpan>> = Vec::with_capacity(fields.len());
    for i in 0..fields.len() {
        let mut row = Vec::with_capacity(window + 1);
        for l in 0..=window {
            row.push(quotient_base(om, filt, fields, i, l, ctx)?);
        }
        base.push(row);
    }
    let mut injective = Vec::with_capacity(window);
    for l in 0..window {
        let gens = filt.level(om, l)?;
        let mut per_field = Vec::with_capacity(fields.len());
        for (i, z) in fields.iter().enumerate() {
            let mut span = base[i][l].clone();
            let mut reps = Vec::new();
            for g in &gens {
                if span.insert(g, ctx)? {
                    reps.push(g.clone());
                }
            }
            let mut target = base[i][l + 1].clone();
            let mut ok = true;
            for r in &reps {
                if !target.insert(&lie_derivative(z, r)?, ctx)? {
                    ok = false;
                    break;
                }
            }
            per_field.push(ok);
        }
        injective.push(per_field);
    }
    let ok: Vec<bool> = injective.iter().map(|v| v.iter().all(|&b| b)).collect();
    let from = (0..=window).rev().take_while(|&l| l == window || ok[l]).last().unwrap_or(window);
    let class = match from {
        0 => InjectivityClass::Regular,
        1 => InjectivityClass::Quasiregular,
        f if f < window => InjectivityClass::Ordinary { from: f },
        _ => InjectivityClass::NoneInWindow,
    };
    let violations = (0..from).filter(|&l| ok[l]).collect();
    Ok(InjectivityReport {
        window,
        injective,
        class,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffiety::{OdeSystem, ResolvedEquation};
    use crate::standard::descending_chain;
    use crate::symkernel::{w, AssumptionSet, Expr};

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
    fn binomial_handles_negative_arguments() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(-1, 3), -1);
        assert_eq!(binomial(-2, 2), 3);
        assert_eq!(binomial(3, 0), 1);
    }

    #[test]
    fn contact_dims_are_constant() {
        for m in 1..=3 {
            let om = Diffiety::contact(m);
            let g = graded_dims(&om, &Filtration::natural(), 5, &mut ctx()).unwrap();
            assert_eq!(g.dims, vec![m; 6]);
            let h = hilbert_fit(&g).unwrap();
            assert_eq!((h.nu(), h.mu(), h.onset), (0, m as i64, 0));
        }
    }

    #[test]
    fn linear_growth_fit() {
        let h = hilbert_fit(&GradedDims::from_dims(vec![1, 2, 3, 4, 5])).unwrap();
        assert_eq!(h.degree, 1);
        assert_eq!(h.coeffs, vec![1, 1]);
        let om = Diffiety::contact_multi(2, 1).unwrap();
        let g = graded_dims(&om, &Filtration::natural(), 4, &mut ctx()).unwrap();
        assert_eq!(g.dims, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn late_onset_and_prediction() {
        let g = GradedDims::from_dims(vec![7, 0, 3, 6, 10, 15, 21]);
        let h = hilbert_fit(&g).unwrap();
        assert_eq!(h.degree, 2);
        assert_eq!(h.onset, 2);
        for l in h.onset..=g.window {
            assert_eq!(h.eval(l), g.dims[l] as i64);
        }
    }

    #[test]
    fn degenerate_and_short_windows() {
        let h = hilbert_fit(&GradedDims::from_dims(vec![0, 0, 0])).unwrap();
        assert!(h.is_degenerate());
        assert_eq!((h.nu(), h.mu()), (-1, 0));
        let g = graded_dims(&Diffiety::contact(0), &Filtration::natural(), 3, &mut ctx()).unwrap();
        assert_eq!(g.dims, vec![0; 4]);
        assert!(hilbert_fit(&GradedDims::from_dims(vec![1, 2])).is_err());
        assert!(hilbert_fit(&GradedDims::from_dims(vec![1, 2, 4, 8, 16])).is_err());
    }

    #[test]
    fn lift_keeps_leading_data() {
        let om = example4();
        for c in 0..=2 {
            let mut cx = CaseContext::new(om.assumptions().clone());
            let g = graded_dims(&om, &Filtration::natural().lift(c), 5, &mut cx).unwrap();
            let h = hilbert_fit(&g).unwrap();
            assert_eq!((h.nu(), h.mu()), (0, 1));
        }
    }

    #[test]
    fn contact_with_total_derivative_is_regular() {
        let om = Diffiety::contact(2);
        let r = injectivity_window(&om, &Filtration::natural(), &[om.d().clone()], 4, &mut ctx()).unwrap();
        assert_eq!(r.class, InjectivityClass::Regular);
        let om2 = Diffiety::contact_multi(2, 1).unwrap();
        let r2 = injectivity_window(&om2, &Filtration::natural(), om2.totals(), 3, &mut ctx()).unwrap();
        assert_eq!(r2.class, InjectivityClass::Regular);
        assert!(r2.violations.is_empty());
    }

    #[test]
    fn zero_field_is_never_injective() {
        let om = Diffiety::contact(1);
        let r = injectivity_window(&om, &Filtration::natural(), &[VectorField::zero()], 3, &mut ctx()).unwrap();
        assert_eq!(r.class, InjectivityClass::NoneInWindow);
    }

    #[test]
    fn example4_refinement_improves_the_class() {
        let om = example4();
        let mut c = CaseContext::new(om.assumptions().clone());
        let nat = injectivity_window(&om, &Filtration::natural(), &[om.d().clone()], 4, &mut c).unwrap();
        assert_eq!(nat.class, InjectivityClass::Quasiregular);
        let chain = descending_chain(&om, om.d(), 3, &mut c).unwrap();
        let refined = chain.standard_filtration();
        let r = injectivity_window(&om, &refined, &[om.d().clone()], 4, &mut c).unwrap();
        assert_eq!(r.class, InjectivityClass::Regular);
        let g = graded_dims(&om, &refined, 5, &mut c).unwrap();
        assert_eq!(g.dims, vec![1, 1, 1, 1, 1, 1]);
    }
}
