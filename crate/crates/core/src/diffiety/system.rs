//! Diffieties presented by coordinates, total derivatives and natural generators.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{FieldError, OneForm, VectorField};
use crate::symkernel::{AssumptionSet, Coordinate, Expr, JetIndex, MAX_INDEP};

/// How a dependent variable enters the chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Dependent {
    /// All jets `w^j_s` are coordinates.
    Free,
    /// `w^j_order = rhs`; only `w^j_s` with `s < order` are coordinates.
    Resolved { order: usize, rhs: Expr },
}

/// One resolved equation `d^order w^dep / dx^order = rhs` of an ODE system.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedEquation {
    pub dep: usize,
    pub order: usize,
    pub rhs: Expr,
}

/// Parsed data of an underdetermined ODE system in resolved form.
#[derive(Clone, Debug, Default)]
pub struct OdeSystem {
    pub name: String,
    pub dependents: usize,
    pub equations: Vec<ResolvedEquation>,
    pub assumptions: AssumptionSet,
}

struct Chart {
    n: usize,
    deps: Vec<Dependent>,
    integrals: Vec<Coordinate>,
}

impl Chart {
    fn undefined(i: usize, c: &Coordinate) -> FieldError {
        FieldError::Undefined {
            field: format!("D{}", i + 1),
            coord: c.to_string(),
        }
    }

    fn total_coeff(&self, i: usize, c: &Coordinate) -> std::result::Result<Expr, FieldError> {
        match c {
            Coordinate::Indep { bar: false, index } => {
                let k = if self.n == 1 { 0 } else { i + 1 };
                Ok(if *index as usize == k { Expr::one() } else { Expr::zero() })
            }
            Coordinate::Jet { bar: false, dep, order } if order.len() == self.n => {
                let j = *dep as usize;
                match self.deps.get(j.wrapping_sub(1)) {
                    Some(Dependent::Free) => Ok(Expr::coord(Coordinate::jet(j, order.raised(i)))),
                    Some(Dependent::Resolved { order: r, rhs }) => {
                        let s = order.get(0);
                        if s + 1 < *r {
                            Ok(Expr::coord(Coordinate::w(j, s + 1)))
                        } else if s + 1 == *r {
                            Ok(rhs.clone())
                        } else {
                            Err(Chart::undefined(i, c))
                        }
                    }
                    None => Err(Chart::undefined(i, c)),
                }
            }
            Coordinate::Plain(_) if self.integrals.contains(c) => Ok(Expr::zero()),
            _ => Err(Chart::undefined(i, c)),
        }
    }

    fn contains(&self, c: &Coordinate) -> bool {
        match c {
            Coordinate::Indep { bar: false, index } => {
                if self.n == 1 {
                    *index == 0
                } else {
                    (1..=self.n).contains(&(*index as usize))
                }
            }
            Coordinate::Jet { bar: false, dep, order } if order.len() == self.n => {
                match self.deps.get((*dep as usize).wrapping_sub(1)) {
                    Some(Dependent::Free) => true,
                    Some(Dependent::Resolved { order: r, .. }) => order.get(0) < *r,
                    None => false,
                }
            }
            Coordinate::Plain(_) => self.integrals.contains(c),
            _ => false,
        }
    }
}

/// A diffiety on a chart of jet coordinates.
///
/// The module Ω is spanned by the natural generators `ω_c = dc − Σ D_i(c) dx_i`
/// for the non-independent coordinates `c`; the natural level `l` collects the
/// generators of coordinates of order at most `l`.
#[derive(Clone)]
pub struct Diffiety {
    name: String,
    chart: Arc<Chart>,
    totals: Vec<VectorField>,
    assumptions: AssumptionSet,
}

impl std::fmt::Debug for Diffiety {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Diffiety({}, n = {}, m = {})", self.name, self.chart.n, self.chart.deps.len())
    }
}

impl Diffiety {
    fn build(
        name: &str,
        n: usize,
        deps: Vec<Dependent>,
        integrals: Vec<Coordinate>,
        assumptions: AssumptionSet,
    ) -> Self {
        let chart = Arc::new(Chart { n, deps, integrals });
        let totals = (0..n)
            .map(|i| {
                let ch = chart.clone();
                let label = if n == 1 { "D".to_string() } else { format!("D{}", i + 1) };
                VectorField::rule(label, move |c| ch.total_coeff(i, c)).declared_in_h()
            })
            .collect();
        Diffiety {
            name: name.to_string(),
            chart,
            totals,
            assumptions,
        }
    }

    /// The contact diffiety of curves with `m` dependent variables.
    pub fn contact(m: usize) -> Self {
        Diffiety::build("contact", 1, vec![Dependent::Free; m], Vec::new(), AssumptionSet::new())
    }

    /// The contact diffiety with `n` independent and `m` dependent variables.
    pub fn contact_multi(n: usize, m: usize) -> Result<Self> {
        if n == 0 || n > MAX_INDEP {
            return Err(Error::Unsupported(format!(
                "number of independent variables must be between 1 and {MAX_INDEP}"
            )));
        }
        Ok(Diffiety::build("contact", n, vec![Dependent::Free; m], Vec::new(), AssumptionSet::new()))
    }

    /// Adds first-integral coordinates `t` with `D_i t = 0`, so `dt ∈ Ω₀`.
    pub fn with_first_integrals(&self, names: &[&str]) -> Self {
        let mut integrals = self.chart.integrals.clone();
        integrals.extend(names.iter().map(|n| Coordinate::plain(n)));
        Diffiety::build(
            &self.name,
            self.chart.n,
            self.chart.deps.clone(),
            integrals,
            self.assumptions.clone(),
        )
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_assumptions(mut self, a: AssumptionSet) -> Self {
        self.assumptions = a;
        self
    }

    /// The diffiety of a resolved underdetermined ODE system.
    pub fn from_resolved_ode(spec: &OdeSystem) -> Result<Self> {
        let m = spec.dependents;
        if m == 0 {
            return Err(Error::NotResolved("no dependent variables".into()));
        }
        let mut deps = vec![Dependent::Free; m];
        for eq in &spec.equations {
            if eq.dep == 0 || eq.dep > m {
                return Err(Error::NotResolved(format!("unknown dependent index {}", eq.dep)));
            }
            if eq.order == 0 {
                return Err(Error::NotResolved(format!(
                    "equation for dependent {} has order zero",
                    eq.dep
                )));
            }
            if deps[eq.dep - 1] != Dependent::Free {
                return Err(Error::NotResolved(format!(
                    "dependent {} is resolved twice",
                    eq.dep
                )));
            }
            deps[eq.dep - 1] = Dependent::Resolved {
                order: eq.order,
                rhs: eq.rhs.clone(),
            };
        }
        let probe = Chart {
            n: 1,
            deps: deps.clone(),
            integrals: Vec::new(),
        };
        for eq in &spec.equations {
            for c in eq.rhs.coordinates() {
                if !probe.contains(&c) {
                    return Err(Error::EliminatedReference {
                        dep: eq.dep,
                        coord: c.to_string(),
                    });
                }
            }
        }
        let name = if spec.name.is_empty() { "system" } else { &spec.name };
        Ok(Diffiety::build(name, 1, deps, Vec::new(), spec.assumptions.clone()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of independent variables.
    pub fn n(&self) -> usize {
        self.chart.n
    }

    /// Number of dependent variables.
    pub fn m(&self) -> usize {
        self.chart.deps.len()
    }

    pub fn dependents(&self) -> &[Dependent] {
        &self.chart.deps
    }

    pub fn first_integrals(&self) -> &[Coordinate] {
        &self.chart.integrals
    }

    pub fn assumptions(&self) -> &AssumptionSet {
        &self.assumptions
    }

    /// The `i`-th independent variable (0-based).
    pub fn indep(&self, i: usize) -> Coordinate {
        if self.chart.n == 1 {
            Coordinate::x()
        } else {
            Coordinate::xi(i + 1)
        }
    }

    pub fn indeps(&self) -> Vec<Coordinate> {
        (0..self.chart.n).map(|i| self.indep(i)).collect()
    }

    /// The total derivative `D_i` (0-based).
    pub fn total(&self, i: usize) -> &VectorField {
        &self.totals[i]
    }

    pub fn totals(&self) -> &[VectorField] {
        &self.totals
    }

    /// The total derivative of a single-variable chart.
    pub fn d(&self) -> &VectorField {
        &self.totals[0]
    }

    pub fn contains(&self, c: &Coordinate) -> bool {
        self.chart.contains(c)
    }

    /// Non-independent coordinates of order at most `l`, in chart order.
    pub fn coordinates_at_level(&self, l: usize) -> Vec<Coordinate> {
        let mut out: Vec<Coordinate> = self.chart.integrals.clone();
        for (idx, dep) in self.chart.deps.iter().enumerate() {
            let j = idx + 1;
            match dep {
                Dependent::Free => {
                    for k in 0..=l {
                        for a in JetIndex::all_of_order(self.chart.n, k) {
                            out.push(Coordinate::jet(j, a));
                        }
                    }
                }
                Dependent::Resolved { order, .. } => {
                    for s in 0..(*order).min(l + 1) {
                        out.push(Coordinate::w(j, s));
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Level of a chart coordinate: its jet order.
    pub fn coordinate_level(&self, c: &Coordinate) -> usize {
        c.jet_order()
    }

    /// The natural generator `ω_c = dc − Σ D_i(c) dx_i`.
    pub fn natural_form(&self, c: &Coordinate) -> Result<OneForm> {
        let mut f = OneForm::d(c.clone());
        for i in 0..self.chart.n {
            let dc = self.totals[i].coeff(c)?;
            f.add_term(self.indep(i), -dc);
        }
        Ok(f)
    }

    /// Natural generators of level `l`.
    pub fn natural_level(&self, l: usize) -> Result<Vec<OneForm>> {
        self.coordinates_at_level(l)
            .iter()
            .map(|c| self.natural_form(c))
            .collect()
    }

    /// Generator list of level `l` paired with their unit pivot coordinates.
    pub fn natural_rows(&self, l: usize) -> Result<Vec<(Coordinate, OneForm)>> {
        self.coordinates_at_level(l)
            .into_iter()
            .map(|c| {
                let f = self.natural_form(&c)?;
                Ok((c, f))
            })
            .collect()
    }

    /// Total derivative of a function along `D_i`.
    pub fn total_derivative(&self, i: usize, f: &Expr) -> Result<Expr> {
        Ok(self.totals[i].apply(f)?)
    }

    /// Iterated total derivative `D^k f` for single-variable charts.
    pub fn total_power(&self, f: &Expr, k: usize) -> Result<Expr> {
        let mut cur = f.clone();
        for _ in 0..k {
            cur = self.totals[0].apply(&cur)?;
        }
        Ok(cur)
    }

    /// Rewrites an expression on the ambient jet space of the same variables
    /// into chart coordinates, replacing eliminated jets `w^j_s` (`s ≥ order`)
    /// by total derivatives of the resolved right-hand sides.
    pub fn internalize(&self, e: &Expr) -> Result<Expr> {
        let mut map = BTreeMap::new();
        for c in e.coordinates() {
            if let Some((j, s, false)) = c.as_single_jet() {
                if let Some(Dependent::Resolved { order, rhs }) = self.chart.deps.get(j - 1) {
                    if s >= *order {
                        map.insert(c.clone(), self.total_power(rhs, s - order)?);
                    }
                }
            }
        }
        Ok(e.substitute(&map))
    }

    /// Eliminated jets for every resolved dependent up to order `top`: the map
    /// from ambient coordinates to chart expressions.
    pub fn elimination_map(&self, top: usize) -> Result<BTreeMap<Coordinate, Expr>> {
        let mut map = BTreeMap::new();
        for (idx, dep) in self.chart.deps.iter().enumerate() {
            if let Dependent::Resolved { order, rhs } = dep {
                let mut cur = rhs.clone();
                for s in *order..=top.max(*order) {
                    map.insert(Coordinate::w(idx + 1, s), cur.clone());
                    cur = self.totals[0].apply(&cur)?;
                }
            }
        }
        Ok(map)
    }
}

/// Ambient total derivative on the contact chart with `n` independent variables.
pub fn ambient_total(i: usize, n: usize, e: &Expr) -> std::result::Result<Expr, FieldError> {
    let mut acc = Expr::zero();
    for c in e.coordinates() {
        let d = e.diff(&c);
        let coeff = match &c {
            Coordinate::Indep { bar: false, index } => {
                let k = if n == 1 { 0 } else { i + 1 };
                if *index as usize == k {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Coordinate::Jet { bar: false, dep, order } => {
                Expr::coord(Coordinate::jet(*dep as usize, order.raised(i)))
            }
            _ => Expr::zero(),
        };
        acc = acc + coeff * d;
    }
    Ok(acc)
}
