//! Nonvanishing assumptions and case forks on undecidable pivots.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::expr::Expr;
use super::poly::{gcd, Atom, Poly};

/// Outcome of asking whether an expression vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonvanishing {
    Zero,
    NonZero,
    Unknown,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssumeError {
    #[error("assumption {0} normalizes to zero")]
    ZeroAssumption(String),
}

/// A set of expressions declared nonvanishing.
///
/// Stored as a factor base: numerator atoms plus pairwise coprime polynomial
/// factors. An expression is certified nonzero when its numerator is a
/// constant times a product of base elements.
#[derive(Clone, Debug, Default)]
pub struct AssumptionSet {
    declared: Vec<Expr>,
    atoms: BTreeSet<Atom>,
    factors: Vec<Poly>,
}

impl AssumptionSet {
    pub fn new() -> Self {
        AssumptionSet::default()
    }

    /// Declares `e` nonvanishing.
    pub fn insert(&mut self, e: Expr) -> Result<(), AssumeError> {
        if e.is_zero() {
            return Err(AssumeError::ZeroAssumption(e.to_string()));
        }
        if self.declared.contains(&e) {
            return Ok(());
        }
        for part in [e.num().clone(), e.den().clone()] {
            let m = part.monomial_content();
            for (a, _) in m.factors() {
                self.atoms.insert(a.clone());
            }
            let rest = part
                .div_exact(&Poly::monomial(m, num_traits::One::one()))
                .expect("monomial content divides");
            self.add_factor(rest);
        }
        self.declared.push(e);
        Ok(())
    }

    fn add_factor(&mut self, p: Poly) {
        let mut p = p.monic();
        if p.as_constant().is_some() {
            return;
        }
        let mut i = 0;
        while i < self.factors.len() {
            let g = gcd(&p, &self.factors[i]);
            if g.as_constant().is_some() {
                i += 1;
                continue;
            }
            let old = self.factors.remove(i);
            let rest = old.div_exact(&g).expect("gcd divides");
            p = p.div_exact(&g).expect("gcd divides").monic();
            self.factors.push(g);
            if rest.as_constant().is_none() {
                self.factors.push(rest.monic());
            }
            if p.as_constant().is_some() {
                return;
            }
            i = 0;
        }
        self.factors.push(p);
    }

    pub fn declared(&self) -> &[Expr] {
        &self.declared
    }

    pub fn is_empty(&self) -> bool {
        self.declared.is_empty()
    }

    /// Decides whether `e` vanishes as far as the assumptions allow.
    pub fn classify(&self, e: &Expr) -> Nonvanishing {
        if e.is_zero() {
            return Nonvanishing::Zero;
        }
        let p = e.num();
        if p.as_constant().is_some() {
            return Nonvanishing::NonZero;
        }
        let m = p.monomial_content();
        if m.factors().iter().any(|(a, _)| !self.atoms.contains(a)) {
            return Nonvanishing::Unknown;
        }
        let mut rest = p
            .div_exact(&Poly::monomial(m, num_traits::One::one()))
            .expect("monomial content divides");
        let mut progress = true;
        while rest.as_constant().is_none() && progress {
            progress = false;
            for f in &self.factors {
                if let Some(q) = rest.div_exact(f) {
                    rest = q;
                    progress = true;
                }
            }
        }
        if rest.as_constant().is_some() {
            Nonvanishing::NonZero
        } else {
            Nonvanishing::Unknown
        }
    }

    /// Zero test on the normal form.
    pub fn is_zero(&self, e: &Expr) -> bool {
        e.is_zero()
    }
}

/// Which branch of a case split to follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Branch {
    NonZero,
    Zero,
}

impl Branch {
    pub fn code(self) -> char {
        match self {
            Branch::NonZero => 'n',
            Branch::Zero => 'z',
        }
    }
}

/// Parses a fork path such as `"nnz"`.
pub fn parse_case_path(s: &str) -> Option<Vec<Branch>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',' && *c != '/')
        .map(|c| match c {
            'n' | 'N' => Some(Branch::NonZero),
            'z' | 'Z' => Some(Branch::Zero),
            _ => None,
        })
        .collect()
}

/// A pivot that could not be decided and the branch that was followed.
#[derive(Clone, Debug, PartialEq)]
pub struct ForkRecord {
    pub pivot: Expr,
    pub taken: Branch,
    pub site: String,
}

impl fmt::Display for ForkRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = match self.taken {
            Branch::NonZero => "assumed nonzero",
            Branch::Zero => "assumed zero",
        };
        write!(f, "{}: {} {}", self.site, self.pivot, b)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("case branch with vanishing pivot {pivot} at {site} requires a specialized system")]
    ZeroBranch { pivot: String, site: String },
}

/// Assumptions plus the record of case forks taken during a computation.
#[derive(Clone, Debug, Default)]
pub struct CaseContext {
    assumptions: AssumptionSet,
    path: Vec<Branch>,
    forks: Vec<ForkRecord>,
}

impl CaseContext {
    pub fn new(assumptions: AssumptionSet) -> Self {
        CaseContext {
            assumptions,
            path: Vec::new(),
            forks: Vec::new(),
        }
    }

    /// Follows `path` at successive forks; forks beyond it take the nonzero branch.
    pub fn with_path(mut self, path: Vec<Branch>) -> Self {
        self.path = path;
        self
    }

    pub fn assumptions(&self) -> &AssumptionSet {
        &self.assumptions
    }

    pub fn forks(&self) -> &[ForkRecord] {
        &self.forks
    }

    pub fn classify(&self, e: &Expr) -> Nonvanishing {
        self.assumptions.classify(e)
    }

    /// Decides a pivot, forking if the assumptions cannot.
    ///
    /// Returns `Ok(false)` only for the formal zero. Undecided pivots follow the
    /// requested path; the zero branch is reported as an error because the
    /// specialized system is not constructed automatically.
    pub fn decide_nonzero(&mut self, e: &Expr, site: &str) -> Result<bool, CaseError> {
        match self.assumptions.classify(e) {
            Nonvanishing::Zero => Ok(false),
            Nonvanishing::NonZero => Ok(true),
            Nonvanishing::Unknown => {
                let taken = self.path.get(self.forks.len()).copied().unwrap_or(Branch::NonZero);
                self.forks.push(ForkRecord {
                    pivot: e.clone(),
                    taken,
                    site: site.to_string(),
                });
                match taken {
                    Branch::NonZero => {
                        self.assumptions
                            .insert(e.clone())
                            .expect("nonzero expression accepted");
                        Ok(true)
                    }
                    Branch::Zero => Err(CaseError::ZeroBranch {
                        pivot: e.to_string(),
                        site: site.to_string(),
                    }),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::expr::{w, x};

    fn fpp() -> Expr {
        Expr::func_deriv("F", vec![2], vec![w(2, 1)])
    }

    #[test]
    fn product_assumption_certifies_factors() {
        let mut a = AssumptionSet::new();
        a.insert(fpp() * w(2, 2)).unwrap();
        assert_eq!(a.classify(&(fpp() * w(2, 2))), Nonvanishing::NonZero);
        assert_eq!(a.classify(&w(2, 2)), Nonvanishing::NonZero);
        assert_eq!(a.classify(&(Expr::int(3) * fpp().pow(2))), Nonvanishing::NonZero);
        assert_eq!(a.classify(&w(2, 1)), Nonvanishing::Unknown);
    }

    #[test]
    fn polynomial_factors_refine() {
        let mut a = AssumptionSet::new();
        let f = x() + Expr::one();
        let g = w(1, 0) + Expr::one();
        a.insert(&f * &g).unwrap();
        a.insert(f.clone()).unwrap();
        assert_eq!(a.classify(&g), Nonvanishing::NonZero);
        assert_eq!(a.classify(&(&f * &f * &g)), Nonvanishing::NonZero);
    }

    #[test]
    fn zero_assumption_rejected() {
        let mut a = AssumptionSet::new();
        assert!(a.insert(x() - x()).is_err());
    }

    #[test]
    fn forks_follow_path() {
        let mut ctx = CaseContext::new(AssumptionSet::new());
        assert!(ctx.decide_nonzero(&x(), "test").unwrap());
        assert_eq!(ctx.forks().len(), 1);
        assert!(ctx.decide_nonzero(&x(), "test").unwrap());
        assert_eq!(ctx.forks().len(), 1);
        let mut z = CaseContext::new(AssumptionSet::new()).with_path(vec![Branch::Zero]);
        assert!(z.decide_nonzero(&x(), "test").is_err());
        assert_eq!(parse_case_path("nz"), Some(vec![Branch::NonZero, Branch::Zero]));
    }
}
