//! Raw expression trees and the floating-point evaluation oracle.
//!
//! A [`Term`] keeps the shape it was built with; [`Term::normalize`] turns it
//! into a canonical [`Expr`]. Evaluation works on terms directly, so comparing
//! the value of a term with the value of its normal form checks the normalizer
//! against an independent computation.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::coordinate::Coordinate;
use super::expr::Expr;
use super::poly::{AtomKind, Poly};

/// An unnormalized expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Num(BigRational),
    Coord(Coordinate),
    Func {
        name: String,
        derivs: Vec<u16>,
        args: Vec<Term>,
    },
    Integral {
        integrand: Box<Term>,
        var: Coordinate,
    },
    Add(Vec<Term>),
    Mul(Vec<Term>),
    Pow(Box<Term>, i32),
}

impl Term {
    pub fn int(n: i64) -> Term {
        Term::Num(BigRational::from_integer(n.into()))
    }

    pub fn coord(c: Coordinate) -> Term {
        Term::Coord(c)
    }

    pub fn func(name: &str, args: Vec<Term>) -> Term {
        Term::Func {
            name: name.to_string(),
            derivs: vec![0; args.len()],
            args,
        }
    }

    pub fn neg(t: Term) -> Term {
        Term::Mul(vec![Term::int(-1), t])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Add(vec![a, Term::neg(b)])
    }

    pub fn div(a: Term, b: Term) -> Term {
        Term::Mul(vec![a, Term::Pow(Box::new(b), -1)])
    }

    /// Canonical form. Panics on a division by a term that normalizes to zero.
    pub fn normalize(&self) -> Expr {
        match self {
            Term::Num(q) => Expr::rational(q.clone()),
            Term::Coord(c) => Expr::coord(c.clone()),
            Term::Func { name, derivs, args } => {
                Expr::func_deriv(name, derivs.clone(), args.iter().map(Term::normalize).collect())
            }
            Term::Integral { integrand, var } => Expr::integral(integrand.normalize(), var.clone()),
            Term::Add(ts) => ts.iter().map(Term::normalize).sum(),
            Term::Mul(ts) => ts.iter().fold(Expr::one(), |acc, t| acc * t.normalize()),
            Term::Pow(b, e) => b.normalize().pow(*e),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Num(q) => write!(f, "({q})"),
            Term::Coord(c) => write!(f, "{c}"),
            Term::Func { name, derivs, args } => {
                let a: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                write!(f, "{name}{derivs:?}({})", a.join(", "))
            }
            Term::Integral { integrand, var } => write!(f, "Int({integrand}, {var})"),
            Term::Add(ts) => {
                let a: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", a.join(" + "))
            }
            Term::Mul(ts) => {
                let a: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", a.join(" * "))
            }
            Term::Pow(b, e) => write!(f, "({b})^({e})"),
        }
    }
}

impl Expr {
    /// Converts the canonical form back into a tree.
    pub fn to_term(&self) -> Term {
        fn poly_term(p: &Poly) -> Term {
            let mut sum = Vec::new();
            for (m, c) in p.terms() {
                let mut prod = vec![Term::Num(c.clone())];
                for (a, e) in m.factors() {
                    let base = match a.kind() {
                        AtomKind::Coord(c) => Term::Coord(c.clone()),
                        AtomKind::Func { name, derivs, args } => Term::Func {
                            name: name.to_string(),
                            derivs: derivs.clone(),
                            args: args.iter().map(Expr::to_term).collect(),
                        },
                        AtomKind::Integral { integrand, var } => Term::Integral {
                            integrand: Box::new(integrand.to_term()),
                            var: var.clone(),
                        },
                    };
                    prod.push(if *e == 1 { base } else { Term::Pow(Box::new(base), *e as i32) });
                }
                sum.push(Term::Mul(prod));
            }
            Term::Add(sum)
        }
        let n = poly_term(self.num());
        if self.den().is_one() {
            n
        } else {
            Term::div(n, poly_term(self.den()))
        }
    }
}

/// Evaluation failures.
#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound coordinate {0}")]
    Unbound(String),
    #[error("no numeric interpretation for symbol {0}")]
    UnboundSymbol(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// Numeric interpretation of opaque symbols and their formal derivatives.
pub trait Interpretation {
    fn eval_func(&self, name: &str, derivs: &[u16], args: &[f64]) -> Result<f64, EvalError>;

    /// Value of a formal antiderivative; unsupported by default.
    fn eval_integral(&self, integrand: &Term, var: &Coordinate) -> Result<f64, EvalError> {
        let _ = var;
        Err(EvalError::UnboundSymbol(format!("Int({integrand})")))
    }
}

/// Interpretation of every symbol as a polynomial in its arguments, so formal
/// derivatives have exact closed-form values.
#[derive(Clone, Debug, Default)]
pub struct PolyInterp {
    /// Per symbol: list of (coefficient, exponent per argument).
    pub symbols: BTreeMap<String, Vec<(f64, Vec<u32>)>>,
}

impl PolyInterp {
    pub fn new() -> Self {
        PolyInterp::default()
    }

    pub fn with(mut self, name: &str, terms: Vec<(f64, Vec<u32>)>) -> Self {
        self.symbols.insert(name.to_string(), terms);
        self
    }
}

fn falling(e: u32, k: u16) -> f64 {
    let mut acc = 1.0;
    for i in 0..k as u32 {
        if i >= e {
            return 0.0;
        }
        acc *= (e - i) as f64;
    }
    acc
}

impl Interpretation for PolyInterp {
    fn eval_func(&self, name: &str, derivs: &[u16], args: &[f64]) -> Result<f64, EvalError> {
        let terms = self
            .symbols
            .get(name)
            .ok_or_else(|| EvalError::UnboundSymbol(name.to_string()))?;
        let mut total = 0.0;
        for (c, exps) in terms {
            let mut v = *c;
            for (i, &a) in args.iter().enumerate() {
                let e = exps.get(i).copied().unwrap_or(0);
                let k = derivs[i];
                let f = falling(e, k);
                if f == 0.0 {
                    v = 0.0;
                    break;
                }
                v *= f * a.powi((e - k as u32) as i32);
            }
            total += v;
        }
        Ok(total)
    }
}

/// Evaluates a term at a rational point.
pub fn eval_numeric(
    t: &Term,
    point: &BTreeMap<Coordinate, BigRational>,
    interp: &dyn Interpretation,
) -> Result<f64, EvalError> {
    match t {
        Term::Num(q) => Ok(q.to_f64().unwrap_or(f64::NAN)),
        Term::Coord(c) => point
            .get(c)
            .map(|q| q.to_f64().unwrap_or(f64::NAN))
            .ok_or_else(|| EvalError::Unbound(c.to_string())),
        Term::Func { name, derivs, args } => {
            let vals = args
                .iter()
                .map(|a| eval_numeric(a, point, interp))
                .collect::<Result<Vec<_>, _>>()?;
            interp.eval_func(name, derivs, &vals)
        }
        Term::Integral { integrand, var } => interp.eval_integral(integrand, var),
        Term::Add(ts) => ts.iter().try_fold(0.0, |acc, t| Ok(acc + eval_numeric(t, point, interp)?)),
        Term::Mul(ts) => ts.iter().try_fold(1.0, |acc, t| Ok(acc * eval_numeric(t, point, interp)?)),
        Term::Pow(b, e) => {
            let v = eval_numeric(b, point, interp)?;
            if *e < 0 && v == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            Ok(v.powi(*e))
        }
    }
}

/// Evaluates a canonical expression through its tree form.
pub fn eval_expr(
    e: &Expr,
    point: &BTreeMap<Coordinate, BigRational>,
    interp: &dyn Interpretation,
) -> Result<f64, EvalError> {
    eval_numeric(&e.to_term(), point, interp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::expr::{q, w, x};

    #[test]
    fn evaluates_affine() {
        let t = Term::Add(vec![Term::Mul(vec![Term::int(2), Term::coord(Coordinate::x())]), Term::int(1)]);
        let mut p = BTreeMap::new();
        p.insert(Coordinate::x(), q(3, 1));
        assert_eq!(eval_numeric(&t, &p, &PolyInterp::new()).unwrap(), 7.0);
    }

    #[test]
    fn derivative_interpretation() {
        let e = Expr::func_deriv("F", vec![1], vec![w(2, 1)]);
        let interp = PolyInterp::new().with("F", vec![(1.0, vec![2])]);
        let mut p = BTreeMap::new();
        p.insert(Coordinate::w(2, 1), q(2, 1));
        assert_eq!(eval_expr(&e, &p, &interp).unwrap(), 4.0);
    }

    #[test]
    fn errors_reported() {
        let p = BTreeMap::new();
        assert_eq!(
            eval_expr(&x(), &p, &PolyInterp::new()),
            Err(EvalError::Unbound("x".into()))
        );
        let t = Term::Pow(Box::new(Term::int(0)), -1);
        assert_eq!(eval_numeric(&t, &p, &PolyInterp::new()), Err(EvalError::DivisionByZero));
    }
}
