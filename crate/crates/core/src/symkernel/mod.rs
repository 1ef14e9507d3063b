//! Exact symbolic expressions over a chart of coordinates.
//!
//! Expressions are rational functions with rational coefficients in
//! coordinates, opaque function symbols (with formal derivatives) and formal
//! antiderivatives. They are kept in a canonical form, so equality and zero
//! testing are structural.

mod assume;
mod coordinate;
mod expr;
mod poly;
mod term;

pub use assume::{
    parse_case_path, AssumeError, AssumptionSet, Branch, CaseContext, CaseError, ForkRecord,
    Nonvanishing,
};
pub use coordinate::{Coordinate, JetIndex, MAX_INDEP};
pub use expr::{is_nonzero_constant, q, w, x, Expr};
pub use poly::{gcd, Atom, AtomKind, Monomial, Poly};
pub use term::{eval_expr, eval_numeric, EvalError, Interpretation, PolyInterp, Term};

/// Canonical form of a term.
pub fn normalize(t: &Term) -> Expr {
    t.normalize()
}

/// Partial derivative of `e` with respect to `c`.
pub fn diff_partial(e: &Expr, c: &Coordinate) -> Expr {
    e.diff(c)
}

/// Zero test on the normal form. Assumptions only matter for pivot decisions,
/// never for declaring a nonzero normal form zero.
pub fn is_zero(e: &Expr, _assumptions: &AssumptionSet) -> bool {
    e.is_zero()
}
