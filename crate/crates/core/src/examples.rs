//! Ready-made diffieties used by tests, the acceptance suite and the CLI.

use crate::diffiety::{Diffiety, OdeSystem, ResolvedEquation};
use crate::symkernel::{w, x, AssumptionSet, Expr};

/// The contact diffiety of curves with `m` dependent variables.
pub fn contact(m: usize) -> Diffiety {
    Diffiety::contact(m)
}

/// `F'` for the opaque function of [`example4`].
pub fn example4_fprime() -> Expr {
    Expr::func_deriv("F", vec![1], vec![w(2, 1)])
}

/// `dw¹/dx = F(dw²/dx)` with `DF' = F''·w²_2 ≠ 0`.
pub fn example4() -> Diffiety {
    let mut a = AssumptionSet::new();
    a.insert(Expr::func_deriv("F", vec![2], vec![w(2, 1)]) * w(2, 2))
        .expect("nonzero assumption");
    ode("example4", 2, Expr::func("F", vec![w(2, 1)]), a)
}

/// `dw¹/dx = A·dw²/dx + B` with constant parameters `A`, `B`.
pub fn example4_singular() -> Diffiety {
    let rhs = Expr::param("A") * w(2, 1) + Expr::param("B");
    ode("example4-singular", 2, rhs, AssumptionSet::new())
}

/// The arguments `x, w¹_0, …, w^m_0` of the right-hand side of [`example5`].
pub fn example5_args(m: usize) -> Vec<Expr> {
    let mut args = vec![x()];
    args.extend((1..=m).map(|j| w(j, 0)));
    args
}

/// `F^j = ∂F/∂w^j_0` for [`example5`].
pub fn example5_partial(m: usize, j: usize) -> Expr {
    let mut d = vec![0; m + 1];
    d[j] = 1;
    Expr::func_deriv("F", d, example5_args(m))
}

/// `dw¹/dx = F(x, w¹, …, w^m)` with `∂F/∂w^m ≠ 0`.
pub fn example5(m: usize) -> Diffiety {
    let mut a = AssumptionSet::new();
    a.insert(example5_partial(m, m)).expect("nonzero assumption");
    ode("example5", m, Expr::func("F", example5_args(m)), a)
}

fn ode(name: &str, m: usize, rhs: Expr, assumptions: AssumptionSet) -> Diffiety {
    Diffiety::from_resolved_ode(&OdeSystem {
        name: name.into(),
        dependents: m,
        equations: vec![ResolvedEquation { dep: 1, order: 1, rhs }],
        assumptions,
    })
    .expect("resolved example")
}
