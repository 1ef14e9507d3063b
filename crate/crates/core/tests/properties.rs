use std::collections::BTreeMap;

use diffiety_core::diffiety::{member_by_reduction, member_test, Diffiety, Membership};
use diffiety_core::examples;
use diffiety_core::geometry::{contract, d_fun, exterior_d, lie_bracket, lie_derivative, OneForm, VectorField};
use diffiety_core::standard::standard_basis;
use diffiety_core::symkernel::{eval_expr, eval_numeric, AssumptionSet, CaseContext, Coordinate, Expr, PolyInterp, Term};
use diffiety_core::symmetry::{decompose_variation, verify_variation, Morphism, VariationData, VariationFrame};
use num_rational::BigRational;
use proptest::prelude::*;

const REL_TOL: f64 = 1e-9;

fn coords() -> Vec<Coordinate> {
    vec![
        Coordinate::x(),
        Coordinate::w(1, 0),
        Coordinate::w(1, 1),
        Coordinate::w(2, 0),
        Coordinate::w(2, 1),
    ]
}

fn interp() -> PolyInterp {
    PolyInterp::new()
        .with("F", vec![(1.0, vec![3]), (-2.0, vec![1]), (0.5, vec![0])])
        .with("G", vec![(1.0, vec![1, 2]), (3.0, vec![2, 0])])
}

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        (-5i64..=5).prop_map(Term::int),
        (0..5usize).prop_map(|i| Term::coord(coords()[i].clone())),
    ]
}

fn term() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Term::Add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Term::Mul),
            (inner.clone(), 1i32..3).prop_map(|(t, e)| Term::Pow(Box::new(t), e)),
            inner.clone().prop_map(|t| Term::func("F", vec![t])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::func("G", vec![a, b])),
            (inner.clone(), inner).prop_map(|(a, b)| {
                let den = Term::Add(vec![Term::int(1), Term::Pow(Box::new(b), 2)]);
                Term::div(a, den)
            }),
        ]
    })
}

/// Reverses every sum and product.
fn shuffle(t: &Term) -> Term {
    match t {
        Term::Add(ts) => Term::Add(ts.iter().rev().map(shuffle).collect()),
        Term::Mul(ts) => Term::Mul(ts.iter().rev().map(shuffle).collect()),
        Term::Pow(b, e) => Term::Pow(Box::new(shuffle(b)), *e),
        Term::Func { name, derivs, args } => Term::Func {
            name: name.clone(),
            derivs: derivs.clone(),
            args: args.iter().map(shuffle).collect(),
        },
        other => other.clone(),
    }
}

fn point() -> impl Strategy<Value = BTreeMap<Coordinate, BigRational>> {
    prop::collection::vec((-9i64..=9, 1i64..=4), 5).prop_map(|v| {
        coords()
            .into_iter()
            .zip(v)
            .map(|(c, (n, d))| (c, BigRational::new(n.into(), d.into())))
            .collect()
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// A polynomial from `(coefficient, exponents)` monomials over `coords()`.
fn poly(monos: &[(i64, Vec<u8>)]) -> Expr {
    let cs = coords();
    monos.iter().fold(Expr::zero(), |acc, (k, ex)| {
        let m = cs
            .iter()
            .zip(ex)
            .fold(Expr::int(*k), |m, (c, &e)| m * Expr::coord(c.clone()).pow(e as i32));
        acc + m
    })
}

fn polynomial() -> impl Strategy<Value = Expr> {
    prop::collection::vec((-4i64..=4, prop::collection::vec(0u8..3, 5)), 1..5).prop_map(|m| poly(&m))
}

fn one_form() -> impl Strategy<Value = OneForm> {
    prop::collection::vec((0..5usize, polynomial()), 1..4)
        .prop_map(|ts| OneForm::from_terms(ts.into_iter().map(|(i, e)| (coords()[i].clone(), e))))
}

fn finite_field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec((0..5usize, polynomial()), 1..4).prop_map(|ts| {
        let mut m = BTreeMap::new();
        for (i, e) in ts {
            m.insert(coords()[i].clone(), e);
        }
        VectorField::finite("Z", m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalize_is_idempotent_and_order_blind(t in term()) {
        let e = t.normalize();
        prop_assert_eq!(e.to_term().normalize(), e.clone());
        prop_assert_eq!(shuffle(&t).normalize(), e);
    }

    #[test]
    fn partial_derivatives_commute(e in polynomial(), a in 0..5usize, b in 0..5usize) {
        let (ca, cb) = (&coords()[a], &coords()[b]);
        prop_assert_eq!(e.diff(ca).diff(cb), e.diff(cb).diff(ca));
    }

    #[test]
    fn evaluation_agrees_with_normal_form(t in term(), p in point()) {
        let i = interp();
        let direct = eval_numeric(&t, &p, &i);
        let normal = eval_expr(&t.normalize(), &p, &i);
        if let (Ok(a), Ok(b)) = (direct, normal) {
            prop_assert!(close(a, b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn zero_normal_forms_evaluate_to_zero(t in term(), p in point()) {
        let diff = Term::sub(t.clone(), shuffle(&t));
        prop_assert!(diff.normalize().is_zero());
        if let Ok(v) = eval_numeric(&diff, &p, &interp()) {
            let scale = eval_numeric(&t, &p, &interp()).map(f64::abs).unwrap_or(1.0).max(1.0);
            prop_assert!(v.abs() <= REL_TOL * scale);
        }
    }

    #[test]
    fn lie_derivative_is_a_derivation(z in finite_field(), f in polynomial(), phi in one_form()) {
        let lhs = lie_derivative(&z, &phi.scale(&f)).unwrap();
        let rhs = phi.scale(&z.apply(&f).unwrap()).add(&lie_derivative(&z, &phi).unwrap().scale(&f));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn d_squared_vanishes(f in polynomial()) {
        prop_assert!(exterior_d(&d_fun(&f)).is_zero());
        let g = Expr::func("F", vec![f.clone()]) * f;
        prop_assert!(exterior_d(&d_fun(&g)).is_zero());
    }

    #[test]
    fn membership_methods_agree(ks in prop::collection::vec(polynomial(), 3), junk in 0..3usize) {
        let om = examples::example4();
        let gens = om.natural_level(1).unwrap();
        let mut phi = gens.iter().zip(&ks).fold(OneForm::zero(), |acc, (g, k)| acc.axpy(k, g));
        if junk == 1 {
            phi = phi.add(&OneForm::d(Coordinate::x()));
        }
        let a = member_test(&phi, &om, 1).unwrap();
        let b = member_by_reduction(&phi, &om, 1).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a == Membership::Member, junk != 1);
    }
}

/// A low-degree polynomial in `x, w¹_0, w²_0`.
fn point_poly() -> impl Strategy<Value = Expr> {
    prop::collection::vec((-3i64..=3, 0u8..2, 0u8..2, 0u8..2), 1..4)
        .prop_map(|m| poly(&m.into_iter().map(|(k, a, b, c)| (k, vec![a, b, 0, c, 0])).collect::<Vec<_>>()))
}

/// A low-degree polynomial in the Example 4 chart coordinates `x, w¹_0, w²_0, w²_1`.
fn ex4_poly() -> impl Strategy<Value = Expr> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(0u8..2, 4)), 1..4).prop_map(|ms| {
        let cs = [Coordinate::x(), Coordinate::w(1, 0), Coordinate::w(2, 0), Coordinate::w(2, 1)];
        ms.into_iter().fold(Expr::zero(), |acc, (k, ex)| {
            acc + cs
                .iter()
                .zip(ex)
                .fold(Expr::int(k), |m, (c, e)| m * Expr::coord(c.clone()).pow(e as i32))
        })
    })
}

fn contact_point_map() -> impl Strategy<Value = (Expr, Expr, Expr)> {
    (point_poly(), point_poly(), point_poly())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn morphism_prolongation_rule((f, s1, s2) in contact_point_map()) {
        let om = Diffiety::contact(2);
        let mut c = CaseContext::new(AssumptionSet::new());
        let f = f + Expr::coord(Coordinate::x());
        let seeds = vec![(Coordinate::w(1, 0), s1), (Coordinate::w(2, 0), s2)];
        let Ok(m) = Morphism::new(&om, f, seeds, &mut c) else {
            return Ok(());
        };
        for g in om.natural_level(1).unwrap() {
            let lhs = m.pullback(&lie_derivative(om.d(), &g).unwrap()).unwrap().scale(m.df());
            let rhs = lie_derivative(om.d(), &m.pullback(&g).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn variation_prolongation_rule(z in ex4_poly(), p in ex4_poly()) {
        let om = examples::example4();
        let mut c = CaseContext::new(om.assumptions().clone());
        let b = standard_basis(&om, 2, 0, &mut c).unwrap();
        let frame = VariationFrame::new(&b, &om, 2, &mut c).unwrap();
        let v = VariationData { z, p: vec![p], zk: vec![] };
        let field = frame.field(&v, &om).unwrap();
        prop_assert!(verify_variation(&field, &om, 1).unwrap().is_variation);
        for g in om.natural_level(1).unwrap() {
            let lhs = contract(&field, &lie_derivative(om.d(), &g).unwrap()).unwrap();
            let rhs = om.total_derivative(0, &contract(&field, &g).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
        prop_assert_eq!(decompose_variation(&field, &b).unwrap(), v);
    }
}

#[test]
fn totals_annihilate_generators() {
    for om in [examples::contact(2), examples::example4(), examples::example5(3)] {
        for g in om.natural_level(3).unwrap() {
            for d in om.totals() {
                assert!(contract(d, &g).unwrap().is_zero(), "{g}");
            }
        }
    }
}

#[test]
fn brackets_of_h_stay_in_h() {
    for om in [examples::example4(), examples::example5(3)] {
        let y = VectorField::combination("fD", vec![(Expr::coord(Coordinate::w(2, 1)), om.d().clone())]);
        let br = lie_bracket(om.d(), &y);
        for g in om.natural_level(2).unwrap() {
            assert!(contract(&br, &g).unwrap().is_zero());
        }
    }
}

#[test]
fn level_increments_become_constant() {
    for (om, mu) in [(examples::contact(3), 3), (examples::example4(), 1), (examples::example5(4), 3)] {
        let mut c = CaseContext::new(om.assumptions().clone());
        let dims = diffiety_core::diffiety::Filtration::natural().dims(&om, 5, &mut c).unwrap();
        assert!(dims.windows(2).all(|w| w[0] <= w[1]));
        let inc: Vec<usize> = dims.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(inc[1..].iter().all(|&d| d == mu), "{inc:?}");
    }
}
