//! Differential 1-forms and 2-forms with symbolic coefficients, vector fields
//! given by coefficient rules, and the Cartan calculus connecting them.

mod field;
mod forms;

pub use field::{CoeffRule, FieldError, VectorField};
pub use forms::{write_combination, OneForm, TwoForm};

use crate::symkernel::Expr;

/// The differential `df = Σ ∂f/∂c dc`.
pub fn d_fun(f: &Expr) -> OneForm {
    OneForm::from_terms(f.coordinates().into_iter().map(|c| {
        let d = f.diff(&c);
        (c, d)
    }))
}

/// Exterior derivative `d(Σ f_c dc) = Σ df_c ∧ dc`.
pub fn exterior_d(phi: &OneForm) -> TwoForm {
    let mut out = TwoForm::zero();
    for (c, f) in phi.terms() {
        for (a, g) in d_fun(f).terms() {
            out.add_term(a.clone(), c.clone(), g.clone());
        }
    }
    out
}

/// The pairing `φ(Z) = Σ φ_c Z(c)`.
pub fn contract(z: &VectorField, phi: &OneForm) -> Result<Expr, FieldError> {
    let mut acc = Expr::zero();
    for (c, f) in phi.terms() {
        let zc = z.coeff(c)?;
        if !zc.is_zero() {
            acc = acc + f * zc;
        }
    }
    Ok(acc)
}

/// Interior product `Z⌟β` of a 2-form.
pub fn contract2(z: &VectorField, beta: &TwoForm) -> Result<OneForm, FieldError> {
    let mut out = OneForm::zero();
    for ((a, b), f) in beta.terms() {
        let za = z.coeff(a)?;
        let zb = z.coeff(b)?;
        if !za.is_zero() {
            out.add_term(b.clone(), f * &za);
        }
        if !zb.is_zero() {
            out.add_term(a.clone(), -(f * &zb));
        }
    }
    Ok(out)
}

/// Evaluates a 2-form on a pair of fields.
pub fn eval2(beta: &TwoForm, x: &VectorField, y: &VectorField) -> Result<Expr, FieldError> {
    let mut acc = Expr::zero();
    for ((a, b), f) in beta.terms() {
        let t = x.coeff(a)? * y.coeff(b)? - x.coeff(b)? * y.coeff(a)?;
        if !t.is_zero() {
            acc = acc + f * t;
        }
    }
    Ok(acc)
}

/// Lie derivative `L_Z φ = Z⌟dφ + d(Z⌟φ)`.
pub fn lie_derivative(z: &VectorField, phi: &OneForm) -> Result<OneForm, FieldError> {
    let a = contract2(z, &exterior_d(phi))?;
    let b = d_fun(&contract(z, phi)?);
    Ok(a.add(&b))
}

/// Iterated Lie derivative `L_Z^k φ`.
pub fn lie_power(z: &VectorField, phi: &OneForm, k: usize) -> Result<OneForm, FieldError> {
    let mut cur = phi.clone();
    for _ in 0..k {
        cur = lie_derivative(z, &cur)?;
    }
    Ok(cur)
}

/// Lie bracket `[X, Y]`, evaluated coefficient by coefficient on request.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    VectorField::bracket(x, y)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::symkernel::{w, x, Coordinate};

    fn f_of(e: Expr) -> Expr {
        Expr::func("F", vec![e])
    }

    fn fp(e: Expr) -> Expr {
        Expr::func_deriv("F", vec![1], vec![e])
    }

    #[test]
    fn differential_of_linear_combination() {
        let a = Expr::param("A");
        let df = d_fun(&(w(1, 0) - &a * w(2, 0)));
        assert_eq!(df.coeff(&Coordinate::w(1, 0)), Expr::one());
        assert_eq!(df.coeff(&Coordinate::w(2, 0)), -a);
        assert!(d_fun(&Expr::int(5)).is_zero());
        assert_eq!(d_fun(&f_of(w(2, 1))), OneForm::term(Coordinate::w(2, 1), fp(w(2, 1))));
    }

    #[test]
    fn exterior_derivative_of_contact_form() {
        let omega = OneForm::d(Coordinate::w(1, 0)).sub(&OneForm::term(Coordinate::x(), f_of(w(2, 1))));
        let mut expected = TwoForm::zero();
        expected.add_term(Coordinate::w(2, 1), Coordinate::x(), -fp(w(2, 1)));
        assert_eq!(exterior_d(&omega), expected);
        let t = OneForm::term(Coordinate::x(), w(2, 1));
        let mut e2 = TwoForm::zero();
        e2.add_term(Coordinate::w(2, 1), Coordinate::x(), Expr::one());
        assert_eq!(exterior_d(&t), e2);
    }

    #[test]
    fn d_squared_vanishes() {
        let f = f_of(x() * w(1, 0)) * w(2, 3) + w(1, 1).pow(3) / (x() + Expr::one());
        assert!(exterior_d(&d_fun(&f)).is_zero());
    }

    #[test]
    fn bracket_with_itself_vanishes() {
        let mut m = BTreeMap::new();
        m.insert(Coordinate::x(), w(1, 0));
        m.insert(Coordinate::w(1, 0), x() * x());
        let z = VectorField::finite("Z", m);
        let b = lie_bracket(&z, &z);
        assert!(b.coeff(&Coordinate::x()).unwrap().is_zero());
        assert!(b.coeff(&Coordinate::w(1, 0)).unwrap().is_zero());
    }

    #[test]
    fn partial_fields_report_undefined() {
        let z = VectorField::partial_field("Z", BTreeMap::new());
        assert!(z.coeff(&Coordinate::x()).is_err());
        assert!(contract(&z, &OneForm::zero()).unwrap().is_zero());
    }
}
