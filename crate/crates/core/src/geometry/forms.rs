use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::symkernel::{Coordinate, Expr};

/// A differential 1-form `Σ f_c dc` with finite support.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OneForm {
    coeffs: BTreeMap<Coordinate, Expr>,
}

impl OneForm {
    pub fn zero() -> Self {
        OneForm::default()
    }

    /// The coordinate differential `dc`.
    pub fn d(c: Coordinate) -> Self {
        OneForm::term(c, Expr::one())
    }

    /// The single term `e dc`.
    pub fn term(c: Coordinate, e: Expr) -> Self {
        let mut f = OneForm::zero();
        f.add_term(c, e);
        f
    }

    pub fn from_terms<I: IntoIterator<Item = (Coordinate, Expr)>>(terms: I) -> Self {
        let mut f = OneForm::zero();
        for (c, e) in terms {
            f.add_term(c, e);
        }
        f
    }

    pub fn add_term(&mut self, c: Coordinate, e: Expr) {
        if e.is_zero() {
            return;
        }
        match self.coeffs.get(&c) {
            Some(old) => {
                let s = old + &e;
                if s.is_zero() {
                    self.coeffs.remove(&c);
                } else {
                    self.coeffs.insert(c, s);
                }
            }
            None => {
                self.coeffs.insert(c, e);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `dc` (zero when absent).
    pub fn coeff(&self, c: &Coordinate) -> Expr {
        self.coeffs.get(c).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn get(&self, c: &Coordinate) -> Option<&Expr> {
        self.coeffs.get(c)
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Coordinate, &Expr)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Coordinate> {
        self.coeffs.keys()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coordinates in the support or in any coefficient.
    pub fn coordinates(&self) -> BTreeSet<Coordinate> {
        let mut s: BTreeSet<Coordinate> = self.coeffs.keys().cloned().collect();
        for e in self.coeffs.values() {
            s.extend(e.coordinates());
        }
        s
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        let mut out = self.clone();
        for (c, e) in &other.coeffs {
            out.add_term(c.clone(), e.clone());
        }
        out
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        let mut out = self.clone();
        for (c, e) in &other.coeffs {
            out.add_term(c.clone(), -e);
        }
        out
    }

    pub fn neg(&self) -> OneForm {
        OneForm {
            coeffs: self.coeffs.iter().map(|(c, e)| (c.clone(), -e)).collect(),
        }
    }

    pub fn scale(&self, k: &Expr) -> OneForm {
        if k.is_zero() {
            return OneForm::zero();
        }
        if k.is_one() {
            return self.clone();
        }
        OneForm::from_terms(self.coeffs.iter().map(|(c, e)| (c.clone(), e * k)))
    }

    /// `self + k·other`.
    pub fn axpy(&self, k: &Expr, other: &OneForm) -> OneForm {
        let mut out = self.clone();
        if k.is_zero() {
            return out;
        }
        for (c, e) in &other.coeffs {
            out.add_term(c.clone(), k * e);
        }
        out
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> OneForm {
        OneForm::from_terms(self.coeffs.iter().map(|(c, e)| (c.clone(), f(e))))
    }
}

fn write_coeff(f: &mut fmt::Formatter<'_>, first: bool, e: &Expr, basis: &str) -> fmt::Result {
    let s = e.to_string();
    let simple = e.is_polynomial() && e.num().len() == 1;
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) if simple => (true, rest.to_string()),
        _ => (false, s.clone()),
    };
    if first {
        if neg {
            write!(f, "-")?;
        }
    } else if neg {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    if body == "1" && simple {
        write!(f, "{basis}")
    } else if simple {
        write!(f, "{body}*{basis}")
    } else {
        write!(f, "({body})*{basis}")
    }
}

/// Writes `Σ e_i·b_i` with the given basis labels.
pub fn write_combination<'a, I>(f: &mut fmt::Formatter<'_>, terms: I) -> fmt::Result
where
    I: IntoIterator<Item = (String, &'a Expr)>,
{
    let mut first = true;
    for (label, e) in terms {
        write_coeff(f, first, e, &label)?;
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_combination(f, self.coeffs.iter().map(|(c, e)| (format!("d{c}"), e)))
    }
}

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A differential 2-form `Σ f_ab da∧db` over ordered pairs `a < b`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct TwoForm {
    coeffs: BTreeMap<(Coordinate, Coordinate), Expr>,
}

impl TwoForm {
    pub fn zero() -> Self {
        TwoForm::default()
    }

    /// Adds `e da∧db`, reordering the pair with a sign if needed.
    pub fn add_term(&mut self, a: Coordinate, b: Coordinate, e: Expr) {
        if e.is_zero() || a == b {
            return;
        }
        let (key, e) = if a < b { ((a, b), e) } else { ((b, a), -e) };
        match self.coeffs.get(&key) {
            Some(old) => {
                let s = old + &e;
                if s.is_zero() {
                    self.coeffs.remove(&key);
                } else {
                    self.coeffs.insert(key, s);
                }
            }
            None => {
                self.coeffs.insert(key, e);
            }
        }
    }

    pub fn wedge(alpha: &OneForm, beta: &OneForm) -> TwoForm {
        let mut out = TwoForm::zero();
        for (a, ea) in alpha.terms() {
            for (b, eb) in beta.terms() {
                out.add_term(a.clone(), b.clone(), ea * eb);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `da∧db` with the antisymmetric sign.
    pub fn coeff(&self, a: &Coordinate, b: &Coordinate) -> Expr {
        if a == b {
            return Expr::zero();
        }
        if a < b {
            self.coeffs.get(&(a.clone(), b.clone())).cloned().unwrap_or_default()
        } else {
            -self.coeffs.get(&(b.clone(), a.clone())).cloned().unwrap_or_default()
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Coordinate, Coordinate), &Expr)> {
        self.coeffs.iter()
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        let mut out = self.clone();
        for ((a, b), e) in &other.coeffs {
            out.add_term(a.clone(), b.clone(), e.clone());
        }
        out
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        let mut out = self.clone();
        for ((a, b), e) in &other.coeffs {
            out.add_term(a.clone(), b.clone(), -e);
        }
        out
    }

    pub fn scale(&self, k: &Expr) -> TwoForm {
        let mut out = TwoForm::zero();
        for ((a, b), e) in &self.coeffs {
            out.add_term(a.clone(), b.clone(), e * k);
        }
        out
    }
}

impl fmt::Display for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_combination(
            f,
            self.coeffs.iter().map(|((a, b), e)| (format!("d{a}^d{b}"), e)),
        )
    }
}

impl fmt::Debug for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
