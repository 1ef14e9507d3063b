//! Echelonized spans of 1-forms over the field of expressions.

use std::cmp::Ordering;
use std::fmt;

use crate::geometry::{OneForm, TwoForm};
use crate::symkernel::{CaseContext, CaseError, Coordinate, Expr, Nonvanishing};

/// Pivot preference: dependent coordinates in chart order, independent variables last.
pub fn column_order(a: &Coordinate, b: &Coordinate) -> Ordering {
    (a.is_indep(), a).cmp(&(b.is_indep(), b))
}

fn sorted_support(phi: &OneForm) -> Vec<&Coordinate> {
    let mut cols: Vec<&Coordinate> = phi.support().collect();
    cols.sort_by(|a, b| column_order(a, b));
    cols
}

/// Picks a certified nonzero column of `phi`, in pivot preference order.
fn certified_column(phi: &OneForm, ctx: &CaseContext) -> Option<Coordinate> {
    sorted_support(phi)
        .into_iter()
        .find(|c| ctx.classify(&phi.coeff(c)) == Nonvanishing::NonZero)
        .cloned()
}

/// Forks on the first undecided column of `phi`.
fn forced_column(phi: &OneForm, ctx: &mut CaseContext, site: &str) -> Result<Coordinate, CaseError> {
    let col = sorted_support(phi)[0].clone();
    let entry = phi.coeff(&col);
    let nonzero = ctx.decide_nonzero(&entry, site)?;
    debug_assert!(nonzero);
    Ok(col)
}

/// A finite-dimensional span of 1-forms in reduced echelon form.
///
/// Every basis row has coefficient one at its pivot column and zero at the
/// pivot columns of the other rows.
#[derive(Clone, Default, PartialEq)]
pub struct FormSpan {
    rows: Vec<OneForm>,
    pivots: Vec<Coordinate>,
}

impl FormSpan {
    pub fn new() -> Self {
        FormSpan::default()
    }

    /// Builds a span from rows that are already reduced with the given unit pivots.
    pub fn from_reduced_rows(rows: Vec<(Coordinate, OneForm)>) -> Self {
        let mut s = FormSpan::new();
        for (p, r) in rows {
            debug_assert!(r.coeff(&p).is_one());
            s.push_row(p, r);
        }
        s
    }

    fn push_row(&mut self, pivot: Coordinate, row: OneForm) {
        let pos = self
            .pivots
            .iter()
            .position(|p| column_order(p, &pivot) == Ordering::Greater)
            .unwrap_or(self.pivots.len());
        self.pivots.insert(pos, pivot);
        self.rows.insert(pos, row);
    }

    /// Echelonizes `forms`, preferring rows with certified pivots so that forks
    /// happen only when no certified choice remains.
    pub fn from_forms(forms: &[OneForm], ctx: &mut CaseContext) -> Result<Self, CaseError> {
        let mut span = FormSpan::new();
        span.extend(forms, ctx)?;
        Ok(span)
    }

    /// Inserts all `forms`, certified pivots first.
    pub fn extend(&mut self, forms: &[OneForm], ctx: &mut CaseContext) -> Result<usize, CaseError> {
        let mut pending: Vec<OneForm> = forms.to_vec();
        let mut added = 0;
        loop {
            pending = pending
                .into_iter()
                .map(|f| self.reduce(&f))
                .filter(|f| !f.is_zero())
                .collect();
            if pending.is_empty() {
                return Ok(added);
            }
            let choice = pending
                .iter()
                .enumerate()
                .find_map(|(i, f)| certified_column(f, ctx).map(|c| (i, c)));
            let (i, col) = match choice {
                Some(x) => x,
                None => (0, forced_column(&pending[0], ctx, "echelon pivot")?),
            };
            let row = pending.remove(i);
            self.add_reduced(row, col);
            added += 1;
        }
    }

    fn add_reduced(&mut self, row: OneForm, col: Coordinate) {
        let inv = row.coeff(&col).recip();
        let row = row.scale(&inv);
        for r in self.rows.iter_mut() {
            let k = r.coeff(&col);
            if !k.is_zero() {
                *r = r.axpy(&-k, &row);
            }
        }
        self.push_row(col, row);
    }

    /// Inserts one form; returns whether the span grew.
    pub fn insert(&mut self, phi: &OneForm, ctx: &mut CaseContext) -> Result<bool, CaseError> {
        Ok(self.extend(std::slice::from_ref(phi), ctx)? > 0)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn basis(&self) -> &[OneForm] {
        &self.rows
    }

    pub fn pivots(&self) -> &[Coordinate] {
        &self.pivots
    }

    /// Residue of `phi` after eliminating all pivot columns.
    pub fn reduce(&self, phi: &OneForm) -> OneForm {
        self.reduce_with_coeffs(phi).0
    }

    /// `phi = Σ c_i row_i + residue`; returns the residue and the `c_i`.
    pub fn reduce_with_coeffs(&self, phi: &OneForm) -> (OneForm, Vec<Expr>) {
        let mut res = phi.clone();
        let mut coeffs = Vec::with_capacity(self.rows.len());
        for (p, r) in self.pivots.iter().zip(&self.rows) {
            let k = res.coeff(p);
            if !k.is_zero() {
                res = res.axpy(&-&k, r);
            }
            coeffs.push(k);
        }
        (res, coeffs)
    }

    pub fn contains(&self, phi: &OneForm) -> bool {
        self.reduce(phi).is_zero()
    }

    pub fn contains_span(&self, other: &FormSpan) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    pub fn same_span(&self, other: &FormSpan) -> bool {
        self.dim() == other.dim() && self.contains_span(other)
    }

    /// Reduction of a 2-form modulo the ideal generated by this span.
    ///
    /// Each pivot differential `dp` is replaced by its expression in the
    /// non-pivot differentials, which is exact modulo the span.
    pub fn reduce_two_form(&self, beta: &TwoForm) -> TwoForm {
        let q = |c: &Coordinate| -> OneForm {
            match self.pivots.iter().position(|p| p == c) {
                None => OneForm::d(c.clone()),
                Some(i) => {
                    let row = &self.rows[i];
                    OneForm::from_terms(
                        row.terms()
                            .filter(|(d, _)| *d != c)
                            .map(|(d, e)| (d.clone(), -e)),
                    )
                }
            }
        };
        let mut out = TwoForm::zero();
        for ((a, b), f) in beta.terms() {
            out = out.add(&TwoForm::wedge(&q(a), &q(b)).scale(f));
        }
        out
    }
}

impl fmt::Debug for FormSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter()).finish()
    }
}

/// Linear relations among `rows` modulo `modulo`: a basis of the coefficient
/// vectors `c` with `Σ c_i rows_i ∈ modulo`.
pub fn relations(
    rows: &[OneForm],
    modulo: &FormSpan,
    ctx: &mut CaseContext,
) -> Result<Vec<Vec<Expr>>, CaseError> {
    let k = rows.len();
    let unit = |i: usize| -> Vec<Expr> {
        (0..k).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()
    };
    let mut pending: Vec<(OneForm, Vec<Expr>)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (modulo.reduce(r), unit(i)))
        .collect();
    let mut pivots: Vec<(Coordinate, OneForm, Vec<Expr>)> = Vec::new();
    let mut out = Vec::new();
    loop {
        let mut next = Vec::new();
        for (mut r, mut c) in pending.into_iter() {
            for (p, pr, pc) in &pivots {
                let a = r.coeff(p);
                if !a.is_zero() {
                    r = r.axpy(&-&a, pr);
                    for (ci, pci) in c.iter_mut().zip(pc) {
                        *ci = &*ci - &a * pci;
                    }
                }
            }
            if r.is_zero() {
                out.push(c);
            } else {
                next.push((r, c));
            }
        }
        pending = next;
        if pending.is_empty() {
            return Ok(out);
        }
        let choice = pending
            .iter()
            .enumerate()
            .find_map(|(i, (r, _))| certified_column(r, ctx).map(|col| (i, col)));
        let (i, col) = match choice {
            Some(x) => x,
            None => (0, forced_column(&pending[0].0, ctx, "relation pivot")?),
        };
        let (r, c) = pending.remove(i);
        let inv = r.coeff(&col).recip();
        let r = r.scale(&inv);
        let c = c.iter().map(|e| e * &inv).collect();
        pivots.push((col, r, c));
    }
}

/// Inverts a change of basis: for forms `φ_i` that are a basis of the
/// differentials `dc` (`c ∈ columns`), returns for each column the
/// coefficients `a_i` with `dc = Σ a_i φ_i`. Returns `None` when the forms are
/// not such a basis.
pub fn dual_coefficients(
    forms: &[OneForm],
    columns: &[Coordinate],
    ctx: &mut CaseContext,
) -> Result<Option<Vec<Vec<Expr>>>, CaseError> {
    let k = forms.len();
    if k != columns.len() || forms.iter().any(|f| f.support().any(|c| !columns.contains(c))) {
        return Ok(None);
    }
    let unit = |i: usize| -> Vec<Expr> {
        (0..k).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()
    };
    let mut pending: Vec<(OneForm, Vec<Expr>)> =
        forms.iter().enumerate().map(|(i, f)| (f.clone(), unit(i))).collect();
    let mut done: Vec<(Coordinate, OneForm, Vec<Expr>)> = Vec::new();
    while !pending.is_empty() {
        let choice = pending
            .iter()
            .enumerate()
            .find_map(|(i, (r, _))| certified_column(r, ctx).map(|col| (i, col)));
        let (i, col) = match choice {
            Some(x) => x,
            None => (0, forced_column(&pending[0].0, ctx, "basis change pivot")?),
        };
        let (r, c) = pending.remove(i);
        let inv = r.coeff(&col).recip();
        let r = r.scale(&inv);
        let c: Vec<Expr> = c.iter().map(|e| e * &inv).collect();
        let eliminate = |row: &mut OneForm, comb: &mut Vec<Expr>| {
            let a = row.coeff(&col);
            if !a.is_zero() {
                *row = row.axpy(&-&a, &r);
                for (ci, pci) in comb.iter_mut().zip(&c) {
                    *ci = &*ci - &a * pci;
                }
            }
        };
        for (row, comb) in pending.iter_mut() {
            eliminate(row, comb);
        }
        for (_, row, comb) in done.iter_mut() {
            eliminate(row, comb);
        }
        if pending.iter().any(|(row, _)| row.is_zero()) {
            return Ok(None);
        }
        done.push((col, r, c));
    }
    Ok(Some(
        columns
            .iter()
            .map(|col| {
                done.iter()
                    .find(|(p, _, _)| p == col)
                    .map(|(_, _, c)| c.clone())
                    .expect("square nonsingular system pivots every column")
            })
            .collect(),
    ))
}

/// Rank of a list of forms.
pub fn rank(forms: &[OneForm], ctx: &mut CaseContext) -> Result<usize, CaseError> {
    Ok(FormSpan::from_forms(forms, ctx)?.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::{w, x, AssumptionSet};

    fn d(c: Coordinate) -> OneForm {
        OneForm::d(c)
    }

    #[test]
    fn echelon_has_unit_pivots() {
        let mut ctx = CaseContext::new(AssumptionSet::new());
        let a = d(Coordinate::w(1, 0)).add(&d(Coordinate::w(2, 0)).scale(&Expr::int(2)));
        let b = d(Coordinate::w(2, 0)).sub(&d(Coordinate::x()).scale(&x()));
        let s = FormSpan::from_forms(&[a.clone(), b.clone(), a.add(&b)], &mut ctx).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&a.sub(&b)));
        assert!(!s.contains(&d(Coordinate::x())));
        assert_eq!(s.pivots(), &[Coordinate::w(1, 0), Coordinate::w(2, 0)]);
        for (p, r) in s.pivots().iter().zip(s.basis()) {
            assert!(r.coeff(p).is_one());
        }
        assert!(ctx.forks().is_empty());
    }

    #[test]
    fn certified_rows_are_used_before_forking() {
        let mut ctx = CaseContext::new(AssumptionSet::new());
        let fp = Expr::func_deriv("F", vec![1], vec![w(2, 1)]);
        let r1 = d(Coordinate::w(2, 1)).scale(&fp);
        let r2 = d(Coordinate::w(2, 1));
        let rel = relations(&[r1, r2], &FormSpan::new(), &mut ctx).unwrap();
        assert_eq!(rel.len(), 1);
        assert_eq!(rel[0], vec![Expr::one(), -fp]);
        assert!(ctx.forks().is_empty());
    }

    #[test]
    fn unknown_pivot_forks() {
        let mut ctx = CaseContext::new(AssumptionSet::new());
        let r = d(Coordinate::w(1, 0)).scale(&w(2, 2));
        let s = FormSpan::from_forms(&[r], &mut ctx).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(ctx.forks().len(), 1);
    }

    #[test]
    fn dual_coefficients_invert_triangular_change() {
        let mut ctx = CaseContext::new(AssumptionSet::new());
        let cols = [Coordinate::x(), Coordinate::w(1, 0)];
        let a = d(Coordinate::x());
        let b = d(Coordinate::w(1, 0)).sub(&d(Coordinate::x()).scale(&w(1, 1)));
        let inv = dual_coefficients(&[a.clone(), b.clone()], &cols, &mut ctx).unwrap().unwrap();
        assert_eq!(inv[0], vec![Expr::one(), Expr::zero()]);
        assert_eq!(inv[1], vec![w(1, 1), Expr::one()]);
        assert!(dual_coefficients(&[a.clone(), a], &cols, &mut ctx).unwrap().is_none());
    }

    #[test]
    fn two_form_reduction_modulo_ideal() {
        let mut ctx = CaseContext::new(AssumptionSet::new());
        let t = d(Coordinate::w(1, 0)).sub(&d(Coordinate::w(2, 0)).scale(&Expr::param("A")));
        let s = FormSpan::from_forms(std::slice::from_ref(&t), &mut ctx).unwrap();
        let beta = TwoForm::wedge(&t, &d(Coordinate::x()));
        assert!(s.reduce_two_form(&beta).is_zero());
        let gamma = TwoForm::wedge(&d(Coordinate::w(2, 0)), &d(Coordinate::x()));
        assert!(!s.reduce_two_form(&gamma).is_zero());
    }
}
