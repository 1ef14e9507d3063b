//! Sparse multivariate polynomials over the rationals in opaque atoms.
//!
//! An atom is a coordinate, an opaque function application carrying a formal
//! derivative order, or a formal antiderivative. Polynomials support exact
//! division and a recursive greatest common divisor, which is what the
//! rational-function normal form of [`Expr`](super::Expr) relies on.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::coordinate::Coordinate;
use super::expr::Expr;

/// The structural content of an [`Atom`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    Coord(Coordinate),
    /// `name` differentiated `derivs[i]` times in its `i`-th argument.
    Func {
        name: Arc<str>,
        derivs: Vec<u16>,
        args: Vec<Expr>,
    },
    /// A formal antiderivative: its partial derivative in `var` is `integrand`.
    Integral { integrand: Expr, var: Coordinate },
}

struct AtomData {
    kind: AtomKind,
    coords: BTreeSet<Coordinate>,
}

/// A shared, immutable polynomial variable.
#[derive(Clone)]
pub struct Atom(Arc<AtomData>);

impl Atom {
    pub fn new(kind: AtomKind) -> Self {
        let coords = match &kind {
            AtomKind::Coord(c) => std::iter::once(c.clone()).collect(),
            AtomKind::Func { args, .. } => {
                let mut s = BTreeSet::new();
                for a in args {
                    s.extend(a.coordinates());
                }
                s
            }
            AtomKind::Integral { integrand, var } => {
                let mut s = integrand.coordinates();
                s.insert(var.clone());
                s
            }
        };
        Atom(Arc::new(AtomData { kind, coords }))
    }

    pub fn coord(c: Coordinate) -> Self {
        Atom::new(AtomKind::Coord(c))
    }

    pub fn kind(&self) -> &AtomKind {
        &self.0.kind
    }

    /// Coordinates this atom depends on.
    pub fn coordinates(&self) -> &BTreeSet<Coordinate> {
        &self.0.coords
    }

    pub fn as_coord(&self) -> Option<&Coordinate> {
        match &self.0.kind {
            AtomKind::Coord(c) => Some(c),
            _ => None,
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.kind == other.0.kind
    }
}

impl Eq for Atom {}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.kind.cmp(&other.0.kind)
        }
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.kind.hash(state)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            AtomKind::Coord(c) => write!(f, "{c}"),
            AtomKind::Func { name, derivs, args } => {
                write!(f, "{name}")?;
                if args.len() == 1 {
                    match derivs[0] {
                        0 => {}
                        k @ 1..=3 => write!(f, "{}", "'".repeat(k as usize))?,
                        k => write!(f, "[{k}]")?,
                    }
                } else if derivs.iter().any(|&d| d > 0) {
                    let parts: Vec<String> = derivs.iter().map(|d| d.to_string()).collect();
                    write!(f, "[{}]", parts.join(","))?;
                }
                if !args.is_empty() {
                    let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                    write!(f, "({})", parts.join(", "))?;
                }
                Ok(())
            }
            AtomKind::Integral { integrand, var } => write!(f, "Int({integrand}, {var})"),
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A power product of atoms, kept sorted by atom with positive exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(a, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.0
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` if every exponent of `other` is covered.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *a {
                let f = other.0[j].1;
                if f > *e {
                    return None;
                }
                if f < *e {
                    out.push((a.clone(), e - f));
                }
                j += 1;
            } else {
                if j < other.0.len() && other.0[j].0 < *a {
                    return None;
                }
                out.push((a.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// The largest monomial dividing both.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (a, e) in &self.0 {
            let f = other.degree_in(a);
            if f > 0 {
                out.push((a.clone(), (*e).min(f)));
            }
        }
        Monomial(out)
    }

    /// The monomial with the exponent of `a` removed.
    pub fn without(&self, a: &Atom) -> Monomial {
        Monomial(self.0.iter().filter(|(b, _)| b != a).cloned().collect())
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(a, e)| if *e == 1 { a.to_string() } else { format!("{a}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// A polynomial: finite map from monomials to nonzero rational coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn from_int(n: i64) -> Self {
        Poly::constant(rat(n))
    }

    pub fn atom(a: Atom) -> Self {
        Poly::monomial(Monomial::atom(a, 1), BigRational::one())
    }

    pub fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// The value if this polynomial is a constant (zero included).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// Coefficient of the greatest monomial; the normalization anchor.
    pub fn lead_coeff(&self) -> BigRational {
        self.terms
            .iter()
            .next_back()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                s.insert(a.clone());
            }
        }
        s
    }

    pub fn max_atom(&self) -> Option<Atom> {
        self.terms
            .keys()
            .filter_map(|m| m.factors().last().map(|(a, _)| a.clone()))
            .max()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.keys().map(|m| m.degree_in(a)).max().unwrap_or(0)
    }

    /// Coefficients as polynomials free of `a`, keyed by the exponent of `a`.
    pub fn coeffs_in(&self, a: &Atom) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.degree_in(a);
            out.entry(e).or_default().add_term(m.without(a), c.clone());
        }
        out
    }

    fn leading_in(&self, a: &Atom) -> (u32, Poly) {
        let coeffs = self.coeffs_in(a);
        let (d, p) = coeffs.into_iter().next_back().expect("leading_in of zero polynomial");
        (d, p)
    }

    /// Partial derivative with respect to an atom, treating atoms as independent.
    pub fn partial(&self, a: &Atom) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.degree_in(a);
            if e == 0 {
                continue;
            }
            let rest = m.without(a).mul(&Monomial::atom(a.clone(), e - 1));
            out.add_term(rest, c * rat(e as i64));
        }
        out
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    /// Scales so the leading coefficient is one.
    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let lc = self.lead_coeff();
        self.scale(&lc.recip())
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "polynomial division by zero");
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if d.len() == 1 {
            let (dm, dc) = d.terms.iter().next().unwrap();
            let inv = dc.recip();
            let mut out = BTreeMap::new();
            for (m, c) in &self.terms {
                out.insert(m.div(dm)?, c * &inv);
            }
            return Some(Poly { terms: out });
        }
        let v = match (self.max_atom(), d.max_atom()) {
            (Some(a), Some(b)) => a.max(b),
            (None, Some(b)) => b,
            _ => unreachable!("non-constant divisor has an atom"),
        };
        let dd = d.degree_in(&v);
        if dd == 0 {
            let mut out = Poly::zero();
            for (e, c) in self.coeffs_in(&v) {
                let q = c.div_exact(d)?;
                out = out.add(&q.mul_monomial(&Monomial::atom(v.clone(), e), &BigRational::one()));
            }
            return Some(out);
        }
        let (_, ld) = d.leading_in(&v);
        let mut r = self.clone();
        let mut q = Poly::zero();
        while !r.is_zero() {
            let (dr, lr) = r.leading_in(&v);
            if dr < dd {
                return None;
            }
            let t = lr.div_exact(&ld)?;
            let shift = Monomial::atom(v.clone(), dr - dd);
            let term = t.mul_monomial(&shift, &BigRational::one());
            r = r.sub(&term.mul(d));
            q = q.add(&term);
        }
        Some(q)
    }

    fn content_in(&self, v: &Atom) -> Poly {
        let mut g = Poly::zero();
        for (_, c) in self.coeffs_in(v) {
            g = gcd(&g, &c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// `lc(g)^(deg f - deg g + 1)·f mod g` in the variable `v`.
    fn pseudo_rem(f: &Poly, g: &Poly, v: &Atom) -> Poly {
        let (dg, lg) = g.leading_in(v);
        let mut steps = f.degree_in(v) + 1 - dg;
        let mut r = f.clone();
        while !r.is_zero() {
            let (dr, lr) = r.leading_in(v);
            if dr < dg {
                break;
            }
            let shift = Monomial::atom(v.clone(), dr - dg);
            r = r.mul(&lg).sub(&g.mul(&lr).mul_monomial(&shift, &BigRational::one()));
            steps -= 1;
        }
        r.mul(&lg.pow(steps))
    }

    fn primitive_in(&self, v: &Atom) -> Poly {
        let c = self.content_in(v);
        self.div_exact(&c).expect("content divides").integral()
    }

    /// The positive rational multiple with coprime integer coefficients.
    fn integral(&self) -> Poly {
        let mut den = BigInt::one();
        let mut num = BigInt::zero();
        for c in self.terms.values() {
            den = den.lcm(c.denom());
            num = num.gcd(c.numer());
        }
        if num.is_zero() {
            return self.clone();
        }
        self.scale(&BigRational::new(den, num))
    }
}

const PRIME: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, PRIME - 2)
}

/// `q mod p`, or `None` if the denominator vanishes modulo `p`.
fn rational_mod(q: &BigRational) -> Option<u64> {
    let p = BigInt::from(PRIME);
    let reduce = |n: &BigInt| -> u64 {
        let r = ((n % &p) + &p) % &p;
        r.to_u64_digits().1.first().copied().unwrap_or(0)
    };
    let d = reduce(q.denom());
    (d != 0).then(|| mul_mod(reduce(q.numer()), inv_mod(d)))
}

/// Deterministic value substituted for `a` by the coprimality filter.
fn sample(a: &Atom, salt: u64) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    a.hash(&mut h);
    salt.hash(&mut h);
    h.finish() % (PRIME - 2) + 2
}

/// Coefficients of `p` in `v` modulo the prime, every other atom replaced by
/// its sample.
fn specialize(p: &Poly, v: &Atom, salt: u64) -> Option<Vec<u64>> {
    let mut out = vec![0u64; p.degree_in(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut val = rational_mod(c)?;
        let mut e = 0;
        for (a, k) in m.factors() {
            if a == v {
                e = *k as usize;
            } else {
                val = mul_mod(val, pow_mod(sample(a, salt), *k as u64));
            }
        }
        out[e] = (out[e] + val) % PRIME;
    }
    Some(out)
}

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

/// Degree of the gcd of two nonzero univariate polynomials modulo the prime.
fn univariate_gcd_degree(a: Vec<u64>, b: Vec<u64>) -> usize {
    let (mut f, mut g) = (trim(a), trim(b));
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    while !g.is_empty() {
        let inv = inv_mod(*g.last().unwrap());
        while f.len() >= g.len() {
            let k = mul_mod(*f.last().unwrap(), inv);
            let shift = f.len() - g.len();
            for (i, c) in g.iter().enumerate() {
                f[shift + i] = (f[shift + i] + PRIME - mul_mod(k, *c)) % PRIME;
            }
            f.pop();
            f = trim(f);
        }
        std::mem::swap(&mut f, &mut g);
    }
    f.len().saturating_sub(1)
}

/// Sound test for a constant gcd: for every shared atom, a specialization of
/// the other atoms modulo a prime that keeps both leading coefficients nonzero
/// must leave a constant univariate gcd. `false` means "not shown coprime".
fn shown_coprime(a: &Poly, b: &Poly) -> bool {
    let shared: Vec<Atom> = a.atoms().intersection(&b.atoms()).cloned().collect();
    'atoms: for v in &shared {
        for salt in 0..3 {
            let (Some(sa), Some(sb)) = (specialize(a, v, salt), specialize(b, v, salt)) else {
                return false;
            };
            if *sa.last().unwrap() == 0 || *sb.last().unwrap() == 0 {
                continue;
            }
            if univariate_gcd_degree(sa, sb) == 0 {
                continue 'atoms;
            }
            return false;
        }
        return false;
    }
    true
}

/// Univariate remainder of `a` by `b` modulo the prime; `b` must be nonzero.
fn univariate_rem(a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    let mut f = trim(a);
    let inv = inv_mod(*b.last().unwrap());
    while f.len() >= b.len() {
        let k = mul_mod(*f.last().unwrap(), inv);
        let shift = f.len() - b.len();
        for (i, c) in b.iter().enumerate() {
            f[shift + i] = (f[shift + i] + PRIME - mul_mod(k, *c)) % PRIME;
        }
        f.pop();
        f = trim(f);
    }
    f
}

/// Sound test that `d` does not divide `a`: some specialization of all atoms
/// but one leaves a nonzero univariate remainder.
fn shown_not_dividing(a: &Poly, d: &Poly) -> bool {
    let Some(v) = d.max_atom() else {
        return false;
    };
    let (Some(sa), Some(sd)) = (specialize(a, &v, 0), specialize(d, &v, 0)) else {
        return false;
    };
    if *sd.last().unwrap() == 0 {
        return false;
    }
    !univariate_rem(sa, &sd).is_empty()
}

const FACTOR_CAP: usize = 256;

thread_local! {
    /// Pairwise coprime polynomials seen as denominators; a speed cache only.
    static FACTORS: std::cell::RefCell<Vec<Poly>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Divides `p` by cached factors as often as possible.
fn split_cached(p: &Poly) -> (Vec<(Poly, u32)>, Poly) {
    FACTORS.with(|fs| {
        let fs = fs.borrow();
        let mut rest = p.clone();
        let mut out = Vec::new();
        for f in fs.iter() {
            let mut k = 0;
            while rest.as_constant().is_none() && !shown_not_dividing(&rest, f) {
                match rest.div_exact(f) {
                    Some(q) => {
                        rest = q;
                        k += 1;
                    }
                    None => break,
                }
            }
            if k > 0 {
                out.push((f.clone(), k));
            }
        }
        (out, rest)
    })
}

/// Adds the part of a denominator not covered by the cache, when it is
/// provably coprime to every cached factor.
pub(crate) fn register_factor(den: &Poly) {
    if den.len() < 2 {
        return;
    }
    let (_, rest) = split_cached(den);
    if rest.len() < 2 {
        return;
    }
    let m = rest.monomial_content();
    let rest = rest
        .div_exact(&Poly::monomial(m, BigRational::one()))
        .expect("monomial divides")
        .integral();
    if rest.len() < 2 {
        return;
    }
    FACTORS.with(|fs| {
        let mut fs = fs.borrow_mut();
        if fs.len() < FACTOR_CAP && fs.iter().all(|f| shown_coprime(f, &rest)) {
            fs.push(rest);
        }
    });
}

/// `gcd(a, b)` through the factor cache, or `None` when the cache does not
/// settle it.
fn gcd_cached(a: &Poly, b: &Poly) -> Option<Poly> {
    let (fs, rest) = split_cached(b);
    if fs.is_empty() {
        return None;
    }
    let mut a = a.clone();
    let mut out = Poly::one();
    for (f, k) in fs {
        let mut e = 0;
        while e < k && !shown_not_dividing(&a, &f) {
            match a.div_exact(&f) {
                Some(q) => {
                    a = q;
                    e += 1;
                }
                None => break,
            }
        }
        if e < k && !shown_coprime(&a, &f) {
            return None;
        }
        out = out.mul(&f.pow(e));
    }
    if rest.as_constant().is_none() {
        out = out.mul(&gcd_full(&a, &rest));
    }
    Some(out.monic())
}

/// Greatest common divisor, normalized to leading coefficient one.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.len() >= 2 && b.len() >= 2 && a != b {
        let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        if let Some(g) = gcd_cached(big, small).or_else(|| gcd_cached(small, big)) {
            return g;
        }
    }
    gcd_full(a, b)
}

fn gcd_full(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if a.len() == 1 || b.len() == 1 {
        let m = a.monomial_content().gcd(&b.monomial_content());
        return Poly::monomial(m, BigRational::one());
    }
    let (ma, mb) = (a.monomial_content(), b.monomial_content());
    if !ma.is_one() || !mb.is_one() {
        let strip = |p: &Poly, m: &Monomial| p.div_exact(&Poly::monomial(m.clone(), BigRational::one())).expect("monomial divides");
        let g = gcd(&strip(a, &ma), &strip(b, &mb));
        return g.mul_monomial(&ma.gcd(&mb), &BigRational::one());
    }
    if shown_coprime(a, b) {
        return Poly::one();
    }
    let v = a.max_atom().unwrap().max(b.max_atom().unwrap());
    let da = a.degree_in(&v);
    let db = b.degree_in(&v);
    if da == 0 {
        return gcd(a, &b.content_in(&v));
    }
    if db == 0 {
        return gcd(&a.content_in(&v), b);
    }
    let ca = a.content_in(&v);
    let cb = b.content_in(&v);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let c = gcd(&ca, &cb);
    let (mut f, mut g) = if da >= db { (pa.integral(), pb.integral()) } else { (pb.integral(), pa.integral()) };
    if f.div_exact(&g).is_some() {
        return c.mul(&g).monic();
    }
    // Subresultant remainder sequence: only exact divisions, no contents.
    let mut lead = Poly::one();
    let mut h = Poly::one();
    let prim = loop {
        let delta = f.degree_in(&v) - g.degree_in(&v);
        let r = Poly::pseudo_rem(&f, &g, &v);
        if r.is_zero() {
            break g.primitive_in(&v);
        }
        if r.degree_in(&v) == 0 {
            break Poly::one();
        }
        let div = lead.mul(&h.pow(delta));
        f = g;
        g = r.div_exact(&div).expect("subresultant division");
        lead = f.leading_in(&v).1;
        h = if delta == 0 {
            h
        } else {
            lead.pow(delta).div_exact(&h.pow(delta - 1)).expect("subresultant division")
        };
    };
    c.mul(&prim).monic()
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
