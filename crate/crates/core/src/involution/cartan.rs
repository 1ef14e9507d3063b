use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diffiety::rank;
use crate::error::{Error, Result};
use crate::geometry::OneForm;
use crate::symkernel::{CaseContext, Coordinate, Expr, JetIndex};

/// A first-order system `w^j_i = f^j_i` (`j ∈ J_i`) in solved form, with
/// `n` independent and `m` dependent variables.
///
/// `resolved[i-1]` is `J_i`; the parametric set `K_i` is its complement in
/// `{1, …, m}`. `rhs` maps `(i, j)` to `f^j_i`.
#[derive(Clone, Debug)]
pub struct SolvedSystem {
    pub n: usize,
    pub m: usize,
    pub resolved: Vec<BTreeSet<usize>>,
    pub rhs: BTreeMap<(usize, usize), Expr>,
}

impl SolvedSystem {
    pub fn new(n: usize, m: usize) -> Self {
        SolvedSystem {
            n,
            m,
            resolved: vec![BTreeSet::new(); n],
            rhs: BTreeMap::new(),
        }
    }

    /// Adds the equation `w^j_i = f`.
    pub fn equation(mut self, i: usize, j: usize, f: Expr) -> Self {
        if (1..=self.n).contains(&i) {
            self.resolved[i - 1].insert(j);
        }
        self.rhs.insert((i, j), f);
        self
    }

    /// The jet coordinate `w^j` differentiated along `dirs`.
    pub fn jet(&self, j: usize, dirs: &[usize]) -> Coordinate {
        let mut e = vec![0; self.n];
        for &d in dirs {
            e[d - 1] += 1;
        }
        Coordinate::jet(j, JetIndex::new(&e))
    }

    pub fn is_parametric(&self, i: usize, j: usize) -> bool {
        !self.resolved[i - 1].contains(&j)
    }

    /// `σ_i = |K_i|`.
    pub fn sigma(&self) -> Vec<usize> {
        self.resolved.iter().map(|j| self.m - j.len()).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Rejected("the system needs independent and dependent variables".into()));
        }
        if self.resolved.len() != self.n {
            return Err(Error::Rejected(format!("expected {} resolved sets", self.n)));
        }
        for &(i, j) in self.rhs.keys() {
            if !(1..=self.n).contains(&i) || !(1..=self.m).contains(&j) {
                return Err(Error::Rejected(format!("equation for w^{j}_{i} is out of range")));
            }
        }
        for (k, js) in self.resolved.iter().enumerate() {
            for &j in js {
                if !self.rhs.contains_key(&(k + 1, j)) {
                    return Err(Error::Rejected(format!("no right-hand side for w^{j}_{}", k + 1)));
                }
            }
        }
        for k in 1..self.n {
            if !self.resolved[k - 1].is_subset(&self.resolved[k]) {
                return Err(Error::Rejected(format!(
                    "resolved sets are not nested: J_{k} = {:?} is not contained in J_{} = {:?}",
                    self.resolved[k - 1],
                    k + 1,
                    self.resolved[k]
                )));
            }
        }
        for (&(i, j), f) in &self.rhs {
            for c in f.coordinates() {
                if !self.admissible(i, &c) {
                    return Err(Error::Rejected(format!("f^{j}_{i} depends on {c}, which its level does not allow")));
                }
            }
        }
        Ok(())
    }

    /// `f^j_i` may involve `x`, `w` and the parametric `w^k_{i'}` with `i' ≤ i`.
    fn admissible(&self, i: usize, c: &Coordinate) -> bool {
        match c {
            Coordinate::Indep { bar: false, index } => (1..=self.n).contains(&(*index as usize)),
            Coordinate::Jet { bar: false, dep, order } if order.len() == self.n => {
                let dep = *dep as usize;
                if !(1..=self.m).contains(&dep) {
                    return false;
                }
                match order.order() {
                    0 => true,
                    1 => {
                        let d = (1..=self.n).find(|&d| order.get(d - 1) == 1).expect("first-order index");
                        d <= i && self.is_parametric(d, dep)
                    }
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

/// Outcome of the Cartan test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanReport {
    pub sigma: Vec<usize>,
    /// Free second-order parameters of each class after one prolongation.
    pub sigma_bar: Vec<usize>,
    /// `σ_k + … + σ_n`.
    pub expected: Vec<usize>,
    pub unknowns: usize,
    pub rank: usize,
    pub pass: bool,
}

impl CartanReport {
    /// Total number of free second-order parameters.
    pub fn free(&self) -> usize {
        self.unknowns - self.rank
    }
}

fn tuple(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for CartanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} σ={} σ̄={}",
            if self.pass { "PASS" } else { "FAIL" },
            tuple(&self.sigma),
            tuple(&self.sigma_bar)
        )
    }
}

/// The second-order part of `D_i(w^j_k − f^j_k)`.
fn prolonged_symbol(s: &SolvedSystem) -> Vec<OneForm> {
    let mut rows = Vec::new();
    for (&(k, j), f) in &s.rhs {
        for i in 1..=s.n {
            let mut row = OneForm::term(s.jet(j, &[k, i]), Expr::one());
            for c in f.coordinates() {
                if let Coordinate::Jet { dep, order, .. } = &c {
                    if order.order() == 1 {
                        let d = (1..=s.n).find(|&d| order.get(d - 1) == 1).expect("first-order index");
                        row.add_term(s.jet(*dep as usize, &[d, i]), -f.diff(&c));
                    }
                }
            }
            rows.push(row);
        }
    }
    rows
}

fn restrict(rows: &[OneForm], keep: &BTreeSet<Coordinate>) -> Vec<OneForm> {
    rows.iter()
        .map(|r| OneForm::from_terms(r.terms().filter(|(c, _)| keep.contains(c)).map(|(c, e)| (c.clone(), e.clone()))))
        .collect()
}

/// Prolongs the system once and counts the free second-order jets
/// `w^j_{ab}` class by class, the class of `w^j_{ab}` being `min(a, b)`.
///
/// Principal jets are taken from the highest class down, so `σ̄_k` is the
/// number of class-`k` jets left free. The test passes when
/// `σ̄_k = σ_k + … + σ_n` for every `k`.
pub fn cartan_test(s: &SolvedSystem, ctx: &mut CaseContext) -> Result<CartanReport> {
    s.validate()?;
    let n = s.n;
    let rows = prolonged_symbol(s);
    let mut classes: Vec<BTreeSet<Coordinate>> = vec![BTreeSet::new(); n];
    for j in 1..=s.m {
        for a in 1..=n {
            for b in a..=n {
                classes[a - 1].insert(s.jet(j, &[a, b]));
            }
        }
    }
    let unknowns: usize = classes.iter().map(|c| c.len()).sum();
    let mut keep = BTreeSet::new();
    let mut prev_rank = 0;
    let mut sigma_bar = vec![0; n];
    for k in (1..=n).rev() {
        keep.extend(classes[k - 1].iter().cloned());
        let r = rank(&restrict(&rows, &keep), ctx)?;
        sigma_bar[k - 1] = classes[k - 1].len() - (r - prev_rank);
        prev_rank = r;
    }
    let sigma = s.sigma();
    let expected: Vec<usize> = (0..n).map(|k| sigma[k..].iter().sum()).collect();
    Ok(CartanReport {
        pass: sigma_bar == expected,
        sigma,
        sigma_bar,
        expected,
        unknowns,
        rank: prev_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::AssumptionSet;
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> CaseContext {
        CaseContext::new(AssumptionSet::new())
    }

    fn single() -> SolvedSystem {
        let s = SolvedSystem::new(2, 1);
        let args = vec![
            Expr::coord(Coordinate::xi(1)),
            Expr::coord(Coordinate::xi(2)),
            Expr::coord(s.jet(1, &[])),
            Expr::coord(s.jet(1, &[1])),
        ];
        s.equation(2, 1, Expr::func("f", args))
    }

    /// Rank over the rationals after substituting random values for every
    /// coordinate and function value.
    fn numeric_free(s: &SolvedSystem, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = prolonged_symbol(s);
        let mut cols: Vec<Coordinate> = Vec::new();
        for j in 1..=s.m {
            for a in 1..=s.n {
                for b in a..=s.n {
                    cols.push(s.jet(j, &[a, b]));
                }
            }
        }
        let mut values: BTreeMap<String, BigRational> = BTreeMap::new();
        let mut mat: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| {
                cols.iter()
                    .map(|c| {
                        let e = r.coeff(c);
                        if let Some(q) = e.as_constant() {
                            return q;
                        }
                        let key = e.to_string();
                        values
                            .entry(key)
                            .or_insert_with(|| BigRational::from_integer(rng.gen_range(1..1000).into()))
                            .clone()
                    })
                    .collect()
            })
            .collect();
        let mut r = 0;
        for c in 0..cols.len() {
            let Some(p) = (r..mat.len()).find(|&i| !mat[i][c].is_zero()) else {
                continue;
            };
            mat.swap(r, p);
            let inv = BigRational::one() / mat[r][c].clone();
            for i in 0..mat.len() {
                if i != r && !mat[i][c].is_zero() {
                    let k = mat[i][c].clone() * inv.clone();
                    for t in 0..cols.len() {
                        let v = mat[r][t].clone() * k.clone();
                        mat[i][t] -= v;
                    }
                }
            }
            r += 1;
        }
        cols.len() - r
    }

    #[test]
    fn single_equation_passes() {
        let s = single();
        let r = cartan_test(&s, &mut ctx()).unwrap();
        assert_eq!(r.sigma, vec![1, 0]);
        assert_eq!(r.sigma_bar, vec![1, 0]);
        assert!(r.pass);
        assert_eq!(r.to_string(), "PASS σ=(1,0) σ̄=(1,0)");
        assert_eq!(r.free(), numeric_free(&s, 1));
    }

    #[test]
    fn determined_system_has_no_free_jets() {
        let s = SolvedSystem::new(2, 1);
        let u = Expr::coord(s.jet(1, &[]));
        let s = s.equation(1, 1, u.clone()).equation(2, 1, u.pow(2));
        let r = cartan_test(&s, &mut ctx()).unwrap();
        assert_eq!(r.sigma, vec![0, 0]);
        assert_eq!(r.sigma_bar, vec![0, 0]);
        assert!(r.pass);
        assert_eq!(numeric_free(&s, 2), 0);
    }

    #[test]
    fn free_system_passes() {
        let s = SolvedSystem::new(3, 2);
        let r = cartan_test(&s, &mut ctx()).unwrap();
        assert_eq!(r.sigma, vec![2, 2, 2]);
        assert_eq!(r.sigma_bar, vec![6, 4, 2]);
        assert!(r.pass);
    }

    #[test]
    fn two_functions_in_three_variables() {
        let s = SolvedSystem::new(3, 2);
        let p = |j: usize, d: &[usize]| Expr::coord(s.jet(j, d));
        let f3 = p(2, &[3]) * p(1, &[1]) + p(2, &[1]);
        let f2 = p(2, &[2]) + p(2, &[1]) * p(1, &[1]);
        let s = s.equation(2, 1, f2).equation(3, 1, f3);
        let r = cartan_test(&s, &mut ctx()).unwrap();
        assert_eq!(r.sigma, vec![2, 1, 1]);
        assert_eq!(r.free(), numeric_free(&s, 3));
        if r.pass {
            assert_eq!(r.free(), r.expected.iter().sum::<usize>());
        }
    }

    #[test]
    fn guards() {
        let s = SolvedSystem::new(2, 2);
        let u = Expr::coord(s.jet(1, &[]));
        let bad = s.clone().equation(1, 1, u.clone()).equation(2, 2, u.clone());
        let err = cartan_test(&bad, &mut ctx()).unwrap_err();
        assert!(err.to_string().contains("nested"));
        let w22 = Expr::coord(s.jet(2, &[2]));
        let dep = s.clone().equation(2, 1, w22.clone()).equation(1, 1, w22);
        assert!(cartan_test(&dep, &mut ctx()).unwrap_err().to_string().contains("does not allow"));
        let principal = Expr::coord(s.jet(1, &[1]));
        let sub = s.equation(1, 1, u).equation(2, 1, principal);
        assert!(cartan_test(&sub, &mut ctx()).is_err());
    }
}
