//! Chart coordinates: independent variables, jet coordinates and plain symbols.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Maximum number of independent variables supported by a jet multi-index.
pub const MAX_INDEP: usize = 4;

/// A jet multi-index `(s_1, .., s_n)`.
///
/// Single-variable charts use a multi-index of length one holding the order `s`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct JetIndex {
    len: u8,
    counts: [u16; MAX_INDEP],
}

impl JetIndex {
    /// The order-`s` index for a single independent variable.
    pub fn single(s: usize) -> Self {
        let mut counts = [0; MAX_INDEP];
        counts[0] = s as u16;
        JetIndex { len: 1, counts }
    }

    /// Builds an index from explicit entries.
    ///
    /// # Panics
    /// Panics if `entries` is empty or longer than [`MAX_INDEP`].
    pub fn new(entries: &[usize]) -> Self {
        assert!(
            !entries.is_empty() && entries.len() <= MAX_INDEP,
            "jet multi-index must have between 1 and {MAX_INDEP} entries"
        );
        let mut counts = [0; MAX_INDEP];
        for (slot, &e) in counts.iter_mut().zip(entries) {
            *slot = e as u16;
        }
        JetIndex {
            len: entries.len() as u8,
            counts,
        }
    }

    /// The zero index with `n` entries.
    pub fn zero(n: usize) -> Self {
        JetIndex::new(&vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn entries(&self) -> &[u16] {
        &self.counts[..self.len as usize]
    }

    pub fn get(&self, i: usize) -> usize {
        self.counts[i] as usize
    }

    /// Total order `|α|`.
    pub fn order(&self) -> usize {
        self.entries().iter().map(|&c| c as usize).sum()
    }

    /// The index `α + e_i`.
    pub fn raised(&self, i: usize) -> Self {
        let mut out = *self;
        out.counts[i] += 1;
        out
    }

    /// The index `α − e_i`, if it exists.
    pub fn lowered(&self, i: usize) -> Option<Self> {
        if self.counts[i] == 0 {
            return None;
        }
        let mut out = *self;
        out.counts[i] -= 1;
        Some(out)
    }

    /// All indices with `n` entries and total order exactly `k`, in a fixed order.
    pub fn all_of_order(n: usize, k: usize) -> Vec<JetIndex> {
        fn rec(n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<JetIndex>) {
            if prefix.len() + 1 == n {
                prefix.push(k);
                out.push(JetIndex::new(prefix));
                prefix.pop();
                return;
            }
            for first in (0..=k).rev() {
                prefix.push(first);
                rec(n, k - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, k, &mut Vec::new(), &mut out);
        out
    }
}

impl Ord for JetIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.order().cmp(&other.order()))
            .then_with(|| other.entries().cmp(self.entries()))
    }
}

impl PartialOrd for JetIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for JetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries())
    }
}

/// A coordinate of a chart.
///
/// Independent variables sort before jet coordinates, which sort before plain
/// symbols. Barred coordinates belong to the duplicated chart used by the wave
/// method.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coordinate {
    /// Independent variable. Index 0 is the single variable `x` of a
    /// one-variable chart; indices `1..=n` are `x1..xn`.
    Indep { bar: bool, index: u8 },
    /// Jet coordinate `w^dep_α` with `dep` counted from 1.
    Jet { bar: bool, dep: u16, order: JetIndex },
    /// Any other symbol (first integrals `t`, placeholders).
    Plain(Arc<str>),
}

impl Coordinate {
    /// The independent variable `x` of a single-variable chart.
    pub fn x() -> Self {
        Coordinate::Indep { bar: false, index: 0 }
    }

    /// The barred independent variable `x̄`.
    pub fn xbar() -> Self {
        Coordinate::Indep { bar: true, index: 0 }
    }

    /// The independent variable `x_i` (1-based) of a multi-variable chart.
    pub fn xi(i: usize) -> Self {
        Coordinate::Indep {
            bar: false,
            index: i as u8,
        }
    }

    /// The single-variable jet coordinate `w^j_s`.
    pub fn w(j: usize, s: usize) -> Self {
        Coordinate::Jet {
            bar: false,
            dep: j as u16,
            order: JetIndex::single(s),
        }
    }

    /// The barred jet coordinate `w̄^j_s`.
    pub fn wbar(j: usize, s: usize) -> Self {
        Coordinate::Jet {
            bar: true,
            dep: j as u16,
            order: JetIndex::single(s),
        }
    }

    /// The multi-variable jet coordinate `w^j_α`.
    pub fn jet(j: usize, order: JetIndex) -> Self {
        Coordinate::Jet {
            bar: false,
            dep: j as u16,
            order,
        }
    }

    pub fn plain(name: &str) -> Self {
        Coordinate::Plain(Arc::from(name))
    }

    pub fn is_indep(&self) -> bool {
        matches!(self, Coordinate::Indep { .. })
    }

    pub fn is_plain(&self) -> bool {
        matches!(self, Coordinate::Plain(_))
    }

    pub fn is_barred(&self) -> bool {
        match self {
            Coordinate::Indep { bar, .. } | Coordinate::Jet { bar, .. } => *bar,
            Coordinate::Plain(_) => false,
        }
    }

    /// Jet order `|α|`; zero for other kinds.
    pub fn jet_order(&self) -> usize {
        match self {
            Coordinate::Jet { order, .. } => order.order(),
            _ => 0,
        }
    }

    /// The dependent index and order `s` of a single-variable jet coordinate.
    pub fn as_single_jet(&self) -> Option<(usize, usize, bool)> {
        match self {
            Coordinate::Jet { bar, dep, order } if order.len() == 1 => {
                Some((*dep as usize, order.get(0), *bar))
            }
            _ => None,
        }
    }

    /// The same coordinate with the bar toggled to `bar`.
    pub fn with_bar(&self, bar: bool) -> Self {
        match self {
            Coordinate::Indep { index, .. } => Coordinate::Indep { bar, index: *index },
            Coordinate::Jet { dep, order, .. } => Coordinate::Jet {
                bar,
                dep: *dep,
                order: *order,
            },
            Coordinate::Plain(_) => self.clone(),
        }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coordinate::Indep { bar, index } => {
                let base = if *bar { "xbar" } else { "x" };
                if *index == 0 {
                    write!(f, "{base}")
                } else {
                    write!(f, "{base}{index}")
                }
            }
            Coordinate::Jet { bar, dep, order } => {
                let base = if *bar { "wbar" } else { "w" };
                if order.len() == 1 {
                    write!(f, "{base}{dep}_{}", order.get(0))
                } else {
                    let parts: Vec<String> = order.entries().iter().map(|c| c.to_string()).collect();
                    write!(f, "{base}{dep}_{{{}}}", parts.join(","))
                }
            }
            Coordinate::Plain(name) => write!(f, "{name}"),
        }
    }
}

impl fmt::Debug for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
