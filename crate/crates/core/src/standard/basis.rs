use std::fmt;

use super::{first_task, r0_from_chain, KerChainResult};
use crate::diffiety::{in_omega_wedge_omega, window_span, Diffiety, FormSpan};
use crate::error::{Error, Result};
use crate::geometry::{exterior_d, lie_derivative, lie_power, OneForm, TwoForm};
use crate::symkernel::{CaseContext, Coordinate};

/// A generator `π^j_0` of the standard basis, entering at level `level` of the
/// standard filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct Seed {
    pub form: OneForm,
    pub level: usize,
}

/// Structural checks performed on a standard basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BasisCertificate {
    /// `L_D τ ∈ span τ`.
    pub tau_invariant: bool,
    /// `dτ ≡ 0` modulo the ideal of the `τ`.
    pub tau_frobenius: bool,
    /// `dπ_s − dx∧π_{s+1} ∈ Ω∧Ω` for every family member in the window.
    pub pi_structure: bool,
    /// The family is a basis of the window `Ω_L`.
    pub spans_window: bool,
}

impl BasisCertificate {
    pub fn holds(&self) -> bool {
        self.tau_invariant && self.tau_frobenius && self.pi_structure && self.spans_window
    }
}

/// A standard basis `{τ^i, π^j_s}` on a window, for one independent variable.
#[derive(Clone, Debug)]
pub struct StandardBasis {
    pub window: usize,
    pub chain: KerChainResult,
    pub taus: Vec<OneForm>,
    pub seeds: Vec<Seed>,
    pub certificate: BasisCertificate,
}

impl StandardBasis {
    /// `K(Ω)`.
    pub fn k(&self) -> usize {
        self.taus.len()
    }

    /// `μ(Ω)`.
    pub fn mu(&self) -> usize {
        self.seeds.len()
    }

    /// `π^j_s = L_D^s π^j_0` (`j` counted from 0).
    pub fn pi(&self, om: &Diffiety, j: usize, s: usize) -> Result<OneForm> {
        Ok(lie_power(om.d(), &self.seeds[j].form, s)?)
    }

    /// The family members `(j, s, π^j_s)` lying in the natural level `Ω_l`.
    pub fn family_at(&self, om: &Diffiety, l: usize) -> Result<Vec<(usize, usize, OneForm)>> {
        let top = self.chain.bar_level_of_natural(l);
        let mut out = Vec::new();
        for (j, seed) in self.seeds.iter().enumerate() {
            let mut cur = seed.form.clone();
            for s in 0..=top.saturating_sub(seed.level) {
                if seed.level > top {
                    break;
                }
                if s > 0 {
                    cur = lie_derivative(om.d(), &cur)?;
                }
                out.push((j, s, cur.clone()));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for StandardBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.taus.iter().enumerate() {
            writeln!(f, "tau{} = {}", i + 1, t)?;
        }
        for (j, s) in self.seeds.iter().enumerate() {
            writeln!(f, "pi{}_0 = {}  (level {})", j + 1, s.form, s.level)?;
        }
        Ok(())
    }
}

/// Builds a standard basis on the window `Ω_L` from the standard filtration.
///
/// Seeds are taken level by level: the echelon rows of `Ω̄_l` not already in
/// the span of R⁰ and the Lie shifts of earlier seeds.
pub fn standard_basis(om: &Diffiety, window: usize, seed: u64, ctx: &mut CaseContext) -> Result<StandardBasis> {
    if om.n() != 1 {
        return Err(Error::Unsupported(
            "standard bases are built for one independent variable".into(),
        ));
    }
    let chain = first_task(om, window, seed, ctx)?.chain;
    let r0 = r0_from_chain(om, &chain)?;
    let taus = r0.module.basis().to_vec();
    let filt = chain.standard_filtration();
    let top = chain.bar_level_of_natural(window);

    let mut current = FormSpan::from_forms(&taus, ctx)?;
    let mut seeds: Vec<Seed> = Vec::new();
    let mut family: Vec<OneForm> = taus.clone();
    for l in 0..=top {
        for s in &seeds {
            let shifted = lie_power(om.d(), &s.form, l - s.level)?;
            current.insert(&shifted, ctx)?;
            family.push(shifted);
        }
        let level = filt.level_span(om, l, ctx)?;
        for cand in level.basis() {
            if current.insert(cand, ctx)? {
                seeds.push(Seed {
                    form: cand.clone(),
                    level: l,
                });
                family.push(cand.clone());
            }
        }
    }

    let mut cert = BasisCertificate {
        tau_invariant: r0.invariant,
        tau_frobenius: r0.frobenius,
        pi_structure: true,
        spans_window: false,
    };
    let dx = OneForm::d(Coordinate::x());
    for s in &seeds {
        let mut cur = s.form.clone();
        for _ in s.level..=top {
            let next = lie_derivative(om.d(), &cur)?;
            let beta = exterior_d(&cur).sub(&TwoForm::wedge(&dx, &next));
            if !in_omega_wedge_omega(&beta, om)? {
                cert.pi_structure = false;
            }
            cur = next;
        }
    }
    let win = window_span(om, window)?;
    let fam = FormSpan::from_forms(&family, ctx)?;
    cert.spans_window = fam.dim() == family.len() && fam.same_span(&win);
    if !cert.holds() {
        return Err(Error::Certificate(format!("standard basis checks failed: {cert:?}")));
    }
    Ok(StandardBasis {
        window,
        chain,
        taus,
        seeds,
        certificate: cert,
    })
}
