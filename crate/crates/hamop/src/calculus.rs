//! The differential structure on the jet model: total derivatives, the jet
//! gradient, the variational (Euler) operator, evolutionary derivations and
//! their bracket, and the first-order structure operators with their adjoints.

use std::collections::BTreeMap;

use crate::algebra::{Atom, Expr, JetVar};
use crate::multiindex::MultiIndex;

/// A finitely supported family of expressions indexed by (dependent variable,
/// multi-index). Zero entries are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JetFamily {
    entries: BTreeMap<(u32, MultiIndex), Expr>,
}

impl JetFamily {
    pub fn new() -> Self {
        JetFamily {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, dep: u32, index: MultiIndex, value: Expr) {
        if !value.is_zero() {
            self.entries.insert((dep, index), value);
        }
    }

    pub fn add_to(&mut self, dep: u32, index: MultiIndex, value: Expr) {
        if value.is_zero() {
            return;
        }
        let key = (dep, index);
        match self.entries.remove(&key) {
            None => {
                self.entries.insert(key, value);
            }
            Some(mut old) => {
                old.accumulate(&value);
                if !old.is_zero() {
                    self.entries.insert(key, old);
                }
            }
        }
    }

    pub fn get(&self, dep: u32, index: &MultiIndex) -> Option<&Expr> {
        self.entries.get(&(dep, index.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, MultiIndex), &Expr)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// A finitely supported family with a leading independent-variable slot, the
/// codomain shape of the first-order structure operator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MuJetFamily {
    entries: BTreeMap<(usize, u32, MultiIndex), Expr>,
}

impl MuJetFamily {
    pub fn new() -> Self {
        MuJetFamily {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, mu: usize, dep: u32, index: MultiIndex, value: Expr) {
        if !value.is_zero() {
            self.entries.insert((mu, dep, index), value);
        }
    }

    pub fn get(&self, mu: usize, dep: u32, index: &MultiIndex) -> Option<&Expr> {
        self.entries.get(&(mu, dep, index.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, u32, MultiIndex), &Expr)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Total derivative in the direction `mu`: acts as `d/dx^mu` along solutions,
/// shifting every jet variable one order up in slot `mu` and passing through
/// function symbols by the chain rule.
pub fn total_derivative(e: &Expr, mu: usize) -> Expr {
    e.derive(&mut |atom: &Atom| match atom {
        Atom::Indep(nu) => {
            if *nu as usize == mu {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Jet(j) => Expr::jet(j.dep, j.index.bump(mu)),
        Atom::Fn(_) => unreachable!("derivation action is only consulted on coordinates"),
    })
}

/// Iterated total derivative `D^i`; the directions commute, so the order of
/// application is irrelevant.
pub fn total_derivative_pow(e: &Expr, i: &MultiIndex) -> Expr {
    let mut out = e.clone();
    for mu in 0..i.len() {
        for _ in 0..i.get(mu) {
            out = total_derivative(&out, mu);
        }
    }
    out
}

/// Scalar-case convenience: the single total derivative applied `k` times.
pub fn d_pow1(e: &Expr, k: u32) -> Expr {
    let mut out = e.clone();
    for _ in 0..k {
        out = total_derivative(&out, 0);
    }
    out
}

/// The jet gradient: the family of partials by every jet variable present.
pub fn jet_gradient(e: &Expr) -> JetFamily {
    let mut out = JetFamily::new();
    for j in e.jet_vars() {
        let d = e
            .partial(&Atom::Jet(j.clone()))
            .expect("jet variables are coordinates");
        out.insert(j.dep, j.index, d);
    }
    out
}

/// Variational derivative of a density with respect to dependent variable
/// `alpha`: the alternating sum of total derivatives of the jet partials.
pub fn euler(e: &Expr, alpha: u32) -> Expr {
    let mut out = Expr::zero();
    for (key, d) in jet_gradient(e).iter() {
        let (dep, index) = key;
        if *dep != alpha {
            continue;
        }
        let term = total_derivative_pow(d, index);
        if index.order() % 2 == 0 {
            out.accumulate(&term);
        } else {
            out.accumulate(&term.neg());
        }
    }
    out
}

/// Divergence of an m-component current.
pub fn divergence(psi: &[Expr]) -> Expr {
    let mut out = Expr::zero();
    for (mu, p) in psi.iter().enumerate() {
        out.accumulate(&total_derivative(p, mu));
    }
    out
}

/// Evolutionary derivation with characteristic `phi`: the unique vertical
/// derivation commuting with all total derivatives whose zeroth-order
/// components are `phi`. Prolongations `D^i phi` are computed on demand and
/// cached per call.
pub fn ev(phi: &[Expr], e: &Expr) -> Expr {
    let mut cache: BTreeMap<(u32, MultiIndex), Expr> = BTreeMap::new();
    e.derive(&mut |atom: &Atom| match atom {
        Atom::Indep(_) => Expr::zero(),
        Atom::Jet(j) => prolonged(phi, j, &mut cache),
        Atom::Fn(_) => unreachable!("derivation action is only consulted on coordinates"),
    })
}

fn prolonged(phi: &[Expr], j: &JetVar, cache: &mut BTreeMap<(u32, MultiIndex), Expr>) -> Expr {
    if let Some(hit) = cache.get(&(j.dep, j.index.clone())) {
        return hit.clone();
    }
    let value = match (0..j.index.len()).find_map(|mu| j.index.drop(mu).map(|prev| (mu, prev))) {
        None => phi[j.dep as usize].clone(),
        Some((mu, prev)) => {
            let lower = prolonged(
                phi,
                &JetVar {
                    dep: j.dep,
                    index: prev,
                },
                cache,
            );
            total_derivative(&lower, mu)
        }
    };
    cache.insert((j.dep, j.index.clone()), value.clone());
    value
}

/// The bracket of characteristics transported from the commutator of
/// evolutionary derivations: `ev_phi(psi) - ev_psi(phi)` componentwise.
pub fn characteristic_bracket(phi: &[Expr], psi: &[Expr]) -> Vec<Expr> {
    debug_assert_eq!(phi.len(), psi.len());
    phi.iter()
        .zip(psi)
        .map(|(p, q)| ev(phi, q).sub(&ev(psi, p)))
        .collect()
}

/// First-order structure operator on jet families:
/// `eta^alpha_{mu,i} = D_mu phi^alpha_i - phi^alpha_{i+(mu)}`.
/// Prolonged families are exactly its kernel.
pub fn nabla(phi: &JetFamily, m: usize) -> MuJetFamily {
    let mut out = MuJetFamily::new();
    let mut keys: Vec<(u32, MultiIndex)> = Vec::new();
    for (key, _) in phi.iter() {
        keys.push(key.clone());
        // an entry above the support still sees the shifted one below it
    }
    let mut targets: std::collections::BTreeSet<(usize, u32, MultiIndex)> =
        std::collections::BTreeSet::new();
    for (dep, index) in &keys {
        for mu in 0..m {
            targets.insert((mu, *dep, index.clone()));
            if let Some(prev) = index.drop(mu) {
                targets.insert((mu, *dep, prev));
            }
        }
    }
    for (mu, dep, index) in targets {
        let here = phi.get(dep, &index).cloned().unwrap_or_else(Expr::zero);
        let above = phi
            .get(dep, &index.bump(mu))
            .cloned()
            .unwrap_or_else(Expr::zero);
        let value = total_derivative(&here, mu).sub(&above);
        out.insert(mu, dep, index, value);
    }
    out
}

/// Lagrange dual of [`nabla`]:
/// `f_{alpha,i} = -sum_mu D_mu chi^mu_{alpha,i} - sum_mu chi^mu_{alpha,i-(mu)}`,
/// where terms with a negative index vanish.
pub fn nabla_star(chi: &MuJetFamily) -> JetFamily {
    let mut out = JetFamily::new();
    for ((mu, dep, index), value) in chi.iter() {
        out.add_to(*dep, index.clone(), total_derivative(value, *mu).neg());
        out.add_to(*dep, index.bump(*mu), value.neg());
    }
    out
}

/// Prolongation of a characteristic, truncated at total order `order`.
pub fn prolong(phi: &[Expr], order: u32, m: usize) -> JetFamily {
    let mut out = JetFamily::new();
    let mut frontier: Vec<MultiIndex> = vec![MultiIndex::zero(m)];
    let mut cache: BTreeMap<(u32, MultiIndex), Expr> = BTreeMap::new();
    while let Some(index) = frontier.pop() {
        for dep in 0..phi.len() as u32 {
            if out.get(dep, &index).is_none() {
                let value = prolonged(
                    phi,
                    &JetVar {
                        dep,
                        index: index.clone(),
                    },
                    &mut cache,
                );
                out.insert(dep, index.clone(), value);
            }
        }
        if index.order() < order {
            for mu in 0..m {
                let next = index.bump(mu);
                frontier.push(next);
            }
        }
    }
    out
}

/// Adjoint of the prolongation: collapses a finite family back to one
/// expression per dependent variable by alternating total derivatives. The
/// Euler operator is this composed with the jet gradient.
pub fn adjoint_prolongation(f: &JetFamily, ndep: usize) -> Vec<Expr> {
    let mut out = vec![Expr::zero(); ndep];
    for ((dep, index), value) in f.iter() {
        let term = total_derivative_pow(value, index);
        if index.order() % 2 == 0 {
            out[*dep as usize].accumulate(&term);
        } else {
            out[*dep as usize].accumulate(&term.neg());
        }
    }
    out
}
