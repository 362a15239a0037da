//! Atoms: the indeterminates of the expression kernel.
//!
//! An atom is an independent variable, a jet variable, or an application of an
//! opaque function symbol to expression arguments. Opaque symbols carry a
//! per-argument-slot derivative count, so the chain rule stays total without
//! ever interpreting the symbol.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::{Arc, Mutex, OnceLock};

use crate::algebra::Expr;
use crate::multiindex::MultiIndex;

// Function atoms are hash-consed: structurally equal applications share one
// allocation, so equality and ordering short-circuit on pointer identity.
// The table is behind a mutex and only ever deduplicates, preserving value
// semantics.
static INTERNER: OnceLock<Mutex<HashSet<Arc<FnAtom>>>> = OnceLock::new();

fn intern(f: FnAtom) -> Arc<FnAtom> {
    let mut table = INTERNER
        .get_or_init(|| Mutex::new(HashSet::new()))
        .lock()
        .expect("interner lock");
    if let Some(hit) = table.get(&f) {
        return hit.clone();
    }
    let arc = Arc::new(f);
    table.insert(arc.clone());
    arc
}

/// A jet variable `u^alpha_i`: formal coordinate for the i-th derivative of
/// the dependent variable number `dep`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub dep: u32,
    pub index: MultiIndex,
}

/// An opaque function symbol applied to arguments, together with the number
/// of formal derivatives taken in each argument slot.
///
/// Two applications are equal exactly when name, slot derivatives and all
/// arguments are structurally equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnAtom {
    pub name: String,
    pub slot_derivs: Vec<u32>,
    pub args: Vec<Expr>,
}

impl FnAtom {
    /// The same application with one more derivative in `slot`.
    pub fn derive_slot(&self, slot: usize) -> FnAtom {
        let mut d = self.slot_derivs.clone();
        d[slot] += 1;
        FnAtom {
            name: self.name.clone(),
            slot_derivs: d,
            args: self.args.clone(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

/// The variant order (independent < jet < function symbol), then the inner
/// data, is the strict total order used as the canonical monomial ordering.
/// Function atoms are shared; comparisons short-circuit on pointer identity.
#[derive(Clone, Debug)]
pub enum Atom {
    /// Independent variable `x^mu` (0-based slot).
    Indep(u32),
    /// Jet variable `u^alpha_i`.
    Jet(JetVar),
    /// Opaque function application.
    Fn(Arc<FnAtom>),
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Atom::Indep(a), Atom::Indep(b)) => a == b,
            (Atom::Jet(a), Atom::Jet(b)) => a == b,
            (Atom::Fn(a), Atom::Fn(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl Eq for Atom {}

impl std::hash::Hash for Atom {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Atom::Indep(mu) => {
                0u8.hash(state);
                mu.hash(state);
            }
            Atom::Jet(j) => {
                1u8.hash(state);
                j.hash(state);
            }
            Atom::Fn(f) => {
                2u8.hash(state);
                f.hash(state);
            }
        }
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Atom::Indep(a), Atom::Indep(b)) => a.cmp(b),
            (Atom::Jet(a), Atom::Jet(b)) => a.cmp(b),
            (Atom::Fn(a), Atom::Fn(b)) => {
                if Arc::ptr_eq(a, b) {
                    Ordering::Equal
                } else {
                    a.cmp(b)
                }
            }
            (Atom::Indep(_), _) => Ordering::Less,
            (_, Atom::Indep(_)) => Ordering::Greater,
            (Atom::Jet(_), Atom::Fn(_)) => Ordering::Less,
            (Atom::Fn(_), Atom::Jet(_)) => Ordering::Greater,
        }
    }
}

impl Atom {
    pub fn indep(mu: u32) -> Atom {
        Atom::Indep(mu)
    }

    pub fn jet(dep: u32, index: MultiIndex) -> Atom {
        Atom::Jet(JetVar { dep, index })
    }

    /// Scalar-case jet variable `u^dep_k` (one independent variable).
    pub fn jet1(dep: u32, k: u32) -> Atom {
        Atom::Jet(JetVar {
            dep,
            index: MultiIndex::scalar(k),
        })
    }

    pub fn func(name: impl Into<String>, slot_derivs: Vec<u32>, args: Vec<Expr>) -> Atom {
        let name = name.into();
        debug_assert_eq!(slot_derivs.len(), args.len());
        Atom::Fn(intern(FnAtom {
            name,
            slot_derivs,
            args,
        }))
    }

    pub fn from_fn(f: FnAtom) -> Atom {
        Atom::Fn(intern(f))
    }

    /// A coordinate atom is one we can differentiate by: an independent or a
    /// jet variable, never a function application.
    pub fn is_coordinate(&self) -> bool {
        !matches!(self, Atom::Fn(_))
    }

    pub fn as_jet(&self) -> Option<&JetVar> {
        match self {
            Atom::Jet(j) => Some(j),
            _ => None,
        }
    }
}
