//! Sparse multivariate polynomials over the rationals, with atoms as
//! indeterminates.
//!
//! Monomials are ordered graded-lexicographically over the atom total order;
//! this order fixes the leading term used for monic normalization and makes
//! canonical forms reproducible across runs. The gcd is a primitive
//! pseudo-remainder sequence over a recursively chosen main variable, which is
//! all the cancellation the rational-function layer needs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::atom::Atom;

/// A power product of atoms. Factors are sorted ascending by atom and carry
/// strictly positive exponents; the empty product is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    factors: Vec<(Atom, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            factors: Vec::new(),
        }
    }

    pub fn atom(a: Atom) -> Self {
        Monomial {
            factors: vec![(a, 1)],
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.factors
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.factors.len() && j < other.factors.len() {
            match self.factors[i].0.cmp(&other.factors[j].0) {
                Ordering::Less => {
                    out.push(self.factors[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.factors[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((
                        self.factors[i].0.clone(),
                        self.factors[i].1 + other.factors[j].1,
                    ));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    /// Exact monomial quotient, `None` when some exponent would go negative.
    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut j = 0;
        for (a, e) in &self.factors {
            let mut e = *e;
            if j < other.factors.len() && other.factors[j].0 < *a {
                return None; // divisor has an atom we lack
            }
            if j < other.factors.len() && other.factors[j].0 == *a {
                if other.factors[j].1 > e {
                    return None;
                }
                e -= other.factors[j].1;
                j += 1;
            }
            if e > 0 {
                out.push((a.clone(), e));
            }
        }
        if j < other.factors.len() {
            return None;
        }
        Some(Monomial { factors: out })
    }

    /// Build from factors already sorted ascending by atom with positive
    /// exponents.
    pub fn from_sorted_factors(factors: Vec<(Atom, u32)>) -> Monomial {
        debug_assert!(factors.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(factors.iter().all(|(_, e)| *e > 0));
        Monomial { factors }
    }

    /// Raise every exponent: the monomial power.
    pub fn pow_self(&self, e: u32) -> Monomial {
        if e == 1 {
            return self.clone();
        }
        Monomial {
            factors: self
                .factors
                .iter()
                .map(|(a, p)| (a.clone(), p * e))
                .collect(),
        }
    }

    /// Strip atom `x` out: returns its exponent and the remaining monomial.
    fn split_atom(&self, x: &Atom) -> (u32, Monomial) {
        let mut rest = Vec::with_capacity(self.factors.len());
        let mut e = 0;
        for (a, p) in &self.factors {
            if a == x {
                e = *p;
            } else {
                rest.push((a.clone(), *p));
            }
        }
        (e, Monomial { factors: rest })
    }

    fn mul_atom_pow(&self, x: &Atom, e: u32) -> Monomial {
        if e == 0 {
            return self.clone();
        }
        self.mul(&Monomial {
            factors: vec![(x.clone(), e)],
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then lexicographic from the
    /// largest atom downward.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let mut it1 = self.factors.iter().rev();
            let mut it2 = other.factors.iter().rev();
            loop {
                match (it1.next(), it2.next()) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some((a1, e1)), Some((a2, e2))) => match a1.cmp(a2) {
                        Ordering::Greater => return Ordering::Greater,
                        Ordering::Less => return Ordering::Less,
                        Ordering::Equal => match e1.cmp(e2) {
                            Ordering::Equal => continue,
                            ord => return ord,
                        },
                    },
                }
            }
        })
    }
}

/// Sparse polynomial: monomial -> nonzero rational coefficient.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
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
        Poly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn atom(a: Atom) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::atom(a), BigRational::one());
        Poly { terms }
    }

    pub fn term(m: Monomial, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    /// `Some(c)` when the polynomial is the constant `c` (including 0).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                if m.is_one() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Leading (monomial, coefficient) under the graded-lex order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    /// In-place sum, merging the other term map into this one.
    pub fn add_assign_ref(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
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

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let pairs = self.terms.len() * other.terms.len();
        let coeff_mul = |c1: &BigRational, c2: &BigRational| -> BigRational {
            if c1.is_one() {
                c2.clone()
            } else if c2.is_one() {
                c1.clone()
            } else {
                c1 * c2
            }
        };
        if pairs >= 1024 {
            let mut items = Vec::with_capacity(pairs);
            for (m1, c1) in &self.terms {
                for (m2, c2) in &other.terms {
                    items.push((m1.mul(m2), coeff_mul(c1, c2)));
                }
            }
            return Poly::from_contributions(items);
        }
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), coeff_mul(c1, c2));
            }
        }
        out
    }

    /// Build from unsorted contributions, combining equal monomials. Sorting
    /// once and bulk-loading beats per-term tree inserts on large batches.
    pub fn from_contributions(mut items: Vec<(Monomial, BigRational)>) -> Poly {
        items.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Monomial, BigRational)> = Vec::with_capacity(items.len());
        for (m, c) in items {
            match merged.last_mut() {
                Some((lm, lc)) if *lm == m => {
                    *lc += c;
                    if lc.is_zero() {
                        merged.pop();
                    }
                }
                _ => {
                    if !c.is_zero() {
                        merged.push((m, c));
                    }
                }
            }
        }
        Poly {
            terms: merged.into_iter().collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Scale so the leading coefficient is 1.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, lc)) => {
                if lc.is_one() {
                    self.clone()
                } else {
                    let inv = lc.recip();
                    self.scale(&inv)
                }
            }
        }
    }

    /// Atoms appearing in the monomials of this polynomial (not descending
    /// into function-symbol arguments).
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                out.insert(a.clone());
            }
        }
        out
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.keys().map(|m| m.degree_in(a)).max().unwrap_or(0)
    }

    /// Exact polynomial division; `None` when the divisor does not divide.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.leading().unwrap();
        let dm = dm.clone();
        let dc = dc.clone();
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((rm, rc)) = r.leading() {
            let tm = rm.try_div(&dm)?;
            let tc = rc / &dc;
            // q += tc * tm; r -= (tc * tm) * d
            q.add_term(tm.clone(), tc.clone());
            for (m, c) in &d.terms {
                r.add_term(tm.mul(m), -(&tc * c));
            }
        }
        Some(q)
    }

    /// Exact division known to succeed.
    fn div_exact(&self, d: &Poly) -> Poly {
        self.exact_div(d)
            .expect("internal error: expected exact polynomial division")
    }

    /// View as a univariate polynomial in `x` with `Poly` coefficients.
    fn univariate_in(&self, x: &Atom) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_atom(x);
            out.entry(e)
                .or_insert_with(Poly::zero)
                .add_term(rest, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Content with respect to `x`: the gcd of the `x`-coefficients.
    /// Smaller coefficients first, so coprimality is detected early.
    fn content_wrt(&self, x: &Atom) -> Poly {
        let uni = self.univariate_in(x);
        let mut coeffs: Vec<&Poly> = uni.values().collect();
        coeffs.sort_by_key(|p| p.num_terms());
        let mut acc = Poly::zero();
        for p in coeffs {
            acc = gcd(&acc, p);
            if acc.is_one() {
                break;
            }
        }
        acc
    }

    /// Pseudo-remainder of `self` by `d` viewed in `x`. The divisor must have
    /// positive degree in `x` no larger than ours.
    fn prem(&self, d: &Poly, x: &Atom) -> Poly {
        let dd = d.degree_in(x);
        let d_uni = d.univariate_in(x);
        let lc_d = d_uni[&dd].clone();
        let mut r = self.clone();
        loop {
            if r.is_zero() {
                return r;
            }
            let dr = r.degree_in(x);
            if dr < dd {
                return r;
            }
            let r_uni = r.univariate_in(x);
            let lc_r = r_uni[&dr].clone();
            // r := lc_d * r - lc_r * x^(dr-dd) * d
            let mut next = r.mul(&lc_d);
            let shift = dr - dd;
            let lead = lc_r;
            for (e, p) in &d_uni {
                let part = p.mul(&lead);
                for (m, c) in &part.terms {
                    next.add_term(m.mul_atom_pow(x, e + shift), -c);
                }
            }
            debug_assert!(next.degree_in(x) < dr || next.is_zero());
            r = next;
        }
    }
}

/// Detect a proper power: `Some((base, e))` with `p = base^e`, `e >= 2`,
/// maximal `e`. Only attempted when some variable sees a constant leading
/// coefficient, which covers the monic denominators the rational-function
/// layer produces.
pub fn perfect_power(p: &Poly) -> Option<(Poly, u32)> {
    if p.as_constant().is_some() || p.num_terms() == 1 {
        return None;
    }
    // candidate exponent must divide every exponent-related degree
    let atoms = p.atoms();
    let mut e0: u32 = 0;
    for x in &atoms {
        e0 = gcd_u32(e0, p.degree_in(x));
    }
    if e0 < 2 {
        return None;
    }
    let x = atoms
        .iter()
        .find(|x| {
            let d = p.degree_in(x);
            d > 0
                && p.univariate_in(x)
                    .get(&d)
                    .map(|lc| lc.as_constant().is_some())
                    .unwrap_or(false)
        })?
        .clone();
    let mut divisors: Vec<u32> = (2..=e0).filter(|e| e0.is_multiple_of(*e)).collect();
    divisors.sort_unstable_by(|a, b| b.cmp(a));
    for e in divisors {
        if let Some(base) = nth_root_in(p, &x, e) {
            return Some((base, e));
        }
    }
    None
}

fn gcd_u32(a: u32, b: u32) -> u32 {
    if a == 0 {
        b
    } else {
        gcd_u32(b % a, a)
    }
}

/// Exact `e`-th root of `p` viewed as a univariate polynomial in `x` with a
/// constant leading coefficient, solved coefficient by coefficient from the
/// top. Returns `None` when `p` is not an exact power.
fn nth_root_in(p: &Poly, x: &Atom, e: u32) -> Option<Poly> {
    let n = p.degree_in(x);
    if !n.is_multiple_of(e) {
        return None;
    }
    let m = n / e;
    let uni = p.univariate_in(x);
    let lc = uni.get(&n)?.as_constant()?;
    // rational e-th root of the leading coefficient
    let root_lc = rational_nth_root(&lc, e)?;
    let mut root_uni: BTreeMap<u32, Poly> = BTreeMap::new();
    root_uni.insert(m, Poly::constant(root_lc.clone()));
    // the unknown coefficient enters the x^(n-t) relation linearly, scaled by
    // e * root_lc^(e-1)
    let linear = BigRational::from_integer(BigInt::from(e)) * pow_rational(root_lc, e - 1);
    for t in 1..=m {
        let target = uni.get(&(n - t)).cloned().unwrap_or_else(Poly::zero);
        let partial = uni_pow_coeff(&root_uni, e, n - t);
        let coeff = target.sub(&partial).scale(&linear.recip());
        if !coeff.is_zero() {
            root_uni.insert(m - t, coeff);
        }
    }
    let mut root = Poly::zero();
    for (deg, c) in &root_uni {
        for (mono, q) in &c.terms {
            root.add_term(mono.mul_atom_pow(x, *deg), q.clone());
        }
    }
    if root.pow(e) == *p {
        Some(root)
    } else {
        None
    }
}

fn pow_rational(q: BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= &q;
    }
    acc
}

fn rational_nth_root(q: &BigRational, e: u32) -> Option<BigRational> {
    use num_traits::Signed;
    if e.is_multiple_of(2) && q.is_negative() {
        return None;
    }
    let num = q.numer().nth_root(e);
    let den = q.denom().nth_root(e);
    let cand = BigRational::new(num, den);
    if pow_rational(cand.clone(), e) == *q {
        Some(cand)
    } else {
        None
    }
}

/// Coefficient of `x^k` in `(sum_j c_j x^j)^e`, expanded combinatorially over
/// the few known coefficients.
fn uni_pow_coeff(coeffs: &BTreeMap<u32, Poly>, e: u32, k: u32) -> Poly {
    // dynamic programming over repeated multiplication, tracking only the
    // needed range of degrees
    let mut acc: BTreeMap<u32, Poly> = BTreeMap::new();
    acc.insert(0, Poly::one());
    for _ in 0..e {
        let mut next: BTreeMap<u32, Poly> = BTreeMap::new();
        for (d1, c1) in &acc {
            for (d2, c2) in coeffs {
                let d = d1 + d2;
                if d > k {
                    continue;
                }
                let prod = c1.mul(c2);
                match next.entry(d) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(prod);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        o.get_mut().add_assign_ref(&prod);
                    }
                }
            }
        }
        next.retain(|_, p| !p.is_zero());
        acc = next;
    }
    acc.remove(&k).unwrap_or_else(Poly::zero)
}

/// Monic greatest common divisor over the rationals.
///
/// Constants are units, so any two nonzero polynomials without common
/// structure have gcd 1. `gcd(p, 0) = monic(p)`. Fast paths: exact division
/// in either direction, and a layered reduction when one side is a detected
/// perfect power (the common shape of denominators).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    let shared: Vec<&Atom> = atoms_a.intersection(&atoms_b).collect();
    if shared.is_empty() {
        return Poly::one();
    }

    // divisibility fast paths
    if b.exact_div(a).is_some() {
        return a.monic();
    }
    if a.exact_div(b).is_some() {
        return b.monic();
    }

    // layered reduction against the base of a perfect power:
    // gcd(a, base^e) is the product of e successive gcd layers with the base
    if let Some((base, e)) = perfect_power(b) {
        return gcd_layered(a, &base, e);
    }
    if let Some((base, e)) = perfect_power(a) {
        return gcd_layered(b, &base, e);
    }

    gcd_prs(a, b, &shared)
}

fn gcd_layered(a: &Poly, base: &Poly, e: u32) -> Poly {
    let mut total = Poly::one();
    let mut rest = a.clone();
    for _ in 0..e {
        let g = gcd(&rest, base);
        if g.is_one() {
            break;
        }
        rest = rest.div_exact(&g);
        total = total.mul(&g);
    }
    total.monic()
}

/// Subresultant pseudo-remainder sequence over a chosen main variable. No
/// content computations inside the loop; the content part of the answer is
/// short-circuited when the cheaper side's content is a unit.
fn gcd_prs(a: &Poly, b: &Poly, shared: &[&Atom]) -> Poly {
    // main-variable choice: minimize the smaller degree; prefer a variable in
    // which the lower-degree operand is monic (pseudo-division is then plain
    // division without growth)
    let mut best: Option<(&Atom, u32, bool)> = None;
    for x in shared {
        let da = a.degree_in(x);
        let db = b.degree_in(x);
        let dmin = da.min(db);
        let low = if da <= db { a } else { b };
        let lc_const = low
            .univariate_in(x)
            .get(&dmin)
            .map(|p| p.as_constant().is_some())
            .unwrap_or(false);
        let better = match &best {
            None => true,
            Some((_, bd, bm)) => dmin < *bd || (dmin == *bd && lc_const && !bm),
        };
        if better {
            best = Some((x, dmin, lc_const));
        }
    }
    let x = best.unwrap().0.clone();

    // content of the smaller operand first; a unit content on either side
    // makes the content part of the gcd trivial
    let (small, large) = if a.num_terms() <= b.num_terms() {
        (a, b)
    } else {
        (b, a)
    };
    let cont_small = small.content_wrt(&x);
    let cont_g = if cont_small.is_one() {
        Poly::one()
    } else {
        let cont_large = large.content_wrt(&x);
        gcd(&cont_small, &cont_large)
    };

    let (mut f1, mut f2) = if a.degree_in(&x) >= b.degree_in(&x) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    let mut g = Poly::one();
    let mut h = Poly::one();
    loop {
        let delta = f1.degree_in(&x) - f2.degree_in(&x);
        let r = f1.prem(&f2, &x);
        if r.is_zero() {
            break;
        }
        if r.degree_in(&x) == 0 {
            f2 = r;
            break;
        }
        let divisor = g.mul(&h.pow(delta));
        f1 = std::mem::replace(&mut f2, Poly::zero());
        // the subresultant divisions are exact; fall back to the undivided
        // remainder (any scalar multiple keeps the sequence correct)
        f2 = match r.exact_div(&divisor) {
            Some(q) => q,
            None => {
                debug_assert!(false, "subresultant division was not exact");
                r
            }
        };
        g = f1
            .univariate_in(&x)
            .get(&f1.degree_in(&x))
            .cloned()
            .expect("nonzero polynomial has a leading coefficient");
        if delta >= 1 {
            let num = g.pow(delta);
            let den = h.pow(delta - 1);
            h = match num.exact_div(&den) {
                Some(q) => q,
                None => {
                    debug_assert!(false, "subresultant scale update was not exact");
                    num
                }
            };
        }
    }
    if f2.degree_in(&x) == 0 {
        // primitive parts are coprime
        return cont_g.monic();
    }
    let fc = f2.content_wrt(&x);
    cont_g.mul(&f2.div_exact(&fc)).monic()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Atom {
        Atom::indep(0)
    }

    fn u(k: u32) -> Atom {
        Atom::jet1(0, k)
    }

    fn pa(a: Atom) -> Poly {
        Poly::atom(a)
    }

    #[test]
    fn ring_basics() {
        let p = pa(u(0)).add(&Poly::one());
        let q = p.sub(&p);
        assert!(q.is_zero());
        let sq = p.mul(&p);
        assert_eq!(sq.num_terms(), 3);
        assert_eq!(p.pow(2), sq);
    }

    #[test]
    fn graded_lex_leading() {
        // u1 * u0 has degree 2, beats u1 (degree 1); between equal degrees the
        // larger atom wins.
        let p = pa(u(1)).mul(&pa(u(0))).add(&pa(u(1))).add(&pa(u(0)).pow(2));
        let (lead, _) = p.leading().unwrap();
        assert_eq!(lead.degree(), 2);
        assert_eq!(lead.degree_in(&u(1)), 1);
        assert_eq!(lead.degree_in(&u(0)), 1);
    }

    #[test]
    fn exact_division() {
        let a = pa(u(0)).add(&Poly::one());
        let b = pa(u(0)).sub(&Poly::one());
        let prod = a.mul(&b);
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert_eq!(prod.exact_div(&b).unwrap(), a);
        assert!(prod.exact_div(&pa(u(1))).is_none());
        let half = prod.exact_div(&Poly::from_int(2)).unwrap();
        assert_eq!(half.scale(&BigRational::from_integer(2.into())), prod);
    }

    #[test]
    fn gcd_univariate() {
        // gcd(u0^2 - 1, u0^2 - 2u0 + 1) = u0 - 1
        let u0 = pa(u(0));
        let a = u0.pow(2).sub(&Poly::one());
        let b = u0
            .pow(2)
            .sub(&u0.scale(&BigRational::from_integer(2.into())))
            .add(&Poly::one());
        let g = gcd(&a, &b);
        assert_eq!(g, u0.sub(&Poly::one()));
    }

    #[test]
    fn gcd_multivariate() {
        // gcd((x + u1) * u0, (x + u1) * (u0 + 1)) = x + u1
        let f = pa(x()).add(&pa(u(1)));
        let a = f.mul(&pa(u(0)));
        let b = f.mul(&pa(u(0)).add(&Poly::one()));
        assert_eq!(gcd(&a, &b), f);
    }

    #[test]
    fn gcd_powers_of_common_factor() {
        let f = pa(u(2)).mul(&pa(u(0))).add(&pa(u(1))); // u0*u2 + u1
        let a = f.pow(3);
        let b = f.pow(5).mul(&pa(u(3)));
        assert_eq!(gcd(&a, &b), f.pow(3));
    }

    #[test]
    fn gcd_coprime() {
        let a = pa(u(0)).add(&Poly::one());
        let b = pa(u(1)).add(&Poly::one());
        assert!(gcd(&a, &b).is_one());
        assert!(gcd(&a, &Poly::from_int(7)).is_one());
    }

    #[test]
    fn gcd_with_zero() {
        let a = pa(u(0)).scale(&BigRational::from_integer(3.into()));
        assert_eq!(gcd(&a, &Poly::zero()), pa(u(0)));
        assert_eq!(gcd(&Poly::zero(), &a), pa(u(0)));
    }
}
