//! Multi-indices of derivative orders and the combinatorial coefficients
//! (binomial, trinomial and their primed variants) used by the defining-system
//! assembly.
//!
//! All coefficients are computed in arbitrary-precision integers. Out-of-range
//! arguments yield 0 instead of an error: the implicit summations that consume
//! these coefficients rely on vanishing terms to delimit their ranges.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// An m-tuple of nonnegative derivative orders, one per independent variable.
///
/// The length is fixed per session (`m`); the scalar case `m = 1` behaves as a
/// plain nonnegative integer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    /// The zero index of length `m`.
    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }

    /// The unit index `(mu)`: one in slot `mu`, zero elsewhere.
    pub fn unit(m: usize, mu: usize) -> Self {
        let mut e = vec![0; m];
        e[mu] = 1;
        MultiIndex(e)
    }

    /// Scalar index for the one-dimensional case.
    pub fn scalar(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, mu: usize) -> u32 {
        self.0[mu]
    }

    /// Total order `|i|`: the sum of the entries.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `i + (mu)`.
    pub fn bump(&self, mu: usize) -> Self {
        let mut e = self.0.clone();
        e[mu] += 1;
        MultiIndex(e)
    }

    /// `i - (mu)`, or `None` when slot `mu` is already zero.
    pub fn drop(&self, mu: usize) -> Option<Self> {
        if self.0[mu] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[mu] -= 1;
        Some(MultiIndex(e))
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise subtraction; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Componentwise `self <= other`.
    pub fn leq(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// All indices `r` with `0 <= r <= self` componentwise.
    pub fn iter_below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::with_capacity(self.len()))];
        for &cap in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (cap as usize + 1));
            for prefix in &out {
                for v in 0..=cap {
                    let mut e = prefix.0.clone();
                    e.push(v);
                    next.push(MultiIndex(e));
                }
            }
            out = next;
        }
        out
    }

    /// All ordered triples `(p, k, l)` of indices with `p + k + l = self`
    /// componentwise.
    pub fn splits3(&self) -> Vec<(MultiIndex, MultiIndex, MultiIndex)> {
        let mut out = vec![(
            MultiIndex(Vec::with_capacity(self.len())),
            MultiIndex(Vec::with_capacity(self.len())),
            MultiIndex(Vec::with_capacity(self.len())),
        )];
        for &total in &self.0 {
            let mut next = Vec::new();
            for (p, k, l) in &out {
                for a in 0..=total {
                    for b in 0..=(total - a) {
                        let c = total - a - b;
                        let mut pe = p.0.clone();
                        let mut ke = k.0.clone();
                        let mut le = l.0.clone();
                        pe.push(a);
                        ke.push(b);
                        le.push(c);
                        next.push((MultiIndex(pe), MultiIndex(ke), MultiIndex(le)));
                    }
                }
            }
            out = next;
        }
        out
    }
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n as u64 {
        acc *= k;
    }
    acc
}

/// Scalar binomial `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binom1(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    factorial(n as u32) / (factorial(k as u32) * factorial((n - k) as u32))
}

/// Multi-index binomial: the componentwise product of scalar binomials.
/// Zero whenever any component of `r` exceeds the corresponding one of `i`.
pub fn binom(i: &MultiIndex, r: &MultiIndex) -> BigInt {
    debug_assert_eq!(i.len(), r.len());
    let mut acc = BigInt::one();
    for (a, b) in i.entries().iter().zip(r.entries()) {
        if b > a {
            return BigInt::zero();
        }
        acc *= binom1(*a as i64, *b as i64);
    }
    acc
}

/// Scalar trinomial `i! / (p! k! l!)` when `p + k + l = i` with all parts
/// nonnegative, zero otherwise.
pub fn trinom1(i: i64, p: i64, k: i64, l: i64) -> BigInt {
    if p < 0 || k < 0 || l < 0 || i < 0 || p + k + l != i {
        return BigInt::zero();
    }
    factorial(i as u32) / (factorial(p as u32) * factorial(k as u32) * factorial(l as u32))
}

/// Multi-index trinomial: componentwise product of scalar trinomials; zero
/// unless `p + k + l = i` componentwise.
pub fn trinom(i: &MultiIndex, p: &MultiIndex, k: &MultiIndex, l: &MultiIndex) -> BigInt {
    let mut acc = BigInt::one();
    for mu in 0..i.len() {
        let t = trinom1(
            i.get(mu) as i64,
            p.get(mu) as i64,
            k.get(mu) as i64,
            l.get(mu) as i64,
        );
        if t.is_zero() {
            return BigInt::zero();
        }
        acc *= t;
    }
    acc
}

/// Primed binomial `C(i,k) + 2 C(i,k-1)` (scalar case).
pub fn binom_primed(i: i64, k: i64) -> BigInt {
    binom1(i, k) + 2 * binom1(i, k - 1)
}

/// Primed trinomial `(k - l) * i! / (p! k! l!)` when `p + k + l = i + 1` with
/// all parts nonnegative, zero otherwise (scalar case). Antisymmetric in
/// `(k, l)`.
pub fn trinom_primed(i: i64, p: i64, k: i64, l: i64) -> BigInt {
    if p < 0 || k < 0 || l < 0 || i < 0 || p + k + l != i + 1 {
        return BigInt::zero();
    }
    let num = factorial(i as u32);
    let den = factorial(p as u32) * factorial(k as u32) * factorial(l as u32);
    // i!/(p!k!l!) with p+k+l = i+1 is not integral in general, but (k-l)
    // times it always is: it equals C(i, p, k-1, l) - C(i, p, k, l-1).
    (BigInt::from(k - l) * num) / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn binom_basics() {
        assert_eq!(binom(&mi(&[3]), &mi(&[0])), BigInt::from(1));
        assert_eq!(binom(&mi(&[2, 1]), &mi(&[1, 0])), BigInt::from(2));
        assert_eq!(binom(&mi(&[2]), &mi(&[3])), BigInt::from(0));
        assert_eq!(binom1(5, 2), BigInt::from(10));
        assert_eq!(binom1(4, -1), BigInt::from(0));
    }

    #[test]
    fn binom_symmetry() {
        for n in 0..=12i64 {
            for k in 0..=n {
                assert_eq!(binom1(n, k), binom1(n, n - k));
            }
        }
    }

    #[test]
    fn trinom_basics() {
        assert_eq!(
            trinom(&mi(&[3]), &mi(&[1]), &mi(&[1]), &mi(&[1])),
            BigInt::from(6)
        );
        assert_eq!(
            trinom(&mi(&[2]), &mi(&[2]), &mi(&[0]), &mi(&[0])),
            BigInt::from(1)
        );
        assert_eq!(
            trinom(&mi(&[2]), &mi(&[1]), &mi(&[0]), &mi(&[0])),
            BigInt::from(0)
        );
    }

    #[test]
    fn binom_primed_basics() {
        assert_eq!(binom_primed(2, 0), BigInt::from(1));
        assert_eq!(binom_primed(2, 1), BigInt::from(4));
        assert_eq!(binom_primed(2, 3), BigInt::from(2));
    }

    #[test]
    fn trinom_primed_basics() {
        assert_eq!(trinom_primed(1, 0, 1, 1), BigInt::from(0));
        assert_eq!(trinom_primed(3, 0, 1, 3), BigInt::from(-2));
        assert_eq!(trinom_primed(2, 1, 2, 0), BigInt::from(2));
    }

    // Pascal-type identity for trinomials: the three decrements of an
    // (i+1)-trinomial sum back to it.
    #[test]
    fn trinom_pascal_identity() {
        for i in 0..=12i64 {
            for p in 0..=(i + 1) {
                for k in 0..=(i + 1 - p) {
                    let l = i + 1 - p - k;
                    let lhs =
                        trinom1(i, p - 1, k, l) + trinom1(i, p, k - 1, l) + trinom1(i, p, k, l - 1);
                    assert_eq!(lhs, trinom1(i + 1, p, k, l), "i={i} p={p} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn trinom_primed_antisymmetry() {
        for i in 0..=10i64 {
            for p in 0..=(i + 1) {
                for k in 0..=(i + 1 - p) {
                    let l = i + 1 - p - k;
                    assert_eq!(trinom_primed(i, p, k, l), -trinom_primed(i, p, l, k));
                }
            }
        }
    }

    // The primed trinomial agrees with the difference of plain trinomials on
    // its whole domain.
    #[test]
    fn trinom_primed_as_difference() {
        for i in 0..=12i64 {
            for p in 0..=(i + 1) {
                for k in 0..=(i + 1 - p) {
                    let l = i + 1 - p - k;
                    let diff = trinom1(i, p, k - 1, l) - trinom1(i, p, k, l - 1);
                    assert_eq!(trinom_primed(i, p, k, l), diff, "i={i} p={p} k={k} l={l}");
                }
            }
        }
    }

    // Recurrence step used when folding a total derivative into the primed
    // binomials: C'(i+1,k) - C'(i,k) = C'(i,k-1).
    #[test]
    fn binom_primed_step() {
        for i in 0..=12i64 {
            for k in 0..=(i + 2) {
                assert_eq!(
                    binom_primed(i + 1, k) - binom_primed(i, k),
                    binom_primed(i, k - 1)
                );
            }
        }
    }

    #[test]
    fn splits3_cover() {
        let j = mi(&[2]);
        let s = j.splits3();
        assert_eq!(s.len(), 6);
        for (p, k, l) in &s {
            assert_eq!(p.get(0) + k.get(0) + l.get(0), 2);
        }
        let j2 = mi(&[1, 1]);
        assert_eq!(j2.splits3().len(), 9);
    }

    #[test]
    fn iter_below_cover() {
        let i = mi(&[2, 1]);
        let all = i.iter_below();
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|r| r.leq(&i)));
    }
}
