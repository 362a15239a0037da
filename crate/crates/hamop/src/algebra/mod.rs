//! The expression kernel: canonical exact rational functions over atoms.
//!
//! An [`Expr`] is a quotient of two sparse polynomials over the rationals in
//! independent variables, jet variables and opaque function symbols, kept in
//! canonical form at all times:
//!
//! - the denominator is nonzero and monic under the graded-lex monomial order,
//! - numerator and denominator are coprime,
//! - zero is uniquely `0/1`.
//!
//! Equality of canonical forms is structural equality, which makes the zero
//! test (and therefore every verdict built on it) decidable.

mod atom;
mod poly;

pub use atom::{Atom, FnAtom, JetVar};
pub use poly::{gcd, Monomial, Poly};

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::multiindex::MultiIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot differentiate by a function-symbol atom")]
    InvalidAtom,
}

/// Canonical rational function over atoms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Expr {
        Expr {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn from_int(n: i64) -> Expr {
        Expr {
            num: Poly::from_int(n),
            den: Poly::one(),
        }
    }

    pub fn from_bigint(n: BigInt) -> Expr {
        Expr {
            num: Poly::constant(BigRational::from_integer(n)),
            den: Poly::one(),
        }
    }

    pub fn from_rational(q: BigRational) -> Expr {
        Expr {
            num: Poly::constant(q),
            den: Poly::one(),
        }
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        assert!(d != 0);
        Expr::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn atom(a: Atom) -> Expr {
        Expr {
            num: Poly::atom(a),
            den: Poly::one(),
        }
    }

    /// Jet variable as an expression.
    pub fn jet(dep: u32, index: MultiIndex) -> Expr {
        Expr::atom(Atom::jet(dep, index))
    }

    /// Scalar-case jet variable `u^dep_k`.
    pub fn jet1(dep: u32, k: u32) -> Expr {
        Expr::atom(Atom::jet1(dep, k))
    }

    pub fn indep(mu: u32) -> Expr {
        Expr::atom(Atom::indep(mu))
    }

    pub fn func(name: impl Into<String>, slot_derivs: Vec<u32>, args: Vec<Expr>) -> Expr {
        Expr::atom(Atom::func(name, slot_derivs, args))
    }

    /// Build from a numerator/denominator pair, normalizing to canonical form.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Expr, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Expr::normalized(num, den))
    }

    pub fn from_poly(num: Poly) -> Expr {
        Expr {
            num,
            den: Poly::one(),
        }
    }

    fn normalized(num: Poly, den: Poly) -> Expr {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = den.as_constant() {
            return Expr {
                num: if c.is_one() {
                    num
                } else {
                    num.scale(&c.recip())
                },
                den: Poly::one(),
            };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        Expr::finish_monic(num, den)
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    /// Decidable zero test: canonical forms make this a structural check.
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// `Some(q)` when the expression is the constant rational `q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if !self.den.is_one() {
            return None;
        }
        self.num.as_constant()
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            let num = self.num.add(&other.num);
            let g = gcd(&num, &self.den);
            let (num, den) = if g.is_one() {
                (num, self.den.clone())
            } else {
                (num.exact_div(&g).unwrap(), self.den.exact_div(&g).unwrap())
            };
            return Expr::finish_monic(num, den);
        }
        let g = gcd(&self.den, &other.den);
        if g.is_one() {
            let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
            let den = self.den.mul(&other.den);
            return Expr::finish_monic(num, den);
        }
        let da = self.den.exact_div(&g).unwrap();
        let db = other.den.exact_div(&g).unwrap();
        let num = self.num.mul(&db).add(&other.num.mul(&da));
        // common factors of the sum and the denominator all sit inside g
        let h = gcd(&num, &g);
        let num = if h.is_one() {
            num
        } else {
            num.exact_div(&h).unwrap()
        };
        let den = if h.is_one() {
            self.den.mul(&db)
        } else {
            self.den.exact_div(&h).unwrap().mul(&db)
        };
        Expr::finish_monic(num, den)
    }

    /// Rescale so a well-formed (coprime) pair is canonical.
    fn finish_monic(num: Poly, den: Poly) -> Expr {
        if num.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = den.as_constant() {
            return Expr {
                num: if c.is_one() {
                    num
                } else {
                    num.scale(&c.recip())
                },
                den: Poly::one(),
            };
        }
        let lc = den.leading().unwrap().1.clone();
        if lc.is_one() {
            Expr { num, den }
        } else {
            let inv = lc.recip();
            Expr {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    /// In-place accumulation: `self += other`. Falls back to [`Expr::add`]
    /// when denominators differ; polynomial accumulation merges term maps
    /// without cloning the accumulator.
    pub fn accumulate(&mut self, other: &Expr) {
        if other.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = other.clone();
            return;
        }
        if self.den.is_one() && other.den.is_one() {
            self.num.add_assign_ref(&other.num);
            return;
        }
        *self = self.add(other);
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        // cross-cancel so no final gcd is needed
        let g1 = gcd(&self.num, &other.den);
        let g2 = gcd(&other.num, &self.den);
        let n1 = if g1.is_one() {
            self.num.clone()
        } else {
            self.num.exact_div(&g1).unwrap()
        };
        let d2 = if g1.is_one() {
            other.den.clone()
        } else {
            other.den.exact_div(&g1).unwrap()
        };
        let n2 = if g2.is_one() {
            other.num.clone()
        } else {
            other.num.exact_div(&g2).unwrap()
        };
        let d1 = if g2.is_one() {
            self.den.clone()
        } else {
            self.den.exact_div(&g2).unwrap()
        };
        Expr::finish_monic(n1.mul(&n2), d1.mul(&d2))
    }

    pub fn scale_rational(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Expr {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, AlgebraError> {
        if other.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(self.mul(&Expr::finish_monic(other.den.clone(), other.num.clone())))
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn powi(&self, n: i64) -> Result<Expr, AlgebraError> {
        if n == 0 {
            if self.is_zero() {
                // 0^0 = 1 by the usual polynomial convention
                return Ok(Expr::one());
            }
            return Ok(Expr::one());
        }
        if n < 0 && self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let k = n.unsigned_abs() as u32;
        let (num, den) = (self.num.pow(k), self.den.pow(k));
        if n > 0 {
            Ok(Expr { num, den })
        } else {
            Ok(Expr::finish_monic(den, num))
        }
    }

    /// All atoms of the expression, descending into function-symbol
    /// arguments.
    pub fn atoms_deep(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        for p in [&self.num, &self.den] {
            for a in p.atoms() {
                if let Atom::Fn(f) = &a {
                    for arg in &f.args {
                        arg.collect_atoms(out);
                    }
                }
                out.insert(a);
            }
        }
    }

    /// Jet variables appearing anywhere in the expression, including inside
    /// function-symbol arguments.
    pub fn jet_vars(&self) -> BTreeSet<JetVar> {
        self.atoms_deep()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Jet(j) => Some(j),
                _ => None,
            })
            .collect()
    }

    pub fn contains_fn_symbol(&self) -> bool {
        self.atoms_deep().iter().any(|a| matches!(a, Atom::Fn(_)))
    }

    pub fn contains_indep(&self) -> bool {
        self.atoms_deep()
            .iter()
            .any(|a| matches!(a, Atom::Indep(_)))
    }

    /// Largest total jet order mentioned, if any jet variable occurs.
    pub fn max_jet_order(&self) -> Option<u32> {
        self.jet_vars().iter().map(|j| j.index.order()).max()
    }

    /// Partial derivative by a coordinate atom. The chain rule is applied
    /// through function-symbol arguments.
    pub fn partial(&self, a: &Atom) -> Result<Expr, AlgebraError> {
        if !a.is_coordinate() {
            return Err(AlgebraError::InvalidAtom);
        }
        Ok(self.derive(&mut |atom: &Atom| {
            if atom == a {
                Expr::one()
            } else {
                Expr::zero()
            }
        }))
    }

    /// Apply a derivation determined by its action on coordinate atoms.
    /// Function symbols are differentiated by the chain rule; the action is
    /// never consulted on them.
    pub fn derive(&self, action: &mut dyn FnMut(&Atom) -> Expr) -> Expr {
        let dn = derive_poly(&self.num, action);
        if self.den.is_one() {
            return dn;
        }
        let dd = derive_poly(&self.den, action);
        let den_e = Expr::from_poly(self.den.clone());
        let num_e = Expr::from_poly(self.num.clone());
        // (n/d)' = (n' d - n d') / d^2
        let t = dn.mul(&den_e).sub(&num_e.mul(&dd));
        t.div(&den_e.mul(&den_e)).expect("denominator is nonzero")
    }

    /// Simultaneous structural substitution of atoms by expressions.
    ///
    /// Keys are matched against atoms before their arguments are rewritten;
    /// a matched atom is replaced by its bound value without further
    /// substitution inside the value.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr, AlgebraError> {
        let num = substitute_poly(&self.num, bindings)?;
        let den = substitute_poly(&self.den, bindings)?;
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        num.div(&den)
    }
}

fn derive_poly(p: &Poly, action: &mut dyn FnMut(&Atom) -> Expr) -> Expr {
    let mut cache: BTreeMap<Atom, Expr> = BTreeMap::new();
    let mut contributions: Vec<(Monomial, BigRational)> = Vec::new();
    let mut expr_acc = Expr::zero();
    for (mono, coeff) in p.terms() {
        for (idx, (atom, pow)) in mono.factors().iter().enumerate() {
            let da = match cache.get(atom) {
                Some(hit) => hit,
                None => {
                    let computed = derive_atom(atom, action);
                    cache.entry(atom.clone()).or_insert(computed)
                }
            };
            if da.is_zero() {
                continue;
            }
            // coeff * pow * atom^(pow-1) * da * (other factors)
            let mut rest_factors = Vec::with_capacity(mono.factors().len());
            for (j, (a, e)) in mono.factors().iter().enumerate() {
                let e = if j == idx { e - 1 } else { *e };
                if e > 0 {
                    rest_factors.push((a.clone(), e));
                }
            }
            let rest = Monomial::from_sorted_factors(rest_factors);
            let scale = coeff * BigRational::from_integer(BigInt::from(*pow));
            if da.denominator().is_one() {
                // polynomial derivative: batch raw term contributions; the
                // coefficient is almost always 1, so skip the reducing
                // rational multiply in that case
                for (dm, dc) in da.numerator().terms() {
                    let c = if dc.is_one() {
                        scale.clone()
                    } else if scale.is_one() {
                        dc.clone()
                    } else {
                        &scale * dc
                    };
                    contributions.push((rest.mul(dm), c));
                }
                if contributions.len() >= 1_500_000 {
                    let chunk = std::mem::take(&mut contributions);
                    expr_acc.accumulate(&Expr::from_poly(Poly::from_contributions(chunk)));
                }
            } else {
                expr_acc.accumulate(&Expr::from_poly(Poly::term(rest, scale)).mul(da));
            }
        }
    }
    expr_acc.accumulate(&Expr::from_poly(Poly::from_contributions(contributions)));
    expr_acc
}

fn derive_atom(atom: &Atom, action: &mut dyn FnMut(&Atom) -> Expr) -> Expr {
    match atom {
        Atom::Indep(_) | Atom::Jet(_) => action(atom),
        Atom::Fn(f) => {
            let mut out = Expr::zero();
            for slot in 0..f.arity() {
                let inner = f.args[slot].derive(action);
                if inner.is_zero() {
                    continue;
                }
                let bumped = Expr::atom(Atom::from_fn(f.derive_slot(slot)));
                out.accumulate(&bumped.mul(&inner));
            }
            out
        }
    }
}

fn substitute_poly(p: &Poly, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr, AlgebraError> {
    let mut out = Expr::zero();
    for (mono, coeff) in p.terms() {
        let mut term = Expr::from_rational(coeff.clone());
        for (atom, pow) in mono.factors() {
            let image = if let Some(bound) = bindings.get(atom) {
                bound.clone()
            } else if let Atom::Fn(f) = atom {
                let args = f
                    .args
                    .iter()
                    .map(|arg| arg.substitute(bindings))
                    .collect::<Result<Vec<_>, _>>()?;
                Expr::atom(Atom::func(f.name.clone(), f.slot_derivs.clone(), args))
            } else {
                Expr::atom(atom.clone())
            };
            term = term.mul(&image.powi(*pow as i64)?);
        }
        out.accumulate(&term);
    }
    Ok(out)
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(k: u32) -> Expr {
        Expr::jet1(0, k)
    }

    fn x() -> Expr {
        Expr::indep(0)
    }

    #[test]
    fn cancellation_to_zero() {
        let a = u(0).add(&Expr::one());
        assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn gcd_cancellation_in_division() {
        // (u0^2 - 1) / (u0 - 1) = u0 + 1
        let num = u(0).mul(&u(0)).sub(&Expr::one());
        let den = u(0).sub(&Expr::one());
        let q = num.div(&den).unwrap();
        assert_eq!(q, u(0).add(&Expr::one()));
    }

    #[test]
    fn square_of_jet() {
        let sq = u(1).mul(&u(1));
        assert_eq!(sq, u(1).powi(2).unwrap());
    }

    #[test]
    fn negative_power_is_reciprocal() {
        // (phi*u2 + psi)^(-2) has numerator 1 and the square as denominator
        let phi = Expr::func("phi", vec![0, 0], vec![u(0), u(1)]);
        let psi = Expr::func("psi", vec![0, 0], vec![u(0), u(1)]);
        let base = phi.mul(&u(2)).add(&psi);
        let lam = base.powi(-2).unwrap();
        assert!(lam.numerator().is_one());
        let sq = base.mul(&base);
        assert!(sq.denominator().is_one());
        assert_eq!(lam.denominator(), sq.numerator());
        assert_eq!(lam.mul(&base).mul(&base), Expr::one());
    }

    #[test]
    fn pow_zero_and_cube() {
        let a = u(1).add(&x());
        assert!(a.powi(0).unwrap().is_one());
        assert_eq!(a.powi(3).unwrap(), a.mul(&a).mul(&a));
        assert!(Expr::zero().powi(-1).is_err());
    }

    #[test]
    fn partial_of_reciprocal_square() {
        // d/du2 (phi u2 + psi)^(-2) = -2 (phi u2 + psi)^(-3) phi
        let phi = Expr::func("phi", vec![0, 0], vec![u(0), u(1)]);
        let psi = Expr::func("psi", vec![0, 0], vec![u(0), u(1)]);
        let base = phi.mul(&u(2)).add(&psi);
        let lam = base.powi(-2).unwrap();
        let d = lam.partial(&Atom::jet1(0, 2)).unwrap();
        let expected = Expr::from_int(-2).mul(&base.powi(-3).unwrap()).mul(&phi);
        assert_eq!(d, expected);
    }

    #[test]
    fn chain_rule_through_composite_argument() {
        // d/du1 chi{0,1}(u0, u1^2/2) = chi{0,2}(u0, u1^2/2) * u1
        let w = u(1)
            .mul(&u(1))
            .scale_rational(&BigRational::new(1.into(), 2.into()));
        let chi_v = Expr::func("chi", vec![0, 1], vec![u(0), w.clone()]);
        let d = chi_v.partial(&Atom::jet1(0, 1)).unwrap();
        let expected = Expr::func("chi", vec![0, 2], vec![u(0), w]).mul(&u(1));
        assert_eq!(d, expected);
    }

    #[test]
    fn partial_of_absent_atom() {
        let e = x().mul(&u(0));
        assert!(e.partial(&Atom::jet1(0, 3)).unwrap().is_zero());
    }

    #[test]
    fn partial_by_fn_symbol_is_rejected() {
        let phi = Atom::func("phi", vec![0, 0], vec![u(0), u(1)]);
        assert_eq!(u(0).partial(&phi), Err(AlgebraError::InvalidAtom));
    }

    #[test]
    fn substitution_basics() {
        // u0 + u1^2 with {u0 -> 1, u1 -> x} gives 1 + x^2
        let e = u(0).add(&u(1).powi(2).unwrap());
        let mut b = BTreeMap::new();
        b.insert(Atom::jet1(0, 0), Expr::one());
        b.insert(Atom::jet1(0, 1), x());
        let s = e.substitute(&b).unwrap();
        assert_eq!(s, Expr::one().add(&x().powi(2).unwrap()));
    }

    #[test]
    fn substitution_of_function_symbol() {
        let phi = Expr::func("phi", vec![0, 0], vec![u(0), u(1)]);
        let w = u(1)
            .mul(&u(1))
            .scale_rational(&BigRational::new(1.into(), 2.into()));
        let composite = Expr::func("chi", vec![0, 1], vec![u(0), w]);
        let mut b = BTreeMap::new();
        b.insert(
            phi.atoms_deep()
                .into_iter()
                .find(|a| matches!(a, Atom::Fn(_)))
                .unwrap(),
            composite.clone(),
        );
        assert_eq!(phi.substitute(&b).unwrap(), composite);
    }

    #[test]
    fn substitution_division_by_zero() {
        let e = Expr::one().div(&u(0)).unwrap();
        let mut b = BTreeMap::new();
        b.insert(Atom::jet1(0, 0), Expr::zero());
        assert_eq!(e.substitute(&b), Err(AlgebraError::DivisionByZero));
    }

    #[test]
    fn zero_test_examples() {
        let a = u(0).add(&Expr::one());
        let e = a
            .mul(&a)
            .sub(&u(0).mul(&u(0)))
            .sub(&u(0).scale_rational(&BigRational::from_integer(2.into())))
            .sub(&Expr::one());
        assert!(e.is_zero());
        assert!(!u(1).is_zero());
    }

    #[test]
    fn solution_identity_collapses_to_zero() {
        // with phi = d(chi)/d(second slot) and psi = d(chi)/d(first slot)
        // evaluated at (u0, u1^2/2), the expression psi_{u1} - phi_{u0} u1
        // cancels exactly
        let w = u(1)
            .mul(&u(1))
            .scale_rational(&BigRational::new(1.into(), 2.into()));
        let phi = Expr::func("chi", vec![0, 1], vec![u(0), w.clone()]);
        let psi = Expr::func("chi", vec![1, 0], vec![u(0), w]);
        let psi_u1 = psi.partial(&Atom::jet1(0, 1)).unwrap();
        let phi_u0 = phi.partial(&Atom::jet1(0, 0)).unwrap();
        assert!(psi_u1.sub(&phi_u0.mul(&u(1))).is_zero());
    }

    #[test]
    fn rational_reconstruction() {
        let e = Expr::rat(-3, 4);
        assert_eq!(
            e.as_rational().unwrap(),
            BigRational::new((-3).into(), 4.into())
        );
        assert!(u(0).as_rational().is_none());
    }
}
