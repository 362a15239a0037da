//! Independent exact verification by substitution: densities are evaluated on
//! trigonometric-polynomial data, where the mean (the constant Fourier
//! coefficient) integrates every total derivative to exactly zero over a
//! period.
//!
//! Nothing here touches the defining-tensor assembly; the commutator densities
//! are built directly from evolutionary derivations and operator application,
//! so the two verdict routes stay independent. All arithmetic is rational and
//! exact: a residual of zero means zero.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{Atom, Expr};
use crate::calculus::ev;
use crate::operators::{pairing, DiffOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("expression contains an opaque function symbol")]
    OpaqueSymbolPresent,
    #[error("denominator does not evaluate to a nonzero constant")]
    NonConstantDenominator,
    #[error("evaluation supports a single independent variable only")]
    UnsupportedDimension,
    #[error("expression mentions the independent variable explicitly; its mean over a period is not defined")]
    IndependentVariablePresent,
    #[error("operator is not skew-adjoint")]
    NotSkewAdjoint,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Finite trigonometric polynomial with rational coefficients:
/// `sum_w cos_w * cos(w x) + sin_w * sin(w x)`, with the constant term stored
/// as the cosine coefficient at frequency zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrigPoly {
    // frequency -> (cosine coefficient, sine coefficient); no zero pairs,
    // and the sine coefficient at frequency 0 is always zero.
    coeffs: BTreeMap<u32, (BigRational, BigRational)>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut t = TrigPoly::zero();
        t.add_cos(0, c);
        t
    }

    pub fn one() -> Self {
        TrigPoly::constant(BigRational::one())
    }

    pub fn cos(freq: u32) -> Self {
        let mut t = TrigPoly::zero();
        t.add_cos(freq as i64, BigRational::one());
        t
    }

    pub fn sin(freq: u32) -> Self {
        let mut t = TrigPoly::zero();
        t.add_sin(freq as i64, BigRational::one());
        t
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.coeffs.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (&w, (c, _)) = self.coeffs.iter().next().unwrap();
                if w == 0 {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Accumulate `q * cos(freq x)`, folding negative frequencies by parity.
    pub fn add_cos(&mut self, freq: i64, q: BigRational) {
        if q.is_zero() {
            return;
        }
        let w = freq.unsigned_abs() as u32;
        let entry = self
            .coeffs
            .entry(w)
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        entry.0 += q;
        if entry.0.is_zero() && entry.1.is_zero() {
            self.coeffs.remove(&w);
        }
    }

    /// Accumulate `q * sin(freq x)`; the sine is odd in the frequency and
    /// vanishes at zero.
    pub fn add_sin(&mut self, freq: i64, q: BigRational) {
        if q.is_zero() || freq == 0 {
            return;
        }
        let w = freq.unsigned_abs() as u32;
        let signed = if freq < 0 { -q } else { q };
        let entry = self
            .coeffs
            .entry(w)
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        entry.1 += signed;
        if entry.0.is_zero() && entry.1.is_zero() {
            self.coeffs.remove(&w);
        }
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    pub fn add_assign_ref(&mut self, other: &TrigPoly) {
        for (&w, (c, s)) in &other.coeffs {
            self.add_cos(w as i64, c.clone());
            self.add_sin(w as i64, s.clone());
        }
    }

    pub fn neg(&self) -> TrigPoly {
        TrigPoly {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&w, (c, s))| (w, (-c, -s)))
                .collect(),
        }
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &BigRational) -> TrigPoly {
        if q.is_zero() {
            return TrigPoly::zero();
        }
        TrigPoly {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&w, (c, s))| (w, (c * q, s * q)))
                .collect(),
        }
    }

    /// Product via the product-to-sum identities; exact and closed on finite
    /// trigonometric polynomials.
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut out = TrigPoly::zero();
        for (&w1, (c1, s1)) in &self.coeffs {
            for (&w2, (c2, s2)) in &other.coeffs {
                let sum = w1 as i64 + w2 as i64;
                let diff = w1 as i64 - w2 as i64;
                let cc = c1 * c2 * &half;
                if !cc.is_zero() {
                    out.add_cos(diff, cc.clone());
                    out.add_cos(sum, cc);
                }
                let ss = s1 * s2 * &half;
                if !ss.is_zero() {
                    out.add_cos(diff, ss.clone());
                    out.add_cos(sum, -ss);
                }
                let sc = s1 * c2 * &half;
                if !sc.is_zero() {
                    out.add_sin(sum, sc.clone());
                    out.add_sin(diff, sc);
                }
                let cs = c1 * s2 * &half;
                if !cs.is_zero() {
                    out.add_sin(sum, cs.clone());
                    out.add_sin(diff, -cs);
                }
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> TrigPoly {
        let mut acc = TrigPoly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact derivative: each harmonic scales by its frequency and swaps
    /// cosine and sine with a sign. The mean of any derivative is zero.
    pub fn derivative(&self) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (&w, (c, s)) in &self.coeffs {
            if w == 0 {
                continue;
            }
            let wq = BigRational::from_integer(BigInt::from(w));
            out.add_cos(w as i64, s * &wq);
            out.add_sin(w as i64, -(c * &wq));
        }
        out
    }

    /// The mean over a period: the constant Fourier coefficient.
    pub fn mean(&self) -> BigRational {
        self.coeffs
            .get(&0)
            .map(|(c, _)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }
}

/// One trigonometric polynomial per dependent variable; jet values are its
/// analytic derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleAssignment {
    per_dep: Vec<TrigPoly>,
}

impl SampleAssignment {
    pub fn new(per_dep: Vec<TrigPoly>) -> Self {
        SampleAssignment { per_dep }
    }

    pub fn ndep(&self) -> usize {
        self.per_dep.len()
    }

    pub fn dep(&self, alpha: usize) -> &TrigPoly {
        &self.per_dep[alpha]
    }
}

struct JetValues<'a> {
    assignment: &'a SampleAssignment,
    cache: BTreeMap<(u32, u32), TrigPoly>,
}

impl<'a> JetValues<'a> {
    fn new(assignment: &'a SampleAssignment) -> Self {
        JetValues {
            assignment,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, dep: u32, order: u32) -> TrigPoly {
        if let Some(hit) = self.cache.get(&(dep, order)) {
            return hit.clone();
        }
        let value = if order == 0 {
            self.assignment.dep(dep as usize).clone()
        } else {
            self.get(dep, order - 1).derivative()
        };
        self.cache.insert((dep, order), value.clone());
        value
    }
}

fn eval_poly(p: &crate::algebra::Poly, jets: &mut JetValues<'_>) -> Result<TrigPoly, OracleError> {
    let mut out = TrigPoly::zero();
    for (mono, coeff) in p.terms() {
        let mut term = TrigPoly::constant(coeff.clone());
        for (atom, pow) in mono.factors() {
            let base = match atom {
                Atom::Indep(_) => return Err(OracleError::IndependentVariablePresent),
                Atom::Fn(_) => return Err(OracleError::OpaqueSymbolPresent),
                Atom::Jet(j) => {
                    if j.index.len() != 1 {
                        return Err(OracleError::UnsupportedDimension);
                    }
                    jets.get(j.dep, j.index.get(0))
                }
            };
            term = term.mul(&base.pow(*pow));
        }
        out.add_assign_ref(&term);
    }
    Ok(out)
}

/// Evaluate an expression on sampled data. The denominator must evaluate to a
/// nonzero constant; genuinely non-constant denominators are rejected rather
/// than approximated.
pub fn eval_expr(e: &Expr, a: &SampleAssignment) -> Result<TrigPoly, OracleError> {
    let mut jets = JetValues::new(a);
    let num = eval_poly(e.numerator(), &mut jets)?;
    if e.denominator().is_one() {
        return Ok(num);
    }
    let den = eval_poly(e.denominator(), &mut jets)?;
    match den.as_constant() {
        Some(c) if !c.is_zero() => Ok(num.scale(&c.recip())),
        _ => Err(OracleError::NonConstantDenominator),
    }
}

/// The functional of a density sample: its mean over the period. Linear, and
/// zero on every exact derivative.
pub fn functional(t: &TrigPoly) -> BigRational {
    t.mean()
}

/// Exact residual of the strengthened Jacobi identity on sampled data.
///
/// The three cyclic commutator densities are built symbolically from
/// evolutionary derivations and operator application, summed, evaluated, and
/// integrated. A nonzero residual disproves the identity; zero residuals
/// corroborate it on this sample.
pub fn jacobi_residual(
    op: &DiffOp,
    f: &[Expr],
    g: &[Expr],
    h: &[Expr],
    a: &SampleAssignment,
) -> Result<BigRational, OracleError> {
    if op.num_indep() != 1 {
        return Err(OracleError::UnsupportedDimension);
    }
    let ndep = op.rows();
    if !op.is_square() || f.len() != ndep || g.len() != ndep || h.len() != ndep {
        return Err(OracleError::DimensionMismatch(format!(
            "operator is {}x{}, arguments have {}, {}, {} components",
            op.rows(),
            op.cols(),
            f.len(),
            g.len(),
            h.len()
        )));
    }
    if a.ndep() != ndep {
        return Err(OracleError::DimensionMismatch(format!(
            "assignment has {} dependent variables, operator needs {}",
            a.ndep(),
            ndep
        )));
    }
    let defect = op
        .skew_defect()
        .map_err(|e| OracleError::DimensionMismatch(e.to_string()))?;
    if !defect.is_zero() {
        return Err(OracleError::NotSkewAdjoint);
    }
    let density = cyclic_density(op, f, g, h)
        .add(&cyclic_density(op, g, h, f))
        .add(&cyclic_density(op, h, f, g));
    let sample = eval_expr(&density, a)?;
    Ok(functional(&sample))
}

/// `<f, [ev_{phi(g)}, Lambda] h>` with `phi(g) = Lambda g`, computed as the
/// literal commutator.
fn cyclic_density(op: &DiffOp, f: &[Expr], g: &[Expr], h: &[Expr]) -> Expr {
    let phi = op.apply(g).expect("dimensions checked by the caller");
    let lh = op.apply(h).expect("dimensions checked by the caller");
    let ev_lh: Vec<Expr> = lh.iter().map(|e| ev(&phi, e)).collect();
    let ev_h: Vec<Expr> = h.iter().map(|e| ev(&phi, e)).collect();
    let l_evh = op.apply(&ev_h).expect("dimensions checked by the caller");
    let commutator: Vec<Expr> = ev_lh.iter().zip(&l_evh).map(|(x, y)| x.sub(y)).collect();
    pairing(f, &commutator)
}

/// Deterministic sample generation for a trial battery.
pub struct TrialSampler {
    rng: ChaCha8Rng,
    ndep: usize,
}

impl TrialSampler {
    pub fn new(seed: u64, ndep: usize) -> Self {
        TrialSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ndep,
        }
    }

    fn small_rational(&mut self) -> BigRational {
        let num = loop {
            let n: i64 = self.rng.gen_range(-3..=3);
            if n != 0 {
                break n;
            }
        };
        let den: i64 = self.rng.gen_range(1..=2);
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Trigonometric data with frequencies at most 3 and small rational
    /// coefficients; never identically zero.
    pub fn assignment(&mut self) -> SampleAssignment {
        let mut per_dep = Vec::with_capacity(self.ndep);
        for _ in 0..self.ndep {
            let mut t = TrigPoly::zero();
            let harmonics = self.rng.gen_range(1..=2);
            for _ in 0..harmonics {
                let freq: u32 = self.rng.gen_range(1..=3);
                let q = self.small_rational();
                if self.rng.gen_bool(0.5) {
                    t.add_cos(freq as i64, q);
                } else {
                    t.add_sin(freq as i64, q);
                }
            }
            if t.is_zero() {
                t.add_cos(1, BigRational::one());
            }
            per_dep.push(t);
        }
        SampleAssignment::new(per_dep)
    }

    /// A random differential polynomial of jet order at most 2 and degree at
    /// most 2 in the jets.
    pub fn differential_polynomial(&mut self) -> Expr {
        let mut out = Expr::zero();
        let terms = self.rng.gen_range(1..=3);
        for _ in 0..terms {
            let mut term = Expr::from_rational(self.small_rational());
            let degree = self.rng.gen_range(0..=2);
            for _ in 0..degree {
                let dep: u32 = self.rng.gen_range(0..self.ndep as u32);
                let order: u32 = self.rng.gen_range(0..=2);
                term = term.mul(&Expr::jet1(dep, order));
            }
            out = out.add(&term);
        }
        out
    }

    pub fn covector(&mut self) -> Vec<Expr> {
        (0..self.ndep)
            .map(|_| self.differential_polynomial())
            .collect()
    }
}

/// Residual battery: `trials` seeded draws of `(f, g, h, assignment)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub seed: u64,
    pub trials: usize,
    pub residuals: Vec<BigRational>,
}

impl OracleReport {
    pub fn all_zero(&self) -> bool {
        self.residuals.iter().all(|r| r.is_zero())
    }

    pub fn any_nonzero(&self) -> bool {
        self.residuals.iter().any(|r| !r.is_zero())
    }
}

pub fn run_trials(op: &DiffOp, seed: u64, trials: usize) -> Result<OracleReport, OracleError> {
    let mut sampler = TrialSampler::new(seed, op.rows());
    let mut residuals = Vec::with_capacity(trials);
    for _ in 0..trials {
        let f = sampler.covector();
        let g = sampler.covector();
        let h = sampler.covector();
        let a = sampler.assignment();
        residuals.push(jacobi_residual(op, &f, &g, &h, &a)?);
    }
    Ok(OracleReport {
        seed,
        trials,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::lambda_operator;

    fn u(k: u32) -> Expr {
        Expr::jet1(0, k)
    }

    fn assign_cos() -> SampleAssignment {
        SampleAssignment::new(vec![TrigPoly::cos(1)])
    }

    #[test]
    fn pythagorean_identity() {
        // u0^2 + u1^2 on u = cos x gives the constant 1
        let e = u(0).powi(2).unwrap().add(&u(1).powi(2).unwrap());
        let t = eval_expr(&e, &assign_cos()).unwrap();
        assert_eq!(t, TrigPoly::one());
    }

    #[test]
    fn product_to_sum() {
        // u0 * u1 on u = cos x is -(1/2) sin 2x
        let e = u(0).mul(&u(1));
        let t = eval_expr(&e, &assign_cos()).unwrap();
        let expected = TrigPoly::sin(2).scale(&BigRational::new((-1).into(), 2.into()));
        assert_eq!(t, expected);
    }

    #[test]
    fn derivative_has_zero_mean() {
        let densities = [u(0).mul(&u(1)).mul(&u(2)), u(1).powi(3).unwrap().add(&u(0))];
        for k in densities {
            let d = crate::calculus::total_derivative(&k, 0);
            let t = eval_expr(&d, &assign_cos()).unwrap();
            assert!(functional(&t).is_zero());
        }
    }

    #[test]
    fn functional_examples() {
        // mean of cos^2 x is 1/2
        let sq = TrigPoly::cos(1).mul(&TrigPoly::cos(1));
        assert_eq!(functional(&sq), BigRational::new(1.into(), 2.into()));
        assert_eq!(
            functional(&TrigPoly::constant(BigRational::new(7.into(), 3.into()))),
            BigRational::new(7.into(), 3.into())
        );
        assert!(functional(&TrigPoly::sin(3).derivative()).is_zero());
    }

    #[test]
    fn rejects_unsupported_expressions() {
        let phi = Expr::func("phi", vec![0, 0], vec![u(0), u(1)]);
        assert_eq!(
            eval_expr(&phi, &assign_cos()),
            Err(OracleError::OpaqueSymbolPresent)
        );
        assert_eq!(
            eval_expr(&Expr::indep(0), &assign_cos()),
            Err(OracleError::IndependentVariablePresent)
        );
        let rational = Expr::one().div(&u(0)).unwrap();
        assert_eq!(
            eval_expr(&rational, &assign_cos()),
            Err(OracleError::NonConstantDenominator)
        );
    }

    #[test]
    fn constant_denominator_after_evaluation_is_accepted() {
        // 1 / (u0^2 + u1^2) evaluates on u = cos x even though the
        // denominator is not syntactically constant
        let den = u(0).powi(2).unwrap().add(&u(1).powi(2).unwrap());
        let e = Expr::one().div(&den).unwrap();
        let t = eval_expr(&e, &assign_cos()).unwrap();
        assert_eq!(t, TrigPoly::one());
    }

    #[test]
    fn residual_vanishes_for_constant_coefficients() {
        let d = DiffOp::d(1, 0);
        let f = [u(0).mul(&u(1))];
        let g = [u(2).add(&Expr::one())];
        let h = [u(1).powi(2).unwrap()];
        let r = jacobi_residual(&d, &f, &g, &h, &assign_cos()).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn residual_rejects_non_skew() {
        let op = DiffOp::scalar_terms([(1, u(0))]);
        let f = [u(0)];
        assert_eq!(
            jacobi_residual(&op, &f, &f, &f, &assign_cos()),
            Err(OracleError::NotSkewAdjoint)
        );
    }

    #[test]
    fn counterexample_produces_nonzero_residual() {
        // lam = u1 is not Hamiltonian; some seeded trial must expose it
        let op = lambda_operator(&u(1));
        let report = run_trials(&op, 0, 20).unwrap();
        assert!(report.any_nonzero(), "residuals: {:?}", report.residuals);
    }

    #[test]
    fn hamiltonian_operator_passes_trials() {
        let op = DiffOp::d(1, 0);
        let report = run_trials(&op, 7, 10).unwrap();
        assert!(report.all_zero());
    }

    #[test]
    fn trials_are_reproducible() {
        let op = lambda_operator(&u(0));
        let a = run_trials(&op, 42, 5).unwrap();
        let b = run_trials(&op, 42, 5).unwrap();
        assert_eq!(a, b);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use crate::jacobi::bracket_density;
    use crate::teststrat::{arb_jet_operator, arb_jet_poly, arb_jet_skew_operator};
    use proptest::prelude::*;

    fn arb_assignment() -> impl Strategy<Value = SampleAssignment> {
        (1u32..=3, -2i64..=2, 1u32..=3, -2i64..=2).prop_map(|(f1, c1, f2, c2)| {
            let mut t = TrigPoly::cos(f1);
            if c1 != 0 {
                t = t.add(&TrigPoly::sin(f2).scale(&BigRational::new(c1.into(), 2.into())));
            }
            if c2 != 0 {
                t = t.add(&TrigPoly::constant(BigRational::new(c2.into(), 3.into())));
            }
            SampleAssignment::new(vec![t])
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // the mean kills every exact derivative of a periodic density
        #[test]
        fn mean_of_derivative_vanishes(e in arb_jet_poly(3), a in arb_assignment()) {
            let d = crate::calculus::total_derivative(&e, 0);
            let t = eval_expr(&d, &a).unwrap();
            prop_assert!(functional(&t).is_zero());
        }

        // the bracket induced by a skew operator is skew-symmetric under the
        // functional
        #[test]
        fn bracket_skew_symmetry(
            op in arb_jet_skew_operator(2),
            k in arb_jet_poly(2),
            l in arb_jet_poly(2),
            a in arb_assignment(),
        ) {
            let kl = bracket_density(&k, &l, &op).unwrap();
            let lk = bracket_density(&l, &k, &op).unwrap();
            let total = kl.add(&lk);
            let t = eval_expr(&total, &a).unwrap();
            prop_assert!(functional(&t).is_zero());
        }

        // adjoint correctness through the functional, independent of the
        // boundary-current splitting
        #[test]
        fn adjoint_pairing_under_functional(
            p in arb_jet_operator(3),
            zeta in arb_jet_poly(2),
            eta in arb_jet_poly(2),
            a in arb_assignment(),
        ) {
            let zeta = [zeta];
            let eta = [eta];
            let lhs = crate::operators::pairing(&zeta, &p.apply(&eta).unwrap());
            let rhs = crate::operators::pairing(&p.adjoint().apply(&zeta).unwrap(), &eta);
            let diff = lhs.sub(&rhs);
            let t = eval_expr(&diff, &a).unwrap();
            prop_assert!(functional(&t).is_zero());
        }
    }
}


#[cfg(test)]
mod trig_proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_trig() -> impl Strategy<Value = TrigPoly> {
        proptest::collection::vec((0u32..=4, -3i64..=3, -3i64..=3), 1..=3).prop_map(|entries| {
            let mut t = TrigPoly::zero();
            for (w, c, s) in entries {
                t.add_cos(w as i64, BigRational::new(c.into(), 2.into()));
                t.add_sin(w as i64, BigRational::new(s.into(), 3.into()));
            }
            t
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // the product rule holds for the exact trigonometric derivative
        #[test]
        fn derivative_product_rule(a in arb_trig(), b in arb_trig()) {
            let lhs = a.mul(&b).derivative();
            let rhs = a.derivative().mul(&b).add(&a.mul(&b.derivative()));
            prop_assert_eq!(lhs, rhs);
        }

        // multiplication is commutative and associative
        #[test]
        fn product_laws(a in arb_trig(), b in arb_trig(), c in arb_trig()) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        // derivatives have zero mean
        #[test]
        fn derivative_mean_vanishes(a in arb_trig()) {
            prop_assert!(a.derivative().mean().is_zero());
        }
    }
}
