//! Matrix horizontal differential operators in right normal form: finitely
//! many coefficients multiplying powers of the total derivatives, acting
//! between families of expressions.
//!
//! Keeping every operator in normal form (coefficients to the left, derivative
//! monomials to the right) makes equality, the Lagrange adjoint and the
//! skew-adjointness test coefficient-wise.

use std::collections::BTreeMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::algebra::Expr;
use crate::calculus::{total_derivative, total_derivative_pow};
use crate::multiindex::{binom, MultiIndex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// A matrix horizontal differential operator. Entries map
/// `(row, col, derivative multi-index)` to a nonzero canonical coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOp {
    rows: usize,
    cols: usize,
    m: usize,
    entries: BTreeMap<(usize, usize, MultiIndex), Expr>,
}

impl DiffOp {
    pub fn zero(rows: usize, cols: usize, m: usize) -> DiffOp {
        DiffOp {
            rows,
            cols,
            m,
            entries: BTreeMap::new(),
        }
    }

    /// The scalar total-derivative operator `D_mu` (1x1).
    pub fn d(m: usize, mu: usize) -> DiffOp {
        let mut op = DiffOp::zero(1, 1, m);
        op.add_entry(0, 0, MultiIndex::unit(m, mu), Expr::one());
        op
    }

    /// Scalar multiplication operator by `f` (1x1, order zero).
    pub fn mult(f: Expr, m: usize) -> DiffOp {
        let mut op = DiffOp::zero(1, 1, m);
        op.add_entry(0, 0, MultiIndex::zero(m), f);
        op
    }

    /// Build a scalar (1x1, one independent variable) operator from
    /// `(order, coefficient)` pairs.
    pub fn scalar_terms(terms: impl IntoIterator<Item = (u32, Expr)>) -> DiffOp {
        let mut op = DiffOp::zero(1, 1, 1);
        for (k, c) in terms {
            op.add_entry(0, 0, MultiIndex::scalar(k), c);
        }
        op
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_indep(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Accumulate into an entry, dropping it if the sum cancels.
    pub fn add_entry(&mut self, row: usize, col: usize, index: MultiIndex, value: Expr) {
        debug_assert!(row < self.rows && col < self.cols);
        debug_assert_eq!(index.len(), self.m);
        if value.is_zero() {
            return;
        }
        let key = (row, col, index);
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

    pub fn entry(&self, row: usize, col: usize, index: &MultiIndex) -> Option<&Expr> {
        self.entries.get(&(row, col, index.clone()))
    }

    /// Entries sorted by `(row, col, index)`.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize, MultiIndex), &Expr)> {
        self.entries.iter()
    }

    /// Maximal total derivative order with a nonzero coefficient (derived,
    /// never stored).
    pub fn order(&self) -> u32 {
        self.entries
            .keys()
            .map(|(_, _, i)| i.order())
            .max()
            .unwrap_or(0)
    }

    /// Maximal total jet order among the coefficients of derivative order `l`
    /// (scalar case), or `None` when no such coefficient mentions a jet
    /// variable.
    pub fn jet_order(&self, l: u32) -> Option<u32> {
        self.entries
            .iter()
            .filter(|((_, _, i), _)| i.order() == l)
            .filter_map(|(_, c)| c.max_jet_order())
            .max()
    }

    /// Apply to a vector of expressions indexed by columns.
    pub fn apply(&self, v: &[Expr]) -> Result<Vec<Expr>, OperatorError> {
        if v.len() != self.cols {
            return Err(OperatorError::DimensionMismatch(format!(
                "operator has {} columns, argument has {} components",
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Expr::zero(); self.rows];
        for ((row, col, index), coeff) in &self.entries {
            let term = coeff.mul(&total_derivative_pow(&v[*col], index));
            out[*row].accumulate(&term);
        }
        Ok(out)
    }

    /// Composition in normal form via the generalized Leibniz rule:
    /// `D^i (f . D^j) = sum_r binom(i, r) D^(i-r) f . D^(r+j)`.
    pub fn compose(&self, other: &DiffOp) -> Result<DiffOp, OperatorError> {
        if self.cols != other.rows {
            return Err(OperatorError::DimensionMismatch(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.m != other.m {
            return Err(OperatorError::DimensionMismatch(
                "operators live over different numbers of independent variables".into(),
            ));
        }
        let mut out = DiffOp::zero(self.rows, other.cols, self.m);
        for ((row, mid, i), p_coeff) in &self.entries {
            // cache D^(i-r) of each inner coefficient as we walk r
            for ((mid2, col, j), q_coeff) in &other.entries {
                if mid2 != mid {
                    continue;
                }
                for r in i.iter_below() {
                    let b = binom(i, &r);
                    let diff = i.checked_sub(&r).expect("r <= i by construction");
                    let shifted = total_derivative_pow(q_coeff, &diff);
                    let coeff = p_coeff
                        .mul(&shifted)
                        .scale_rational(&BigRational::from_integer(b));
                    out.add_entry(*row, *col, r.add(j), coeff);
                }
            }
        }
        Ok(out)
    }

    /// Lagrange adjoint: transpose of the index blocks with every
    /// `(-D)^i . coeff` expanded back into normal form.
    pub fn adjoint(&self) -> DiffOp {
        let mut out = DiffOp::zero(self.cols, self.rows, self.m);
        for ((row, col, i), coeff) in &self.entries {
            let sign_i = if i.order() % 2 == 0 { 1 } else { -1 };
            for q in i.iter_below() {
                let b = binom(i, &q) * sign_i;
                let diff = i.checked_sub(&q).expect("q <= i");
                let shifted = total_derivative_pow(coeff, &diff);
                out.add_entry(
                    *col,
                    *row,
                    q,
                    shifted.scale_rational(&BigRational::from_integer(b)),
                );
            }
        }
        out
    }

    /// `P + P*`; empty exactly when the operator is Lagrange skew-adjoint.
    pub fn skew_defect(&self) -> Result<DiffOp, OperatorError> {
        if !self.is_square() {
            return Err(OperatorError::DimensionMismatch(
                "skew-adjointness only makes sense for square operators".into(),
            ));
        }
        Ok(self.addition(&self.adjoint()))
    }

    pub fn addition(&self, other: &DiffOp) -> DiffOp {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for ((row, col, i), coeff) in &other.entries {
            out.add_entry(*row, *col, i.clone(), coeff.clone());
        }
        out
    }

    pub fn negated(&self) -> DiffOp {
        DiffOp {
            rows: self.rows,
            cols: self.cols,
            m: self.m,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.neg()))
                .collect(),
        }
    }

    pub fn subtraction(&self, other: &DiffOp) -> DiffOp {
        self.addition(&other.negated())
    }

    /// Scale every coefficient by `f`.
    pub fn scaled(&self, f: &Expr) -> DiffOp {
        let mut out = DiffOp::zero(self.rows, self.cols, self.m);
        for ((row, col, i), coeff) in &self.entries {
            out.add_entry(*row, *col, i.clone(), coeff.mul(f));
        }
        out
    }

    /// Composition power (square operators).
    pub fn power(&self, k: u32) -> Result<DiffOp, OperatorError> {
        if !self.is_square() {
            return Err(OperatorError::DimensionMismatch(
                "operator powers need a square operator".into(),
            ));
        }
        let mut acc = DiffOp::identity(self.rows, self.m);
        for _ in 0..k {
            acc = acc.compose(self)?;
        }
        Ok(acc)
    }

    pub fn identity(n: usize, m: usize) -> DiffOp {
        let mut op = DiffOp::zero(n, n, m);
        for d in 0..n {
            op.add_entry(d, d, MultiIndex::zero(m), Expr::one());
        }
        op
    }

    /// Boundary current of the integration-by-parts identity (one independent
    /// variable): returns `psi` with
    /// `<zeta, P eta> - <P* zeta, eta> = D psi`.
    ///
    /// The identity is re-checked symbolically in debug builds.
    pub fn green_current(&self, zeta: &[Expr], eta: &[Expr]) -> Result<Expr, OperatorError> {
        if self.m != 1 {
            return Err(OperatorError::Unsupported(
                "boundary currents are only split in one independent variable".into(),
            ));
        }
        if zeta.len() != self.rows || eta.len() != self.cols {
            return Err(OperatorError::DimensionMismatch(format!(
                "operator is {}x{}, arguments have {} and {} components",
                self.rows,
                self.cols,
                zeta.len(),
                eta.len()
            )));
        }
        let mut psi = Expr::zero();
        for ((row, col, index), coeff) in &self.entries {
            let i = index.get(0);
            if i == 0 {
                continue;
            }
            let zp = zeta[*row].mul(coeff);
            for q in 0..i {
                let left = crate::calculus::d_pow1(&zp, q);
                let right = crate::calculus::d_pow1(&eta[*col], i - 1 - q);
                let term = left.mul(&right);
                if q % 2 == 0 {
                    psi.accumulate(&term);
                } else {
                    psi.accumulate(&term.neg());
                }
            }
        }
        #[cfg(debug_assertions)]
        {
            let lhs =
                pairing(zeta, &self.apply(eta)?).sub(&pairing(&self.adjoint().apply(zeta)?, eta));
            debug_assert!(
                total_derivative(&psi, 0).sub(&lhs).is_zero(),
                "boundary current failed its defining identity"
            );
        }
        Ok(psi)
    }
}

/// The natural pairing of two equally indexed families.
pub fn pairing(a: &[Expr], b: &[Expr]) -> Expr {
    debug_assert_eq!(a.len(), b.len());
    let mut out = Expr::zero();
    for (x, y) in a.iter().zip(b) {
        out.accumulate(&x.mul(y));
    }
    out
}
