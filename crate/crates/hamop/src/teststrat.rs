//! Shared proptest strategies for the unit-level property tests.

use proptest::prelude::*;

use crate::algebra::{Atom, Expr};
use crate::multiindex::MultiIndex;
use crate::operators::DiffOp;

/// Small nonzero rational constants.
pub fn arb_rational() -> impl Strategy<Value = Expr> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::rat(n, d))
}

/// Coordinate atoms over one independent variable: `x` and jets up to
/// `max_order`.
pub fn arb_coordinate(max_order: u32) -> impl Strategy<Value = Atom> {
    (0..=max_order + 1).prop_map(move |k| {
        if k > max_order {
            Atom::indep(0)
        } else {
            Atom::jet1(0, k)
        }
    })
}

/// Random differential polynomial in `x, u_0..u_maxorder` with small degree.
pub fn arb_poly_expr(max_order: u32) -> impl Strategy<Value = Expr> {
    let term = (
        arb_rational(),
        proptest::collection::vec(arb_coordinate(max_order), 0..=2),
    )
        .prop_map(|(c, atoms)| {
            let mut t = c;
            for a in atoms {
                t = t.mul(&Expr::atom(a));
            }
            t
        });
    proptest::collection::vec(term, 1..=3).prop_map(|terms| {
        let mut out = Expr::zero();
        for t in terms {
            out = out.add(&t);
        }
        out
    })
}

/// Random rational expression: a small differential polynomial over a
/// denominator of the form `c + monomial`, enough to exercise the quotient
/// rule and cancellation without adversarial gcd chains.
pub fn arb_rational_expr(max_order: u32) -> impl Strategy<Value = Expr> {
    (
        arb_poly_expr(max_order),
        1i64..=3,
        arb_coordinate(max_order),
        0u32..=2,
    )
        .prop_map(|(n, c, a, e)| {
            let d = Expr::from_int(c).add(&Expr::atom(a).powi(e as i64).unwrap());
            n.div(&d).expect("nonzero denominator")
        })
}

/// Random polynomial density over two independent variables (for the
/// commuting-derivatives law).
pub fn arb_poly_expr_m2(max_order: u32) -> impl Strategy<Value = Expr> {
    let atom = (0..=max_order, 0..=max_order, proptest::bool::ANY).prop_map(|(i, j, indep)| {
        if indep {
            Atom::indep(i % 2)
        } else {
            Atom::jet(0, MultiIndex::new(vec![i, j]))
        }
    });
    let term = (arb_rational(), proptest::collection::vec(atom, 0..=2)).prop_map(|(c, atoms)| {
        let mut t = c;
        for a in atoms {
            t = t.mul(&Expr::atom(a));
        }
        t
    });
    proptest::collection::vec(term, 1..=3).prop_map(|terms| {
        let mut out = Expr::zero();
        for t in terms {
            out = out.add(&t);
        }
        out
    })
}

/// Random differential polynomial in the jets only (no explicit independent
/// variable); the evaluation oracle's domain.
pub fn arb_jet_poly(max_order: u32) -> impl Strategy<Value = Expr> {
    let atom = (0..=max_order).prop_map(|k| Atom::jet1(0, k));
    let term = (arb_rational(), proptest::collection::vec(atom, 0..=2)).prop_map(|(c, atoms)| {
        let mut t = c;
        for a in atoms {
            t = t.mul(&Expr::atom(a));
        }
        t
    });
    proptest::collection::vec(term, 1..=3).prop_map(|terms| {
        let mut out = Expr::zero();
        for t in terms {
            out = out.add(&t);
        }
        out
    })
}

/// Random scalar operator over the jets only, for oracle-side laws.
pub fn arb_jet_operator(max_op_order: u32) -> impl Strategy<Value = DiffOp> {
    proptest::collection::vec((0..=max_op_order, arb_jet_poly(2)), 1..=3)
        .prop_map(DiffOp::scalar_terms)
}

/// Random skew-adjoint scalar operator over the jets only.
pub fn arb_jet_skew_operator(max_op_order: u32) -> impl Strategy<Value = DiffOp> {
    arb_jet_operator(max_op_order).prop_map(|a| a.subtraction(&a.adjoint()))
}

/// Random scalar operator (one dependent variable, one independent variable)
/// of order at most `max_op_order` with polynomial coefficients.
pub fn arb_operator(max_op_order: u32) -> impl Strategy<Value = DiffOp> {
    proptest::collection::vec((0..=max_op_order, arb_poly_expr(2)), 1..=3)
        .prop_map(DiffOp::scalar_terms)
}
