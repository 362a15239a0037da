//! Deterministic plain-text serialization of expressions and operators.
//!
//! The output is stable across runs and platforms (canonical forms plus the
//! graded-lex term order decide everything) and parses back to an equal value.

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::algebra::{Atom, Expr, Monomial, Poly};
use crate::multiindex::MultiIndex;
use crate::operators::DiffOp;
use crate::session::SessionConfig;

pub fn render_rational(q: &BigRational) -> String {
    q.to_string()
}

fn render_jet_index(index: &MultiIndex) -> String {
    if index.len() == 1 {
        format!("{}", index.get(0))
    } else {
        let inner: Vec<String> = index.entries().iter().map(|e| e.to_string()).collect();
        format!("({})", inner.join(","))
    }
}

pub fn render_atom(a: &Atom, cfg: &SessionConfig) -> String {
    match a {
        Atom::Indep(mu) => {
            if cfg.m == 1 {
                "x".to_string()
            } else {
                format!("x{}", mu + 1)
            }
        }
        Atom::Jet(j) => {
            let head = if cfg.ndep() == 1 {
                "u".to_string()
            } else {
                format!("u{}", j.dep + 1)
            };
            format!("{}_{}", head, render_jet_index(&j.index))
        }
        Atom::Fn(f) => {
            let derivs = if f.slot_derivs.iter().any(|&d| d > 0) {
                let inner: Vec<String> = f.slot_derivs.iter().map(|d| d.to_string()).collect();
                format!("{{{}}}", inner.join(","))
            } else {
                String::new()
            };
            let args: Vec<String> = f.args.iter().map(|e| render_expr(e, cfg)).collect();
            format!("{}{}({})", f.name, derivs, args.join(","))
        }
    }
}

fn render_monomial(m: &Monomial, cfg: &SessionConfig) -> String {
    let parts: Vec<String> = m
        .factors()
        .iter()
        .map(|(a, e)| {
            let s = render_atom(a, cfg);
            if *e == 1 {
                s
            } else {
                format!("{s}^{e}")
            }
        })
        .collect();
    parts.join("*")
}

pub fn render_poly(p: &Poly, cfg: &SessionConfig) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    // descending graded-lex order
    for (idx, (mono, coeff)) in p.terms().collect::<Vec<_>>().into_iter().rev().enumerate() {
        let negative = coeff.is_negative();
        let mag = coeff.abs();
        if idx == 0 {
            if negative {
                out.push('-');
            }
        } else if negative {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if mono.is_one() {
            out.push_str(&render_rational(&mag));
        } else if mag.is_one() {
            out.push_str(&render_monomial(mono, cfg));
        } else {
            out.push_str(&render_rational(&mag));
            out.push('*');
            out.push_str(&render_monomial(mono, cfg));
        }
    }
    out
}

pub fn render_expr(e: &Expr, cfg: &SessionConfig) -> String {
    if e.denominator().is_one() {
        render_poly(e.numerator(), cfg)
    } else {
        format!(
            "({})/({})",
            render_poly(e.numerator(), cfg),
            render_poly(e.denominator(), cfg)
        )
    }
}

fn render_d_part(index: &MultiIndex, m: usize) -> Option<String> {
    if index.is_zero() {
        return None;
    }
    let mut parts = Vec::new();
    for mu in 0..index.len() {
        let e = index.get(mu);
        if e == 0 {
            continue;
        }
        let d = if m == 1 {
            "D".to_string()
        } else {
            format!("D{}", mu + 1)
        };
        if e == 1 {
            parts.push(d);
        } else {
            parts.push(format!("{d}^{e}"));
        }
    }
    Some(parts.join("*"))
}

/// Render one coefficient for use inside a `coeff*D^i` product: single terms
/// get their sign extracted, sums get parenthesized so reparsing cannot split
/// them.
fn render_coeff_for_term(e: &Expr, cfg: &SessionConfig) -> (bool, String) {
    if e.denominator().is_one() && e.numerator().num_terms() == 1 {
        let (mono, coeff) = e.numerator().terms().next().unwrap();
        let negative = coeff.is_negative();
        let mag = coeff.abs();
        let body = if mono.is_one() {
            render_rational(&mag)
        } else if mag.is_one() {
            render_monomial(mono, cfg)
        } else {
            format!("{}*{}", render_rational(&mag), render_monomial(mono, cfg))
        };
        (negative, body)
    } else if e.denominator().is_one() {
        (false, format!("({})", render_poly(e.numerator(), cfg)))
    } else {
        (false, render_expr(e, cfg))
    }
}

fn render_block(op: &DiffOp, row: usize, col: usize, cfg: &SessionConfig) -> String {
    let mut parts: Vec<(bool, String)> = Vec::new();
    for ((r, c, index), coeff) in op.entries() {
        if *r != row || *c != col {
            continue;
        }
        let (neg, coeff_text) = render_coeff_for_term(coeff, cfg);
        let text = match render_d_part(index, op.num_indep()) {
            None => coeff_text,
            Some(d) => {
                if coeff_text == "1" {
                    d
                } else {
                    format!("{coeff_text}*{d}")
                }
            }
        };
        parts.push((neg, text));
    }
    if parts.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (neg, text)) in parts.into_iter().enumerate() {
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&text);
    }
    out
}

/// DSL text form of an operator; matrix operators render as a bracketed grid.
pub fn render_operator(op: &DiffOp, cfg: &SessionConfig) -> String {
    if op.rows() == 1 && op.cols() == 1 {
        return render_block(op, 0, 0, cfg);
    }
    let mut rows = Vec::new();
    for r in 0..op.rows() {
        let mut cols = Vec::new();
        for c in 0..op.cols() {
            cols.push(render_block(op, r, c, cfg));
        }
        rows.push(format!("[{}]", cols.join(", ")));
    }
    format!("[{}]", rows.join(", "))
}
