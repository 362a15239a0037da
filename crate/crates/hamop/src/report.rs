//! JSON report types. Field order is fixed by the struct declarations and
//! every collection is sorted before serialization, so identical inputs
//! produce byte-identical reports.

use serde::Serialize;

use crate::jacobi::{SupportReport, Tensor, Verdict};
use crate::operators::DiffOp;
use crate::oracle::OracleReport;
use crate::render::{render_expr, render_rational};
use crate::session::SessionConfig;

/// One operator coefficient in normal form.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OpEntryJson {
    pub row: usize,
    pub col: usize,
    pub i: Vec<u32>,
    pub coeff: String,
}

pub fn operator_entries(op: &DiffOp, cfg: &SessionConfig) -> Vec<OpEntryJson> {
    op.entries()
        .map(|((row, col, index), coeff)| OpEntryJson {
            row: *row,
            col: *col,
            i: index.entries().to_vec(),
            coeff: render_expr(coeff, cfg),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OperatorJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<OpEntryJson>,
}

pub fn operator_json(op: &DiffOp, cfg: &SessionConfig) -> OperatorJson {
    OperatorJson {
        rows: op.rows(),
        cols: op.cols(),
        entries: operator_entries(op, cfg),
    }
}

/// One defining-tensor entry.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TensorEntryJson {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub k: Vec<u32>,
    pub l: Vec<u32>,
    pub expr: String,
}

pub fn tensor_entries(t: &Tensor, cfg: &SessionConfig) -> Vec<TensorEntryJson> {
    t.iter()
        .map(|((alpha, beta, gamma, k, l), value)| TensorEntryJson {
            alpha: *alpha,
            beta: *beta,
            gamma: *gamma,
            k: k.entries().to_vec(),
            l: l.entries().to_vec(),
            expr: render_expr(value, cfg),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct SupportsJson {
    pub s: u32,
    pub n: std::collections::BTreeMap<String, u32>,
    pub r: Vec<(u32, u32)>,
    pub q_prime: Vec<(u32, u32)>,
    pub q_double_prime: Vec<(u32, u32)>,
}

pub fn supports_json(sup: &SupportReport) -> SupportsJson {
    SupportsJson {
        s: sup.order,
        n: sup
            .jet_orders
            .iter()
            .map(|(l, n)| (l.to_string(), *n))
            .collect(),
        r: sup.r.clone(),
        q_prime: sup.q_prime.clone(),
        q_double_prime: sup.q_double_prime.clone(),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CheckJson {
    pub skew: bool,
    pub defect: Vec<OpEntryJson>,
    pub hamiltonian: bool,
    pub entries: Vec<TensorEntryJson>,
    pub supports: Option<SupportsJson>,
}

pub fn check_json(
    verdict: &Verdict,
    supports: Option<&SupportReport>,
    cfg: &SessionConfig,
) -> CheckJson {
    let mut entries = Vec::with_capacity(verdict.witnesses.len());
    for ((alpha, beta, gamma, k, l), value) in &verdict.witnesses {
        entries.push(TensorEntryJson {
            alpha: *alpha,
            beta: *beta,
            gamma: *gamma,
            k: k.entries().to_vec(),
            l: l.entries().to_vec(),
            expr: render_expr(value, cfg),
        });
    }
    CheckJson {
        skew: verdict.skew,
        defect: operator_entries(&verdict.defect, cfg),
        hamiltonian: verdict.hamiltonian,
        entries,
        supports: supports.map(supports_json),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct QJson {
    pub count: usize,
    pub entries: Vec<TensorEntryJson>,
}

pub fn q_json(t: &Tensor, cfg: &SessionConfig) -> QJson {
    let entries = tensor_entries(t, cfg);
    QJson {
        count: entries.len(),
        entries,
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OracleJson {
    pub seed: u64,
    pub trials: usize,
    pub residuals: Vec<String>,
}

pub fn oracle_json(report: &OracleReport) -> OracleJson {
    OracleJson {
        seed: report.seed,
        trials: report.trials,
        residuals: report.residuals.iter().map(render_rational).collect(),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct EulerJson {
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ErrorJson {
    pub error: ErrorBody,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

impl ErrorJson {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        ErrorJson {
            error: ErrorBody {
                kind: kind.to_string(),
                message: message.into(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Expr;
    use crate::jacobi::{is_hamiltonian, lambda_operator, supports};

    #[test]
    fn check_report_is_deterministic() {
        let cfg = SessionConfig::scalar();
        let op = lambda_operator(&Expr::jet1(0, 1));
        let verdict = is_hamiltonian(&op);
        let sup = supports(&op).unwrap();
        let a = serde_json::to_string_pretty(&check_json(&verdict, Some(&sup), &cfg)).unwrap();
        let b = serde_json::to_string_pretty(&check_json(&verdict, Some(&sup), &cfg)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"hamiltonian\": false"));
        assert!(a.contains("-u_1"));
    }

    #[test]
    fn oracle_report_prints_canonical_rationals() {
        let report = OracleReport {
            seed: 3,
            trials: 2,
            residuals: vec![
                num_rational::BigRational::new((-3).into(), 4.into()),
                num_rational::BigRational::from_integer(0.into()),
            ],
        };
        let json = serde_json::to_string(&oracle_json(&report)).unwrap();
        assert!(json.contains("\"-3/4\""));
        assert!(json.contains("\"0\""));
    }
}
