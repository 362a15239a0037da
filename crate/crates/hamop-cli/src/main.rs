//! Command-line driver: parse the operator/expression DSL, run a
//! verification command, and emit a deterministic report.
//!
//! Exit codes: `check` returns 0 when the operator is Hamiltonian, 1 when it
//! is not, and 2 on any error. Every other command returns 0 on success and
//! 2 on error. Errors are written to stderr as structured JSON.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hamop::jacobi::{
    is_hamiltonian_capped, lambda_operator, q_tensor_capped, q_tensor_firstorder, supports,
    JacobiError, Verdict,
};
use hamop::oracle::run_trials;
use hamop::parse::{parse_expr, parse_operator, ParseError};
use hamop::render::{render_expr, render_operator};
use hamop::report::{
    check_json, operator_json, oracle_json, q_json, supports_json, ErrorJson, EulerJson,
};
use hamop::session::SessionConfig;
use hamop::DiffOp;

#[derive(Parser)]
#[command(
    name = "hamop",
    about = "Exact symbolic verification of Hamiltonian differential operators over jet spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Session config file (m=…, depvars=…, functions=…)
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Emit JSON instead of plain text
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether an operator is Hamiltonian
    Check {
        #[command(flatten)]
        common: Common,
        /// Safety cap on the total order of assembled tensor indices
        #[arg(long)]
        max_order: Option<u32>,
        /// Treat the input as the coefficient of the first-order family
        /// lam*D + 1/2*D(lam) and use its closed-form assembly
        #[arg(long)]
        fast_path: bool,
        /// Operator in the DSL (or the coefficient, with --fast-path)
        operator: String,
    },
    /// Assemble the defining tensor and report its nonzero entries
    Q {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_order: Option<u32>,
        #[arg(long)]
        fast_path: bool,
        operator: String,
    },
    /// Lagrange adjoint in normal form
    Adjoint {
        #[command(flatten)]
        common: Common,
        operator: String,
    },
    /// Variational derivative of a density, one component per dependent variable
    Euler {
        #[command(flatten)]
        common: Common,
        /// The density expression
        #[arg(short, long)]
        expr: String,
    },
    /// Seeded residual trials of the strengthened Jacobi identity
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        operator: String,
    },
    /// Structural support sets of the defining tensor (scalar case)
    Supports {
        #[command(flatten)]
        common: Common,
        operator: String,
    },
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        let kind = match &e {
            ParseError::Syntax { .. } | ParseError::Eval { .. } => "syntax",
            ParseError::UnknownSymbol { .. } => "unknown-symbol",
            ParseError::ArityMismatch { .. } => "arity-mismatch",
            ParseError::DimensionMismatch(_) => "dimension-mismatch",
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<JacobiError> for Failure {
    fn from(e: JacobiError) -> Self {
        let kind = match &e {
            JacobiError::NotSkewAdjoint(_) => "not-skew-adjoint",
            JacobiError::DimensionMismatch(_) => "dimension-mismatch",
            JacobiError::Unsupported(_) => "unsupported",
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<hamop::oracle::OracleError> for Failure {
    fn from(e: hamop::oracle::OracleError) -> Self {
        Failure::new("oracle", e.to_string())
    }
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let err = ErrorJson::new(f.kind, f.message);
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&err).expect("error reports serialize")
            );
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &Common) -> Result<SessionConfig, Failure> {
    match &common.config {
        None => Ok(SessionConfig::scalar()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
            SessionConfig::parse(&text).map_err(|e| Failure::new("config", e.to_string()))
        }
    }
}

fn load_operator(src: &str, cfg: &SessionConfig) -> Result<DiffOp, Failure> {
    let spec = parse_operator(src, cfg)?;
    let op = spec.op;
    if op.rows() != cfg.ndep() || op.cols() != cfg.ndep() {
        return Err(Failure::new(
            "dimension-mismatch",
            format!(
                "operator is {}x{}, session has {} dependent variable(s)",
                op.rows(),
                op.cols(),
                cfg.ndep()
            ),
        ));
    }
    Ok(op)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialize")
    );
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check {
            common,
            max_order,
            fast_path,
            operator,
        } => {
            let cfg = load_config(&common)?;
            let (verdict, op) = if fast_path {
                fast_path_verdict(&operator, &cfg)?
            } else {
                let op = load_operator(&operator, &cfg)?;
                (is_hamiltonian_capped(&op, max_order), op)
            };
            let sup = if cfg.m == 1 && cfg.ndep() == 1 && verdict.skew {
                Some(supports(&op).map_err(Failure::from)?)
            } else {
                None
            };
            if common.json {
                print_json(&check_json(&verdict, sup.as_ref(), &cfg));
            } else {
                println!("skew: {}", verdict.skew);
                if !verdict.skew {
                    println!("defect: {}", render_operator(&verdict.defect, &cfg));
                }
                println!("hamiltonian: {}", verdict.hamiltonian);
                for ((a, b, c, k, l), value) in &verdict.witnesses {
                    println!(
                        "witness [{a},{b},{c}] k={:?} l={:?}: {}",
                        k.entries(),
                        l.entries(),
                        render_expr(value, &cfg)
                    );
                }
            }
            Ok(if verdict.hamiltonian { 0 } else { 1 })
        }
        Command::Q {
            common,
            max_order,
            fast_path,
            operator,
        } => {
            let cfg = load_config(&common)?;
            let tensor = if fast_path {
                check_fast_path_session(&cfg)?;
                let lam = parse_expr(&operator, &cfg)?;
                q_tensor_firstorder(&lam)
            } else {
                let op = load_operator(&operator, &cfg)?;
                q_tensor_capped(&op, max_order)?
            };
            if common.json {
                print_json(&q_json(&tensor, &cfg));
            } else {
                if tensor.is_empty() {
                    println!("all entries vanish");
                }
                for ((a, b, c, k, l), value) in tensor.iter() {
                    println!(
                        "[{a},{b},{c}] k={:?} l={:?}: {}",
                        k.entries(),
                        l.entries(),
                        render_expr(value, &cfg)
                    );
                }
            }
            Ok(0)
        }
        Command::Adjoint { common, operator } => {
            let cfg = load_config(&common)?;
            let spec = parse_operator(&operator, &cfg)?;
            let adj = spec.op.adjoint();
            if common.json {
                print_json(&operator_json(&adj, &cfg));
            } else {
                println!("{}", render_operator(&adj, &cfg));
            }
            Ok(0)
        }
        Command::Euler { common, expr } => {
            let cfg = load_config(&common)?;
            let density = parse_expr(&expr, &cfg)?;
            let components: Vec<String> = (0..cfg.ndep())
                .map(|alpha| render_expr(&hamop::calculus::euler(&density, alpha as u32), &cfg))
                .collect();
            if common.json {
                print_json(&EulerJson { components });
            } else {
                for c in components {
                    println!("{c}");
                }
            }
            Ok(0)
        }
        Command::Oracle {
            common,
            seed,
            trials,
            operator,
        } => {
            let cfg = load_config(&common)?;
            let op = load_operator(&operator, &cfg)?;
            let report = run_trials(&op, seed, trials)?;
            if common.json {
                print_json(&oracle_json(&report));
            } else {
                println!("seed: {}", report.seed);
                println!("trials: {}", report.trials);
                for r in &report.residuals {
                    println!("{r}");
                }
            }
            Ok(0)
        }
        Command::Supports { common, operator } => {
            let cfg = load_config(&common)?;
            let op = load_operator(&operator, &cfg)?;
            let sup = supports(&op)?;
            if common.json {
                print_json(&supports_json(&sup));
            } else {
                println!("s: {}", sup.order);
                for (l, n) in &sup.jet_orders {
                    println!("n({l}): {n}");
                }
                println!("r: {:?}", sup.r);
                println!("q': {:?}", sup.q_prime);
                println!("q'': {:?}", sup.q_double_prime);
            }
            Ok(0)
        }
    }
}

fn check_fast_path_session(cfg: &SessionConfig) -> Result<(), Failure> {
    if cfg.m != 1 || cfg.ndep() != 1 {
        return Err(Failure::new(
            "unsupported",
            "the fast path needs one independent and one dependent variable",
        ));
    }
    Ok(())
}

fn fast_path_verdict(src: &str, cfg: &SessionConfig) -> Result<(Verdict, DiffOp), Failure> {
    check_fast_path_session(cfg)?;
    let lam = parse_expr(src, cfg)?;
    let op = lambda_operator(&lam);
    let q = q_tensor_firstorder(&lam);
    let witnesses: Vec<_> = q.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let verdict = Verdict {
        skew: true,
        defect: DiffOp::zero(1, 1, 1),
        hamiltonian: witnesses.is_empty(),
        witnesses,
    };
    Ok((verdict, op))
}
