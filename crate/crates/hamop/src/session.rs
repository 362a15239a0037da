//! Session configuration: the number of independent variables, the named
//! dependent variables, and the declared opaque function symbols with their
//! arities.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// Per-session dimensions and symbol declarations.
///
/// Parsed from a simple key-value header block:
///
/// ```text
/// m=1
/// depvars=u
/// functions=phi/2,psi/2,chi/2
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    pub m: usize,
    pub dep_vars: Vec<String>,
    pub functions: BTreeMap<String, usize>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig::scalar()
    }
}

impl SessionConfig {
    /// One independent variable, one dependent variable named `u`, no
    /// function symbols.
    pub fn scalar() -> Self {
        SessionConfig {
            m: 1,
            dep_vars: vec!["u".to_string()],
            functions: BTreeMap::new(),
        }
    }

    /// The scalar config extended with declared function symbols.
    pub fn scalar_with_functions(functions: &[(&str, usize)]) -> Self {
        let mut cfg = SessionConfig::scalar();
        for (name, arity) in functions {
            cfg.functions.insert((*name).to_string(), *arity);
        }
        cfg
    }

    pub fn ndep(&self) -> usize {
        self.dep_vars.len()
    }

    /// Parse the key-value header format. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<SessionConfig, ConfigError> {
        let mut m: Option<usize> = None;
        let mut dep_vars: Option<Vec<String>> = None;
        let mut functions = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Invalid {
                line: lineno,
                message: "expected key=value".to_string(),
            })?;
            match key.trim() {
                "m" => {
                    let v: usize = value.trim().parse().map_err(|_| ConfigError::Invalid {
                        line: lineno,
                        message: "m must be a positive integer".to_string(),
                    })?;
                    if v == 0 {
                        return Err(ConfigError::Invalid {
                            line: lineno,
                            message: "m must be at least 1".to_string(),
                        });
                    }
                    m = Some(v);
                }
                "depvars" => {
                    let names: Vec<String> = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                    if names.is_empty() {
                        return Err(ConfigError::Invalid {
                            line: lineno,
                            message: "depvars must list at least one name".to_string(),
                        });
                    }
                    for n in &names {
                        if !is_identifier(n) {
                            return Err(ConfigError::Invalid {
                                line: lineno,
                                message: format!("invalid dependent-variable name `{n}`"),
                            });
                        }
                    }
                    dep_vars = Some(names);
                }
                "functions" => {
                    for decl in value.split(',') {
                        let decl = decl.trim();
                        if decl.is_empty() {
                            continue;
                        }
                        let (name, arity) =
                            decl.split_once('/').ok_or_else(|| ConfigError::Invalid {
                                line: lineno,
                                message: format!("expected name/arity, got `{decl}`"),
                            })?;
                        let arity: usize =
                            arity.trim().parse().map_err(|_| ConfigError::Invalid {
                                line: lineno,
                                message: format!("invalid arity in `{decl}`"),
                            })?;
                        let name = name.trim().to_string();
                        if !is_identifier(&name) {
                            return Err(ConfigError::Invalid {
                                line: lineno,
                                message: format!("invalid function name `{name}`"),
                            });
                        }
                        if functions.insert(name.clone(), arity).is_some() {
                            return Err(ConfigError::Invalid {
                                line: lineno,
                                message: format!("function `{name}` declared twice"),
                            });
                        }
                    }
                }
                other => {
                    return Err(ConfigError::Invalid {
                        line: lineno,
                        message: format!("unknown key `{other}`"),
                    });
                }
            }
        }
        let cfg = SessionConfig {
            m: m.unwrap_or(1),
            dep_vars: dep_vars.unwrap_or_else(|| vec!["u".to_string()]),
            functions,
        };
        let mut seen = std::collections::BTreeSet::new();
        for name in &cfg.dep_vars {
            if !seen.insert(name.clone()) {
                return Err(ConfigError::Invalid {
                    line: 0,
                    message: format!("dependent variable `{name}` declared twice"),
                });
            }
        }
        Ok(cfg)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
