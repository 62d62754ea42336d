//! DIMACS CNF text.

use std::fmt::Write;

use teamgame_core::generators::{CnfFormula, GeneratorError};

#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error(transparent)]
    Formula(#[from] GeneratorError),
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let syntax = |message: String| DimacsError::Syntax { line: k + 1, message };
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if header.is_some() {
                return Err(syntax("second header".into()));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            match fields.as_slice() {
                ["cnf", v, c] => {
                    let v = v.parse().map_err(|_| syntax(format!("bad variable count {v:?}")))?;
                    let c = c.parse().map_err(|_| syntax(format!("bad clause count {c:?}")))?;
                    header = Some((v, c));
                }
                _ => return Err(syntax(format!("expected `p cnf <vars> <clauses>`, got {line:?}"))),
            }
            continue;
        }
        if header.is_none() {
            return Err(DimacsError::MissingHeader);
        }
        for tok in line.split_whitespace() {
            let lit: i32 = tok.parse().map_err(|_| syntax(format!("bad literal {tok:?}")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(lit);
            }
        }
    }
    let (vars, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.len() != declared {
        return Err(DimacsError::ClauseCount {
            declared,
            found: clauses.len(),
        });
    }
    Ok(CnfFormula::new(vars, clauses)?)
}

pub fn write_dimacs(formula: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", formula.num_vars(), formula.clauses().len());
    for clause in formula.clauses() {
        for lit in clause {
            write!(out, "{lit} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}
