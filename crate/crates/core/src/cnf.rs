//! CNF instances in dense sign form, DIMACS I/O, and clause counting.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A CNF formula stored as one sign vector per clause: `+1` for a positive
/// literal, `-1` for a negated literal, `0` when the variable is absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    clauses: Vec<Vec<i8>>,
}

impl CnfInstance {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i8>>) -> Result<Self> {
        for (j, clause) in clauses.iter().enumerate() {
            if clause.len() != num_vars {
                return Err(Error::Dimension(format!(
                    "clause {j} has {} signs, expected {num_vars}",
                    clause.len()
                )));
            }
            if let Some(bad) = clause.iter().find(|s| !(-1..=1).contains(*s)) {
                return Err(Error::InvalidArgument(format!("clause {j} has sign {bad}")));
            }
            if clause.iter().all(|&s| s == 0) {
                return Err(Error::EmptyClause(j));
            }
        }
        Ok(Self { num_vars, clauses })
    }

    /// Builds an instance from DIMACS-style literals (1-based, negative = negated).
    pub fn from_literals(num_vars: usize, clauses: &[Vec<i64>]) -> Result<Self> {
        let mut dense = Vec::with_capacity(clauses.len());
        for (j, lits) in clauses.iter().enumerate() {
            let mut signs = vec![0i8; num_vars];
            for &lit in lits {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > num_vars {
                    return Err(Error::InvalidArgument(format!(
                        "clause {j}: literal {lit} out of range 1..={num_vars}"
                    )));
                }
                let sign = if lit > 0 { 1 } else { -1 };
                if signs[var - 1] == -sign {
                    return Err(Error::InvalidArgument(format!(
                        "clause {j} contains both {var} and -{var}; tautologies have no sign form"
                    )));
                }
                signs[var - 1] = sign;
            }
            dense.push(signs);
        }
        Self::new(num_vars, dense)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i8>] {
        &self.clauses
    }

    /// Number of literals in clause `j`.
    pub fn clause_len(&self, j: usize) -> usize {
        self.clauses[j].iter().filter(|&&s| s != 0).count()
    }

    /// Parses the DIMACS CNF format: `c` comment lines, a `p cnf <vars> <clauses>`
    /// header, then whitespace-separated literals with each clause terminated by `0`.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        let mut current: Vec<i64> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                if header.is_some() {
                    return Err(Error::Parse { line: lineno, msg: "duplicate header".into() });
                }
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected `p cnf <vars> <clauses>`, got `{line}`"),
                    });
                }
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })
                };
                header = Some((parse(parts[2])?, parse(parts[3])?));
                continue;
            }
            let Some((num_vars, _)) = header else {
                return Err(Error::Parse { line: lineno, msg: "clause before `p cnf` header".into() });
            };
            for tok in line.split_whitespace() {
                let lit: i64 = tok
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("bad literal `{tok}`") })?;
                if lit == 0 {
                    if current.is_empty() {
                        return Err(Error::EmptyClause(clauses.len()));
                    }
                    clauses.push(std::mem::take(&mut current));
                } else {
                    if lit.unsigned_abs() as usize > num_vars {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("literal {lit} exceeds declared {num_vars} variables"),
                        });
                    }
                    current.push(lit);
                }
            }
        }

        let (num_vars, num_clauses) =
            header.ok_or(Error::Parse { line: 0, msg: "missing `p cnf` header".into() })?;
        if !current.is_empty() {
            // tolerate a missing final terminator
            clauses.push(current);
        }
        if clauses.len() != num_clauses {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {num_clauses} clauses, found {}", clauses.len()),
            });
        }
        Self::from_literals(num_vars, &clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for (i, &s) in clause.iter().enumerate() {
                if s != 0 {
                    let _ = write!(out, "{} ", (i as i64 + 1) * s as i64);
                }
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Number of clauses with at least one literal made true by `assignment`
/// (`+1` true, `-1` false).
pub fn maxsat_count(assignment: &[i8], cnf: &CnfInstance) -> Result<usize> {
    if assignment.len() != cnf.num_vars() {
        return Err(Error::Dimension(format!(
            "assignment has {} entries, instance has {} variables",
            assignment.len(),
            cnf.num_vars()
        )));
    }
    Ok(cnf
        .clauses()
        .iter()
        .filter(|clause| clause.iter().zip(assignment).any(|(&s, &v)| (s as i32) * (v as i32) > 0))
        .count())
}

/// Converts booleans to the ±1 encoding used by [`maxsat_count`].
pub fn to_signs(assignment: &[bool]) -> Vec<i8> {
    assignment.iter().map(|&b| if b { 1 } else { -1 }).collect()
}
