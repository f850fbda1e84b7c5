//! 3-CNF formulas, DIMACS input and brute-force satisfiability.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Literal over a 1-based variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn from_dimacs(x: i64) -> Self {
        Literal { var: x.unsigned_abs() as usize, positive: x > 0 }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var)
        } else {
            write!(f, "!x{}", self.var)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("clause {clause} has {width} literals; at most 3 are allowed")]
    TooWide { clause: usize, width: usize },
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("clause {0} contains a variable and its negation")]
    Contradictory(usize),
    #[error("clause {clause} uses variable {var}, but the formula has {vars} variables")]
    VariableOutOfRange { clause: usize, var: usize, vars: usize },
    #[error("formula has no clauses")]
    NoClauses,
}

/// Conjunction of clauses, each a sorted set of 1 to 3 literals over
/// distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FormulaDoc", into = "FormulaDoc")]
pub struct CnfFormula {
    vars: usize,
    clauses: Vec<Vec<Literal>>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormulaDoc {
    clauses: Vec<Vec<i64>>,
    vars: usize,
}

impl TryFrom<FormulaDoc> for CnfFormula {
    type Error = CnfError;
    fn try_from(d: FormulaDoc) -> Result<Self, CnfError> {
        CnfFormula::new(d.vars, d.clauses.iter().map(|c| c.iter().map(|&x| Literal::from_dimacs(x)).collect()).collect())
    }
}

impl From<CnfFormula> for FormulaDoc {
    fn from(f: CnfFormula) -> Self {
        FormulaDoc { clauses: f.clauses.iter().map(|c| c.iter().map(|l| l.to_dimacs()).collect()).collect(), vars: f.vars }
    }
}

impl CnfFormula {
    pub fn new(vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self, CnfError> {
        if clauses.is_empty() {
            return Err(CnfError::NoClauses);
        }
        let mut out = Vec::with_capacity(clauses.len());
        for (i, mut c) in clauses.into_iter().enumerate() {
            let no = i + 1;
            c.sort();
            c.dedup();
            if c.is_empty() {
                return Err(CnfError::EmptyClause(no));
            }
            if c.len() > 3 {
                return Err(CnfError::TooWide { clause: no, width: c.len() });
            }
            if let Some(l) = c.iter().find(|l| l.var == 0 || l.var > vars) {
                return Err(CnfError::VariableOutOfRange { clause: no, var: l.var, vars });
            }
            if c.windows(2).any(|w| w[0].var == w[1].var) {
                return Err(CnfError::Contradictory(no));
            }
            out.push(c);
        }
        Ok(CnfFormula { vars, clauses: out })
    }

    /// Builds from DIMACS-style signed integers.
    pub fn from_ints(vars: usize, clauses: &[&[i64]]) -> Result<Self, CnfError> {
        CnfFormula::new(vars, clauses.iter().map(|c| c.iter().map(|&x| Literal::from_dimacs(x)).collect()).collect())
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    /// Clauses (1-based) containing `lit`, ascending.
    pub fn occurrences(&self, lit: Literal) -> Vec<usize> {
        (0..self.clauses.len()).filter(|&i| self.clauses[i].contains(&lit)).map(|i| i + 1).collect()
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| a.value(l.var) == l.positive))
    }

    /// First satisfying assignment in counting order, by exhaustive search.
    pub fn solve_brute_force(&self) -> Option<Assignment> {
        assert!(self.vars < 32, "brute force is for small formulas");
        (0u64..1 << self.vars)
            .map(|bits| Assignment::new((0..self.vars).map(|i| bits >> i & 1 == 1).collect()))
            .find(|a| self.is_satisfied_by(a))
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                s.push_str(&format!("{} ", l.to_dimacs()));
            }
            s.push_str("0\n");
        }
        s
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| format!("({})", c.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" | ")))
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

/// Parses DIMACS CNF: `c` comment lines, one `p cnf <vars> <clauses>`
/// header, clauses as signed integers terminated by `0`. A line starting
/// with `%` ends the input.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, CnfError> {
    let syntax = |line: usize, message: String| CnfError::Syntax { line, message };
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut cur: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(syntax(line_no, "second problem line".into()));
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 || f[0] != "p" || f[1] != "cnf" {
                return Err(syntax(line_no, "expected `p cnf <vars> <clauses>`".into()));
            }
            let vars = f[2].parse().map_err(|_| syntax(line_no, format!("bad variable count `{}`", f[2])))?;
            let n = f[3].parse().map_err(|_| syntax(line_no, format!("bad clause count `{}`", f[3])))?;
            header = Some((vars, n));
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(syntax(line_no, "clause before problem line".into()));
        };
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| syntax(line_no, format!("bad literal `{tok}`")))?;
            if x == 0 {
                if cur.is_empty() {
                    return Err(CnfError::EmptyClause(clauses.len() + 1));
                }
                clauses.push(std::mem::take(&mut cur));
            } else {
                if x.unsigned_abs() as usize > vars {
                    return Err(CnfError::VariableOutOfRange { clause: clauses.len() + 1, var: x.unsigned_abs() as usize, vars });
                }
                cur.push(Literal::from_dimacs(x));
            }
        }
    }
    let Some((vars, n)) = header else {
        return Err(syntax(last_line.max(1), "missing problem line".into()));
    };
    if !cur.is_empty() {
        clauses.push(cur);
    }
    if clauses.len() != n {
        return Err(syntax(last_line.max(1), format!("header announces {n} clauses, found {}", clauses.len())));
    }
    CnfFormula::new(vars, clauses)
}

/// Truth values of variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn value(&self, var: usize) -> bool {
        self.values[var - 1]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_comments_and_multiline_clause() {
        let f = parse_dimacs("c hello\np cnf 3 2\n1 -2\n 3 0\n-1 0\n%\n0\n").unwrap();
        assert_eq!(f.vars(), 3);
        assert_eq!(f.clauses(), &[vec![Literal::pos(1), Literal::neg(2), Literal::pos(3)], vec![Literal::neg(1)]]);
        assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn rejects() {
        assert_eq!(parse_dimacs("p cnf 4 1\n1 2 3 4 0\n"), Err(CnfError::TooWide { clause: 1, width: 4 }));
        assert_eq!(parse_dimacs("p cnf 2 1\n1 -1 0\n"), Err(CnfError::Contradictory(1)));
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 x 0\n"), Err(CnfError::Syntax { line: 2, .. })));
        assert!(matches!(parse_dimacs("1 2 0\n"), Err(CnfError::Syntax { line: 1, .. })));
        assert!(matches!(parse_dimacs("p cnf 1 1\n2 0\n"), Err(CnfError::VariableOutOfRange { .. })));
        assert!(matches!(parse_dimacs("p cnf 1 2\n1 0\n"), Err(CnfError::Syntax { .. })));
    }

    #[test]
    fn duplicate_literals_collapse() {
        let f = CnfFormula::from_ints(1, &[&[1, 1]]).unwrap();
        assert_eq!(f.clauses()[0], vec![Literal::pos(1)]);
    }

    #[test]
    fn brute_force_sat() {
        let unsat = CnfFormula::from_ints(1, &[&[1], &[-1]]).unwrap();
        assert_eq!(unsat.solve_brute_force(), None);
        let f = CnfFormula::from_ints(2, &[&[1, 2], &[-1]]).unwrap();
        let a = f.solve_brute_force().unwrap();
        assert_eq!(a.values(), &[false, true]);
        assert_eq!(f.occurrences(Literal::neg(1)), vec![2]);
    }

    #[test]
    fn serde_form() {
        let f = CnfFormula::from_ints(2, &[&[1, -2]]).unwrap();
        let j = serde_json::to_string(&f).unwrap();
        assert_eq!(j, r#"{"clauses":[[1,-2]],"vars":2}"#);
        assert_eq!(serde_json::from_str::<CnfFormula>(&j).unwrap(), f);
    }
}
