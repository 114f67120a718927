//! TOML problem files.
//!
//! ```toml
//! dim = 2
//! anchor = [0, "1/2"]
//! objective = "abs(x1) - x2"
//! equalities = ["abs(x1) - x2"]
//! inequalities = ["x1"]
//!
//! [[set_A]]
//! coeffs = [1, 0]
//! rhs = "3/2"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::problem::{PolyhedralSet, Problem};
use crate::rational::{format_rational, parse_rational, Rational};

/// A rational written either as an integer or as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Scalar::Int(k) => Ok(Rational::from_integer((*k).into())),
            Scalar::Text(s) => {
                parse_rational(s).map_err(|e| Error::File(format!("bad rational {s:?}: {e}")))
            }
        }
    }

    /// Integers stay integers, everything else becomes a string.
    pub fn from_rational(r: &Rational) -> Scalar {
        if r.is_integer() {
            if let Ok(k) = i64::try_from(r.to_integer()) {
                return Scalar::Int(k);
            }
        }
        Scalar::Text(format_rational(r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetRow {
    pub coeffs: Vec<Scalar>,
    pub rhs: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub anchor: Vec<Scalar>,
    #[serde(default = "zero_objective")]
    pub objective: String,
    #[serde(default)]
    pub equalities: Vec<String>,
    #[serde(default)]
    pub inequalities: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, bool>,
    #[serde(rename = "set_A", default, skip_serializing_if = "Option::is_none")]
    pub set_a: Option<Vec<SetRow>>,
}

fn zero_objective() -> String {
    "0".to_string()
}

/// 1-based line and column of byte offset `at` in `src`.
fn line_col(src: &str, at: usize) -> (usize, usize) {
    let before = &src[..at.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl ProblemFile {
    /// Parses the TOML text. Syntax errors carry line and column.
    pub fn parse(src: &str) -> Result<ProblemFile> {
        toml::from_str(src).map_err(|e| {
            let loc = e
                .span()
                .map(|s| {
                    let (l, c) = line_col(src, s.start);
                    format!("line {l}, column {c}: ")
                })
                .unwrap_or_default();
            Error::File(format!("{loc}{}", e.message()))
        })
    }

    pub fn load(path: &Path) -> Result<ProblemFile> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::File(format!("{}: {e}", path.display())))?;
        Self::parse(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files always serialize")
    }

    /// Builds the problem without validating it.
    pub fn to_problem(&self) -> Result<Problem> {
        self.to_problem_located(None)
    }

    /// Like [`ProblemFile::to_problem`], reporting expression errors at their
    /// position in `src`.
    pub fn to_problem_in(&self, src: &str) -> Result<Problem> {
        self.to_problem_located(Some(src))
    }

    fn to_problem_located(&self, src: Option<&str>) -> Result<Problem> {
        let expr = |what: String, text: &str| -> Result<Expr> {
            Expr::parse(text).map_err(|source| {
                let what = match src.and_then(|s| s.find(text).map(|at| (s, at))) {
                    Some((s, at)) => {
                        let (l, c) = line_col(s, at + source.column - 1);
                        format!("{what} (line {l}, column {c})")
                    }
                    None => what,
                };
                Error::Parse { what, source }
            })
        };
        let anchor = self
            .anchor
            .iter()
            .map(Scalar::to_rational)
            .collect::<Result<Vec<_>>>()?;
        let mut p = Problem::new(anchor, expr("objective".into(), &self.objective)?);
        p.n = self.dim;
        for (i, e) in self.equalities.iter().enumerate() {
            p = p.with_equality(expr(format!("equality {}", i + 1), e)?);
        }
        for (j, e) in self.inequalities.iter().enumerate() {
            p = p.with_inequality(expr(format!("inequality {}", j + 1), e)?);
        }
        if let Some(rows) = &self.set_a {
            let rows = rows
                .iter()
                .map(|r| {
                    let a = r.coeffs.iter().map(Scalar::to_rational).collect::<Result<Vec<_>>>()?;
                    Ok((a, r.rhs.to_rational()?))
                })
                .collect::<Result<Vec<_>>>()?;
            p = p.with_set_a(PolyhedralSet::new(rows));
        }
        p.flags = self.flags.clone();
        Ok(p)
    }

    pub fn from_problem(p: &Problem) -> ProblemFile {
        ProblemFile {
            dim: p.n,
            anchor: p.anchor.iter().map(Scalar::from_rational).collect(),
            objective: p.objective.to_string(),
            equalities: p.equalities.iter().map(ToString::to_string).collect(),
            inequalities: p.inequalities.iter().map(ToString::to_string).collect(),
            flags: p.flags.clone(),
            set_a: p.set_a.as_ref().map(|s| {
                s.rows
                    .iter()
                    .map(|(a, b)| SetRow {
                        coeffs: a.iter().map(Scalar::from_rational).collect(),
                        rhs: Scalar::from_rational(b),
                    })
                    .collect()
            }),
        }
    }
}

/// Reads and builds a problem in one step.
pub fn load_problem(path: &Path) -> Result<Problem> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::File(format!("{}: {e}", path.display())))?;
    ProblemFile::parse(&src)?.to_problem_in(&src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Mode;

    const EX: &str = r#"
dim = 2
anchor = [0, "0"]
objective = "x1 - x2"
equalities = ["abs(x1) - x2"]
inequalities = ["x1"]

[flags]
hadamard = true
"#;

    #[test]
    fn parse_and_build() {
        let f = ProblemFile::parse(EX).unwrap();
        let p = f.to_problem().unwrap();
        assert_eq!(p.n, 2);
        assert_eq!(p.equalities.len(), 1);
        assert!(p.validate(Mode::Strict).is_ok());
        assert_eq!(p.flags.get("hadamard"), Some(&true));
    }

    #[test]
    fn round_trip() {
        let f = ProblemFile::parse(EX).unwrap();
        let again = ProblemFile::parse(&f.to_toml()).unwrap();
        assert_eq!(f, again);
        let with_set = r#"
dim = 1
anchor = ["1/2"]
[[set_A]]
coeffs = [1]
rhs = "3/4"
"#;
        let f = ProblemFile::parse(with_set).unwrap();
        assert_eq!(f.objective, "0");
        assert_eq!(ProblemFile::parse(&f.to_toml()).unwrap(), f);
        let p = f.to_problem().unwrap();
        assert_eq!(ProblemFile::from_problem(&p), f);
    }

    #[test]
    fn errors_are_located() {
        let bad = "dim = 2\nanchor = [0, 0]\nobjective = \"x1 +* x2\"\n";
        let f = ProblemFile::parse(bad).unwrap();
        let err = f.to_problem_in(bad).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = ProblemFile::parse("dim = 2\nanchor = [0, 0.5]\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(ProblemFile::parse("dim = 1\nanchor = [\"1/0\"]\n").unwrap().to_problem().is_err());
    }
}
