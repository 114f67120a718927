//! Problem container and the local data computed at its anchor.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::calculus::{self, LocalData, Mode, LENIENT_TOL};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{FinCone, Polytope};
use crate::rational::{self, dot, format_rational, Rational, Vector};

/// `{x | <a_k, x> <= b_k for all k}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyhedralSet {
    pub rows: Vec<(Vector, Rational)>,
}

impl PolyhedralSet {
    pub fn new(rows: Vec<(Vector, Rational)>) -> Self {
        Self { rows }
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.rows.iter().all(|(a, b)| dot(a, x) <= *b)
    }

    /// Indices of rows holding with equality at `x`.
    pub fn active_rows(&self, x: &[Rational]) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&k| dot(&self.rows[k].0, x) == self.rows[k].1)
            .collect()
    }

    /// Normal cone at `x`: the cone generated by the active row normals.
    pub fn normal_cone(&self, x: &[Rational]) -> Result<FinCone> {
        if !self.contains(x) {
            return Err(Error::Invalid(vec![Violation::OutsideSetA {
                row: self
                    .rows
                    .iter()
                    .position(|(a, b)| dot(a, x) > *b)
                    .map_or(0, |k| k + 1),
            }]));
        }
        let gens = self
            .active_rows(x)
            .into_iter()
            .map(|k| self.rows[k].0.clone())
            .collect();
        Ok(FinCone::new(x.len(), gens)?)
    }
}

/// `min f0(x)` subject to `f_i(x) = 0`, `g_j(x) <= 0` and optionally `x in A`,
/// analysed at the anchor point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub n: usize,
    pub anchor: Vector,
    pub objective: Expr,
    pub equalities: Vec<Expr>,
    pub inequalities: Vec<Expr>,
    pub set_a: Option<PolyhedralSet>,
    /// User assertions about analytic properties, recorded verbatim in reports.
    pub flags: BTreeMap<String, bool>,
}

/// Which function of a problem is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FnRef {
    Objective,
    Equality(usize),
    Inequality(usize),
}

impl fmt::Display for FnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FnRef::Objective => write!(f, "objective"),
            FnRef::Equality(i) => write!(f, "equality {}", i + 1),
            FnRef::Inequality(j) => write!(f, "inequality {}", j + 1),
        }
    }
}

/// A named reason why a problem cannot be analysed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    AnchorDimension { expected: usize, found: usize },
    VariableOutOfRange { function: FnRef, var: usize, dim: usize },
    EqualityNonzero { index: usize, value: Rational },
    InequalityPositive { index: usize, value: Rational },
    Inexact { function: FnRef },
    SetADimension { row: usize },
    OutsideSetA { row: usize },
    SetAWithEqualities,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AnchorDimension { expected, found } => {
                write!(f, "anchor has {found} coordinates, expected {expected}")
            }
            Violation::VariableOutOfRange { function, var, dim } => {
                write!(f, "{function} uses x{var} but dim = {dim}")
            }
            Violation::EqualityNonzero { index, value } => write!(
                f,
                "anchor infeasible (equality {}): f(x) = {} != 0",
                index + 1,
                format_rational(value)
            ),
            Violation::InequalityPositive { index, value } => write!(
                f,
                "anchor infeasible (inequality {}): g(x) = {} > 0",
                index + 1,
                format_rational(value)
            ),
            Violation::Inexact { function } => {
                write!(f, "{function} cannot be evaluated exactly at the anchor")
            }
            Violation::SetADimension { row } => write!(f, "set_A row {row} has the wrong length"),
            Violation::OutsideSetA { row } => write!(f, "anchor outside set_A (row {row})"),
            Violation::SetAWithEqualities => {
                write!(f, "set_A is only supported for problems without equality constraints")
            }
        }
    }
}

fn sign_with_tol(value: &Rational, exact: bool) -> std::cmp::Ordering {
    if exact {
        value.cmp(&Rational::zero())
    } else {
        let v = rational::to_f64(value);
        if v.abs() <= LENIENT_TOL {
            std::cmp::Ordering::Equal
        } else if v > 0.0 {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        }
    }
}

impl Problem {
    /// Unconstrained problem with the given objective.
    pub fn new(anchor: Vector, objective: Expr) -> Self {
        Self {
            n: anchor.len(),
            anchor,
            objective,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            set_a: None,
            flags: BTreeMap::new(),
        }
    }

    pub fn with_equality(mut self, e: Expr) -> Self {
        self.equalities.push(e);
        self
    }

    pub fn with_inequality(mut self, e: Expr) -> Self {
        self.inequalities.push(e);
        self
    }

    pub fn with_set_a(mut self, set: PolyhedralSet) -> Self {
        self.set_a = Some(set);
        self
    }

    pub fn functions(&self) -> impl Iterator<Item = (FnRef, &Expr)> {
        std::iter::once((FnRef::Objective, &self.objective))
            .chain(self.equalities.iter().enumerate().map(|(i, e)| (FnRef::Equality(i), e)))
            .chain(self.inequalities.iter().enumerate().map(|(j, e)| (FnRef::Inequality(j), e)))
    }

    /// Checks dimensions, exact evaluability and feasibility of the anchor.
    pub fn validate(&self, mode: Mode) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.anchor.len() != self.n {
            out.push(Violation::AnchorDimension {
                expected: self.n,
                found: self.anchor.len(),
            });
            return Err(out);
        }
        for (function, e) in self.functions() {
            if let Some(v) = e.max_var() {
                if v >= self.n {
                    out.push(Violation::VariableOutOfRange {
                        function,
                        var: v + 1,
                        dim: self.n,
                    });
                }
            }
        }
        if !out.is_empty() {
            return Err(out);
        }
        for (function, e) in self.functions() {
            let pv = e.eval_value(&self.anchor);
            if !pv.exact && mode == Mode::Strict && function != FnRef::Objective {
                out.push(Violation::Inexact { function });
                continue;
            }
            match function {
                FnRef::Equality(index) if sign_with_tol(&pv.value, pv.exact).is_ne() => {
                    out.push(Violation::EqualityNonzero {
                        index,
                        value: pv.value,
                    })
                }
                FnRef::Inequality(index) if sign_with_tol(&pv.value, pv.exact).is_gt() => {
                    out.push(Violation::InequalityPositive {
                        index,
                        value: pv.value,
                    })
                }
                _ => {}
            }
        }
        if let Some(set) = &self.set_a {
            if !self.equalities.is_empty() {
                out.push(Violation::SetAWithEqualities);
            }
            for (k, (a, b)) in set.rows.iter().enumerate() {
                if a.len() != self.n {
                    out.push(Violation::SetADimension { row: k + 1 });
                } else if dot(a, &self.anchor) > *b {
                    out.push(Violation::OutsideSetA { row: k + 1 });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Indices of inequalities active at the anchor.
    pub fn active_set(&self, mode: Mode) -> Result<Vec<usize>> {
        self.validate(mode).map_err(Error::Invalid)?;
        Ok(self
            .inequalities
            .iter()
            .enumerate()
            .filter(|(_, g)| {
                let v = g.eval_value(&self.anchor);
                sign_with_tol(&v.value, v.exact).is_eq()
            })
            .map(|(j, _)| j)
            .collect())
    }

    /// Validates and computes every quasidifferential at the anchor.
    pub fn local_model(&self, mode: Mode) -> Result<LocalModel> {
        let active = self.active_set(mode)?;
        let data = |e: &Expr| calculus::local_data(e, &self.anchor, mode);
        let objective = data(&self.objective)?;
        let equalities = self.equalities.iter().map(data).collect::<Result<Vec<_>, _>>()?;
        let inequalities = self
            .inequalities
            .iter()
            .map(data)
            .collect::<Result<Vec<_>, _>>()?;
        let exact = std::iter::once(&objective)
            .chain(&equalities)
            .chain(&inequalities)
            .all(|d| d.value.exact);
        Ok(LocalModel {
            n: self.n,
            anchor: self.anchor.clone(),
            objective,
            equalities,
            inequalities,
            active,
            exact,
        })
    }
}

/// Everything the first-order analysis needs at the anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalModel {
    pub n: usize,
    pub anchor: Vector,
    pub objective: LocalData,
    pub equalities: Vec<LocalData>,
    pub inequalities: Vec<LocalData>,
    /// Active inequality indices, ascending.
    pub active: Vec<usize>,
    /// False if some value was only known numerically (lenient mode).
    pub exact: bool,
}

impl LocalModel {
    pub fn m(&self) -> usize {
        self.equalities.len()
    }

    pub fn sub(&self, f: FnRef) -> &Polytope {
        &self.data(f).qd.sub
    }

    pub fn sup(&self, f: FnRef) -> &Polytope {
        &self.data(f).qd.sup
    }

    pub fn data(&self, f: FnRef) -> &LocalData {
        match f {
            FnRef::Objective => &self.objective,
            FnRef::Equality(i) => &self.equalities[i],
            FnRef::Inequality(j) => &self.inequalities[j],
        }
    }

    /// Whether inequality `j` is active at the anchor.
    pub fn is_active(&self, j: usize) -> bool {
        self.active.binary_search(&j).is_ok()
    }

    /// Values `g_j(anchor)` (all `<= 0`).
    pub fn inequality_values(&self) -> Vec<Rational> {
        self.inequalities.iter().map(|d| d.value.value.clone()).collect()
    }

    /// True when every inequality value is nonpositive.
    pub fn anchor_feasible(&self) -> bool {
        self.inequalities.iter().all(|d| !d.value.value.is_positive())
    }
}
