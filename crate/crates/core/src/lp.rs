//! Exact rational linear programming.
//!
//! A dense two-phase primal simplex over [`Rational`] with Bland's
//! smallest-index pivoting rule. Every geometric decision in the crate
//! (membership, disjointness, separation, multiplier recovery) is reduced to a
//! call into [`solve`] or [`feasible`].
//!
//! Problems are stated in the natural form
//!
//! ```text
//! maximize    c·x
//! subject to  a_k·x  = b_k
//!             a_k·x <= b_k
//!             l_i <= x_i <= u_i   (either side optional)
//! ```
//!
//! and internally shifted/split into `A y = b, y >= 0`. Strict inequalities
//! are never represented; callers maximise a margin variable instead.

use num_traits::{Signed, Zero};

use crate::rational::{dot, Rational, Vector};

/// Optional lower/upper bound on one variable. `None` means unbounded on that side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarBound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl VarBound {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn nonneg() -> Self {
        Self {
            lower: Some(Rational::zero()),
            upper: None,
        }
    }

    pub fn between(lower: Rational, upper: Rational) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
        }
    }
}

/// A linear program in maximisation form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub n_vars: usize,
    pub objective: Vector,
    pub eq_rows: Vec<(Vector, Rational)>,
    pub le_rows: Vec<(Vector, Rational)>,
    pub var_bounds: Vec<VarBound>,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpVerdict {
    Optimal { point: Vector, value: Rational },
    Infeasible,
    Unbounded,
}

/// Outcome of [`feasible`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Witness(Vector),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Witness(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("{what} has length {found}, expected {expected}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
}

impl LpProblem {
    /// A problem over `n_vars` free variables with zero objective and no rows.
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![Rational::zero(); n_vars],
            eq_rows: Vec::new(),
            le_rows: Vec::new(),
            var_bounds: vec![VarBound::free(); n_vars],
        }
    }

    pub fn maximize(mut self, objective: Vector) -> Self {
        self.objective = objective;
        self
    }

    pub fn add_eq(&mut self, row: Vector, rhs: Rational) -> &mut Self {
        self.eq_rows.push((row, rhs));
        self
    }

    pub fn add_le(&mut self, row: Vector, rhs: Rational) -> &mut Self {
        self.le_rows.push((row, rhs));
        self
    }

    /// `row·x >= rhs`, stored as `-row·x <= -rhs`.
    pub fn add_ge(&mut self, row: Vector, rhs: Rational) -> &mut Self {
        self.le_rows
            .push((row.into_iter().map(|x| -x).collect(), -rhs));
        self
    }

    pub fn bound(&mut self, var: usize, bound: VarBound) -> &mut Self {
        self.var_bounds[var] = bound;
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let check = |what: String, found: usize| {
            if found == self.n_vars {
                Ok(())
            } else {
                Err(LpError::Dimension {
                    what,
                    expected: self.n_vars,
                    found,
                })
            }
        };
        check("objective".into(), self.objective.len())?;
        check("variable bounds".into(), self.var_bounds.len())?;
        for (k, (row, _)) in self.eq_rows.iter().enumerate() {
            check(format!("equality row {k}"), row.len())?;
        }
        for (k, (row, _)) in self.le_rows.iter().enumerate() {
            check(format!("inequality row {k}"), row.len())?;
        }
        Ok(())
    }

    /// True iff `x` satisfies every row and bound exactly.
    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.n_vars
            && self.eq_rows.iter().all(|(a, b)| &dot(a, x) == b)
            && self.le_rows.iter().all(|(a, b)| &dot(a, x) <= b)
            && self.var_bounds.iter().zip(x).all(|(bd, xi)| {
                bd.lower.as_ref().is_none_or(|l| xi >= l) && bd.upper.as_ref().is_none_or(|u| xi <= u)
            })
    }
}

/// Solves `p` exactly.
pub fn solve(p: &LpProblem) -> Result<LpVerdict, LpError> {
    p.validate()?;
    Ok(StandardForm::build(p).solve(p))
}

/// Phase-one wrapper: finds a point satisfying all rows and bounds, if any.
pub fn feasible(
    eq_rows: &[(Vector, Rational)],
    le_rows: &[(Vector, Rational)],
    bounds: &[VarBound],
) -> Result<Feasibility, LpError> {
    let n = bounds.len();
    let p = LpProblem {
        n_vars: n,
        objective: vec![Rational::zero(); n],
        eq_rows: eq_rows.to_vec(),
        le_rows: le_rows.to_vec(),
        var_bounds: bounds.to_vec(),
    };
    Ok(match solve(&p)? {
        LpVerdict::Optimal { point, .. } => Feasibility::Witness(point),
        LpVerdict::Infeasible => Feasibility::Infeasible,
        LpVerdict::Unbounded => unreachable!("zero objective cannot be unbounded"),
    })
}

/// Original variable expressed through nonnegative standard-form columns.
#[derive(Debug, Clone)]
struct VarMap {
    constant: Rational,
    terms: Vec<(usize, Rational)>,
}

struct StandardForm {
    n_struct: usize,
    maps: Vec<VarMap>,
    /// Equality rows over the structural columns plus one slack per `<=` row.
    rows: Vec<(Vec<Rational>, Rational)>,
    /// For each row, the slack column that may start in the basis.
    slack_of_row: Vec<Option<usize>>,
    n_cols: usize,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let mut maps = Vec::with_capacity(p.n_vars);
        let mut n_struct = 0usize;
        let mut extra_le: Vec<(usize, Rational)> = Vec::new();
        for bound in &p.var_bounds {
            let map = match (&bound.lower, &bound.upper) {
                (Some(l), upper) => {
                    let col = n_struct;
                    n_struct += 1;
                    if let Some(u) = upper {
                        extra_le.push((col, u - l));
                    }
                    VarMap {
                        constant: l.clone(),
                        terms: vec![(col, Rational::from_integer(1.into()))],
                    }
                }
                (None, Some(u)) => {
                    let col = n_struct;
                    n_struct += 1;
                    VarMap {
                        constant: u.clone(),
                        terms: vec![(col, Rational::from_integer((-1).into()))],
                    }
                }
                (None, None) => {
                    let col = n_struct;
                    n_struct += 2;
                    VarMap {
                        constant: Rational::zero(),
                        terms: vec![
                            (col, Rational::from_integer(1.into())),
                            (col + 1, Rational::from_integer((-1).into())),
                        ],
                    }
                }
            };
            maps.push(map);
        }

        let n_slack = p.le_rows.len() + extra_le.len();
        let n_cols = n_struct + n_slack;
        let mut rows = Vec::new();
        let mut slack_of_row = Vec::new();

        let transform = |a: &[Rational], b: &Rational| -> (Vec<Rational>, Rational) {
            let mut row = vec![Rational::zero(); n_cols];
            let mut rhs = b.clone();
            for (coef, map) in a.iter().zip(&maps) {
                if coef.is_zero() {
                    continue;
                }
                rhs -= coef * &map.constant;
                for (col, c) in &map.terms {
                    row[*col] += coef * c;
                }
            }
            (row, rhs)
        };

        for (a, b) in &p.eq_rows {
            rows.push(transform(a, b));
            slack_of_row.push(None);
        }
        let mut slack = n_struct;
        for (a, b) in &p.le_rows {
            let (mut row, rhs) = transform(a, b);
            row[slack] = Rational::from_integer(1.into());
            rows.push((row, rhs));
            slack_of_row.push(Some(slack));
            slack += 1;
        }
        for (col, cap) in extra_le {
            let mut row = vec![Rational::zero(); n_cols];
            row[col] = Rational::from_integer(1.into());
            row[slack] = Rational::from_integer(1.into());
            rows.push((row, cap));
            slack_of_row.push(Some(slack));
            slack += 1;
        }

        Self {
            n_struct,
            maps,
            rows,
            slack_of_row,
            n_cols,
        }
    }

    fn solve(self, p: &LpProblem) -> LpVerdict {
        let m = self.rows.len();
        // Columns: [structural | slack | artificial]
        let mut n_art = 0usize;
        let mut basis = Vec::with_capacity(m);
        let mut art_rows = Vec::new();
        let mut table: Vec<Vec<Rational>> = Vec::with_capacity(m);
        for (r, (row, rhs)) in self.rows.iter().enumerate() {
            let (mut row, mut rhs) = (row.clone(), rhs.clone());
            let negate = rhs.is_negative();
            if negate {
                row.iter_mut().for_each(|x| *x = -x.clone());
                rhs = -rhs;
            }
            match self.slack_of_row[r] {
                Some(s) if !negate => basis.push(s),
                _ => {
                    basis.push(self.n_cols + n_art);
                    art_rows.push(r);
                    n_art += 1;
                }
            }
            row.push(rhs);
            table.push(row);
        }
        let total = self.n_cols + n_art;
        // Widen rows with artificial columns; rhs stays last.
        for (r, row) in table.iter_mut().enumerate() {
            let rhs = row.pop().unwrap();
            row.resize(total, Rational::zero());
            if basis[r] >= self.n_cols {
                row[basis[r]] = Rational::from_integer(1.into());
            }
            row.push(rhs);
        }
        let mut tab = Tableau {
            table,
            basis,
            n_cols: total,
        };

        if n_art > 0 {
            let mut cost = vec![Rational::zero(); total];
            for c in cost.iter_mut().skip(self.n_cols) {
                *c = Rational::from_integer(1.into());
            }
            let allowed = vec![true; total];
            tab.run(&cost, &allowed)
                .expect("phase one objective is bounded below by zero");
            let infeasibility: Rational = tab
                .basis
                .iter()
                .zip(&tab.table)
                .filter(|(b, _)| **b >= self.n_cols)
                .map(|(_, row)| row[total].clone())
                .sum();
            if infeasibility.is_positive() {
                return LpVerdict::Infeasible;
            }
            // Drive zero-level artificials out of the basis; drop redundant rows.
            let mut r = 0;
            while r < tab.table.len() {
                if tab.basis[r] >= self.n_cols {
                    match (0..self.n_cols).find(|&j| !tab.table[r][j].is_zero()) {
                        Some(j) => {
                            tab.pivot(r, j);
                            r += 1;
                        }
                        None => {
                            tab.table.remove(r);
                            tab.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let mut cost = vec![Rational::zero(); total];
        for (c, map) in p.objective.iter().zip(&self.maps) {
            for (col, k) in &map.terms {
                // minimise -c·x
                cost[*col] -= c * k;
            }
        }
        let allowed: Vec<bool> = (0..total).map(|j| j < self.n_cols).collect();
        if tab.run(&cost, &allowed).is_err() {
            return LpVerdict::Unbounded;
        }

        let mut y = vec![Rational::zero(); self.n_cols];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < self.n_cols {
                y[b] = tab.table[r][total].clone();
            }
        }
        let point: Vector = self
            .maps
            .iter()
            .map(|map| {
                map.terms
                    .iter()
                    .fold(map.constant.clone(), |acc, (col, k)| acc + k * &y[*col])
            })
            .collect();
        debug_assert!(self.n_struct <= self.n_cols);
        let value = dot(&p.objective, &point);
        LpVerdict::Optimal { point, value }
    }
}

struct Tableau {
    /// Each row holds `n_cols` coefficients followed by the right-hand side.
    table: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    n_cols: usize,
}

#[derive(Debug)]
struct Unbounded;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.table[r][c].clone();
        for x in self.table[r].iter_mut() {
            *x /= &piv;
        }
        let pivot_row = self.table[r].clone();
        for (k, row) in self.table.iter_mut().enumerate() {
            if k == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimises `cost·y` from the current basic feasible solution.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> Result<(), Unbounded> {
        let rhs = self.n_cols;
        loop {
            // Bland: first improving column.
            let entering = (0..self.n_cols).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let reduced = self
                        .basis
                        .iter()
                        .zip(&self.table)
                        .fold(cost[j].clone(), |acc, (&b, row)| {
                            if row[j].is_zero() {
                                acc
                            } else {
                                acc - &cost[b] * &row[j]
                            }
                        });
                    reduced.is_negative()
                }
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (r, row) in self.table.iter().enumerate() {
                if !row[j].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[j];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, j),
                None => return Err(Unbounded),
            }
        }
    }
}
