//! Selection-dependent constraint qualifications.
//!
//! For a selection `x_i* in sub f_i`, `y_i* in sup f_i`, `z_j* in sup g_j`
//! the sets `C_i = (sub f_i + y_i*) u (-x_i* - sup f_i)` drive three witness
//! conditions, each decided as a margin-maximisation LP over the box
//! `-1 <= v <= 1`. The same conditions are also decided geometrically as
//! polytope/cone disjointness, and q.d.-MFCQ is available as a sufficient test.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::calculus::Quasidifferential;
use crate::error::{Error, Result};
use crate::geometry::{cone_hull, FinCone, Polytope};
use crate::lp::{self, LpProblem, LpVerdict, VarBound};
use crate::problem::{FnRef, LocalModel};
use crate::rational::{self, parse_rational, Rational, VecDisplay, Vector};

/// Default limit on the number of selections examined by a search.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Chosen elements of the sub/superdifferentials.
///
/// `z_star` is keyed by inequality index and only holds active constraints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Selection {
    pub x_star: Vec<Vector>,
    pub y_star: Vec<Vector>,
    pub z_star: BTreeMap<usize, Vector>,
}

impl Selection {
    /// Checks counts, keys and membership of every chosen point.
    pub fn validate(&self, model: &LocalModel) -> Result<()> {
        let bad = |msg: String| Err(Error::Selection(msg));
        if self.x_star.len() != model.m() || self.y_star.len() != model.m() {
            return bad(format!(
                "expected {} x*/y* entries, found {}/{}",
                model.m(),
                self.x_star.len(),
                self.y_star.len()
            ));
        }
        let keys: Vec<usize> = self.z_star.keys().copied().collect();
        if keys != model.active {
            return bad(format!(
                "z* must be given exactly for the active inequalities {:?}",
                model.active.iter().map(|j| j + 1).collect::<Vec<_>>()
            ));
        }
        let check = |label: String, p: &Polytope, point: &Vector| -> Result<()> {
            if point.len() != model.n || !p.member(point)? {
                return bad(format!("{label} = {} is not in {p}", VecDisplay(point)));
            }
            Ok(())
        };
        for i in 0..model.m() {
            check(format!("x{}", i + 1), model.sub(FnRef::Equality(i)), &self.x_star[i])?;
            check(format!("y{}", i + 1), model.sup(FnRef::Equality(i)), &self.y_star[i])?;
        }
        for (j, z) in &self.z_star {
            check(format!("z{}", j + 1), model.sup(FnRef::Inequality(*j)), z)?;
        }
        Ok(())
    }

    /// Parses `x1=(a,b);y1=(c,d);z2=(e,f)`. Indices are 1-based.
    ///
    /// Entries that are left out default to the first vertex of their polytope.
    pub fn parse(text: &str, model: &LocalModel) -> Result<Selection> {
        let mut sel = SelectionSpace::new(model).first();
        for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Selection(format!("expected key=(..) in `{item}`")))?;
            let key = key.trim();
            let (kind, idx) = key.split_at(1);
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&k: &usize| k >= 1)
                .ok_or_else(|| Error::Selection(format!("bad selection key `{key}`")))?;
            let point = parse_point(value)?;
            let slot = match kind {
                "x" => sel.x_star.get_mut(idx - 1),
                "y" => sel.y_star.get_mut(idx - 1),
                "z" => sel.z_star.get_mut(&(idx - 1)),
                _ => None,
            };
            *slot.ok_or_else(|| Error::Selection(format!("no selection slot `{key}`")))? = point;
        }
        sel.validate(model)?;
        Ok(sel)
    }
}

/// Parses `(a, b, ...)` with rational entries.
pub fn parse_point(text: &str) -> Result<Vector> {
    let t = text.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(t);
    inner
        .split(',')
        .map(|s| parse_rational(s).map_err(|e| Error::Selection(e.to_string())))
        .collect()
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, (x, y)) in self.x_star.iter().zip(&self.y_star).enumerate() {
            parts.push(format!("x{}={}", i + 1, VecDisplay(x)));
            parts.push(format!("y{}={}", i + 1, VecDisplay(y)));
        }
        for (j, z) in &self.z_star {
            parts.push(format!("z{}={}", j + 1, VecDisplay(z)));
        }
        write!(f, "{}", parts.join(";"))
    }
}

/// The two pieces of `C_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiSet {
    /// `sub f_i + y_i*`
    pub piece_a: Polytope,
    /// `-x_i* - sup f_i`
    pub piece_b: Polytope,
}

pub fn build_ci(model: &LocalModel, sel: &Selection, i: usize) -> Result<CiSet> {
    let f = FnRef::Equality(i);
    Ok(CiSet {
        piece_a: model.sub(f).translate(&sel.y_star[i])?,
        piece_b: model.sup(f).negate().translate(&rational::neg(&sel.x_star[i]))?,
    })
}

/// `sub g_j + z_j*` for every active `j`, in ascending `j`.
pub fn shifted_inequalities(model: &LocalModel, sel: &Selection) -> Result<Vec<(usize, Polytope)>> {
    sel.z_star
        .iter()
        .map(|(&j, z)| Ok((j, model.sub(FnRef::Inequality(j)).translate(z)?)))
        .collect()
}

/// Outcome of a witness LP for assumption 1 or 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssumptionVerdict {
    /// One witness per equality, with the smallest margin achieved.
    Witnesses { vectors: Vec<Vector>, margin: Rational },
    /// No witness exists for this equality index.
    Violated(usize),
}

/// Outcome of the witness LP for assumption 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum V0Verdict {
    Witness { v0: Vector, margin: Rational },
    Violated,
}

/// Witness directions for the three assumptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CQWitness {
    pub v_list: Vec<Vector>,
    pub w_list: Vec<Vector>,
    pub v0: Vector,
    /// Every strict inequality holds with at least this slack.
    pub margin: Rational,
}

/// Maximises `t` subject to `<p, v> + t <= 0` (strict), `<q, v> <= 0` (weak),
/// `-1 <= v <= 1`, `t <= 1`. Returns `(v, t)`.
pub fn margin_lp(n: usize, strict: &[Vector], weak: &[Vector]) -> Result<(Vector, Rational)> {
    if strict.is_empty() {
        return Ok((rational::zeros(n), Rational::one()));
    }
    let mut obj = rational::zeros(n + 1);
    obj[n] = Rational::one();
    let mut lp = LpProblem::new(n + 1).maximize(obj);
    for p in strict {
        let mut row = p.clone();
        row.push(Rational::one());
        lp.add_le(row, Rational::zero());
    }
    for q in weak {
        let mut row = q.clone();
        row.push(Rational::zero());
        lp.add_le(row, Rational::zero());
    }
    for k in 0..n {
        lp.bound(k, VarBound::between(-Rational::one(), Rational::one()));
    }
    lp.bound(
        n,
        VarBound {
            lower: None,
            upper: Some(Rational::one()),
        },
    );
    match lp::solve(&lp)? {
        LpVerdict::Optimal { mut point, value } => {
            point.truncate(n);
            Ok((point, value))
        }
        // v = 0, t = 0 is always feasible and t <= 1 bounds the objective.
        other => unreachable!("margin LP cannot be {other:?}"),
    }
}

fn vertices_of<'a>(sets: impl IntoIterator<Item = &'a Polytope>) -> Vec<Vector> {
    sets.into_iter().flat_map(|p| p.vertices().iter().cloned()).collect()
}

fn equality_pieces(cis: &[CiSet], skip: Option<usize>) -> Vec<&Polytope> {
    cis.iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != skip)
        .flat_map(|(_, c)| [&c.piece_a, &c.piece_b])
        .collect()
}

fn all_ci(model: &LocalModel, sel: &Selection) -> Result<Vec<CiSet>> {
    (0..model.m()).map(|i| build_ci(model, sel, i)).collect()
}

fn check_pieces(
    model: &LocalModel,
    sel: &Selection,
    pick: impl Fn(&CiSet) -> &Polytope,
) -> Result<AssumptionVerdict> {
    let cis = all_ci(model, sel)?;
    let mut vectors = Vec::with_capacity(cis.len());
    let mut margin = Rational::one();
    for (i, ci) in cis.iter().enumerate() {
        let strict = pick(ci).vertices().to_vec();
        let weak = vertices_of(equality_pieces(&cis, Some(i)));
        let (v, t) = margin_lp(model.n, &strict, &weak)?;
        if !t.is_positive() {
            return Ok(AssumptionVerdict::Violated(i));
        }
        margin = margin.min(t);
        vectors.push(v);
    }
    Ok(AssumptionVerdict::Witnesses { vectors, margin })
}

/// Assumption 1: for each `i` some `v_i` with `s(piece_a_i, v_i) < 0` and
/// `s(C_k, v_i) <= 0` for `k != i`.
pub fn check_assumption_1(model: &LocalModel, sel: &Selection) -> Result<AssumptionVerdict> {
    check_pieces(model, sel, |c| &c.piece_a)
}

/// Assumption 2: as assumption 1 with `piece_b_i` strict.
pub fn check_assumption_2(model: &LocalModel, sel: &Selection) -> Result<AssumptionVerdict> {
    check_pieces(model, sel, |c| &c.piece_b)
}

/// Assumption 3: some `v0` strictly negative on every active `sub g_j + z_j*`
/// and nonpositive on every `C_i`.
pub fn check_assumption_3(model: &LocalModel, sel: &Selection) -> Result<V0Verdict> {
    let cis = all_ci(model, sel)?;
    let shifted = shifted_inequalities(model, sel)?;
    let strict = vertices_of(shifted.iter().map(|(_, p)| p));
    let weak = vertices_of(equality_pieces(&cis, None));
    let (v0, t) = margin_lp(model.n, &strict, &weak)?;
    Ok(if t.is_positive() {
        V0Verdict::Witness { v0, margin: t }
    } else {
        V0Verdict::Violated
    })
}

/// All three assumptions; `None` if any fails.
pub fn check_cq(model: &LocalModel, sel: &Selection) -> Result<Option<CQWitness>> {
    let AssumptionVerdict::Witnesses { vectors: v_list, margin: m1 } = check_assumption_1(model, sel)? else {
        return Ok(None);
    };
    let AssumptionVerdict::Witnesses { vectors: w_list, margin: m2 } = check_assumption_2(model, sel)? else {
        return Ok(None);
    };
    let V0Verdict::Witness { v0, margin: m3 } = check_assumption_3(model, sel)? else {
        return Ok(None);
    };
    Ok(Some(CQWitness {
        v_list,
        w_list,
        v0,
        margin: m1.min(m2).min(m3),
    }))
}

impl CQWitness {
    /// Re-checks every sign condition by direct support-function evaluation.
    pub fn replay(&self, model: &LocalModel, sel: &Selection) -> Result<bool> {
        if !self.margin.is_positive() {
            return Ok(false);
        }
        let cis = all_ci(model, sel)?;
        let strict_ok = |p: &Polytope, v: &Vector| -> Result<bool> {
            Ok(p.support_value(v)? <= -self.margin.clone())
        };
        let weak_ok = |skip: Option<usize>, v: &Vector| -> Result<bool> {
            for p in equality_pieces(&cis, skip) {
                if p.support_value(v)?.is_positive() {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        for (i, ci) in cis.iter().enumerate() {
            let (v, w) = (&self.v_list[i], &self.w_list[i]);
            if !(strict_ok(&ci.piece_a, v)? && weak_ok(Some(i), v)?) {
                return Ok(false);
            }
            if !(strict_ok(&ci.piece_b, w)? && weak_ok(Some(i), w)?) {
                return Ok(false);
            }
        }
        for (_, p) in shifted_inequalities(model, sel)? {
            if !strict_ok(&p, &self.v0)? {
                return Ok(false);
            }
        }
        weak_ok(None, &self.v0)
    }
}

/// Geometric form of the three assumptions, decided per piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometricVerdict {
    /// Per equality: both pieces of `C_i` miss `cone{-C_k, k != i}`.
    pub pieces_disjoint: Vec<bool>,
    /// `co{sub g_j + z_j*}` misses `cone{-C_i}`.
    pub inequalities_disjoint: bool,
}

impl GeometricVerdict {
    pub fn holds(&self) -> bool {
        self.inequalities_disjoint && self.pieces_disjoint.iter().all(|&b| b)
    }
}

fn neg_cone(n: usize, pieces: &[&Polytope]) -> Result<FinCone> {
    let negs: Vec<Polytope> = pieces.iter().map(|p| p.negate()).collect();
    Ok(cone_hull(n, &negs)?)
}

pub fn check_geometric(model: &LocalModel, sel: &Selection) -> Result<GeometricVerdict> {
    let cis = all_ci(model, sel)?;
    let mut pieces_disjoint = Vec::with_capacity(cis.len());
    for (i, ci) in cis.iter().enumerate() {
        let k = neg_cone(model.n, &equality_pieces(&cis, Some(i)))?;
        pieces_disjoint.push(ci.piece_a.disjoint_from_cone(&k)? && ci.piece_b.disjoint_from_cone(&k)?);
    }
    let shifted: Vec<Polytope> = shifted_inequalities(model, sel)?
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let inequalities_disjoint = if shifted.is_empty() {
        true
    } else {
        let hull = Polytope::hull_of_union(&shifted)?;
        hull.disjoint_from_cone(&neg_cone(model.n, &equality_pieces(&cis, None))?)?
    };
    Ok(GeometricVerdict {
        pieces_disjoint,
        inequalities_disjoint,
    })
}

/// q.d.-MFCQ and its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MfcqReport {
    /// The sum sets of the equalities are strongly linearly independent.
    pub strong_independence: bool,
    /// `co{[D g_j]+}` misses the span of the equality sum sets.
    pub inequalities_off_span: bool,
    /// A direction annihilating the equality sum sets and strictly negative on
    /// the active inequality sum sets, if one exists.
    pub v0: Option<Vector>,
}

impl MfcqReport {
    pub fn holds(&self) -> bool {
        self.strong_independence && self.inequalities_off_span && self.v0.is_some()
    }
}

pub fn check_qd_mfcq(model: &LocalModel) -> Result<MfcqReport> {
    let eq_sums: Vec<Polytope> = model
        .equalities
        .iter()
        .map(|d| d.qd.qd_sum_set())
        .collect::<Result<_, _>>()?;
    let ineq_sums: Vec<Polytope> = model
        .active
        .iter()
        .map(|&j| model.inequalities[j].qd.qd_sum_set())
        .collect::<Result<_, _>>()?;
    let mut strong_independence = true;
    for (i, s) in eq_sums.iter().enumerate() {
        let others = vertices_of(eq_sums.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, p)| p));
        if s.intersects_span(&others)? {
            strong_independence = false;
        }
    }
    let all_eq = vertices_of(&eq_sums);
    let inequalities_off_span = if ineq_sums.is_empty() {
        true
    } else {
        !Polytope::hull_of_union(&ineq_sums)?.intersects_span(&all_eq)?
    };
    let strict = vertices_of(&ineq_sums);
    let mut weak = all_eq.clone();
    weak.extend(all_eq.iter().map(|p| rational::neg(p)));
    let (v, t) = margin_lp(model.n, &strict, &weak)?;
    Ok(MfcqReport {
        strong_independence,
        inequalities_off_span,
        v0: t.is_positive().then_some(v),
    })
}

/// The finite set of vertex selections in lexicographic order.
///
/// Slots are ordered `x_1, y_1, ..., x_m, y_m, z_j (active j ascending)`; the
/// first slot is the most significant digit.
#[derive(Debug, Clone)]
pub struct SelectionSpace {
    slots: Vec<Vec<Vector>>,
    m: usize,
    active: Vec<usize>,
}

impl SelectionSpace {
    pub fn new(model: &LocalModel) -> Self {
        Self::with_parts(model, true)
    }

    /// Only the `z_j*` slots (problems without equalities).
    pub fn inequalities_only(model: &LocalModel) -> Self {
        Self::with_parts(model, false)
    }

    fn with_parts(model: &LocalModel, equalities: bool) -> Self {
        let mut slots = Vec::new();
        let m = if equalities { model.m() } else { 0 };
        for i in 0..m {
            slots.push(model.sub(FnRef::Equality(i)).vertices().to_vec());
            slots.push(model.sup(FnRef::Equality(i)).vertices().to_vec());
        }
        for &j in &model.active {
            slots.push(model.sup(FnRef::Inequality(j)).vertices().to_vec());
        }
        Self {
            slots,
            m,
            active: model.active.clone(),
        }
    }

    /// Total number of selections, saturating.
    pub fn size(&self) -> u64 {
        self.slots
            .iter()
            .fold(1u64, |acc, s| acc.saturating_mul(s.len() as u64))
    }

    fn build(&self, digits: &[usize]) -> Selection {
        let pick = |s: usize| self.slots[s][digits[s]].clone();
        Selection {
            x_star: (0..self.m).map(|i| pick(2 * i)).collect(),
            y_star: (0..self.m).map(|i| pick(2 * i + 1)).collect(),
            z_star: self
                .active
                .iter()
                .enumerate()
                .map(|(k, &j)| (j, pick(2 * self.m + k)))
                .collect(),
        }
    }

    pub fn first(&self) -> Selection {
        self.build(&vec![0; self.slots.len()])
    }

    pub fn iter(&self) -> impl Iterator<Item = Selection> + '_ {
        let mut digits = vec![0usize; self.slots.len()];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let sel = self.build(&digits);
            done = true;
            for s in (0..digits.len()).rev() {
                digits[s] += 1;
                if digits[s] < self.slots[s].len() {
                    done = false;
                    break;
                }
                digits[s] = 0;
            }
            Some(sel)
        })
    }
}

/// Result of a selection search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found {
        selection: Selection,
        witness: CQWitness,
        tried: u64,
    },
    /// No passing selection. `complete` is false when the budget ran out first.
    Exhausted { complete: bool, tried: u64 },
}

/// First vertex selection (in lexicographic order) passing assumptions 1 to 3.
pub fn search_selection(model: &LocalModel, budget: u64) -> Result<SearchOutcome> {
    let mut tried = 0;
    for sel in SelectionSpace::new(model).iter() {
        if tried >= budget {
            return Ok(SearchOutcome::Exhausted {
                complete: false,
                tried,
            });
        }
        tried += 1;
        if let Some(witness) = check_cq(model, &sel)? {
            return Ok(SearchOutcome::Found {
                selection: sel,
                witness,
                tried,
            });
        }
    }
    Ok(SearchOutcome::Exhausted {
        complete: true,
        tried,
    })
}

/// Every passing vertex selection, and whether the scan finished within budget.
pub fn search_all_selections(
    model: &LocalModel,
    budget: u64,
) -> Result<(Vec<(Selection, CQWitness)>, bool)> {
    let mut out = Vec::new();
    for (tried, sel) in SelectionSpace::new(model).iter().enumerate() {
        if tried as u64 >= budget {
            return Ok((out, false));
        }
        if let Some(w) = check_cq(model, &sel)? {
            out.push((sel, w));
        }
    }
    Ok((out, true))
}

/// For a single inequality: the first vertex `z*` of `sup g` with `0 not in sub g + z*`.
///
/// Scanning vertices is complete here: the failing set `(-sub g) n sup g` is
/// convex, so if every vertex fails the whole polytope fails.
pub fn general_position_cq(q: &Quasidifferential) -> Result<Option<Vector>> {
    for z in q.sup.vertices() {
        if !q.sub.member(&rational::neg(z))? {
            return Ok(Some(z.clone()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Mode;
    use crate::expr::Expr;
    use crate::problem::Problem;
    use crate::rational::{int, ivec};

    fn model(anchor: &[i64], eqs: &[&str], ineqs: &[&str]) -> LocalModel {
        let mut p = Problem::new(ivec(anchor), Expr::parse("0").unwrap());
        for e in eqs {
            p = p.with_equality(Expr::parse(e).unwrap());
        }
        for g in ineqs {
            p = p.with_inequality(Expr::parse(g).unwrap());
        }
        p.local_model(Mode::Strict).unwrap()
    }

    fn sel(x: &[&[i64]], y: &[&[i64]], z: &[(usize, &[i64])]) -> Selection {
        Selection {
            x_star: x.iter().map(|p| ivec(p)).collect(),
            y_star: y.iter().map(|p| ivec(p)).collect(),
            z_star: z.iter().map(|(j, p)| (*j, ivec(p))).collect(),
        }
    }

    #[test]
    fn abs_example_selection() {
        let m = model(&[0, 0], &["abs(x1) - x2"], &["x1"]);
        let s = sel(&[&[-1, -1]], &[&[0, 0]], &[(0, &[0, 0])]);
        s.validate(&m).unwrap();
        let ci = build_ci(&m, &s, 0).unwrap();
        assert_eq!(ci.piece_a, m.sub(FnRef::Equality(0)).clone());
        assert_eq!(ci.piece_b, Polytope::singleton(ivec(&[1, 1])));
        let V0Verdict::Witness { v0, margin } = check_assumption_3(&m, &s).unwrap() else {
            panic!("assumption 3 should hold");
        };
        assert!(margin.is_positive());
        let shifted = &shifted_inequalities(&m, &s).unwrap()[0].1;
        assert!(shifted.support_value(&v0).unwrap().is_negative());
        // the published witness also works
        let pv0 = ivec(&[-1, 1]);
        assert_eq!(shifted.support_value(&pv0).unwrap(), int(-1));
        assert_eq!(ci.piece_a.support_value(&pv0).unwrap(), int(0));
        assert_eq!(ci.piece_b.support_value(&pv0).unwrap(), int(0));
        let w = check_cq(&m, &s).unwrap().unwrap();
        assert!(w.replay(&m, &s).unwrap());
        assert!(check_geometric(&m, &s).unwrap().holds());
        let mf = check_qd_mfcq(&m).unwrap();
        assert!(!mf.holds());
    }

    #[test]
    fn single_equality_reduces_to_zero_exclusion() {
        let m = model(&[0, 0], &["abs(sin(x1)) - abs(sin(x2))"], &[]);
        let s = sel(&[&[1, 0]], &[&[0, 1]], &[]);
        assert!(check_cq(&m, &s).unwrap().is_some());
        // x* = (1, 0), y* = (0, 0) is not a vertex choice, but 0 in sub f + 0
        let bad = sel(&[&[1, 0]], &[&[0, 0]], &[]);
        assert_eq!(check_assumption_1(&m, &bad).unwrap(), AssumptionVerdict::Violated(0));
        assert!(!check_geometric(&m, &bad).unwrap().holds());
        let (all, complete) = search_all_selections(&m, DEFAULT_BUDGET).unwrap();
        assert!(complete);
        assert_eq!(all.len(), 4);
        assert!(!check_qd_mfcq(&m).unwrap().holds());
    }

    #[test]
    fn max_min_inequality_search() {
        let m = model(&[0, 0], &[], &["max(2*x1, 2*x2) + min(0, -x1 - x2)"]);
        let bad = sel(&[], &[], &[(0, &[-1, -1])]);
        assert_eq!(check_assumption_3(&m, &bad).unwrap(), V0Verdict::Violated);
        match search_selection(&m, DEFAULT_BUDGET).unwrap() {
            SearchOutcome::Found { selection, .. } => {
                assert_eq!(selection.z_star[&0], ivec(&[0, 0]));
            }
            other => panic!("{other:?}"),
        }
        let g = &m.inequalities[0].qd;
        assert_eq!(general_position_cq(g).unwrap(), Some(ivec(&[0, 0])));
    }

    #[test]
    fn general_position_none_on_symmetric_interval() {
        let seg = Polytope::convex_hull(vec![ivec(&[-1]), ivec(&[1])]).unwrap();
        let q = Quasidifferential::new(seg.clone(), seg).unwrap();
        assert_eq!(general_position_cq(&q).unwrap(), None);
        let q = Quasidifferential::new(
            Polytope::origin(1),
            Polytope::convex_hull(vec![ivec(&[0]), ivec(&[1])]).unwrap(),
        )
        .unwrap();
        assert_eq!(general_position_cq(&q).unwrap(), Some(ivec(&[1])));
    }

    #[test]
    fn identical_equalities_exhaust() {
        let m = model(&[0, 0], &["x1 + x2", "x1 + x2"], &[]);
        assert_eq!(
            search_selection(&m, DEFAULT_BUDGET).unwrap(),
            SearchOutcome::Exhausted {
                complete: true,
                tried: 1
            }
        );
        assert_eq!(
            search_selection(&m, 0).unwrap(),
            SearchOutcome::Exhausted {
                complete: false,
                tried: 0
            }
        );
    }

    #[test]
    fn linear_equalities_satisfy_mfcq() {
        let m = model(&[0, 0, 0], &["x1 + x2", "x2 - x3"], &[]);
        let r = check_qd_mfcq(&m).unwrap();
        assert!(r.holds());
        for s in SelectionSpace::new(&m).iter() {
            assert!(check_cq(&m, &s).unwrap().is_some());
        }
    }

    #[test]
    fn selection_parsing_and_validation() {
        let m = model(&[0, 0], &["abs(x1) - x2"], &["x1"]);
        let s = Selection::parse("x1=(-1,-1); y1=(0,0); z1=(0,0)", &m).unwrap();
        assert_eq!(s, sel(&[&[-1, -1]], &[&[0, 0]], &[(0, &[0, 0])]));
        assert_eq!(s.to_string(), "x1=(-1, -1);y1=(0, 0);z1=(0, 0)");
        assert!(Selection::parse("x1=(5,5)", &m).is_err());
        assert!(Selection::parse("q1=(0,0)", &m).is_err());
        // interior points of the polytopes are accepted
        assert!(Selection::parse("x1=(0,-1)", &m).is_ok());
    }

    #[test]
    fn odometer_order() {
        let m = model(&[0, 0], &["abs(sin(x1)) - abs(sin(x2))"], &[]);
        let space = SelectionSpace::new(&m);
        assert_eq!(space.size(), 4);
        let all: Vec<String> = space.iter().map(|s| s.to_string()).collect();
        assert_eq!(
            all,
            vec![
                "x1=(-1, 0);y1=(0, -1)",
                "x1=(-1, 0);y1=(0, 1)",
                "x1=(1, 0);y1=(0, -1)",
                "x1=(1, 0);y1=(0, 1)"
            ]
        );
    }
}
