//! Convex subcone of the contingent cone and KKT-type certificates.
//!
//! For a selection passing the constraint qualification, `K` is cut out by
//! one inequality per vertex of the shifted polytopes. Optimality conditions
//! are decided by a feasibility LP over convex/conic coefficients on named
//! vertices; a feasible point is returned as a replayable certificate.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::cq::{self, build_ci, shifted_inequalities, SearchOutcome, Selection, SelectionSpace};
use crate::error::{Error, Result};
use crate::geometry::{cone_hull, FinCone, Polytope};
use crate::lp::{self, Feasibility, LpProblem, LpVerdict, VarBound};
use crate::problem::{FnRef, LocalModel, PolyhedralSet};
use crate::rational::{self, dot, Rational, VecDisplay, Vector};

/// Where a row of `K` or a certificate term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    /// `sub f0 + y0*`
    Objective,
    /// `sub f_i + y_i*`
    EqualitySub(usize),
    /// `-x_i* - sup f_i`
    EqualitySup(usize),
    /// `sub g_j + z_j*`
    Inequality(usize),
    /// Row `k` of the polyhedral set.
    Normal(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Objective => write!(f, "sub f0 + y0*"),
            Source::EqualitySub(i) => write!(f, "sub f{0} + y{0}*", i + 1),
            Source::EqualitySup(i) => write!(f, "-x{0}* - sup f{0}", i + 1),
            Source::Inequality(j) => write!(f, "sub g{0} + z{0}*", j + 1),
            Source::Normal(k) => write!(f, "normal of A row {}", k + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeRow {
    pub normal: Vector,
    pub source: Source,
}

/// `K = {v | <a, v> <= 0 for every row}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeK {
    pub dim: usize,
    pub rows: Vec<ConeRow>,
    /// Whether the selection it was built from passed the constraint qualification.
    pub cq_established: bool,
}

/// Builds `K` for a selection. Inactive inequalities contribute nothing.
pub fn build_cone_k(model: &LocalModel, sel: &Selection, cq_established: bool) -> Result<ConeK> {
    sel.validate(model)?;
    let mut rows = Vec::new();
    for i in 0..model.m() {
        let ci = build_ci(model, sel, i)?;
        for p in ci.piece_a.vertices() {
            rows.push(ConeRow {
                normal: p.clone(),
                source: Source::EqualitySub(i),
            });
        }
        for p in ci.piece_b.vertices() {
            rows.push(ConeRow {
                normal: p.clone(),
                source: Source::EqualitySup(i),
            });
        }
    }
    for (j, p) in shifted_inequalities(model, sel)? {
        for q in p.vertices() {
            rows.push(ConeRow {
                normal: q.clone(),
                source: Source::Inequality(j),
            });
        }
    }
    Ok(ConeK {
        dim: model.n,
        rows,
        cq_established,
    })
}

impl ConeK {
    pub fn member(&self, v: &[Rational]) -> Result<bool> {
        if v.len() != self.dim {
            return Err(crate::geometry::GeometryError::Dimension {
                expected: self.dim,
                found: v.len(),
            }
            .into());
        }
        Ok(self.rows.iter().all(|r| !dot(&r.normal, v).is_positive()))
    }

    pub fn is_whole_space(&self) -> bool {
        self.rows.iter().all(|r| rational::is_zero_vec(&r.normal))
    }

    /// The LP `max <c, v>` over `K` intersected with the box `|v_k| <= 1`.
    pub fn box_maximizer(&self, c: &[Rational]) -> Result<Vector> {
        let mut lp = LpProblem::new(self.dim).maximize(c.to_vec());
        for r in &self.rows {
            lp.add_le(r.normal.clone(), Rational::zero());
        }
        for k in 0..self.dim {
            lp.bound(k, VarBound::between(-Rational::one(), Rational::one()));
        }
        match lp::solve(&lp)? {
            LpVerdict::Optimal { point, .. } => Ok(point),
            other => unreachable!("bounded LP containing 0 cannot be {other:?}"),
        }
    }

    /// Generating rays of `K`: primitive directions of the nonzero vertices of
    /// `K` intersected with the unit box, with redundant ones removed.
    ///
    /// Returns `None` if the enumeration would exceed `limit` linear solves.
    pub fn rays(&self, limit: usize) -> Result<Option<Vec<Vector>>> {
        let n = self.dim;
        let mut rows: Vec<(Vector, Rational)> = self
            .rows
            .iter()
            .filter(|r| !rational::is_zero_vec(&r.normal))
            .map(|r| (r.normal.clone(), Rational::zero()))
            .collect();
        for k in 0..n {
            let mut e = rational::zeros(n);
            e[k] = Rational::one();
            rows.push((e.clone(), Rational::one()));
            rows.push((rational::neg(&e), Rational::one()));
        }
        if binomial(rows.len(), n) > limit {
            return Ok(None);
        }
        let mut verts: Vec<Vector> = Vec::new();
        for subset in Combinations::new(rows.len(), n) {
            let a: Vec<Vector> = subset.iter().map(|&k| rows[k].0.clone()).collect();
            let b: Vec<Rational> = subset.iter().map(|&k| rows[k].1.clone()).collect();
            let Some(x) = rational::solve_square(&a, &b) else {
                continue;
            };
            if rows.iter().all(|(r, rhs)| dot(r, &x) <= *rhs) && !rational::is_zero_vec(&x) {
                verts.push(rational::primitive(&x));
            }
        }
        verts.sort();
        verts.dedup();
        let mut i = 0;
        while i < verts.len() {
            let others: Vec<Vector> = verts
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, v)| v.clone())
                .collect();
            if FinCone::new(n, others)?.member(&verts[i])? {
                verts.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(Some(verts))
    }

    /// Short text form such as `K = {t(-1, 1) | t >= 0}`.
    pub fn describe(&self) -> Result<String> {
        if self.is_whole_space() {
            return Ok(format!("K = R^{}", self.dim));
        }
        Ok(match self.rays(200_000)? {
            None => format!("K = {{v | {} rows}}", self.rows.len()),
            Some(r) if r.is_empty() => "K = {0}".to_string(),
            Some(r) if r.len() == 1 => format!("K = {{t{} | t >= 0}}", VecDisplay(&r[0])),
            Some(r) => format!(
                "K = cone{{{}}}",
                r.iter()
                    .map(|v| VecDisplay(v).to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        })
    }
}

impl fmt::Display for ConeRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, v> <= 0   [{}]", VecDisplay(&self.normal), self.source)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for t in i + 1..k {
                    self.idx[t] = self.idx[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// One weighted point in a certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComboTerm {
    pub source: Source,
    pub point: Vector,
    pub coeff: Rational,
}

/// Multipliers plus the combination that reproduces the zero vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KktCertificate {
    pub y0_star: Vector,
    /// One entry per inequality; zero for inactive ones.
    pub lambda: Vec<Rational>,
    pub mu_under: Vec<Rational>,
    pub mu_over: Vec<Rational>,
    /// Weights on the normal-cone generators (polyhedral-set variant only).
    pub nu: Vec<Rational>,
    pub combo: Vec<ComboTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KktVerdict {
    Certified(KktCertificate),
    Refuted,
}

impl KktVerdict {
    pub fn certificate(&self) -> Option<&KktCertificate> {
        match self {
            KktVerdict::Certified(c) => Some(c),
            KktVerdict::Refuted => None,
        }
    }
}

struct Group {
    source: Source,
    points: Vec<Vector>,
    convex: bool,
}

/// Feasibility of `sum coeff * point = 0` with convex groups summing to one.
fn combo_lp(n: usize, groups: &[Group]) -> Result<Option<Vec<ComboTerm>>> {
    let vars: Vec<(usize, &Vector)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, grp)| grp.points.iter().map(move |p| (g, p)))
        .collect();
    let mut eq: Vec<(Vector, Rational)> = (0..n)
        .map(|c| (vars.iter().map(|(_, p)| p[c].clone()).collect(), Rational::zero()))
        .collect();
    for (g, grp) in groups.iter().enumerate() {
        if grp.convex {
            let row = vars
                .iter()
                .map(|(h, _)| if *h == g { Rational::one() } else { Rational::zero() })
                .collect();
            eq.push((row, Rational::one()));
        }
    }
    let bounds = vec![VarBound::nonneg(); vars.len()];
    Ok(match lp::feasible(&eq, &[], &bounds)? {
        Feasibility::Witness(x) => Some(
            vars.iter()
                .zip(x)
                .filter(|(_, c)| !c.is_zero())
                .map(|((g, p), coeff)| ComboTerm {
                    source: groups[*g].source,
                    point: (*p).clone(),
                    coeff,
                })
                .collect(),
        ),
        Feasibility::Infeasible => None,
    })
}

fn certificate_from(model: &LocalModel, y0: &[Rational], combo: Vec<ComboTerm>, rows: usize) -> KktCertificate {
    let mut lambda = vec![Rational::zero(); model.inequalities.len()];
    let mut mu_under = vec![Rational::zero(); model.m()];
    let mut mu_over = vec![Rational::zero(); model.m()];
    let mut nu = vec![Rational::zero(); rows];
    for t in &combo {
        match t.source {
            Source::Objective => {}
            Source::EqualitySub(i) => mu_under[i] += &t.coeff,
            Source::EqualitySup(i) => mu_over[i] += &t.coeff,
            Source::Inequality(j) => lambda[j] += &t.coeff,
            Source::Normal(k) => nu[k] += &t.coeff,
        }
    }
    KktCertificate {
        y0_star: y0.to_vec(),
        lambda,
        mu_under,
        mu_over,
        nu,
        combo,
    }
}

fn check_y0(model: &LocalModel, y0: &[Rational]) -> Result<()> {
    if y0.len() != model.n || !model.sup(FnRef::Objective).member(y0)? {
        return Err(Error::Selection(format!(
            "y0* = {} is not in {}",
            VecDisplay(y0),
            model.sup(FnRef::Objective)
        )));
    }
    Ok(())
}

fn objective_and_inequality_groups(model: &LocalModel, sel: &Selection, y0: &[Rational]) -> Result<Vec<Group>> {
    let mut groups = vec![Group {
        source: Source::Objective,
        points: model.sub(FnRef::Objective).translate(y0)?.vertices().to_vec(),
        convex: true,
    }];
    for (j, p) in shifted_inequalities(model, sel)? {
        groups.push(Group {
            source: Source::Inequality(j),
            points: p.vertices().to_vec(),
            convex: false,
        });
    }
    Ok(groups)
}

/// `0 in sub f0 + y0* + sum_j lambda_j (sub g_j + z_j*) + cone{C_i}`.
pub fn check_kkt(model: &LocalModel, sel: &Selection, y0: &[Rational]) -> Result<KktVerdict> {
    sel.validate(model)?;
    check_y0(model, y0)?;
    let mut groups = objective_and_inequality_groups(model, sel, y0)?;
    for i in 0..model.m() {
        let ci = build_ci(model, sel, i)?;
        groups.push(Group {
            source: Source::EqualitySub(i),
            points: ci.piece_a.vertices().to_vec(),
            convex: false,
        });
        groups.push(Group {
            source: Source::EqualitySup(i),
            points: ci.piece_b.vertices().to_vec(),
            convex: false,
        });
    }
    Ok(match combo_lp(model.n, &groups)? {
        Some(combo) => KktVerdict::Certified(certificate_from(model, y0, combo, 0)),
        None => KktVerdict::Refuted,
    })
}

/// Multipliers `lambda`, `mu_under`, `mu_over` for a certified `y0*`.
///
/// Returns an error when no multipliers exist for this `y0*`.
pub fn extract_multipliers(model: &LocalModel, sel: &Selection, y0: &[Rational]) -> Result<KktCertificate> {
    match check_kkt(model, sel, y0)? {
        KktVerdict::Certified(c) => Ok(c),
        KktVerdict::Refuted => Err(Error::Selection(format!(
            "no multipliers exist for y0* = {}",
            VecDisplay(y0)
        ))),
    }
}

impl KktCertificate {
    /// Exact replay: membership of every point, sign and sum constraints,
    /// complementarity, and the zero sum.
    pub fn verify(&self, model: &LocalModel, sel: &Selection, set_a: Option<&PolyhedralSet>) -> Result<bool> {
        let mut total = rational::zeros(model.n);
        let mut objective_weight = Rational::zero();
        let mut lambda = vec![Rational::zero(); model.inequalities.len()];
        let mut mu_under = vec![Rational::zero(); model.m()];
        let mut mu_over = vec![Rational::zero(); model.m()];
        let mut nu = vec![Rational::zero(); self.nu.len()];
        let shifted: Vec<(usize, Polytope)> = shifted_inequalities(model, sel)?;
        let active_normals = set_a.map(|a| a.active_rows(&model.anchor)).unwrap_or_default();
        for t in &self.combo {
            if t.coeff.is_negative() {
                return Ok(false);
            }
            let ok = match t.source {
                Source::Objective => {
                    objective_weight += &t.coeff;
                    model.sub(FnRef::Objective).translate(&self.y0_star)?.member(&t.point)?
                }
                Source::EqualitySub(i) => {
                    mu_under[i] += &t.coeff;
                    build_ci(model, sel, i)?.piece_a.member(&t.point)?
                }
                Source::EqualitySup(i) => {
                    mu_over[i] += &t.coeff;
                    build_ci(model, sel, i)?.piece_b.member(&t.point)?
                }
                Source::Inequality(j) => {
                    lambda[j] += &t.coeff;
                    match shifted.iter().find(|(k, _)| *k == j) {
                        Some((_, p)) => p.member(&t.point)?,
                        None => false,
                    }
                }
                Source::Normal(k) => {
                    if k >= nu.len() {
                        return Ok(false);
                    }
                    nu[k] += &t.coeff;
                    let row = set_a.and_then(|a| a.rows.get(k));
                    active_normals.contains(&k) && row.is_some_and(|(a, _)| *a == t.point)
                }
            };
            if !ok {
                return Ok(false);
            }
            total = rational::add(&total, &rational::scale(&t.point, &t.coeff));
        }
        let complementary = lambda
            .iter()
            .zip(model.inequality_values())
            .all(|(l, g)| (l * g).is_zero());
        Ok(rational::is_zero_vec(&total)
            && objective_weight.is_one()
            && complementary
            && lambda == self.lambda
            && mu_under == self.mu_under
            && mu_over == self.mu_over
            && nu == self.nu)
    }
}

/// Final word of a vertex scan over `sup f0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptimalityVerdict {
    /// The named `y0*` admits no multipliers, so the anchor is not locally optimal.
    NonOptimal { y0_star: Vector },
    /// Every vertex `y0*` admits multipliers (vertices only; interior points unchecked).
    ConsistentOverVertices,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KktScan {
    pub per_vertex: Vec<(Vector, KktVerdict)>,
    pub verdict: OptimalityVerdict,
}

fn scan(model: &LocalModel, mut check: impl FnMut(&Vector) -> Result<KktVerdict>) -> Result<KktScan> {
    let mut per_vertex = Vec::new();
    let mut witness = None;
    for y0 in model.sup(FnRef::Objective).vertices() {
        let v = check(y0)?;
        if v == KktVerdict::Refuted && witness.is_none() {
            witness = Some(y0.clone());
        }
        per_vertex.push((y0.clone(), v));
    }
    let verdict = match witness {
        Some(y0_star) => OptimalityVerdict::NonOptimal { y0_star },
        None => OptimalityVerdict::ConsistentOverVertices,
    };
    Ok(KktScan { per_vertex, verdict })
}

/// Runs the multiplier LP for every vertex of `sup f0`. Refuses to run unless
/// the selection passes the constraint qualification.
pub fn refute_optimality(model: &LocalModel, sel: &Selection) -> Result<KktScan> {
    sel.validate(model)?;
    if cq::check_cq(model, sel)?.is_none() {
        return Err(Error::CqNotEstablished);
    }
    scan(model, |y0| check_kkt(model, sel, y0))
}

/// `0 not in co{sub g_j + z_j*, j active} + N_A(anchor)`.
pub fn cq_with_set(model: &LocalModel, sel: &Selection, set_a: &PolyhedralSet) -> Result<bool> {
    let shifted: Vec<Polytope> = shifted_inequalities(model, sel)?.into_iter().map(|(_, p)| p).collect();
    if shifted.is_empty() {
        return Ok(true);
    }
    let normal = set_a.normal_cone(&model.anchor)?;
    Ok(Polytope::hull_of_union(&shifted)?.disjoint_from_cone(&normal.negate())?)
}

/// `0 in sub f0 + y0* + sum_j lambda_j (sub g_j + z_j*) + N_A(anchor)`.
pub fn check_kkt_with_set(
    model: &LocalModel,
    sel: &Selection,
    y0: &[Rational],
    set_a: &PolyhedralSet,
) -> Result<KktVerdict> {
    if model.m() > 0 {
        return Err(Error::Invalid(vec![crate::problem::Violation::SetAWithEqualities]));
    }
    sel.validate(model)?;
    check_y0(model, y0)?;
    set_a.normal_cone(&model.anchor)?;
    let mut groups = objective_and_inequality_groups(model, sel, y0)?;
    for k in set_a.active_rows(&model.anchor) {
        groups.push(Group {
            source: Source::Normal(k),
            points: vec![set_a.rows[k].0.clone()],
            convex: false,
        });
    }
    Ok(match combo_lp(model.n, &groups)? {
        Some(combo) => KktVerdict::Certified(certificate_from(model, y0, combo, set_a.rows.len())),
        None => KktVerdict::Refuted,
    })
}

/// First `z*` selection (lexicographic over vertices) satisfying the
/// polyhedral-set constraint qualification.
pub fn search_selection_with_set(model: &LocalModel, set_a: &PolyhedralSet, budget: u64) -> Result<SearchOutcome> {
    let mut tried = 0;
    for sel in SelectionSpace::inequalities_only(model).iter() {
        if tried >= budget {
            return Ok(SearchOutcome::Exhausted { complete: false, tried });
        }
        tried += 1;
        if cq_with_set(model, &sel, set_a)? {
            let v0 = rational::zeros(model.n);
            return Ok(SearchOutcome::Found {
                selection: sel,
                witness: cq::CQWitness {
                    v_list: Vec::new(),
                    w_list: Vec::new(),
                    v0,
                    margin: Rational::one(),
                },
                tried,
            });
        }
    }
    Ok(SearchOutcome::Exhausted { complete: true, tried })
}

/// Vertex scan for the polyhedral-set variant, gated on its qualification.
pub fn refute_optimality_with_set(model: &LocalModel, sel: &Selection, set_a: &PolyhedralSet) -> Result<KktScan> {
    if !cq_with_set(model, sel, set_a)? {
        return Err(Error::CqNotEstablished);
    }
    scan(model, |y0| check_kkt_with_set(model, sel, y0, set_a))
}

/// Whether `candidate` lies in `cone{C_i}`, the polar of the equality part of `K`.
pub fn polar_check(model: &LocalModel, sel: &Selection, candidate: &[Rational]) -> Result<bool> {
    let mut pieces = Vec::new();
    for i in 0..model.m() {
        let ci = build_ci(model, sel, i)?;
        pieces.push(ci.piece_a);
        pieces.push(ci.piece_b);
    }
    Ok(cone_hull(model.n, &pieces)?.member(candidate)?)
}
