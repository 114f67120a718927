//! End-to-end analysis of a problem at its anchor.

use std::fmt::{self, Write as _};

use num_traits::One;
use serde_json::{json, Value};

use crate::calculus::{LocalData, Mode};
use crate::cq::{self, CQWitness, MfcqReport, SearchOutcome, Selection, SelectionSpace};
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::optimality::{
    self, ConeK, KktCertificate, KktScan, KktVerdict, OptimalityVerdict, Source,
};
use crate::problem::{FnRef, LocalModel, Problem};
use crate::rational::{format_rational, vec_strings, vec_to_f64, Rational, VecDisplay, Vector};
use crate::sampling::{self, ContingentScore, Improvement, SamplingConfig};

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub mode: Mode,
    pub budget: u64,
    /// Explicit selection text; the search is skipped when present.
    pub selection: Option<String>,
    /// Number of rays of `K` to probe with the contingent oracle.
    pub sample: usize,
    /// Look for a better feasible point when the verdict is non-optimal.
    pub improve: bool,
    pub sampling: SamplingConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Strict,
            budget: cq::DEFAULT_BUDGET,
            selection: None,
            sample: 0,
            improve: true,
            sampling: SamplingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// Every vertex of `sup f0` admits multipliers.
    KktConsistent,
    NonOptimal { y0_star: Vector },
    CqNotEstablished,
    /// The selection search hit its budget before finishing.
    BudgetExhausted,
}

impl Classification {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::KktConsistent => "kkt-consistent",
            Classification::NonOptimal { .. } => "non-optimal",
            Classification::CqNotEstablished => "cq-not-established",
            Classification::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionReport {
    pub function: FnRef,
    pub label: String,
    pub expr: String,
    pub data: LocalData,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CqReport {
    pub selection: Option<Selection>,
    pub witness: Option<CQWitness>,
    /// The selection came from the caller rather than a search.
    pub explicit: bool,
    pub tried: u64,
    pub space: u64,
    pub complete: bool,
    /// Uses the polyhedral-set qualification instead of assumptions 1 to 3.
    pub with_set: bool,
    pub mfcq: Option<MfcqReport>,
    /// Single inequality and no equalities: first `z*` in general position.
    pub general_position: Option<Option<Vector>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub improvement: Option<Improvement>,
    pub rays: Vec<(Vector, ContingentScore)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub n: usize,
    pub anchor: Vector,
    pub mode: Mode,
    pub exact: bool,
    pub functions: Vec<FunctionReport>,
    pub active: Vec<usize>,
    pub cq: CqReport,
    pub cone: Option<ConeK>,
    pub kkt: Option<KktScan>,
    pub classification: Classification,
    /// Human-readable reason for the classification.
    pub message: String,
    pub flags: Vec<(String, bool)>,
    pub oracle: Option<OracleReport>,
}

pub fn label(f: FnRef) -> String {
    match f {
        FnRef::Objective => "f0".into(),
        FnRef::Equality(i) => format!("f{}", i + 1),
        FnRef::Inequality(j) => format!("g{}", j + 1),
    }
}

fn function_reports(problem: &Problem, model: &LocalModel) -> Vec<FunctionReport> {
    problem
        .functions()
        .map(|(f, e)| FunctionReport {
            function: f,
            label: label(f),
            expr: e.to_string(),
            data: model.data(f).clone(),
        })
        .collect()
}

/// Runs validation, the selection search, cone construction and the multiplier scan.
pub fn analyze(problem: &Problem, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    problem.validate(cfg.mode).map_err(Error::Invalid)?;
    let model = problem.local_model(cfg.mode)?;
    let with_set = problem.set_a.is_some();
    let space = if with_set {
        SelectionSpace::inequalities_only(&model).size()
    } else {
        SelectionSpace::new(&model).size()
    };

    let (selection, witness, tried, complete, explicit) = match &cfg.selection {
        Some(text) => {
            let sel = Selection::parse(text, &model)?;
            let w = match &problem.set_a {
                Some(a) => optimality::cq_with_set(&model, &sel, a)?.then(|| placeholder(&model)),
                None => cq::check_cq(&model, &sel)?,
            };
            (Some(sel), w, 1, true, true)
        }
        None => {
            let outcome = match &problem.set_a {
                Some(a) => optimality::search_selection_with_set(&model, a, cfg.budget)?,
                None => cq::search_selection(&model, cfg.budget)?,
            };
            match outcome {
                SearchOutcome::Found {
                    selection,
                    witness,
                    tried,
                } => (Some(selection), Some(witness), tried, true, false),
                SearchOutcome::Exhausted { complete, tried } => (None, None, tried, complete, false),
            }
        }
    };

    let mfcq = if with_set { None } else { Some(cq::check_qd_mfcq(&model)?) };
    let general_position = if model.m() == 0 && problem.inequalities.len() == 1 && model.active == [0] {
        Some(cq::general_position_cq(&model.inequalities[0].qd)?)
    } else {
        None
    };

    let established = witness.is_some();
    let cone = match (&selection, with_set) {
        (Some(sel), false) => Some(optimality::build_cone_k(&model, sel, established)?),
        _ => None,
    };
    let kkt = match (&selection, established) {
        (Some(sel), true) => Some(match &problem.set_a {
            Some(a) => optimality::refute_optimality_with_set(&model, sel, a)?,
            None => optimality::refute_optimality(&model, sel)?,
        }),
        _ => None,
    };

    let classification = match &kkt {
        Some(scan) => match &scan.verdict {
            OptimalityVerdict::NonOptimal { y0_star } => Classification::NonOptimal {
                y0_star: y0_star.clone(),
            },
            OptimalityVerdict::ConsistentOverVertices => Classification::KktConsistent,
        },
        None if !complete => Classification::BudgetExhausted,
        None => Classification::CqNotEstablished,
    };
    let message = match (&classification, &selection) {
        (Classification::NonOptimal { y0_star }, Some(sel)) => {
            format!("NONOPTIMAL: {}", refutation_formula(&model, sel, y0_star, with_set)?)
        }
        (Classification::KktConsistent, _) => {
            "KKT-CONSISTENT: multipliers exist for every vertex y0* of sup f0".into()
        }
        (Classification::BudgetExhausted, _) => format!(
            "BUDGET EXHAUSTED: {tried} of {space} selections tried without establishing the constraint qualification"
        ),
        _ if explicit => "CQ NOT ESTABLISHED: the given selection fails the constraint qualification".into(),
        _ => format!("CQ NOT ESTABLISHED: none of the {space} vertex selections passes"),
    };

    let oracle = if cfg.sample > 0 || (cfg.improve && matches!(classification, Classification::NonOptimal { .. })) {
        let improvement = if cfg.improve && matches!(classification, Classification::NonOptimal { .. }) {
            sampling::local_improvement(problem, &cfg.sampling)
        } else {
            None
        };
        let mut rays = Vec::new();
        if let (Some(k), true) = (&cone, cfg.sample > 0) {
            let mut rng = cfg.sampling.rng();
            for v in sampling::sample_cone_rays(k, cfg.sample, &mut rng)? {
                let score = sampling::contingent_membership(problem, &vec_to_f64(&v), &cfg.sampling);
                rays.push((v, score));
            }
        }
        Some(OracleReport { improvement, rays })
    } else {
        None
    };

    Ok(AnalysisReport {
        n: model.n,
        anchor: model.anchor.clone(),
        mode: cfg.mode,
        exact: model.exact,
        functions: function_reports(problem, &model),
        active: model.active.clone(),
        cq: CqReport {
            selection,
            witness,
            explicit,
            tried,
            space,
            complete,
            with_set,
            mfcq,
            general_position,
        },
        cone,
        kkt,
        classification,
        message,
        flags: problem.flags.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        oracle,
    })
}

fn placeholder(model: &LocalModel) -> CQWitness {
    CQWitness {
        v_list: Vec::new(),
        w_list: Vec::new(),
        v0: crate::rational::zeros(model.n),
        margin: Rational::one(),
    }
}

fn term(coef: &str, p: &Polytope) -> String {
    if p.dim() == 1 && p.is_singleton() {
        let c = &p.vertices()[0][0];
        if c.is_one() {
            return coef.to_string();
        }
        return format!("{}{coef}", format_rational(c));
    }
    format!("{coef}·{p}")
}

/// `no λ ≥ 0 satisfies 0 ∈ A + λ B` written out with the actual sets.
fn refutation_formula(model: &LocalModel, sel: &Selection, y0: &Vector, with_set: bool) -> Result<String> {
    let obj = model.sub(FnRef::Objective).translate(y0)?;
    let mut head = if obj.dim() == 1 && obj.is_singleton() {
        format_rational(&obj.vertices()[0][0])
    } else {
        obj.to_string()
    };
    let single = model.active.len() == 1;
    let mut names = Vec::new();
    for (j, p) in cq::shifted_inequalities(model, sel)? {
        let name = if single { "λ".to_string() } else { format!("λ{}", j + 1) };
        head.push_str(&format!(" + {}", term(&name, &p)));
        names.push(name);
    }
    for i in 0..model.m() {
        let ci = cq::build_ci(model, sel, i)?;
        let (a, b) = (format!("μ̲{}", i + 1), format!("μ̄{}", i + 1));
        head.push_str(&format!(" + {} + {}", term(&a, &ci.piece_a), term(&b, &ci.piece_b)));
        names.push(a);
        names.push(b);
    }
    if with_set {
        head.push_str(" + N_A");
    }
    Ok(if names.is_empty() {
        format!("0 ∉ {head} at y0* = {}", VecDisplay(y0))
    } else {
        format!(
            "no {} ≥ 0 satisfies 0 ∈ {head} (y0* = {})",
            names.join(", "),
            VecDisplay(y0)
        )
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn fmt_list(xs: &[Rational]) -> String {
    xs.iter().map(format_rational).collect::<Vec<_>>().join(", ")
}

fn write_certificate(out: &mut String, c: &KktCertificate) {
    let _ = write!(out, "certified: lambda = [{}]", fmt_list(&c.lambda));
    if !c.mu_under.is_empty() {
        let _ = write!(out, ", mu_under = [{}], mu_over = [{}]", fmt_list(&c.mu_under), fmt_list(&c.mu_over));
    }
    if !c.nu.is_empty() {
        let _ = write!(out, ", nu = [{}]", fmt_list(&c.nu));
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "dimension {}, anchor {}", self.n, VecDisplay(&self.anchor));
        if self.mode == Mode::Lenient {
            let _ = writeln!(s, "mode: lenient ({})", if self.exact { "all decisions exact" } else { "inexact" });
        }
        for fr in &self.functions {
            let _ = writeln!(s, "{} = {}", fr.label, fr.expr);
            let _ = writeln!(
                s,
                "  value {}{}",
                format_rational(&fr.data.value.value),
                if fr.data.value.exact { "" } else { " (inexact)" }
            );
            let _ = writeln!(s, "  sub {}", fr.data.qd.sub);
            let _ = writeln!(s, "  sup {}", fr.data.qd.sup);
        }
        let active: Vec<String> = self.active.iter().map(|j| format!("g{}", j + 1)).collect();
        let _ = writeln!(
            s,
            "active inequalities: {}",
            if active.is_empty() { "none".into() } else { active.join(", ") }
        );
        let cq = &self.cq;
        let _ = writeln!(s, "constraint qualification{}:", if cq.with_set { " (with set A)" } else { "" });
        match &cq.selection {
            Some(sel) => {
                let how = if cq.explicit { "given".to_string() } else { format!("found after {} of {}", cq.tried, cq.space) };
                let _ = writeln!(s, "  selection {sel} ({how})");
            }
            None => {
                let _ = writeln!(s, "  no selection ({} of {} tried{})", cq.tried, cq.space, if cq.complete { "" } else { ", budget exhausted" });
            }
        }
        match &cq.witness {
            Some(w) if !cq.with_set => {
                for (i, v) in w.v_list.iter().enumerate() {
                    let _ = writeln!(s, "  v{} = {}, w{} = {}", i + 1, VecDisplay(v), i + 1, VecDisplay(&w.w_list[i]));
                }
                let _ = writeln!(s, "  v0 = {}, margin {}", VecDisplay(&w.v0), format_rational(&w.margin));
                let _ = writeln!(s, "  holds");
            }
            Some(_) => {
                let _ = writeln!(s, "  holds");
            }
            None => {
                let _ = writeln!(s, "  not established");
            }
        }
        if let Some(m) = &cq.mfcq {
            let _ = writeln!(
                s,
                "  q.d.-MFCQ: {} (strong independence {}, inequalities off span {}, v0 {})",
                if m.holds() { "holds" } else { "fails" },
                yes_no(m.strong_independence),
                yes_no(m.inequalities_off_span),
                m.v0.as_ref().map_or("none".to_string(), |v| VecDisplay(v).to_string())
            );
        }
        if let Some(gp) = &cq.general_position {
            let _ = writeln!(
                s,
                "  general position: {}",
                gp.as_ref().map_or("no vertex z* works".to_string(), |z| format!("z* = {}", VecDisplay(z)))
            );
        }
        if let Some(k) = &self.cone {
            let _ = writeln!(s, "cone K ({} rows):", k.rows.len());
            for r in &k.rows {
                let _ = writeln!(s, "  {r}");
            }
            if let Ok(d) = k.describe() {
                let _ = writeln!(s, "  {d}");
            }
        }
        if let Some(scan) = &self.kkt {
            let _ = writeln!(s, "multipliers per vertex y0* of sup f0:");
            for (y0, v) in &scan.per_vertex {
                let _ = write!(s, "  y0* = {}: ", VecDisplay(y0));
                match v {
                    KktVerdict::Certified(c) => write_certificate(&mut s, c),
                    KktVerdict::Refuted => s.push_str("refuted"),
                }
                s.push('\n');
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(s, "oracle (floating point):");
            if let Some(b) = &o.improvement {
                let _ = writeln!(
                    s,
                    "  better point {}: f0 = {:.6e} < {:.6e}{}",
                    VecDisplay(&b.point),
                    b.value,
                    b.anchor_value,
                    if b.exact_verified { " (exact recheck passed)" } else { "" }
                );
            } else if matches!(self.classification, Classification::NonOptimal { .. }) {
                let _ = writeln!(s, "  no better point found nearby");
            }
            if !o.rays.is_empty() {
                let members = o.rays.iter().filter(|(_, sc)| sc.member).count();
                let worst = o.rays.iter().map(|(_, sc)| sc.score).fold(0.0, f64::max);
                let _ = writeln!(s, "  {members}/{} sampled rays of K look tangent (max score {worst:.3e})", o.rays.len());
            }
        }
        if !self.flags.is_empty() {
            let fl: Vec<String> = self.flags.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "flags: {}", fl.join(", "));
        }
        let _ = writeln!(s, "{}", self.message);
        f.write_str(&s)
    }
}

fn jr(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn jv(v: &[Rational]) -> Value {
    json!(vec_strings(v))
}

fn jp(p: &Polytope) -> Value {
    Value::Array(p.vertices().iter().map(|v| jv(v)).collect())
}

fn j_source(s: &Source) -> Value {
    match s {
        Source::Objective => json!({"kind": "objective"}),
        Source::EqualitySub(i) => json!({"kind": "equality-sub", "index": i + 1}),
        Source::EqualitySup(i) => json!({"kind": "equality-sup", "index": i + 1}),
        Source::Inequality(j) => json!({"kind": "inequality", "index": j + 1}),
        Source::Normal(k) => json!({"kind": "set-row", "index": k + 1}),
    }
}

pub fn selection_json(sel: &Selection) -> Value {
    json!({
        "x": sel.x_star.iter().map(|v| jv(v)).collect::<Vec<_>>(),
        "y": sel.y_star.iter().map(|v| jv(v)).collect::<Vec<_>>(),
        "z": sel.z_star.iter().map(|(j, v)| (format!("{}", j + 1), jv(v))).collect::<serde_json::Map<_, _>>(),
        "text": sel.to_string(),
    })
}

pub fn cone_json(k: &ConeK) -> Value {
    json!({
        "rows": k.rows.iter().map(|r| json!({"normal": jv(&r.normal), "source": j_source(&r.source)})).collect::<Vec<_>>(),
        "cq_established": k.cq_established,
        "description": k.describe().ok(),
    })
}

fn certificate_json(c: &KktCertificate) -> Value {
    json!({
        "y0_star": jv(&c.y0_star),
        "lambda": jv(&c.lambda),
        "mu_under": jv(&c.mu_under),
        "mu_over": jv(&c.mu_over),
        "nu": jv(&c.nu),
        "combination": c.combo.iter().map(|t| json!({
            "source": j_source(&t.source),
            "point": jv(&t.point),
            "coeff": jr(&t.coeff),
        })).collect::<Vec<_>>(),
    })
}

impl AnalysisReport {
    /// Structured form; rationals are strings and floats only appear under `oracle`.
    pub fn to_json(&self) -> Value {
        let cq = &self.cq;
        json!({
            "schema": 1,
            "dimension": self.n,
            "anchor": jv(&self.anchor),
            "mode": if self.mode == Mode::Lenient { "lenient" } else { "strict" },
            "exact": self.exact,
            "functions": self.functions.iter().map(|f| json!({
                "name": f.label,
                "expression": f.expr,
                "value": jr(&f.data.value.value),
                "value_exact": f.data.value.exact,
                "sub": jp(&f.data.qd.sub),
                "sup": jp(&f.data.qd.sup),
            })).collect::<Vec<_>>(),
            "active": self.active.iter().map(|j| j + 1).collect::<Vec<_>>(),
            "cq": {
                "with_set": cq.with_set,
                "explicit": cq.explicit,
                "tried": cq.tried,
                "space": cq.space,
                "complete": cq.complete,
                "selection": cq.selection.as_ref().map(selection_json),
                "established": cq.witness.is_some(),
                "witness": cq.witness.as_ref().filter(|_| !cq.with_set).map(|w| json!({
                    "v": w.v_list.iter().map(|v| jv(v)).collect::<Vec<_>>(),
                    "w": w.w_list.iter().map(|v| jv(v)).collect::<Vec<_>>(),
                    "v0": jv(&w.v0),
                    "margin": jr(&w.margin),
                })),
                "qd_mfcq": cq.mfcq.as_ref().map(|m| json!({
                    "holds": m.holds(),
                    "strong_independence": m.strong_independence,
                    "inequalities_off_span": m.inequalities_off_span,
                    "v0": m.v0.as_ref().map(|v| jv(v)),
                })),
                "general_position": cq.general_position.as_ref().map(|g| json!({
                    "z_star": g.as_ref().map(|v| jv(v)),
                })),
            },
            "cone": self.cone.as_ref().map(cone_json),
            "kkt": self.kkt.as_ref().map(|scan| json!(scan.per_vertex.iter().map(|(y0, v)| json!({
                "y0_star": jv(y0),
                "verdict": if v.certificate().is_some() { "certified" } else { "refuted" },
                "certificate": v.certificate().map(certificate_json),
            })).collect::<Vec<_>>())),
            "classification": {
                "kind": self.classification.tag(),
                "y0_star": match &self.classification {
                    Classification::NonOptimal { y0_star } => Some(jv(y0_star)),
                    _ => None,
                },
                "message": self.message,
            },
            "flags": self.flags.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "structural_assumptions": "continuity and upper semicontinuity hold for every expression of the grammar",
            "oracle": self.oracle.as_ref().map(|o| json!({
                "improvement": o.improvement.as_ref().map(|b| json!({
                    "point": jv(&b.point),
                    "value": b.value,
                    "anchor_value": b.anchor_value,
                    "exact_verified": b.exact_verified,
                })),
                "rays": o.rays.iter().map(|(v, sc)| json!({
                    "direction": jv(v),
                    "score": sc.score,
                    "per_step": sc.per_step,
                    "tangent": sc.member,
                })).collect::<Vec<_>>(),
            })),
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::rational::ivec;

    fn problem(anchor: &[i64], obj: &str, ineqs: &[&str]) -> Problem {
        let mut p = Problem::new(ivec(anchor), Expr::parse(obj).unwrap());
        for g in ineqs {
            p = p.with_inequality(Expr::parse(g).unwrap());
        }
        p
    }

    #[test]
    fn nonoptimal_scalar_problem() {
        let p = problem(&[0], "x1", &["min(x1, pow(x1, 3))"]);
        let r = analyze(&p, &AnalysisConfig::default()).unwrap();
        assert_eq!(r.classification, Classification::NonOptimal { y0_star: ivec(&[0]) });
        assert!(r.message.contains("no λ ≥ 0 satisfies 0 ∈ 1 + λ"), "{}", r.message);
        assert!(r.oracle.unwrap().improvement.unwrap().exact_verified);
    }

    #[test]
    fn global_minimum_is_consistent() {
        let p = problem(&[0, 0], "abs(x1) + abs(x2)", &[]);
        let r = analyze(&p, &AnalysisConfig::default()).unwrap();
        assert_eq!(r.classification, Classification::KktConsistent);
        let a = r.to_json_string();
        let b = analyze(&p, &AnalysisConfig::default()).unwrap().to_json_string();
        assert_eq!(a, b);
        assert!(a.contains("\"schema\": 1"));
    }

    #[test]
    fn duplicate_equalities_fail_the_cq() {
        let p = Problem::new(ivec(&[0, 0]), Expr::parse("0").unwrap())
            .with_equality(Expr::parse("x1 - x2").unwrap())
            .with_equality(Expr::parse("x1 - x2").unwrap());
        let r = analyze(&p, &AnalysisConfig::default()).unwrap();
        assert_eq!(r.classification, Classification::CqNotEstablished);
        let cfg = AnalysisConfig {
            budget: 0,
            ..AnalysisConfig::default()
        };
        assert_eq!(analyze(&p, &cfg).unwrap().classification, Classification::BudgetExhausted);
    }

    #[test]
    fn invalid_anchor_is_rejected() {
        let p = problem(&[1], "0", &["x1"]);
        assert!(matches!(analyze(&p, &AnalysisConfig::default()), Err(Error::Invalid(_))));
    }
}
