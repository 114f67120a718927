//! Command-line front end.
//!
//! Exit codes: 0 when the analysis completed (whatever its verdict), 2 for
//! invalid input, 3 when the selection budget ran out, 1 for anything else.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{self, cone_json, selection_json, AnalysisConfig, Classification};
use crate::calculus::{local_data, Mode};
use crate::cq::{self, parse_point, SearchOutcome, Selection, SelectionSpace};
use crate::error::Error;
use crate::file::load_problem;
use crate::optimality::{self, ConeK};
use crate::problem::{LocalModel, Problem};
use crate::rational::{format_rational, vec_strings, vec_to_f64, VecDisplay};
use crate::sampling::{self, SamplingConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "quasidiff", version, about = "Exact quasidifferential analysis of nonsmooth programs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for the sampling oracles.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of selections examined by a search.
    #[arg(long, global = true, default_value_t = cq::DEFAULT_BUDGET)]
    pub budget: u64,
    /// Decide activity numerically with a small tolerance; results are marked inexact.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Also write a JSON report to this path.
    #[arg(long = "json-out", global = true, value_name = "PATH")]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasidifferentials and directional derivatives of every function.
    Eval {
        file: PathBuf,
        /// Evaluate at this point instead of the anchor, e.g. "(0, 1/2)".
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        /// Direction for exact directional derivatives; may be repeated.
        #[arg(long = "dir", allow_hyphen_values = true)]
        dirs: Vec<String>,
    },
    /// Constraint qualification for one selection or by search.
    Cq {
        file: PathBuf,
        #[command(flatten)]
        sel: SelectionArgs,
    },
    /// Full optimality analysis.
    Kkt {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        selection: Option<String>,
    },
    /// The cone K and optional sampling of its rays.
    Cone {
        file: PathBuf,
        #[command(flatten)]
        sel: SelectionArgs,
        /// Probe this many LP-sampled rays of K with the contingent oracle.
        #[arg(long, value_name = "N", default_value_t = 0)]
        sample: usize,
    },
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    /// Explicit selection such as "x1=(-1,-1);y1=(0,0);z1=(0,0)".
    #[arg(long, allow_hyphen_values = true, conflicts_with = "all_selections")]
    pub selection: Option<String>,
    /// Report every passing vertex selection.
    #[arg(long)]
    pub all_selections: bool,
}

/// Selection text, or a marker when there is nothing to choose.
fn shown(s: &Selection) -> String {
    let text = s.to_string();
    if text.is_empty() {
        "(empty)".to_string()
    } else {
        text
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Invalid(_)
        | Error::Selection(_)
        | Error::File(_)
        | Error::Calculus(_) => EXIT_INVALID,
        _ => EXIT_INTERNAL,
    }
}

struct Ctx<'a> {
    global: &'a Global,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn mode(&self) -> Mode {
        if self.global.lenient {
            Mode::Lenient
        } else {
            Mode::Strict
        }
    }

    fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.global.seed,
            ..SamplingConfig::default()
        }
    }

    fn emit_json(&mut self, v: &Value) -> Result<(), Error> {
        if let Some(path) = &self.global.json_out {
            let mut s = serde_json::to_string_pretty(v).expect("json serializes");
            s.push('\n');
            std::fs::write(path, s).map_err(|e| Error::File(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    fn model(&self, problem: &Problem) -> Result<LocalModel, Error> {
        problem.validate(self.mode()).map_err(Error::Invalid)?;
        problem.local_model(self.mode())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INVALID;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let mut ctx = Ctx {
        global: &cli.global,
        out,
    };
    let result = match &cli.command {
        Command::Eval { file, at, dirs } => cmd_eval(&mut ctx, file, at.as_deref(), dirs),
        Command::Cq { file, sel } => cmd_cq(&mut ctx, file, sel),
        Command::Kkt { file, selection } => cmd_kkt(&mut ctx, file, selection.as_deref()),
        Command::Cone { file, sel, sample } => cmd_cone(&mut ctx, file, sel, *sample),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_eval(ctx: &mut Ctx, file: &Path, at: Option<&str>, dirs: &[String]) -> Result<i32, Error> {
    let problem = load_problem(file)?;
    let point = match at {
        Some(text) => parse_point(text).map_err(|e| Error::File(format!("--at: {e}")))?,
        None => problem.anchor.clone(),
    };
    if point.len() != problem.n {
        return Err(Error::File(format!("point has {} coordinates, expected {}", point.len(), problem.n)));
    }
    let dirs = dirs
        .iter()
        .map(|d| {
            let v = parse_point(d).map_err(|e| Error::File(format!("--dir: {e}")))?;
            if v.len() != problem.n {
                return Err(Error::File(format!("--dir {d} has the wrong dimension")));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut functions = Vec::new();
    writeln!(ctx.out, "at {}", VecDisplay(&point)).ok();
    for (f, e) in problem.functions() {
        let d = local_data(e, &point, ctx.mode())?;
        let name = analysis::label(f);
        writeln!(ctx.out, "{name} = {e}").ok();
        writeln!(
            ctx.out,
            "  value {}{}",
            format_rational(&d.value.value),
            if d.value.exact { "" } else { " (inexact)" }
        )
        .ok();
        writeln!(ctx.out, "  sub {}", d.qd.sub).ok();
        writeln!(ctx.out, "  sup {}", d.qd.sup).ok();
        let mut dds = Vec::new();
        for v in &dirs {
            let dd = d.qd.dir_deriv(v)?;
            writeln!(ctx.out, "  {name}'(x; {}) = {}", VecDisplay(v), format_rational(&dd)).ok();
            dds.push(json!({"direction": vec_strings(v), "value": format_rational(&dd)}));
        }
        functions.push(json!({
            "name": name,
            "expression": e.to_string(),
            "value": format_rational(&d.value.value),
            "value_exact": d.value.exact,
            "sub": d.qd.sub.vertices().iter().map(|v| vec_strings(v)).collect::<Vec<_>>(),
            "sup": d.qd.sup.vertices().iter().map(|v| vec_strings(v)).collect::<Vec<_>>(),
            "directional_derivatives": dds,
        }));
    }
    ctx.emit_json(&json!({"schema": 1, "point": vec_strings(&point), "functions": functions}))?;
    Ok(EXIT_OK)
}

fn witness_json(w: &cq::CQWitness) -> Value {
    json!({
        "v": w.v_list.iter().map(|v| vec_strings(v)).collect::<Vec<_>>(),
        "w": w.w_list.iter().map(|v| vec_strings(v)).collect::<Vec<_>>(),
        "v0": vec_strings(&w.v0),
        "margin": format_rational(&w.margin),
    })
}

fn print_witness(out: &mut dyn Write, w: &cq::CQWitness) {
    for (i, v) in w.v_list.iter().enumerate() {
        writeln!(out, "  v{} = {}, w{} = {}", i + 1, VecDisplay(v), i + 1, VecDisplay(&w.w_list[i])).ok();
    }
    writeln!(out, "  v0 = {}, margin {}", VecDisplay(&w.v0), format_rational(&w.margin)).ok();
}

fn cmd_cq(ctx: &mut Ctx, file: &Path, sel: &SelectionArgs) -> Result<i32, Error> {
    let problem = load_problem(file)?;
    if let Some(a) = &problem.set_a {
        return cq_with_set(ctx, &problem, a, sel);
    }
    let model = ctx.model(&problem)?;
    let space = SelectionSpace::new(&model).size();
    let mut report = json!({"schema": 1, "selection_space": space});
    let mut code = EXIT_OK;
    if let Some(text) = &sel.selection {
        let s = Selection::parse(text, &model)?;
        let w = cq::check_cq(&model, &s)?;
        writeln!(ctx.out, "selection {}", shown(&s)).ok();
        match &w {
            Some(w) => {
                writeln!(ctx.out, "CQ holds").ok();
                print_witness(ctx.out, w);
            }
            None => {
                writeln!(ctx.out, "CQ fails").ok();
                for (name, v) in [
                    ("assumption 1", cq::check_assumption_1(&model, &s)?),
                    ("assumption 2", cq::check_assumption_2(&model, &s)?),
                ] {
                    if let cq::AssumptionVerdict::Violated(i) = v {
                        writeln!(ctx.out, "  {name} violated for equality {}", i + 1).ok();
                    }
                }
                if cq::check_assumption_3(&model, &s)? == cq::V0Verdict::Violated {
                    writeln!(ctx.out, "  assumption 3 violated: no v0").ok();
                }
            }
        }
        report["selection"] = selection_json(&s);
        report["holds"] = json!(w.is_some());
        report["witness"] = w.as_ref().map(witness_json).into();
    } else if sel.all_selections {
        let (found, complete) = cq::search_all_selections(&model, ctx.global.budget)?;
        writeln!(ctx.out, "{} of {space} vertex selections pass", found.len()).ok();
        for (s, w) in &found {
            writeln!(ctx.out, "selection {}", shown(s)).ok();
            print_witness(ctx.out, w);
        }
        if !complete {
            writeln!(ctx.out, "budget exhausted after {} selections", ctx.global.budget).ok();
            code = EXIT_BUDGET;
        }
        report["complete"] = json!(complete);
        report["passing"] = json!(found
            .iter()
            .map(|(s, w)| json!({"selection": selection_json(s), "witness": witness_json(w)}))
            .collect::<Vec<_>>());
    } else {
        match cq::search_selection(&model, ctx.global.budget)? {
            SearchOutcome::Found { selection, witness, tried } => {
                writeln!(ctx.out, "FOUND after {tried} of {space}: {selection}").ok();
                print_witness(ctx.out, &witness);
                report["outcome"] = json!("found");
                report["tried"] = json!(tried);
                report["selection"] = selection_json(&selection);
                report["witness"] = witness_json(&witness);
            }
            SearchOutcome::Exhausted { complete, tried } => {
                if complete {
                    writeln!(ctx.out, "EXHAUSTED: none of the {space} vertex selections passes").ok();
                } else {
                    writeln!(ctx.out, "BUDGET EXHAUSTED after {tried} of {space} selections").ok();
                    code = EXIT_BUDGET;
                }
                report["outcome"] = json!(if complete { "exhausted" } else { "budget-exhausted" });
                report["tried"] = json!(tried);
            }
        }
    }
    let m = cq::check_qd_mfcq(&model)?;
    writeln!(
        ctx.out,
        "q.d.-MFCQ: {}",
        if m.holds() { "holds" } else { "fails" }
    )
    .ok();
    writeln!(
        ctx.out,
        "  strong independence {}, inequalities off span {}, v0 {}",
        m.strong_independence,
        m.inequalities_off_span,
        m.v0.as_ref().map_or("none".to_string(), |v| VecDisplay(v).to_string())
    )
    .ok();
    report["qd_mfcq"] = json!({
        "holds": m.holds(),
        "strong_independence": m.strong_independence,
        "inequalities_off_span": m.inequalities_off_span,
        "v0": m.v0.as_ref().map(|v| vec_strings(v)),
    });
    if model.m() == 0 && model.active == [0] {
        let g = &model.inequalities[0].qd;
        let z = cq::general_position_cq(g)?;
        match &z {
            Some(z) => writeln!(ctx.out, "general position: z* = {}", VecDisplay(z)).ok(),
            None => writeln!(ctx.out, "general position: no vertex z* works").ok(),
        };
        report["general_position"] = json!({"z_star": z.as_ref().map(|v| vec_strings(v))});
    }
    ctx.emit_json(&report)?;
    Ok(code)
}

fn cq_with_set(ctx: &mut Ctx, problem: &Problem, a: &crate::problem::PolyhedralSet, sel: &SelectionArgs) -> Result<i32, Error> {
    let model = ctx.model(problem)?;
    let space = SelectionSpace::inequalities_only(&model).size();
    let mut code = EXIT_OK;
    let mut report = json!({"schema": 1, "with_set": true, "selection_space": space});
    let selections: Vec<Selection> = match &sel.selection {
        Some(text) => vec![Selection::parse(text, &model)?],
        None => {
            let all: Vec<Selection> = SelectionSpace::inequalities_only(&model).iter().take(ctx.global.budget as usize).collect();
            if (all.len() as u64) < space {
                code = EXIT_BUDGET;
            }
            all
        }
    };
    let mut passing = Vec::new();
    for s in &selections {
        if optimality::cq_with_set(&model, s, a)? {
            writeln!(ctx.out, "selection {}: CQ holds", shown(s)).ok();
            passing.push(selection_json(s));
            if !sel.all_selections && sel.selection.is_none() {
                break;
            }
        } else if sel.selection.is_some() || sel.all_selections {
            writeln!(ctx.out, "selection {}: CQ fails", shown(s)).ok();
        }
    }
    if passing.is_empty() {
        writeln!(ctx.out, "{}", if code == EXIT_BUDGET { "BUDGET EXHAUSTED" } else { "CQ not established" }).ok();
    }
    report["passing"] = json!(passing);
    ctx.emit_json(&report)?;
    Ok(code)
}

fn cmd_kkt(ctx: &mut Ctx, file: &Path, selection: Option<&str>) -> Result<i32, Error> {
    let problem = load_problem(file)?;
    let cfg = AnalysisConfig {
        mode: ctx.mode(),
        budget: ctx.global.budget,
        selection: selection.map(str::to_string),
        sample: 0,
        improve: true,
        sampling: ctx.sampling(),
    };
    let report = analysis::analyze(&problem, &cfg)?;
    write!(ctx.out, "{report}").ok();
    ctx.emit_json(&report.to_json())?;
    Ok(if report.classification == Classification::BudgetExhausted {
        EXIT_BUDGET
    } else {
        EXIT_OK
    })
}

fn print_cone(out: &mut dyn Write, k: &ConeK) -> Result<(), Error> {
    writeln!(out, "cone K ({} rows{}):", k.rows.len(), if k.cq_established { "" } else { ", CQ not established" }).ok();
    for r in &k.rows {
        writeln!(out, "  {r}").ok();
    }
    writeln!(out, "  {}", k.describe()?).ok();
    Ok(())
}

fn cmd_cone(ctx: &mut Ctx, file: &Path, sel: &SelectionArgs, sample: usize) -> Result<i32, Error> {
    let problem = load_problem(file)?;
    if problem.set_a.is_some() {
        return Err(Error::File("the cone command does not support set_A".into()));
    }
    let model = ctx.model(&problem)?;
    let mut code = EXIT_OK;
    let cones: Vec<(Selection, bool)> = if let Some(text) = &sel.selection {
        let s = Selection::parse(text, &model)?;
        let ok = cq::check_cq(&model, &s)?.is_some();
        vec![(s, ok)]
    } else if sel.all_selections {
        let (found, complete) = cq::search_all_selections(&model, ctx.global.budget)?;
        if !complete {
            code = EXIT_BUDGET;
        }
        found.into_iter().map(|(s, _)| (s, true)).collect()
    } else {
        match cq::search_selection(&model, ctx.global.budget)? {
            SearchOutcome::Found { selection, .. } => vec![(selection, true)],
            SearchOutcome::Exhausted { complete, .. } => {
                if !complete {
                    code = EXIT_BUDGET;
                }
                vec![]
            }
        }
    };
    if cones.is_empty() {
        writeln!(
            ctx.out,
            "{}",
            if code == EXIT_BUDGET { "BUDGET EXHAUSTED: no selection found" } else { "no selection passes the constraint qualification" }
        )
        .ok();
    }
    let scfg = ctx.sampling();
    let mut rng = scfg.rng();
    let mut items = Vec::new();
    for (idx, (s, ok)) in cones.iter().enumerate() {
        let k = optimality::build_cone_k(&model, s, *ok)?;
        if cones.len() > 1 {
            writeln!(ctx.out, "K{} for selection {s}", idx + 1).ok();
        } else {
            writeln!(ctx.out, "selection {}", shown(s)).ok();
        }
        print_cone(ctx.out, &k)?;
        let mut item = json!({"selection": selection_json(s), "cone": cone_json(&k)});
        if sample > 0 {
            let mut rays = Vec::new();
            let mut tangent = 0;
            let mut worst: f64 = 0.0;
            for v in sampling::sample_cone_rays(&k, sample, &mut rng)? {
                let sc = sampling::contingent_membership(&problem, &vec_to_f64(&v), &scfg);
                tangent += usize::from(sc.member);
                worst = worst.max(sc.score);
                rays.push(json!({"direction": vec_strings(&v), "score": sc.score, "tangent": sc.member}));
            }
            writeln!(ctx.out, "  sampled {sample} rays: {tangent} tangent, max score {worst:.3e}").ok();
            item["oracle"] = json!({"rays": rays});
        }
        items.push(item);
    }
    ctx.emit_json(&json!({"schema": 1, "cones": items}))?;
    Ok(code)
}
