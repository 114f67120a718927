//! Acceptance checks for the seven published examples and the property suites.
//!
//! Runs without the test harness and prints one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use num_traits::{Signed, Zero};
use quasidiff::analysis::{analyze, AnalysisConfig, Classification};
use quasidiff::cq::{self, SearchOutcome, Selection};
use quasidiff::geometry::{general_position_at, Polytope};
use quasidiff::optimality::{self, build_cone_k, ConeK, KktVerdict, OptimalityVerdict};
use quasidiff::problem::{FnRef, LocalModel};
use quasidiff::rational::{self, int, ivec, ratio, vec_to_f64, Vector};
use quasidiff::sampling::{self, SamplingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, what: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn qd_is(m: &LocalModel, f: FnRef, sub: &Polytope, sup: &Polytope) -> Check {
    let d = &m.data(f).qd;
    ensure(
        d.sub == *sub && d.sup == *sup,
        format!("{f:?}: got [{}, {}], expected [{sub}, {sup}]", d.sub, d.sup),
    )
}

fn sel(m: &LocalModel, text: &str) -> Result<Selection, String> {
    Selection::parse(text, m).map_err(|e| e.to_string())
}

fn found(m: &LocalModel) -> Result<Selection, String> {
    match cq::search_selection(m, cq::DEFAULT_BUDGET).map_err(|e| e.to_string())? {
        SearchOutcome::Found { selection, .. } => Ok(selection),
        other => Err(format!("search: {other:?}")),
    }
}

/// `K` equals the ray spanned by `d`: `d` generates it and probes off the ray are rejected.
fn cone_is_ray(k: &ConeK, d: [i64; 2]) -> Check {
    let rays = k.rays(10_000).map_err(|e| e.to_string())?.ok_or("ray enumeration too large")?;
    ensure(rays == vec![ivec(&d)], format!("rays {rays:?}, expected {d:?}"))?;
    for t in 0..20 {
        let on = rational::scale(&ivec(&d), &ratio(t, 3));
        ensure(k.member(&on).unwrap(), format!("{on:?} should be in K"))?;
    }
    let off = [[1, 0], [0, 1], [-1, 0], [0, -1], [2, 1], [1, 2], [-3, 1], [1, -3]];
    for p in off.iter().chain(&[[-d[0], -d[1]]]) {
        let v = ivec(p);
        let on_ray = v[0].clone() * int(d[1]) == v[1].clone() * int(d[0])
            && (v[0].clone() * int(d[0]) + v[1].clone() * int(d[1])).is_positive();
        ensure(k.member(&v).unwrap() == on_ray, format!("membership of {p:?}"))?;
    }
    Ok(())
}

fn criterion_1() -> Check {
    let p = load("example_3_1.toml");
    let m = model(&p);
    qd_is(&m, FnRef::Equality(0), &pts(&[[1, -1], [-1, -1]]), &pts(&[[0, 0]]))?;
    qd_is(&m, FnRef::Inequality(0), &pts(&[[1, 0]]), &pts(&[[0, 0]]))?;
    let s = sel(&m, "x1=(-1,-1);y1=(0,0);z1=(0,0)")?;
    let w = cq::check_cq(&m, &s).unwrap().ok_or("CQ fails for the published selection")?;
    ensure(w.margin.is_positive() && w.replay(&m, &s).unwrap(), "witness margin/replay")?;
    ensure(
        rational::dot(&ivec(&[1, 0]), &w.v0).is_negative(),
        "v0 strictly decreases g",
    )?;
    let k = build_cone_k(&m, &s, true).unwrap();
    ensure(k.rows.len() == 4, "K should have 4 rows")?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for t in 0..20 {
        let v = rational::scale(&ivec(&[-1, 1]), &ratio(t, 1 + rng.gen_range(0..5)));
        ensure(k.member(&v).unwrap(), format!("member probe {v:?}"))?;
    }
    let mut misses = 0;
    while misses < 20 {
        let v = rvec(&mut rng, 2, -5, 5);
        if v[0] == -v[1].clone() && !v[1].is_negative() {
            continue;
        }
        ensure(!k.member(&v).unwrap(), format!("non-member probe {v:?}"))?;
        misses += 1;
    }
    let mfcq = cq::check_qd_mfcq(&m).unwrap();
    ensure(!mfcq.holds(), "q.d.-MFCQ should fail")?;
    let sum = m.data(FnRef::Equality(0)).qd.qd_sum_set().unwrap();
    let v = sum.vertices();
    let det = &v[0][0] * &v[1][1] - &v[0][1] * &v[1][0];
    ensure(v.len() == 2 && !det.is_zero(), "lin hull [Df]+ should be the whole plane")
}

fn criterion_2() -> Check {
    let p = load("example_3_2.toml");
    let m = model(&p);
    qd_is(&m, FnRef::Equality(0), &pts(&[[1, 0], [-1, 0]]), &pts(&[[0, 1], [0, -1]]))?;
    let sum = m.data(FnRef::Equality(0)).qd.qd_sum_set().unwrap();
    ensure(sum == pts(&[[1, 1], [1, -1], [-1, 1], [-1, -1]]), format!("[Df]+ = {sum}"))?;
    let (passing, complete) = cq::search_all_selections(&m, cq::DEFAULT_BUDGET).unwrap();
    ensure(complete && passing.len() == 4, format!("{} passing selections", passing.len()))?;
    let published = [
        ("x1=(1,0);y1=(0,1)", [1, -1]),
        ("x1=(-1,0);y1=(0,1)", [-1, -1]),
        ("x1=(1,0);y1=(0,-1)", [1, 1]),
        ("x1=(-1,0);y1=(0,-1)", [-1, 1]),
    ];
    for (text, ray) in published {
        let s = sel(&m, text)?;
        ensure(passing.iter().any(|(q, _)| *q == s), format!("{text} not found by search"))?;
        cone_is_ray(&build_cone_k(&m, &s, true).unwrap(), ray).map_err(|e| format!("{text}: {e}"))?;
    }
    ensure(!cq::check_qd_mfcq(&m).unwrap().holds(), "q.d.-MFCQ should fail")
}

fn criterion_3() -> Check {
    let p = load("example_4_1.toml");
    let m = model(&p);
    qd_is(&m, FnRef::Inequality(0), &Polytope::origin(1), &Polytope::convex_hull(vec![ivec(&[0]), ivec(&[1])]).unwrap())?;
    let s = found(&m)?;
    ensure(s.z_star[&0] == ivec(&[1]), format!("z* = {:?}", s.z_star))?;
    ensure(
        optimality::check_kkt(&m, &s, &ivec(&[0])).unwrap() == KktVerdict::Refuted,
        "multiplier LP should be infeasible",
    )?;
    let r = analyze(&p, &AnalysisConfig::default()).unwrap();
    ensure(matches!(r.classification, Classification::NonOptimal { .. }), r.message.clone())?;
    let b = r.oracle.and_then(|o| o.improvement).ok_or("no better point")?;
    ensure(b.exact_verified && b.point[0].is_negative(), format!("better point {:?}", b.point))
}

fn criterion_4() -> Check {
    let p = load("example_4_2.toml");
    let m = model(&p);
    let grad = &m.data(FnRef::Inequality(0)).qd;
    ensure(
        grad.sup == Polytope::origin(2) && grad.sub.is_singleton() && !rational::is_zero_vec(&grad.sub.vertices()[0]),
        "g is smooth with nonzero gradient",
    )?;
    let s = found(&m)?;
    let scan = optimality::refute_optimality(&m, &s).unwrap();
    ensure(
        scan.verdict == OptimalityVerdict::NonOptimal { y0_star: ivec(&[0, 1]) },
        format!("{:?}", scan.verdict),
    )?;
    for k in 1..=4 {
        let t = ratio(1, 10i64.pow(k));
        let x = vec![t.clone(), -(int(2) * &t)];
        let f0 = p.objective.eval_value(&x);
        let g = p.inequalities[0].eval_value(&x);
        ensure(f0.exact && g.exact && f0.value == -t.clone() && !g.value.is_positive(), "(t, -2t) improves")?;
    }
    let b = sampling::local_improvement(&p, &SamplingConfig::default()).ok_or("oracle found nothing")?;
    ensure(b.exact_verified, "oracle point fails exact recheck")
}

fn criterion_5() -> Check {
    // kinked equality in general position
    let m = model(&load("example_5_1.toml"));
    let g = &m.data(FnRef::Inequality(0)).qd;
    qd_is(&m, FnRef::Inequality(0), &pts(&[[2, 0], [0, 2]]), &pts(&[[0, 0], [-1, -1]]))?;
    ensure(!general_position_at(&ivec(&[1, 1]), &g.sub, &g.sup.negate()).unwrap(), "general position at (1, 1)")?;
    let s = found(&m)?;
    let z = &s.z_star[&0];
    ensure(g.sup.vertices().contains(z) && *z != ivec(&[-1, -1]), format!("z* = {z:?}"))?;
    // smooth-looking curve whose diagonal is not tangent
    let p = load("example_5_2.toml");
    let m = model(&p);
    qd_is(&m, FnRef::Equality(0), &pts(&[[1, 1], [0, 0]]), &pts(&[[-1, -1], [1, 0]]))?;
    let s = sel(&m, "x1=(0,0);y1=(1,0)")?;
    ensure(cq::check_cq(&m, &s).unwrap().is_some(), "curve: CQ")?;
    let score = sampling::contingent_membership_at(&p, &[1.0, 1.0], &[1e-3], &SamplingConfig::default());
    ensure(score.score > 0.1, format!("diagonal score {}", score.score))?;
    // max-face singleton fails, qualification still holds
    let m = model(&load("example_5_3.toml"));
    let f = &m.data(FnRef::Equality(0)).qd;
    qd_is(
        &m,
        FnRef::Equality(0),
        &pts(&[[0, 1], [0, -1], [-2, 1], [-2, -1]]),
        &pts(&[[1, 0], [0, 2]]),
    )?;
    ensure(!f.sub.max_face_singleton(&ivec(&[1, 0])).unwrap(), "max-face singleton at (1, 0)")?;
    let s = sel(&m, "x1=(0,0);y1=(0,2)")?;
    ensure(cq::check_cq(&m, &s).unwrap().is_some(), "max-face problem: CQ")
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // (a) shift invariance
    for case in 0..200 {
        let n = rng.gen_range(1..=3);
        let q = quasidifferential(&mut rng, n);
        let s = polytope(&mut rng, n, 4, 3);
        let dirs: Vec<Vector> = (0..5).map(|_| rvec(&mut rng, n, -3, 3)).collect();
        ensure(shift_invariant(&q, &s, &dirs), format!("(a) case {case}"))?;
    }
    // (b) assumptions versus geometry
    for case in 0..100 {
        let (m_eq, l) = (rng.gen_range(1..=2), rng.gen_range(0..=1));
        let p = random_problem(&mut rng, 2, m_eq, l, 2);
        ensure(assumptions_match_geometry_on(&model(&p)), format!("(b) case {case}"))?;
    }
    // (c) q.d.-MFCQ sufficiency
    let mut instances = 0;
    let mut tried = 0;
    while instances < 25 && tried < 2000 {
        tried += 1;
        let (m_eq, l) = (rng.gen_range(0..=2), rng.gen_range(0..=2));
        let p = random_problem(&mut rng, 2 + usize::from(m_eq == 2), m_eq, l, 4);
        if let Some(ok) = mfcq_implies_all_pass(&model(&p)) {
            ensure(ok, format!("(c) instance {instances}"))?;
            instances += 1;
        }
    }
    ensure(instances >= 25, format!("(c) only {instances} instances with q.d.-MFCQ"))?;
    // (d) ladder estimate against the exact derivative
    let mut bad = Vec::new();
    let mut raw_outside = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let e = dc_expr(&mut rng, n, 4);
        let v = rvec(&mut rng, n, -2, 2);
        let (ok, fd, exact) = fd_agrees(&e, &v, false);
        if !ok {
            bad.push(format!("case {case}: fd {fd:.3e} vs {exact}"));
        }
        if !fd_agrees(&e, &v, true).0 {
            raw_outside += 1;
        }
    }
    ensure(bad.is_empty(), format!("(d) {} of 100 outside tolerance: {}", bad.len(), bad.join("; ")))?;
    println!("  (d) raw finest-step quotient outside tolerance in {raw_outside} of 100 cases");
    // (e) certificate replay
    let mut certified = 0;
    for _ in 0..60 {
        let (m_eq, l) = (rng.gen_range(0..=1), rng.gen_range(0..=2));
        let p = random_problem(&mut rng, 2, m_eq, l, 2);
        certified += replay_certificates(&model(&p)).ok_or("(e) replay failed")?;
    }
    ensure(certified > 0, "(e) no certificates produced")?;
    // (f) LP versus enumeration
    for case in 0..100 {
        let (c, rows) = random_lp(&mut rng);
        ensure(lp_agrees(&c, &rows), format!("(f) case {case}"))?;
    }
    Ok(())
}

fn tangent_scores(file: &str, selections: &[Selection]) -> Check {
    let p = load(file);
    let m = model(&p);
    let cfg = SamplingConfig::default();
    let mut rng = cfg.rng();
    for s in selections {
        ensure(cq::check_cq(&m, s).unwrap().is_some(), format!("{file}: CQ fails for {s}"))?;
        let k = build_cone_k(&m, s, true).unwrap();
        for v in sampling::sample_cone_rays(&k, 50, &mut rng).unwrap() {
            ensure(k.member(&v).unwrap(), "sampled ray outside K")?;
            let sc = sampling::contingent_membership_at(&p, &vec_to_f64(&v), &[1e-4], &cfg);
            ensure(sc.score < 1e-3, format!("{file}: ray {v:?} score {}", sc.score))?;
        }
    }
    Ok(())
}

fn criterion_7() -> Check {
    let m = model(&load("example_3_1.toml"));
    tangent_scores("example_3_1.toml", &[found(&m)?])?;
    let m = model(&load("example_3_2.toml"));
    let all: Vec<Selection> = cq::search_all_selections(&m, cq::DEFAULT_BUDGET).unwrap().0.into_iter().map(|(s, _)| s).collect();
    ensure(all.len() == 4, "cross: selections")?;
    tangent_scores("example_3_2.toml", &all)?;
    let m = model(&load("example_5_1.toml"));
    tangent_scores("example_5_1.toml", &[found(&m)?])
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("1 cone from an absolute-value equality", criterion_1),
        ("2 cross-shaped equality and four cones", criterion_2),
        ("3 degenerate inequality refuted", criterion_3),
        ("4 DC objective refuted at y0* = (0, 1)", criterion_4),
        ("5 qualification without general position / regularity", criterion_5),
        ("6 property suites", criterion_6),
        ("7 sampled rays of K are tangent", criterion_7),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS criterion {name} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
