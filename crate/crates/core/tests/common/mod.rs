//! Seeded generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_traits::{Signed, Zero};
use quasidiff::calculus::{Mode, Quasidifferential};
use quasidiff::cq::{self, SelectionSpace};
use quasidiff::expr::{AffineForm, Expr};
use quasidiff::geometry::Polytope;
use quasidiff::lp::{self, LpProblem, LpVerdict};
use quasidiff::optimality::{self, KktVerdict};
use quasidiff::problem::{FnRef, LocalModel, Problem};
use quasidiff::rational::{self, int, ratio, Rational, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn problem_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/problems")
}

pub fn load(name: &str) -> Problem {
    quasidiff::file::load_problem(&problem_dir().join(name)).expect("bundled problem loads")
}

pub fn pts(points: &[[i64; 2]]) -> Polytope {
    Polytope::convex_hull(points.iter().map(|p| rational::ivec(p)).collect()).unwrap()
}

pub fn small(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    int(rng.gen_range(lo..=hi))
}

pub fn rvec(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vector {
    (0..n).map(|_| small(rng, lo, hi)).collect()
}

pub fn polytope(rng: &mut ChaCha8Rng, n: usize, max_points: usize, range: i64) -> Polytope {
    let k = rng.gen_range(1..=max_points);
    Polytope::convex_hull((0..k).map(|_| rvec(rng, n, -range, range)).collect()).unwrap()
}

pub fn quasidifferential(rng: &mut ChaCha8Rng, n: usize) -> Quasidifferential {
    Quasidifferential::new(polytope(rng, n, 4, 3), polytope(rng, n, 4, 3)).unwrap()
}

fn linear(rng: &mut ChaCha8Rng, n: usize, range: i64) -> Expr {
    Expr::Affine(AffineForm {
        coeffs: rvec(rng, n, -range, range),
        offset: Rational::zero(),
    })
}

/// `c.x + max(p_k.x) + min(q_k.x)` with small integer data; homogeneous, so
/// every piece is active at the origin.
pub fn dc_piecewise_linear(rng: &mut ChaCha8Rng, n: usize, smooth_weight: i64) -> Expr {
    let c = linear(rng, n, smooth_weight);
    let maxes = (0..rng.gen_range(1..=2)).map(|_| linear(rng, n, 1)).collect();
    let mins = (0..rng.gen_range(1..=2)).map(|_| linear(rng, n, 1)).collect();
    Expr::add(Expr::add(c, Expr::Max(maxes)), Expr::Min(mins))
}

/// Random DC-style expression vanishing at the origin, depth at most `depth`.
pub fn dc_expr(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Expr {
    let leaf = |rng: &mut ChaCha8Rng| -> Expr {
        let a = AffineForm {
            coeffs: rvec(rng, n, -2, 2),
            offset: Rational::zero(),
        };
        match rng.gen_range(0..4) {
            0 | 1 => Expr::Affine(a),
            2 => Expr::Sin(a),
            _ => Expr::Pow(a, 2),
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..8) {
        0 => leaf(rng),
        1 => Expr::add(dc_expr(rng, n, depth - 1), dc_expr(rng, n, depth - 1)),
        2 => Expr::neg(dc_expr(rng, n, depth - 1)),
        3 => Expr::smul(ratio(rng.gen_range(1..=4), 2), dc_expr(rng, n, depth - 1)),
        4 => Expr::abs(dc_expr(rng, n, depth - 1)),
        5 => Expr::Max((0..rng.gen_range(2..=3)).map(|_| dc_expr(rng, n, depth - 1)).collect()),
        6 => Expr::Min((0..rng.gen_range(2..=3)).map(|_| dc_expr(rng, n, depth - 1)).collect()),
        _ => Expr::mul(leaf(rng), leaf(rng)),
    }
}

/// A problem at the origin with `m` equalities and `l` inequalities.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, l: usize, smooth_weight: i64) -> Problem {
    let mut p = Problem::new(rational::zeros(n), dc_piecewise_linear(rng, n, 1));
    for _ in 0..m {
        p = p.with_equality(dc_piecewise_linear(rng, n, smooth_weight));
    }
    for _ in 0..l {
        p = p.with_inequality(dc_piecewise_linear(rng, n, smooth_weight));
    }
    p
}

pub fn model(p: &Problem) -> LocalModel {
    p.local_model(Mode::Strict).unwrap()
}

/// Every vertex selection of the model.
pub fn all_selections(m: &LocalModel) -> Vec<cq::Selection> {
    SelectionSpace::new(m).iter().collect()
}

/// Solves `a x = b` by Gauss-Jordan elimination, independent of the library.
pub fn gauss(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..n {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
                let t = &f * &b[col];
                b[r] -= t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Outcome of maximising `c.x` over `A x <= b` by brute-force vertex enumeration.
#[derive(Debug, PartialEq, Eq)]
pub enum Enumerated {
    Optimal(Rational),
    Infeasible,
    Unbounded,
}

fn best_vertex(c: &[Rational], rows: &[(Vector, Rational)], bound: i64) -> Option<Rational> {
    let n = c.len();
    let mut all = rows.to_vec();
    for k in 0..n {
        let mut e = rational::zeros(n);
        e[k] = int(1);
        all.push((e.clone(), int(bound)));
        all.push((rational::neg(&e), int(bound)));
    }
    let mut best: Option<Rational> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<Rational>> = idx.iter().map(|&k| all[k].0.clone()).collect();
        let b: Vec<Rational> = idx.iter().map(|&k| all[k].1.clone()).collect();
        if let Some(x) = gauss(a, b) {
            if all.iter().all(|(r, rhs)| rational::dot(r, &x) <= *rhs) {
                let v = rational::dot(c, &x);
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < all.len() - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Unboundedness is detected by comparing two nested boxes.
pub fn enumerate_lp(c: &[Rational], rows: &[(Vector, Rational)]) -> Enumerated {
    match (best_vertex(c, rows, 10_000), best_vertex(c, rows, 20_000)) {
        (None, _) => Enumerated::Infeasible,
        (Some(a), Some(b)) if a == b => Enumerated::Optimal(a),
        _ => Enumerated::Unbounded,
    }
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> (Vector, Vec<(Vector, Rational)>) {
    let n = rng.gen_range(1..=3);
    let rows = (0..rng.gen_range(1..=5))
        .map(|_| (rvec(rng, n, -4, 4), small(rng, -3, 6)))
        .collect();
    (rvec(rng, n, -3, 3), rows)
}

/// Library verdict versus enumeration on the same LP.
pub fn lp_agrees(c: &[Rational], rows: &[(Vector, Rational)]) -> bool {
    let mut p = LpProblem::new(c.len()).maximize(c.to_vec());
    for (r, b) in rows {
        p.add_le(r.clone(), b.clone());
    }
    let ours = lp::solve(&p).unwrap();
    match (ours, enumerate_lp(c, rows)) {
        (LpVerdict::Optimal { point, value }, Enumerated::Optimal(v)) => {
            p.is_satisfied_by(&point) && value == v && rational::dot(c, &point) == value
        }
        (LpVerdict::Infeasible, Enumerated::Infeasible) => true,
        (LpVerdict::Unbounded, Enumerated::Unbounded) => true,
        _ => false,
    }
}

/// `dir_deriv` is unchanged by `[sub + S, sup - S]` for every probe direction.
pub fn shift_invariant(q: &Quasidifferential, s: &Polytope, dirs: &[Vector]) -> bool {
    let shifted = q.shift_pair(s).unwrap();
    dirs.iter()
        .all(|v| q.dir_deriv(v).unwrap() == shifted.dir_deriv(v).unwrap())
}

/// The three assumptions hold exactly when the geometric conditions do.
pub fn assumptions_match_geometry_on(m: &LocalModel) -> bool {
    all_selections(m).iter().all(|sel| {
        let lp_side = cq::check_cq(m, sel).unwrap().is_some();
        let geo_side = cq::check_geometric(m, sel).unwrap().holds();
        lp_side == geo_side
    })
}

/// `None` when q.d.-MFCQ fails (nothing to check).
pub fn mfcq_implies_all_pass(m: &LocalModel) -> Option<bool> {
    if !cq::check_qd_mfcq(m).unwrap().holds() {
        return None;
    }
    Some(all_selections(m).iter().all(|sel| cq::check_cq(m, sel).unwrap().is_some()))
}

/// Exact replay of every certificate produced for the model, recomputed by hand.
/// Returns the number of certificates checked, or `None` on a failed replay.
pub fn replay_certificates(m: &LocalModel) -> Option<usize> {
    let mut checked = 0;
    for sel in all_selections(m) {
        if cq::check_cq(m, &sel).unwrap().is_none() {
            continue;
        }
        for y0 in m.sup(FnRef::Objective).vertices() {
            let KktVerdict::Certified(c) = optimality::check_kkt(m, &sel, y0).unwrap() else {
                continue;
            };
            let mut total = rational::zeros(m.n);
            for t in &c.combo {
                if t.coeff.is_negative() {
                    return None;
                }
                total = rational::add(&total, &rational::scale(&t.point, &t.coeff));
            }
            let inactive_zero = c
                .lambda
                .iter()
                .enumerate()
                .all(|(j, l)| m.active.contains(&j) || l.is_zero());
            let multipliers_nonneg = c
                .lambda
                .iter()
                .chain(&c.mu_under)
                .chain(&c.mu_over)
                .all(|x| !x.is_negative());
            if !rational::is_zero_vec(&total)
                || !inactive_zero
                || !multipliers_nonneg
                || !c.verify(m, &sel, None).unwrap()
            {
                return None;
            }
            checked += 1;
        }
    }
    Some(checked)
}

/// Relative agreement of a difference-quotient estimate with the exact derivative.
/// `raw` compares the finest quotient itself rather than the ladder estimate.
pub fn fd_agrees(e: &Expr, v: &Vector, raw: bool) -> (bool, f64, f64) {
    let n = v.len();
    let q = quasidiff::calculus::quasidiff(e, &rational::zeros(n)).unwrap();
    let exact = rational::to_f64(&q.dir_deriv(v).unwrap());
    let cfg = quasidiff::sampling::SamplingConfig::default();
    let fd = quasidiff::sampling::fd_dir_deriv(e, &vec![0.0; n], &rational::vec_to_f64(v), &cfg);
    let est = if raw { fd.finest } else { fd.value };
    ((est - exact).abs() < 1e-4 * (1.0 + exact.abs()), est, exact)
}
