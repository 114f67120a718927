//! Floating-point oracles used to cross-check the exact results.
//!
//! Nothing here feeds a certificate. Distances to the feasible set are upper
//! estimates found by ray searches from the probe point, so a small score is
//! trustworthy while a large one is only advisory.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cq::CQWitness;
use crate::error::Result;
use crate::expr::Expr;
use crate::optimality::ConeK;
use crate::problem::{FnRef, LocalModel, Problem};
use crate::rational::{self, Rational, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    /// Decreasing step ladder for difference quotients and cone scores.
    pub steps: Vec<f64>,
    /// Feasibility tolerance, applied relative to the step when probing rays.
    pub feasibility_tol: f64,
    /// Score below which a direction counts as tangent.
    pub cone_tol: f64,
    /// Number of ray directions used around each probe point.
    pub directions: usize,
    /// Grid points along each ray before bisection.
    pub ray_grid: usize,
    /// Ray length as a multiple of the current step.
    pub search_radius: f64,
    /// Random directions tried by the improvement search.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            steps: vec![1e-3, 1e-4, 1e-5],
            feasibility_tol: 1e-9,
            cone_tol: 1e-3,
            directions: 720,
            ray_grid: 400,
            search_radius: 4.0,
            samples: 2000,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Difference quotients `(f(x + t v) - f(x)) / t` along the step ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct FdEstimate {
    pub quotients: Vec<(f64, f64)>,
    /// Richardson extrapolation of the two finest quotients, removing the
    /// first-order truncation term.
    pub value: f64,
    /// Raw quotient at the finest step.
    pub finest: f64,
    /// Successive quotients move by non-increasing amounts.
    pub converged: bool,
}

pub fn fd_dir_deriv(e: &Expr, x: &[f64], v: &[f64], cfg: &SamplingConfig) -> FdEstimate {
    let fx = e.eval_f64(x);
    let quotients: Vec<(f64, f64)> = cfg
        .steps
        .iter()
        .map(|&t| {
            let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t * b).collect();
            (t, (e.eval_f64(&y) - fx) / t)
        })
        .collect();
    let gaps: Vec<f64> = quotients.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let converged = gaps.windows(2).all(|g| g[1] <= g[0] + 1e-9);
    let value = match quotients.as_slice() {
        [.., (t1, q1), (t2, q2)] => (t1 * q2 - t2 * q1) / (t1 - t2),
        [(_, q)] => *q,
        [] => f64::NAN,
    };
    FdEstimate {
        value,
        finest: quotients.last().map_or(f64::NAN, |q| q.1),
        quotients,
        converged,
    }
}

/// Float view of a problem's constraints.
struct Residuals<'a> {
    problem: &'a Problem,
}

impl Residuals<'_> {
    fn feasible(&self, x: &[f64], tol: f64) -> bool {
        self.problem.equalities.iter().all(|f| f.eval_f64(x).abs() <= tol)
            && self.problem.inequalities.iter().all(|g| g.eval_f64(x) <= tol)
            && self.problem.set_a.as_ref().is_none_or(|a| {
                a.rows.iter().all(|(row, b)| {
                    row.iter().zip(x).map(|(c, xi)| rational::to_f64(c) * xi).sum::<f64>()
                        <= rational::to_f64(b) + tol
                })
            })
    }

    fn inequalities_ok(&self, x: &[f64], tol: f64) -> bool {
        self.problem.inequalities.iter().all(|g| g.eval_f64(x) <= tol)
    }

    /// Distance from `y` to the first feasible point along `y + r u`, `r <= r_max`.
    fn first_hit(&self, y: &[f64], u: &[f64], r_max: f64, grid: usize, tol: f64) -> Option<f64> {
        let at = |r: f64| -> Vec<f64> { y.iter().zip(u).map(|(a, b)| a + r * b).collect() };
        match self.problem.equalities.first() {
            None => {
                let mut prev = 0.0;
                for k in 0..=grid {
                    let r = r_max * k as f64 / grid as f64;
                    if self.feasible(&at(r), tol) {
                        if k == 0 {
                            return Some(0.0);
                        }
                        let (mut lo, mut hi) = (prev, r);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if self.feasible(&at(mid), tol) {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        return Some(hi);
                    }
                    prev = r;
                }
                None
            }
            Some(f) => {
                let mut prev_r = 0.0;
                let mut prev_v = f.eval_f64(y);
                for k in 0..=grid {
                    let r = r_max * k as f64 / grid as f64;
                    let val = f.eval_f64(&at(r));
                    let root = if val.abs() <= tol {
                        Some(r)
                    } else if k > 0 && prev_v.signum() != val.signum() {
                        let (mut lo, mut hi, lo_v) = (prev_r, r, prev_v);
                        for _ in 0..80 {
                            let mid = 0.5 * (lo + hi);
                            let mv = f.eval_f64(&at(mid));
                            if mv.signum() == lo_v.signum() {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        Some(0.5 * (lo + hi))
                    } else {
                        None
                    };
                    if let Some(r0) = root {
                        let p = at(r0);
                        let others_ok = self.problem.equalities[1..]
                            .iter()
                            .all(|h| h.eval_f64(&p).abs() <= tol.max(1e-12));
                        if others_ok && self.inequalities_ok(&p, tol.max(1e-12)) {
                            return Some(r0);
                        }
                    }
                    prev_r = r;
                    prev_v = val;
                }
                None
            }
        }
    }
}

fn unit_directions(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if n == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    if n == 2 {
        for k in 0..count {
            let th = std::f64::consts::TAU * k as f64 / count as f64;
            out.push(vec![th.cos(), th.sin()]);
        }
        return out;
    }
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[k] = s;
            out.push(e);
        }
    }
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Estimated `d(x + alpha v, M) / alpha` at each step and the verdict at the finest one.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingentScore {
    pub per_step: Vec<(f64, f64)>,
    pub score: f64,
    pub member: bool,
}

/// Contingent-cone probe along `v` at the problem's anchor.
///
/// Feasibility along rays is tested with tolerance `feasibility_tol * alpha`,
/// so residuals that vanish faster than the step are not mistaken for zero.
pub fn contingent_membership(problem: &Problem, v: &[f64], cfg: &SamplingConfig) -> ContingentScore {
    contingent_membership_at(problem, v, &cfg.steps, cfg)
}

pub fn contingent_membership_at(
    problem: &Problem,
    v: &[f64],
    steps: &[f64],
    cfg: &SamplingConfig,
) -> ContingentScore {
    let x = rational::vec_to_f64(&problem.anchor);
    let res = Residuals { problem };
    let mut rng = cfg.rng();
    let dirs = unit_directions(problem.n, cfg.directions, &mut rng);
    let vnorm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
    let mut per_step = Vec::new();
    for &alpha in steps {
        let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + alpha * b).collect();
        let tol = cfg.feasibility_tol * alpha;
        let r_max = cfg.search_radius * alpha * vnorm;
        let d = if res.feasible(&y, tol) {
            0.0
        } else {
            dirs.iter()
                .filter_map(|u| res.first_hit(&y, u, r_max, cfg.ray_grid, tol))
                .fold(f64::INFINITY, f64::min)
        };
        per_step.push((alpha, d / alpha));
    }
    let score = per_step.last().map_or(f64::INFINITY, |s| s.1);
    ContingentScore {
        member: score < cfg.cone_tol,
        per_step,
        score,
    }
}

/// A feasible point with a strictly smaller objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub point: Vector,
    pub value: f64,
    pub anchor_value: f64,
    /// Feasibility and improvement re-verified in exact arithmetic.
    pub exact_verified: bool,
}

fn exact_recheck(problem: &Problem, x: &[Rational]) -> Option<bool> {
    let f0 = problem.objective.eval_value(x);
    let a0 = problem.objective.eval_value(&problem.anchor);
    let mut exact = f0.exact && a0.exact;
    let mut ok = f0.value < a0.value;
    for f in &problem.equalities {
        let v = f.eval_value(x);
        exact &= v.exact;
        ok &= v.value.is_zero();
    }
    for g in &problem.inequalities {
        let v = g.eval_value(x);
        exact &= v.exact;
        ok &= !v.value.is_positive();
    }
    if let Some(a) = &problem.set_a {
        ok &= a.contains(x);
    }
    exact.then_some(ok)
}

/// Searches small integer directions and then random ones at shrinking radii.
pub fn local_improvement(problem: &Problem, cfg: &SamplingConfig) -> Option<Improvement> {
    let n = problem.n;
    let x = &problem.anchor;
    let xf = rational::vec_to_f64(x);
    let res = Residuals { problem };
    let f_anchor = problem.objective.eval_f64(&xf);
    let mut structured: Vec<Vector> = Vec::new();
    if n <= 4 {
        let mut digits = vec![-2i64; n];
        loop {
            if digits.iter().any(|&d| d != 0) {
                structured.push(rational::ivec(&digits));
            }
            let mut k = 0;
            while k < n {
                digits[k] += 1;
                if digits[k] <= 2 {
                    break;
                }
                digits[k] = -2;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }
    let mut rng = cfg.rng();
    let random: Vec<Vector> = (0..cfg.samples)
        .map(|_| {
            (0..n)
                .map(|_| rational::from_f64(rng.gen_range(-1.0..1.0)).unwrap_or_else(Rational::zero))
                .collect()
        })
        .collect();
    let radii = [
        rational::ratio(1, 10),
        rational::ratio(1, 100),
        rational::ratio(1, 1000),
    ];
    let mut best: Option<Improvement> = None;
    for r in &radii {
        for d in structured.iter().chain(&random) {
            let p = rational::add(x, &rational::scale(d, r));
            let pf = rational::vec_to_f64(&p);
            if !res.feasible(&pf, cfg.feasibility_tol) {
                continue;
            }
            let val = problem.objective.eval_f64(&pf);
            if val < f_anchor - cfg.feasibility_tol {
                let exact_verified = exact_recheck(problem, &p) == Some(true);
                let cand = Improvement {
                    point: p,
                    value: val,
                    anchor_value: f_anchor,
                    exact_verified,
                };
                if exact_verified {
                    return Some(cand);
                }
                best.get_or_insert(cand);
            }
        }
    }
    best
}

/// Expected sign of an exact directional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Negative,
    Positive,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignCheck {
    pub label: String,
    pub value: Rational,
    pub expect: Expect,
    pub pass: bool,
}

/// Exact sign pattern of the directional derivatives at the witness directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignReport {
    pub checks: Vec<SignCheck>,
}

impl SignReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn sign_ok(v: &Rational, e: Expect) -> bool {
    match e {
        Expect::Negative => v.is_negative(),
        Expect::Positive => v.is_positive(),
        Expect::Zero => v.is_zero(),
    }
}

/// `f_i'(v_i) < 0`, `f_i'(w_i) > 0`, `f_k' = 0` on the others' witnesses,
/// `g_j'(v0) < 0` for active `j`, `f_i'(v0) = 0`.
pub fn check_dd_witness_signs(model: &LocalModel, w: &CQWitness) -> Result<SignReport> {
    let m = model.m();
    let dd = |f: FnRef, v: &Vector| model.data(f).qd.dir_deriv(v);
    let mut checks = Vec::new();
    let mut push = |label: String, value: Rational, expect: Expect| {
        let pass = sign_ok(&value, expect);
        checks.push(SignCheck {
            label,
            value,
            expect,
            pass,
        });
    };
    for (name, list, own) in [("v", &w.v_list, Expect::Negative), ("w", &w.w_list, Expect::Positive)] {
        for (i, dir) in list.iter().enumerate() {
            for k in 0..m {
                let expect = if k == i { own } else { Expect::Zero };
                push(
                    format!("f{}'({name}{})", k + 1, i + 1),
                    dd(FnRef::Equality(k), dir)?,
                    expect,
                );
            }
        }
    }
    for &j in &model.active {
        push(format!("g{}'(v0)", j + 1), dd(FnRef::Inequality(j), &w.v0)?, Expect::Negative);
    }
    for i in 0..m {
        push(format!("f{}'(v0)", i + 1), dd(FnRef::Equality(i), &w.v0)?, Expect::Zero);
    }
    Ok(SignReport { checks })
}

/// Random rays of `K`: nonnegative combinations of LP vertices of `K` within the unit box.
///
/// Zero combinations are redrawn a bounded number of times, so the zero
/// vector only appears when `K` is (numerically) the origin.
pub fn sample_cone_rays(k: &ConeK, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vector>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v = rational::zeros(k.dim);
        for _ in 0..32 {
            let parts = rng.gen_range(1..=3);
            for _ in 0..parts {
                let c: Vector = (0..k.dim).map(|_| rational::int(rng.gen_range(-10..=10))).collect();
                let vert = k.box_maximizer(&c)?;
                let w = rational::int(rng.gen_range(1..=10));
                v = rational::add(&v, &rational::scale(&vert, &w));
            }
            if !rational::is_zero_vec(&v) {
                break;
            }
        }
        out.push(v);
    }
    Ok(out)
}
