// Floating-point cross-checks: difference quotients, tangent scores, better points.

use quasidiff::calculus::Mode;
use quasidiff::cq::{self, SearchOutcome};
use quasidiff::expr::Expr;
use quasidiff::optimality::build_cone_k;
use quasidiff::problem::Problem;
use quasidiff::rational::{ivec, vec_to_f64, VecDisplay};
use quasidiff::sampling::{self, SamplingConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SamplingConfig { seed: 7, ..SamplingConfig::default() };

    let f = Expr::parse("max(sin(x1) + sin(x2), 0) + min(-x1 - x2, x1)")?;
    let fd = sampling::fd_dir_deriv(&f, &[0.0, 0.0], &[1.0, 1.0], &cfg);
    println!("difference quotients along (1, 1): {:?}", fd.quotients);

    let curve = Problem::new(ivec(&[0, 0]), Expr::parse("0")?).with_equality(f);
    let score = sampling::contingent_membership_at(&curve, &[1.0, 1.0], &[1e-3], &cfg);
    println!("diagonal score {:.3} (tangent: {})", score.score, score.member);

    let kink = Problem::new(ivec(&[0, 0]), Expr::parse("0")?)
        .with_equality(Expr::parse("abs(x1) - x2")?)
        .with_inequality(Expr::parse("x1")?);
    let model = kink.local_model(Mode::Strict)?;
    if let SearchOutcome::Found { selection, .. } = cq::search_selection(&model, 1000)? {
        let k = build_cone_k(&model, &selection, true)?;
        let mut rng = cfg.rng();
        for v in sampling::sample_cone_rays(&k, 5, &mut rng)? {
            let s = sampling::contingent_membership(&kink, &vec_to_f64(&v), &cfg);
            println!("ray {} score {:.2e}", VecDisplay(&v), s.score);
        }
    }

    let degenerate = Problem::new(ivec(&[0]), Expr::parse("x1")?)
        .with_inequality(Expr::parse("min(x1, pow(x1, 3))")?);
    if let Some(b) = sampling::local_improvement(&degenerate, &cfg) {
        println!("better point {} (exact recheck: {})", VecDisplay(&b.point), b.exact_verified);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
