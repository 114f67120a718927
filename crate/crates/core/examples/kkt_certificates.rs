// Multiplier certificates and refutations at the origin.

use quasidiff::calculus::Mode;
use quasidiff::cq::{self, SearchOutcome};
use quasidiff::expr::Expr;
use quasidiff::optimality::{check_kkt, refute_optimality, KktVerdict, OptimalityVerdict};
use quasidiff::problem::Problem;
use quasidiff::rational::{format_rational, ivec, VecDisplay};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem::new(ivec(&[0, 0]), Expr::parse("abs(x1) - abs(x2)")?)
        .with_inequality(Expr::parse("-x1 + x2")?);
    let model = problem.local_model(Mode::Strict)?;
    let SearchOutcome::Found { selection, .. } = cq::search_selection(&model, cq::DEFAULT_BUDGET)? else {
        return Err("no selection passes".into());
    };

    match check_kkt(&model, &selection, &ivec(&[0, -1]))? {
        KktVerdict::Certified(c) => {
            let lambda: Vec<String> = c.lambda.iter().map(format_rational).collect();
            println!("y0* = (0, -1): lambda = [{}]", lambda.join(", "));
            assert!(c.verify(&model, &selection, None)?);
        }
        KktVerdict::Refuted => println!("y0* = (0, -1): refuted"),
    }

    let scan = refute_optimality(&model, &selection)?;
    if let OptimalityVerdict::NonOptimal { y0_star } = &scan.verdict {
        println!("not locally optimal: no multipliers for y0* = {}", VecDisplay(y0_star));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
