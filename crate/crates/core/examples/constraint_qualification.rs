// Searching for a selection that satisfies the constraint qualification.

use quasidiff::calculus::Mode;
use quasidiff::cq::{self, SearchOutcome};
use quasidiff::expr::Expr;
use quasidiff::problem::Problem;
use quasidiff::rational::{ivec, VecDisplay};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem::new(ivec(&[0, 0]), Expr::parse("0")?)
        .with_equality(Expr::parse("abs(x1) - x2")?)
        .with_inequality(Expr::parse("x1")?);
    let model = problem.local_model(Mode::Strict)?;

    match cq::search_selection(&model, cq::DEFAULT_BUDGET)? {
        SearchOutcome::Found { selection, witness, tried } => {
            println!("selection {selection} (after {tried})");
            println!("v0 = {}, margin {}", VecDisplay(&witness.v0), witness.margin);
            assert!(witness.replay(&model, &selection)?);
        }
        SearchOutcome::Exhausted { complete, tried } => {
            println!("no selection after {tried} (complete: {complete})");
        }
    }

    let mfcq = cq::check_qd_mfcq(&model)?;
    println!("q.d.-MFCQ holds: {}", mfcq.holds());

    let twice = Problem::new(ivec(&[0, 0]), Expr::parse("0")?)
        .with_equality(Expr::parse("x1 - x2")?)
        .with_equality(Expr::parse("x1 - x2")?);
    let outcome = cq::search_selection(&twice.local_model(Mode::Strict)?, 100)?;
    println!("duplicated equality: {outcome:?}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
