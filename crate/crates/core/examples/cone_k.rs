// The convex cone K attached to each passing selection of a cross-shaped set.

use quasidiff::calculus::Mode;
use quasidiff::cq;
use quasidiff::expr::Expr;
use quasidiff::optimality::build_cone_k;
use quasidiff::problem::Problem;
use quasidiff::rational::ivec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem::new(ivec(&[0, 0]), Expr::parse("0")?)
        .with_equality(Expr::parse("abs(sin(x1)) - abs(sin(x2))")?);
    let model = problem.local_model(Mode::Strict)?;
    let (passing, complete) = cq::search_all_selections(&model, cq::DEFAULT_BUDGET)?;
    assert!(complete);
    for (k, (sel, _)) in passing.iter().enumerate() {
        let cone = build_cone_k(&model, sel, true)?;
        println!("K{} from {sel}: {}", k + 1, cone.describe()?);
        for probe in [[1, 1], [1, -1], [-1, 1], [-1, -1], [1, 0]] {
            if cone.member(&ivec(&probe))? {
                println!("  contains {probe:?}");
            }
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
