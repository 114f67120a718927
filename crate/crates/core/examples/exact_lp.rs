// The exact simplex solver on a small production-planning LP.

use quasidiff::lp::{self, LpProblem, LpVerdict, VarBound};
use quasidiff::rational::{int, ratio, VecDisplay, format_rational};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // maximize 3a + 2b  s.t.  a + b <= 4,  a + 3b <= 6,  a <= 3,  a, b >= 0
    let mut p = LpProblem::new(2).maximize(vec![int(3), int(2)]);
    p.add_le(vec![int(1), int(1)], int(4))
        .add_le(vec![int(1), int(3)], int(6))
        .bound(0, VarBound::between(int(0), int(3)))
        .bound(1, VarBound::nonneg());
    match lp::solve(&p)? {
        LpVerdict::Optimal { point, value } => {
            println!("optimum {} at {}", format_rational(&value), VecDisplay(&point));
            assert!(p.is_satisfied_by(&point));
        }
        other => println!("{other:?}"),
    }

    let mut q = LpProblem::new(1);
    q.add_ge(vec![int(1)], ratio(1, 2)).add_le(vec![int(1)], ratio(1, 3));
    println!("x >= 1/2 and x <= 1/3: {:?}", lp::solve(&q)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
