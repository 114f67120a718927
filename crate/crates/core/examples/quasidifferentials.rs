// Quasidifferentials and exact directional derivatives of a few nonsmooth functions.

use quasidiff::calculus::quasidiff;
use quasidiff::expr::Expr;
use quasidiff::rational::{ivec, format_rational};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let origin = ivec(&[0, 0]);
    for src in [
        "abs(x1) - x2",
        "abs(sin(x1)) - abs(sin(x2))",
        "max(abs(x2), abs(x2) - 2*x1) + min(x1, 2*x2)",
    ] {
        let f = Expr::parse(src)?;
        let qd = quasidiff(&f, &origin)?;
        println!("f = {f}");
        println!("  sub {}", qd.sub);
        println!("  sup {}", qd.sup);
        for v in [[1, 0], [0, 1], [-1, 1]] {
            let d = qd.dir_deriv(&ivec(&v))?;
            println!("  f'(0; {v:?}) = {}", format_rational(&d));
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
