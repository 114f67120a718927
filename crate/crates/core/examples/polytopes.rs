// Vertex-represented polytopes: hulls, Minkowski sums, support functions, cones.

use quasidiff::geometry::{general_position_at, FinCone, Polytope};
use quasidiff::rational::{format_rational, ivec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let square = Polytope::convex_hull(vec![
        ivec(&[0, 0]),
        ivec(&[1, 0]),
        ivec(&[0, 1]),
        ivec(&[1, 1]),
        ivec(&[1, 0]),
    ])?;
    let segment = Polytope::convex_hull(vec![ivec(&[-1, -1]), ivec(&[1, 0])])?;
    println!("square  {square}");
    println!("segment {segment}");
    println!("sum     {}", square.minkowski_sum(&segment)?);

    let v = ivec(&[1, 1]);
    let face = square.support(&v)?;
    println!("s(square, (1, 1)) = {} on {} vertex", format_rational(&face.value), face.face_vertices.len());
    println!("max-face at (1, 0) is a singleton: {}", square.max_face_singleton(&ivec(&[1, 0]))?);

    let quadrant = FinCone::new(2, vec![ivec(&[1, 0]), ivec(&[0, 1])])?;
    let shifted = square.translate(&ivec(&[-3, 1]))?;
    println!("shifted square misses the quadrant: {}", shifted.disjoint_from_cone(&quadrant)?);

    let sub = Polytope::convex_hull(vec![ivec(&[2, 0]), ivec(&[0, 2])])?;
    let minus_sup = Polytope::convex_hull(vec![ivec(&[0, 0]), ivec(&[1, 1])])?;
    println!("general position at (1, 1): {}", general_position_at(&v, &sub, &minus_sup)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
