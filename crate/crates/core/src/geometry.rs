//! Polytopes and finitely generated cones over exact rationals.
//!
//! Only V-representations are used. Every membership or intersection question
//! becomes a small feasibility LP on the vertex/generator data, so nothing here
//! depends on the ambient dimension beyond LP size.

use std::fmt;

use num_traits::{One, Zero};

use crate::lp::{self, Feasibility, VarBound};
use crate::rational::{self, dot, Rational, VecDisplay, Vector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("a polytope needs at least one point")]
    Empty,
}

/// Convex hull of a finite, nonempty point list.
///
/// Redundant points are allowed; [`Polytope::canonicalize`] reduces the list to
/// the lexicographically sorted extreme points. All operations in this module
/// return canonical polytopes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vector>,
}

/// Finitely generated convex cone. No generators means the trivial cone `{0}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinCone {
    dim: usize,
    generators: Vec<Vector>,
}

/// Value of the support function in a direction and the vertices attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxFace {
    pub value: Rational,
    pub face_vertices: Vec<Vector>,
}

fn check_dim(expected: usize, found: usize) -> Result<(), GeometryError> {
    if expected == found {
        Ok(())
    } else {
        Err(GeometryError::Dimension { expected, found })
    }
}

impl Polytope {
    /// Wraps a raw point list without canonicalising it.
    pub fn from_points(dim: usize, points: Vec<Vector>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        for p in &points {
            check_dim(dim, p.len())?;
        }
        Ok(Self {
            dim,
            vertices: points,
        })
    }

    /// Convex hull of `points`, canonicalised.
    pub fn convex_hull(points: Vec<Vector>) -> Result<Self, GeometryError> {
        let dim = points.first().ok_or(GeometryError::Empty)?.len();
        Ok(Self::from_points(dim, points)?.canonicalize())
    }

    pub fn singleton(point: Vector) -> Self {
        Self {
            dim: point.len(),
            vertices: vec![point],
        }
    }

    pub fn origin(dim: usize) -> Self {
        Self::singleton(rational::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }

    /// Extreme points only, sorted lexicographically.
    ///
    /// A point is dropped iff it lies in the hull of the remaining points, which
    /// is decided by LP.
    pub fn canonicalize(&self) -> Self {
        let mut pts = self.vertices.clone();
        pts.sort();
        pts.dedup();
        let mut i = 0;
        while i < pts.len() && pts.len() > 2 {
            let (candidate, rest): (&Vector, Vec<Vector>) = (
                &pts[i],
                pts.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, p)| p.clone())
                    .collect(),
            );
            if in_hull(&rest, candidate) {
                pts.remove(i);
            } else {
                i += 1;
            }
        }
        Self {
            dim: self.dim,
            vertices: pts,
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonicalize()
    }

    pub fn support(&self, v: &[Rational]) -> Result<MaxFace, GeometryError> {
        check_dim(self.dim, v.len())?;
        let values: Vec<Rational> = self.vertices.iter().map(|p| dot(p, v)).collect();
        let value = values.iter().max().cloned().expect("nonempty");
        let face_vertices = self
            .vertices
            .iter()
            .zip(&values)
            .filter(|(_, val)| **val == value)
            .map(|(p, _)| p.clone())
            .collect();
        Ok(MaxFace {
            value,
            face_vertices,
        })
    }

    /// Support function value only.
    pub fn support_value(&self, v: &[Rational]) -> Result<Rational, GeometryError> {
        Ok(self.support(v)?.value)
    }

    pub fn minkowski_sum(&self, other: &Polytope) -> Result<Polytope, GeometryError> {
        check_dim(self.dim, other.dim)?;
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for p in &self.vertices {
            for q in &other.vertices {
                pts.push(rational::add(p, q));
            }
        }
        Ok(Self {
            dim: self.dim,
            vertices: pts,
        }
        .canonicalize())
    }

    pub fn scale(&self, lambda: &Rational) -> Polytope {
        if lambda.is_zero() {
            return Self::origin(self.dim);
        }
        Self {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|p| rational::scale(p, lambda))
                .collect(),
        }
        .canonicalize()
    }

    pub fn negate(&self) -> Polytope {
        self.scale(&-Rational::one())
    }

    pub fn translate(&self, t: &[Rational]) -> Result<Polytope, GeometryError> {
        check_dim(self.dim, t.len())?;
        Ok(Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|p| rational::add(p, t)).collect(),
        }
        .canonicalize())
    }

    /// Convex hull of the union of several polytopes.
    pub fn hull_of_union(parts: &[Polytope]) -> Result<Polytope, GeometryError> {
        let dim = parts.first().ok_or(GeometryError::Empty)?.dim;
        let mut pts = Vec::new();
        for p in parts {
            check_dim(dim, p.dim)?;
            pts.extend(p.vertices.iter().cloned());
        }
        Ok(Self::from_points(dim, pts)?.canonicalize())
    }

    /// Exact membership via a convex-combination feasibility LP.
    pub fn member(&self, x: &[Rational]) -> Result<bool, GeometryError> {
        check_dim(self.dim, x.len())?;
        Ok(in_hull(&self.vertices, x))
    }

    /// True iff this polytope and the cone `k` have no common point.
    pub fn disjoint_from_cone(&self, k: &FinCone) -> Result<bool, GeometryError> {
        check_dim(self.dim, k.dim)?;
        // sum a_p p - sum b_g g = 0, sum a = 1, a, b >= 0
        let na = self.vertices.len();
        let nb = k.generators.len();
        let mut eq = Vec::with_capacity(self.dim + 1);
        for c in 0..self.dim {
            let mut row = Vec::with_capacity(na + nb);
            row.extend(self.vertices.iter().map(|p| p[c].clone()));
            row.extend(k.generators.iter().map(|g| -g[c].clone()));
            eq.push((row, Rational::zero()));
        }
        let mut sum = vec![Rational::one(); na];
        sum.extend(vec![Rational::zero(); nb]);
        eq.push((sum, Rational::one()));
        let bounds = vec![VarBound::nonneg(); na + nb];
        Ok(!solve_feasible(&eq, &bounds))
    }

    /// True iff some point of the polytope lies in the linear span of `span_of`.
    pub fn intersects_span(&self, span_of: &[Vector]) -> Result<bool, GeometryError> {
        for s in span_of {
            check_dim(self.dim, s.len())?;
        }
        let na = self.vertices.len();
        let ns = span_of.len();
        let mut eq = Vec::with_capacity(self.dim + 1);
        for c in 0..self.dim {
            let mut row = Vec::with_capacity(na + ns);
            row.extend(self.vertices.iter().map(|p| p[c].clone()));
            row.extend(span_of.iter().map(|g| -g[c].clone()));
            eq.push((row, Rational::zero()));
        }
        let mut sum = vec![Rational::one(); na];
        sum.extend(vec![Rational::zero(); ns]);
        eq.push((sum, Rational::one()));
        let mut bounds = vec![VarBound::nonneg(); na];
        bounds.extend(vec![VarBound::free(); ns]);
        Ok(solve_feasible(&eq, &bounds))
    }

    /// Whether the max-face of this polytope in direction `v` has a single extreme point.
    pub fn max_face_singleton(&self, v: &[Rational]) -> Result<bool, GeometryError> {
        let face = self.support(v)?;
        let hull = Polytope::from_points(self.dim, face.face_vertices)?.canonicalize();
        Ok(hull.is_singleton())
    }
}

impl fmt::Display for Polytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "co{{")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", VecDisplay(v))?;
        }
        write!(f, "}}")
    }
}

impl FinCone {
    pub fn new(dim: usize, generators: Vec<Vector>) -> Result<Self, GeometryError> {
        for g in &generators {
            check_dim(dim, g.len())?;
        }
        Ok(Self { dim, generators })
    }

    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            generators: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn negate(&self) -> FinCone {
        Self {
            dim: self.dim,
            generators: self.generators.iter().map(|g| rational::neg(g)).collect(),
        }
    }

    pub fn member(&self, x: &[Rational]) -> Result<bool, GeometryError> {
        check_dim(self.dim, x.len())?;
        if rational::is_zero_vec(x) {
            return Ok(true);
        }
        let ng = self.generators.len();
        if ng == 0 {
            return Ok(false);
        }
        let eq: Vec<(Vector, Rational)> = (0..self.dim)
            .map(|c| {
                (
                    self.generators.iter().map(|g| g[c].clone()).collect(),
                    x[c].clone(),
                )
            })
            .collect();
        Ok(solve_feasible(&eq, &vec![VarBound::nonneg(); ng]))
    }
}

/// Cone generated by the extreme points of every input polytope.
///
/// An empty input gives the trivial cone.
pub fn cone_hull(dim: usize, sets: &[Polytope]) -> Result<FinCone, GeometryError> {
    let mut gens = Vec::new();
    for s in sets {
        check_dim(dim, s.dim)?;
        gens.extend(s.canonicalize().vertices);
    }
    gens.sort();
    gens.dedup();
    Ok(FinCone {
        dim,
        generators: gens,
    })
}

/// Per-direction general-position probe for the pair `(a, b)`.
///
/// Returns true iff the max-face of `b` at `v` is *not* contained in the
/// max-face of `a` at `v`.
pub fn general_position_at(
    v: &[Rational],
    a: &Polytope,
    b: &Polytope,
) -> Result<bool, GeometryError> {
    check_dim(a.dim, b.dim)?;
    let face_a = Polytope::from_points(a.dim, a.support(v)?.face_vertices)?;
    let face_b = b.support(v)?.face_vertices;
    for q in &face_b {
        if !face_a.member(q)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn in_hull(points: &[Vector], x: &[Rational]) -> bool {
    if points.iter().any(|p| p.as_slice() == x) {
        return true;
    }
    let n = points.len();
    let dim = x.len();
    let mut eq: Vec<(Vector, Rational)> = (0..dim)
        .map(|c| (points.iter().map(|p| p[c].clone()).collect(), x[c].clone()))
        .collect();
    eq.push((vec![Rational::one(); n], Rational::one()));
    solve_feasible(&eq, &vec![VarBound::nonneg(); n])
}

fn solve_feasible(eq: &[(Vector, Rational)], bounds: &[VarBound]) -> bool {
    lp::feasible(eq, &[], bounds)
        .map(|f| matches!(f, Feasibility::Witness(_)))
        .expect("rows are built with consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ivec, ratio};

    fn poly(pts: &[&[i64]]) -> Polytope {
        Polytope::convex_hull(pts.iter().map(|p| ivec(p)).collect()).unwrap()
    }

    fn square() -> Polytope {
        poly(&[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]])
    }

    #[test]
    fn support_of_shifted_subdifferential() {
        let p = poly(&[&[1, -1], &[-1, -1]]);
        assert_eq!(p.support_value(&ivec(&[-1, 1])).unwrap(), int(0));
        let s = Polytope::singleton(ivec(&[3, -2]));
        let face = s.support(&ivec(&[5, 7])).unwrap();
        assert_eq!(face.value, int(1));
        assert_eq!(face.face_vertices, vec![ivec(&[3, -2])]);
    }

    #[test]
    fn support_of_square_enumerates_vertices() {
        // brute force over the four corners
        let v = ivec(&[1, 2]);
        let best = square()
            .vertices()
            .iter()
            .map(|p| dot(p, &v))
            .max()
            .unwrap();
        let face = square().support(&v).unwrap();
        assert_eq!(best, int(3));
        assert_eq!(face.value, best);
        assert_eq!(face.face_vertices, vec![ivec(&[1, 1])]);
    }

    #[test]
    fn minkowski_sums() {
        let sub = poly(&[&[1, 0], &[-1, 0]]);
        let sup = poly(&[&[0, 1], &[0, -1]]);
        assert_eq!(sub.minkowski_sum(&sup).unwrap(), square());
        assert_eq!(sub.minkowski_sum(&Polytope::origin(2)).unwrap(), sub);
        let a = poly(&[&[0, 0], &[1, 0]]);
        let b = poly(&[&[0, 0], &[0, 1]]);
        assert_eq!(
            a.minkowski_sum(&b).unwrap(),
            poly(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])
        );
        assert_eq!(a.vertices().len() * b.vertices().len(), 4);
    }

    #[test]
    fn linear_images() {
        assert_eq!(
            poly(&[&[2, 0], &[0, 2]]).scale(&ratio(1, 2)),
            poly(&[&[1, 0], &[0, 1]])
        );
        assert_eq!(
            poly(&[&[0, 0], &[-1, -1]]).negate(),
            poly(&[&[0, 0], &[1, 1]])
        );
        assert_eq!(
            poly(&[&[1, 0], &[-1, 0]]).translate(&ivec(&[0, 1])).unwrap(),
            poly(&[&[1, 1], &[-1, 1]])
        );
        assert!(matches!(
            square().translate(&ivec(&[1])),
            Err(GeometryError::Dimension { .. })
        ));
    }

    #[test]
    fn hull_drops_interior_points() {
        let collinear =
            Polytope::convex_hull(vec![ivec(&[0, 0]), ivec(&[1, 0]), vec![ratio(1, 2), int(0)]])
                .unwrap();
        assert_eq!(collinear, poly(&[&[0, 0], &[1, 0]]));
        let with_center = poly(&[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1], &[0, 0]]);
        assert_eq!(with_center.vertices().len(), 4);
        let mid = poly(&[&[2, 0], &[0, 2], &[1, 1]]);
        assert_eq!(mid, poly(&[&[2, 0], &[0, 2]]));
        assert!(mid.member(&ivec(&[1, 1])).unwrap());
        assert_eq!(Polytope::convex_hull(vec![]), Err(GeometryError::Empty));
    }

    #[test]
    fn cone_hull_collects_extreme_points() {
        let c = cone_hull(
            2,
            &[poly(&[&[1, -1], &[-1, -1]]), Polytope::singleton(ivec(&[1, 1]))],
        )
        .unwrap();
        assert_eq!(
            c.generators(),
            &[ivec(&[-1, -1]), ivec(&[1, -1]), ivec(&[1, 1])]
        );
        assert!(cone_hull(2, &[]).unwrap().generators().is_empty());
        let q = cone_hull(
            2,
            &[Polytope::singleton(ivec(&[1, 0])), Polytope::singleton(ivec(&[0, 1]))],
        )
        .unwrap();
        assert!(q.member(&ivec(&[3, 5])).unwrap());
        assert!(!q.member(&ivec(&[-1, 5])).unwrap());
    }

    #[test]
    fn membership() {
        let seg = poly(&[&[2, 0], &[0, 2]]);
        assert!(seg.member(&ivec(&[1, 1])).unwrap());
        assert!(!seg.member(&ivec(&[0, 0])).unwrap());
        assert!(FinCone::trivial(2).member(&ivec(&[0, 0])).unwrap());
        assert!(!FinCone::trivial(2).member(&ivec(&[0, 1])).unwrap());
    }

    #[test]
    fn polytope_cone_disjointness() {
        let shifted = poly(&[&[1, 1], &[-1, 1]]);
        let k = FinCone::new(2, vec![ivec(&[-1, 1])]).unwrap();
        assert!(!shifted.disjoint_from_cone(&k).unwrap());
        assert!(Polytope::singleton(ivec(&[1, 0]))
            .disjoint_from_cone(&FinCone::trivial(2))
            .unwrap());
        let simplex = poly(&[&[1, 0], &[0, 1]]);
        let neg = FinCone::new(2, vec![ivec(&[-1, 0]), ivec(&[0, -1])]).unwrap();
        assert!(simplex.disjoint_from_cone(&neg).unwrap());
    }

    #[test]
    fn span_intersection() {
        let sq = square();
        assert!(sq.intersects_span(sq.vertices()).unwrap());
        assert!(!Polytope::singleton(ivec(&[1, 0])).intersects_span(&[]).unwrap());
        assert!(Polytope::origin(2).intersects_span(&[ivec(&[1, 1])]).unwrap());
        assert!(Polytope::origin(2).intersects_span(&[]).unwrap());
        // the segment co{(1,1),(1,-1)} meets the x-axis span
        assert!(poly(&[&[1, 1], &[1, -1]])
            .intersects_span(&[ivec(&[1, 0])])
            .unwrap());
        assert!(!poly(&[&[1, 1], &[2, 1]])
            .intersects_span(&[ivec(&[1, 0])])
            .unwrap());
    }

    #[test]
    fn general_position_probe() {
        let a = poly(&[&[2, 0], &[0, 2]]);
        let b = poly(&[&[0, 0], &[1, 1]]);
        assert!(!general_position_at(&ivec(&[1, 1]), &a, &b).unwrap());
        let b2 = Polytope::singleton(ivec(&[5, 5]));
        let a2 = poly(&[&[0, 0], &[1, 1]]);
        assert!(general_position_at(&ivec(&[0, 0]), &a2, &b2).unwrap());
        for v in [ivec(&[1, 0]), ivec(&[-3, 2]), ivec(&[0, 0])] {
            assert!(!general_position_at(&v, &a, &a).unwrap());
        }
    }

    #[test]
    fn max_face_singletons() {
        let p = poly(&[&[0, 1], &[0, -1], &[-2, 1], &[-2, -1]]);
        assert!(!p.max_face_singleton(&ivec(&[1, 0])).unwrap());
        assert!(Polytope::singleton(ivec(&[4, 4]))
            .max_face_singleton(&ivec(&[0, 0]))
            .unwrap());
        assert!(square().max_face_singleton(&ivec(&[1, 2])).unwrap());
    }
}
