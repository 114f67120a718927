//! Quasidifferential calculus at an anchor point.
//!
//! A quasidifferential `[sub, sup]` represents the directional derivative
//! `f'(x, v) = max_{p in sub} <p, v> + min_{q in sup} <q, v>`.
//! Rules are applied bottom-up over the expression tree; every intermediate
//! pair is canonicalised and then normalised by a singleton shift so that the
//! representative is the one usually written by hand (a singleton part is
//! moved to the origin).

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::expr::{AffineForm, Expr, PointValue};
use crate::geometry::{GeometryError, Polytope};
use crate::rational::{self, Rational, Vector};

/// Tolerance used for activity decisions in lenient mode.
pub const LENIENT_TOL: f64 = 1e-12;

/// How inexact (transcendental) evaluations are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Any decision that needs a non-symbolic value is an error.
    #[default]
    Strict,
    /// Decisions use floating-point values with [`LENIENT_TOL`]; results are marked inexact.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CalculusError {
    #[error("cannot decide `{context}` exactly at the anchor (transcendental value)")]
    Exactness { context: String },
    #[error("expression uses x{var} but the point has dimension {dim}")]
    Dimension { var: usize, dim: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The pair `[sub, sup]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quasidifferential {
    pub sub: Polytope,
    pub sup: Polytope,
}

/// A quasidifferential together with the function value it was computed with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalData {
    pub value: PointValue,
    pub qd: Quasidifferential,
}

impl Quasidifferential {
    pub fn new(sub: Polytope, sup: Polytope) -> Result<Self, GeometryError> {
        if sub.dim() != sup.dim() {
            return Err(GeometryError::Dimension {
                expected: sub.dim(),
                found: sup.dim(),
            });
        }
        Ok(Self {
            sub: sub.canonicalize(),
            sup: sup.canonicalize(),
        })
    }

    /// `[{0}, {0}]`.
    pub fn zero(dim: usize) -> Self {
        Self {
            sub: Polytope::origin(dim),
            sup: Polytope::origin(dim),
        }
    }

    /// `[{g}, {0}]` for a differentiable function with gradient `g`.
    pub fn smooth(gradient: Vector) -> Self {
        let dim = gradient.len();
        Self {
            sub: Polytope::singleton(gradient),
            sup: Polytope::origin(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.sub.dim()
    }

    /// `s(sub, v) - s(-sup, v)`.
    pub fn dir_deriv(&self, v: &[Rational]) -> Result<Rational, GeometryError> {
        Ok(self.sub.support_value(v)? - self.sup.negate().support_value(v)?)
    }

    /// The quasidifferential sum `sub + sup`.
    pub fn qd_sum_set(&self) -> Result<Polytope, GeometryError> {
        self.sub.minkowski_sum(&self.sup)
    }

    /// `[sub + c, sup - c]`, another representative of the same derivative.
    pub fn shift_pair(&self, c: &Polytope) -> Result<Self, GeometryError> {
        Ok(Self {
            sub: self.sub.minkowski_sum(c)?,
            sup: self.sup.minkowski_sum(&c.negate())?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, GeometryError> {
        Ok(Self {
            sub: self.sub.minkowski_sum(&other.sub)?,
            sup: self.sup.minkowski_sum(&other.sup)?,
        })
    }

    /// Scalar rule: `[l sub, l sup]` for `l >= 0`, `[l sup, l sub]` otherwise.
    pub fn scale(&self, lambda: &Rational) -> Self {
        if lambda.is_negative() {
            Self {
                sub: self.sup.scale(lambda),
                sup: self.sub.scale(lambda),
            }
        } else {
            Self {
                sub: self.sub.scale(lambda),
                sup: self.sup.scale(lambda),
            }
        }
    }

    /// Moves a singleton part to the origin by a translation shift.
    pub fn normalized(&self) -> Self {
        if self.sup.is_singleton() {
            let q = self.sup.vertices()[0].clone();
            self.translate_shift(&q)
        } else if self.sub.is_singleton() {
            let p = rational::neg(&self.sub.vertices()[0]);
            self.translate_shift(&p)
        } else {
            self.clone()
        }
    }

    fn translate_shift(&self, c: &[Rational]) -> Self {
        if rational::is_zero_vec(c) {
            return self.clone();
        }
        Self {
            sub: self.sub.translate(c).expect("dimensions agree"),
            sup: self.sup.translate(&rational::neg(c)).expect("dimensions agree"),
        }
    }
}

impl fmt::Display for Quasidifferential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.sub, self.sup)
    }
}

/// Quasidifferential of `e` at `x` in strict mode.
pub fn quasidiff(e: &Expr, x: &[Rational]) -> Result<Quasidifferential, CalculusError> {
    Ok(local_data(e, x, Mode::Strict)?.qd)
}

/// Value and quasidifferential of `e` at `x`.
pub fn local_data(e: &Expr, x: &[Rational], mode: Mode) -> Result<LocalData, CalculusError> {
    if let Some(var) = e.max_var() {
        if var >= x.len() {
            return Err(CalculusError::Dimension {
                var: var + 1,
                dim: x.len(),
            });
        }
    }
    Walker { x, mode }.walk(e)
}

/// Exact value of `e` at `x`, or an error if a transcendental atom is hit.
pub fn eval_exact(e: &Expr, x: &[Rational]) -> Result<Rational, CalculusError> {
    let v = e.eval_value(x);
    if v.exact {
        Ok(v.value)
    } else {
        Err(CalculusError::Exactness {
            context: format!("value of {e}"),
        })
    }
}

struct Walker<'a> {
    x: &'a [Rational],
    mode: Mode,
}

impl Walker<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn inexact(&self, context: impl FnOnce() -> String) -> Result<(), CalculusError> {
        match self.mode {
            Mode::Strict => Err(CalculusError::Exactness { context: context() }),
            Mode::Lenient => Ok(()),
        }
    }

    fn smooth(&self, value: PointValue, gradient: Vector) -> LocalData {
        LocalData {
            value,
            qd: Quasidifferential::smooth(gradient),
        }
    }

    fn affine(&self, a: &AffineForm) -> LocalData {
        self.smooth(
            PointValue {
                value: a.eval(self.x),
                exact: true,
            },
            a.gradient(self.dim()),
        )
    }

    /// `sin`/`cos` of an affine argument. Exact only when the argument vanishes.
    fn trig(&self, a: &AffineForm, is_sin: bool, e: &Expr) -> Result<LocalData, CalculusError> {
        let arg = a.eval(self.x);
        let grad = a.gradient(self.dim());
        if arg.is_zero() {
            let (value, slope) = if is_sin {
                (Rational::zero(), Rational::one())
            } else {
                (Rational::one(), Rational::zero())
            };
            return Ok(self.smooth(
                PointValue { value, exact: true },
                rational::scale(&grad, &slope),
            ));
        }
        self.inexact(|| format!("{e} at a nonzero argument"))?;
        let t = rational::to_f64(&arg);
        let (value, slope) = if is_sin {
            (t.sin(), t.cos())
        } else {
            (t.cos(), -t.sin())
        };
        let slope = rational::from_f64(slope).unwrap_or_else(Rational::zero);
        Ok(self.smooth(
            PointValue {
                value: rational::from_f64(value).unwrap_or_else(Rational::zero),
                exact: false,
            },
            rational::scale(&grad, &slope),
        ))
    }

    fn walk(&self, e: &Expr) -> Result<LocalData, CalculusError> {
        let out = match e {
            Expr::Const(c) => LocalData {
                value: PointValue {
                    value: c.clone(),
                    exact: true,
                },
                qd: Quasidifferential::zero(self.dim()),
            },
            Expr::Var(i) => self.affine(&AffineForm::var(*i)),
            Expr::Affine(a) => self.affine(a),
            Expr::Sin(a) => self.trig(a, true, e)?,
            Expr::Cos(a) => self.trig(a, false, e)?,
            Expr::Pow(a, k) => {
                let base = a.eval(self.x);
                let k_r = Rational::from_integer((*k).into());
                let slope = k_r * num_traits::pow(base.clone(), (*k - 1) as usize);
                self.smooth(
                    PointValue {
                        value: num_traits::pow(base, *k as usize),
                        exact: true,
                    },
                    rational::scale(&a.gradient(self.dim()), &slope),
                )
            }
            Expr::Neg(inner) => {
                let d = self.walk(inner)?;
                LocalData {
                    value: PointValue {
                        value: -d.value.value,
                        exact: d.value.exact,
                    },
                    qd: d.qd.scale(&-Rational::one()),
                }
            }
            Expr::Smul(c, inner) => {
                let d = self.walk(inner)?;
                LocalData {
                    value: PointValue {
                        value: c * d.value.value,
                        exact: d.value.exact,
                    },
                    qd: d.qd.scale(c),
                }
            }
            Expr::Add(a, b) => {
                let (da, db) = (self.walk(a)?, self.walk(b)?);
                LocalData {
                    value: PointValue {
                        value: da.value.value + db.value.value,
                        exact: da.value.exact && db.value.exact,
                    },
                    qd: da.qd.add(&db.qd)?,
                }
            }
            Expr::Mul(a, b) => {
                let (da, db) = (self.walk(a)?, self.walk(b)?);
                if !(da.value.exact && db.value.exact) {
                    self.inexact(|| format!("factor values of {e}"))?;
                }
                let qd = db
                    .qd
                    .scale(&da.value.value)
                    .add(&da.qd.scale(&db.value.value))?;
                LocalData {
                    value: PointValue {
                        value: &da.value.value * &db.value.value,
                        exact: da.value.exact && db.value.exact,
                    },
                    qd,
                }
            }
            Expr::Abs(inner) => {
                let d = self.walk(inner)?;
                let neg = LocalData {
                    value: PointValue {
                        value: -d.value.value.clone(),
                        exact: d.value.exact,
                    },
                    qd: d.qd.scale(&-Rational::one()).normalized(),
                };
                self.extreme(vec![d, neg], true, e)?
            }
            Expr::Max(args) | Expr::Min(args) => {
                let parts = args
                    .iter()
                    .map(|a| self.walk(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.extreme(parts, matches!(e, Expr::Max(_)), e)?
            }
        };
        Ok(LocalData {
            value: out.value,
            qd: out.qd.normalized(),
        })
    }

    fn active(&self, parts: &[LocalData], take_max: bool, e: &Expr) -> Result<Vec<usize>, CalculusError> {
        let all_exact = parts.iter().all(|p| p.value.exact);
        if !all_exact {
            self.inexact(|| format!("active pieces of {e}"))?;
            let vals: Vec<f64> = parts.iter().map(|p| rational::to_f64(&p.value.value)).collect();
            let best = if take_max {
                vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            return Ok((0..parts.len())
                .filter(|&k| (vals[k] - best).abs() <= LENIENT_TOL * (1.0 + best.abs()))
                .collect());
        }
        let best = parts
            .iter()
            .map(|p| &p.value.value)
            .reduce(|a, b| if (b > a) == take_max { b } else { a })
            .expect("nonempty");
        Ok((0..parts.len())
            .filter(|&k| parts[k].value.value == *best)
            .collect())
    }

    /// Max rule: `sup = sum sup_i`, `sub = co_k(sub_k - sum_{i != k} sup_i)`.
    /// Min rule is the mirror image with the roles of the parts swapped.
    fn extreme(&self, parts: Vec<LocalData>, take_max: bool, e: &Expr) -> Result<LocalData, CalculusError> {
        let act = self.active(&parts, take_max, e)?;
        let value = {
            let k = act[0];
            PointValue {
                value: parts[k].value.value.clone(),
                exact: parts.iter().all(|p| p.value.exact),
            }
        };
        if act.len() == 1 {
            return Ok(LocalData {
                value,
                qd: parts[act[0]].qd.clone(),
            });
        }
        let own = |q: &Quasidifferential| if take_max { q.sub.clone() } else { q.sup.clone() };
        let other = |q: &Quasidifferential| if take_max { q.sup.clone() } else { q.sub.clone() };
        let mut summed = Polytope::origin(self.dim());
        for &k in &act {
            summed = summed.minkowski_sum(&other(&parts[k].qd))?;
        }
        let mut pieces = Vec::with_capacity(act.len());
        for &k in &act {
            let mut piece = own(&parts[k].qd);
            for &i in &act {
                if i != k {
                    piece = piece.minkowski_sum(&other(&parts[i].qd).negate())?;
                }
            }
            pieces.push(piece);
        }
        let hull = Polytope::hull_of_union(&pieces)?;
        let qd = if take_max {
            Quasidifferential { sub: hull, sup: summed }
        } else {
            Quasidifferential { sub: summed, sup: hull }
        };
        Ok(LocalData { value, qd })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ivec};

    fn poly(points: &[&[i64]]) -> Polytope {
        Polytope::convex_hull(points.iter().map(|p| ivec(p)).collect()).unwrap()
    }

    fn qd_at_origin(src: &str, n: usize) -> Quasidifferential {
        quasidiff(&Expr::parse(src).unwrap(), &ivec(&vec![0; n])).unwrap()
    }

    #[test]
    fn abs_minus_linear() {
        let q = qd_at_origin("abs(x1) - x2", 2);
        assert_eq!(q.sub, poly(&[&[1, -1], &[-1, -1]]));
        assert_eq!(q.sup, poly(&[&[0, 0]]));
    }

    #[test]
    fn difference_of_abs_sines() {
        let q = qd_at_origin("abs(sin(x1)) - abs(sin(x2))", 2);
        assert_eq!(q.sub, poly(&[&[1, 0], &[-1, 0]]));
        assert_eq!(q.sup, poly(&[&[0, 1], &[0, -1]]));
        let square = poly(&[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]]);
        assert_eq!(q.qd_sum_set().unwrap(), square);
    }

    #[test]
    fn max_plus_min() {
        let q = qd_at_origin("max(2*x1, 2*x2) + min(0, -x1 - x2)", 2);
        assert_eq!(q.sub, poly(&[&[2, 0], &[0, 2]]));
        assert_eq!(q.sup, poly(&[&[0, 0], &[-1, -1]]));
    }

    #[test]
    fn min_of_line_and_cube() {
        let q = qd_at_origin("min(x1, pow(x1, 3))", 1);
        assert_eq!(q.sub, poly(&[&[0]]));
        assert_eq!(q.sup, poly(&[&[0], &[1]]));
    }

    #[test]
    fn sine_sum_with_min() {
        let q = qd_at_origin("max(sin(x1) + sin(x2), 0) + min(-x1 - x2, x1)", 2);
        assert_eq!(q.sub, poly(&[&[1, 1], &[0, 0]]));
        assert_eq!(q.sup, poly(&[&[-1, -1], &[1, 0]]));
        // f'(0, v) = max{v1 + v2, 0} + min{-v1 - v2, v1}
        for v in [[1, 1], [2, -1], [-3, 1], [0, 5]] {
            let (a, b) = (v[0], v[1]);
            let want = (a + b).max(0) + (-a - b).min(a);
            assert_eq!(q.dir_deriv(&ivec(&v)).unwrap(), int(want), "{v:?}");
        }
    }

    #[test]
    fn max_of_abs_plus_min() {
        let q = qd_at_origin("max(abs(x2), abs(x2) - 2*x1) + min(x1, 2*x2)", 2);
        assert_eq!(q.sub, poly(&[&[0, 1], &[0, -1], &[-2, 1], &[-2, -1]]));
        assert_eq!(q.sup, poly(&[&[1, 0], &[0, 2]]));
        assert!(!q.sub.max_face_singleton(&ivec(&[1, 0])).unwrap());
        assert_eq!(q.dir_deriv(&ivec(&[1, 0])).unwrap(), int(0));
    }

    #[test]
    fn directional_derivative_samples() {
        let q = qd_at_origin("abs(x1) - x2", 2);
        assert_eq!(q.dir_deriv(&ivec(&[-1, 1])).unwrap(), int(0));
        assert_eq!(q.dir_deriv(&ivec(&[0, 0])).unwrap(), int(0));
    }

    #[test]
    fn shift_preserves_derivative() {
        let q = qd_at_origin("abs(x1) - x2", 2);
        let c = poly(&[&[0, 0], &[0, 1]]);
        let s = q.shift_pair(&c).unwrap();
        assert_eq!(s.sup, poly(&[&[0, 0], &[0, -1]]));
        for v in [[1, 0], [-1, 3], [2, -5], [0, -1]] {
            assert_eq!(s.dir_deriv(&ivec(&v)).unwrap(), q.dir_deriv(&ivec(&v)).unwrap());
        }
        let t = q.shift_pair(&poly(&[&[3, 4]])).unwrap();
        assert_eq!(t.sub, q.sub.translate(&ivec(&[3, 4])).unwrap());
    }

    #[test]
    fn products_use_sign_split() {
        // x1 * |x2| at (-2, 0): value 0, f'(v) = -2|v2|
        let e = Expr::parse("x1 * abs(x2)").unwrap();
        let q = quasidiff(&e, &ivec(&[-2, 0])).unwrap();
        for v in [[0, 1], [3, -2], [1, 0]] {
            assert_eq!(q.dir_deriv(&ivec(&v)).unwrap(), int(-2 * v[1].abs()));
        }
    }

    #[test]
    fn constant_has_trivial_pair() {
        let q = qd_at_origin("7", 3);
        assert_eq!(q, Quasidifferential::zero(3));
    }

    #[test]
    fn strict_mode_rejects_transcendental_activity() {
        let e = Expr::parse("max(sin(x1), 0)").unwrap();
        let err = quasidiff(&e, &ivec(&[1])).unwrap_err();
        assert!(matches!(err, CalculusError::Exactness { .. }));
        let lenient = local_data(&e, &ivec(&[1]), Mode::Lenient).unwrap();
        assert!(!lenient.value.exact);
        let g = rational::to_f64(&lenient.qd.sub.vertices()[0][0]);
        assert!((g - 1f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn dimension_is_checked() {
        let e = Expr::parse("x3").unwrap();
        assert!(matches!(
            quasidiff(&e, &ivec(&[0, 0])),
            Err(CalculusError::Dimension { var: 3, dim: 2 })
        ));
    }
}
