//! Small numerical building blocks shared across the crate.
//!
//! The centerpiece is [`Dd`], a double-double ("compensated") scalar carrying
//! roughly 31 significant decimal digits. The centered return-map evaluators
//! fold constants that are differences of exponentially amplified terms
//! (powers of the expansion rate times section offsets); folding those chains
//! in plain `f64` loses all significant digits long before the interesting
//! iterate counts, so the folding is done in `Dd` and only the final values
//! are rounded back to `f64`.
//!
//! The rest of the module is ordinary glue: finite-difference Jacobians,
//! a bracketed root finder, and a small damped Newton iteration.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Double-double scalar
// ---------------------------------------------------------------------------

/// Unevaluated sum `hi + lo` of two doubles with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Error-free sum: returns `(s, e)` with `s = fl(a + b)` and `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Like [`two_sum`] but requires `|a| >= |b|`.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Error-free product via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    /// Round back to a single double.
    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Square root: double seed refined by one Newton step, which already
    /// saturates double-double accuracy.
    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        let seed = Dd::new(self.hi.sqrt());
        (seed + self / seed) * Dd::new(0.5)
    }

    /// Integer power by binary exponentiation (negative exponents via the
    /// reciprocal of the positive power).
    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { Dd::ONE / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        Dd::renorm(p1, p2 + (self.hi * rhs.lo + self.lo * rhs.hi))
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::new(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::new(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::renorm(s, e) + Dd::new(q3)
    }
}

macro_rules! dd_f64_ops {
    ($($trait:ident, $method:ident);* $(;)?) => {$(
        impl std::ops::$trait<f64> for Dd {
            type Output = Dd;
            #[inline]
            fn $method(self, rhs: f64) -> Dd {
                std::ops::$trait::$method(self, Dd::new(rhs))
            }
        }
        impl std::ops::$trait<Dd> for f64 {
            type Output = Dd;
            #[inline]
            fn $method(self, rhs: Dd) -> Dd {
                std::ops::$trait::$method(Dd::new(self), rhs)
            }
        }
    )*};
}
dd_f64_ops!(Add, add; Sub, sub; Mul, mul; Div, div);

/// 2-vector of double-doubles.
pub type DdVec2 = [Dd; 2];
/// Row-major 2x2 matrix of double-doubles.
pub type DdMat2 = [[Dd; 2]; 2];

/// Matrix-vector product in double-double arithmetic.
pub fn dd_mat2_vec(m: &DdMat2, v: &DdVec2) -> DdVec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Matrix-matrix product in double-double arithmetic.
pub fn dd_mat2_mat2(a: &DdMat2, b: &DdMat2) -> DdMat2 {
    let mut out = [[Dd::ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Dot product of two double-double 2-vectors.
pub fn dd_dot2(a: &DdVec2, b: &DdVec2) -> Dd {
    a[0] * b[0] + a[1] * b[1]
}

/// Solve `m x = rhs` for a 2x2 double-double system by Cramer's rule.
pub fn dd_solve2(m: &DdMat2, rhs: &DdVec2) -> Result<DdVec2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.value() == 0.0 {
        return Err(Error::SolveFailed("singular 2x2 system".into()));
    }
    Ok([
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det,
    ])
}

/// Spacing between `x` and the next representable double of the same scale.
/// Used for honest "this is the best placement f64 allows" floors.
pub fn ulp_of(x: f64) -> f64 {
    let ax = x.abs().max(f64::MIN_POSITIVE);
    ax * f64::EPSILON
}

// ---------------------------------------------------------------------------
// Finite differences and root finding
// ---------------------------------------------------------------------------

/// Central finite-difference Jacobian of a fallible 3-map.
///
/// The per-component step is `h * max(1, |x_i|)`. Central differences are
/// exact (up to rounding) for the quadratic maps this crate composes.
pub fn fd_jacobian3<F>(mut f: F, x: Vector3<f64>, h: f64) -> Result<Matrix3<f64>>
where
    F: FnMut(Vector3<f64>) -> Result<Vector3<f64>>,
{
    let mut j = Matrix3::zeros();
    for i in 0..3 {
        let hi = h * x[i].abs().max(1.0);
        let mut xp = x;
        xp[i] += hi;
        let mut xm = x;
        xm[i] -= hi;
        let col = (f(xp)? - f(xm)?) / (2.0 * hi);
        j.set_column(i, &col);
    }
    Ok(j)
}

/// Infallible-closure convenience wrapper around [`fd_jacobian3`].
pub fn fd_jacobian3_inf<F>(mut f: F, x: Vector3<f64>, h: f64) -> Matrix3<f64>
where
    F: FnMut(Vector3<f64>) -> Vector3<f64>,
{
    fd_jacobian3(|v| Ok(f(v)), x, h).expect("infallible closure")
}

/// Bracketed root finding by the Illinois variant of regula falsi.
///
/// Requires `f(a)` and `f(b)` to have opposite signs. Converges to roughly
/// machine precision in the abscissa; `max_iter` is a safety stop.
pub fn illinois<F>(mut f: F, mut a: f64, mut b: f64, max_iter: u32) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::SolveFailed(format!(
            "no sign change on [{a:e}, {b:e}] (f = {fa:e}, {fb:e})"
        )));
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let c = (fa * b - fb * a) / (fa - fb);
        if !c.is_finite() {
            break;
        }
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() <= 4.0 * ulp_of(c) {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Damped Newton iteration for a 3-dimensional root with FD Jacobian.
pub fn newton3<F>(mut f: F, seed: Vector3<f64>, tol: f64, max_iter: u32) -> Result<Vector3<f64>>
where
    F: FnMut(Vector3<f64>) -> Result<Vector3<f64>>,
{
    let mut x = seed;
    let mut r = f(x)?;
    for _ in 0..max_iter {
        if r.amax() <= tol {
            return Ok(x);
        }
        let j = fd_jacobian3(&mut f, x, 1e-7)?;
        let delta = j
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::SolveFailed("singular Jacobian in Newton iteration".into()))?;
        // Backtracking line search: accept the first step that reduces the
        // residual, halving up to 8 times.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand = x - lambda * delta;
            let rc = f(cand)?;
            if rc.amax() < r.amax() {
                x = cand;
                r = rc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Stagnated: either we are at the rounding floor (fine) or the
            // iteration genuinely cannot improve.
            if r.amax() <= tol.max(1e-12) {
                return Ok(x);
            }
            return Err(Error::SolveFailed(format!(
                "Newton stagnated at residual {:e}",
                r.amax()
            )));
        }
    }
    if r.amax() <= tol {
        Ok(x)
    } else {
        Err(Error::SolveFailed(format!(
            "Newton did not reach tolerance {tol:e}; residual {:e}",
            r.amax()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dd_add_keeps_cancelled_tail() {
        let x = Dd::new(1e16) + 1.0 - 1e16;
        assert_eq!(x.value(), 1.0);
    }

    #[test]
    fn dd_mul_and_powi_are_consistent() {
        let two = Dd::new(2.0);
        assert_eq!(two.powi(10).value(), 1024.0);
        let g = Dd::new(1.0) / Dd::new(49.0);
        let direct = (0..6).fold(Dd::ONE, |acc, _| acc * g);
        let pow = g.powi(6);
        assert_relative_eq!(direct.value(), pow.value(), max_relative = 1e-30);
        assert!((direct - pow).value().abs() <= 1e-36);
    }

    #[test]
    fn dd_div_round_trips() {
        let a = Dd::new(std::f64::consts::PI);
        let b = Dd::new(std::f64::consts::E);
        let q = a / b;
        let back = q * b;
        assert!((back - a).value().abs() < 1e-31);
    }

    #[test]
    fn dd_solve2_matches_hand_solution() {
        let m = [
            [Dd::new(2.0), Dd::new(1.0)],
            [Dd::new(1.0), Dd::new(3.0)],
        ];
        let rhs = [Dd::new(5.0), Dd::new(10.0)];
        let x = dd_solve2(&m, &rhs).unwrap();
        assert_relative_eq!(x[0].value(), 1.0, epsilon = 1e-30);
        assert_relative_eq!(x[1].value(), 3.0, epsilon = 1e-30);
    }

    #[test]
    fn fd_jacobian_is_exact_for_quadratics() {
        let f = |v: Vector3<f64>| {
            Ok(Vector3::new(
                v.y,
                v.z,
                0.5 + 0.7 * v.x + 0.85 * v.y - v.z * v.z,
            ))
        };
        let j = fd_jacobian3(f, Vector3::new(0.2, -0.1, 0.4), 1e-6).unwrap();
        let expect = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.7, 0.85, -0.8);
        assert!((j - expect).amax() < 1e-9);
    }

    #[test]
    fn illinois_finds_bracketed_root() {
        let r = illinois(|x| x * x - 2.0, 0.0, 2.0, 200).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn illinois_rejects_unbracketed_interval() {
        assert!(illinois(|x| x * x + 1.0, -1.0, 1.0, 100).is_err());
    }

    #[test]
    fn newton3_solves_smooth_system() {
        let f = |v: Vector3<f64>| {
            Ok(Vector3::new(
                v.x * v.x + v.y - 1.1,
                v.y + v.z,
                v.z - 0.25 * v.x,
            ))
        };
        let root = newton3(f, Vector3::new(0.5, 0.5, 0.0), 1e-13, 50).unwrap();
        let res = f(root).unwrap();
        assert!(res.amax() < 1e-12);
    }
}
