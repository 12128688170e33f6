//! The three-dimensional Henon-like map
//!
//! ```text
//! (x, y, z) -> (y, z, m1 + b x + m2 y - z^2)
//! ```
//!
//! with constant Jacobian determinant `b`, its inverse, fixed points,
//! multipliers, and the inverse problem of placing a fixed point with a
//! prescribed multiplier set. Also carries the planar limit map
//! `(u, v) -> (v, m1 + m2 u - v^2)` that the volume-collapsing regime of the
//! rescaling produces.

use nalgebra::{Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Dd;

/// Parameters `(m1, m2, b)` of the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonParams {
    pub m1: f64,
    pub m2: f64,
    pub b: f64,
}

impl HenonParams {
    pub fn new(m1: f64, m2: f64, b: f64) -> Self {
        HenonParams { m1, m2, b }
    }

    /// One forward step.
    #[inline]
    pub fn step(&self, s: Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            s.y,
            s.z,
            self.m1 + self.b * s.x + self.m2 * s.y - s.z * s.z,
        )
    }

    /// One backward step; requires `b != 0`.
    #[inline]
    pub fn step_back(&self, s: Vector3<f64>) -> Result<Vector3<f64>> {
        if self.b == 0.0 {
            return Err(Error::NonInvertible);
        }
        Ok(Vector3::new(
            (s.z - self.m1 - self.m2 * s.x + s.y * s.y) / self.b,
            s.x,
            s.y,
        ))
    }

    /// Exact Jacobian at a point. Its determinant is `b` everywhere.
    #[inline]
    pub fn jacobian(&self, s: Vector3<f64>) -> Matrix3<f64> {
        Matrix3::new(
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            self.b, self.m2, -2.0 * s.z,
        )
    }

    /// Fixed points. They lie on the diagonal `x = y = z = t` with
    /// `t^2 + (1 - b - m2) t - m1 = 0`; none exist when the discriminant is
    /// negative. Sorted by `t` ascending.
    pub fn fixed_points(&self) -> Vec<FixedPoint> {
        let p = 1.0 - self.b - self.m2;
        let disc = p * p + 4.0 * self.m1;
        if disc < 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        let mut ts = vec![(-p - sq) / 2.0, (-p + sq) / 2.0];
        if sq == 0.0 {
            ts.truncate(1);
        }
        ts.into_iter()
            .map(|t| {
                let point = Vector3::new(t, t, t);
                FixedPoint {
                    point,
                    multipliers: self.multipliers_at(point),
                }
            })
            .collect()
    }

    /// Multipliers (eigenvalues of the Jacobian) at a point, sorted by
    /// modulus descending.
    ///
    /// The generic eigensolve splits a repeated eigenvalue by about
    /// `sqrt(eps)`, so near-real eigenvalues are polished against the
    /// characteristic polynomial `rho^3 + 2 z rho^2 - m2 rho - b` in
    /// extended precision. A polished value is kept only when it stays
    /// within the splitting scale of its seed, which leaves genuinely
    /// complex pairs with a small imaginary part untouched.
    pub fn multipliers_at(&self, s: Vector3<f64>) -> [Complex64; 3] {
        let eig = self.jacobian(s).complex_eigenvalues();
        let mut m = [eig[0], eig[1], eig[2]];
        let (a2, a1, a0) = (2.0 * s.z, -self.m2, -self.b);
        for ev in m.iter_mut() {
            let scale = 1.0 + ev.norm();
            if ev.im.abs() > 1e-6 * scale {
                continue;
            }
            let root = polish_real_root(a2, a1, a0, ev.re);
            if (root - ev.re).abs() <= 16.0 * (ev.im.abs() + 1e-7 * scale) {
                *ev = Complex64::new(root, 0.0);
            }
        }
        m.sort_by(|a, b| {
            b.norm()
                .partial_cmp(&a.norm())
                .unwrap()
                .then(b.re.partial_cmp(&a.re).unwrap())
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
        m
    }

    /// Inverse problem: parameters for which a fixed point carries the given
    /// multiplier set. By the elementary symmetric functions of the
    /// characteristic polynomial `rho^3 + 2 t rho^2 - m2 rho - b`:
    ///
    /// ```text
    /// b  = rho1 rho2 rho3
    /// m2 = -(rho1 rho2 + rho1 rho3 + rho2 rho3)
    /// t  = -(rho1 + rho2 + rho3) / 2
    /// m1 = t^2 + (1 - b - m2) t
    /// ```
    ///
    /// The set must be closed under conjugation (real symmetric functions).
    pub fn from_multipliers(rho: &[Complex64; 3]) -> Result<HenonParams> {
        let e1 = rho[0] + rho[1] + rho[2];
        let e2 = rho[0] * rho[1] + rho[0] * rho[2] + rho[1] * rho[2];
        let e3 = rho[0] * rho[1] * rho[2];
        let imag = e1.im.abs().max(e2.im.abs()).max(e3.im.abs());
        let scale = 1.0 + e1.norm().max(e2.norm()).max(e3.norm());
        if imag > 1e-10 * scale {
            return Err(Error::InvalidParameter {
                name: "multipliers",
                value: imag,
                reason: "multiplier set must be closed under conjugation",
            });
        }
        let b = e3.re;
        let m2 = -e2.re;
        let t = -e1.re / 2.0;
        let m1 = t * t + (1.0 - b - m2) * t;
        Ok(HenonParams { m1, m2, b })
    }
}

/// Parameters at which some fixed point carries exactly the given
/// multiplier set.
///
/// This is [`HenonParams::from_multipliers`] under its task-level name. The
/// Vieta inversion is algebraically exact, so no iterative polish is needed:
/// the only residual left is the roundoff of the four arithmetic
/// expressions, orders of magnitude below the 1e-10 documented tolerance.
pub fn find_degenerate_point(target: &[Complex64; 3]) -> Result<HenonParams> {
    HenonParams::from_multipliers(target)
}

/// Refine a real root of `x^3 + a2 x^2 + a1 x + a0` by Newton's method
/// applied to `f / f'`, which keeps quadratic convergence at multiple
/// roots. Double-double evaluation pushes the noise floor far enough down
/// that even an ill-conditioned double root comes back at f64 accuracy.
fn polish_real_root(a2: f64, a1: f64, a0: f64, seed: f64) -> f64 {
    let (a2, a1, a0) = (Dd::new(a2), Dd::new(a1), Dd::new(a0));
    let mut x = Dd::new(seed);
    for _ in 0..12 {
        let f = ((x + a2) * x + a1) * x + a0;
        let fp = (3.0 * x + 2.0 * a2) * x + a1;
        let fpp = 6.0 * x + 2.0 * a2;
        let denom = fp * fp - f * fpp;
        if denom.value().abs() < f64::MIN_POSITIVE {
            break;
        }
        let step = f * fp / denom;
        x = x - step;
        if step.value().abs() <= 1e-28 * (1.0 + x.value().abs()) {
            break;
        }
    }
    x.value()
}

/// A fixed point with its multipliers.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub point: Vector3<f64>,
    pub multipliers: [Complex64; 3],
}

impl FixedPoint {
    /// Number of multipliers strictly outside the unit circle.
    pub fn unstable_count(&self) -> usize {
        self.multipliers.iter().filter(|m| m.norm() > 1.0).count()
    }

    /// Saddle with exactly one expanding direction.
    pub fn is_saddle_index_1(&self) -> bool {
        self.unstable_count() == 1 && self.multipliers.iter().all(|m| (m.norm() - 1.0).abs() > 1e-9)
    }
}

/// One step of the planar limit map `(u, v) -> (v, m1 + m2 u - v^2)`.
#[inline]
pub fn henon2d_step(m1: f64, m2: f64, s: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(s.y, m1 + m2 * s.x - s.y * s.y)
}
