//! The 2x2 linear block `A1 = [[lambda, 1], [mu2, lambda]]` and closed forms
//! for its iterates.
//!
//! The block has eigenvalues `lambda +- sqrt(mu2)`, so the sign of `mu2`
//! switches it between a hyperbolic node (`mu2 > 0`), a Jordan-type parabolic
//! point (`mu2 = 0`), and a focus (`mu2 < 0`). Its k-th power factors as
//!
//! ```text
//! A1^k = (lambda^2 - mu2)^(k/2) * [[C_k, S_k], [mu2 * S_k, C_k]]
//! ```
//!
//! with branch-dependent entry functions driven by a phase `phi`:
//!
//! * `mu2 > 0`: `phi = artanh(sqrt(mu2)/lambda)`, `C_k = cosh(k phi)`,
//!   `S_k = sinh(k phi)/sqrt(mu2)`;
//! * `mu2 = 0`: `phi = 0`, `C_k = 1`, `S_k = k/lambda`;
//! * `mu2 < 0`: `phi = -atan2(sqrt(-mu2), lambda)`, `C_k = cos(k phi)`,
//!   `S_k = -sin(k phi)/sqrt(-mu2)`.
//!
//! The rotation branch (`mu2 < 0`) of the closed form is exact for every
//! `lambda` (the `atan2` picks the right quadrant). The hyperbolic and
//! parabolic branches assume `lambda > 0`: for `lambda < 0` the prefactor
//! `(lambda^2 - mu2)^(k/2)` equals `|lambda|^k`-type growth and cannot carry
//! the alternating sign of `lambda^k`, so the closed form differs from the
//! true power by `(-1)^k` there (see `hyperbolic_closed_form_sign_gap`).
//! [`BelyakovBlock::a1_pow`] therefore computes powers by an exact two-term
//! recurrence that is valid for all signs, and the closed form is kept as an
//! independently checkable formula.

use nalgebra::Matrix2;

use crate::error::{Error, Result};

/// Hard cap on iterate counts; beyond this the powers over- or underflow
/// `f64` range for every parameter set this crate accepts.
pub const MAX_ITERATE: u32 = 10_000;

/// Which closed-form branch of the entry functions applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseBranch {
    /// `mu2 > 0`: real distinct eigenvalues, hyperbolic entry functions.
    Hyperbolic,
    /// `mu2 = 0`: double eigenvalue, polynomial entry functions.
    Parabolic,
    /// `mu2 < 0`: complex pair, trigonometric entry functions.
    Elliptic,
}

/// Phase value together with its branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub value: f64,
    pub branch: PhaseBranch,
}

/// The linear block `[[lambda, 1], [mu2, lambda]]`.
///
/// The block itself is a plain piece of linear algebra and accepts any finite
/// parameters; the contraction requirement (spectral radius strictly below 1)
/// belongs to the local maps that iterate it and is enforced there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BelyakovBlock {
    lambda: f64,
    mu2: f64,
}

impl BelyakovBlock {
    pub fn new(lambda: f64, mu2: f64) -> Result<Self> {
        if !lambda.is_finite() || !mu2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda/mu2",
                value: f64::NAN,
                reason: "block parameters must be finite",
            });
        }
        Ok(BelyakovBlock { lambda, mu2 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// Spectral radius: `|lambda| + sqrt(mu2)` for `mu2 >= 0` (real pair),
    /// `sqrt(lambda^2 - mu2)` for `mu2 < 0` (complex pair).
    pub fn spectral_radius(&self) -> f64 {
        if self.mu2 >= 0.0 {
            self.lambda.abs() + self.mu2.sqrt()
        } else {
            (self.lambda * self.lambda - self.mu2).sqrt()
        }
    }

    /// The block as a matrix.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.lambda, 1.0, self.mu2, self.lambda)
    }

    /// `(lambda^2 - mu2)^(k/2)`, the prefactor of the closed form.
    pub fn scale_pow(&self, k: u32) -> f64 {
        (self.lambda * self.lambda - self.mu2).sqrt().powi(k as i32)
    }

    /// Rotation/expansion phase of the closed form.
    ///
    /// Errors in the real-eigenvalue regime `0 < lambda^2 <= mu2` (which
    /// includes `lambda = 0, mu2 > 0`) where no finite phase exists.
    pub fn phase(&self) -> Result<Phase> {
        let l2 = self.lambda * self.lambda;
        if self.mu2 > 0.0 {
            if self.mu2 >= l2 {
                return Err(Error::SaddleRegime {
                    mu2: self.mu2,
                    lambda_sq: l2,
                });
            }
            Ok(Phase {
                value: (self.mu2.sqrt() / self.lambda).atanh(),
                branch: PhaseBranch::Hyperbolic,
            })
        } else if self.mu2 == 0.0 {
            Ok(Phase {
                value: 0.0,
                branch: PhaseBranch::Parabolic,
            })
        } else {
            Ok(Phase {
                value: -(-self.mu2).sqrt().atan2(self.lambda),
                branch: PhaseBranch::Elliptic,
            })
        }
    }

    /// Entry functions `(C_k, S_k)` of the closed form, evaluated literally
    /// per branch.
    pub fn ck_sk(&self, k: u32) -> Result<(f64, f64)> {
        check_iterate(k)?;
        let kf = f64::from(k);
        let phase = self.phase()?;
        match phase.branch {
            PhaseBranch::Hyperbolic => {
                let arg = kf * phase.value;
                Ok((arg.cosh(), arg.sinh() / self.mu2.sqrt()))
            }
            PhaseBranch::Parabolic => {
                if self.lambda == 0.0 {
                    return Err(Error::DegenerateBlock);
                }
                Ok((1.0, kf / self.lambda))
            }
            PhaseBranch::Elliptic => {
                let arg = kf * phase.value;
                Ok((arg.cos(), -arg.sin() / (-self.mu2).sqrt()))
            }
        }
    }

    /// `C_k` alone; see [`BelyakovBlock::ck_sk`].
    pub fn ck(&self, k: u32) -> Result<f64> {
        Ok(self.ck_sk(k)?.0)
    }

    /// `S_k` alone; see [`BelyakovBlock::ck_sk`].
    pub fn sk(&self, k: u32) -> Result<f64> {
        Ok(self.ck_sk(k)?.1)
    }

    /// Reconstruct `A1^k` from the closed form (prefactor times entry
    /// functions). Exact on the rotation branch for every `lambda`; on the
    /// other branches only for `lambda > 0`.
    pub fn a1_pow_closed_form(&self, k: u32) -> Result<Matrix2<f64>> {
        let (c, s) = self.ck_sk(k)?;
        let scale = self.scale_pow(k);
        Ok(Matrix2::new(c, s, self.mu2 * s, c) * scale)
    }

    /// `A1^k` by the exact coupled recurrence
    /// `P_{n+1} = lambda P_n + mu2 Q_n`, `Q_{n+1} = P_n + lambda Q_n`
    /// with `A1^k = [[P_k, Q_k], [mu2 Q_k, P_k]]`.
    ///
    /// Valid for all parameter signs, including the nilpotent block
    /// `lambda = mu2 = 0`. One multiply-add of rounding per step.
    pub fn a1_pow(&self, k: u32) -> Result<Matrix2<f64>> {
        check_iterate(k)?;
        let (mut p, mut q) = (1.0f64, 0.0f64);
        for _ in 0..k {
            let pn = self.lambda.mul_add(p, self.mu2 * q);
            let qn = self.lambda.mul_add(q, p);
            p = pn;
            q = qn;
        }
        Ok(Matrix2::new(p, q, self.mu2 * q, p))
    }

    /// `A1^k` by naive repeated matrix multiplication. Reference
    /// implementation for tests and benchmarks.
    pub fn a1_pow_naive(&self, k: u32) -> Result<Matrix2<f64>> {
        check_iterate(k)?;
        let m = self.matrix();
        let mut acc = Matrix2::identity();
        for _ in 0..k {
            acc = m * acc;
        }
        Ok(acc)
    }
}

fn check_iterate(k: u32) -> Result<()> {
    if k > MAX_ITERATE {
        Err(Error::IterateCountTooLarge { k, max: MAX_ITERATE })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn block(lambda: f64, mu2: f64) -> BelyakovBlock {
        BelyakovBlock::new(lambda, mu2).unwrap()
    }

    #[test]
    fn power_zero_and_one_are_exact() {
        let b = block(0.7, -0.3);
        assert_eq!(b.a1_pow(0).unwrap(), Matrix2::identity());
        assert_eq!(b.a1_pow(1).unwrap(), b.matrix());
    }

    #[test]
    fn recurrence_matches_naive_powers_on_a_grid() {
        let lambdas = [-0.9, -0.5, 0.0, 0.3, 0.7, 0.95];
        let mu2s = [-0.9, -0.3, -1e-4, 0.0, 1e-4, 0.04];
        for &l in &lambdas {
            for &m in &mu2s {
                let b = BelyakovBlock::new(l, m).unwrap();
                for k in [0u32, 1, 2, 3, 5, 8, 13, 21, 34, 50] {
                    let exact = b.a1_pow(k).unwrap();
                    let naive = b.a1_pow_naive(k).unwrap();
                    let scale = exact.amax().max(1e-30);
                    assert!(
                        (exact - naive).amax() <= 1e-9 * scale.max(1.0),
                        "mismatch at lambda={l}, mu2={m}, k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn parabolic_entries_match_polynomial_form() {
        // lambda = 0.5, mu2 = 0, k = 4: C_4 = 1, S_4 = 8, and
        // A1^4 = 0.5^4 * [[1, 8], [0, 1]].
        let b = block(0.5, 0.0);
        let (c, s) = b.ck_sk(4).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(s, 8.0);
        let p = b.a1_pow(4).unwrap();
        let expect = Matrix2::new(0.0625, 0.5, 0.0, 0.0625);
        assert!((p - expect).amax() < 1e-15);
    }

    #[test]
    fn elliptic_quarter_turns_close_up() {
        // lambda = 0, mu2 = -1 rotates by a quarter turn each step, so four
        // steps give the identity: C_4 = 1, S_4 = 0.
        let b = block(0.0, -1.0);
        let (c, s) = b.ck_sk(4).unwrap();
        assert_relative_eq!(c, 1.0, epsilon = 1e-9);
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn elliptic_closed_form_is_exact_for_negative_lambda() {
        let b = block(-0.5, -0.3);
        for k in [1u32, 2, 3, 7, 12] {
            let exact = b.a1_pow(k).unwrap();
            let closed = b.a1_pow_closed_form(k).unwrap();
            assert!((exact - closed).amax() <= 1e-12 * exact.amax().max(1.0));
        }
    }

    #[test]
    fn hyperbolic_closed_form_sign_gap() {
        // For lambda < 0 on the hyperbolic branch the closed form loses the
        // alternating sign: at odd k it equals minus the true power.
        let b = block(-0.5, 0.04);
        let exact = b.a1_pow(3).unwrap();
        let closed = b.a1_pow_closed_form(3).unwrap();
        assert!((closed + exact).amax() < 1e-12);
    }

    #[test]
    fn entries_are_continuous_across_the_branch_boundary() {
        // The matrix entries (not the raw entry functions, whose
        // normalization differs per branch) must match across mu2 = 0 to the
        // size of the perturbation.
        let eps = 1e-8;
        let plus = block(0.6, eps).a1_pow(12).unwrap();
        let minus = block(0.6, -eps).a1_pow(12).unwrap();
        let at_zero = block(0.6, 0.0).a1_pow(12).unwrap();
        let d = plus - minus;
        assert!(d[(0, 0)].abs() <= 1e-6);
        assert!(d[(1, 1)].abs() <= 1e-6);
        assert!(d[(1, 0)].abs() <= 1e-6);
        assert!(d[(0, 1)].abs() <= 1e-4);
        assert!((plus - at_zero).amax() <= 1e-4);
    }

    #[test]
    fn saddle_regime_is_rejected() {
        let b = block(0.1, 0.04); // mu2 > lambda^2
        assert!(matches!(b.phase(), Err(Error::SaddleRegime { .. })));
        assert!(b.ck_sk(3).is_err());
        // Powers still work fine there.
        assert!(b.a1_pow(3).is_ok());
    }

    #[test]
    fn nilpotent_block_powers_but_has_no_entry_functions() {
        let b = block(0.0, 0.0);
        assert!(matches!(b.ck_sk(2), Err(Error::DegenerateBlock)));
        let p2 = b.a1_pow(2).unwrap();
        assert_eq!(p2, Matrix2::zeros());
    }

    #[test]
    fn iterate_cap_is_enforced() {
        let b = block(0.5, -0.1);
        assert!(matches!(
            b.a1_pow(MAX_ITERATE + 1),
            Err(Error::IterateCountTooLarge { .. })
        ));
    }

    #[test]
    fn spectral_radius_covers_both_eigenvalue_regimes() {
        assert_eq!(block(1.0, 0.0).spectral_radius(), 1.0);
        assert_eq!(block(0.7, 0.09).spectral_radius(), 1.0); // 0.7 + 0.3
        assert_eq!(block(0.5, -0.75).spectral_radius(), 1.0); // sqrt(0.25 + 0.75)
        assert!(block(0.5, -0.7499).spectral_radius() < 1.0);
        assert!(block(0.9, 0.243).spectral_radius() > 1.0);
        assert!(BelyakovBlock::new(f64::NAN, 0.0).is_err());
    }
}
