//! The model family: linearized local passages near one or two fixed points
//! composed with affine-quadratic global connection maps.
//!
//! Three cases are supported:
//!
//! * **I** — one saddle-focus point (2D contracting block, 1D expanding) and
//!   one global map `T1` whose third row is a quadratic tangency row;
//! * **IIa** — a saddle-focus and a genuine saddle; the connection
//!   `T12` (focus to saddle) is transversal, the return `T21` carries the
//!   tangency;
//! * **IIb** — same two points but the tangency sits in `T12` and `T21` is
//!   transversal.
//!
//! "Hooks" are bounded smooth perturbation slots standing in for the
//! higher-order remainders a genuine flow would add. With all hooks off the
//! local passages are exactly linear-diagonal and the global maps exactly
//! affine-quadratic, which makes every downstream construction exactly
//! solvable — the test oracles lean on this heavily.
//!
//! The three-component parameter `mu = (mu1, mu2, mu3)` moves the family:
//! `mu1` splits the tangency, `mu2` bends the contracting block between node
//! and focus, and `mu3` steers the volume-rate invariant. [`ModelFamily::at`]
//! realizes a family at a given `mu`; [`ModelFamily::mu3_functional`]
//! recovers the rate coordinate from a realized family.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::belyakov::BelyakovBlock;
use crate::error::{Error, Result};
use crate::kv::KvConfig;
use crate::numeric::fd_jacobian3_inf;

/// Tolerance below which a nondegeneracy quantity counts as violated.
pub const NONDEGENERACY_TOL: f64 = 1e-8;

const SOLVE_MAX_ITERS: u32 = 100;
const SOLVE_TOL: f64 = 1e-13;

// ---------------------------------------------------------------------------
// Hooks
// ---------------------------------------------------------------------------

/// A bounded smooth scalar function standing in for a remainder term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HookFn {
    /// Identically zero: the exactly solvable model.
    Off,
    /// Constant value (the crudest bounded perturbation).
    Constant(f64),
    /// `amplitude * sin(wavenumber * (sum of arguments))`: smooth, bounded by
    /// `|amplitude|`, with all derivatives bounded.
    Wave { amplitude: f64, wavenumber: f64 },
}

impl HookFn {
    pub fn eval(&self, args: &[f64]) -> f64 {
        match *self {
            HookFn::Off => 0.0,
            HookFn::Constant(v) => v,
            HookFn::Wave {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * args.iter().sum::<f64>()).sin(),
        }
    }

    /// Uniform bound on the value.
    pub fn sup(&self) -> f64 {
        match *self {
            HookFn::Off => 0.0,
            HookFn::Constant(v) => v.abs(),
            HookFn::Wave { amplitude, .. } => amplitude.abs(),
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, HookFn::Off)
    }

    /// Parse `"off"`, `"constant:AMP"`, or `"wave:AMP:WAVENUMBER"`.
    pub fn parse(spec: &str) -> Result<HookFn> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || Error::Config(format!("cannot parse hook spec `{spec}`"));
        match parts.as_slice() {
            ["off"] => Ok(HookFn::Off),
            ["constant", v] => Ok(HookFn::Constant(v.parse().map_err(|_| bad())?)),
            ["wave", a, w] => Ok(HookFn::Wave {
                amplitude: a.parse().map_err(|_| bad())?,
                wavenumber: w.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Remainder slots of the saddle-focus passage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusHooks {
    pub xi1: [HookFn; 2],
    pub xi2: HookFn,
}

impl FocusHooks {
    pub const OFF: FocusHooks = FocusHooks {
        xi1: [HookFn::Off, HookFn::Off],
        xi2: HookFn::Off,
    };

    pub fn all_off(&self) -> bool {
        self.xi1[0].is_off() && self.xi1[1].is_off() && self.xi2.is_off()
    }

    pub fn uniform(h: HookFn) -> Self {
        FocusHooks {
            xi1: [h, h],
            xi2: h,
        }
    }
}

/// Remainder slots of the saddle passage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleHooks {
    pub eta1: HookFn,
    pub eta2: HookFn,
    pub eta3: HookFn,
}

impl SaddleHooks {
    pub const OFF: SaddleHooks = SaddleHooks {
        eta1: HookFn::Off,
        eta2: HookFn::Off,
        eta3: HookFn::Off,
    };

    pub fn all_off(&self) -> bool {
        self.eta1.is_off() && self.eta2.is_off() && self.eta3.is_off()
    }

    pub fn uniform(h: HookFn) -> Self {
        SaddleHooks {
            eta1: h,
            eta2: h,
            eta3: h,
        }
    }
}

/// Higher-order slots of a global connection map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalHooks {
    pub h1: HookFn,
    pub h2: HookFn,
    pub h3: HookFn,
}

impl GlobalHooks {
    pub const OFF: GlobalHooks = GlobalHooks {
        h1: HookFn::Off,
        h2: HookFn::Off,
        h3: HookFn::Off,
    };

    pub fn all_off(&self) -> bool {
        self.h1.is_off() && self.h2.is_off() && self.h3.is_off()
    }

    pub fn uniform(h: HookFn) -> Self {
        GlobalHooks { h1: h, h2: h, h3: h }
    }
}

// ---------------------------------------------------------------------------
// Local passages
// ---------------------------------------------------------------------------

/// Saddle-focus local model: 2D contracting block `A1`, 1D expansion `gamma`.
///
/// The k-step passage in cross form (contracting coordinates at entry,
/// expanding coordinate at exit) is
///
/// ```text
/// x_k = A1^k x_0 + lambda_hat^k  xi1(x_0, y_k)
/// y_0 = gamma^-k y_k + gamma_hat^-k xi2(x_0, y_k)
/// ```
///
/// with `lambda_hat < 1` and `|gamma_hat| >= |gamma|`, so the remainders
/// decay at least as fast as the linear parts. At `k = 0` the passage is the
/// identity and the remainders vanish identically.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSaddleFocus {
    pub block: BelyakovBlock,
    pub gamma: f64,
    pub lambda_hat: f64,
    pub gamma_hat_factor: f64,
    pub hooks: FocusHooks,
}

impl LocalSaddleFocus {
    pub fn new(
        block: BelyakovBlock,
        gamma: f64,
        lambda_hat: f64,
        gamma_hat_factor: f64,
        hooks: FocusHooks,
    ) -> Result<Self> {
        if block.spectral_radius() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "mu2",
                value: block.mu2(),
                reason: "local block must contract: spectral radius < 1",
            });
        }
        if gamma.abs() <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "expansion rate must satisfy |gamma| > 1",
            });
        }
        if !(lambda_hat > 0.0 && lambda_hat < 1.0) {
            return Err(Error::InvalidParameter {
                name: "lambda_hat",
                value: lambda_hat,
                reason: "remainder rate must lie in (0, 1)",
            });
        }
        if gamma_hat_factor < 1.0 {
            return Err(Error::InvalidParameter {
                name: "gamma_hat_factor",
                value: gamma_hat_factor,
                reason: "must be >= 1 so the remainder decays at least as fast",
            });
        }
        Ok(LocalSaddleFocus {
            block,
            gamma,
            lambda_hat,
            gamma_hat_factor,
            hooks,
        })
    }

    pub fn gamma_hat(&self) -> f64 {
        self.gamma * self.gamma_hat_factor
    }

    /// Cross-form passage: entry contracting coordinates and exit expanding
    /// coordinate in, exit contracting coordinates and entry expanding
    /// coordinate out.
    pub fn iterate_cross(&self, k: u32, x0: Vector2<f64>, y_k: f64) -> Result<(Vector2<f64>, f64)> {
        if k == 0 {
            return Ok((x0, y_k));
        }
        let args = [x0.x, x0.y, y_k];
        let p = self.block.a1_pow(k)?;
        let lk = self.lambda_hat.powi(k as i32);
        let x_k = p * x0
            + Vector2::new(
                lk * self.hooks.xi1[0].eval(&args),
                lk * self.hooks.xi1[1].eval(&args),
            );
        let y_0 = self.gamma.powi(-(k as i32)) * y_k
            + self.gamma_hat().powi(-(k as i32)) * self.hooks.xi2.eval(&args);
        Ok((x_k, y_0))
    }

    /// Solve the cross form for the exit expanding coordinate `y_k` given
    /// the forward data `(x_0, y_0)`, by fixed-point iteration (closed form
    /// when hooks are off).
    pub fn solve_exit(&self, k: u32, x0: Vector2<f64>, y0: f64) -> Result<f64> {
        if k == 0 {
            return Ok(y0);
        }
        let gk = self.gamma.powi(k as i32);
        if self.hooks.xi2.is_off() {
            return Ok(gk * y0);
        }
        let ghk = self.gamma_hat().powi(-(k as i32));
        let mut y = gk * y0;
        let mut residual = f64::INFINITY;
        for _ in 0..SOLVE_MAX_ITERS {
            let next = gk * (y0 - ghk * self.hooks.xi2.eval(&[x0.x, x0.y, y]));
            residual = (next - y).abs();
            y = next;
            if residual <= SOLVE_TOL * y.abs().max(1.0) {
                return Ok(y);
            }
        }
        Err(Error::ImplicitSolveDiverged {
            iters: SOLVE_MAX_ITERS,
            residual,
        })
    }

    /// Forward passage: [`Self::solve_exit`] followed by the cross form.
    pub fn iterate_forward(
        &self,
        k: u32,
        x0: Vector2<f64>,
        y0: f64,
    ) -> Result<(Vector2<f64>, f64)> {
        if k == 0 {
            return Ok((x0, y0));
        }
        let y_k = self.solve_exit(k, x0, y0)?;
        let (x_k, _) = self.iterate_cross(k, x0, y_k)?;
        Ok((x_k, y_k))
    }
}

/// Saddle local model: two real contracting rates, 1D expansion.
///
/// Cross form of the j-step passage:
///
/// ```text
/// u1_j = nu1^j u1_0 + nu_hat^j eta1(u_0, v_j)
/// u2_j = nu2^j u2_0 + nu_hat^j eta2(u_0, v_j)
/// v_0  = gamma2^-j v_j + gamma2_hat^-j eta3(u_0, v_j)
/// ```
///
/// The `nu2^j u2_0` term is kept explicit (not folded into the remainder) so
/// that the hooks-off passage is exactly linear-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSaddle {
    pub nu1: f64,
    pub nu2: f64,
    pub gamma2: f64,
    pub nu_hat: f64,
    pub gamma2_hat_factor: f64,
    pub hooks: SaddleHooks,
}

impl LocalSaddle {
    pub fn new(
        nu1: f64,
        nu2: f64,
        gamma2: f64,
        nu_hat: f64,
        gamma2_hat_factor: f64,
        hooks: SaddleHooks,
    ) -> Result<Self> {
        if !(nu1.abs() < 1.0) || nu2.abs() > nu1.abs() {
            return Err(Error::InvalidParameter {
                name: "nu1/nu2",
                value: nu1,
                reason: "rates must satisfy |nu2| <= |nu1| < 1",
            });
        }
        if gamma2.abs() <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "gamma2",
                value: gamma2,
                reason: "expansion rate must satisfy |gamma2| > 1",
            });
        }
        if !(nu_hat > 0.0 && nu_hat < 1.0) {
            return Err(Error::InvalidParameter {
                name: "nu_hat",
                value: nu_hat,
                reason: "remainder rate must lie in (0, 1)",
            });
        }
        if gamma2_hat_factor < 1.0 {
            return Err(Error::InvalidParameter {
                name: "gamma2_hat_factor",
                value: gamma2_hat_factor,
                reason: "must be >= 1 so the remainder decays at least as fast",
            });
        }
        Ok(LocalSaddle {
            nu1,
            nu2,
            gamma2,
            nu_hat,
            gamma2_hat_factor,
            hooks,
        })
    }

    pub fn gamma2_hat(&self) -> f64 {
        self.gamma2 * self.gamma2_hat_factor
    }

    pub fn iterate_cross(&self, j: u32, u0: Vector2<f64>, v_j: f64) -> Result<(Vector2<f64>, f64)> {
        if j == 0 {
            return Ok((u0, v_j));
        }
        let args = [u0.x, u0.y, v_j];
        let nh = self.nu_hat.powi(j as i32);
        let u_j = Vector2::new(
            self.nu1.powi(j as i32) * u0.x + nh * self.hooks.eta1.eval(&args),
            self.nu2.powi(j as i32) * u0.y + nh * self.hooks.eta2.eval(&args),
        );
        let v_0 = self.gamma2.powi(-(j as i32)) * v_j
            + self.gamma2_hat().powi(-(j as i32)) * self.hooks.eta3.eval(&args);
        Ok((u_j, v_0))
    }

    /// Solve the cross form for the exit expanding coordinate `v_j` given
    /// the forward data `(u_0, v_0)`.
    pub fn solve_exit(&self, j: u32, u0: Vector2<f64>, v0: f64) -> Result<f64> {
        if j == 0 {
            return Ok(v0);
        }
        let gj = self.gamma2.powi(j as i32);
        if self.hooks.eta3.is_off() {
            return Ok(gj * v0);
        }
        let ghj = self.gamma2_hat().powi(-(j as i32));
        let mut v = gj * v0;
        let mut residual = f64::INFINITY;
        for _ in 0..SOLVE_MAX_ITERS {
            let next = gj * (v0 - ghj * self.hooks.eta3.eval(&[u0.x, u0.y, v]));
            residual = (next - v).abs();
            v = next;
            if residual <= SOLVE_TOL * v.abs().max(1.0) {
                return Ok(v);
            }
        }
        Err(Error::ImplicitSolveDiverged {
            iters: SOLVE_MAX_ITERS,
            residual,
        })
    }

    /// Forward passage: [`Self::solve_exit`] followed by the cross form.
    pub fn iterate_forward(
        &self,
        j: u32,
        u0: Vector2<f64>,
        v0: f64,
    ) -> Result<(Vector2<f64>, f64)> {
        if j == 0 {
            return Ok((u0, v0));
        }
        let v_j = self.solve_exit(j, u0, v0)?;
        let (u_j, _) = self.iterate_cross(j, u0, v_j)?;
        Ok((u_j, v_j))
    }
}

// ---------------------------------------------------------------------------
// Global connection maps
// ---------------------------------------------------------------------------

/// Affine-quadratic global connection map from an exit section to an entry
/// section.
///
/// Inputs are the 2D contracting-side coordinate `x` at the exit section and
/// the deviation `delta` of the expanding-side coordinate from the section
/// anchor [`GlobalMapCoeffs::source_anchor`]. The output rows are
///
/// ```text
/// rows 1-2:  target_anchor + a x + b delta          (+ O(2) hooks)
/// row 3 (tangency):     mu1 + c.x + d delta^2       (+ higher-order hooks)
/// row 3 (transversal):        c.x + d delta         (+ O(2) hooks)
/// ```
///
/// A tangency row has no linear `delta` term and no constant other than the
/// splitting parameter `mu1`; a transversal row has no constant at all.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMapCoeffs {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: Vector2<f64>,
    pub d: f64,
    pub mu1: f64,
    pub tangency: bool,
    /// Anchor of the output 2D rows (the point the contracting coordinates
    /// land near when the input is at the section center).
    pub target_anchor: Vector2<f64>,
    /// Anchor of the input expanding coordinate (`delta` is measured from it).
    pub source_anchor: f64,
    /// Validity radius of the chart around the anchors.
    pub radius: f64,
    pub hooks: GlobalHooks,
}

impl GlobalMapCoeffs {
    pub fn apply(&self, x: Vector2<f64>, delta: f64) -> Vector3<f64> {
        let args = [x.x, x.y, delta];
        let q = x.norm_squared() + delta * delta;
        let lin = self.a * x + self.b * delta;
        let r1 = self.target_anchor.x + lin.x + q * self.hooks.h1.eval(&args);
        let r2 = self.target_anchor.y + lin.y + q * self.hooks.h2.eval(&args);
        let r3 = if self.tangency {
            let qt = x.norm_squared() + delta * delta * delta;
            self.mu1 + self.c.dot(&x) + self.d * delta * delta + qt * self.hooks.h3.eval(&args)
        } else {
            self.c.dot(&x) + self.d * delta + q * self.hooks.h3.eval(&args)
        };
        Vector3::new(r1, r2, r3)
    }

    /// Jacobian with respect to `(x1, x2, delta)`; analytic when hooks are
    /// off, finite differences otherwise.
    pub fn jacobian(&self, x: Vector2<f64>, delta: f64) -> Matrix3<f64> {
        if self.hooks.all_off() {
            let corner = if self.tangency {
                2.0 * self.d * delta
            } else {
                self.d
            };
            Matrix3::new(
                self.a[(0, 0)],
                self.a[(0, 1)],
                self.b.x,
                self.a[(1, 0)],
                self.a[(1, 1)],
                self.b.y,
                self.c.x,
                self.c.y,
                corner,
            )
        } else {
            fd_jacobian3_inf(
                |v| self.apply(Vector2::new(v.x, v.y), v.z),
                Vector3::new(x.x, x.y, delta),
                1e-7,
            )
        }
    }

    /// Determinant of the linearization with the given bottom-right corner
    /// (`0` at a tangency vertex, `d` for a transversal row).
    pub fn det_with_corner(&self, corner: f64) -> f64 {
        Matrix3::new(
            self.a[(0, 0)],
            self.a[(0, 1)],
            self.b.x,
            self.a[(1, 0)],
            self.a[(1, 1)],
            self.b.y,
            self.c.x,
            self.c.y,
            corner,
        )
        .determinant()
    }

    /// `a - b c^T / d`: the effective 2D matrix after eliminating the third
    /// row through its `d`-coefficient.
    pub fn a_reduced(&self) -> Matrix2<f64> {
        self.a - self.b * self.c.transpose() / self.d
    }
}

// ---------------------------------------------------------------------------
// Family
// ---------------------------------------------------------------------------

/// Which of the three geometric configurations a family realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    I,
    IIa,
    IIb,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseTag::I => "I",
            CaseTag::IIa => "IIa",
            CaseTag::IIb => "IIb",
        })
    }
}

impl std::str::FromStr for CaseTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(CaseTag::I),
            "iia" | "2a" => Ok(CaseTag::IIa),
            "iib" | "2b" => Ok(CaseTag::IIb),
            _ => Err(Error::Config(format!("unknown case `{s}`"))),
        }
    }
}

/// The three-component control parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuVector {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
}

impl MuVector {
    pub const ZERO: MuVector = MuVector {
        mu1: 0.0,
        mu2: 0.0,
        mu3: 0.0,
    };

    pub fn new(mu1: f64, mu2: f64, mu3: f64) -> Self {
        MuVector { mu1, mu2, mu3 }
    }

    pub fn norm(&self) -> f64 {
        (self.mu1 * self.mu1 + self.mu2 * self.mu2 + self.mu3 * self.mu3).sqrt()
    }
}

/// One nondegeneracy quantity with its value and verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub value: f64,
    pub ok: bool,
}

/// Result of [`ModelFamily::check_nondegeneracy`].
#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub conditions: Vec<Condition>,
}

impl NondegeneracyReport {
    pub fn all_ok(&self) -> bool {
        self.conditions.iter().all(|c| c.ok)
    }

    /// Error out on the first violated condition.
    pub fn require(&self) -> Result<()> {
        for c in &self.conditions {
            if !c.ok {
                return Err(Error::Degenerate {
                    condition: c.name,
                    value: c.value,
                    tolerance: NONDEGENERACY_TOL,
                });
            }
        }
        Ok(())
    }
}

/// A complete model family, realized at a concrete `mu`.
///
/// `first` is `T1` (case I) or `T12` (case II); `second` is `T21` (case II
/// only). `gamma_base` stores the focus expansion rate of the underlying
/// `mu = 0` family so that realization at a new `mu` starts from the same
/// base.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub case: CaseTag,
    pub focus: LocalSaddleFocus,
    pub saddle: Option<LocalSaddle>,
    pub first: GlobalMapCoeffs,
    pub second: Option<GlobalMapCoeffs>,
    pub gamma_base: f64,
    pub mu: MuVector,
}

impl ModelFamily {
    /// Validating constructor for a base (`mu = 0`) family.
    pub fn new(
        case: CaseTag,
        focus: LocalSaddleFocus,
        saddle: Option<LocalSaddle>,
        first: GlobalMapCoeffs,
        second: Option<GlobalMapCoeffs>,
    ) -> Result<Self> {
        let gamma_base = focus.gamma;
        let fam = ModelFamily {
            case,
            focus,
            saddle,
            first,
            second,
            gamma_base,
            mu: MuVector::ZERO,
        };
        fam.validate_shape()?;
        Ok(fam)
    }

    fn validate_shape(&self) -> Result<()> {
        let shape_err = |reason| Error::Config(format!("family shape: {reason}"));
        match self.case {
            CaseTag::I => {
                if self.saddle.is_some() || self.second.is_some() {
                    return Err(shape_err("case I takes one local model and one global map"));
                }
                if !self.first.tangency {
                    return Err(shape_err("case I requires a tangency row in T1"));
                }
            }
            CaseTag::IIa => {
                if self.saddle.is_none() || self.second.is_none() {
                    return Err(shape_err("case II needs a saddle model and a second map"));
                }
                if self.first.tangency || !self.second.as_ref().unwrap().tangency {
                    return Err(shape_err(
                        "case IIa: T12 must be transversal, T21 the tangency",
                    ));
                }
                self.check_straddle()?;
            }
            CaseTag::IIb => {
                if self.saddle.is_none() || self.second.is_none() {
                    return Err(shape_err("case II needs a saddle model and a second map"));
                }
                if !self.first.tangency || self.second.as_ref().unwrap().tangency {
                    return Err(shape_err(
                        "case IIb: T12 must be the tangency, T21 transversal",
                    ));
                }
                self.check_straddle()?;
            }
        }
        Ok(())
    }

    fn check_straddle(&self) -> Result<()> {
        let j1 = self.j1();
        let j2 = self.j2().expect("case II has a saddle");
        if (j1 - 1.0) * (j2 - 1.0) >= 0.0 {
            return Err(Error::RatesDoNotStraddleOne { j1, j2 });
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.focus.block.lambda()
    }

    /// Volume-rate invariant of the focus point:
    /// `|lambda^2 - mu2| * |gamma|` (product of multiplier moduli).
    pub fn j1(&self) -> f64 {
        let l = self.lambda();
        (l * l - self.focus.block.mu2()).abs() * self.focus.gamma.abs()
    }

    /// Volume-rate invariant of the saddle point: `|nu1 nu2 gamma2|`.
    pub fn j2(&self) -> Option<f64> {
        self.saddle
            .as_ref()
            .map(|s| (s.nu1 * s.nu2 * s.gamma2).abs())
    }

    /// Whether every hook of every constituent map is switched off (the
    /// family is exactly its polynomial normal form).
    pub fn hooks_all_off(&self) -> bool {
        self.focus.hooks.all_off()
            && self.first.hooks.all_off()
            && self.saddle.as_ref().is_none_or(|s| s.hooks.all_off())
            && self.second.as_ref().is_none_or(|t| t.hooks.all_off())
    }

    /// The global map that carries the tangency row.
    pub fn tangency_map(&self) -> &GlobalMapCoeffs {
        match self.case {
            CaseTag::I | CaseTag::IIb => &self.first,
            CaseTag::IIa => self.second.as_ref().expect("validated shape"),
        }
    }

    /// Realize the family at `mu`, re-deriving the focus block and expansion
    /// rate from the stored base:
    ///
    /// * case I: `gamma(mu) = gamma_base * lambda^2 (1 - mu3) / |lambda^2 - mu2|`,
    /// * case II: `gamma(mu) = gamma_base * (lambda^2 / |lambda^2 - mu2|) * J2^(-mu3)`,
    ///
    /// and the splitting parameter `mu1` goes into the tangency row.
    pub fn at(&self, mu: MuVector) -> Result<ModelFamily> {
        let l = self.lambda();
        let l2 = l * l;
        let block = BelyakovBlock::new(l, mu.mu2)?;
        let denom = (l2 - mu.mu2).abs();
        if denom < 1e-300 {
            return Err(Error::ScaleUnderflow {
                name: "lambda^2 - mu2",
                value: denom,
            });
        }
        let gamma = match self.case {
            CaseTag::I => {
                if 1.0 - mu.mu3 <= 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "mu3",
                        value: mu.mu3,
                        reason: "case I realization needs 1 - mu3 > 0",
                    });
                }
                self.gamma_base * l2 * (1.0 - mu.mu3) / denom
            }
            CaseTag::IIa | CaseTag::IIb => {
                let j2 = self.j2().expect("case II has a saddle");
                self.gamma_base * (l2 / denom) * j2.powf(-mu.mu3)
            }
        };
        let focus = LocalSaddleFocus::new(
            block,
            gamma,
            self.focus.lambda_hat,
            self.focus.gamma_hat_factor,
            self.focus.hooks,
        )?;
        let mut out = ModelFamily {
            case: self.case,
            focus,
            saddle: self.saddle.clone(),
            first: self.first.clone(),
            second: self.second.clone(),
            gamma_base: self.gamma_base,
            mu,
        };
        match out.case {
            CaseTag::I | CaseTag::IIb => out.first.mu1 = mu.mu1,
            CaseTag::IIa => out.second.as_mut().expect("validated shape").mu1 = mu.mu1,
        }
        out.validate_shape()?;
        Ok(out)
    }

    /// Recover the rate coordinate from a realized family.
    ///
    /// Case I measures the deviation of `J1` from the critical value 1:
    /// the functional is `1 - J1`. Case II measures the shift of
    /// `S = -ln J1 / ln J2` against the base family: `S - S_base`. Both
    /// return exactly `mu3` when evaluated on `self.at(mu)` of a critical
    /// base family.
    pub fn mu3_functional(&self) -> f64 {
        match self.case {
            CaseTag::I => 1.0 - self.j1(),
            CaseTag::IIa | CaseTag::IIb => {
                let j2 = self.j2().expect("case II has a saddle");
                let l2 = self.lambda() * self.lambda();
                let s = -self.j1().ln() / j2.ln();
                let s_base = -(l2 * self.gamma_base.abs()).ln() / j2.ln();
                s - s_base
            }
        }
    }

    /// Balanced saddle-passage length for a given focus-passage length `k`
    /// (case II only): the `j` for which the two rate invariants roughly
    /// cancel, `j = round(k ln J1 / -ln J2)`.
    pub fn suggest_j(&self, k: u32) -> Option<u32> {
        let j2 = self.j2()?;
        let l2 = self.lambda() * self.lambda();
        let j1_base = l2 * self.gamma_base.abs();
        let j = (f64::from(k) * j1_base.ln() / -j2.ln()).round();
        Some(j.max(1.0) as u32)
    }

    /// Evaluate the case-specific nondegeneracy quantities at tolerance
    /// [`NONDEGENERACY_TOL`].
    pub fn check_nondegeneracy(&self) -> NondegeneracyReport {
        let cond = |name, value: f64| Condition {
            name,
            value,
            ok: value.abs() > NONDEGENERACY_TOL,
        };
        let conditions = match self.case {
            CaseTag::I => {
                let t1 = &self.first;
                vec![
                    cond("J_T1", t1.det_with_corner(0.0)),
                    cond("d", t1.d),
                    cond("b2", t1.b.y),
                    cond("c1", t1.c.x),
                ]
            }
            CaseTag::IIa => {
                let t12 = &self.first;
                let t21 = self.second.as_ref().expect("validated shape");
                let a11 = t12.a_reduced()[(0, 0)];
                vec![
                    cond("J12", t12.det_with_corner(t12.d)),
                    cond("J21", t21.det_with_corner(0.0)),
                    cond("d1", t12.d),
                    cond("d2", t21.d),
                    cond("A11", a11),
                    cond("b4*c3", t21.b.y * t21.c.x),
                ]
            }
            CaseTag::IIb => {
                let t12 = &self.first;
                let t21 = self.second.as_ref().expect("validated shape");
                let a41 = t21.a_reduced()[(1, 0)];
                vec![
                    cond("J12", t12.det_with_corner(0.0)),
                    cond("J21", t21.det_with_corner(t21.d)),
                    cond("d1", t12.d),
                    cond("d2", t21.d),
                    cond("b1*c1", t12.b.x * t12.c.x),
                    cond("A41", a41),
                ]
            }
        };
        NondegeneracyReport { conditions }
    }

    // ------------------------------------------------------------------ presets

    /// Case I preset: focus rates `lambda = 0.7`, `gamma = 1/0.49` (so the
    /// rate invariant sits exactly at the critical value `J1 = 1`), and a
    /// tangency map with `J_T1 = 0.288`.
    pub fn case_i() -> ModelFamily {
        let block = BelyakovBlock::new(0.7, 0.0).expect("preset block");
        let focus = LocalSaddleFocus::new(block, 1.0 / 0.49, 0.3, 2.0, FocusHooks::OFF)
            .expect("preset focus");
        let t1 = GlobalMapCoeffs {
            a: Matrix2::new(1.0, 0.2, 0.1, 1.0),
            b: Vector2::new(0.3, 1.0),
            c: Vector2::new(1.0, -0.4),
            d: 1.0,
            mu1: 0.0,
            tangency: true,
            target_anchor: Vector2::new(0.4, 0.3),
            source_anchor: 0.6,
            radius: 1.0,
            hooks: GlobalHooks::OFF,
        };
        ModelFamily::new(CaseTag::I, focus, None, t1, None).expect("preset family")
    }

    fn case_ii_pieces() -> (LocalSaddleFocus, LocalSaddle, GlobalMapCoeffs, GlobalMapCoeffs) {
        let block = BelyakovBlock::new(0.9, 0.0).expect("preset block");
        // J1 = 0.81 * gamma = 1.1 at the base point; J2 = 0.93 * 0.90 * 1.1
        // = 0.9207, so the two rate invariants straddle 1.
        let focus = LocalSaddleFocus::new(block, 1.1 / 0.81, 0.3, 2.0, FocusHooks::OFF)
            .expect("preset focus");
        let saddle =
            LocalSaddle::new(0.93, 0.90, 1.1, 0.8, 1.5, SaddleHooks::OFF).expect("preset saddle");
        let t12 = GlobalMapCoeffs {
            a: Matrix2::new(1.0, 0.2, 0.1, 1.0),
            b: Vector2::new(0.5, 1.0),
            c: Vector2::new(1.0, 0.45),
            d: 1.0,
            mu1: 0.0,
            tangency: false,
            target_anchor: Vector2::new(0.3, 0.25),
            source_anchor: 0.6,
            radius: 1.0,
            hooks: GlobalHooks::OFF,
        };
        let t21 = GlobalMapCoeffs {
            a: Matrix2::new(1.0, 0.1, 0.3, 1.0),
            b: Vector2::new(0.4, 1.0),
            c: Vector2::new(1.0, 0.5),
            d: 1.0,
            mu1: 0.0,
            tangency: true,
            target_anchor: Vector2::new(0.4, 0.3),
            source_anchor: 0.5,
            radius: 1.0,
            hooks: GlobalHooks::OFF,
        };
        (focus, saddle, t12, t21)
    }

    /// Case IIa preset: transversal `T12`, tangency in `T21`.
    pub fn case_iia() -> ModelFamily {
        let (focus, saddle, t12, t21) = Self::case_ii_pieces();
        ModelFamily::new(CaseTag::IIa, focus, Some(saddle), t12, Some(t21)).expect("preset family")
    }

    /// Case IIb preset: tangency in `T12`, transversal `T21`.
    ///
    /// Unlike IIa, here the critical row feeds back into the contracting
    /// rows through the second connection's expanding column, so the preset
    /// is tuned to keep that feed benign along the balanced ladder:
    ///
    /// * `gamma2 = 1.05` (so `J2 = 0.879`, passage ratio `j/k = ln 1.1 /
    ///   -ln J2 = 0.738`) makes `lambda^k gamma2^j` — the rate of the
    ///   feed's rescaled size — decay instead of staying flat;
    /// * `b12 = (0.5, 0)` and `b21` parallel to `a21 (1, 0)^T` make the
    ///   rows' expanding column proportional to `b21` for **every** passage
    ///   length, so the row mixing annihilates the feed in the shift row
    ///   identically rather than only in the limit;
    /// * the moderate `c21` keeps the tangency vertex offset small, which
    ///   is what the Jacobian-prediction match at finite `k` rides on.
    pub fn case_iib() -> ModelFamily {
        let (focus, _, mut t12, mut t21) = Self::case_ii_pieces();
        let saddle =
            LocalSaddle::new(0.93, 0.90, 1.05, 0.8, 1.5, SaddleHooks::OFF).expect("preset saddle");
        t12.tangency = true;
        t12.b = Vector2::new(0.5, 0.0);
        t21.tangency = false;
        t21.b = Vector2::new(0.4, 0.12);
        t21.c = Vector2::new(0.4, 0.5);
        ModelFamily::new(CaseTag::IIb, focus, Some(saddle), t12, Some(t21)).expect("preset family")
    }

    pub fn preset(case: CaseTag) -> ModelFamily {
        match case {
            CaseTag::I => Self::case_i(),
            CaseTag::IIa => Self::case_iia(),
            CaseTag::IIb => Self::case_iib(),
        }
    }

    // ------------------------------------------------------------------ config

    /// Build a family from a parsed config: the preset of `[family] case`
    /// with any listed overrides applied, then re-validated.
    pub fn from_kv(cfg: &KvConfig) -> Result<ModelFamily> {
        let case: CaseTag = match cfg.get("family", "case") {
            Some(raw) => raw.parse()?,
            None => CaseTag::I,
        };
        let mut fam = ModelFamily::preset(case);

        // Focus overrides.
        let lambda = cfg
            .get_f64("family", "lambda")?
            .unwrap_or_else(|| fam.lambda());
        let gamma_base = cfg
            .get_f64("family", "gamma_base")?
            .unwrap_or(fam.gamma_base);
        let lambda_hat = cfg
            .get_f64("family", "lambda_hat")?
            .unwrap_or(fam.focus.lambda_hat);
        let gamma_hat_factor = cfg
            .get_f64("family", "gamma_hat_factor")?
            .unwrap_or(fam.focus.gamma_hat_factor);
        let mut local_hooks = fam.focus.hooks;
        if let Some(spec) = cfg.get("hooks", "local") {
            local_hooks = FocusHooks::uniform(HookFn::parse(spec)?);
        }
        fam.focus = LocalSaddleFocus::new(
            BelyakovBlock::new(lambda, 0.0)?,
            gamma_base,
            lambda_hat,
            gamma_hat_factor,
            local_hooks,
        )?;
        fam.gamma_base = gamma_base;

        if let Some(s) = fam.saddle.take() {
            let nu1 = cfg.get_f64("saddle", "nu1")?.unwrap_or(s.nu1);
            let nu2 = cfg.get_f64("saddle", "nu2")?.unwrap_or(s.nu2);
            let gamma2 = cfg.get_f64("saddle", "gamma2")?.unwrap_or(s.gamma2);
            let nu_hat = cfg.get_f64("saddle", "nu_hat")?.unwrap_or(s.nu_hat);
            let f = cfg
                .get_f64("saddle", "gamma2_hat_factor")?
                .unwrap_or(s.gamma2_hat_factor);
            let mut hooks = s.hooks;
            if let Some(spec) = cfg.get("hooks", "local") {
                hooks = SaddleHooks::uniform(HookFn::parse(spec)?);
            }
            fam.saddle = Some(LocalSaddle::new(nu1, nu2, gamma2, nu_hat, f, hooks)?);
        }

        let global_hook = match cfg.get("hooks", "global") {
            Some(spec) => Some(GlobalHooks::uniform(HookFn::parse(spec)?)),
            None => None,
        };

        for section in ["t1", "t12", "t21"] {
            let applies = matches!(
                (case, section),
                (CaseTag::I, "t1") | (CaseTag::IIa | CaseTag::IIb, "t12" | "t21")
            );
            let present = cfg.entries().any(|(s, _, _)| s == section);
            if present && !applies {
                return Err(Error::Config(format!(
                    "section `[{section}]` is not valid for case {case}"
                )));
            }
            if !applies {
                continue;
            }
            let target = if section == "t21" {
                fam.second.as_mut().expect("validated shape")
            } else {
                &mut fam.first
            };
            apply_global_overrides(cfg, section, target)?;
        }
        if let Some(gh) = global_hook {
            fam.first.hooks = gh;
            if let Some(second) = fam.second.as_mut() {
                second.hooks = gh;
            }
        }

        fam.validate_shape()?;
        Ok(fam)
    }
}

/// Config keys understood by [`ModelFamily::from_kv`].
pub const FAMILY_SCHEMA: &[(&str, &[&str])] = &[
    (
        "family",
        &[
            "case",
            "lambda",
            "gamma_base",
            "lambda_hat",
            "gamma_hat_factor",
        ],
    ),
    (
        "saddle",
        &["nu1", "nu2", "gamma2", "nu_hat", "gamma2_hat_factor"],
    ),
    ("hooks", &["local", "global"]),
    ("t1", GLOBAL_MAP_KEYS),
    ("t12", GLOBAL_MAP_KEYS),
    ("t21", GLOBAL_MAP_KEYS),
];

const GLOBAL_MAP_KEYS: &[&str] = &[
    "a11", "a12", "a21", "a22", "b1", "b2", "c1", "c2", "d", "anchor1", "anchor2", "source",
    "radius",
];

fn apply_global_overrides(cfg: &KvConfig, section: &str, map: &mut GlobalMapCoeffs) -> Result<()> {
    let f = |key: &str, slot: &mut f64| -> Result<()> {
        if let Some(v) = cfg.get_f64(section, key)? {
            *slot = v;
        }
        Ok(())
    };
    f("a11", &mut map.a[(0, 0)])?;
    f("a12", &mut map.a[(0, 1)])?;
    f("a21", &mut map.a[(1, 0)])?;
    f("a22", &mut map.a[(1, 1)])?;
    f("b1", &mut map.b.x)?;
    f("b2", &mut map.b.y)?;
    f("c1", &mut map.c.x)?;
    f("c2", &mut map.c.y)?;
    f("d", &mut map.d)?;
    f("anchor1", &mut map.target_anchor.x)?;
    f("anchor2", &mut map.target_anchor.y)?;
    f("source", &mut map.source_anchor)?;
    f("radius", &mut map.radius)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn saddle_cross_passage_is_exactly_diagonal_without_hooks() {
        let s = LocalSaddle::new(0.5, 0.2, 2.0, 0.4, 1.5, SaddleHooks::OFF).unwrap();
        let (u3, v0) = s.iterate_cross(3, Vector2::new(1.0, 1.0), 0.8).unwrap();
        assert_eq!(u3.x, 0.125);
        assert_relative_eq!(u3.y, 0.008, max_relative = 1e-15);
        assert_relative_eq!(v0, 0.8 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_step_passages_are_the_identity_even_with_hooks() {
        let hooks = FocusHooks::uniform(HookFn::Constant(0.5));
        let block = BelyakovBlock::new(0.7, -0.1).unwrap();
        let f = LocalSaddleFocus::new(block, 2.0, 0.3, 2.0, hooks).unwrap();
        let x0 = Vector2::new(0.3, -0.2);
        assert_eq!(f.iterate_cross(0, x0, 0.4).unwrap(), (x0, 0.4));
        assert_eq!(f.iterate_forward(0, x0, 0.4).unwrap(), (x0, 0.4));
    }

    #[test]
    fn second_saddle_coordinate_obeys_the_remainder_bound() {
        // With u2_0 = 0 the second coordinate is pure remainder:
        // |u2_j| <= nu_hat^j * sup |eta2|.
        let hooks = SaddleHooks::uniform(HookFn::Wave {
            amplitude: 0.01,
            wavenumber: 2.0,
        });
        let s = LocalSaddle::new(0.9, 0.7, 1.5, 0.8, 1.5, hooks).unwrap();
        for j in 1..=20u32 {
            let (u_j, _) = s.iterate_cross(j, Vector2::new(0.5, 0.0), 0.3).unwrap();
            assert!(u_j.y.abs() <= 0.8f64.powi(j as i32) * 0.01 + 1e-15);
        }
    }

    #[test]
    fn forward_passage_inverts_the_cross_form() {
        let hooks = FocusHooks::uniform(HookFn::Wave {
            amplitude: 1e-3,
            wavenumber: 1.3,
        });
        let block = BelyakovBlock::new(0.7, -0.05).unwrap();
        let f = LocalSaddleFocus::new(block, 1.0 / 0.49, 0.3, 2.0, hooks).unwrap();
        let x0 = Vector2::new(0.2, -0.1);
        let (x_k, y_k) = f.iterate_forward(6, x0, 0.004).unwrap();
        let (x_k2, y0) = f.iterate_cross(6, x0, y_k).unwrap();
        assert!((x_k - x_k2).amax() < 1e-14);
        assert_relative_eq!(y0, 0.004, epsilon = 1e-12);
    }

    #[test]
    fn tangency_and_transversal_rows_have_the_documented_shape() {
        let fam = ModelFamily::case_i();
        let t1 = &fam.first;
        // At the vertex (x = 0, delta = 0) the tangency row reduces to mu1.
        let v = t1.apply(Vector2::zeros(), 0.0);
        assert_eq!(v.z, t1.mu1);
        assert_eq!(Vector2::new(v.x, v.y), t1.target_anchor);
        // The quadratic term is even in delta.
        let plus = t1.apply(Vector2::zeros(), 0.1).z;
        let minus = t1.apply(Vector2::zeros(), -0.1).z;
        assert_relative_eq!(plus, minus, epsilon = 1e-15);

        let t12 = &ModelFamily::case_iia().first;
        let w_plus = t12.apply(Vector2::zeros(), 0.1).z;
        let w_minus = t12.apply(Vector2::zeros(), -0.1).z;
        assert_relative_eq!(w_plus, -w_minus, epsilon = 1e-15);
    }

    #[test]
    fn preset_nondegeneracy_values_are_locked() {
        let rep = ModelFamily::case_i().check_nondegeneracy();
        assert!(rep.all_ok());
        let get = |name: &str, rep: &NondegeneracyReport| {
            rep.conditions
                .iter()
                .find(|c| c.name == name)
                .unwrap()
                .value
        };
        assert_relative_eq!(get("J_T1", &rep), 0.288, epsilon = 1e-12);

        let rep = ModelFamily::case_iia().check_nondegeneracy();
        assert!(rep.all_ok());
        assert_relative_eq!(get("J12", &rep), 0.2525, epsilon = 1e-12);
        assert_relative_eq!(get("J21", &rep), -0.74, epsilon = 1e-12);
        assert_relative_eq!(get("A11", &rep), 0.5, epsilon = 1e-12);
        assert_relative_eq!(get("b4*c3", &rep), 1.0, epsilon = 1e-12);

        let rep = ModelFamily::case_iib().check_nondegeneracy();
        assert!(rep.all_ok());
        assert_relative_eq!(get("J12", &rep), -0.4775, epsilon = 1e-12);
        assert_relative_eq!(get("J21", &rep), 0.8148, epsilon = 1e-12);
        assert_relative_eq!(get("b1*c1", &rep), 0.5, epsilon = 1e-12);
        assert_relative_eq!(get("A41", &rep), 0.252, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_coefficients_are_reported() {
        let mut fam = ModelFamily::case_i();
        fam.first.b.y = 0.0;
        let rep = fam.check_nondegeneracy();
        assert!(!rep.all_ok());
        assert!(matches!(rep.require(), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn realization_moves_the_block_the_rate_and_the_splitting() {
        let fam = ModelFamily::case_i();
        let mu = MuVector::new(1e-4, -0.05, -0.08);
        let at = fam.at(mu).unwrap();
        assert_eq!(at.focus.block.mu2(), -0.05);
        assert_eq!(at.tangency_map().mu1, 1e-4);
        let expect_gamma = (1.0 / 0.49) * 0.49 * 1.08 / (0.49f64 + 0.05);
        assert_relative_eq!(at.focus.gamma, expect_gamma, epsilon = 1e-14);
        // J1 itself no longer depends on mu2.
        assert_relative_eq!(at.j1(), 1.08, epsilon = 1e-14);
    }

    #[test]
    fn rate_functional_recovers_mu3() {
        // Case I, critical base (J1 = 1): functional equals mu3 exactly,
        // for any mu2.
        let fam = ModelFamily::case_i();
        for &(mu2, mu3) in &[(0.0, 0.0), (-0.04, 0.03), (-0.1, -0.12)] {
            let at = fam.at(MuVector::new(0.0, mu2, mu3)).unwrap();
            assert_relative_eq!(at.mu3_functional(), mu3, epsilon = 1e-13);
        }
        // Case II: relative form, exact for any mu2/mu3.
        let fam = ModelFamily::case_iia();
        for &(mu2, mu3) in &[(0.0, 0.0), (-0.03, 0.2), (-0.08, 0.65)] {
            let at = fam.at(MuVector::new(0.0, mu2, mu3)).unwrap();
            assert_relative_eq!(at.mu3_functional(), mu3, epsilon = 1e-12);
        }
    }

    #[test]
    fn rate_functional_measures_off_critical_bases() {
        // An off-critical case I family: lambda = 0.5, gamma = 4 gives the
        // critical product exactly, gamma = 4.2 overshoots by 5%.
        let mk = |gamma: f64| {
            let block = BelyakovBlock::new(0.5, 0.0).unwrap();
            let focus = LocalSaddleFocus::new(block, gamma, 0.3, 2.0, FocusHooks::OFF).unwrap();
            let mut t1 = ModelFamily::case_i().first;
            t1.radius = 1.0;
            ModelFamily::new(CaseTag::I, focus, None, t1, None).unwrap()
        };
        assert_relative_eq!(mk(4.0).mu3_functional(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(mk(4.2).mu3_functional(), -0.05, epsilon = 1e-14);
    }

    #[test]
    fn case_ii_requires_rates_straddling_one() {
        let fam = ModelFamily::case_iia();
        // Pushing mu3 far enough drops J1 below 1 alongside J2.
        let res = fam.at(MuVector::new(0.0, 0.0, -2.0));
        assert!(matches!(res, Err(Error::RatesDoNotStraddleOne { .. })));
    }

    #[test]
    fn suggested_saddle_passage_balances_the_rates() {
        let fam = ModelFamily::case_iia();
        // ln(1.1) / -ln(0.9207) = 1.153..., so j tracks 1.153 k.
        assert_eq!(fam.suggest_j(24), Some(28));
        assert_eq!(fam.suggest_j(10), Some(12));
        assert_eq!(ModelFamily::case_i().suggest_j(10), None);
    }

    #[test]
    fn family_from_kv_applies_overrides_and_rejects_misplaced_sections() {
        let cfg = KvConfig::parse(
            "[family]\ncase = I\nlambda = 0.6\ngamma_base = 2.9\n[t1]\nb1 = 0.25\n",
        )
        .unwrap();
        let fam = ModelFamily::from_kv(&cfg).unwrap();
        assert_eq!(fam.lambda(), 0.6);
        assert_eq!(fam.gamma_base, 2.9);
        assert_eq!(fam.first.b.x, 0.25);

        let cfg = KvConfig::parse("[family]\ncase = I\n[t21]\nd = 2.0\n").unwrap();
        assert!(ModelFamily::from_kv(&cfg).is_err());
    }

    #[test]
    fn hook_specs_parse() {
        assert_eq!(HookFn::parse("off").unwrap(), HookFn::Off);
        assert_eq!(
            HookFn::parse("constant:0.01").unwrap(),
            HookFn::Constant(0.01)
        );
        assert!(matches!(
            HookFn::parse("wave:1e-3:2.5").unwrap(),
            HookFn::Wave { .. }
        ));
        assert!(HookFn::parse("wave:1e-3").is_err());
    }
}
