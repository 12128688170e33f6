//! Rescaling charts: affine-plus-scaling coordinate changes that bring the
//! composed return map, near the turning point of its critical row, into
//! quadratic-map form
//!
//! ```text
//! X1' = X2 + o(1),   X2' = X3 + o(1),   X3' = M1 + B X1 + M2 X2 - X3^2 + o(1)
//! ```
//!
//! together with everything built on top of that normal form: the effective
//! and predicted limiting coefficients, placement of the control parameters
//! so the coefficients hit a requested target, deviation ladders measuring
//! how fast the `o(1)` terms die as the passage lengths grow, and the
//! flattening diagnostic for the non-rotating branch `mu2 > 0`.
//!
//! # Why the fold is done in extended precision
//!
//! The chart constants contract pairs of terms of size `gamma^k` down to
//! results of size `O(1)` (and the third-row constant all the way down to
//! `O(gamma^-k)`). In plain doubles the cancellation noise would be
//! amplified by `gamma^{2k}` — at `k = 24` that means losing every digit of
//! the constant term. All folded constants are therefore accumulated in
//! double-double arithmetic and rounded exactly once; the per-point
//! evaluator then runs in plain doubles, where every term is already on the
//! same scale and no cancellation is left.
//!
//! The fold is exact for the polynomial normal form (hooks off). When hooks
//! are on, the evaluator adds the difference between the hooked and
//! hook-free raw compositions, so the folded path keeps its accuracy and
//! the hooks enter as the small perturbation they are.

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{
    CaseTag, FocusHooks, GlobalHooks, ModelFamily, MuVector, SaddleHooks,
};
use crate::henon::{henon2d_step, HenonParams};
use crate::numeric::{
    dd_dot2, dd_mat2_mat2, dd_mat2_vec, dd_solve2, fd_jacobian3, illinois, ulp_of, Dd, DdMat2,
    DdVec2,
};
use crate::return_map::{find_mu2_zero, find_mu2_zero_with_j, oscillation_terms, predicted_b,
    predicted_m2, ComposedReturnMap};

/// Smallest admissible focus-passage length. Below this the passage spends
/// too few steps near the fixed point for the chart's asymptotics to mean
/// anything, and the solvers refuse to pretend otherwise.
pub const K_FLOOR: u32 = 5;

/// Magnitude below which a scaling factor is treated as numerically dead.
const SCALE_FLOOR: f64 = 1e-300;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// A family together with passage lengths and a parameter point: everything
/// the return-map and rescaling operations need.
#[derive(Debug, Clone)]
pub struct ReturnMapConfig {
    pub family: ModelFamily,
    pub k: u32,
    pub j: u32,
    pub mu: MuVector,
}

impl ReturnMapConfig {
    /// Validates the admissibility floor `k >=` [`K_FLOOR`], the
    /// case/passage consistency (`j` required for the heteroclinic cases,
    /// absent for case I), and the family's nondegeneracy conditions.
    pub fn new(family: ModelFamily, k: u32, j: Option<u32>, mu: MuVector) -> Result<Self> {
        if k < K_FLOOR {
            return Err(Error::InvalidParameter {
                name: "k",
                value: f64::from(k),
                reason: "below the admissibility floor of 5 passage steps",
            });
        }
        let j = match (family.case, j) {
            (CaseTag::I, None) | (CaseTag::I, Some(0)) => 0,
            (CaseTag::I, Some(j)) => {
                return Err(Error::InvalidParameter {
                    name: "j",
                    value: f64::from(j),
                    reason: "case I has no saddle passage",
                });
            }
            (_, Some(j)) if j >= 1 => j,
            (_, _) => {
                return Err(Error::InvalidParameter {
                    name: "j",
                    value: 0.0,
                    reason: "cases IIa/IIb need a saddle passage length j >= 1",
                });
            }
        };
        family.check_nondegeneracy().require()?;
        Ok(ReturnMapConfig { family, k, j, mu })
    }

    /// The composed return map at this configuration's parameter point.
    pub fn compose(&self) -> Result<ComposedReturnMap> {
        ComposedReturnMap::new(self.family.at(self.mu)?, self.k, self.j)
    }
}

/// The composed return map of a configuration (free-function spelling of
/// [`ReturnMapConfig::compose`]).
pub fn compose_return_map(cfg: &ReturnMapConfig) -> Result<ComposedReturnMap> {
    cfg.compose()
}

// ---------------------------------------------------------------------------
// Limiting coefficients
// ---------------------------------------------------------------------------

/// Coefficients of the limiting quadratic map in rescaled coordinates,
/// together with the oscillation data that controls the twist coefficient.
///
/// `sin_term` and `l_fitted` are the factors of the twist's sinusoidal form
/// `M2 ~ prefactor * L sin(k phi + psi)`; they are meaningful only on the
/// rotation branch `mu2 < 0` and are NaN otherwise.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RescaledParams {
    pub m1: f64,
    pub m2: f64,
    pub b: f64,
    pub sin_term: f64,
    pub l_fitted: f64,
}

impl RescaledParams {
    pub fn henon(&self) -> HenonParams {
        HenonParams::new(self.m1, self.m2, self.b)
    }
}

// ---------------------------------------------------------------------------
// Double-double helpers local to the fold
// ---------------------------------------------------------------------------

fn dd_mat(m: &Matrix2<f64>) -> DdMat2 {
    [
        [Dd::new(m[(0, 0)]), Dd::new(m[(0, 1)])],
        [Dd::new(m[(1, 0)]), Dd::new(m[(1, 1)])],
    ]
}

fn dd_vec(v: &Vector2<f64>) -> DdVec2 {
    [Dd::new(v.x), Dd::new(v.y)]
}

fn mat_of(m: &DdMat2) -> Matrix2<f64> {
    Matrix2::new(
        m[0][0].value(),
        m[0][1].value(),
        m[1][0].value(),
        m[1][1].value(),
    )
}

fn vec_of(v: &DdVec2) -> Vector2<f64> {
    Vector2::new(v[0].value(), v[1].value())
}

/// `I - m`.
fn dd_identity_minus(m: &DdMat2) -> DdMat2 {
    [
        [Dd::ONE - m[0][0], -m[0][1]],
        [-m[1][0], Dd::ONE - m[1][1]],
    ]
}

/// `m^T v`.
fn dd_tvec(m: &DdMat2, v: &DdVec2) -> DdVec2 {
    [
        m[0][0] * v[0] + m[1][0] * v[1],
        m[0][1] * v[0] + m[1][1] * v[1],
    ]
}

/// `diag(d0, d1) * m`.
fn dd_diag_mat(d0: Dd, d1: Dd, m: &DdMat2) -> DdMat2 {
    [
        [d0 * m[0][0], d0 * m[0][1]],
        [d1 * m[1][0], d1 * m[1][1]],
    ]
}

fn dd_mat_add(a: &DdMat2, b: &DdMat2) -> DdMat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

/// `A1^k` in double-double arithmetic via the exact two-term recurrence
/// (the power of the block is `[[P, Q], [mu2 Q, P]]` with
/// `P' = lambda P + mu2 Q`, `Q' = P + lambda Q`).
fn dd_a1_pow(lambda: f64, mu2: f64, k: u32) -> DdMat2 {
    let l = Dd::new(lambda);
    let m = Dd::new(mu2);
    let mut p = Dd::ONE;
    let mut q = Dd::ZERO;
    for _ in 0..k {
        let pn = l * p + m * q;
        let qn = p + l * q;
        p = pn;
        q = qn;
    }
    [[p, q], [m * q, p]]
}

// ---------------------------------------------------------------------------
// The fold
// ---------------------------------------------------------------------------

/// Folded chart data, all in double-double form. In center-relative cross
/// coordinates `(u, eta)` the hook-free return is exactly
///
/// ```text
/// eta' = k3 + g . u + q_lin eta + s_quad eta^2
/// u'   = r12c + A_u u + B_u eta + eta_feed (eta' - k3)
/// ```
///
/// with no other terms: the composition of the affine rows with one
/// quadratic row is itself exactly quadratic, so the fold loses nothing.
/// The rows' only quadratic dependence enters through the critical row
/// itself, so it is carried by the single feed vector `eta_feed` (zero
/// except in case IIb, where the second connection's expanding column is
/// eliminated backwards through its transversal scalar row). `r12c` and
/// `q_lin` are placement residuals (zero up to the fold's own rounding)
/// kept so the evaluator stays exact rather than merely centered.
struct Folded {
    x_star: DdVec2,
    scalar_star: Dd,
    r12c: DdVec2,
    a_u: DdMat2,
    b_u: DdVec2,
    eta_feed: DdVec2,
    g: DdVec2,
    k3: Dd,
    q_lin: Dd,
    s_quad: Dd,
}

/// Case I: cross variables `(x0, Y)` with `Y` the focus exit coordinate.
/// One return is `x' = x+ + a P x0 + b (Y - y-)`,
/// `Y' = gamma^k (mu1 + c . P x0 + d (Y - y-)^2)`.
fn fold_case_i(fam: &ModelFamily, k: u32) -> Result<Folded> {
    let block = &fam.focus.block;
    let t1 = &fam.first;
    let p = dd_a1_pow(block.lambda(), block.mu2(), k);
    let gk = Dd::new(fam.focus.gamma).powi(k as i32);
    let a = dd_mat(&t1.a);
    let b = dd_vec(&t1.b);
    let c = dd_vec(&t1.c);
    let d = Dd::new(t1.d);
    let x_plus = dd_vec(&t1.target_anchor);
    let y_minus = Dd::new(t1.source_anchor);

    let a_u = dd_mat2_mat2(&a, &p);
    let x_star = dd_solve2(&dd_identity_minus(&a_u), &x_plus)?;
    let px = dd_mat2_vec(&p, &x_star);
    let au_x = dd_mat2_vec(&a_u, &x_star);
    let r12c = [
        x_plus[0] + au_x[0] - x_star[0],
        x_plus[1] + au_x[1] - x_star[1],
    ];
    let ptc = dd_tvec(&p, &c);
    let g = [gk * ptc[0], gk * ptc[1]];
    let k3 = gk * (Dd::new(t1.mu1) + dd_dot2(&c, &px)) - y_minus;
    Ok(Folded {
        x_star,
        scalar_star: y_minus,
        r12c,
        a_u,
        b_u: b,
        eta_feed: [Dd::ZERO, Dd::ZERO],
        g,
        k3,
        q_lin: Dd::ZERO,
        s_quad: gk * d,
    })
}

/// Case IIa: cross variables `(x0, V)` with `V` the saddle exit coordinate.
/// The transversal first connection makes the focus exit offset
/// `delta1 = (gamma2^-j V - c12 . P x0) / d1` explicit, and the tangency
/// sits in the second connection, so the turning point is a vertex in `V`.
/// Both center equations are affine, so the center is a linear solve.
fn fold_case_iia(fam: &ModelFamily, k: u32, j: u32) -> Result<Folded> {
    let block = &fam.focus.block;
    let t12 = &fam.first;
    let t21 = fam.second.as_ref().expect("case II family");
    let sad = fam.saddle.as_ref().expect("case II family");

    let p = dd_a1_pow(block.lambda(), block.mu2(), k);
    let gk = Dd::new(fam.focus.gamma).powi(k as i32);
    let g2j = Dd::new(sad.gamma2).powi(j as i32);
    let g2mj = Dd::new(sad.gamma2).powi(-(j as i32));
    let n1 = Dd::new(sad.nu1).powi(j as i32);
    let n2 = Dd::new(sad.nu2).powi(j as i32);

    let a12 = dd_mat(&t12.a);
    let b12 = dd_vec(&t12.b);
    let c12 = dd_vec(&t12.c);
    let d1 = Dd::new(t12.d);
    let u_plus = dd_vec(&t12.target_anchor);
    let y_minus = Dd::new(t12.source_anchor);
    let a21 = dd_mat(&t21.a);
    let b21 = dd_vec(&t21.b);
    let c21 = dd_vec(&t21.c);
    let d2 = Dd::new(t21.d);
    let x_plus = dd_vec(&t21.target_anchor);
    let v_minus = Dd::new(t21.source_anchor);
    let mu1 = Dd::new(t21.mu1);

    // Reduced first-connection matrix: the delta1 elimination turns the
    // rows of T12 into `abar = a12 - b12 c12^T / d1`.
    let abar = [
        [
            a12[0][0] - b12[0] * c12[0] / d1,
            a12[0][1] - b12[0] * c12[1] / d1,
        ],
        [
            a12[1][0] - b12[1] * c12[0] / d1,
            a12[1][1] - b12[1] * c12[1] / d1,
        ],
    ];
    let nabar = dd_diag_mat(n1, n2, &abar);
    let nabar_p = dd_mat2_mat2(&nabar, &p);
    let a_u = dd_mat2_mat2(&a21, &nabar_p);

    let nb12 = [n1 * b12[0], n2 * b12[1]];
    let a21_nb12 = dd_mat2_vec(&a21, &nb12);
    let b_u = [
        a21_nb12[0] * g2mj / d1 + b21[0],
        a21_nb12[1] * g2mj / d1 + b21[1],
    ];

    let s_quad = g2j * d1 * gk * d2;

    // Vertex in V: the eta-linear coefficient of the critical row is
    // `g2j c12.P B_u + gk c21.N b12 + 2 s_quad delta2*`; set it to zero.
    let pbu = dd_mat2_vec(&p, &b_u);
    let lin1 = g2j * dd_dot2(&c12, &pbu);
    let lin2 = gk * dd_dot2(&c21, &nb12);
    let delta2_star = -(lin1 + lin2) / (Dd::new(2.0) * s_quad);
    let v_star = v_minus + delta2_star;

    // Rows fixed point, linear in x* once V* is known:
    // (I - A_u) x* = x+ + a21 N u+ + B_u V* - b21 v-.
    let nu_plus = [n1 * u_plus[0], n2 * u_plus[1]];
    let a21_nu = dd_mat2_vec(&a21, &nu_plus);
    let rhs = [
        x_plus[0] + a21_nu[0] + b_u[0] * v_star - b21[0] * v_minus,
        x_plus[1] + a21_nu[1] + b_u[1] * v_star - b21[1] * v_minus,
    ];
    let x_star = dd_solve2(&dd_identity_minus(&a_u), &rhs)?;

    let px = dd_mat2_vec(&p, &x_star);
    let delta1_star = (g2mj * v_star - dd_dot2(&c12, &px)) / d1;
    let u0_star = [
        u_plus[0] + dd_dot2(&[a12[0][0], a12[0][1]], &px) + b12[0] * delta1_star,
        u_plus[1] + dd_dot2(&[a12[1][0], a12[1][1]], &px) + b12[1] * delta1_star,
    ];
    let uj_star = [n1 * u0_star[0], n2 * u0_star[1]];
    let a21_uj = dd_mat2_vec(&a21, &uj_star);
    let x_bar = [
        x_plus[0] + a21_uj[0] + b21[0] * delta2_star,
        x_plus[1] + a21_uj[1] + b21[1] * delta2_star,
    ];
    let r12c = [x_bar[0] - x_star[0], x_bar[1] - x_star[1]];

    let y0_bar = mu1 + dd_dot2(&c21, &uj_star) + d2 * delta2_star * delta2_star;
    let px_bar = dd_mat2_vec(&p, &x_bar);
    let k3 = g2j * (dd_dot2(&c12, &px_bar) + d1 * (gk * y0_bar - y_minus)) - v_star;

    let ptc12 = dd_tvec(&p, &c12);
    let au_t = dd_tvec(&a_u, &ptc12);
    let nc21 = [n1 * c21[0], n2 * c21[1]];
    let abar_t = dd_tvec(&abar, &nc21);
    let p_abar_t = dd_tvec(&p, &abar_t);
    let g = [
        g2j * (au_t[0] + d1 * gk * p_abar_t[0]),
        g2j * (au_t[1] + d1 * gk * p_abar_t[1]),
    ];

    let q_lin = lin1 + lin2 + Dd::new(2.0) * s_quad * delta2_star;

    Ok(Folded {
        x_star,
        scalar_star: v_star,
        r12c,
        a_u,
        b_u,
        eta_feed: [Dd::ZERO, Dd::ZERO],
        g,
        k3,
        q_lin,
        s_quad,
    })
}

/// Case IIb: cross variables `(x0, Y)` with `Y` the focus exit coordinate.
/// The tangency sits in the first connection, so the vertex offset
/// `delta1* = -c21 . N b12 / (2 d1 d2 gamma2^j)` is explicit.
///
/// The saddle exit is eliminated *backwards* through the second
/// connection's transversal scalar row: `delta2 = (Y'/gamma^k - c21 . N u0)
/// / d2` turns the rows into
///
/// ```text
/// x' = x+ + Abar21 N u0 + (b21 / (d2 gamma^k)) Y',
/// ```
///
/// exactly linear in the *outgoing* expanding coordinate. This keeps the
/// growing `b21`-column out of the row coefficients (it decays as
/// `gamma^-k` in the feed instead), which is what makes the rescaled rows
/// collapse onto the shift form.
fn fold_case_iib(fam: &ModelFamily, k: u32, j: u32) -> Result<Folded> {
    let block = &fam.focus.block;
    let t12 = &fam.first;
    let t21 = fam.second.as_ref().expect("case II family");
    let sad = fam.saddle.as_ref().expect("case II family");

    let p = dd_a1_pow(block.lambda(), block.mu2(), k);
    let gk = Dd::new(fam.focus.gamma).powi(k as i32);
    let g2j = Dd::new(sad.gamma2).powi(j as i32);
    let n1 = Dd::new(sad.nu1).powi(j as i32);
    let n2 = Dd::new(sad.nu2).powi(j as i32);

    let a12 = dd_mat(&t12.a);
    let b12 = dd_vec(&t12.b);
    let c12 = dd_vec(&t12.c);
    let d1 = Dd::new(t12.d);
    let u_plus = dd_vec(&t12.target_anchor);
    let y_minus = Dd::new(t12.source_anchor);
    let mu1 = Dd::new(t12.mu1);
    let a21 = dd_mat(&t21.a);
    let b21 = dd_vec(&t21.b);
    let c21 = dd_vec(&t21.c);
    let d2 = Dd::new(t21.d);
    let x_plus = dd_vec(&t21.target_anchor);
    let v_minus = Dd::new(t21.source_anchor);

    let nb12 = [n1 * b12[0], n2 * b12[1]];
    let c_nb = dd_dot2(&c21, &nb12);
    let delta1_star = -c_nb / (Dd::new(2.0) * d1 * d2 * g2j);
    let y_star = y_minus + delta1_star;

    // Reduced second-connection matrix from the backward elimination:
    // `abar = a21 - b21 c21^T / d2`.
    let abar = [
        [
            a21[0][0] - b21[0] * c21[0] / d2,
            a21[0][1] - b21[0] * c21[1] / d2,
        ],
        [
            a21[1][0] - b21[1] * c21[0] / d2,
            a21[1][1] - b21[1] * c21[1] / d2,
        ],
    ];
    let na12 = dd_diag_mat(n1, n2, &a12);
    let abar_na12 = dd_mat2_mat2(&abar, &na12);
    let a_u = dd_mat2_mat2(&abar_na12, &p);
    let b_u = dd_mat2_vec(&abar, &nb12);
    let eta_feed = [b21[0] / (d2 * gk), b21[1] / (d2 * gk)];

    // Rows fixed point, solved in the forward (pre-elimination) form whose
    // coefficient matrix `a21 N a12 P + gamma2^j b21 c12^T P` is the full
    // row response: (I - A_fwd) x* = x+ + a21 N (u+ + b12 delta1*)
    //                              + b21 (gamma2^j (mu1 + d1 delta1*^2) - v-).
    let a21_na12 = dd_mat2_mat2(&a21, &na12);
    let outer = [
        [g2j * b21[0] * c12[0], g2j * b21[0] * c12[1]],
        [g2j * b21[1] * c12[0], g2j * b21[1] * c12[1]],
    ];
    let a_fwd = dd_mat2_mat2(&dd_mat_add(&a21_na12, &outer), &p);
    let entry = [
        u_plus[0] + b12[0] * delta1_star,
        u_plus[1] + b12[1] * delta1_star,
    ];
    let n_entry = [n1 * entry[0], n2 * entry[1]];
    let a21_ne = dd_mat2_vec(&a21, &n_entry);
    let scalar_part = g2j * (mu1 + d1 * delta1_star * delta1_star) - v_minus;
    let rhs = [
        x_plus[0] + a21_ne[0] + b21[0] * scalar_part,
        x_plus[1] + a21_ne[1] + b21[1] * scalar_part,
    ];
    let x_star = dd_solve2(&dd_identity_minus(&a_fwd), &rhs)?;

    let px = dd_mat2_vec(&p, &x_star);
    let u0_star = [
        u_plus[0] + dd_dot2(&[a12[0][0], a12[0][1]], &px) + b12[0] * delta1_star,
        u_plus[1] + dd_dot2(&[a12[1][0], a12[1][1]], &px) + b12[1] * delta1_star,
    ];
    let uj_star = [n1 * u0_star[0], n2 * u0_star[1]];
    let v0_star = mu1 + dd_dot2(&c12, &px) + d1 * delta1_star * delta1_star;
    let delta2_star = g2j * v0_star - v_minus;
    let a21_uj = dd_mat2_vec(&a21, &uj_star);
    let x_bar = [
        x_plus[0] + a21_uj[0] + b21[0] * delta2_star,
        x_plus[1] + a21_uj[1] + b21[1] * delta2_star,
    ];
    let r12c = [x_bar[0] - x_star[0], x_bar[1] - x_star[1]];

    let y_bar = gk * (dd_dot2(&c21, &uj_star) + d2 * delta2_star);
    let k3 = y_bar - y_star;

    let nc21 = [n1 * c21[0], n2 * c21[1]];
    let a12t_nc = dd_tvec(&a12, &nc21);
    let p_a12t = dd_tvec(&p, &a12t_nc);
    let ptc12 = dd_tvec(&p, &c12);
    let g = [
        gk * (p_a12t[0] + d2 * g2j * ptc12[0]),
        gk * (p_a12t[1] + d2 * g2j * ptc12[1]),
    ];

    let s_quad = gk * g2j * d1 * d2;
    let q_lin = gk * (c_nb + Dd::new(2.0) * d1 * d2 * g2j * delta1_star);

    Ok(Folded {
        x_star,
        scalar_star: y_star,
        r12c,
        a_u,
        b_u,
        eta_feed,
        g,
        k3,
        q_lin,
        s_quad,
    })
}

// ---------------------------------------------------------------------------
// The chart
// ---------------------------------------------------------------------------

/// Hook-delta evaluators: the raw composition with hooks as configured and
/// with all hooks forced off, in the chart's cross variables.
#[derive(Debug, Clone)]
enum RawPair {
    /// Cases I and IIb, whose cross variables are exactly those of
    /// [`ComposedReturnMap::apply_cross`].
    Composed {
        hooked: ComposedReturnMap,
        plain: ComposedReturnMap,
    },
    /// Case IIa, whose scalar cross variable is the saddle exit coordinate.
    SaddleExit {
        hooked: ModelFamily,
        plain: ModelFamily,
    },
}

/// The rescaling chart of a configuration: center, folded coefficients,
/// mixing, scales, and effective limiting parameters.
///
/// The chart is itself an evaluable map ([`Self::apply`]): the return map
/// conjugated into rescaled coordinates. Hook-free it is evaluated purely
/// from the folded constants (exact); with hooks on, the difference of the
/// hooked and hook-free raw compositions is added on top.
#[derive(Debug, Clone)]
pub struct RescalingChart {
    pub case: CaseTag,
    pub k: u32,
    pub j: u32,
    pub mu: MuVector,
    family: ModelFamily,
    raw: Option<RawPair>,
    // Center in cross variables and folded coefficients (double mirrors of
    // the double-double fold).
    x_star: Vector2<f64>,
    scalar_star: f64,
    r12c: Vector2<f64>,
    a_u: Matrix2<f64>,
    b_u: Vector2<f64>,
    eta_feed: Vector2<f64>,
    g: Vector2<f64>,
    k3: f64,
    q_lin: f64,
    s_quad: f64,
    // Row mixing and scales.
    rho: f64,
    p12: f64,
    alpha1: f64,
    alpha2: f64,
    beta: f64,
    // Effective limiting coefficients, rounded once from the fold.
    m1_eff: f64,
    m2_eff: f64,
    b_eff: f64,
}

impl RescalingChart {
    pub fn build(cfg: &ReturnMapConfig) -> Result<Self> {
        let fam = cfg.family.at(cfg.mu)?;
        let (k, j) = (cfg.k, cfg.j);
        if k > crate::belyakov::MAX_ITERATE || j > crate::belyakov::MAX_ITERATE {
            return Err(Error::IterateCountTooLarge {
                k: k.max(j),
                max: crate::belyakov::MAX_ITERATE,
            });
        }
        let folded = match fam.case {
            CaseTag::I => fold_case_i(&fam, k)?,
            CaseTag::IIa => fold_case_iia(&fam, k, j)?,
            CaseTag::IIb => fold_case_iib(&fam, k, j)?,
        };

        let q2 = folded.b_u[1];
        Self::check_scale("q2", q2.value())?;
        let rho = folded.b_u[0] / q2;
        let a = &folded.a_u;
        let p12 = rho * (a[0][0] - rho * a[1][0]) + a[0][1] - rho * a[1][1];
        Self::check_scale("p12", p12.value())?;
        let beta = -(Dd::ONE / folded.s_quad);
        Self::check_scale("beta", beta.value())?;
        let alpha2 = q2 * beta;
        Self::check_scale("alpha2", alpha2.value())?;
        let alpha1 = p12 * alpha2;
        Self::check_scale("alpha1", alpha1.value())?;

        let m1_eff = -(folded.k3 * folded.s_quad);
        let b_eff = folded.g[0] * p12 * q2;
        let m2_eff = (rho * folded.g[0] + folded.g[1]) * q2;

        let raw = if fam.hooks_all_off() {
            None
        } else {
            let mut plain = fam.clone();
            plain.focus.hooks = FocusHooks::OFF;
            plain.first.hooks = GlobalHooks::OFF;
            if let Some(s) = plain.saddle.as_mut() {
                s.hooks = SaddleHooks::OFF;
            }
            if let Some(t) = plain.second.as_mut() {
                t.hooks = GlobalHooks::OFF;
            }
            Some(match fam.case {
                CaseTag::IIa => RawPair::SaddleExit {
                    hooked: fam.clone(),
                    plain,
                },
                _ => RawPair::Composed {
                    hooked: ComposedReturnMap::new(fam.clone(), k, j)?,
                    plain: ComposedReturnMap::new(plain, k, j)?,
                },
            })
        };

        Ok(RescalingChart {
            case: fam.case,
            k,
            j,
            mu: cfg.mu,
            family: fam,
            raw,
            x_star: vec_of(&folded.x_star),
            scalar_star: folded.scalar_star.value(),
            r12c: vec_of(&folded.r12c),
            a_u: mat_of(&folded.a_u),
            b_u: vec_of(&folded.b_u),
            eta_feed: vec_of(&folded.eta_feed),
            g: vec_of(&folded.g),
            k3: folded.k3.value(),
            q_lin: folded.q_lin.value(),
            s_quad: folded.s_quad.value(),
            rho: rho.value(),
            p12: p12.value(),
            alpha1: alpha1.value(),
            alpha2: alpha2.value(),
            beta: beta.value(),
            m1_eff: m1_eff.value(),
            m2_eff: m2_eff.value(),
            b_eff: b_eff.value(),
        })
    }

    fn check_scale(name: &'static str, value: f64) -> Result<()> {
        if !value.is_finite() || value.abs() < SCALE_FLOOR {
            return Err(Error::ScaleUnderflow { name, value });
        }
        Ok(())
    }

    /// The realized family the chart was built on.
    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    /// Rescaled coordinates -> cross variables `(x0, exit)`.
    pub fn to_unscaled(&self, w: Vector3<f64>) -> (Vector2<f64>, f64) {
        let u = Vector2::new(
            self.alpha1 * w.x + self.rho * self.alpha2 * w.y,
            self.alpha2 * w.y,
        );
        (self.x_star + u, self.scalar_star + self.beta * w.z)
    }

    /// Cross variables -> rescaled coordinates.
    pub fn from_unscaled(&self, x0: Vector2<f64>, exit: f64) -> Vector3<f64> {
        let u = x0 - self.x_star;
        Vector3::new(
            (u.x - self.rho * u.y) / self.alpha1,
            u.y / self.alpha2,
            (exit - self.scalar_star) / self.beta,
        )
    }

    /// One application of the return map in rescaled coordinates.
    pub fn apply(&self, w: Vector3<f64>) -> Result<Vector3<f64>> {
        let u = Vector2::new(
            self.alpha1 * w.x + self.rho * self.alpha2 * w.y,
            self.alpha2 * w.y,
        );
        let eta = self.beta * w.z;
        let eta_poly = self.g.dot(&u) + self.q_lin * eta + self.s_quad * eta * eta;
        let mut ubar = self.r12c + self.a_u * u + self.b_u * eta + self.eta_feed * eta_poly;
        let mut etabar = self.k3 + eta_poly;
        if let Some(raw) = &self.raw {
            let x0 = self.x_star + u;
            let exit = self.scalar_star + eta;
            let (xh, sh) = self.raw_cross(raw, true, x0, exit)?;
            let (xo, so) = self.raw_cross(raw, false, x0, exit)?;
            ubar += xh - xo;
            etabar += sh - so;
        }
        let vbar = Vector2::new(ubar.x - self.rho * ubar.y, ubar.y);
        Ok(Vector3::new(
            vbar.x / self.alpha1,
            vbar.y / self.alpha2,
            etabar / self.beta,
        ))
    }

    fn raw_cross(
        &self,
        raw: &RawPair,
        hooked: bool,
        x0: Vector2<f64>,
        exit: f64,
    ) -> Result<(Vector2<f64>, f64)> {
        match raw {
            RawPair::Composed { hooked: h, plain } => {
                let map = if hooked { h } else { plain };
                map.apply_cross(x0, exit)
            }
            RawPair::SaddleExit { hooked: h, plain } => {
                let fam = if hooked { h } else { plain };
                saddle_exit_cross(fam, self.k, self.j, x0, exit)
            }
        }
    }

    /// Effective limiting coefficients: what the rescaled map actually
    /// converges to, extracted from the folded constants.
    pub fn effective(&self) -> RescaledParams {
        let (sin_term, l_fitted) = self.oscillation_factors();
        RescaledParams {
            m1: self.m1_eff,
            m2: self.m2_eff,
            b: self.b_eff,
            sin_term,
            l_fitted,
        }
    }

    /// Leading-order predicted coefficients from the closed-form rate
    /// expressions. Errors on the non-rotating branch `mu2 >= 0`, where the
    /// twist has no sinusoidal control (use
    /// [`mu2_positive_diagnostic`] there).
    ///
    /// The constant coefficient `m1` is shared with [`Self::effective`]:
    /// the closed-form constant term keeps every term of the chart's folded
    /// constant, so the "prediction" and the fold are the same quantity and
    /// are computed once.
    pub fn predicted(&self) -> Result<RescaledParams> {
        let mu2 = self.family.focus.block.mu2();
        if mu2 >= 0.0 {
            return Err(Error::RotationBranchRequired { mu2 });
        }
        let (sin_term, l_fitted) = self.oscillation_factors();
        Ok(RescaledParams {
            m1: self.m1_eff,
            m2: predicted_m2(&self.family, self.k, self.j)?,
            b: predicted_b(&self.family, self.k, self.j),
            sin_term,
            l_fitted,
        })
    }

    fn oscillation_factors(&self) -> (f64, f64) {
        let mu2 = self.family.focus.block.mu2();
        if mu2 < 0.0 {
            match oscillation_terms(&self.family, mu2, self.j) {
                Ok(t) => (
                    (f64::from(self.k) * t.phi + t.psi).sin(),
                    t.amplitude,
                ),
                Err(_) => (f64::NAN, f64::NAN),
            }
        } else {
            (f64::NAN, f64::NAN)
        }
    }

    /// Natural volume-contraction hint for Lyapunov bookkeeping:
    /// `ln |B_eff|`, the log-determinant of the limiting map.
    pub fn log_abs_det(&self) -> f64 {
        self.b_eff.abs().ln()
    }

    /// Jacobian determinant of the rescaled map measured at the chart
    /// origin by finite differences — the "composed Jacobian" that the
    /// predicted `B` is supposed to approximate.
    pub fn measured_det(&self) -> Result<f64> {
        let j = fd_jacobian3(|w| self.apply(w), Vector3::zeros(), 1e-5)?;
        Ok(j.determinant())
    }

    /// Sup-norm `C^0` and `C^1` deviations between the rescaled map and the
    /// limiting quadratic map with the given coefficients, over the lattice
    /// `samples^3` on `[-half_width, half_width]^3`.
    pub fn compare_to(
        &self,
        limit: HenonParams,
        half_width: f64,
        samples: usize,
    ) -> Result<(f64, f64)> {
        let n = samples.max(2);
        let coord = move |i: usize| -> f64 {
            -half_width + 2.0 * half_width * (i as f64) / ((n - 1) as f64)
        };
        (0..n * n * n)
            .into_par_iter()
            .try_fold(
                || (0.0f64, 0.0f64),
                |acc, idx| -> Result<(f64, f64)> {
                    let w = Vector3::new(
                        coord(idx / (n * n)),
                        coord((idx / n) % n),
                        coord(idx % n),
                    );
                    let c0 = (self.apply(w)? - limit.step(w)).amax();
                    let jac = fd_jacobian3(|x| self.apply(x), w, 1e-5)?;
                    let c1 = (jac - limit.jacobian(w)).amax();
                    Ok((acc.0.max(c0), acc.1.max(c1)))
                },
            )
            .try_reduce(
                || (0.0, 0.0),
                |a, b| Ok((a.0.max(b.0), a.1.max(b.1))),
            )
    }
}

/// Case IIa raw composition in its cross variables `(x0, v_exit)`: solve
/// for the focus exit coordinate that matches the first connection's third
/// row to the saddle entry implied by `v_exit`, run the legs, and close by
/// solving the next passage's implicit equations. Closed form when hooks
/// are off, damped fixed-point iteration otherwise.
fn saddle_exit_cross(
    fam: &ModelFamily,
    k: u32,
    j: u32,
    x0: Vector2<f64>,
    v_exit: f64,
) -> Result<(Vector2<f64>, f64)> {
    const MAX_ITERS: u32 = 100;
    const TOL: f64 = 1e-13;
    let focus = &fam.focus;
    let t12 = &fam.first;
    let t21 = fam.second.as_ref().expect("case II family");
    let sad = fam.saddle.as_ref().expect("case II family");

    // Seed from the hook-free closed form.
    let p = focus.block.a1_pow(k)?;
    let mut y = t12.source_anchor
        + (sad.gamma2.powi(-(j as i32)) * v_exit - t12.c.dot(&(p * x0))) / t12.d;

    let all_off = focus.hooks.all_off() && t12.hooks.all_off() && sad.hooks.all_off();
    if !all_off {
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERS {
            let (xk, _) = focus.iterate_cross(k, x0, y)?;
            let mid = t12.apply(xk, y - t12.source_anchor);
            let (_, v0) = sad.iterate_cross(j, Vector2::new(mid.x, mid.y), v_exit)?;
            residual = (mid.z - v0) / t12.d;
            y -= residual;
            if residual.abs() <= TOL * y.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ImplicitSolveDiverged {
                iters: MAX_ITERS,
                residual: residual.abs(),
            });
        }
    }

    let (xk, _) = focus.iterate_cross(k, x0, y)?;
    let d1 = y - t12.source_anchor;
    if !(xk.norm() <= t12.radius && d1.abs() <= t12.radius) {
        return Err(Error::DomainEscape {
            leg: "first-global",
            detail: format!(
                "contracting offset {:.3e}, expanding deviation {:.3e}",
                xk.norm(),
                d1
            ),
        });
    }
    let mid = t12.apply(xk, d1);
    let (uj, _) = sad.iterate_cross(j, Vector2::new(mid.x, mid.y), v_exit)?;
    let d2 = v_exit - t21.source_anchor;
    if !(uj.norm() <= t21.radius && d2.abs() <= t21.radius) {
        return Err(Error::DomainEscape {
            leg: "second-global",
            detail: format!(
                "contracting offset {:.3e}, expanding deviation {:.3e}",
                uj.norm(),
                d2
            ),
        });
    }
    let out = t21.apply(uj, d2);
    let x_new = Vector2::new(out.x, out.y);

    // Close the loop: next focus exit, next first-connection row, next
    // saddle exit.
    let y_next = focus.solve_exit(k, x_new, out.z)?;
    let (xk_next, _) = focus.iterate_cross(k, x_new, y_next)?;
    let mid_next = t12.apply(xk_next, y_next - t12.source_anchor);
    let v_next = sad.solve_exit(j, Vector2::new(mid_next.x, mid_next.y), mid_next.z)?;
    Ok((x_new, v_next))
}

/// Leading-order limiting coefficients of a configuration (chart fold plus
/// rate formulas). Errors when `mu2 >= 0`.
pub fn predicted_rescaled_params(cfg: &ReturnMapConfig) -> Result<RescaledParams> {
    RescalingChart::build(cfg)?.predicted()
}

// ---------------------------------------------------------------------------
// Deviation reports and ladders
// ---------------------------------------------------------------------------

/// Outcome of comparing one rescaled return map against its limiting
/// quadratic map.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub case: CaseTag,
    pub k: u32,
    pub j: u32,
    pub mu: MuVector,
    pub predicted: RescaledParams,
    pub effective: RescaledParams,
    /// Sup-norm difference of the maps over the sampling box.
    pub c0: f64,
    /// Sup-norm difference of their Jacobians over the sampling box.
    pub c1: f64,
    /// Finite-difference Jacobian determinant at the chart origin.
    pub measured_det: f64,
    /// Product of the base rate invariants `J1_base^k J2^j`; a ladder stays
    /// meaningful while this is O(1).
    pub balance: f64,
}

/// Product of the base-family rate invariants at the given passage lengths.
pub fn rate_balance(family: &ModelFamily, k: u32, j: u32) -> f64 {
    let l = family.lambda();
    let j1_base = l * l * family.gamma_base.abs();
    let j2 = family.j2().unwrap_or(1.0);
    j1_base.powi(k as i32) * j2.powi(j as i32)
}

/// Build the chart of `cfg`, compare the rescaled map against the
/// **predicted** limiting map on `[-half_width, half_width]^3`, and report
/// both deviations together with the coefficient sets.
pub fn rescale_and_compare(
    cfg: &ReturnMapConfig,
    half_width: f64,
    samples: usize,
) -> Result<DeviationReport> {
    let chart = RescalingChart::build(cfg)?;
    let predicted = chart.predicted()?;
    let (c0, c1) = chart.compare_to(predicted.henon(), half_width, samples)?;
    Ok(DeviationReport {
        case: chart.case,
        k: chart.k,
        j: chart.j,
        mu: chart.mu,
        predicted,
        effective: chart.effective(),
        c0,
        c1,
        measured_det: chart.measured_det()?,
        balance: rate_balance(&cfg.family, chart.k, chart.j),
    })
}

/// Deviation ladder along growing passage lengths, pinned at oscillation
/// zeros.
///
/// For each `k` the rotation parameter is set on the `branch_index`-th zero
/// of the oscillating combination (so the twist coefficient vanishes and
/// the comparison exercises the raw convergence), `mu3 = 0`, the splitting
/// parameter is placed so the constant coefficient vanishes, and for the
/// heteroclinic cases `j` is the balanced passage length. This is the
/// measurement behind the claim that the rescaled return maps converge to
/// the quadratic limit: `c0` must shrink as `k` grows.
pub fn deviation_ladder(
    base: &ModelFamily,
    ks: &[u32],
    branch_index: usize,
    half_width: f64,
    samples: usize,
) -> Result<Vec<DeviationReport>> {
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let j = match base.case {
            CaseTag::I => None,
            _ => Some(base.suggest_j(k).expect("case II has a saddle")),
        };
        let mu2 = find_mu2_zero(base, k, branch_index)?;
        let placement = place_mu1(base, k, j, mu2, 0.0, 0.0)?;
        let cfg = ReturnMapConfig::new(
            base.clone(),
            k,
            j,
            MuVector::new(placement.mu1, mu2, 0.0),
        )?;
        out.push(rescale_and_compare(&cfg, half_width, samples)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parameter placement
// ---------------------------------------------------------------------------

/// Result of placing the splitting parameter so the constant coefficient
/// hits a target.
#[derive(Debug, Clone, Copy)]
pub struct Mu1Placement {
    pub mu1: f64,
    /// Smallest constant-coefficient increment a double step of `mu1` can
    /// resolve: the placement cannot honestly do better than this.
    pub floor: f64,
    pub achieved_m1: f64,
}

/// Place `mu1` so the effective constant coefficient equals `target_m1`,
/// with `(mu2, mu3)` held fixed.
///
/// The constant coefficient is exactly affine in `mu1` (the splitting
/// parameter enters one row of one connection map linearly and nothing else
/// moves), so a two-point secant is exact up to rounding; a short polish
/// loop then walks down to the representability floor.
pub fn place_mu1(
    base: &ModelFamily,
    k: u32,
    j: Option<u32>,
    mu2: f64,
    mu3: f64,
    target_m1: f64,
) -> Result<Mu1Placement> {
    let m1_of = |mu1: f64| -> Result<f64> {
        let cfg = ReturnMapConfig::new(base.clone(), k, j, MuVector::new(mu1, mu2, mu3))?;
        Ok(RescalingChart::build(&cfg)?.effective().m1)
    };
    let m10 = m1_of(0.0)?;
    let probe = 1e-6;
    let slope = (m1_of(probe)? - m10) / probe;
    if !slope.is_finite() || slope == 0.0 {
        return Err(Error::SolveFailed(
            "constant coefficient does not respond to the splitting parameter".into(),
        ));
    }
    let mut mu1 = (target_m1 - m10) / slope;
    let scale = mu1.abs().max((m10 / slope).abs()).max(f64::MIN_POSITIVE);
    let floor = slope.abs() * ulp_of(scale) / 2.0;
    let mut best = (mu1, f64::INFINITY, f64::NAN);
    for _ in 0..6 {
        let achieved = m1_of(mu1)?;
        let residual = achieved - target_m1;
        if residual.abs() < best.1 {
            best = (mu1, residual.abs(), achieved);
        }
        if residual.abs() <= floor {
            break;
        }
        mu1 -= residual / slope;
    }
    Ok(Mu1Placement {
        mu1: best.0,
        floor,
        achieved_m1: best.2,
    })
}

/// Everything [`solve_mu_for_target`] found, verified.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub mu: MuVector,
    pub k: u32,
    pub j: u32,
    pub branch_index: usize,
    pub target: HenonParams,
    pub predicted: RescaledParams,
    pub effective: RescaledParams,
    pub placement_floor_m1: f64,
    /// Predicted-minus-target residuals `(m1, m2, b)`.
    pub residuals: [f64; 3],
}

/// Place the three control parameters so the predicted limiting
/// coefficients hit `target` at passage lengths `(k, j)`, with the rotation
/// parameter near the `branch_index`-th oscillation zero.
///
/// The placement is exactly triangular thanks to how the expansion rate is
/// realized from `mu3`:
///
/// 1. `mu3` from the Jacobian target in closed form — the realized
///    contraction/expansion product is independent of `mu2`;
/// 2. `mu2` by bracketing the twist equation around the oscillation zero —
///    the twist does not react to `mu1`;
/// 3. `mu1` by the exact affine placement of the constant coefficient.
///
/// `j = None` picks the balanced saddle-passage length for the heteroclinic
/// cases. Verification re-evaluates the prediction and fails loudly rather
/// than returning a parameter point that does not do what was asked; the
/// constant coefficient is verified against its honest representability
/// floor.
pub fn solve_mu_for_target(
    base: &ModelFamily,
    k: u32,
    j: Option<u32>,
    target: HenonParams,
    branch_index: usize,
) -> Result<SolveReport> {
    if !target.b.is_finite() || target.b == 0.0 {
        return Err(Error::InvalidParameter {
            name: "target.b",
            value: target.b,
            reason: "the limiting Jacobian target must be finite and nonzero",
        });
    }
    let j = match base.case {
        CaseTag::I => 0,
        _ => match j {
            Some(j) => j,
            None => base.suggest_j(k).expect("case II has a saddle"),
        },
    };
    let lambda = base.lambda();
    let l2 = lambda * lambda;
    let j1_base = l2 * base.gamma_base;
    if j1_base <= 0.0 {
        return Err(Error::SolveFailed(
            "closed-form rate placement needs a positive base expansion".into(),
        ));
    }

    // Stage 1: mu3 from the Jacobian magnitude. The realized rate product
    // per focus step is exactly `j1_base * (1 - mu3)` (case I) or
    // `j1_base * J2^-mu3` (cases II), with the `lambda^2 - mu2` factors
    // cancelling between the block determinant and the realized expansion.
    let mu3 = match base.case {
        CaseTag::I => {
            let j_t1 = base.first.det_with_corner(0.0);
            let r = target.b / j_t1;
            if r <= 0.0 {
                return Err(Error::SolveFailed(format!(
                    "target Jacobian sign {:+} is infeasible: the connection determinant \
                     fixes sign {:+}",
                    target.b.signum(),
                    j_t1.signum()
                )));
            }
            1.0 - r.powf(1.0 / f64::from(k)) / j1_base
        }
        CaseTag::IIa | CaseTag::IIb => {
            let t12 = &base.first;
            let t21 = base.second.as_ref().expect("case II family");
            let (j12, j21) = if base.case == CaseTag::IIa {
                (t12.det_with_corner(t12.d), t21.det_with_corner(0.0))
            } else {
                (t12.det_with_corner(0.0), t21.det_with_corner(t21.d))
            };
            let sad = base.saddle.as_ref().expect("case II family");
            let volume2 = (sad.nu1 * sad.nu2 * sad.gamma2).powi(j as i32);
            let r = target.b / (j12 * j21 * volume2);
            if r <= 0.0 {
                return Err(Error::SolveFailed(format!(
                    "target Jacobian sign {:+} is infeasible: the connection determinants \
                     fix sign {:+}",
                    target.b.signum(),
                    (j12 * j21 * volume2).signum()
                )));
            }
            let j1_required = r.powf(1.0 / f64::from(k));
            let j2 = base.j2().expect("case II has a saddle");
            if (j1_required - 1.0) * (j2 - 1.0) >= 0.0 {
                return Err(Error::RatesDoNotStraddleOne {
                    j1: j1_required,
                    j2,
                });
            }
            -(j1_required / j1_base).ln() / j2.ln()
        }
    };

    // Stage 2: mu2 from the twist, bracketing around the oscillation zero.
    // The bracket is a half period of `k phi(mu2)` on each side, inside
    // which the sinusoid is monotone through its zero.
    let s0 = (-find_mu2_zero_with_j(base, k, j, branch_index)?).sqrt();
    let s_max = (1.0 - l2).sqrt() * (1.0 - 1e-6);
    let m2_at = |s: f64| -> Result<f64> {
        let fam = base.at(MuVector::new(0.0, -(s * s), mu3))?;
        predicted_m2(&fam, k, j)
    };
    let mut width = 0.9 * (std::f64::consts::PI / (2.0 * f64::from(k))) * (l2 + s0 * s0) / lambda;
    let mut bracket = None;
    for _ in 0..2 {
        let lo = (s0 - width).max(s_max * 1e-6);
        let hi = (s0 + width).min(s_max);
        let f_lo = m2_at(lo)? - target.m2;
        let f_hi = m2_at(hi)? - target.m2;
        if f_lo == 0.0 {
            bracket = Some((lo, lo));
            break;
        }
        if f_hi == 0.0 {
            bracket = Some((hi, hi));
            break;
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi));
            break;
        }
        width *= 2.0;
    }
    let Some((lo, hi)) = bracket else {
        return Err(Error::SolveFailed(format!(
            "twist target {} is unreachable near oscillation zero {} at k = {k}",
            target.m2, branch_index
        )));
    };
    let s_star = if lo == hi {
        lo
    } else {
        illinois(
            |s| m2_at(s).expect("bracket stays on the rotation branch") - target.m2,
            lo,
            hi,
            200,
        )?
    };
    let mu2 = -(s_star * s_star);

    // Stage 3: mu1 from the constant coefficient (exact affine placement).
    let jopt = if base.case == CaseTag::I { None } else { Some(j) };
    let placement = place_mu1(base, k, jopt, mu2, mu3, target.m1)?;
    let mu = MuVector::new(placement.mu1, mu2, mu3);

    // Verification: rebuild and compare the prediction against the target.
    let cfg = ReturnMapConfig::new(base.clone(), k, jopt, mu)?;
    let chart = RescalingChart::build(&cfg)?;
    let predicted = chart.predicted()?;
    let residuals = [
        predicted.m1 - target.m1,
        predicted.m2 - target.m2,
        predicted.b - target.b,
    ];
    let tol_m1 = (1e-8 * target.m1.abs().max(1.0)).max(8.0 * placement.floor);
    let tol_m2 = 1e-8 * target.m2.abs().max(1.0);
    let tol_b = 1e-8 * target.b.abs().max(1.0);
    if residuals[0].abs() > tol_m1 || residuals[1].abs() > tol_m2 || residuals[2].abs() > tol_b {
        return Err(Error::VerificationFailed(format!(
            "placed parameters miss the target: residuals ({:.3e}, {:.3e}, {:.3e}) \
             against tolerances ({:.3e}, {:.3e}, {:.3e})",
            residuals[0], residuals[1], residuals[2], tol_m1, tol_m2, tol_b
        )));
    }
    Ok(SolveReport {
        mu,
        k,
        j,
        branch_index,
        target,
        predicted,
        effective: chart.effective(),
        placement_floor_m1: placement.floor,
        residuals,
    })
}

// ---------------------------------------------------------------------------
// The non-rotating branch: flattening diagnostic
// ---------------------------------------------------------------------------

/// One passage length's worth of evidence in [`Mu2PositiveReport`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagnosticRung {
    pub k: u32,
    pub j: u32,
    pub mu1: f64,
    /// Sup over the sampling box of the first rescaled component under the
    /// equal-scale normalization. The first coordinate direction dies like
    /// `k lambda^k`: the map flattens onto a plane instead of converging to
    /// a 3D quadratic map.
    pub x1_sup: f64,
    pub m1_2d: f64,
    /// Twist coefficient of the surviving planar map; grows without bound,
    /// so the planar limit expands area and admits no attractor.
    pub m2_2d: f64,
}

/// Escape experiment for the planar map once its Jacobian magnitude
/// exceeds 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeDemo {
    pub k: u32,
    pub m1: f64,
    pub m2: f64,
    pub seeds: usize,
    pub escaped: usize,
}

impl EscapeDemo {
    /// Every sampled orbit left the bounded region: the classifier's
    /// "no attractor" verdict for the area-expanding planar map.
    pub fn no_attractor(&self) -> bool {
        self.escaped == self.seeds
    }
}

/// Report of [`mu2_positive_diagnostic`].
#[derive(Debug, Clone, Serialize)]
pub struct Mu2PositiveReport {
    pub mu2: f64,
    pub rungs: Vec<DiagnosticRung>,
    /// Least-squares constant of the `C k lambda^k` model for `x1_sup`.
    pub fit_c: f64,
    /// Largest relative misfit of that model across the rungs.
    pub fit_residual: f64,
    pub escape: Option<EscapeDemo>,
}

/// What happens on the branch `mu2 > 0`, where the contracting block has
/// real eigenvalues and the twist has no sinusoidal control.
///
/// For each passage length the chart is built at `(mu1(k), mu2, 0)` with
/// the splitting parameter placed so the constant coefficient vanishes, but
/// the coordinates are **not** given the full 3D normalization: both
/// contracting directions share one scale. In these coordinates the first
/// component of the image shrinks like `k lambda^k` — the map flattens onto
/// a plane — while the planar map left behind has twist coefficient
/// `m2_2d` growing beyond 1, after which it expands area and its orbits
/// escape. Both effects are measured and reported.
pub fn mu2_positive_diagnostic(
    base: &ModelFamily,
    mu2: f64,
    ks: &[u32],
    half_width: f64,
    samples: usize,
) -> Result<Mu2PositiveReport> {
    if !(mu2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu2",
            value: mu2,
            reason: "the flattening diagnostic lives on the branch mu2 > 0",
        });
    }
    let n = samples.max(2);
    let coord =
        move |i: usize| -> f64 { -half_width + 2.0 * half_width * (i as f64) / ((n - 1) as f64) };
    let mut rungs = Vec::with_capacity(ks.len());
    for &k in ks {
        let j = match base.case {
            CaseTag::I => None,
            _ => Some(base.suggest_j(k).expect("case II has a saddle")),
        };
        let placement = place_mu1(base, k, j, mu2, 0.0, 0.0)?;
        let cfg = ReturnMapConfig::new(
            base.clone(),
            k,
            j,
            MuVector::new(placement.mu1, mu2, 0.0),
        )?;
        let chart = RescalingChart::build(&cfg)?;

        // First component under equal scales: with both contracting
        // directions scaled by alpha2, the image's first component is
        //   (M r12c)_1 / alpha2 + At_11 w1 + At_12 w2
        //     + fz (g.u + q_lin eta + s_quad eta^2) / alpha2
        // where At = M A_u M^-1, fz = (M eta_feed)_1, and the w3 entry of
        // (M B_u)_1 vanishes by the mixing choice.
        let fz = chart.eta_feed.x - chart.rho * chart.eta_feed.y;
        let at11 = chart.a_u[(0, 0)] - chart.rho * chart.a_u[(1, 0)] + fz * chart.g.x;
        let at12 = chart.p12 + fz * (chart.rho * chart.g.x + chart.g.y);
        let cst = (chart.r12c.x - chart.rho * chart.r12c.y) / chart.alpha2;
        let qw3 = fz * chart.q_lin * chart.beta / chart.alpha2;
        let cw3 = fz * chart.s_quad * chart.beta * chart.beta / chart.alpha2;
        let mut x1_sup = 0.0f64;
        for iw1 in 0..n {
            for iw2 in 0..n {
                for iw3 in 0..n {
                    let w3 = coord(iw3);
                    let v = cst
                        + at11 * coord(iw1)
                        + at12 * coord(iw2)
                        + (qw3 + cw3 * w3) * w3;
                    x1_sup = x1_sup.max(v.abs());
                }
            }
        }
        rungs.push(DiagnosticRung {
            k,
            j: chart.j,
            mu1: placement.mu1,
            x1_sup,
            m1_2d: chart.m1_eff,
            m2_2d: chart.m2_eff,
        });
    }

    // Least-squares fit of x1_sup against C * k lambda^k.
    let lambda = base.lambda();
    let model = |k: u32| f64::from(k) * lambda.powi(k as i32);
    let num: f64 = rungs.iter().map(|r| r.x1_sup * model(r.k)).sum();
    let den: f64 = rungs.iter().map(|r| model(r.k) * model(r.k)).sum();
    let fit_c = num / den;
    let fit_residual = rungs
        .iter()
        .map(|r| {
            let m = fit_c * model(r.k);
            (r.x1_sup - m).abs() / m.abs()
        })
        .fold(0.0f64, f64::max);

    // Once the planar Jacobian magnitude passes 1, run the escape
    // experiment: a lattice of seeds iterated under the planar map. Area
    // expansion forbids attractors, so every orbit should blow out.
    let escape = rungs
        .iter()
        .find(|r| r.m2_2d.abs() > 1.0)
        .map(|r| {
            let mut escaped = 0;
            let mut seeds = 0;
            for iu in 0..5 {
                for iv in 0..5 {
                    // Slight offset keeps the lattice off the planar map's
                    // fixed points, whose orbits would be stuck forever.
                    let mut s = Vector2::new(
                        -0.9629 + 0.5 * f64::from(iu),
                        -0.9629 + 0.5 * f64::from(iv),
                    );
                    seeds += 1;
                    for _ in 0..20_000 {
                        if s.norm() > 1e6 {
                            escaped += 1;
                            break;
                        }
                        s = henon2d_step(r.m1_2d, r.m2_2d, s);
                    }
                }
            }
            EscapeDemo {
                k: r.k,
                m1: r.m1_2d,
                m2: r.m2_2d,
                seeds,
                escaped,
            }
        });

    Ok(Mu2PositiveReport {
        mu2,
        rungs,
        fit_c,
        fit_residual,
        escape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::HookFn;
    use approx::assert_relative_eq;

    fn cfg_of(fam: &ModelFamily, k: u32, j: Option<u32>, mu: MuVector) -> ReturnMapConfig {
        ReturnMapConfig::new(fam.clone(), k, j, mu).unwrap()
    }

    /// Shared bridge check: the folded evaluator against the raw
    /// composition carried through the chart coordinates.
    fn assert_bridges(chart: &RescalingChart, tol: f64) {
        let probes = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.8, -0.6, 0.4),
            Vector3::new(-1.2, 0.9, -1.0),
            Vector3::new(0.3, 1.4, 1.3),
        ];
        for w in probes {
            let via_chart = chart.apply(w).unwrap();
            let (x0, exit) = chart.to_unscaled(w);
            let raw = match chart.case {
                CaseTag::IIa => {
                    saddle_exit_cross(chart.family(), chart.k, chart.j, x0, exit).unwrap()
                }
                _ => {
                    let crm =
                        ComposedReturnMap::new(chart.family().clone(), chart.k, chart.j).unwrap();
                    crm.apply_cross(x0, exit).unwrap()
                }
            };
            let via_raw = chart.from_unscaled(raw.0, raw.1);
            let scale = via_chart.amax().max(1.0);
            assert!(
                (via_chart - via_raw).amax() <= tol * scale,
                "case {:?} k={} w={w:?}: chart {via_chart:?} vs raw {via_raw:?}",
                chart.case,
                chart.k,
            );
        }
    }

    #[test]
    fn case_i_centers_are_exact() {
        let cfg = cfg_of(
            &ModelFamily::case_i(),
            8,
            None,
            MuVector::new(1e-4, -0.05, 0.01),
        );
        let chart = RescalingChart::build(&cfg).unwrap();
        assert!(chart.r12c.amax() < 1e-25);
        assert_eq!(chart.q_lin, 0.0);
        assert_eq!(chart.scalar_star, 0.6);
        assert_bridges(&chart, 1e-11);
    }

    #[test]
    fn case_iia_centers_are_exact() {
        let cfg = cfg_of(
            &ModelFamily::case_iia(),
            8,
            Some(9),
            MuVector::new(2e-4, -0.05, 0.02),
        );
        let chart = RescalingChart::build(&cfg).unwrap();
        assert!(chart.r12c.amax() < 1e-22);
        assert!(chart.q_lin.abs() < 1e-22);
        assert_bridges(&chart, 1e-10);
    }

    #[test]
    fn case_iib_centers_are_exact() {
        let cfg = cfg_of(
            &ModelFamily::case_iib(),
            12,
            Some(9),
            MuVector::new(2e-4, -0.05, 0.02),
        );
        let chart = RescalingChart::build(&cfg).unwrap();
        assert!(chart.r12c.amax() < 1e-22);
        assert!(chart.q_lin.abs() < 1e-22);
        assert_bridges(&chart, 1e-10);
    }

    #[test]
    fn hooked_charts_reproduce_the_full_composition() {
        for case in [CaseTag::I, CaseTag::IIa, CaseTag::IIb] {
            let mut fam = ModelFamily::preset(case);
            let wave = HookFn::Wave {
                amplitude: 1e-3,
                wavenumber: 1.7,
            };
            fam.focus.hooks = FocusHooks::uniform(wave);
            fam.first.hooks = GlobalHooks::uniform(wave);
            if let Some(s) = fam.saddle.as_mut() {
                s.hooks = SaddleHooks::uniform(wave);
            }
            if let Some(t) = fam.second.as_mut() {
                t.hooks = GlobalHooks::uniform(wave);
            }
            // The heteroclinic cycle with the orientation-flipped second leg
            // opens a wider rescaled box, so its probes need a deeper chart
            // to stay inside the trust regions of the connecting maps.
            let k = if case == CaseTag::IIb { 12 } else { 8 };
            let j = fam.suggest_j(k);
            let cfg = cfg_of(&fam, k, j, MuVector::new(1e-4, -0.05, 0.01));
            let chart = RescalingChart::build(&cfg).unwrap();
            assert!(chart.raw.is_some());
            assert_bridges(&chart, 1e-9);
        }
    }

    #[test]
    fn case_i_twist_equals_its_prediction_exactly() {
        // For the homoclinic case the folded twist coefficient and the
        // closed-form prediction are the same polynomial in the block
        // entries, so they agree to rounding even at small k.
        let cfg = cfg_of(&ModelFamily::case_i(), 12, None, MuVector::new(0.0, -0.03, 0.0));
        let chart = RescalingChart::build(&cfg).unwrap();
        let eff = chart.effective();
        let pred = chart.predicted().unwrap();
        assert_relative_eq!(eff.m2, pred.m2, max_relative = 1e-12);
        assert_eq!(eff.m1, pred.m1);
    }

    #[test]
    fn constant_term_reduces_to_its_leading_form_on_a_stripped_family() {
        // With the connection anchors zeroed the folded constant collapses
        // to its leading term -d^2 gamma^2k mu1 exactly.
        let mut fam = ModelFamily::case_i();
        fam.first.target_anchor = Vector2::zeros();
        fam.first.source_anchor = 0.0;
        let k = 10;
        let gamma = fam.focus.gamma;
        let mu1 = 1e-12 * gamma.powi(-2 * k);
        let cfg = cfg_of(&fam, k as u32, None, MuVector::new(mu1, -1e-9, 0.0));
        let chart = RescalingChart::build(&cfg).unwrap();
        let d = fam.first.d;
        assert_relative_eq!(
            chart.effective().m1,
            -d * d * 1e-12,
            max_relative = 1e-6
        );
    }

    #[test]
    fn solver_places_the_homoclinic_case_on_target() {
        let base = ModelFamily::case_i();
        let target = HenonParams::new(0.0, 0.85, 0.7);
        let report = solve_mu_for_target(&base, 16, None, target, 0).unwrap();
        assert!(report.mu.mu2 < 0.0);
        // The Jacobian ratio 0.7/0.288 over 16 steps needs the rate backed
        // off by about ln(2.43)/16.
        assert!(report.mu.mu3 < -0.04 && report.mu.mu3 > -0.07, "{:?}", report.mu);
        assert!(report.residuals[1].abs() <= 1e-8);
        assert!(report.residuals[2].abs() <= 1e-8);
        // The effective twist coincides with the prediction for case I, and
        // the effective Jacobian converges at the ladder rate.
        assert_relative_eq!(report.effective.m2, 0.85, max_relative = 1e-10);
        assert!((report.effective.b - 0.7).abs() < 0.01);
    }

    #[test]
    fn solver_places_a_heteroclinic_case_on_target() {
        let base = ModelFamily::case_iib();
        let target = HenonParams::new(0.0, 0.85, -0.7);
        let report = solve_mu_for_target(&base, 14, None, target, 0).unwrap();
        assert_eq!(report.j, base.suggest_j(14).unwrap());
        assert!(report.residuals[1].abs() <= 1e-8);
        assert!(report.residuals[2].abs() <= 1e-8 * 0.7f64.max(1.0));
        let balance = rate_balance(&base, report.k, report.j);
        assert!((0.5..=2.0).contains(&balance.abs()), "balance {balance}");
    }

    #[test]
    fn solver_rejects_a_sign_infeasible_jacobian() {
        // The heteroclinic presets have a negative connection-determinant
        // product, the homoclinic preset a positive one.
        let err = solve_mu_for_target(
            &ModelFamily::case_iib(),
            14,
            None,
            HenonParams::new(0.0, 0.85, 0.7),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolveFailed(_)), "{err:?}");
        let err = solve_mu_for_target(
            &ModelFamily::case_i(),
            14,
            None,
            HenonParams::new(0.0, 0.85, -0.5),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolveFailed(_)), "{err:?}");
    }

    #[test]
    fn solved_parameters_shrink_with_the_passage_length() {
        let base = ModelFamily::case_i();
        let target = HenonParams::new(0.0, 0.85, 0.7);
        let norms: Vec<f64> = [12u32, 14, 16]
            .iter()
            .map(|&k| solve_mu_for_target(&base, k, None, target, 0).unwrap().mu.norm())
            .collect();
        assert!(norms[1] < norms[0] && norms[2] < norms[1], "{norms:?}");
    }

    #[test]
    fn deviation_ladder_shrinks_for_the_homoclinic_preset() {
        let reports = deviation_ladder(&ModelFamily::case_i(), &[8, 12, 16], 0, 2.0, 9).unwrap();
        assert!(reports[1].c0 < reports[0].c0);
        assert!(reports[2].c0 < reports[1].c0);
        assert!(reports[2].c0 < 0.05, "c0 = {}", reports[2].c0);
        // Pinned at the oscillation zero with mu3 = 0, the predicted
        // Jacobian is the connection determinant itself, every rung.
        for r in &reports {
            assert_relative_eq!(r.predicted.b, 0.288, max_relative = 1e-10);
            assert!(r.predicted.sin_term.abs() < 1e-8);
        }
    }

    #[test]
    fn flattening_diagnostic_sees_the_planar_collapse() {
        let report =
            mu2_positive_diagnostic(&ModelFamily::case_i(), 1e-6, &[8, 10, 12, 14], 1.5, 9)
                .unwrap();
        let lambda = 0.7f64;
        for pair in report.rungs.windows(2) {
            assert!(
                pair[1].m2_2d.abs() > pair[0].m2_2d.abs(),
                "planar Jacobian must grow: {:?}",
                report.rungs
            );
        }
        let ratios: Vec<f64> = report
            .rungs
            .iter()
            .map(|r| r.x1_sup / (f64::from(r.k) * lambda.powi(r.k as i32)))
            .collect();
        let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
            / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1.25, "x1 does not track k lambda^k: {ratios:?}");
        assert!(report.fit_residual < 0.2, "residual {}", report.fit_residual);
    }

    #[test]
    fn diagnostic_rejects_the_rotation_branch() {
        let err = mu2_positive_diagnostic(&ModelFamily::case_i(), -1e-6, &[8], 1.0, 5).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "mu2", .. }));
    }

    #[test]
    fn predictions_require_the_rotation_branch() {
        let cfg = cfg_of(&ModelFamily::case_i(), 8, None, MuVector::new(0.0, 1e-3, 0.0));
        let chart = RescalingChart::build(&cfg).unwrap();
        assert!(matches!(
            chart.predicted(),
            Err(Error::RotationBranchRequired { .. })
        ));
        assert!(chart.effective().sin_term.is_nan());
    }

    #[test]
    fn deep_charts_underflow_cleanly_instead_of_lying() {
        let cfg = cfg_of(&ModelFamily::case_i(), 1200, None, MuVector::new(0.0, -0.01, 0.0));
        let err = RescalingChart::build(&cfg).unwrap_err();
        assert!(matches!(err, Error::ScaleUnderflow { .. }), "{err:?}");
    }

    #[test]
    fn coordinates_round_trip() {
        let cfg = cfg_of(&ModelFamily::case_iib(), 8, Some(9), MuVector::new(0.0, -0.04, 0.0));
        let chart = RescalingChart::build(&cfg).unwrap();
        let w = Vector3::new(0.3, -1.1, 0.7);
        let (x0, exit) = chart.to_unscaled(w);
        assert!((chart.from_unscaled(x0, exit) - w).amax() < 1e-12);
    }

    #[test]
    fn config_validates_passage_lengths() {
        let fam = ModelFamily::case_i();
        assert!(matches!(
            ReturnMapConfig::new(fam.clone(), 3, None, MuVector::ZERO),
            Err(Error::InvalidParameter { name: "k", .. })
        ));
        assert!(matches!(
            ReturnMapConfig::new(fam.clone(), 8, Some(2), MuVector::ZERO),
            Err(Error::InvalidParameter { name: "j", .. })
        ));
        let fam2 = ModelFamily::case_iia();
        assert!(matches!(
            ReturnMapConfig::new(fam2.clone(), 8, None, MuVector::ZERO),
            Err(Error::InvalidParameter { name: "j", .. })
        ));
        assert!(ReturnMapConfig::new(fam2, 8, Some(9), MuVector::ZERO).is_ok());
    }
}
