//! Composition of the local passages and global connection maps of a
//! [`ModelFamily`] into the full return map, together with the analytic
//! structure extracted from it: leg-by-leg determinant factors, the
//! oscillating part of the derivative, closed-form predictions for the
//! limiting quadratic-map coefficients, and the rotation-parameter values
//! where the oscillation vanishes.
//!
//! Two evaluation forms are provided. The **forward** form
//! ([`ComposedReturnMap::apply`]) maps an entry-section state
//! `(x1, x2, y)` to the next entry-section state and is what orbit
//! iteration uses. The **cross** form ([`ComposedReturnMap::apply_cross`])
//! takes the contracting coordinates at entry together with the expanding
//! coordinate at *exit* — the pair in which the passage equations are
//! explicit — and returns the same pair one return later, solving the next
//! passage's implicit equation for the new exit coordinate. The rescaling
//! charts in [`crate::rescale`] are built in cross variables, so the cross
//! form is the reference their evaluators are tested against.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::belyakov::{BelyakovBlock, MAX_ITERATE};
use crate::error::{Error, Result};
use crate::family::{CaseTag, ModelFamily};
use crate::numeric::fd_jacobian3;

/// The return map of a realized family, for fixed passage lengths.
///
/// `k` counts iterations near the saddle-focus; `j` counts iterations near
/// the saddle (case II only, must be zero for case I).
#[derive(Debug, Clone)]
pub struct ComposedReturnMap {
    pub family: ModelFamily,
    pub k: u32,
    pub j: u32,
}

impl ComposedReturnMap {
    pub fn new(family: ModelFamily, k: u32, j: u32) -> Result<Self> {
        if k > MAX_ITERATE {
            return Err(Error::IterateCountTooLarge {
                k,
                max: MAX_ITERATE,
            });
        }
        if j > MAX_ITERATE {
            return Err(Error::IterateCountTooLarge {
                k: j,
                max: MAX_ITERATE,
            });
        }
        if family.case == CaseTag::I && j != 0 {
            return Err(Error::InvalidParameter {
                name: "j",
                value: f64::from(j),
                reason: "case I has no saddle passage",
            });
        }
        Ok(ComposedReturnMap { family, k, j })
    }

    fn check_section(
        leg: &'static str,
        x: Vector2<f64>,
        delta: f64,
        radius: f64,
    ) -> Result<()> {
        if !(x.norm() <= radius && delta.abs() <= radius) {
            return Err(Error::DomainEscape {
                leg,
                detail: format!(
                    "contracting offset {:.3e}, expanding deviation {:.3e}, radius {:.1e}",
                    x.norm(),
                    delta,
                    radius
                ),
            });
        }
        Ok(())
    }

    /// Forward form: one full return of the entry-section state
    /// `(x1, x2, y)`.
    pub fn apply(&self, state: Vector3<f64>) -> Result<Vector3<f64>> {
        let x0 = Vector2::new(state.x, state.y);
        let focus = &self.family.focus;
        let first = &self.family.first;
        let (x_k, y_k) = focus.iterate_forward(self.k, x0, state.z)?;
        let d1 = y_k - first.source_anchor;
        Self::check_section("first-global", x_k, d1, first.radius)?;
        let mid = first.apply(x_k, d1);
        if self.family.case == CaseTag::I {
            return Ok(mid);
        }
        let saddle = self.family.saddle.as_ref().expect("case II family");
        let second = self.family.second.as_ref().expect("case II family");
        let u0 = Vector2::new(mid.x, mid.y);
        let (u_j, v_j) = saddle.iterate_forward(self.j, u0, mid.z)?;
        let d2 = v_j - second.source_anchor;
        Self::check_section("second-global", u_j, d2, second.radius)?;
        Ok(second.apply(u_j, d2))
    }

    /// Cross form: from `(x_0, y_exit)` — contracting coordinates at entry,
    /// expanding coordinate at exit — to the same pair one return later.
    ///
    /// The final step solves the next passage's implicit equation for the
    /// new exit coordinate, so a fixed point of this map corresponds to a
    /// genuine periodic orbit of the forward map.
    pub fn apply_cross(&self, x0: Vector2<f64>, y_exit: f64) -> Result<(Vector2<f64>, f64)> {
        let focus = &self.family.focus;
        let first = &self.family.first;
        let (x_k, _entry_y) = focus.iterate_cross(self.k, x0, y_exit)?;
        let d1 = y_exit - first.source_anchor;
        Self::check_section("first-global", x_k, d1, first.radius)?;
        let mid = first.apply(x_k, d1);
        let (x_new, y_new) = if self.family.case == CaseTag::I {
            (Vector2::new(mid.x, mid.y), mid.z)
        } else {
            let saddle = self.family.saddle.as_ref().expect("case II family");
            let second = self.family.second.as_ref().expect("case II family");
            let u0 = Vector2::new(mid.x, mid.y);
            let v_j = saddle.solve_exit(self.j, u0, mid.z)?;
            let (u_j, _) = saddle.iterate_cross(self.j, u0, v_j)?;
            let d2 = v_j - second.source_anchor;
            Self::check_section("second-global", u_j, d2, second.radius)?;
            let out = second.apply(u_j, d2);
            (Vector2::new(out.x, out.y), out.z)
        };
        let y_exit_next = focus.solve_exit(self.k, x_new, y_new)?;
        Ok((x_new, y_exit_next))
    }

    /// Central-difference Jacobian of the forward form.
    pub fn fd_jacobian(&self, state: Vector3<f64>) -> Result<Matrix3<f64>> {
        fd_jacobian3(|s| self.apply(s), state, 1e-7)
    }

    /// Determinant factorization of the forward map along its legs,
    /// evaluated on the orbit of `state`.
    ///
    /// Local legs contribute the determinants of the linear model (exact
    /// when hooks are off); global legs contribute the Jacobian determinant
    /// at the visited point, which for a tangency row depends on where the
    /// orbit crosses. The product equals the determinant of
    /// [`Self::fd_jacobian`] up to the hook remainders.
    pub fn leg_dets(&self, state: Vector3<f64>) -> Result<Vec<(&'static str, f64)>> {
        let focus = &self.family.focus;
        let first = &self.family.first;
        let block = &focus.block;
        let det_a1 = block.lambda() * block.lambda() - block.mu2();
        let x0 = Vector2::new(state.x, state.y);
        let (x_k, y_k) = focus.iterate_forward(self.k, x0, state.z)?;
        let d1 = y_k - first.source_anchor;
        let mut legs = vec![
            ("focus-contraction", det_a1.powi(self.k as i32)),
            ("focus-expansion", focus.gamma.powi(self.k as i32)),
            ("first-global", first.jacobian(x_k, d1).determinant()),
        ];
        if self.family.case != CaseTag::I {
            let saddle = self.family.saddle.as_ref().expect("case II family");
            let second = self.family.second.as_ref().expect("case II family");
            let mid = first.apply(x_k, d1);
            let u0 = Vector2::new(mid.x, mid.y);
            let (u_j, v_j) = saddle.iterate_forward(self.j, u0, mid.z)?;
            let d2 = v_j - second.source_anchor;
            legs.push((
                "saddle-passage",
                (saddle.nu1 * saddle.nu2 * saddle.gamma2).powi(self.j as i32),
            ));
            legs.push(("second-global", second.jacobian(u_j, d2).determinant()));
        }
        Ok(legs)
    }
}

// ---------------------------------------------------------------------------
// Oscillation structure of the derivative
// ---------------------------------------------------------------------------

/// The oscillating combination that the linear-in-`x` part of the return
/// map's critical row reduces to, decomposed as a sinusoid in the passage
/// length.
///
/// The combination is `e C_k + f S_k` where `C_k`, `S_k` are the entry
/// functions of the contracting block; on the rotation branch (`mu2 < 0`)
/// this equals `amplitude * sin(k phi + psi)` **exactly**, with `phi` the
/// per-step rotation angle.
#[derive(Debug, Clone)]
pub struct OscillationTerms {
    pub e: f64,
    pub f: f64,
    /// Cosine coefficient: `l1 = e`.
    pub l1: f64,
    /// Sine coefficient: `l2 = -f / sqrt(-mu2)`.
    pub l2: f64,
    pub amplitude: f64,
    pub psi: f64,
    /// Per-step rotation angle of the block.
    pub phi: f64,
    block: BelyakovBlock,
}

impl OscillationTerms {
    /// `e C_k + f S_k`, evaluated through the block's entry functions.
    pub fn combo(&self, k: u32) -> Result<f64> {
        let (c, s) = self.block.ck_sk(k)?;
        Ok(self.e * c + self.f * s)
    }

    /// `amplitude * sin(k phi + psi)` — identical to [`Self::combo`] on the
    /// rotation branch, up to roundoff.
    pub fn sinusoid(&self, k: u32) -> f64 {
        self.amplitude * (f64::from(k) * self.phi + self.psi).sin()
    }
}

/// Build the oscillation terms of a family at rotation parameter `mu2 < 0`,
/// for a saddle passage of length `j` (ignored in case I, which has no
/// saddle leg).
///
/// Every linear-in-`x` term of the return map's critical row threads the
/// `k`-th power of the contracting block exactly once, so it has the form
/// `r^T A1^k q` for `j`-dependent constant vectors `r`, `q` — and any such
/// form collapses onto the single sinusoid `l_k (e C_k + f S_k)` with
///
/// ```text
/// e = r1 q1 + r2 q2,    f = r1 q2 + mu2 r2 q1.
/// ```
///
/// The cases differ only in which vectors feed the block (`N` is the
/// diagonal saddle passage `diag(nu1^j, nu2^j)` and `Abar` the
/// corner-reduced connection matrices):
///
/// * **I**: `r = c`, `q = b` of the single connection, which reduces to
///   `e = rho c1 + c2`, `f = c1 + rho mu2 c2` with `rho = b1/b2`;
/// * **IIa**: `r = Abar12^T N c21`, `q = a21 N b12 + d1 gamma2^j b21`;
/// * **IIb**: `r = a12^T N c21 + d2 gamma2^j c12`, `q = Abar21 N b12`.
pub fn oscillation_terms(fam: &ModelFamily, mu2: f64, j: u32) -> Result<OscillationTerms> {
    if mu2 >= 0.0 {
        return Err(Error::RotationBranchRequired { mu2 });
    }
    let block = BelyakovBlock::new(fam.lambda(), mu2)?;
    let (e, f) = match fam.case {
        CaseTag::I => {
            let t1 = &fam.first;
            let rho = t1.b.x / t1.b.y;
            (rho * t1.c.x + t1.c.y, t1.c.x + rho * mu2 * t1.c.y)
        }
        CaseTag::IIa | CaseTag::IIb => {
            let t12 = &fam.first;
            let t21 = fam.second.as_ref().expect("case II family");
            let s = fam.saddle.as_ref().expect("case II family");
            let n1 = s.nu1.powi(j as i32);
            let n2 = s.nu2.powi(j as i32);
            let g2j = s.gamma2.powi(j as i32);
            let nc21 = Vector2::new(n1 * t21.c.x, n2 * t21.c.y);
            let nb12 = Vector2::new(n1 * t12.b.x, n2 * t12.b.y);
            let (r, q) = if fam.case == CaseTag::IIa {
                (
                    t12.a_reduced().transpose() * nc21,
                    t21.a * nb12 + t12.d * g2j * t21.b,
                )
            } else {
                (
                    t12.a.transpose() * nc21 + t21.d * g2j * t12.c,
                    t21.a_reduced() * nb12,
                )
            };
            (r.x * q.x + r.y * q.y, r.x * q.y + mu2 * r.y * q.x)
        }
    };
    let s = (-mu2).sqrt();
    let l1 = e;
    let l2 = -f / s;
    let amplitude = l1.hypot(l2);
    let psi = l1.atan2(l2);
    let phi = block.phase()?.value;
    Ok(OscillationTerms {
        e,
        f,
        l1,
        l2,
        amplitude,
        psi,
        phi,
        block,
    })
}

// ---------------------------------------------------------------------------
// Predicted limiting coefficients
// ---------------------------------------------------------------------------

/// Closed-form prediction for the twist coefficient of the limiting
/// quadratic map at passage lengths `(k, j)`, using the family's realized
/// rates.
///
/// All three cases share the structure `prefactor * l_k * gamma^k * combo`
/// with `l_k = (lambda^2 - mu2)^(k/2)`. In case I the prefactor is `b2`;
/// in the two-saddle cases the passage factors already live inside the
/// oscillation vectors, so the prefactor is 1 and the prediction is the
/// critical row's exact linear-in-`x` response.
pub fn predicted_m2(fam: &ModelFamily, k: u32, j: u32) -> Result<f64> {
    let mu2 = fam.focus.block.mu2();
    let terms = oscillation_terms(fam, mu2, j)?;
    let combo = terms.combo(k)?;
    let lk = fam.focus.block.scale_pow(k);
    let gk = fam.focus.gamma.powi(k as i32);
    let prefactor = match fam.case {
        CaseTag::I => fam.first.b.y,
        CaseTag::IIa | CaseTag::IIb => 1.0,
    };
    Ok(prefactor * lk * gk * combo)
}

/// Closed-form prediction for the Jacobian of the limiting quadratic map
/// at passage lengths `(k, j)`: the product of the connection-map
/// determinants with the local volume factors.
pub fn predicted_b(fam: &ModelFamily, k: u32, j: u32) -> f64 {
    let l = fam.lambda();
    let det_a1_k = (l * l - fam.focus.block.mu2()).powi(k as i32);
    let gk = fam.focus.gamma.powi(k as i32);
    match fam.case {
        CaseTag::I => fam.first.det_with_corner(0.0) * det_a1_k * gk,
        CaseTag::IIa | CaseTag::IIb => {
            let t12 = &fam.first;
            let t21 = fam.second.as_ref().expect("case II family");
            let s = fam.saddle.as_ref().expect("case II family");
            let (j12, j21) = if fam.case == CaseTag::IIa {
                (t12.det_with_corner(t12.d), t21.det_with_corner(0.0))
            } else {
                (t12.det_with_corner(0.0), t21.det_with_corner(t21.d))
            };
            j12 * j21
                * det_a1_k
                * gk
                * (s.nu1 * s.nu2 * s.gamma2).powi(j as i32)
        }
    }
}

// ---------------------------------------------------------------------------
// Zeros of the oscillation in the rotation parameter
// ---------------------------------------------------------------------------

/// Find the `branch_index`-th zero (counted from small rotation) of the
/// oscillating combination at passage length `k`, scanning the rotation
/// parameter over the whole contraction-preserving range `mu2 in
/// (-(1 - lambda^2), 0)`.
///
/// For the two-saddle cases the saddle passage length is taken as the
/// balanced choice [`ModelFamily::suggest_j`] for this `k`.
///
/// Returns the located `mu2 < 0`. At such a zero the twist coefficient of
/// the limiting map vanishes regardless of the remaining parameters, which
/// is what makes these points organizing centers for parameter placement.
pub fn find_mu2_zero(fam: &ModelFamily, k: u32, branch_index: usize) -> Result<f64> {
    let j = match fam.case {
        CaseTag::I => 0,
        CaseTag::IIa | CaseTag::IIb => fam.suggest_j(k).expect("case II has a saddle"),
    };
    find_mu2_zero_with_j(fam, k, j, branch_index)
}

/// Zero finder with an explicit saddle passage length, for callers that
/// pin `j` independently of the balanced suggestion.
pub(crate) fn find_mu2_zero_with_j(
    fam: &ModelFamily,
    k: u32,
    j: u32,
    branch_index: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            reason: "the oscillation needs at least one passage step",
        });
    }
    let l = fam.lambda();
    let s_max = (1.0 - l * l).sqrt() * (1.0 - 1e-6);
    let s_lo = s_max * 1e-4;
    let combo = |s: f64| -> f64 {
        oscillation_terms(fam, -(s * s), j)
            .and_then(|t| t.combo(k))
            .expect("rotation branch holds on the scan range")
    };
    let n = (8 * k as usize).max(200);
    let mut zeros = Vec::new();
    let mut prev_s = s_lo;
    let mut prev_g = combo(prev_s);
    for i in 1..=n {
        let s = s_lo + (s_max - s_lo) * (i as f64) / (n as f64);
        let g = combo(s);
        if prev_g == 0.0 {
            zeros.push(prev_s);
        } else if g != 0.0 && prev_g.signum() != g.signum() {
            zeros.push(crate::numeric::illinois(combo, prev_s, s, 200)?);
        }
        prev_s = s;
        prev_g = g;
    }
    match zeros.get(branch_index) {
        Some(&s) => Ok(-(s * s)),
        None => Err(Error::ZeroNotFound {
            index: branch_index,
            found: zeros.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{FocusHooks, GlobalHooks, HookFn, MuVector, SaddleHooks};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn entry_state(map: &ComposedReturnMap, x0: Vector2<f64>, y_exit: f64) -> Vector3<f64> {
        // Entry state whose k-step passage exits at exactly `y_exit` when
        // hooks are off.
        let y0 = y_exit / map.family.focus.gamma.powi(map.k as i32);
        Vector3::new(x0.x, x0.y, y0)
    }

    #[test]
    fn composition_matches_manual_leg_chain() {
        let fam = ModelFamily::case_iia()
            .at(MuVector::new(1e-3, -0.02, 0.1))
            .unwrap();
        let map = ComposedReturnMap::new(fam.clone(), 3, 2).unwrap();
        let x0 = Vector2::new(0.01, -0.015);
        let state = entry_state(&map, x0, 0.62);

        // By hand: linear focus passage, T12, diagonal saddle passage, T21.
        let x_k = fam.focus.block.a1_pow(3).unwrap() * x0;
        let mid = fam.first.apply(x_k, 0.62 - fam.first.source_anchor);
        let saddle = fam.saddle.as_ref().unwrap();
        let u_j = Vector2::new(
            saddle.nu1.powi(2) * mid.x,
            saddle.nu2.powi(2) * mid.y,
        );
        let v_j = saddle.gamma2.powi(2) * mid.z;
        let second = fam.second.as_ref().unwrap();
        let expected = second.apply(u_j, v_j - second.source_anchor);

        let got = map.apply(state).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-13);
    }

    #[test]
    fn cross_form_agrees_with_forward_form() {
        for hooked in [false, true] {
            let mut base = ModelFamily::case_i();
            if hooked {
                let h = HookFn::Wave {
                    amplitude: 1e-3,
                    wavenumber: 1.7,
                };
                base.focus.hooks = FocusHooks::uniform(h);
                base.first.hooks = GlobalHooks::uniform(h);
            }
            let fam = base.at(MuVector::new(1e-4, -0.03, 0.05)).unwrap();
            let map = ComposedReturnMap::new(fam.clone(), 8, 0).unwrap();
            let x0 = Vector2::new(0.02, -0.01);
            let y_exit = fam.focus.solve_exit(8, x0, 8e-3).unwrap();
            let forward = map.apply(Vector3::new(x0.x, x0.y, 8e-3)).unwrap();
            let (x_new, y_exit_next) = map.apply_cross(x0, y_exit).unwrap();
            assert_relative_eq!(x_new.x, forward.x, max_relative = 1e-12);
            assert_relative_eq!(x_new.y, forward.y, max_relative = 1e-12);
            let y_exit_check = fam
                .focus
                .solve_exit(8, Vector2::new(forward.x, forward.y), forward.z)
                .unwrap();
            assert_relative_eq!(y_exit_next, y_exit_check, max_relative = 1e-12);
        }
    }

    #[test]
    fn case_ii_cross_form_agrees_with_forward_form() {
        for case in [CaseTag::IIa, CaseTag::IIb] {
            let fam = ModelFamily::preset(case)
                .at(MuVector::new(2e-4, -0.04, 0.3))
                .unwrap();
            let map = ComposedReturnMap::new(fam.clone(), 6, 7).unwrap();
            let x0 = Vector2::new(0.015, -0.01);
            let state = entry_state(&map, x0, 0.85);
            let forward = map.apply(state).unwrap();
            let (x_new, y_next) = map.apply_cross(x0, 0.85).unwrap();
            assert_relative_eq!(x_new.x, forward.x, max_relative = 1e-12);
            assert_relative_eq!(
                y_next,
                fam.focus.gamma.powi(6) * forward.z,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn leg_determinants_multiply_to_the_full_jacobian_determinant() {
        // Case I, hooks off: the factorization is exact, finite differences
        // supply the reference.
        let fam = ModelFamily::case_i()
            .at(MuVector::new(0.0, -0.02, 0.0))
            .unwrap();
        let map = ComposedReturnMap::new(fam, 6, 0).unwrap();
        let state = entry_state(&map, Vector2::new(0.01, -0.02), 0.55);
        let legs = map.leg_dets(state).unwrap();
        assert_eq!(legs.len(), 3);
        let product: f64 = legs.iter().map(|(_, d)| d).product();
        let fd = map.fd_jacobian(state).unwrap().determinant();
        assert_relative_eq!(product, fd, max_relative = 1e-6);

        let fam = ModelFamily::case_iia()
            .at(MuVector::new(0.0, -0.02, 0.2))
            .unwrap();
        let map = ComposedReturnMap::new(fam, 6, 7).unwrap();
        let state = entry_state(&map, Vector2::new(0.01, -0.02), 0.85);
        let legs = map.leg_dets(state).unwrap();
        assert_eq!(legs.len(), 5);
        let product: f64 = legs.iter().map(|(_, d)| d).product();
        let fd = map.fd_jacobian(state).unwrap().determinant();
        assert_relative_eq!(product, fd, max_relative = 1e-6);
    }

    #[test]
    fn repeated_evaluation_is_bit_reproducible() {
        let mk = || {
            let mut base = ModelFamily::case_iia();
            let h = HookFn::Wave {
                amplitude: 5e-4,
                wavenumber: 2.3,
            };
            base.focus.hooks = FocusHooks::uniform(h);
            base.saddle.as_mut().unwrap().hooks = SaddleHooks::uniform(h);
            let fam = base.at(MuVector::new(1e-4, -0.05, 0.25)).unwrap();
            ComposedReturnMap::new(fam, 5, 6).unwrap()
        };
        let (a, b) = (mk(), mk());
        for i in 0..5 {
            let x0 = Vector2::new(0.002 * f64::from(i), -0.001);
            let state = entry_state(&a, x0, 0.8 + 0.01 * f64::from(i));
            let ra = a.apply(state).unwrap();
            let rb = b.apply(state).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn escape_from_the_section_is_reported_with_its_leg() {
        let fam = ModelFamily::case_i().at(MuVector::ZERO).unwrap();
        let map = ComposedReturnMap::new(fam, 4, 0).unwrap();
        // Exit coordinate lands far outside the chart radius around the
        // connection point.
        let state = entry_state(&map, Vector2::new(0.01, 0.0), 5.0);
        match map.apply(state) {
            Err(Error::DomainEscape { leg, .. }) => assert_eq!(leg, "first-global"),
            other => panic!("expected domain escape, got {other:?}"),
        }
    }

    #[test]
    fn oscillation_combo_is_exactly_a_sinusoid() {
        for case in [CaseTag::I, CaseTag::IIa, CaseTag::IIb] {
            let fam = ModelFamily::preset(case);
            let j = fam.suggest_j(12).unwrap_or(0);
            let terms = oscillation_terms(&fam, -0.04, j).unwrap();
            for k in 1..40 {
                let combo = terms.combo(k).unwrap();
                assert_abs_diff_eq!(
                    combo,
                    terms.sinusoid(k),
                    epsilon = 1e-11 * terms.amplitude
                );
            }
        }
    }

    #[test]
    fn oscillation_requires_the_rotation_branch() {
        let fam = ModelFamily::case_i();
        assert!(matches!(
            oscillation_terms(&fam, 0.01, 0),
            Err(Error::RotationBranchRequired { .. })
        ));
        assert!(matches!(
            oscillation_terms(&fam, 0.0, 0),
            Err(Error::RotationBranchRequired { .. })
        ));
    }

    #[test]
    fn predicted_jacobian_is_independent_of_the_rotation_parameter() {
        // The realized expansion rate absorbs |lambda^2 - mu2| exactly, so
        // the predicted Jacobian depends only on mu3.
        let base = ModelFamily::case_i();
        let b1 = predicted_b(&base.at(MuVector::new(0.0, -0.03, 0.1)).unwrap(), 6, 0);
        let b2 = predicted_b(&base.at(MuVector::new(0.0, -0.08, 0.1)).unwrap(), 6, 0);
        assert_relative_eq!(b1, b2, max_relative = 1e-13);
        // And matches the closed form J_T1 * (lambda^2 gamma_base (1-mu3))^k.
        assert_relative_eq!(b1, 0.288 * 0.9f64.powi(6), max_relative = 1e-12);
    }

    #[test]
    fn rotation_zeros_sit_near_the_tangent_lattice() {
        // For case I the zeros of the combo lie near
        // sqrt(-mu2) = lambda tan(m pi / k), m = 1, 2, ...
        let fam = ModelFamily::case_i();
        let k = 20;
        let mut last_s = 0.0;
        for m in 0..3usize {
            let mu2 = find_mu2_zero(&fam, k, m).unwrap();
            assert!(mu2 < 0.0);
            let s = (-mu2).sqrt();
            let expected = 0.7 * ((m as f64 + 1.0) * std::f64::consts::PI / f64::from(k)).tan();
            assert_relative_eq!(s, expected, max_relative = 0.1);
            assert!(s > last_s, "zeros must come out ordered");
            last_s = s;
            let terms = oscillation_terms(&fam, mu2, 0).unwrap();
            assert!(terms.combo(k).unwrap().abs() <= 1e-8 * terms.amplitude);
        }
    }

    #[test]
    fn rotation_zeros_exist_for_case_ii_and_run_out_eventually() {
        for case in [CaseTag::IIa, CaseTag::IIb] {
            let fam = ModelFamily::preset(case);
            let mu2 = find_mu2_zero(&fam, 16, 0).unwrap();
            let j = fam.suggest_j(16).unwrap();
            let terms = oscillation_terms(&fam, mu2, j).unwrap();
            assert!(terms.combo(16).unwrap().abs() <= 1e-8 * terms.amplitude);
        }
        let fam = ModelFamily::case_i();
        match find_mu2_zero(&fam, 6, 500) {
            Err(Error::ZeroNotFound { index, found }) => {
                assert_eq!(index, 500);
                assert!(found < 500);
            }
            other => panic!("expected ZeroNotFound, got {other:?}"),
        }
    }

    #[test]
    fn passage_length_caps_are_enforced() {
        let fam = ModelFamily::case_i();
        assert!(matches!(
            ComposedReturnMap::new(fam.clone(), MAX_ITERATE + 1, 0),
            Err(Error::IterateCountTooLarge { .. })
        ));
        assert!(matches!(
            ComposedReturnMap::new(fam, 4, 2),
            Err(Error::InvalidParameter { name: "j", .. })
        ));
    }
}
