//! Orbit iteration, Lyapunov spectra, and attractor classification.
//!
//! Everything here works through the [`Map3`] trait, so the same estimators
//! and the same decision table serve both the quadratic map itself and the
//! rescaled return maps that converge to it.
//!
//! The classifier's "lorenz-candidate" label is a desk-scale surrogate, not
//! a proof: a chaotic orbit whose top two exponents do not contract area
//! (`L1 + L2 >= -0.01`), whose third direction contracts strongly, whose
//! exponent sum matches the known volume contraction, and whose bounding
//! box contains a saddle fixed point with a one-dimensional unstable
//! direction. Cells that fail a sub-test stay "chaotic"; cells that cannot
//! be decided are flagged, never silently promoted.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::henon::HenonParams;
use crate::numeric::{fd_jacobian3, newton3};
use crate::rescale::RescalingChart;

/// Default escape radius: an orbit farther than this from the origin is
/// treated as gone for good (the quadratic tail then grows doubly
/// exponentially).
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

/// A three-dimensional map that can be iterated, differentiated, and
/// interrogated for the structural hints the classifier uses.
pub trait Map3: Sync {
    /// One application. An error means the point left the map's domain.
    fn apply(&self, x: Vector3<f64>) -> Result<Vector3<f64>>;

    /// Jacobian at a point; central finite differences by default.
    fn jacobian(&self, x: Vector3<f64>) -> Result<Matrix3<f64>> {
        fd_jacobian3(|p| self.apply(p), x, 1e-6)
    }

    /// Fixed points the map knows how to locate, if any.
    fn fixed_points_hint(&self) -> Vec<Vector3<f64>> {
        Vec::new()
    }

    /// Exact log-volume contraction per step, if it is constant and known.
    fn log_det_hint(&self) -> Option<f64> {
        None
    }
}

impl Map3 for HenonParams {
    fn apply(&self, x: Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.step(x))
    }

    fn jacobian(&self, x: Vector3<f64>) -> Result<Matrix3<f64>> {
        Ok(HenonParams::jacobian(self, x))
    }

    fn fixed_points_hint(&self) -> Vec<Vector3<f64>> {
        self.fixed_points().into_iter().map(|f| f.point).collect()
    }

    fn log_det_hint(&self) -> Option<f64> {
        (self.b != 0.0).then(|| self.b.abs().ln())
    }
}

impl Map3 for RescalingChart {
    fn apply(&self, x: Vector3<f64>) -> Result<Vector3<f64>> {
        RescalingChart::apply(self, x)
    }

    /// Newton-refined fixed points seeded from the limiting map's.
    fn fixed_points_hint(&self) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        for fp in self.effective().henon().fixed_points() {
            let residual = |w: Vector3<f64>| Ok(RescalingChart::apply(self, w)? - w);
            if let Ok(root) = newton3(residual, fp.point, 1e-12, 50) {
                out.push(root);
            }
        }
        out
    }

    // No log_det_hint: the chart's Jacobian determinant is only constant in
    // the limit, so the exact-sum integrity check does not apply to it.
}

// ---------------------------------------------------------------------------
// Orbits
// ---------------------------------------------------------------------------

/// Tail of an orbit after a transient, or the news that it escaped.
#[derive(Debug, Clone)]
pub struct OrbitSample {
    /// Retained post-transient points (possibly truncated by divergence).
    pub points: Vec<Vector3<f64>>,
    /// Iteration index (counting from the seed) at which the orbit left the
    /// escape radius, if it did.
    pub diverged_at: Option<u64>,
}

/// Iterate a map, discard `n_transient` steps, and keep the next `n_keep`
/// points. Divergence is reported in the sample rather than as an error.
pub fn iterate_orbit_map(
    map: &dyn Map3,
    s0: Vector3<f64>,
    n_transient: u64,
    n_keep: usize,
) -> OrbitSample {
    let mut x = s0;
    let mut points = Vec::with_capacity(n_keep);
    for i in 0..n_transient + n_keep as u64 {
        if i >= n_transient {
            points.push(x);
            if points.len() == n_keep {
                break;
            }
        }
        match map.apply(x) {
            Ok(next) if next.norm() <= DEFAULT_ESCAPE_RADIUS => x = next,
            _ => {
                return OrbitSample {
                    points,
                    diverged_at: Some(i + 1),
                };
            }
        }
    }
    OrbitSample {
        points,
        diverged_at: None,
    }
}

/// [`iterate_orbit_map`] for the quadratic map.
pub fn iterate_orbit(
    params: HenonParams,
    s0: Vector3<f64>,
    n_transient: u64,
    n_keep: usize,
) -> OrbitSample {
    iterate_orbit_map(&params, s0, n_transient, n_keep)
}

// ---------------------------------------------------------------------------
// Lyapunov spectra
// ---------------------------------------------------------------------------

/// Lyapunov spectrum of one orbit, by two independent estimators.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyapunovResult {
    /// Exponents in descending order (nats per iteration), from per-step
    /// QR re-orthonormalization of a tangent frame.
    pub exponents: [f64; 3],
    /// The same exponents from the growth rates of 1-, 2- and 3-dimensional
    /// tangent volumes, propagated separately from the QR frame.
    pub volume_exponents: [f64; 3],
    pub n_iterations: u64,
    /// Largest componentwise drift of the running estimate over the last
    /// quarter of the run.
    pub convergence_estimate: f64,
}

impl LyapunovResult {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// Largest componentwise gap between the two estimators.
    pub fn estimator_gap(&self) -> f64 {
        (0..3)
            .map(|i| (self.exponents[i] - self.volume_exponents[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Lyapunov spectrum along the orbit of `s0` over `n` iterations.
///
/// A tangent frame is re-orthonormalized every step (modified Gram-Schmidt)
/// and the log diagonal growth accumulated; in parallel, a single tangent
/// vector, an orthonormal pair, and the running log-determinant give the
/// volume-growth estimates of `L1`, `L1+L2`, `L1+L2+L3`. The two
/// estimators share the orbit but no tangent data.
pub fn lyapunov_spectrum_map(
    map: &dyn Map3,
    s0: Vector3<f64>,
    n: u64,
    escape_radius: f64,
) -> Result<LyapunovResult> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "the spectrum needs at least one iteration",
        });
    }
    let mut x = s0;
    let mut q = Matrix3::<f64>::identity();
    let mut qr_sums = [0.0f64; 3];
    // Deliberately generic directions, shared with nothing above.
    let mut v1 = Vector3::new(0.6, -0.48, 0.64).normalize();
    let mut p1 = Vector3::new(0.48, 0.8, -0.36).normalize();
    let mut p2 = {
        let raw = Vector3::new(-0.2, 0.5, 0.9);
        (raw - p1 * p1.dot(&raw)).normalize()
    };
    let mut vol_sums = [0.0f64; 3];
    let mut checkpoint = [0.0f64; 3];
    let escaped = |i: u64| Error::OrbitDiverged { index: i };

    for i in 0..n {
        let j = map.jacobian(x).map_err(|_| escaped(i))?;

        // QR frame.
        let w = j * q;
        let mut cols = [w.column(0).into_owned(), w.column(1).into_owned(), w.column(2).into_owned()];
        for c in 0..3 {
            for prev in 0..c {
                let proj = q.column(prev).dot(&cols[c]);
                cols[c] -= q.column(prev).into_owned() * proj;
            }
            let r = cols[c].norm();
            qr_sums[c] += r.ln();
            q.set_column(c, &(cols[c] / r));
        }

        // Volume frames.
        let u = j * v1;
        let g1 = u.norm();
        vol_sums[0] += g1.ln();
        v1 = u / g1;
        let a = j * p1;
        let b = j * p2;
        vol_sums[1] += a.cross(&b).norm().ln();
        p1 = a / a.norm();
        p2 = {
            let t = b - p1 * p1.dot(&b);
            t / t.norm()
        };
        vol_sums[2] += j.determinant().abs().ln();

        x = map.apply(x).map_err(|_| escaped(i))?;
        if !(x.norm() <= escape_radius) {
            return Err(escaped(i));
        }
        if 4 * (i + 1) == 3 * n {
            let steps = (i + 1) as f64;
            checkpoint = qr_sums.map(|s| s / steps);
        }
    }

    let nf = n as f64;
    let mut exponents = qr_sums.map(|s| s / nf);
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut volume_exponents = [
        vol_sums[0] / nf,
        (vol_sums[1] - vol_sums[0]) / nf,
        (vol_sums[2] - vol_sums[1]) / nf,
    ];
    volume_exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let convergence_estimate = (0..3)
        .map(|i| (exponents[i] - checkpoint[i]).abs())
        .fold(0.0, f64::max);
    Ok(LyapunovResult {
        exponents,
        volume_exponents,
        n_iterations: n,
        convergence_estimate,
    })
}

/// [`lyapunov_spectrum_map`] for the quadratic map with the default escape
/// radius.
pub fn lyapunov_spectrum(params: HenonParams, s0: Vector3<f64>, n: u64) -> Result<LyapunovResult> {
    lyapunov_spectrum_map(&params, s0, n, DEFAULT_ESCAPE_RADIUS)
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// What an orbit settles on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Diverged,
    FixedPoint,
    Periodic,
    InvariantCurve,
    Chaotic,
    LorenzCandidate,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Label::Diverged => "diverged",
            Label::FixedPoint => "fixed-point",
            Label::Periodic => "periodic",
            Label::InvariantCurve => "invariant-curve",
            Label::Chaotic => "chaotic",
            Label::LorenzCandidate => "lorenz-candidate",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "diverged" => Label::Diverged,
            "fixed-point" => Label::FixedPoint,
            "periodic" => Label::Periodic,
            "invariant-curve" => Label::InvariantCurve,
            "chaotic" => Label::Chaotic,
            "lorenz-candidate" => Label::LorenzCandidate,
            other => return Err(Error::Config(format!("unknown label `{other}`"))),
        })
    }
}

/// Run lengths, thresholds, and seeds for [`classify_map`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Protocol {
    pub n_transient: u64,
    pub n_lyapunov: u64,
    /// Post-transient points kept for the bounding box and period search.
    pub n_collect: usize,
    pub escape_radius: f64,
    pub fixed_point_tol: f64,
    pub max_period: u32,
    /// Half-width of the band around zero within which the top exponent
    /// counts as neutral.
    pub neutral_band: f64,
    /// Floor on `L1 + L2` for the candidate label: the top two directions
    /// together must not contract area beyond this.
    pub pair_sum_floor: f64,
    /// Ceiling on `L3` for the candidate label: the third direction must
    /// contract at least this strongly.
    pub contraction_floor: f64,
    /// Allowed gap between the exponent sum and the known log-volume
    /// contraction.
    pub sum_match_tol: f64,
    /// Allowed componentwise gap between the two spectrum estimators.
    pub estimator_agreement: f64,
    pub seeds: [[f64; 3]; 2],
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            n_transient: 10_000,
            n_lyapunov: 1_000_000,
            n_collect: 2_048,
            escape_radius: DEFAULT_ESCAPE_RADIUS,
            fixed_point_tol: 1e-8,
            max_period: 64,
            neutral_band: 0.005,
            pair_sum_floor: -0.01,
            contraction_floor: -0.01,
            sum_match_tol: 1e-3,
            estimator_agreement: 1e-2,
            seeds: [[0.1, 0.1, 0.1], [0.12, 0.09, 0.11]],
        }
    }
}

impl Protocol {
    /// Shorter run lengths for wide parameter sweeps; thresholds unchanged.
    pub fn screening() -> Self {
        Protocol {
            n_transient: 2_000,
            n_lyapunov: 100_000,
            n_collect: 1_024,
            ..Protocol::default()
        }
    }
}

/// Outcome of classifying one map under one protocol.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub label: Label,
    /// Detected period for `periodic` (1 for `fixed-point`).
    pub period: Option<u32>,
    /// Spectrum of the first seed's orbit; absent when it diverged.
    pub lyapunov: Option<LyapunovResult>,
    pub seed: [f64; 3],
    /// Everything noteworthy that does not change the label: "ambiguous",
    /// "seed-sensitive", "estimator-disagreement", "sum-mismatch",
    /// "volume-expanding".
    pub flags: Vec<String>,
}

/// One grid cell's worth of classification.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationCell {
    pub params: HenonParams,
    #[serde(flatten)]
    pub result: Classification,
}

/// Classify what the orbit of `params` settles on. Never errors: numerical
/// failures become the `diverged` label with an explanatory flag.
pub fn classify(params: HenonParams, protocol: &Protocol) -> ClassificationCell {
    ClassificationCell {
        params,
        result: classify_map(&params, protocol),
    }
}

/// Classify a map by the decision table, running both protocol seeds and
/// flagging disagreement.
///
/// Table, in order: `diverged` on escape; `fixed-point` when the retained
/// orbit has diameter below tolerance (or returns to itself in one step);
/// `periodic` on a p-fold return, p up to the protocol cap; then by the top
/// exponent — above the neutral band `chaotic`, upgraded to
/// `lorenz-candidate` when the candidate sub-tests all pass; inside the
/// band `invariant-curve`; below it (contracting yet no short cycle found)
/// `chaotic` with the "ambiguous" flag.
pub fn classify_map(map: &dyn Map3, protocol: &Protocol) -> Classification {
    let mut first = classify_once(map, protocol, Vector3::from(protocol.seeds[0]));
    let second = classify_once(map, protocol, Vector3::from(protocol.seeds[1]));
    if second.label != first.label || second.period != first.period {
        first.flags.push("seed-sensitive".to_string());
    }
    first
}

fn classify_once(map: &dyn Map3, protocol: &Protocol, seed: Vector3<f64>) -> Classification {
    let mut flags = Vec::new();
    if map.log_det_hint().is_some_and(|h| h > 0.0) {
        // Volume expansion already rules out attractors; whatever happens
        // below, say so.
        flags.push("volume-expanding".to_string());
    }
    let diverged = |flags: Vec<String>| Classification {
        label: Label::Diverged,
        period: None,
        lyapunov: None,
        seed: seed.into(),
        flags,
    };

    // Transient.
    let mut x = seed;
    for _ in 0..protocol.n_transient {
        match map.apply(x) {
            Ok(next) if next.norm() <= protocol.escape_radius => x = next,
            _ => return diverged(flags),
        }
    }

    // Geometry window: bounding box and period search.
    let mut points = Vec::with_capacity(protocol.n_collect);
    points.push(x);
    while points.len() < protocol.n_collect {
        match map.apply(x) {
            Ok(next) if next.norm() <= protocol.escape_radius => {
                x = next;
                points.push(x);
            }
            _ => return diverged(flags),
        }
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in &points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let diameter = (hi - lo).amax();
    let period = detect_period(map, x, protocol);

    // Spectrum (also for fixed points and cycles: the sweep records it).
    let spectrum = match lyapunov_spectrum_map(map, x, protocol.n_lyapunov, protocol.escape_radius)
    {
        Ok(s) => s,
        Err(_) => return diverged(flags),
    };
    if spectrum.estimator_gap() > protocol.estimator_agreement {
        flags.push("estimator-disagreement".to_string());
    }
    let sum_ok = map
        .log_det_hint()
        .is_none_or(|h| (spectrum.sum() - h).abs() <= protocol.sum_match_tol);
    if !sum_ok {
        flags.push("sum-mismatch".to_string());
    }

    let l = spectrum.exponents;
    let (label, period) = if diameter < protocol.fixed_point_tol || period == Some(1) {
        (Label::FixedPoint, Some(1))
    } else if let Some(p) = period {
        (Label::Periodic, Some(p))
    } else if l[0] > protocol.neutral_band {
        let candidate = l[0] + l[1] >= protocol.pair_sum_floor
            && l[2] < protocol.contraction_floor
            && sum_ok
            && has_interior_saddle(map, lo, hi);
        (
            if candidate {
                Label::LorenzCandidate
            } else {
                Label::Chaotic
            },
            None,
        )
    } else if l[0] >= -protocol.neutral_band {
        (Label::InvariantCurve, None)
    } else {
        flags.push("ambiguous".to_string());
        (Label::Chaotic, None)
    };

    Classification {
        label,
        period,
        lyapunov: Some(spectrum),
        seed: seed.into(),
        flags,
    }
}

/// Smallest `p <= max_period` with `map^p(x)` within tolerance of `x`.
fn detect_period(map: &dyn Map3, x: Vector3<f64>, protocol: &Protocol) -> Option<u32> {
    let mut y = x;
    for p in 1..=protocol.max_period {
        y = map.apply(y).ok()?;
        if (y - x).amax() < protocol.fixed_point_tol {
            return Some(p);
        }
    }
    None
}

/// Whether the map has a saddle fixed point with exactly one unstable
/// direction inside the box `[lo, hi]` inflated by 5%.
fn has_interior_saddle(map: &dyn Map3, lo: Vector3<f64>, hi: Vector3<f64>) -> bool {
    let margin = 0.05 * (hi - lo).amax().max(1e-6);
    map.fixed_points_hint().into_iter().any(|p| {
        let inside =
            (0..3).all(|i| p[i] >= lo[i] - margin && p[i] <= hi[i] + margin);
        if !inside {
            return false;
        }
        let Ok(j) = map.jacobian(p) else {
            return false;
        };
        let eig = j.complex_eigenvalues();
        let unstable = eig.iter().filter(|e| e.norm() > 1.0).count();
        let neutral = eig.iter().any(|e| (e.norm() - 1.0).abs() <= 1e-9);
        unstable == 1 && !neutral
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::ModelFamily;
    use crate::rescale::{solve_mu_for_target, ReturnMapConfig};
    use approx::assert_relative_eq;

    /// Stationary orbit with a frozen Jacobian: the estimators see a
    /// constant linear cocycle with known exponents.
    struct FrozenJacobian(Matrix3<f64>);

    impl Map3 for FrozenJacobian {
        fn apply(&self, x: Vector3<f64>) -> crate::error::Result<Vector3<f64>> {
            Ok(x)
        }
        fn jacobian(&self, _: Vector3<f64>) -> crate::error::Result<Matrix3<f64>> {
            Ok(self.0)
        }
    }

    /// Attracting invariant circle with an irrational rotation on it.
    struct CircleMap;

    impl Map3 for CircleMap {
        fn apply(&self, s: Vector3<f64>) -> crate::error::Result<Vector3<f64>> {
            let r = s.x.hypot(s.y);
            let phi = s.y.atan2(s.x) + 2.0 * std::f64::consts::PI * 0.381_966_011_250_105;
            let rn = 1.0 + 0.3 * (r - 1.0);
            Ok(Vector3::new(rn * phi.cos(), rn * phi.sin(), 0.2 * s.z))
        }
    }

    #[test]
    fn frozen_cocycles_have_their_eigenvalue_exponents() {
        // On a diagonal cocycle the QR frame is the eigenframe from step
        // one, so those exponents are exact; the volume frames must first
        // align, which biases their averages by O(1/n).
        let diag = FrozenJacobian(Matrix3::from_diagonal(&Vector3::new(2.0, 0.5, 0.25)));
        let r = lyapunov_spectrum_map(&diag, Vector3::new(0.1, 0.2, 0.3), 2_000, 1e6).unwrap();
        let expect = [2.0f64.ln(), 0.5f64.ln(), 0.25f64.ln()];
        for i in 0..3 {
            assert_relative_eq!(r.exponents[i], expect[i], epsilon = 1e-12);
            assert_relative_eq!(r.volume_exponents[i], expect[i], epsilon = 5e-3);
        }

        // Rotation-scaling block plus an expanding axis: a complex pair
        // shares one modulus, and every frame has to align first.
        let (c, s) = (0.6f64, 0.8f64);
        let m = Matrix3::new(0.9 * c, -0.9 * s, 0.0, 0.9 * s, 0.9 * c, 0.0, 0.0, 0.0, 2.0);
        let r = lyapunov_spectrum_map(&FrozenJacobian(m), Vector3::zeros(), 5_000, 1e6).unwrap();
        let expect = [2.0f64.ln(), 0.9f64.ln(), 0.9f64.ln()];
        for i in 0..3 {
            assert_relative_eq!(r.exponents[i], expect[i], epsilon = 1e-3);
        }
        assert!(r.estimator_gap() < 1e-2);
    }

    #[test]
    fn spectrum_at_a_sink_matches_the_multipliers() {
        let params = HenonParams::new(0.0, 0.2, 0.3);
        let fps = params.fixed_points();
        let fp = fps
            .iter()
            .find(|f| f.unstable_count() == 0)
            .expect("chosen parameters must have a sink");
        let r =
            lyapunov_spectrum(params, Vector3::new(0.1, 0.1, 0.1), 200_000).unwrap();
        for i in 0..3 {
            assert_relative_eq!(
                r.exponents[i],
                fp.multipliers[i].norm().ln(),
                epsilon = 1e-3
            );
        }
        assert_relative_eq!(r.sum(), 0.3f64.ln(), epsilon = 1e-3);
        assert!(r.estimator_gap() < 1e-2);
    }

    #[test]
    fn divergence_is_an_error_with_its_index() {
        let params = HenonParams::new(-3.0, 0.0, 1.2);
        let err = lyapunov_spectrum(params, Vector3::new(50.0, 50.0, 50.0), 1_000).unwrap_err();
        assert!(matches!(err, Error::OrbitDiverged { .. }), "{err:?}");
    }

    #[test]
    fn orbits_settle_onto_a_strong_sink() {
        // All multiplier moduli are 0.1^(1/3) < 1 at the origin.
        let sample = iterate_orbit(
            HenonParams::new(0.0, 0.0, 0.1),
            Vector3::new(0.1, 0.1, 0.1),
            1_000,
            50,
        );
        assert!(sample.diverged_at.is_none());
        assert_eq!(sample.points.len(), 50);
        for p in &sample.points {
            assert!(p.norm() < 1e-8, "not settled: {p:?}");
        }
    }

    #[test]
    fn runaway_orbits_report_the_divergence_index() {
        let sample = iterate_orbit(
            HenonParams::new(-3.0, 0.0, 1.2),
            Vector3::new(50.0, 50.0, 50.0),
            100,
            10,
        );
        assert!(sample.diverged_at.is_some());
        assert!(sample.points.is_empty());
    }

    fn quick_protocol() -> Protocol {
        Protocol {
            n_transient: 3_000,
            n_lyapunov: 300_000,
            n_collect: 1_024,
            ..Protocol::default()
        }
    }

    #[test]
    fn classifies_a_sink_as_fixed_point() {
        let cell = classify(HenonParams::new(0.0, 0.2, 0.3), &quick_protocol());
        assert_eq!(cell.result.label, Label::FixedPoint);
        assert_eq!(cell.result.period, Some(1));
        assert!(!cell.result.flags.iter().any(|f| f == "seed-sensitive"));
    }

    #[test]
    fn classifies_a_two_cycle_as_periodic() {
        // With m2 = 0 and |b| small the third coordinate follows the planar
        // quadratic map, which has a superstable 2-cycle {0, 1} at m1 = 1.
        let cell = classify(HenonParams::new(1.0, 0.0, 0.01), &quick_protocol());
        assert_eq!(cell.result.label, Label::Periodic);
        assert_eq!(cell.result.period, Some(2));
    }

    #[test]
    fn classifies_the_known_chaotic_point_as_candidate() {
        let cell = classify(HenonParams::new(0.0, 0.85, 0.7), &quick_protocol());
        assert_eq!(cell.result.label, Label::LorenzCandidate);
        let lyap = cell.result.lyapunov.unwrap();
        assert!(lyap.exponents[0] > 0.01, "{:?}", lyap.exponents);
        assert!((lyap.sum() - 0.7f64.ln()).abs() <= 1e-3);
        assert!(lyap.estimator_gap() <= 1e-2);
        assert!(
            !cell.result.flags.iter().any(|f| f == "seed-sensitive"),
            "{:?}",
            cell.result.flags
        );
    }

    #[test]
    fn classifies_an_attracting_circle_as_invariant_curve() {
        let result = classify_map(&CircleMap, &quick_protocol());
        assert_eq!(result.label, Label::InvariantCurve);
        let lyap = result.lyapunov.unwrap();
        assert!(lyap.exponents[0].abs() <= 0.005, "{:?}", lyap.exponents);
    }

    #[test]
    fn volume_expanding_escape_is_diverged_and_flagged() {
        let cell = classify(HenonParams::new(-3.0, 0.0, 1.2), &quick_protocol());
        assert_eq!(cell.result.label, Label::Diverged);
        assert!(cell.result.flags.iter().any(|f| f == "volume-expanding"));
    }

    #[test]
    fn rescaled_return_map_at_a_solved_target_is_a_candidate() {
        let base = ModelFamily::case_i();
        let report =
            solve_mu_for_target(&base, 16, None, HenonParams::new(0.0, 0.85, 0.7), 0).unwrap();
        let cfg = ReturnMapConfig::new(base, 16, None, report.mu).unwrap();
        let chart = crate::rescale::RescalingChart::build(&cfg).unwrap();
        let result = classify_map(&chart, &Protocol::screening());
        assert_eq!(result.label, Label::LorenzCandidate, "{result:?}");
        // The exponent sum tracks the limiting log-determinant only up to
        // the chart's finite-k deviation, so the comparison is loose.
        let lyap = result.lyapunov.unwrap();
        assert!((lyap.sum() - chart.log_abs_det()).abs() <= 0.02);
    }
}
