//! Numerical toolkit for three-dimensional Henon-like maps and the
//! homoclinic return maps that generate them.
//!
//! The crate has two halves that meet in the middle:
//!
//! * **The map side** ([`henon`], [`attractor`], [`sweep`]): iterate the 3D
//!   quadratic map, compute Lyapunov spectra, classify what an orbit settles
//!   on, and sweep grids of parameters in parallel with reproducible output.
//! * **The return-map side** ([`family`], [`return_map`], [`rescale`]):
//!   build model families of homoclinic return maps near a saddle-focus,
//!   compose their passages, and rescale a neighborhood of the tangency so
//!   the composition converges to the same 3D quadratic map — with explicit
//!   control over how fast and where in parameter space.
//!
//! Supporting modules: [`belyakov`] (powers and entry functions of the 2D
//! linear block that drives the focus rotation), [`numeric`] (double-double
//! arithmetic, finite differences, root finding), [`kv`] (plain-text
//! key-value configs), [`error`].

pub mod attractor;
pub mod belyakov;
pub mod error;
pub mod family;
pub mod henon;
pub mod kv;
pub mod numeric;
pub mod rescale;
pub mod return_map;
pub mod sweep;

pub use attractor::{
    classify, classify_map, iterate_orbit, iterate_orbit_map, lyapunov_spectrum,
    lyapunov_spectrum_map, Classification, ClassificationCell, Label, LyapunovResult, Map3,
    OrbitSample, Protocol,
};
pub use belyakov::{BelyakovBlock, Phase, PhaseBranch, MAX_ITERATE};
pub use error::{Error, Result};
pub use family::{CaseTag, HookFn, ModelFamily, MuVector};
pub use henon::{find_degenerate_point, FixedPoint, HenonParams};
pub use kv::KvConfig;
pub use rescale::{
    compose_return_map, deviation_ladder, mu2_positive_diagnostic, predicted_rescaled_params,
    rescale_and_compare, solve_mu_for_target, DeviationReport, Mu2PositiveReport, RescaledParams,
    RescalingChart, ReturnMapConfig, SolveReport,
};
pub use return_map::{find_mu2_zero, ComposedReturnMap};
pub use sweep::{
    scan_delta_k, sweep_grid, AxisSpec, KBand, ScanReport, SweepConfig, SweepSpace, SweepSummary,
    TargetBox, MAX_GRID_CELLS,
};
