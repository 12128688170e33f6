//! One parameter point: dump an orbit, estimate the exponent spectrum, or
//! classify what the orbit settles on.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lorenzlab_core::{
    classify_map, iterate_orbit_map, lyapunov_spectrum_map, ClassificationCell, Error,
    HenonParams, Map3, Protocol, Result,
};
use nalgebra::{Matrix3, Vector3};

use crate::context::{self, Ctx};

const SCHEMA: (&str, &[&str]) = (
    "henon",
    &["m1", "m2", "b", "seed", "n_transient", "n", "keep"],
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HenonAction {
    /// Write the post-transient orbit as CSV.
    Orbit,
    /// Estimate the three exponents by two independent estimators.
    Lyapunov,
    /// Label what the orbit settles on.
    Classify,
}

#[derive(Debug, Args)]
pub struct HenonArgs {
    /// What to compute at the point.
    #[arg(value_enum)]
    pub action: HenonAction,

    /// Constant coefficient of the map.
    #[arg(long)]
    pub m1: Option<f64>,

    /// Linear (twist) coefficient.
    #[arg(long)]
    pub m2: Option<f64>,

    /// Jacobian determinant.
    #[arg(long)]
    pub b: Option<f64>,

    /// Orbit seed as `x,y,z` (default 0.1,0.1,0.1).
    #[arg(long)]
    pub seed: Option<String>,

    /// Iterate the inverse map instead of the forward map.
    #[arg(long)]
    pub inverse: bool,

    /// Iterations discarded before any measurement.
    #[arg(long)]
    pub n_transient: Option<u64>,

    /// Iterations for the exponent estimate (`lyapunov`).
    #[arg(long)]
    pub n: Option<u64>,

    /// Post-transient points to keep (`orbit`).
    #[arg(long)]
    pub keep: Option<usize>,

    /// Use the shorter screening protocol for `classify`.
    #[arg(long)]
    pub screening: bool,

    /// Output file (CSV for `orbit`, JSON otherwise); default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The time-reversed map.
struct Backward(HenonParams);

impl Map3 for Backward {
    fn apply(&self, x: Vector3<f64>) -> Result<Vector3<f64>> {
        self.0.step_back(x)
    }

    fn jacobian(&self, x: Vector3<f64>) -> Result<Matrix3<f64>> {
        let pre = self.0.step_back(x)?;
        self.0
            .jacobian(pre)
            .try_inverse()
            .ok_or(Error::NonInvertible)
    }

    fn fixed_points_hint(&self) -> Vec<Vector3<f64>> {
        self.0.fixed_points_hint()
    }

    fn log_det_hint(&self) -> Option<f64> {
        (self.0.b != 0.0).then(|| -self.0.b.abs().ln())
    }
}

fn required(flag: Option<f64>, ctx: &Ctx, key: &'static str) -> Result<f64> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = ctx.get_f64("henon", key)? {
        return Ok(v);
    }
    Err(Error::Config(format!(
        "missing map coefficient `{key}`; usage: lorenzlab henon --m1 <M1> --m2 <M2> --b <B> \
         <ACTION> (or set [henon] {key} in --config)"
    )))
}

pub fn run(ctx: &Ctx, args: HenonArgs) -> Result<()> {
    ctx.check_schema(&[SCHEMA, context::PROTOCOL_SCHEMA])?;

    let params = HenonParams::new(
        required(args.m1, ctx, "m1")?,
        required(args.m2, ctx, "m2")?,
        required(args.b, ctx, "b")?,
    );
    if args.inverse && params.b == 0.0 {
        return Err(Error::NonInvertible);
    }
    let seed = match args.seed.as_deref().or_else(|| ctx.get_str("henon", "seed")) {
        Some(s) => context::parse_triple(s)?,
        None => Vector3::new(0.1, 0.1, 0.1),
    };

    let backward = Backward(params);
    let map: &dyn Map3 = if args.inverse { &backward } else { &params };

    match args.action {
        HenonAction::Orbit => {
            let n_transient = match args.n_transient {
                Some(v) => v,
                None => ctx.get_u64("henon", "n_transient")?.unwrap_or(1_000),
            };
            let keep = match args.keep {
                Some(v) => v,
                None => ctx.get_usize("henon", "keep")?.unwrap_or(10_000),
            };
            let sample = iterate_orbit_map(map, seed, n_transient, keep);
            let mut text = String::from("n,x,y,z\n");
            for (i, p) in sample.points.iter().enumerate() {
                writeln!(text, "{i},{},{},{}", p.x, p.y, p.z).expect("string write");
            }
            context::write_text(args.out.as_deref(), &text)?;
            if let Some(index) = sample.diverged_at {
                return Err(Error::OrbitDiverged { index });
            }
        }
        HenonAction::Lyapunov => {
            let n = match args.n {
                Some(v) => v,
                None => ctx.get_u64("henon", "n")?.unwrap_or(200_000),
            };
            let n_transient = match args.n_transient {
                Some(v) => v,
                None => ctx.get_u64("henon", "n_transient")?.unwrap_or(1_000),
            };
            let protocol = ctx.protocol(Protocol::default())?;
            let start = iterate_orbit_map(map, seed, n_transient, 1);
            let s0 = *start.points.first().ok_or(Error::OrbitDiverged {
                index: start.diverged_at.unwrap_or(0),
            })?;
            let res = lyapunov_spectrum_map(map, s0, n, protocol.escape_radius)?;
            let text = serde_json::to_string_pretty(&serde_json::json!({
                "exponents": res.exponents,
                "volume_exponents": res.volume_exponents,
                "sum": res.sum(),
                "estimator_gap": res.estimator_gap(),
                "n_iterations": res.n_iterations,
                "convergence_estimate": res.convergence_estimate,
            }))
            .expect("spectrum serializes");
            println!(
                "L = [{:+.6}, {:+.6}, {:+.6}]  sum = {:+.6}",
                res.exponents[0],
                res.exponents[1],
                res.exponents[2],
                res.sum()
            );
            if let Some(p) = args.out.as_deref() {
                context::write_text(Some(p), &text)?;
            } else {
                println!("{text}");
            }
        }
        HenonAction::Classify => {
            let base = if args.screening {
                Protocol::screening()
            } else {
                Protocol::default()
            };
            let protocol = ctx.protocol(base)?;
            let result = classify_map(map, &protocol);
            println!("label: {}", result.label);
            if let Some(p) = result.period {
                println!("period: {p}");
            }
            if !result.flags.is_empty() {
                println!("flags: {}", result.flags.join(","));
            }
            if let Some(p) = args.out.as_deref() {
                let cell = ClassificationCell { params, result };
                let text = serde_json::to_string_pretty(&cell).expect("cell serializes");
                context::write_text(Some(p), &text)?;
            }
        }
    }
    Ok(())
}
