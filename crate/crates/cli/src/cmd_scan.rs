//! Track where in unfolding-parameter space the candidate dynamics lands
//! as the passage length grows: the boxes must shrink toward the origin.

use std::path::PathBuf;

use clap::Args;
use lorenzlab_core::family::FAMILY_SCHEMA;
use lorenzlab_core::{scan_delta_k, Protocol, Result, TargetBox};

use crate::context::{self, Ctx};

const SCHEMA: (&str, &[&str]) = (
    "scan",
    &[
        "k_min", "k_max", "k_step", "js", "m1_min", "m1_max", "m2_min", "m2_max", "b",
        "samples",
    ],
);

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Family preset (i, iia, iib) when no config family is given.
    #[arg(long)]
    pub case: Option<String>,

    /// Smallest spiral passage length scanned.
    #[arg(long)]
    pub k_min: Option<u32>,

    /// Largest spiral passage length.
    #[arg(long)]
    pub k_max: Option<u32>,

    /// Scan stride.
    #[arg(long)]
    pub k_step: Option<u32>,

    /// Explicit saddle passage lengths, comma-separated, one per rung
    /// (balanced lengths when omitted).
    #[arg(long)]
    pub js: Option<String>,

    /// Target box in the limiting coefficients: lower `m1` corner.
    #[arg(long)]
    pub m1_min: Option<f64>,

    /// Upper `m1` corner.
    #[arg(long)]
    pub m1_max: Option<f64>,

    /// Lower `m2` corner.
    #[arg(long)]
    pub m2_min: Option<f64>,

    /// Upper `m2` corner.
    #[arg(long)]
    pub m2_max: Option<f64>,

    /// Jacobian determinant of the targets.
    #[arg(long)]
    pub b: Option<f64>,

    /// Lattice points per box axis.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Use the full-length protocol instead of the screening one.
    #[arg(long)]
    pub full: bool,

    /// Output JSON report; default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: ScanArgs) -> Result<()> {
    let mut schema = vec![SCHEMA, context::PROTOCOL_SCHEMA];
    schema.extend_from_slice(FAMILY_SCHEMA);
    ctx.check_schema(&schema)?;

    let family = ctx.family(args.case.as_deref())?;
    let k_min = match args.k_min {
        Some(v) => v,
        None => ctx.get_u32("scan", "k_min")?.unwrap_or(14),
    };
    let k_max = match args.k_max {
        Some(v) => v,
        None => ctx.get_u32("scan", "k_max")?.unwrap_or(20),
    };
    let k_step = match args.k_step {
        Some(v) => v,
        None => ctx.get_u32("scan", "k_step")?.unwrap_or(2),
    };
    let ks = context::k_range(k_min, k_max, k_step)?;
    let js = match args.js.as_deref().or_else(|| ctx.get_str("scan", "js")) {
        Some(list) => Some(context::parse_u32_list(list)?),
        None => None,
    };

    let defaults = TargetBox::default();
    let pick = |flag: Option<f64>, key: &str, fallback: f64| -> Result<f64> {
        Ok(match flag {
            Some(v) => v,
            None => ctx.get_f64("scan", key)?.unwrap_or(fallback),
        })
    };
    let target_box = TargetBox {
        m1_min: pick(args.m1_min, "m1_min", defaults.m1_min)?,
        m1_max: pick(args.m1_max, "m1_max", defaults.m1_max)?,
        m2_min: pick(args.m2_min, "m2_min", defaults.m2_min)?,
        m2_max: pick(args.m2_max, "m2_max", defaults.m2_max)?,
        b: pick(args.b, "b", defaults.b)?,
        samples: match args.samples {
            Some(v) => v,
            None => ctx.get_usize("scan", "samples")?.unwrap_or(defaults.samples),
        },
    };

    let base = if args.full {
        Protocol::default()
    } else {
        Protocol::screening()
    };
    let protocol = ctx.protocol(base)?;

    let report = scan_delta_k(&family, &ks, js.as_deref(), &target_box, &protocol)?;
    for band in &report.bands {
        match (&band.skipped, &band.center) {
            (Some(reason), _) => eprintln!("k={:<3} skipped: {reason}", band.k),
            (None, Some(c)) => eprintln!(
                "k={:<3} j={:<3} solved={}/{} candidates={} center=({:+.3e}, {:+.3e}, {:+.3e}) |center|={:.3e}",
                band.k,
                band.j,
                band.solved,
                band.targets,
                band.candidates,
                c[0],
                c[1],
                c[2],
                band.center_norm.unwrap_or(f64::NAN),
            ),
            (None, None) => eprintln!(
                "k={:<3} j={:<3} solved={}/{} candidates=0",
                band.k, band.j, band.solved, band.targets
            ),
        }
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    context::write_text(args.out.as_deref(), &text)
}
