//! Convergence ladders of the rescaled return maps, and the flattening
//! diagnostic on the positive twist branch.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use lorenzlab_core::family::FAMILY_SCHEMA;
use lorenzlab_core::{deviation_ladder, mu2_positive_diagnostic, Result};

use crate::context::{self, Ctx};

const SCHEMA: (&str, &[&str]) = (
    "rescale",
    &[
        "k_min",
        "k_max",
        "k_step",
        "branch",
        "half_width",
        "samples",
        "mu2",
    ],
);

#[derive(Debug, Args)]
pub struct RescaleArgs {
    /// Family preset (i, iia, iib) when no config family is given.
    #[arg(long)]
    pub case: Option<String>,

    /// Smallest spiral passage length of the ladder.
    #[arg(long)]
    pub k_min: Option<u32>,

    /// Largest spiral passage length.
    #[arg(long)]
    pub k_max: Option<u32>,

    /// Ladder stride.
    #[arg(long)]
    pub k_step: Option<u32>,

    /// Which zero of the oscillating twist pins the rotation parameter.
    #[arg(long)]
    pub branch: Option<usize>,

    /// Half-width of the comparison box in rescaled coordinates.
    #[arg(long)]
    pub half_width: Option<f64>,

    /// Sample points per box axis.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Run the flattening diagnostic at this positive twist parameter
    /// instead of the ladder.
    #[arg(long)]
    pub mu2: Option<f64>,

    /// Output file (ladder CSV or diagnostic JSON); default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: RescaleArgs) -> Result<()> {
    let mut schema = vec![SCHEMA];
    schema.extend_from_slice(FAMILY_SCHEMA);
    ctx.check_schema(&schema)?;

    let family = ctx.family(args.case.as_deref())?;
    let k_min = match args.k_min {
        Some(v) => v,
        None => ctx.get_u32("rescale", "k_min")?.unwrap_or(10),
    };
    let k_max = match args.k_max {
        Some(v) => v,
        None => ctx.get_u32("rescale", "k_max")?.unwrap_or(24),
    };
    let k_step = match args.k_step {
        Some(v) => v,
        None => ctx.get_u32("rescale", "k_step")?.unwrap_or(2),
    };
    let ks = context::k_range(k_min, k_max, k_step)?;

    let mu2 = match args.mu2 {
        Some(v) => Some(v),
        None => ctx.get_f64("rescale", "mu2")?,
    };
    if let Some(mu2) = mu2 {
        // Positive-branch diagnostic: no 3D normalization exists there, so
        // report the flattening and the planar twist growth instead.
        let half_width = match args.half_width {
            Some(v) => v,
            None => ctx.get_f64("rescale", "half_width")?.unwrap_or(1.5),
        };
        let samples = match args.samples {
            Some(v) => v,
            None => ctx.get_usize("rescale", "samples")?.unwrap_or(9),
        };
        let report = mu2_positive_diagnostic(&family, mu2, &ks, half_width, samples)?;
        for r in &report.rungs {
            eprintln!(
                "k={:<3} j={:<3} x1_sup={:.3e}  m2_2d={:+.4}",
                r.k, r.j, r.x1_sup, r.m2_2d
            );
        }
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        context::write_text(args.out.as_deref(), &text)?;
        return Ok(());
    }

    let branch = match args.branch {
        Some(v) => v,
        None => ctx.get_usize("rescale", "branch")?.unwrap_or(0),
    };
    let half_width = match args.half_width {
        Some(v) => v,
        None => ctx.get_f64("rescale", "half_width")?.unwrap_or(2.0),
    };
    let samples = match args.samples {
        Some(v) => v,
        None => ctx.get_usize("rescale", "samples")?.unwrap_or(17),
    };
    let ladder = deviation_ladder(&family, &ks, branch, half_width, samples)?;

    let mut text = String::from("case,k,j,mu1,mu2,mu3,M1,M2,B,dev_C0,dev_C1\n");
    for r in &ladder {
        writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.case,
            r.k,
            r.j,
            r.mu.mu1,
            r.mu.mu2,
            r.mu.mu3,
            r.effective.m1,
            r.effective.m2,
            r.effective.b,
            r.c0,
            r.c1
        )
        .expect("string write");
        eprintln!(
            "k={:<3} j={:<3} c0={:.3e}  c1={:.3e}  B={:+.4}  balance={:.3}",
            r.k, r.j, r.c0, r.c1, r.effective.b, r.balance
        );
    }
    context::write_text(args.out.as_deref(), &text)
}
