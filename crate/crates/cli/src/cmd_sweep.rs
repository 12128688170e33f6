//! Parameter-grid classification with reproducible, resumable output.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use lorenzlab_core::family::FAMILY_SCHEMA;
use lorenzlab_core::{
    sweep_grid, AxisSpec, Error, Protocol, Result, SweepConfig, SweepSpace,
};

use crate::context::{self, Ctx};

const SCHEMA: (&str, &[&str]) = (
    "sweep",
    &[
        "space", "axis1", "axis2", "axis3", "m1", "m2", "b", "mu1", "mu2", "mu3", "k", "j",
        "seed", "jitter", "protocol",
    ],
);

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Output CSV. Created with a header, appended in grid order, resumed
    /// when it already holds a prefix of the grid.
    #[arg(long)]
    pub out: PathBuf,

    /// Grid space: `henon` (axes m1/m2/b) or `mu` (axes mu1/mu2/mu3 over a
    /// family's rescaled return map).
    #[arg(long)]
    pub space: Option<String>,

    /// Swept axis as `name=start:stop:count`; repeat for more axes.
    #[arg(long = "axis")]
    pub axes: Vec<String>,

    /// Fixed value for an unswept parameter, as `name=value`; repeatable.
    #[arg(long = "fixed")]
    pub fixed: Vec<String>,

    /// Family preset for `mu` space (i, iia, iib).
    #[arg(long)]
    pub case: Option<String>,

    /// Spiral passage length for `mu` space.
    #[arg(long)]
    pub k: Option<u32>,

    /// Saddle passage length for `mu` space (balanced when omitted).
    #[arg(long)]
    pub j: Option<u32>,

    /// Base seed for the per-cell orbit-seed jitter.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Amplitude of that jitter (0 disables it).
    #[arg(long)]
    pub jitter: Option<f64>,

    /// Use the full-length protocol instead of the screening one.
    #[arg(long)]
    pub full: bool,
}

pub fn run(ctx: &Ctx, args: SweepArgs) -> Result<()> {
    let mut schema = vec![SCHEMA, context::PROTOCOL_SCHEMA];
    schema.extend_from_slice(FAMILY_SCHEMA);
    ctx.check_schema(&schema)?;

    let space_name = args
        .space
        .as_deref()
        .or_else(|| ctx.get_str("sweep", "space"))
        .unwrap_or("henon")
        .to_ascii_lowercase();
    let space = match space_name.as_str() {
        "henon" => SweepSpace::Henon,
        "mu" => {
            let family = ctx.family(args.case.as_deref())?;
            let k = match args.k {
                Some(k) => k,
                None => ctx.get_u32("sweep", "k")?.ok_or_else(|| {
                    Error::Config("mu-space sweeps need --k (or [sweep] k)".into())
                })?,
            };
            let j = match args.j {
                Some(j) => Some(j),
                None => ctx.get_u32("sweep", "j")?,
            };
            SweepSpace::Mu { family, k, j }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown sweep space `{other}` (expected henon or mu)"
            )));
        }
    };

    // Axes: flags as given, else axis1..axis3 from the config.
    let mut axes = Vec::new();
    if args.axes.is_empty() {
        for key in ["axis1", "axis2", "axis3"] {
            if let Some(spec) = ctx.get_str("sweep", key) {
                axes.push(AxisSpec::parse(spec)?);
            }
        }
    } else {
        for spec in &args.axes {
            axes.push(AxisSpec::parse(spec)?);
        }
    }

    // Fixed values: config keys first, per-name flag overrides on top.
    let mut fixed = BTreeMap::new();
    for name in ["m1", "m2", "b", "mu1", "mu2", "mu3"] {
        if let Some(v) = ctx.get_f64("sweep", name)? {
            fixed.insert(name.to_string(), v);
        }
    }
    for pair in &args.fixed {
        let (name, value) = context::parse_name_value(pair)?;
        fixed.insert(name, value);
    }

    let full = args.full || ctx.get_str("sweep", "protocol") == Some("full");
    let base = if full {
        Protocol::default()
    } else {
        Protocol::screening()
    };

    let mut config = SweepConfig::new(space, axes);
    config.fixed = fixed;
    config.protocol = ctx.protocol(base)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    } else if let Some(seed) = ctx.get_u64("sweep", "seed")? {
        config.seed = seed;
    }
    if let Some(jitter) = args.jitter {
        config.seed_jitter = jitter;
    } else if let Some(jitter) = ctx.get_f64("sweep", "jitter")? {
        config.seed_jitter = jitter;
    }

    let summary = sweep_grid(&config, &args.out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}
