//! Self-test of the closed-form powers of the contracting linear block
//! against literal matrix products.

use clap::Args;
use lorenzlab_core::{BelyakovBlock, Error, Result};

use crate::context::Ctx;

const SCHEMA: (&str, &[&str]) = ("powers", &["lambda", "mu2", "k_max", "tol"]);

/// The default cells: rotation-branch blocks whose entries stay small
/// enough that an absolute comparison in f64 is meaningful up to k = 64.
const LAMBDAS: [f64; 3] = [0.3, 0.5, 0.9];
const MU2S: [f64; 4] = [-0.3, -0.1, -1e-3, -1e-6];

#[derive(Debug, Args)]
pub struct PowersArgs {
    /// Restrict the grid to one diagonal entry.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Restrict the grid to one twist parameter.
    #[arg(long)]
    pub mu2: Option<f64>,

    /// Largest power tested.
    #[arg(long)]
    pub k_max: Option<u32>,

    /// Largest allowed entrywise deviation; exceeding it is a numerical
    /// failure (exit 3).
    #[arg(long)]
    pub tol: Option<f64>,
}

pub fn run(ctx: &Ctx, args: PowersArgs) -> Result<()> {
    ctx.check_schema(&[SCHEMA])?;

    let lambda = match args.lambda {
        Some(v) => Some(v),
        None => ctx.get_f64("powers", "lambda")?,
    };
    let mu2 = match args.mu2 {
        Some(v) => Some(v),
        None => ctx.get_f64("powers", "mu2")?,
    };
    let k_max = match args.k_max {
        Some(v) => v,
        None => ctx.get_u32("powers", "k_max")?.unwrap_or(40),
    };
    let tol = match args.tol {
        Some(v) => v,
        None => ctx.get_f64("powers", "tol")?.unwrap_or(1e-9),
    };

    let cells: Vec<(f64, f64)> = match (lambda, mu2) {
        (None, None) => LAMBDAS
            .iter()
            .flat_map(|&l| MU2S.iter().map(move |&m| (l, m)))
            .collect(),
        (l, m) => vec![(l.unwrap_or(0.5), m.unwrap_or(-0.3))],
    };

    println!("lambda      mu2         max|closed - naive| over k = 0..{k_max}");
    let mut worst = 0.0f64;
    for (l, m) in cells {
        let block = BelyakovBlock::new(l, m)?;
        let mut dev = 0.0f64;
        for k in 0..=k_max {
            let closed = block.a1_pow_closed_form(k)?;
            let naive = block.a1_pow_naive(k)?;
            dev = dev.max((closed - naive).abs().max());
        }
        println!("{l:<10}  {m:<10}  {dev:.3e}");
        worst = worst.max(dev);
    }
    println!("max deviation: {worst:.3e} (tolerance {tol:.1e})");
    if worst > tol {
        return Err(Error::VerificationFailed(format!(
            "block-power deviation {worst:.3e} exceeds the tolerance {tol:.1e}"
        )));
    }
    Ok(())
}
