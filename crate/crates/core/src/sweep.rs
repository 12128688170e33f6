//! Deterministic parameter-grid sweeps with incremental CSV output, and the
//! shrinking-box scan that chains the parameter solver, the rescaling
//! chart, and the classifier.
//!
//! Reproducibility contract: a sweep writes cells in row-major grid order
//! regardless of how many worker threads compute them, every float is
//! rendered by the shortest round-trip formatter, and per-cell randomness
//! (orbit-seed jitter) is seeded from the cell index. Re-running a finished
//! sweep recomputes nothing; an interrupted sweep resumes after the last
//! complete row, truncating a torn tail if the previous run died mid-write.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::{classify_map, Classification, Label, Protocol};
use crate::error::{Error, Result};
use crate::family::{CaseTag, ModelFamily, MuVector};
use crate::henon::HenonParams;
use crate::rescale::{solve_mu_for_target, RescalingChart, ReturnMapConfig};

/// Hard cap on sweep size; bigger requests are a config mistake, not a job.
pub const MAX_GRID_CELLS: u64 = 1_000_000;

/// Cells per scheduling chunk: computed in parallel, written in order.
const CHUNK: usize = 64;

// ---------------------------------------------------------------------------
// Grid geometry
// ---------------------------------------------------------------------------

/// One swept axis: `count` evenly spaced values from `start` to `stop`
/// inclusive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSpec {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(name: &str, start: f64, stop: f64, count: usize) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::Config("axis name must not be empty".into()));
        }
        if count == 0 {
            return Err(Error::Config(format!("axis `{name}` needs count >= 1")));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::Config(format!("axis `{name}` bounds must be finite")));
        }
        Ok(AxisSpec {
            name: name.to_string(),
            start,
            stop,
            count,
        })
    }

    /// Parse the flag syntax `name=start:stop:count`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rest) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("axis `{s}`: expected name=start:stop:count")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(Error::Config(format!(
                "axis `{s}`: expected three `:`-separated fields, got {}",
                parts.len()
            )));
        };
        let bad = |field: &str| Error::Config(format!("axis `{s}`: cannot parse `{field}`"));
        AxisSpec::new(
            name,
            start.parse().map_err(|_| bad(start))?,
            stop.parse().map_err(|_| bad(stop))?,
            count.parse().map_err(|_| bad(count))?,
        )
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * (i as f64) / ((self.count - 1) as f64)
        }
    }
}

/// Which parameter space the grid lives in.
#[derive(Debug, Clone)]
pub enum SweepSpace {
    /// Axes over the quadratic-map coefficients `m1`, `m2`, `b`.
    Henon,
    /// Axes over the unfolding parameters `mu1`, `mu2`, `mu3` of a family;
    /// each cell classifies the rescaled return map at `(k, j)`.
    Mu {
        family: ModelFamily,
        k: u32,
        j: Option<u32>,
    },
}

impl SweepSpace {
    fn parameter_names(&self) -> [&'static str; 3] {
        match self {
            SweepSpace::Henon => ["m1", "m2", "b"],
            SweepSpace::Mu { .. } => ["mu1", "mu2", "mu3"],
        }
    }

    fn csv_header(&self) -> &'static str {
        match self {
            SweepSpace::Henon => "m1,m2,b,label,l1,l2,l3,sum_l,n,flags",
            SweepSpace::Mu { .. } => "mu1,mu2,mu3,k,j,label,l1,l2,l3,sum_l,n,flags",
        }
    }
}

/// A full sweep description: space, grid, fixed values, run protocol, and
/// the base seed for per-cell jitter.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub space: SweepSpace,
    pub axes: Vec<AxisSpec>,
    /// Values for the parameters not swept over.
    pub fixed: BTreeMap<String, f64>,
    pub protocol: Protocol,
    pub seed: u64,
    /// Amplitude of the deterministic per-cell perturbation of the orbit
    /// seeds (keeps grid cells off any special symmetry line while staying
    /// reproducible). Zero disables it.
    pub seed_jitter: f64,
}

impl SweepConfig {
    pub fn new(space: SweepSpace, axes: Vec<AxisSpec>) -> Self {
        SweepConfig {
            space,
            axes,
            fixed: BTreeMap::new(),
            protocol: Protocol::screening(),
            seed: 0,
            seed_jitter: 1e-3,
        }
    }

    pub fn cells_total(&self) -> u64 {
        self.axes.iter().map(|a| a.count as u64).product()
    }

    fn validate(&self) -> Result<()> {
        let names = self.space.parameter_names();
        if self.axes.is_empty() || self.axes.len() > 3 {
            return Err(Error::Config("a sweep needs between 1 and 3 axes".into()));
        }
        let mut covered = Vec::new();
        for ax in &self.axes {
            if !names.contains(&ax.name.as_str()) {
                return Err(Error::Config(format!(
                    "axis `{}` is not one of {}",
                    ax.name,
                    names.join(", ")
                )));
            }
            if covered.contains(&ax.name.as_str()) {
                return Err(Error::Config(format!("axis `{}` appears twice", ax.name)));
            }
            covered.push(&ax.name);
        }
        for key in self.fixed.keys() {
            if !names.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "fixed parameter `{key}` is not one of {}",
                    names.join(", ")
                )));
            }
        }
        for name in names {
            let on_axis = covered.contains(&name);
            let is_fixed = self.fixed.contains_key(name);
            if on_axis && is_fixed {
                return Err(Error::Config(format!(
                    "parameter `{name}` is both swept and fixed"
                )));
            }
            if !on_axis && !is_fixed {
                return Err(Error::Config(format!(
                    "parameter `{name}` is neither swept nor fixed"
                )));
            }
        }
        Ok(())
    }

    /// Parameter values of one cell, row-major in axis declaration order.
    fn cell_values(&self, index: u64) -> BTreeMap<&str, f64> {
        let mut values: BTreeMap<&str, f64> =
            self.fixed.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let mut rem = index;
        for ax in self.axes.iter().rev() {
            let i = (rem % ax.count as u64) as usize;
            rem /= ax.count as u64;
            values.insert(ax.name.as_str(), ax.value(i));
        }
        values
    }
}

// ---------------------------------------------------------------------------
// The sweep
// ---------------------------------------------------------------------------

/// Counts and bookkeeping after a sweep finishes.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub cells_total: u64,
    /// Cells computed by this run (zero when resuming a finished file).
    pub cells_computed: u64,
    /// Label histogram over the whole output file.
    pub label_counts: BTreeMap<String, u64>,
    pub path: String,
}

/// Run the sweep, appending to `path` (creating it with a header when
/// absent, resuming it when partially written).
///
/// Cells are computed [`CHUNK`] at a time in parallel and written strictly
/// in grid order, so the bytes of the finished file do not depend on the
/// thread count. Per-cell failures (a chart that cannot be built at that
/// parameter point, say) become rows labeled `diverged` with an `error=`
/// flag; they never abort the sweep.
pub fn sweep_grid(config: &SweepConfig, path: &Path) -> Result<SweepSummary> {
    config.validate()?;
    let total = config.cells_total();
    if total > MAX_GRID_CELLS {
        return Err(Error::GridTooLarge {
            cells: total,
            max: MAX_GRID_CELLS,
        });
    }
    let header = config.space.csv_header();
    let start_row = prepare_output(path, header, total)?;
    let file = OpenOptions::new().append(true).open(path)?;
    let mut out = BufWriter::new(file);

    let mut next = start_row;
    while next < total {
        let end = (next + CHUNK as u64).min(total);
        let rows: Vec<String> = (next..end)
            .into_par_iter()
            .map(|i| evaluate_cell(config, i))
            .collect();
        for row in &rows {
            out.write_all(row.as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        next = end;
    }
    drop(out);

    let mut label_counts = BTreeMap::new();
    let body = std::fs::read_to_string(path)?;
    let label_column = match config.space {
        SweepSpace::Henon => 3,
        SweepSpace::Mu { .. } => 5,
    };
    for line in body.lines().skip(1) {
        if let Some(label) = line.split(',').nth(label_column) {
            *label_counts.entry(label.to_string()).or_insert(0) += 1;
        }
    }
    Ok(SweepSummary {
        cells_total: total,
        cells_computed: total - start_row,
        label_counts,
        path: path.display().to_string(),
    })
}

/// Create `path` with a header, or verify the header of an existing file,
/// truncate any torn final line, and return the number of complete rows.
fn prepare_output(path: &Path, header: &str, total: u64) -> Result<u64> {
    if !path.exists() {
        let mut f = File::create(path)?;
        writeln!(f, "{header}")?;
        return Ok(0);
    }
    let bytes = std::fs::read(path)?;
    let Some(header_end) = bytes.iter().position(|&b| b == b'\n') else {
        return Err(Error::Config(format!(
            "existing output {} has no complete header line",
            path.display()
        )));
    };
    if &bytes[..header_end] != header.as_bytes() {
        return Err(Error::Config(format!(
            "existing output {} has a different header; refusing to mix schemas",
            path.display()
        )));
    }
    let data = &bytes[header_end + 1..];
    let complete = data.iter().filter(|&&b| b == b'\n').count() as u64;
    if complete > total {
        return Err(Error::Config(format!(
            "existing output {} has {complete} rows but the grid has only {total} cells",
            path.display()
        )));
    }
    if !data.is_empty() && *data.last().unwrap() != b'\n' {
        let keep = header_end
            + 1
            + data.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        let f = OpenOptions::new().write(true).open(path)?;
        f.set_len(keep as u64)?;
    }
    Ok(complete)
}

/// Compute one cell and render its CSV row. Infallible by design.
fn evaluate_cell(config: &SweepConfig, index: u64) -> String {
    let values = config.cell_values(index);
    let mut protocol = config.protocol.clone();
    if config.seed_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ index);
        for seed in &mut protocol.seeds {
            for c in seed.iter_mut() {
                *c += rng.gen_range(-config.seed_jitter..=config.seed_jitter);
            }
        }
    }
    match &config.space {
        SweepSpace::Henon => {
            let params =
                HenonParams::new(values["m1"], values["m2"], values["b"]);
            let result = classify_map(&params, &protocol);
            format!(
                "{},{},{},{}",
                params.m1,
                params.m2,
                params.b,
                result_columns(&result)
            )
        }
        SweepSpace::Mu { family, k, j } => {
            let mu = MuVector::new(values["mu1"], values["mu2"], values["mu3"]);
            let built = ReturnMapConfig::new(family.clone(), *k, *j, mu)
                .and_then(|cfg| RescalingChart::build(&cfg));
            let (jj, result) = match built {
                Ok(chart) => {
                    let jj = chart.j;
                    (jj, classify_map(&chart, &protocol))
                }
                Err(e) => (
                    j.unwrap_or(0),
                    Classification {
                        label: Label::Diverged,
                        period: None,
                        lyapunov: None,
                        seed: protocol.seeds[0],
                        flags: vec![format!("error={}", sanitize(&e.to_string()))],
                    },
                ),
            };
            format!(
                "{},{},{},{},{},{}",
                mu.mu1,
                mu.mu2,
                mu.mu3,
                k,
                jj,
                result_columns(&result)
            )
        }
    }
}

/// The shared trailing columns `label,l1,l2,l3,sum_l,n,flags`.
fn result_columns(result: &Classification) -> String {
    let (l, sum, n) = match &result.lyapunov {
        Some(r) => (r.exponents, r.sum(), r.n_iterations),
        None => ([f64::NAN; 3], f64::NAN, 0),
    };
    let mut flags = result.flags.clone();
    if result.label == Label::Periodic {
        if let Some(p) = result.period {
            flags.push(format!("period={p}"));
        }
    }
    format!(
        "{},{},{},{},{},{},{}",
        result.label,
        l[0],
        l[1],
        l[2],
        sum,
        n,
        flags.join(";")
    )
}

/// Keep flag payloads from breaking the CSV geometry.
fn sanitize(msg: &str) -> String {
    msg.replace([',', ';', '\n'], " ")
}

// ---------------------------------------------------------------------------
// Shrinking-box scan
// ---------------------------------------------------------------------------

/// Lattice of limiting-coefficient targets for [`scan_delta_k`]: a box in
/// `(m1, m2)` at fixed `b`, sampled `samples` per axis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TargetBox {
    pub m1_min: f64,
    pub m1_max: f64,
    pub m2_min: f64,
    pub m2_max: f64,
    pub b: f64,
    pub samples: usize,
}

impl Default for TargetBox {
    /// A box around the known candidate point of the limiting map.
    fn default() -> Self {
        TargetBox {
            m1_min: -0.04,
            m1_max: 0.04,
            m2_min: 0.8,
            m2_max: 0.9,
            b: 0.7,
            samples: 3,
        }
    }
}

impl TargetBox {
    fn targets(&self) -> Vec<HenonParams> {
        let n = self.samples.max(1);
        let lerp = |lo: f64, hi: f64, i: usize| {
            if n == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
            }
        };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for jj in 0..n {
                out.push(HenonParams::new(
                    lerp(self.m1_min, self.m1_max, i),
                    lerp(self.m2_min, self.m2_max, jj),
                    self.b,
                ));
            }
        }
        out
    }
}

/// Findings at one passage length: where in `mu`-space the candidate
/// dynamics landed.
#[derive(Debug, Clone, Serialize)]
pub struct KBand {
    pub k: u32,
    pub j: u32,
    /// Targets attempted / placed by the solver / classified as candidates.
    pub targets: usize,
    pub solved: usize,
    pub candidates: usize,
    /// Bounding box of the candidate parameter points (absent when none).
    pub mu_lo: Option<[f64; 3]>,
    pub mu_hi: Option<[f64; 3]>,
    pub center: Option<[f64; 3]>,
    pub center_norm: Option<f64>,
    /// Why the whole rung was skipped, when it was.
    pub skipped: Option<String>,
}

/// Report of [`scan_delta_k`].
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub bands: Vec<KBand>,
}

/// For each passage length, place the parameters on a lattice of targets
/// inside `target_box`, classify the rescaled return map at every placed
/// point, and report the `mu`-space bounding box of the candidate hits.
///
/// This is the end-to-end measurement that the candidate parameter domains
/// exist at every large passage length and shrink toward the origin:
/// band centers must drift to zero as `k` grows.
///
/// `js`, when given, pairs one saddle-passage length with each `k`;
/// otherwise the balanced length is used (and ignored entirely for the
/// homoclinic case). Infeasible rungs are reported as skipped, not errors.
pub fn scan_delta_k(
    family: &ModelFamily,
    ks: &[u32],
    js: Option<&[u32]>,
    target_box: &TargetBox,
    protocol: &Protocol,
) -> Result<ScanReport> {
    if let Some(js) = js {
        if js.len() != ks.len() {
            return Err(Error::Config(format!(
                "js has {} entries for {} ks",
                js.len(),
                ks.len()
            )));
        }
    }
    let targets = target_box.targets();
    let mut bands = Vec::with_capacity(ks.len());
    for (idx, &k) in ks.iter().enumerate() {
        let j = match family.case {
            CaseTag::I => None,
            _ => Some(match js {
                Some(js) => js[idx],
                None => family.suggest_j(k).expect("case II has a saddle"),
            }),
        };
        // Solve every target; classify in parallel in lattice order.
        let placed: Vec<_> = targets
            .iter()
            .map(|t| solve_mu_for_target(family, k, j, *t, 0))
            .collect();
        let solved: Vec<MuVector> = placed
            .iter()
            .filter_map(|r| r.as_ref().ok().map(|s| s.mu))
            .collect();
        if solved.is_empty() {
            let reason = placed
                .iter()
                .find_map(|r| r.as_ref().err().map(|e| e.to_string()))
                .unwrap_or_else(|| "no targets".into());
            bands.push(KBand {
                k,
                j: j.unwrap_or(0),
                targets: targets.len(),
                solved: 0,
                candidates: 0,
                mu_lo: None,
                mu_hi: None,
                center: None,
                center_norm: None,
                skipped: Some(reason),
            });
            continue;
        }
        let hits: Vec<MuVector> = solved
            .par_iter()
            .map(|&mu| -> Option<MuVector> {
                let cfg = ReturnMapConfig::new(family.clone(), k, j, mu).ok()?;
                let chart = RescalingChart::build(&cfg).ok()?;
                (classify_map(&chart, protocol).label == Label::LorenzCandidate).then_some(mu)
            })
            .flatten()
            .collect();
        let band = if hits.is_empty() {
            KBand {
                k,
                j: j.unwrap_or(0),
                targets: targets.len(),
                solved: solved.len(),
                candidates: 0,
                mu_lo: None,
                mu_hi: None,
                center: None,
                center_norm: None,
                skipped: None,
            }
        } else {
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for mu in &hits {
                let v = [mu.mu1, mu.mu2, mu.mu3];
                for i in 0..3 {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
            let center = [
                (lo[0] + hi[0]) / 2.0,
                (lo[1] + hi[1]) / 2.0,
                (lo[2] + hi[2]) / 2.0,
            ];
            KBand {
                k,
                j: j.unwrap_or(0),
                targets: targets.len(),
                solved: solved.len(),
                candidates: hits.len(),
                mu_lo: Some(lo),
                mu_hi: Some(hi),
                center: Some(center),
                center_norm: Some(center.iter().map(|c| c * c).sum::<f64>().sqrt()),
                skipped: None,
            }
        };
        bands.push(band);
    }
    Ok(ScanReport { bands })
}
