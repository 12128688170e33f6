//! Shared plumbing for the subcommands: config loading and lookup with
//! flag-over-file precedence, family and protocol construction, and small
//! parsers for compound flag values.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use lorenzlab_core::family::FAMILY_SCHEMA;
use lorenzlab_core::{CaseTag, Error, KvConfig, ModelFamily, Protocol, Result};
use nalgebra::Vector3;

/// Keys of the `[run]` section, honored by every subcommand.
pub const RUN_SCHEMA: (&str, &[&str]) = ("run", &["threads"]);

/// Keys of the `[protocol]` section: classification run lengths and the
/// escape/period limits. Thresholds keep their built-in defaults.
pub const PROTOCOL_SCHEMA: (&str, &[&str]) = (
    "protocol",
    &[
        "n_transient",
        "n_lyapunov",
        "n_collect",
        "escape_radius",
        "max_period",
    ],
);

/// The loaded config file, if any. Lookups on a context without a config
/// return `None`, so `flag.or(ctx.get(...)?)` spells the precedence rule.
pub struct Ctx {
    cfg: Option<KvConfig>,
}

impl Ctx {
    pub fn load(path: Option<&Path>) -> Result<Ctx> {
        let cfg = match path {
            None => None,
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read config `{}`: {e}", p.display()))
                })?;
                Some(KvConfig::parse(&text)?)
            }
        };
        Ok(Ctx { cfg })
    }

    /// Validate the config against the sections this command understands
    /// (always including `[run]`). Commands never read keys outside their
    /// schema, so unknown keys are rejected instead of silently ignored.
    pub fn check_schema(&self, extra: &[(&str, &[&str])]) -> Result<()> {
        if let Some(cfg) = &self.cfg {
            let mut allowed = vec![RUN_SCHEMA];
            allowed.extend_from_slice(extra);
            cfg.check_schema(&allowed)?;
        }
        Ok(())
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.cfg.as_ref().and_then(|c| c.get(section, key))
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match &self.cfg {
            Some(c) => c.get_f64(section, key),
            None => Ok(None),
        }
    }

    pub fn get_u32(&self, section: &str, key: &str) -> Result<Option<u32>> {
        match &self.cfg {
            Some(c) => c.get_u32(section, key),
            None => Ok(None),
        }
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        match &self.cfg {
            Some(c) => c.get_u64(section, key),
            None => Ok(None),
        }
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match &self.cfg {
            Some(c) => c.get_usize(section, key),
            None => Ok(None),
        }
    }

    fn has_family_sections(&self) -> bool {
        self.cfg.as_ref().is_some_and(|c| {
            FAMILY_SCHEMA
                .iter()
                .any(|(section, _)| c.entries().any(|(s, _, _)| s == *section))
        })
    }

    /// The model family a return-map command works on: built from the
    /// config's family sections when present, otherwise the preset named
    /// by `--case` (case I when neither is given). A flag and config
    /// sections together are ambiguous and rejected.
    pub fn family(&self, case_flag: Option<&str>) -> Result<ModelFamily> {
        if self.has_family_sections() {
            if case_flag.is_some() {
                return Err(Error::Config(
                    "the family comes from the config's [family] sections; \
                     drop --case or the sections"
                        .into(),
                ));
            }
            return ModelFamily::from_kv(self.cfg.as_ref().expect("sections imply a config"));
        }
        let case: CaseTag = case_flag.unwrap_or("i").parse()?;
        Ok(ModelFamily::preset(case))
    }

    /// `base` with the `[protocol]` overrides applied.
    pub fn protocol(&self, base: Protocol) -> Result<Protocol> {
        let mut p = base;
        if let Some(v) = self.get_u64("protocol", "n_transient")? {
            p.n_transient = v;
        }
        if let Some(v) = self.get_u64("protocol", "n_lyapunov")? {
            p.n_lyapunov = v;
        }
        if let Some(v) = self.get_usize("protocol", "n_collect")? {
            p.n_collect = v;
        }
        if let Some(v) = self.get_f64("protocol", "escape_radius")? {
            p.escape_radius = v;
        }
        if let Some(v) = self.get_u32("protocol", "max_period")? {
            p.max_period = v;
        }
        Ok(p)
    }
}

/// Parse `x,y,z` into a point.
pub fn parse_triple(s: &str) -> Result<Vector3<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y, z] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "`{s}`: expected three comma-separated coordinates"
        )));
    };
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{s}`: cannot parse `{t}` as a number")))
    };
    Ok(Vector3::new(num(x)?, num(y)?, num(z)?))
}

/// Parse `name=value` into its parts.
pub fn parse_name_value(s: &str) -> Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("`{s}`: expected name=value")))?;
    let value = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{s}`: cannot parse `{value}` as a number")))?;
    Ok((name.trim().to_string(), value))
}

/// Parse a comma-separated list of passage lengths.
pub fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{s}`: cannot parse `{t}` as an integer")))
        })
        .collect()
}

/// The inclusive ladder `k_min, k_min + k_step, ..., <= k_max`.
pub fn k_range(k_min: u32, k_max: u32, k_step: u32) -> Result<Vec<u32>> {
    if k_step == 0 {
        return Err(Error::Config("k-step must be at least 1".into()));
    }
    if k_min > k_max {
        return Err(Error::Config(format!(
            "empty passage-length range: k-min {k_min} > k-max {k_max}"
        )));
    }
    Ok((k_min..=k_max).step_by(k_step as usize).collect())
}

/// Write `text` to the path, or to stdout when no path is given.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(Error::from)
        }
    }
}
