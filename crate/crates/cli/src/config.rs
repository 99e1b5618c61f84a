//! Config files (JSON or TOML) and the small parsers shared by the
//! subcommands.

use gamedyn::bimatrix::MixedProfile;
use gamedyn::chaos::LyapunovConfig;
use gamedyn::minority::MinorityGameConfig;
use gamedyn::replicator::IntegratorConfig;
use gamedyn::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub game: GameSection,
    pub integrator: IntegratorConfig<f64>,
    pub diagnostics: DiagnosticsSection,
    pub minority: MinorityGameConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub eps_x: Option<f64>,
    pub eps_y: Option<f64>,
    /// `uniform` or `x1,x2,x3/y1,y2,y3`.
    pub start: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub lyapunov: LyapunovConfig<f64>,
    pub chaos_tol: f64,
    pub residence_threshold: f64,
    pub grid: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { lyapunov: LyapunovConfig::default(), chaos_tol: 0.01, residence_threshold: 0.9, grid: 50 }
    }
}

pub fn load(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        Some("json") => serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        _ => Err(Error::Parse(format!("{}: config must end in .json or .toml", path.display()))),
    }
}

pub const DEFAULT_START: &str = "0.5,0.01,0.49/0.5,0.25,0.25";

pub fn parse_start(s: &str, m: usize, n: usize) -> Result<MixedProfile<f64>> {
    if s == "uniform" {
        return Ok(MixedProfile::uniform(m, n));
    }
    let (xs, ys) = s.split_once('/').ok_or_else(|| Error::Parse(format!("start {s:?}: expected x1,..,xm/y1,..,yn or uniform")))?;
    let nums = |t: &str| -> Result<Vec<f64>> {
        t.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("start {s:?}: {e}")))).collect()
    };
    let (x, y) = (nums(xs)?, nums(ys)?);
    if x.len() != m || y.len() != n {
        return Err(Error::Dimension(format!("start {s:?} is not {m}x{n}")));
    }
    let sums_to_one = |v: &[f64]| (v.iter().sum::<f64>() - 1.0).abs() < 1e-9;
    if !sums_to_one(&x) || !sums_to_one(&y) {
        return Err(Error::Domain(format!("start {s:?}: each player's weights must sum to 1")));
    }
    MixedProfile::new(x, y)
}

/// `a:b:n`, `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(Error::Parse(format!("sweep {s:?}: expected a:b:n")));
    };
    let bad = |e: String| Error::Parse(format!("sweep {s:?}: {e}"));
    let a: f64 = a.parse().map_err(|e| bad(format!("{e}")))?;
    let b: f64 = b.parse().map_err(|e| bad(format!("{e}")))?;
    let n: usize = n.parse().map_err(|e| bad(format!("{e}")))?;
    match n {
        0 => Err(bad("n must be positive".into())),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
    }
}

/// `a:b` inclusive integer range, or a single integer.
pub fn parse_int_range(s: &str) -> Result<Vec<usize>> {
    let bad = |e: String| Error::Parse(format!("range {s:?}: {e}"));
    let (a, b) = s.split_once(':').unwrap_or((s, s));
    let a: usize = a.parse().map_err(|e| bad(format!("{e}")))?;
    let b: usize = b.parse().map_err(|e| bad(format!("{e}")))?;
    if a > b {
        return Err(bad("empty range".into()));
    }
    Ok((a..=b).collect())
}

/// `RxC`
pub fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("shape {s:?}: expected RxC"));
    let (r, c) = s.split_once('x').ok_or_else(bad)?;
    Ok((r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?))
}
