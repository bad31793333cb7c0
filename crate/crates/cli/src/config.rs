//! Run configuration: documented defaults, optional JSON config file, and
//! command-line flags, merged in that order of increasing precedence. The
//! fully resolved configuration is echoed into `meta.json`, and a run can
//! be replayed from that file alone.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::AppError;

/// Linear range `lo:hi:n` (n points, endpoints included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

impl std::str::FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected LO:HI:N, got {s:?}"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("bad LO in {s:?}: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("bad HI in {s:?}: {e}"))?;
        let n: usize = parts[2].parse().map_err(|e| format!("bad N in {s:?}: {e}"))?;
        if n == 0 {
            return Err(format!("N must be positive in {s:?}"));
        }
        if !lo.is_finite() || !hi.is_finite() || (n > 1 && lo >= hi) {
            return Err(format!("range {s:?} must have finite LO < HI"));
        }
        Ok(Self { lo, hi, n })
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    StateAverage,
    ProbabilityWeighted,
}

impl Mixing {
    pub fn to_core(self) -> wva_core::MixingConvention {
        match self {
            Mixing::StateAverage => wva_core::MixingConvention::StateAverage,
            Mixing::ProbabilityWeighted => wva_core::MixingConvention::ProbabilityWeighted,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mixing::StateAverage => "state-average",
            Mixing::ProbabilityWeighted => "probability-weighted",
        }
    }
}

impl std::str::FromStr for Mixing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "state-average" => Ok(Mixing::StateAverage),
            "probability-weighted" => Ok(Mixing::ProbabilityWeighted),
            other => Err(format!(
                "unknown mixing {other:?} (expected state-average or probability-weighted)"
            )),
        }
    }
}

/// Accepts a JSON number or a numeric string; `meta.json` prints numbers
/// as 17-significant-digit strings so that replays are exact.
fn num_or_string<'de, D>(deserializer: D) -> Result<Option<f64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Option::<Raw>::deserialize(deserializer)? {
        None => Ok(None),
        Some(Raw::Number(x)) => Ok(Some(x)),
        Some(Raw::Text(s)) => {
            s.trim().parse().map(Some).map_err(serde::de::Error::custom)
        }
    }
}

/// Partial configuration as read from a JSON config file (or a previous
/// run's `meta.json`; unknown keys are ignored). Ranges and lists are
/// strings in the same syntax the flags use.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileConfig {
    #[serde(default, deserialize_with = "num_or_string")]
    pub e0: Option<f64>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub delta_e: Option<f64>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub gamma: Option<f64>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub delta: Option<f64>,
    pub delta_range: Option<String>,
    pub delta_list: Option<String>,
    pub delta_e_range: Option<String>,
    pub delta_e_list: Option<String>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub gamma_noise: Option<f64>,
    pub gamma_noise_range: Option<String>,
    pub gamma_noise_list: Option<String>,
    pub mixing: Option<String>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub sigma: Option<f64>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub tau_c: Option<f64>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub pump_rate: Option<f64>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub total_time: Option<f64>,
    pub rate_range: Option<String>,
    pub rate_list: Option<String>,
    pub ratio_list: Option<String>,
    pub inset_delta_e_list: Option<String>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    #[serde(default, deserialize_with = "num_or_string")]
    pub grid_half_width: Option<f64>,
    pub reoptimize_delta: Option<bool>,
    pub audit: Option<bool>,
}

/// Fully resolved run configuration. Axis fields hold materialized value
/// lists so that a replayed run sees exactly the same inputs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub e0: f64,
    pub delta_e: f64,
    pub gamma: f64,
    /// Single post-selection parameter; `None` means "use the optimum".
    pub delta: Option<f64>,
    pub delta_axis: Vec<f64>,
    pub delta_e_axis: Vec<f64>,
    pub gamma_noise: f64,
    pub gamma_noise_axis: Vec<f64>,
    pub mixing: Mixing,
    pub sigma: f64,
    pub tau_c: f64,
    pub pump_rate: f64,
    pub total_time: f64,
    pub rate_axis: Vec<f64>,
    pub ratio_axis: Vec<f64>,
    pub inset_delta_e_axis: Vec<f64>,
    pub trials: u32,
    pub seed: u64,
    pub grid_points: usize,
    pub grid_half_width: f64,
    pub reoptimize_delta: bool,
    pub audit: bool,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
}

/// Raw option set shared by every subcommand; `None` falls through to the
/// config file and then to the defaults table.
#[derive(Debug, Clone, Default)]
pub struct RawOptions {
    pub e0: Option<f64>,
    pub delta_e: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub delta_range: Option<RangeSpec>,
    pub delta_e_range: Option<RangeSpec>,
    pub gamma_noise: Option<f64>,
    pub gamma_noise_range: Option<RangeSpec>,
    pub mixing: Option<Mixing>,
    pub sigma: Option<f64>,
    pub tau_c: Option<f64>,
    pub pump_rate: Option<f64>,
    pub total_time: Option<f64>,
    pub rate_range: Option<RangeSpec>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub grid_half_width: Option<f64>,
    pub reoptimize_delta: bool,
    pub audit: bool,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub config: Option<PathBuf>,
}

/// Documented defaults (energies in linewidth units, times in lifetimes).
pub mod defaults {
    pub const E0: f64 = 0.0;
    pub const DELTA_E: f64 = 0.1;
    pub const GAMMA: f64 = 1.0;
    pub const GAMMA_NOISE: f64 = 0.1;
    pub const SIGMA: f64 = 1.0;
    pub const TAU_C: f64 = 1e3;
    pub const PUMP_RATE: f64 = 1.0;
    pub const TOTAL_TIME: f64 = 1e6;
    pub const TRIALS: u32 = 0;
    pub const SEED: u64 = 12345;
    pub const GRID_POINTS: usize = 401;
    pub const GRID_HALF_WIDTH: f64 = 4.0;
    pub const OUT_DIR: &str = "wva-out";
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (la, lb) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(la + (lb - la) * i as f64 / (n - 1) as f64)).collect()
}

/// Signed post-selection axis for the spectra sweep: log-spaced refinement
/// toward zero on both sides, plus the orthogonal point itself.
pub fn default_signed_delta_axis() -> Vec<f64> {
    let positive = log_spaced(1e-3, 1.0, 21);
    let mut axis: Vec<f64> = positive.iter().map(|&d| -d).collect();
    axis.push(0.0);
    axis.extend(positive.iter().copied());
    axis.sort_by(f64::total_cmp);
    axis
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, AppError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| AppError::config(format!("bad {what} entry {tok:?}: {e}")))
        })
        .collect()
}

fn join_list(values: &[f64]) -> String {
    values.iter().map(|v| crate::output::fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

struct AxisSource<'a> {
    flag_range: Option<RangeSpec>,
    file_list: Option<&'a str>,
    file_range: Option<&'a str>,
}

impl AxisSource<'_> {
    /// Precedence: flag range, then explicit list from the config file,
    /// then range from the config file, then the built-in default.
    fn resolve(&self, what: &str, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, AppError> {
        if let Some(range) = self.flag_range {
            return Ok(range.values());
        }
        if let Some(list) = self.file_list {
            return parse_list(list, what);
        }
        if let Some(range) = self.file_range {
            let spec: RangeSpec = range
                .parse()
                .map_err(|e| AppError::config(format!("bad {what} range: {e}")))?;
            return Ok(spec.values());
        }
        Ok(default())
    }
}

pub fn resolve(command: &'static str, raw: &RawOptions) -> Result<RunConfig, AppError> {
    let file: FileConfig = match &raw.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(AppError::Io)?;
            serde_json::from_str(&text)
                .map_err(|e| AppError::config(format!("config file {path:?}: {e}")))?
        }
        None => FileConfig::default(),
    };

    let mixing = match (raw.mixing, file.mixing.as_deref()) {
        (Some(m), _) => m,
        (None, Some(s)) => s.parse().map_err(AppError::config)?,
        (None, None) => Mixing::StateAverage,
    };

    let delta_axis = AxisSource {
        flag_range: raw.delta_range,
        file_list: file.delta_list.as_deref(),
        file_range: file.delta_range.as_deref(),
    }
    .resolve("delta", || match command {
        "fig1c" => default_signed_delta_axis(),
        "fig3" => log_spaced(1e-3, 1.0, 49),
        _ => log_spaced(5e-3, 1.0, 28),
    })?;

    let delta_e_axis = AxisSource {
        flag_range: raw.delta_e_range,
        file_list: file.delta_e_list.as_deref(),
        file_range: file.delta_e_range.as_deref(),
    }
    .resolve("delta_e", || log_spaced(1e-3, 1.0, 24))?;

    let gamma_noise_axis = AxisSource {
        flag_range: raw.gamma_noise_range,
        file_list: file.gamma_noise_list.as_deref(),
        file_range: file.gamma_noise_range.as_deref(),
    }
    .resolve("gamma_noise", || {
        let mut axis = vec![0.0];
        axis.extend(log_spaced(0.01, 1.0, 16));
        axis
    })?;

    let rate_axis = AxisSource {
        flag_range: raw.rate_range,
        file_list: file.rate_list.as_deref(),
        file_range: file.rate_range.as_deref(),
    }
    .resolve("rate", || log_spaced(1e-5, 1.0, 41))?;

    let ratio_axis = match file.ratio_list.as_deref() {
        Some(list) => parse_list(list, "ratio")?,
        None => {
            let mut axis = vec![0.0];
            axis.extend(log_spaced(0.05, 5.0, 13));
            axis
        }
    };

    let inset_delta_e_axis = match file.inset_delta_e_list.as_deref() {
        Some(list) => parse_list(list, "inset delta_e")?,
        None => vec![0.05, 0.1, 0.2],
    };

    let delta = raw.delta.or(file.delta);
    if let Some(d) = delta {
        if !d.is_finite() || d.abs() > 1.0 {
            return Err(AppError::config(format!("delta must satisfy |delta| <= 1, got {d}")));
        }
    }
    if let Some(&bad) = delta_axis.iter().find(|d| !d.is_finite() || d.abs() > 1.0) {
        return Err(AppError::config(format!("delta axis leaves |delta| <= 1: {bad}")));
    }
    if let Some(&bad) = delta_e_axis.iter().find(|d| !d.is_finite() || **d < 0.0) {
        return Err(AppError::config(format!("splitting axis must be nonnegative: {bad}")));
    }
    if let Some(&bad) = gamma_noise_axis.iter().find(|g| !g.is_finite() || **g < 0.0) {
        return Err(AppError::config(format!("noise-width axis must be nonnegative: {bad}")));
    }
    if let Some(&bad) = rate_axis.iter().find(|r| !r.is_finite() || **r <= 0.0) {
        return Err(AppError::config(format!("rate axis must be positive: {bad}")));
    }

    Ok(RunConfig {
        command,
        e0: raw.e0.or(file.e0).unwrap_or(defaults::E0),
        delta_e: raw.delta_e.or(file.delta_e).unwrap_or(defaults::DELTA_E),
        gamma: raw.gamma.or(file.gamma).unwrap_or(defaults::GAMMA),
        delta,
        delta_axis,
        delta_e_axis,
        gamma_noise: raw.gamma_noise.or(file.gamma_noise).unwrap_or(defaults::GAMMA_NOISE),
        gamma_noise_axis,
        mixing,
        sigma: raw.sigma.or(file.sigma).unwrap_or(defaults::SIGMA),
        tau_c: raw.tau_c.or(file.tau_c).unwrap_or(defaults::TAU_C),
        pump_rate: raw.pump_rate.or(file.pump_rate).unwrap_or(defaults::PUMP_RATE),
        total_time: raw.total_time.or(file.total_time).unwrap_or(defaults::TOTAL_TIME),
        rate_axis,
        ratio_axis,
        inset_delta_e_axis,
        trials: raw.trials.or(file.trials).unwrap_or(defaults::TRIALS),
        seed: raw.seed.or(file.seed).unwrap_or(defaults::SEED),
        grid_points: raw.grid_points.or(file.grid_points).unwrap_or(defaults::GRID_POINTS),
        grid_half_width: raw
            .grid_half_width
            .or(file.grid_half_width)
            .unwrap_or(defaults::GRID_HALF_WIDTH),
        reoptimize_delta: raw.reoptimize_delta || file.reoptimize_delta.unwrap_or(false),
        audit: raw.audit || file.audit.unwrap_or(false),
        out_dir: raw.out.clone().unwrap_or_else(|| PathBuf::from(defaults::OUT_DIR)),
        emit_svg: raw.svg,
    })
}

impl RunConfig {
    pub fn spectral_params(&self) -> Result<wva_core::SpectralParams, AppError> {
        wva_core::SpectralParams::new(self.e0, self.delta_e, self.gamma).map_err(AppError::from_config_domain)
    }

    pub fn noise_config(&self) -> Result<wva_core::SlowNoiseConfig, AppError> {
        Ok(wva_core::SlowNoiseConfig::new(self.sigma, self.tau_c, self.pump_rate, self.total_time)
            .map_err(AppError::from_config_domain)?
            .with_trials(self.trials.max(2))
            .with_seed(self.seed))
    }

    /// Flat key/value echo of the resolved configuration for `meta.json`.
    pub fn meta_entries(&self) -> Vec<(&'static str, serde_json::Value)> {
        use serde_json::Value;
        let num = |x: f64| Value::String(crate::output::fmt_f64(x));
        vec![
            ("command", Value::String(self.command.to_string())),
            ("e0", num(self.e0)),
            ("delta_e", num(self.delta_e)),
            ("gamma", num(self.gamma)),
            (
                "delta",
                match self.delta {
                    Some(d) => num(d),
                    None => Value::Null,
                },
            ),
            ("delta_list", Value::String(join_list(&self.delta_axis))),
            ("delta_e_list", Value::String(join_list(&self.delta_e_axis))),
            ("gamma_noise", num(self.gamma_noise)),
            ("gamma_noise_list", Value::String(join_list(&self.gamma_noise_axis))),
            ("mixing", Value::String(self.mixing.as_str().to_string())),
            ("sigma", num(self.sigma)),
            ("tau_c", num(self.tau_c)),
            ("pump_rate", num(self.pump_rate)),
            ("total_time", num(self.total_time)),
            ("rate_list", Value::String(join_list(&self.rate_axis))),
            ("ratio_list", Value::String(join_list(&self.ratio_axis))),
            ("inset_delta_e_list", Value::String(join_list(&self.inset_delta_e_axis))),
            ("trials", Value::from(self.trials)),
            ("seed", Value::from(self.seed)),
            ("grid_points", Value::from(self.grid_points as u64)),
            ("grid_half_width", num(self.grid_half_width)),
            ("reoptimize_delta", Value::from(self.reoptimize_delta)),
            ("audit", Value::from(self.audit)),
            ("out", Value::String(self.out_dir.display().to_string())),
            ("svg", Value::from(self.emit_svg)),
        ]
    }
}
