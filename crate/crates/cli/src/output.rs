//! CSV and metadata writers. CSVs are comma-separated with a header row,
//! LF line endings, UTF-8, and every number printed with 17 significant
//! digits so that repeated runs diff byte-for-byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::AppError;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    fmt_f64(x.unwrap_or(f64::NAN))
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, AppError> {
        let file = File::create(path).map_err(AppError::Io)?;
        let mut writer = Self { out: BufWriter::new(file) };
        writer.write_row(header.iter().map(|s| s.to_string()))?;
        Ok(writer)
    }

    pub fn write_row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), AppError> {
        let line = fields.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}").map_err(AppError::Io)
    }

    pub fn finish(mut self) -> Result<(), AppError> {
        self.out.flush().map_err(AppError::Io)
    }
}

/// Flat `meta.json` next to the data files: resolved configuration plus
/// software version, RNG identity, wall-clock duration, and per-run
/// diagnostics.
pub struct MetaBuilder {
    map: Map<String, Value>,
}

impl MetaBuilder {
    pub fn new(cfg: &crate::config::RunConfig) -> Self {
        let mut map = Map::new();
        map.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        map.insert("rng_algorithm".into(), Value::String(wva_core::RNG_ALGORITHM.into()));
        for (key, value) in cfg.meta_entries() {
            map.insert(key.into(), value);
        }
        Self { map }
    }

    pub fn put_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.map.insert(key.into(), Value::String(fmt_f64(value)));
        self
    }

    pub fn put_str(&mut self, key: &str, value: &str) -> &mut Self {
        self.map.insert(key.into(), Value::String(value.into()));
        self
    }

    pub fn write(mut self, path: &Path, started: std::time::Instant) -> Result<(), AppError> {
        self.map.insert(
            "duration_seconds".into(),
            Value::String(format!("{:.3}", started.elapsed().as_secs_f64())),
        );
        let text = serde_json::to_string_pretty(&Value::Object(self.map))
            .expect("meta serialization cannot fail");
        std::fs::write(path, text + "\n").map_err(AppError::Io)
    }
}
