use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Decimal places kept in report values unless `--precise` is given.
pub const DISPLAY_DECIMALS: i32 = 6;

/// Machine-readable result of one CLI command.
///
/// `timestamp_unix` and `duration_ms` are the only fields that vary between
/// identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    pub values: BTreeMap<String, f64>,
    pub hyperparameters: BTreeMap<String, Value>,
    pub regularized: BTreeMap<String, bool>,
    pub precise: bool,
    pub timestamp_unix: u64,
    pub duration_ms: f64,
}

pub fn round_display(v: f64) -> f64 {
    let scale = 10f64.powi(DISPLAY_DECIMALS);
    // `+ 0.0` turns a rounded -0.0 into 0.0.
    (v * scale).round() / scale + 0.0
}

impl MetricReport {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.to_string(),
            inputs: BTreeMap::new(),
            counts: BTreeMap::new(),
            values: BTreeMap::new(),
            hyperparameters: BTreeMap::new(),
            regularized: BTreeMap::new(),
            precise: false,
            timestamp_unix: 0,
            duration_ms: 0.0,
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> &mut Self {
        self.inputs.insert(name.into(), path.display().to_string());
        self
    }

    pub fn count(&mut self, name: &str, n: impl TryInto<u64>) -> &mut Self {
        self.counts
            .insert(name.into(), n.try_into().unwrap_or(u64::MAX));
        self
    }

    pub fn value(&mut self, name: &str, v: f64) -> &mut Self {
        self.values.insert(name.into(), v);
        self
    }

    pub fn hyper(&mut self, name: &str, v: impl Into<Value>) -> &mut Self {
        self.hyperparameters.insert(name.into(), v.into());
        self
    }

    /// Stamps timing, applies display rounding and checks that every value
    /// is finite.
    pub fn finish(mut self, precise: bool, elapsed: Duration) -> Result<Self> {
        if let Some((k, v)) = self.values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("report value {k} = {v}")));
        }
        if !precise {
            self.values
                .values_mut()
                .for_each(|v| *v = round_display(*v));
        }
        self.precise = precise;
        self.timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.duration_ms = elapsed.as_secs_f64() * 1e3;
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
