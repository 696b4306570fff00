//! Machine-readable run reports.
//!
//! Reports are byte-identical across runs of the same config and seed: all
//! maps are ordered, reals are rounded to 12 significant digits before
//! serialization (serde then prints the shortest round-trip form of the
//! rounded value), and wall times live in a separate `timing` block that
//! comparisons exclude.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant decimal digits.
pub fn round_real(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let digits = 11 - magnitude;
    if !(-250..=250).contains(&digits) {
        return x;
    }
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

/// JSON number carrying the rounding rule.
pub fn real(x: f64) -> Value {
    json!(round_real(x))
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| real(x)).collect())
}

/// Stable digest of the parsed config: sha256 over its canonical
/// serialization, hex-encoded.
pub fn config_digest(config: &crate::config::ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    /// An asserted property failed; the run continues but exits nonzero.
    Failed,
    /// The task could not run at all.
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub id: String,
    pub kind: String,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskTiming {
    pub id: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub tasks: Vec<TaskReport>,
    pub timing: Vec<TaskTiming>,
}

impl RunReport {
    pub fn new(config_digest: String, seed: u64, warnings: Vec<String>) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest,
            seed,
            warnings,
            tasks: Vec::new(),
            timing: Vec::new(),
        }
    }

    pub fn exit_ok(&self) -> bool {
        self.tasks.iter().all(|t| t.status == TaskStatus::Ok)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with the timing block removed, for determinism checks.
    pub fn timing_excluded_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut value {
            map.remove("timing");
        }
        serde_json::to_string_pretty(&value).expect("value serializes")
    }
}

/// Derives a per-task RNG seed from the global seed and the task id, so
/// reordering tasks does not change any task's stream.
pub fn task_seed(global_seed: u64, task_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(task_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}
