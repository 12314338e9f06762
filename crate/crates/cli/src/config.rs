//! Option defaults from a JSON config file. Flags override these values, and
//! these override built-in defaults.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use spatial_arma::NoiseSpec;

use crate::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct Config {
    values: Map<String, Value>,
}

fn bad(key: &str, want: &str) -> CliError {
    CliError::usage(format!("config key {key:?} must be {want}"))
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(values)) => Ok(Config { values }),
            Ok(_) => Err(CliError::usage("config must be a JSON object")),
            Err(e) => Err(CliError::usage(format!("malformed config: {e}"))),
        }
    }

    pub fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        self.values
            .get(key)
            .map(|v| v.as_u64().map(|x| x as usize).ok_or_else(|| bad(key, "a nonnegative integer")))
            .transpose()
    }

    pub fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        self.values
            .get(key)
            .map(|v| v.as_u64().ok_or_else(|| bad(key, "a nonnegative integer")))
            .transpose()
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.values
            .get(key)
            .map(|v| v.as_f64().ok_or_else(|| bad(key, "a number")))
            .transpose()
    }

    pub fn string(&self, key: &str) -> CliResult<Option<String>> {
        self.values
            .get(key)
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad(key, "a string")))
            .transpose()
    }

    pub fn path(&self, key: &str) -> CliResult<Option<PathBuf>> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    pub fn noise(&self, key: &str) -> CliResult<Option<NoiseSpec>> {
        self.string(key)?
            .map(|s| s.parse::<NoiseSpec>().map_err(|e| CliError::usage(e.to_string())))
            .transpose()
    }

    pub fn floats(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.values
            .get(key)
            .map(|v| {
                v.as_array()
                    .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .ok_or_else(|| bad(key, "an array of numbers"))
            })
            .transpose()
    }
}
