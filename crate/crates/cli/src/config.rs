//! Flat `key = value` config files. Values given on the command line win
//! over the file, and the file wins over the built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

/// Every key any subcommand reads. Dashes and underscores are interchangeable.
const KNOWN_KEYS: &[&str] = &[
    "seed",
    "format",
    "output",
    "d",
    "rank",
    "n_max",
    "trials",
    "p",
    "eps",
    "omega",
    "series",
    "series_n_max",
    "series_points",
    "n",
    "r",
    "verify_bridging",
    "trials_csv",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    table: Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: Table = text
            .parse()
            .map_err(|e: toml::de::Error| e.message().to_string())?;
        let mut table = Table::new();
        for (key, value) in raw {
            let norm = key.replace('-', "_");
            if !KNOWN_KEYS.contains(&norm.as_str()) {
                return Err(format!("unknown key `{key}`"));
            }
            if value.is_table() {
                return Err(format!("key `{key}` must be a plain value, not a table"));
            }
            table.insert(norm, value);
        }
        Ok(FileConfig { table })
    }

    fn value(&self, key: &str) -> Option<&Value> {
        self.table.get(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.value(key).map(|v| number(key, v)).transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, String> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(other) => Err(format!(
                "`{key}` must be a non-negative integer, got {other}"
            )),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, String> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, String> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(other) => Err(format!("`{key}` must be true or false, got {other}")),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, String> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(format!("`{key}` must be a string, got {other}")),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, String> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    /// A number, an array of numbers, or a comma-separated string.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        match self.value(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| number(key, v))
                .collect::<Result<_, _>>()
                .map(Some),
            Some(Value::String(s)) => parse_list(key, s).map(Some),
            Some(v) => Ok(Some(vec![number(key, v)?])),
        }
    }
}

fn number(key: &str, v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("`{key}` must be a number, got {other}")),
    }
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{key}`: `{}` is not a number", part.trim()))
        })
        .collect()
}

/// Flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
