//! Config-file loading. Two spellings are accepted: a plain key=value file
//! (# comments, blank lines ignored) or a JSON result document, whose
//! embedded "config" object is re-ingested.

use super::CliError;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_key_values(&text)
        }
    }

    fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("invalid JSON config: {e}")))?;
        let obj = doc.get("config").unwrap_or(&doc);
        let map = obj
            .as_object()
            .ok_or_else(|| CliError::Usage("JSON config must be an object".into()))?;
        let mut values = BTreeMap::new();
        for (k, v) in map {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Bool(b) => b.to_string(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Null => continue,
                other => other.to_string(),
            };
            values.insert(k.clone(), s);
        }
        Ok(ConfigMap { values })
    }

    fn from_key_values(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {} is not key=value", lineno + 1))
            })?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ConfigMap { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("config {key}={s} is not a number")))
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("config {key}={s} is not an integer")))
            })
            .transpose()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.get(key)
            .map(|s| {
                s.parse::<bool>()
                    .map_err(|_| CliError::Usage(format!("config {key}={s} is not a boolean")))
            })
            .transpose()
    }
}

/// The resolved settings of one invocation, echoed into every output document
/// so a run can be reproduced from its own output.
#[derive(Debug, Default, Clone)]
pub struct ResolvedConfig {
    entries: BTreeMap<String, String>,
}

impl ResolvedConfig {
    pub fn new(command: &str) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("command".to_string(), command.to_string());
        ResolvedConfig { entries }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn command(&self) -> &str {
        self.entries.get("command").map_or("", String::as_str)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_parsing() {
        let cfg = ConfigMap::from_key_values("# comment\n\nmean = 1.48\nsd=1.38\n").unwrap();
        assert_eq!(cfg.get_f64("mean").unwrap(), Some(1.48));
        assert_eq!(cfg.get("sd"), Some("1.38"));
        assert_eq!(cfg.get("missing"), None);
        assert!(ConfigMap::from_key_values("just words").is_err());
    }

    #[test]
    fn json_document_reingestion() {
        let doc = r#"{"tool":"impactfrac","config":{"mean":"1.48","n":"7762","seed":"7"}}"#;
        let cfg = ConfigMap::from_json(doc).unwrap();
        assert_eq!(cfg.get_f64("mean").unwrap(), Some(1.48));
        assert_eq!(cfg.get_u64("seed").unwrap(), Some(7));
        // bare object also accepted
        let cfg = ConfigMap::from_json(r#"{"mean": 1.5}"#).unwrap();
        assert_eq!(cfg.get_f64("mean").unwrap(), Some(1.5));
    }
}
