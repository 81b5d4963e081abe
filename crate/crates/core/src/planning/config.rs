use std::collections::BTreeMap;
use std::fmt;

use crate::analysis::Scheme;
use crate::frontend::{launch_keys, BackendKind, LaunchValue, SourceUnit};

/// Backend selection plus its tuning parameters, keyed by name so resolution
/// never depends on the order parameters were written in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendConfig {
    pub backend: BackendKind,
    pub values: BTreeMap<String, LaunchValue>,
}

impl BackendConfig {
    pub fn new(backend: BackendKind) -> Self {
        BackendConfig {
            backend,
            values: BTreeMap::new(),
        }
    }

    /// Configuration from the unit's launch statement, or `seq` without one.
    pub fn from_unit(unit: &SourceUnit) -> Self {
        match &unit.launch {
            Some(l) => BackendConfig {
                backend: l.backend,
                values: l
                    .params
                    .iter()
                    .map(|p| (p.key.clone(), p.value.clone()))
                    .collect(),
            },
            None => BackendConfig::new(BackendKind::Seq),
        }
    }

    /// Switch backend; only backend-independent parameters survive since
    /// the rest were written for a different constructor.
    pub fn with_backend(mut self, backend: BackendKind) -> Self {
        if backend != self.backend {
            self.values.retain(|k, _| k == "decomposition");
            self.backend = backend;
        }
        self
    }

    pub fn set(&mut self, key: &str, value: LaunchValue) -> Result<(), String> {
        if !launch_keys(self.backend).contains(&key) {
            return Err(format!(
                "unknown parameter `{key}` for backend `{}`",
                self.backend
            ));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&LaunchValue> {
        self.values.get(key)
    }

    pub fn word(&self, key: &str) -> Result<Option<&str>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_word()
                .map(Some)
                .ok_or_else(|| format!("parameter `{key}` expects a name, got `{v}`")),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, String> {
        match self.get(key) {
            None => Ok(false),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| format!("parameter `{key}` expects True or False, got `{v}`")),
        }
    }

    pub fn dims(&self, key: &str, min: usize, max: usize) -> Result<Option<Vec<usize>>, String> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let ints = v
            .as_ints()
            .ok_or_else(|| format!("parameter `{key}` expects a tuple of integers, got `{v}`"))?;
        if ints.len() < min || ints.len() > max {
            return Err(format!(
                "parameter `{key}` expects {min} to {max} values, got {}",
                ints.len()
            ));
        }
        if ints.iter().any(|&x| x < 1) {
            return Err(format!("parameter `{key}` values must be at least 1"));
        }
        Ok(Some(ints.into_iter().map(|x| x as usize).collect()))
    }

    pub fn scheme(&self) -> Result<Scheme, String> {
        match self.word("decomposition")? {
            None => Ok(Scheme::CrossProduct),
            Some(w) => Scheme::from_name(w).ok_or_else(|| format!("unknown decomposition `{w}`")),
        }
    }
}

impl fmt::Display for BackendConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "backend={}", self.backend)?;
        for (k, v) in &self.values {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Parse a `key=value` override as written on the command line.
pub fn parse_override(text: &str) -> Result<(String, LaunchValue), String> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{text}`"))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

pub fn parse_value(v: &str) -> LaunchValue {
    if v.contains(',') {
        let items: Vec<LaunchValue> = v
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_value(s.trim()))
            .collect();
        return LaunchValue::Tuple(items);
    }
    if let Ok(i) = v.parse::<i64>() {
        return LaunchValue::Int(i);
    }
    match v {
        "true" | "True" => LaunchValue::Bool(true),
        "false" | "False" => LaunchValue::Bool(false),
        _ => LaunchValue::Str(v.to_string()),
    }
}
