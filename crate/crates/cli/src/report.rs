//! Line-oriented reports: `[section]` headers and `key = value` lines.

use std::fmt::Write;

use psdo_core::C64;
use sha2::{Digest, Sha256};

/// A value as printed in a report.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Float(x) => float(*x),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, Value)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entries: Vec::new(),
        }
    }

    pub fn float(&mut self, key: &str, x: f64) -> &mut Self {
        self.entries.push((key.into(), Value::Float(x)));
        self
    }

    pub fn complex(&mut self, key: &str, z: C64) -> &mut Self {
        self.float(&format!("{key}_re"), z.re).float(&format!("{key}_im"), z.im)
    }

    pub fn int(&mut self, key: &str, i: i64) -> &mut Self {
        self.entries.push((key.into(), Value::Int(i)));
        self
    }

    pub fn flag(&mut self, key: &str, b: bool) -> &mut Self {
        self.entries.push((key.into(), Value::Bool(b)));
        self
    }

    pub fn text(&mut self, key: &str, s: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), Value::Text(s.into())));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A report: the `[meta]` header followed by sections in insertion order.
#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub config_hash: String,
    pub timestamp: u64,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(scenario: &str, config_text: &str, timestamp: u64) -> Self {
        Self {
            scenario: scenario.into(),
            config_hash: config_hash(config_text),
            timestamp,
            sections: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[meta]");
        let _ = writeln!(out, "tool = psdo");
        let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "scenario = {}", self.scenario);
        let _ = writeln!(out, "config_hash = {}", self.config_hash);
        let _ = writeln!(out, "timestamp = {}", self.timestamp);
        for s in &self.sections {
            let _ = writeln!(out, "\n[{}]", s.name);
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k} = {}", v.render());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::new("e", "name = \"e\"\n", 5).render();
        assert_eq!(r.lines().count(), 6);
        assert!(r.starts_with("[meta]\ntool = psdo\n"));
        assert!(r.contains("timestamp = 5"));
    }

    #[test]
    fn sections_keep_insertion_order() {
        let mut r = Report::new("x", "", 0);
        let mut s = Section::new("check.residue");
        s.complex("total", C64::new(1.0, -0.5)).flag("pass", true);
        r.sections.push(s);
        let text = r.render();
        let a = text.find("total_re").unwrap();
        let b = text.find("total_im").unwrap();
        let c = text.find("pass = true").unwrap();
        assert!(a < b && b < c);
    }
}
