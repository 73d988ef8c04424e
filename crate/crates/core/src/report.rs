//! CSV and JSON report rendering.

use serde::Serialize;
use serde_json::{json, Value};

pub const BUILD_ID: &str = concat!("degenlab-", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    /// A single JSON object.
    Scalar(Value),
    Table { header: Vec<String>, rows: Vec<Vec<Value>>, footer: Value },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: Value,
    pub body: Body,
}

/// Resolved configuration block: build id, command, shared parameters and command options.
pub fn config<C: Serialize, T: Serialize>(command: &str, common: &C, options: &T) -> Value {
    json!({ "build": BUILD_ID, "command": command, "params": common, "options": options })
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn scalar(config: Value, result: Value) -> Self {
        Report { config, body: Body::Scalar(result) }
    }

    pub fn table(config: Value, header: &[&str], rows: Vec<Vec<Value>>, footer: Value) -> Self {
        Report { config, body: Body::Table { header: header.iter().map(|s| s.to_string()).collect(), rows, footer } }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
        }
    }

    fn json(&self) -> String {
        let v = match &self.body {
            Body::Scalar(r) => json!({ "config": self.config, "result": r }),
            Body::Table { header, rows, footer } => {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| Value::Object(header.iter().cloned().zip(r.iter().cloned()).collect()))
                    .collect();
                json!({ "config": self.config, "rows": rows, "footer": footer })
            }
        };
        let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
        s.push('\n');
        s
    }

    fn csv(&self) -> String {
        let mut s = format!("# {}\n", self.config);
        match &self.body {
            Body::Scalar(r) => {
                s.push_str("key,value\n");
                if let Value::Object(m) = r {
                    for (k, v) in m {
                        let v = if v.is_array() || v.is_object() { format!("\"{}\"", v.to_string().replace('"', "\"\"")) } else { cell(v) };
                        s.push_str(&format!("{k},{v}\n"));
                    }
                }
            }
            Body::Table { header, rows, footer } => {
                s.push_str(&header.join(","));
                s.push('\n');
                for r in rows {
                    s.push_str(&r.iter().map(cell).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                s.push_str(&format!("# {footer}\n"));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let r = Report::table(json!({"a": 1}), &["x", "y"], vec![vec![json!(1.0), json!(0.5)], vec![json!(2.0), json!(1e-7)]], json!({"slope": -2.0}));
        assert_eq!(r.render(Format::Csv), "# {\"a\":1}\nx,y\n1.0,0.5\n2.0,1e-7\n# {\"slope\":-2.0}\n");
    }

    #[test]
    fn json_keys_are_sorted() {
        let r = Report::scalar(json!({"z": 1}), json!({"b": 2, "a": 1}));
        let s = r.render(Format::Json);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.ends_with("}\n"));
    }
}
