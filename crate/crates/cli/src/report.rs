use std::fmt;

use serde_json::{Map, Value};

#[derive(Debug)]
pub enum CliError {
    /// Missing or unreadable files, malformed edge lists.
    Io(String),
    /// Bad parameters or unknown node labels.
    Input(String),
    /// Graph too large for the requested oracle.
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Input(m) | CliError::Guard(m) => f.write_str(m),
        }
    }
}

impl From<bippr::Error> for CliError {
    fn from(e: bippr::Error) -> Self {
        use bippr::Error as E;
        match e {
            E::Io(_) | E::Parse { .. } | E::NoConvergence { .. } => CliError::Io(e.to_string()),
            E::NodeOutOfRange { .. } | E::IsolatedNode(_) | E::InvalidParameter(_) => CliError::Input(e.to_string()),
        }
    }
}

/// Rows of JSON scalars rendered either as CSV or as a JSON array of objects.
#[derive(Debug, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (k, v) in self.columns.iter().zip(row) {
                    obj.insert(k.clone(), v.clone());
                }
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&records).expect("table serializes");
        s.push('\n');
        s
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => (if *b { "1" } else { "0" }).to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => {
            if s.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        other => other.to_string(),
    }
}

/// Float as a JSON value; non-finite values become null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_quoting_and_blanks() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![json!("x,y"), Value::Null, num(0.5)]);
        t.push(vec![json!("say \"hi\""), json!(true), num(f64::NAN)]);
        assert_eq!(t.to_csv(), "a,b,c\n\"x,y\",,0.5\n\"say \"\"hi\"\"\",1,\n");
    }

    #[test]
    fn json_rows_keep_columns() {
        let mut t = Table::new(&["node", "value"]);
        t.push(vec![json!("a"), num(0.25)]);
        let parsed: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(parsed, json!([{"node": "a", "value": 0.25}]));
    }

    #[test]
    fn error_codes() {
        let e: CliError = bippr::Error::IsolatedNode(3).into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = bippr::Error::Parse { line: 1, message: "x".into() }.into();
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::Guard("big".into()).exit_code(), 3);
    }
}
