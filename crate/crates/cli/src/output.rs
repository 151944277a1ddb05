use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "reeb-growth";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

/// Everything that identifies a run: command, parameters and input bytes.
#[derive(Debug, Clone)]
pub struct Provenance {
    command: String,
    params: Vec<(String, String)>,
    hasher: Sha256,
    inputs: usize,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        Provenance { command: command.to_string(), params: Vec::new(), hasher: Sha256::new(), inputs: 0 }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn input(&mut self, bytes: &[u8]) -> &mut Self {
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
        self.inputs += 1;
        self
    }

    /// Hash of the input files, or of the parameters when there are none.
    pub fn input_sha256(&self) -> String {
        let mut h = self.hasher.clone();
        if self.inputs == 0 {
            for (k, v) in &self.params {
                h.update(k.as_bytes());
                h.update(b"=");
                h.update(v.as_bytes());
                h.update(b"\n");
            }
        }
        hex::encode(h.finalize())
    }

    pub fn header(&self, columns: &[&str]) -> String {
        let mut s = format!("# {TOOL} {VERSION} command={} input_sha256={}", self.command, self.input_sha256());
        for (k, v) in &self.params {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push_str(&format!(" columns={}", columns.join(",")));
        s
    }

    pub fn meta(&self) -> Value {
        let params: Map<String, Value> = self.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "input_sha256": self.input_sha256(),
            "params": params,
        })
    }

    /// `payload` with `schema` and `meta` added.
    pub fn wrap(&self, payload: Value) -> Value {
        let mut obj = match payload {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        obj.insert("schema".into(), json!(SCHEMA));
        obj.insert("meta".into(), self.meta());
        Value::Object(obj)
    }
}

/// A table plus its JSON form; rendered in the requested format.
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
}

impl Report {
    pub fn render(&self, prov: &Provenance, format: Format) -> String {
        match format {
            Format::Tsv => {
                let mut s = prov.header(&self.columns);
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&row.join("\t"));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&prov.wrap(self.json.clone())).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Shortest round-trip decimal form, `nan` and `inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        format!("{x}").to_lowercase()
    }
}
