use ekrw_core::counting::ExtremalReport;
use ekrw_core::thresholds::RangeClassification;
use serde::Serialize;
use serde_json::{json, Map, Value};

/// A fixed-column table rendered as JSON rows or CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Table {
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.clone()))
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

pub fn extremal_table(rows: &[ExtremalReport]) -> Table {
    Table {
        columns: vec!["n", "k", "d", "|A|", "|H|", "m", "r*_m", "t", "r*_t", "max"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    json!(r.n),
                    json!(r.k),
                    json!(r.d),
                    json!(r.a.to_string()),
                    json!(r.h.to_string()),
                    json!(r.m.to_string()),
                    json!(r.m_r),
                    json!(r.t.to_string()),
                    json!(r.t_r),
                    json!(r.max().to_string()),
                ]
            })
            .collect(),
    }
}

pub fn threshold_table(rows: &[RangeClassification]) -> Table {
    let mut out = Vec::new();
    for r in rows {
        for (id, ap) in &r.theorems {
            out.push(vec![
                json!(r.n),
                json!(r.k),
                json!(r.d),
                json!(r.t),
                json!(id),
                json!(ap.applies),
                json!(ap.threshold_value.to_string()),
                json!(ap.upper_value.as_ref().map(|u| u.to_string())),
                json!(ap.bound.as_ref().map(|b| b.to_string())),
                json!(ap.note),
            ]);
        }
    }
    Table {
        columns: vec!["n", "k", "d", "t", "theorem", "applies", "threshold", "upper", "bound", "note"],
        rows: out,
    }
}

#[derive(Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub elapsed_ms: u128,
}

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub parameters: Value,
    pub results: Value,
    pub provenance: Provenance,
}
