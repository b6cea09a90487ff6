//! Result tables and their byte-stable CSV/JSON encodings.
//!
//! CSV: UTF-8, '.' decimal separator, '\n' line ends, header row first,
//! empty cells for absent values. JSON: the object laid out in
//! schemas/results.schema.json, null for absent values. Both encodings are
//! deterministic functions of the table, so identical manifests (including
//! the master seed) produce identical bytes.

use noisegate::channels::ChannelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub scenario: String,
    pub channel: ChannelSpec,
    pub seed: u64,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

fn fmt_f64(v: f64) -> String {
    // Rust's shortest round-trip formatting; locale-independent.
    format!("{v}")
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map(fmt_f64).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Some(v) => serde_json::json!(v),
                        None => serde_json::Value::Null,
                    })
                    .collect()
            })
            .collect();
        let doc = serde_json::json!({
            "scenario": self.scenario,
            "channel": {
                "kind": format!("{:?}", self.channel.kind),
                "gammas": self.channel.gammas,
            },
            "seed": self.seed,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("table serialization cannot fail")
    }

    pub fn render(&self, format: super::OutputFormat) -> String {
        match format {
            super::OutputFormat::Csv => self.to_csv(),
            super::OutputFormat::Json => self.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use noisegate::channels::ChannelKind;

    fn table() -> ResultTable {
        ResultTable {
            scenario: "cnot".into(),
            channel: ChannelSpec::new(ChannelKind::BitFlip, vec![0.1]).unwrap(),
            seed: 7,
            columns: vec!["T", "analytic_fidelity", "mc_fidelity", "mc_std_error"],
            rows: vec![
                vec![Some(0.0), Some(1.0), Some(1.0), Some(0.0)],
                vec![Some(0.5), Some(0.25), None, None],
            ],
        }
    }

    #[test]
    fn csv_layout_is_fixed() {
        let csv = table().to_csv();
        assert_eq!(
            csv,
            "T,analytic_fidelity,mc_fidelity,mc_std_error\n0,1,1,0\n0.5,0.25,,\n"
        );
    }

    #[test]
    fn encodings_are_byte_stable() {
        let a = table();
        let b = table();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn json_has_nulls_for_missing_cells() {
        let json = table().to_json();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["rows"][1][2], serde_json::Value::Null);
        assert_eq!(doc["channel"]["kind"], "BitFlip");
    }
}
