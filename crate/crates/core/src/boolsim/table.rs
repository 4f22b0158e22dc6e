use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One estimated or computed density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub quantity: String,
    pub test_body: Option<String>,
    pub estimate: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// Densities keyed by quantity id and optional test body id.
///
/// Quantity ids: `Z:V{j}` and `X:V{j}` for the densities of the intrinsic
/// volumes of the union set and of the particle process, `Z:VK{j}` and
/// `X:VK{j}` for V̄(·[j], K[d−j]) with the test body K named in the row,
/// and `X:V_{m₁}_{m₂}…` for the mixed functionals V̄_𝐦(X, …, X).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
}

pub const CSV_HEADER: [&str; 5] = ["quantity", "test_body", "estimate", "stderr", "reps"];

impl DensityTable {
    pub fn push(&mut self, quantity: impl Into<String>, test_body: Option<&str>, estimate: f64, stderr: f64, reps: usize) {
        self.rows.push(DensityRow {
            quantity: quantity.into(),
            test_body: test_body.map(str::to_owned),
            estimate,
            stderr,
            reps,
        });
    }

    pub fn get(&self, quantity: &str, test_body: Option<&str>) -> Option<&DensityRow> {
        self.rows
            .iter()
            .find(|r| r.quantity == quantity && r.test_body.as_deref() == test_body)
    }

    pub fn value(&self, quantity: &str, test_body: Option<&str>) -> Option<f64> {
        self.get(quantity, test_body).map(|r| r.estimate)
    }

    pub fn extend(&mut self, other: DensityTable) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Schema(e.to_string());
        out.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            out.write_record([
                r.quantity.clone(),
                r.test_body.clone().unwrap_or_default(),
                r.estimate.to_string(),
                r.stderr.to_string(),
                r.reps.to_string(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads the CSV form; any deviation from the header or a malformed
    /// field is a schema error. Lines starting with `#` are skipped.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_reader(r);
        let header = rd.headers().map_err(|e| Error::Schema(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Schema(format!(
                "expected header {}, found {}",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut table = DensityTable::default();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
            let bad = |what: &str| Error::Schema(format!("row {}: bad {what}", line + 1));
            if rec.len() != 5 {
                return Err(bad("field count"));
            }
            let num = |i: usize, what: &str| rec[i].trim().parse::<f64>().map_err(|_| bad(what));
            let estimate = num(2, "estimate")?;
            let stderr = num(3, "stderr")?;
            let reps: usize = rec[4].trim().parse().map_err(|_| bad("reps"))?;
            if rec[0].is_empty() {
                return Err(bad("quantity"));
            }
            if !(stderr >= 0.0) || reps == 0 {
                return Err(bad("stderr or reps"));
            }
            let body = (!rec[1].is_empty()).then(|| &rec[1]);
            table.push(&rec[0], body, estimate, stderr, reps);
        }
        Ok(table)
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = DensityTable::default();
        t.push("Z:V0", None, -0.125, 0.01, 20);
        t.push("Z:VK1", Some("seg3"), 1.0 / 3.0, 0.0, 1);
        let s = t.to_csv_string();
        assert!(s.starts_with("quantity,test_body,estimate,stderr,reps\n"));
        assert_eq!(DensityTable::read_csv(s.as_bytes()).unwrap(), t);
        let tagged = format!("# seed=3\n{s}");
        assert_eq!(DensityTable::read_csv(tagged.as_bytes()).unwrap(), t);
    }

    #[test]
    fn schema_errors() {
        let bad_header = "quantity,body,estimate,stderr,reps\n";
        assert!(matches!(DensityTable::read_csv(bad_header.as_bytes()), Err(Error::Schema(_))));
        let bad_num = "quantity,test_body,estimate,stderr,reps\nZ:V0,,x,0,1\n";
        assert!(matches!(DensityTable::read_csv(bad_num.as_bytes()), Err(Error::Schema(_))));
        let neg = "quantity,test_body,estimate,stderr,reps\nZ:V0,,1,-1,1\n";
        assert!(DensityTable::read_csv(neg.as_bytes()).is_err());
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
