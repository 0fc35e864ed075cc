//! Result tables and their CSV/JSON encodings.
//!
//! CSV files start with a `# schema: ...` comment line followed by a header
//! row. CDF pairs of a table go to a sibling file in CSV mode and to a `cdf`
//! array in JSON mode.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::scenario::Format;

pub const SCHEMA: &str = "antijam-results/1";
pub const CDF_SCHEMA: &str = "antijam-cdf/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scenario: String,
    pub method: String,
    pub hardware: String,
    pub stats: String,
    /// 1-based.
    pub user: usize,
    pub axis: String,
    pub coordinate: f64,
    pub se: f64,
    pub sinr: f64,
    /// Zero for closed-form values.
    pub std_err: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub method: String,
    pub hardware: String,
    pub user: usize,
    pub value: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema: String,
    pub rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cdf: Vec<CdfPoint>,
}

impl Default for ResultTable {
    fn default() -> Self {
        ResultTable {
            schema: SCHEMA.to_string(),
            rows: Vec::new(),
            cdf: Vec::new(),
        }
    }
}

const ROW_HEADER: [&str; 11] = [
    "scenario",
    "method",
    "hardware",
    "stats",
    "user",
    "axis",
    "coordinate",
    "se",
    "sinr",
    "std_err",
    "seed",
];
const CDF_HEADER: [&str; 5] = ["method", "hardware", "user", "value", "cdf"];

fn write_csv<W: Write, T: Serialize>(mut out: W, schema: &str, header: &[&str], items: &[T]) -> CliResult<()> {
    writeln!(out, "# schema: {schema}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for item in items {
        w.serialize(item)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(input: R, schema: &str) -> CliResult<Vec<T>> {
    let mut input = std::io::BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first)?;
    let found = first.trim().strip_prefix("# schema:").map(str::trim);
    if found != Some(schema) {
        return Err(CliError::Config(format!(
            "expected schema {schema:?}, found {:?}",
            first.trim()
        )));
    }
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

impl ResultTable {
    pub fn new(rows: Vec<Row>) -> Self {
        ResultTable {
            rows,
            ..Default::default()
        }
    }

    /// Fills `cdf` with the empirical CDF of `se` per (method, hardware,
    /// user).
    pub fn with_cdf(mut self) -> Self {
        self.cdf = empirical_cdf(&self.rows);
        self
    }

    pub fn write_csv<W: Write>(&self, out: W) -> CliResult<()> {
        write_csv(out, &self.schema, &ROW_HEADER, &self.rows)
    }

    pub fn write_cdf_csv<W: Write>(&self, out: W) -> CliResult<()> {
        write_csv(out, CDF_SCHEMA, &CDF_HEADER, &self.cdf)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> CliResult<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// Parses the rows of a CSV emission; CDF pairs are not included.
    pub fn read_csv<R: Read>(input: R) -> CliResult<Self> {
        Ok(ResultTable::new(read_csv(input, SCHEMA)?))
    }

    pub fn read_cdf_csv<R: Read>(input: R) -> CliResult<Vec<CdfPoint>> {
        read_csv(input, CDF_SCHEMA)
    }

    pub fn read_json<R: Read>(input: R) -> CliResult<Self> {
        let t: ResultTable = serde_json::from_reader(input)?;
        if t.schema != SCHEMA {
            return Err(CliError::Config(format!("unsupported schema {:?}", t.schema)));
        }
        Ok(t)
    }

    /// Writes the table to `path`. In CSV mode a non-empty CDF goes to the
    /// path returned by [`cdf_path`]. Returns the files written.
    pub fn emit(&self, path: &Path, format: Format) -> CliResult<Vec<PathBuf>> {
        let mut written = vec![path.to_path_buf()];
        match format {
            Format::Csv => {
                self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
                if !self.cdf.is_empty() {
                    let p = cdf_path(path);
                    self.write_cdf_csv(std::io::BufWriter::new(std::fs::File::create(&p)?))?;
                    written.push(p);
                }
            }
            Format::Json => self.write_json(std::io::BufWriter::new(std::fs::File::create(path)?))?,
        }
        Ok(written)
    }

    /// Rows matching a method, hardware variant, stats mode and 1-based user,
    /// in emission order.
    pub fn select<'a>(
        &'a self,
        method: &'a str,
        hardware: &'a str,
        stats: &'a str,
        user: usize,
    ) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.method == method && r.hardware == hardware && r.stats == stats && r.user == user)
    }
}

/// `out.csv` → `out.cdf.csv`.
pub fn cdf_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned());
    let name = match ext {
        Some(e) => format!("{stem}.cdf.{e}"),
        None => format!("{stem}.cdf"),
    };
    path.with_file_name(name)
}

pub fn empirical_cdf(rows: &[Row]) -> Vec<CdfPoint> {
    let mut groups: BTreeMap<(&str, &str, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.method.as_str(), r.hardware.as_str(), r.user))
            .or_default()
            .push(r.se);
    }
    let mut out = Vec::new();
    for ((method, hardware, user), mut values) in groups {
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        out.extend(values.into_iter().enumerate().map(|(i, value)| CdfPoint {
            method: method.to_string(),
            hardware: hardware.to_string(),
            user,
            value,
            cdf: (i + 1) as f64 / n,
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, user: usize, se: f64) -> Row {
        Row {
            scenario: "t".into(),
            method: method.into(),
            hardware: "ideal".into(),
            stats: "genie".into(),
            user,
            axis: "trial".into(),
            coordinate: 0.0,
            se,
            sinr: se.exp2() - 1.0,
            std_err: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn cdf_path_inserts_suffix() {
        assert_eq!(cdf_path(Path::new("/a/out.csv")), PathBuf::from("/a/out.cdf.csv"));
        assert_eq!(cdf_path(Path::new("out")), PathBuf::from("out.cdf"));
    }

    #[test]
    fn empirical_cdf_groups_and_sorts() {
        let rows = vec![
            row("MS", 1, 3.0),
            row("MS", 1, 1.0),
            row("MS", 2, 5.0),
            row("MS", 1, 2.0),
        ];
        let cdf = empirical_cdf(&rows);
        let u1: Vec<_> = cdf.iter().filter(|p| p.user == 1).map(|p| (p.value, p.cdf)).collect();
        assert_eq!(u1, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert_eq!(cdf.iter().filter(|p| p.user == 2).count(), 1);
    }

    #[test]
    fn csv_rejects_wrong_schema() {
        let text = "# schema: other/9\nscenario\n";
        assert!(ResultTable::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn select_filters_rows() {
        let t = ResultTable::new(vec![row("MS", 1, 1.0), row("MMSE-ZF", 1, 0.5), row("MS", 2, 2.0)]);
        let got: Vec<f64> = t.select("MS", "ideal", "genie", 1).map(|r| r.se).collect();
        assert_eq!(got, vec![1.0]);
    }
}
