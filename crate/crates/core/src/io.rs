//! Text formats for label matrices, truth columns, graphs, predictions and metrics.
//!
//! * labels CSV: header `id,<classifier_id>,...`, one row per instance, entries `-1`/`1`;
//! * truth CSV: header `id,f0`;
//! * graph TSV: `s<TAB>t<TAB>theta` per edge, `0<TAB>0<TAB>theta0` for the
//!   external field, and an optional `# p<TAB><p>` line so trailing isolated
//!   classifiers survive a round trip. Experts are the nodes with an edge to 0;
//! * predictions CSV: `id,pred,score`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{IsingModelSpec, LabelMatrix, Method, PredictionResult};

fn parse_spin(field: &str, row: usize, col: &str) -> Result<i8> {
    match field.trim() {
        "1" | "+1" => Ok(1),
        "-1" => Ok(-1),
        other => Err(Error::Parse(format!(
            "row {row}, column '{col}': expected -1 or 1, found '{other}'"
        ))),
    }
}

pub fn read_labels_csv<R: Read>(reader: R) -> Result<LabelMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "id" {
        return Err(Error::Parse(
            "labels header must be 'id' followed by at least two classifier ids".into(),
        ));
    }
    let classifier_ids: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); classifier_ids.len()];
    let mut ids = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {row} has {} fields, expected {}",
                rec.len(),
                headers.len()
            )));
        }
        ids.push(rec[0].to_owned());
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_spin(&rec[j + 1], row, &classifier_ids[j])?);
        }
    }
    LabelMatrix::from_columns(columns)?
        .with_classifier_ids(classifier_ids)?
        .with_instance_ids(ids)
}

pub fn write_labels_csv<W: Write>(writer: W, labels: &LabelMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_owned()];
    header.extend(labels.classifier_ids().iter().cloned());
    w.write_record(&header)?;
    for i in 0..labels.n() {
        let mut rec = vec![labels.instance_ids()[i].clone()];
        rec.extend((1..=labels.p()).map(|s| labels.get(i, s).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A truth column keyed by instance id.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthColumn {
    pub ids: Vec<String>,
    pub values: Vec<i8>,
}

impl TruthColumn {
    /// Reorder to match `ids`; every id must be present.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Vec<i8>> {
        let index: HashMap<&str, i8> = self
            .ids
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
            .collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Parse(format!("no truth value for instance '{id}'")))
            })
            .collect()
    }
}

pub fn read_truth_csv<R: Read>(reader: R) -> Result<TruthColumn> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "id" {
        return Err(Error::Parse("truth header must be 'id,f0'".into()));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_owned());
        values.push(parse_spin(&rec[1], row, "f0")?);
    }
    Ok(TruthColumn { ids, values })
}

pub fn write_truth_csv<W: Write>(writer: W, ids: &[String], truth: &[i8]) -> Result<()> {
    if ids.len() != truth.len() {
        return Err(Error::Dimension {
            expected: ids.len(),
            found: truth.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "f0"])?;
    for (id, v) in ids.iter().zip(truth) {
        w.write_record([id.as_str(), &v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spec_tsv<R: Read>(reader: R) -> Result<IsingModelSpec> {
    let mut declared_p = None;
    let mut theta0 = 0.0;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("p") {
                let v = parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: '# p' without a value", lineno + 1)))?;
                declared_p = Some(
                    v.parse::<usize>()
                        .map_err(|e| Error::Parse(format!("line {}: bad p '{v}': {e}", lineno + 1)))?,
                );
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected 's<TAB>t<TAB>theta', found '{line}'",
                lineno + 1
            )));
        }
        let bad = |what: &str, v: &str| Error::Parse(format!("line {}: bad {what} '{v}'", lineno + 1));
        let s: usize = fields[0].parse().map_err(|_| bad("node", fields[0]))?;
        let t: usize = fields[1].parse().map_err(|_| bad("node", fields[1]))?;
        let w: f64 = fields[2].parse().map_err(|_| bad("weight", fields[2]))?;
        if s == 0 && t == 0 {
            theta0 = w;
        } else {
            edges.push((s, t, w));
        }
    }
    let max_node = edges.iter().map(|&(s, t, _)| s.max(t)).max().unwrap_or(0);
    let p = declared_p.unwrap_or(max_node);
    IsingModelSpec::new(p, theta0, edges)
}

pub fn write_spec_tsv<W: Write>(mut writer: W, spec: &IsingModelSpec) -> Result<()> {
    writeln!(writer, "# p\t{}", spec.p())?;
    writeln!(writer, "0\t0\t{}", spec.theta0())?;
    for (s, t, w) in spec.edges() {
        writeln!(writer, "{s}\t{t}\t{w}")?;
    }
    Ok(())
}

pub fn write_predictions_csv<W: Write>(writer: W, ids: &[String], pred: &PredictionResult) -> Result<()> {
    if ids.len() != pred.len() {
        return Err(Error::Dimension {
            expected: ids.len(),
            found: pred.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "pred", "score"])?;
    for ((id, l), s) in ids.iter().zip(&pred.labels).zip(&pred.scores) {
        w.write_record([id.as_str(), &l.to_string(), &s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read `id,pred,score`; the method tag is supplied by the caller.
pub fn read_predictions_csv<R: Read>(reader: R, method: Method) -> Result<(Vec<String>, PredictionResult)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "pred", "score"] {
        return Err(Error::Parse("predictions header must be 'id,pred,score'".into()));
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_owned());
        labels.push(parse_spin(&rec[1], row, "pred")?);
        let score: f64 = rec[2]
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: bad score '{}'", &rec[2])))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Parse(format!("row {row}: score {score} outside [0, 1]")));
        }
        scores.push(score);
    }
    Ok((
        ids,
        PredictionResult {
            labels,
            scores,
            method,
            flags: Vec::new(),
        },
    ))
}

pub fn open(path: impl AsRef<Path>) -> Result<File> {
    let path = path.as_ref();
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn create(path: impl AsRef<Path>) -> Result<File> {
    let path = path.as_ref();
    File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
