use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tables::{Dataset, Role, Schema, VarId, Variable};

/// Reads a headed CSV file, coding each column's tokens in order of first
/// appearance. `class` and `cutset` name the columns given those roles;
/// every other column is a feature.
pub fn load_csv(path: &Path, class: Option<&str>, cutset: &[String]) -> Result<Dataset> {
    read_csv(File::open(path)?, class, cutset)
}

pub fn read_csv<R: Read>(reader: R, class: Option<&str>, cutset: &[String]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Malformed("missing header row".into()));
    }
    for name in class.into_iter().chain(cutset.iter().map(String::as_str)) {
        if !header.iter().any(|h| h == name) {
            return Err(Error::UnknownVariable(name.to_string()));
        }
    }
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row: Vec<usize> = record
            .iter()
            .zip(labels.iter_mut())
            .map(|(token, seen)| {
                let token = token.trim();
                seen.iter().position(|t| t == token).unwrap_or_else(|| {
                    seen.push(token.to_string());
                    seen.len() - 1
                })
            })
            .collect();
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let vars = header
        .into_iter()
        .zip(labels)
        .map(|(name, labels)| {
            let role = if Some(name.as_str()) == class {
                Role::Class
            } else if cutset.contains(&name) {
                Role::Cutset
            } else {
                Role::Feature
            };
            Variable::with_labels(name, role, labels)
        })
        .collect();
    Dataset::new(Schema::new(vars)?, rows)
}

/// Rows recoded against an existing schema.
#[derive(Clone, Debug)]
pub struct Recoded {
    pub dataset: Dataset,
    /// Schema variables absent from the file (value 0 in every row). Only
    /// the class may be missing.
    pub missing: Vec<VarId>,
}

pub fn load_csv_with_schema(path: &Path, schema: &Schema) -> Result<Recoded> {
    read_csv_with_schema(File::open(path)?, schema)
}

/// Maps columns by name and tokens by the schema's labels. Extra columns
/// are ignored.
pub fn read_csv_with_schema<R: Read>(reader: R, schema: &Schema) -> Result<Recoded> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let columns: Vec<Option<usize>> = schema.vars().iter().map(|v| header.iter().position(|h| *h == v.name)).collect();
    let missing: Vec<VarId> = (0..schema.len()).filter(|&v| columns[v].is_none()).collect();
    if let Some(&v) = missing.iter().find(|&&v| Some(v) != schema.class_var()) {
        return Err(Error::SchemaMismatch(format!("column `{}` is missing", schema.vars()[v].name)));
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = schema
            .vars()
            .iter()
            .zip(&columns)
            .map(|(var, col)| match col {
                None => Ok(0),
                Some(i) => {
                    let token = record.get(*i).unwrap_or("").trim();
                    var.label_code(token).ok_or_else(|| {
                        Error::Malformed(format!("row {}: token `{token}` is not a value of `{}`", line + 2, var.name))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Recoded { dataset: Dataset::new(schema.clone(), rows)?, missing })
}

/// Writes the dataset with its labels; the write is atomic.
pub fn write_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(dataset.schema().vars().iter().map(|v| v.name.as_str()))?;
        for row in dataset.rows() {
            w.write_record(dataset.schema().vars().iter().zip(row).map(|(v, &x)| v.labels[x].as_str()))?;
        }
        w.flush()?;
    }
    super::write_atomic(path, |f| f.write_all(&buf))
}
