use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{validate_record, Cohort, CohortError, Field};

/// Maps file column names onto record fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: BTreeMap<Field, String>,
}

impl Schema {
    /// Column names equal to field names.
    pub fn canonical() -> Self {
        Schema {
            columns: Field::ALL
                .iter()
                .map(|&f| (f, f.name().to_string()))
                .collect(),
        }
    }

    /// Canonical schema with some columns renamed (`field -> column`).
    pub fn with_renames<'a>(renames: impl IntoIterator<Item = (Field, &'a str)>) -> Self {
        let mut s = Self::canonical();
        for (field, col) in renames {
            s.columns.insert(field, col.to_string());
        }
        s
    }

    pub fn column(&self, field: Field) -> &str {
        &self.columns[&field]
    }
}

impl Default for Schema {
    fn default() -> Self {
        Self::canonical()
    }
}

pub fn parse_cohort(path: &Path, schema: &Schema) -> Result<Cohort, CohortError> {
    let file = File::open(path)?;
    read_cohort(file, schema, path.display().to_string())
}

/// Reads a delimited cohort with a header row. Unmapped extra columns are
/// ignored. All row errors are collected, each tagged with its 1-based data
/// row number.
pub fn read_cohort<R: Read>(
    reader: R,
    schema: &Schema,
    provenance: impl Into<String>,
) -> Result<Cohort, CohortError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if position.insert(h, i).is_some() {
            return Err(CohortError::Header(format!("duplicate column `{h}`")));
        }
    }
    let mut layout = Vec::with_capacity(Field::ALL.len());
    let mut missing = Vec::new();
    for f in Field::ALL {
        match position.get(schema.column(f)) {
            Some(&i) => layout.push((f, i)),
            None => missing.push(schema.column(f).to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(CohortError::Header(format!(
            "missing columns: {}",
            missing.join(", ")
        )));
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                errors.push(CohortError::Row {
                    row: row_no,
                    source: Box::new(e.into()),
                });
                continue;
            }
        };
        let map: HashMap<String, String> = layout
            .iter()
            .map(|&(f, i)| (f.name().to_string(), row.get(i).unwrap_or("").to_string()))
            .collect();
        match validate_record(&map) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(CohortError::Row {
                row: row_no,
                source: Box::new(e),
            }),
        }
    }
    match errors.len() {
        0 => Cohort::new(records, provenance),
        1 => Err(errors.pop().unwrap()),
        _ => Err(CohortError::Rows(errors)),
    }
}

/// Writes the canonical CSV form: header of field names, `\n` line endings.
pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<(), CohortError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(Field::ALL.iter().map(|f| f.name()))?;
    for r in cohort.records() {
        w.write_record(r.to_row())?;
    }
    w.flush()?;
    Ok(())
}
