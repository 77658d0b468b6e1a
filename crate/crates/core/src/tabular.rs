//! Delimiter-separated tables held as opaque text cells.

use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("failed to read table: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record {record}: {message}")]
    Malformed { record: usize, message: String },
    #[error("table has no header row")]
    MissingHeader,
    #[error("empty column name at header position {0}")]
    EmptyHeader(usize),
    #[error("duplicate column name `{0}`")]
    DuplicateHeader(String),
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown column `{column}` in table `{table}` (available: {})", .available.join(", "))]
    UnknownColumn {
        table: String,
        column: String,
        available: Vec<String>,
    },
    #[error("row {row} out of range for table `{table}` with {rows} rows")]
    RowOutOfRange {
        table: String,
        row: usize,
        rows: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A column addressed by table name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        Self {
            table: table.into(),
            column: column.into(),
        }
    }
}

/// Reads a header row followed by data rows. Cells are trimmed; a leading
/// UTF-8 byte-order mark is dropped.
///
/// Records are numbered from 1 with the header as record 1, so the first
/// data row is row 2 in error messages.
pub fn load_table<R: Read>(mut source: R, name: &str, delimiter: u8) -> Result<Table, TableError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let body = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(&bytes);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(body);

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(TableError::MissingHeader),
        Some(r) => r.map_err(|e| malformed(1, e))?,
    };
    let columns: Vec<String> = header.iter().map(|c| c.trim().to_string()).collect();
    for (i, c) in columns.iter().enumerate() {
        if c.is_empty() {
            return Err(TableError::EmptyHeader(i + 1));
        }
        if columns[..i].contains(c) {
            return Err(TableError::DuplicateHeader(c.clone()));
        }
    }

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row_no = i + 2;
        let rec = rec.map_err(|e| malformed(row_no, e))?;
        if rec.len() != columns.len() {
            return Err(TableError::RaggedRow {
                row: row_no,
                expected: columns.len(),
                found: rec.len(),
            });
        }
        rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
    }

    Ok(Table {
        name: name.to_string(),
        columns,
        rows,
    })
}

fn malformed(record: usize, e: csv::Error) -> TableError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TableError::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => TableError::Malformed {
            record,
            message: format!("invalid UTF-8: {err}"),
        },
        other => TableError::Malformed {
            record,
            message: format!("{other:?}"),
        },
    }
}

/// Writes the header and rows, quoting only where needed.
pub fn write_table<W: Write>(table: &Table, sink: W, delimiter: u8) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => TableError::Io(io),
        other => TableError::Io(std::io::Error::other(format!("{other:?}"))),
    };
    w.write_record(&table.columns).map_err(to_io)?;
    for row in &table.rows {
        w.write_record(row).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

impl Table {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, column: &str) -> Result<usize, TableError> {
        let column = column.trim();
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| TableError::UnknownColumn {
                table: self.name.clone(),
                column: column.to_string(),
                available: self.columns.clone(),
            })
    }

    /// `(row index, cell)` pairs for one column, 0-based, in row order.
    pub fn column_values(&self, column: &str) -> Result<Vec<(usize, &str)>, TableError> {
        let c = self.column_index(column)?;
        Ok(self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r[c].as_str()))
            .collect())
    }

    pub fn column_ref(&self, column: &str) -> Result<ColumnRef, TableError> {
        self.column_index(column)?;
        Ok(ColumnRef::new(&self.name, column.trim()))
    }

    pub fn project(&self, row: usize, column: &str) -> Result<&str, TableError> {
        let c = self.column_index(column)?;
        self.rows
            .get(row)
            .map(|r| r[c].as_str())
            .ok_or_else(|| TableError::RowOutOfRange {
                table: self.name.clone(),
                row,
                rows: self.rows.len(),
            })
    }
}
