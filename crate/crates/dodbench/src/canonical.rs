//! Canonical interchange format: one JSON record per line, UTF-8.
//!
//! This file layout is the contract between the ingest, datagen, and oracle
//! stages. Field names match [`crate::model::CanonicalRecord`] exactly.

use crate::model::CanonicalRecord;
use std::io::{self, BufRead, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("corrupt record at line {line}: {source}")]
    CorruptRecord {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_record<W: Write>(out: &mut W, record: &CanonicalRecord) -> Result<(), CanonicalError> {
    serde_json::to_writer(&mut *out, record)
        .map_err(|e| CanonicalError::CorruptRecord { line: 0, source: e })?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_records<'a, W, I>(out: &mut W, records: I) -> Result<(), CanonicalError>
where
    W: Write,
    I: IntoIterator<Item = &'a CanonicalRecord>,
{
    for record in records {
        write_record(out, record)?;
    }
    Ok(())
}

/// Iterator over the records of a canonical file, with 1-based line numbers
/// in errors.
pub struct RecordReader<R: BufRead> {
    input: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(input: R) -> Self {
        RecordReader { input, line: 0, buf: String::new() }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<CanonicalRecord, CanonicalError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.is_empty() {
                        continue;
                    }
                    return Some(serde_json::from_str(line).map_err(|e| {
                        CanonicalError::CorruptRecord { line: self.line, source: e }
                    }));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

pub fn read_records(path: &Path) -> Result<Vec<CanonicalRecord>, CanonicalError> {
    let file = std::fs::File::open(path)?;
    RecordReader::new(io::BufReader::new(file)).collect()
}

pub fn write_records_to_path(path: &Path, records: &[CanonicalRecord]) -> Result<(), CanonicalError> {
    let file = std::fs::File::create(path)?;
    let mut out = io::BufWriter::new(file);
    write_records(&mut out, records)?;
    out.flush()?;
    Ok(())
}
