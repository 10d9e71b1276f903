use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::records::Record;

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
}

impl RecordError {
    pub fn is_io(&self) -> bool {
        matches!(self, RecordError::Io { .. })
    }
}

/// Parses one record per non-blank line.
pub fn parse_records<R: Record>(reader: impl Read) -> Result<Vec<R>, RecordError> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| RecordError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line::<R>(&line, line_no)?);
    }
    Ok(out)
}

fn parse_line<R: Record>(line: &str, line_no: usize) -> Result<R, RecordError> {
    let value: Value = serde_json::from_str(line).map_err(|e| RecordError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = &value else {
        return Err(RecordError::Malformed {
            line: line_no,
            message: "expected a JSON object".into(),
        });
    };
    if let Some(missing) = R::SCHEMA
        .required_fields()
        .iter()
        .find(|f| !obj.contains_key(**f))
    {
        return Err(RecordError::Schema {
            line: line_no,
            field: (*missing).to_string(),
            message: format!("required by the {} schema but missing", R::SCHEMA),
        });
    }
    let mut record: R = serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        RecordError::Schema {
            line: line_no,
            field,
            message: e.into_inner().to_string(),
        }
    })?;
    record.normalize();
    record.check().map_err(|issue| RecordError::Schema {
        line: line_no,
        field: issue.field,
        message: issue.message,
    })?;
    Ok(record)
}

pub fn read_records<R: Record>(path: impl AsRef<Path>) -> Result<Vec<R>, RecordError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_records(file)
}

pub fn render_records<R: Record>(records: &[R]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_records<R: Record>(path: impl AsRef<Path>, records: &[R]) -> Result<(), RecordError> {
    let path = path.as_ref();
    let io_err = |source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(render_records(records).as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}
