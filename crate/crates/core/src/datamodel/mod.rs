//! Shared record types, JSON-lines persistence and dataset-level validation.

mod io;
mod records;
mod report;
mod validate;

pub use io::{parse_records, read_records, render_records, write_records, RecordError};
pub use records::{
    parse_birthday, AttributeKey, Extra, FieldIssue, GenerationRecord, LogProbRecord, Profile,
    QaPair, Record, Schema, SplitLabel, BIRTH_YEAR_RANGE,
};
pub(crate) use records::nfc;
pub use report::{MetricReport, MetricRow, ReportError};
pub use validate::{
    check_generations, check_logprobs, validate_dataset, ConsistencyIssue, ValidationReport,
    Violation,
};
