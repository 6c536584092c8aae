use thiserror::Error;

/// Failure while reading one of the newline-delimited record files.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown line category {value:?}")]
    UnknownCategory { line: usize, value: String },
    #[error("line {line}: unknown stop type {value:?}")]
    UnknownStopType { line: usize, value: String },
    #[error("line {line}: unparseable timestamp {value:?}")]
    BadTimestamp { line: usize, value: String },
    #[error("line {line}: coordinate out of range ({lat}, {lon})")]
    CoordinateOutOfRange { line: usize, lat: f64, lon: f64 },
    #[error("line {line}: empty {field}")]
    EmptyField { line: usize, field: &'static str },
    #[error("line {line}: duplicate line code {code:?}")]
    DuplicateLine { line: usize, code: String },
    #[error("line {line}: duplicate position {seq} for line {line_code:?} direction {direction:?}")]
    DuplicateSeq {
        line: usize,
        line_code: String,
        direction: String,
        seq: u32,
    },
    #[error("line {line}: stop {stop_id:?} redeclared {distance_m:.1} m away from its first declaration")]
    ConflictingStop {
        line: usize,
        stop_id: String,
        distance_m: f64,
    },
    #[error("line {line}: duplicate {kind} {id:?}")]
    DuplicateId { line: usize, kind: &'static str, id: String },
    #[error("line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("itinerary {line_code}/{direction}: {message}")]
    InvalidItinerary {
        line_code: String,
        direction: String,
        message: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("stop {0:?} is not present in the stop table")]
    UnknownStop(String),
    #[error("interpolation anchors are not increasing: {start} -> {end}")]
    NonIncreasingAnchors { start: f64, end: f64 },
    #[error("gap width must be at least 2, got {0}")]
    GapTooNarrow(usize),
    #[error("not enough eligible gap positions: need {needed}, have {available}")]
    InsufficientPositions { needed: usize, available: usize },
    #[error("invalid itinerary {line_code}/{direction}: {message}")]
    InvalidItinerary {
        line_code: String,
        direction: String,
        message: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
