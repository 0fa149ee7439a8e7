use thiserror::Error;

use crate::grid::Coord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({}, {}) is outside a {width}x{height} grid", .coord.x, .coord.y)]
    OutOfBounds {
        coord: Coord,
        width: usize,
        height: usize,
    },

    #[error("coordinate ({}, {}) is an obstacle", .0.x, .0.y)]
    Blocked(Coord),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("({}, {}) is not a corner of cell {cell}", .coord.x, .coord.y)]
    NotACorner { cell: usize, coord: Coord },

    #[error("the map has no free cells to plan over")]
    NoFreeSpace,

    #[error("cannot interpolate from an empty sample set")]
    NoSamples,

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(what: &'static str, reason: impl ToString) -> Self {
        Error::Format {
            what,
            reason: reason.to_string(),
        }
    }

    /// True for errors caused by bad parameters rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::NotACorner { .. })
    }
}
