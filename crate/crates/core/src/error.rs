use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("{path}: not a valid raster file: {detail}")]
    RasterFormat { path: PathBuf, detail: String },

    #[error("tile {tid} out of range (raster has {count} tiles)")]
    TileOutOfRange { tid: u32, count: u32 },

    #[error("tile producer yielded tile {got} where {expected} was expected")]
    TileSequence { expected: u32, got: u32 },

    #[error("tile {tid}: {detail}")]
    TileLayout { tid: u32, detail: String },

    #[error("{path}:{line}: parse error: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("polygon {pid}: {detail}")]
    InvalidPolygon { pid: u32, detail: String },

    #[error("duplicate polygon id {pid}")]
    DuplicatePid { pid: u32 },

    #[error("polygon {pid} is malformed: odd number of boundary crossings on row {row}")]
    OddCrossingParity { pid: u32, row: u32 },

    #[error("{path}: not a valid intersection file: {detail}")]
    IntersectionFormat { path: PathBuf, detail: String },

    #[error("corrupt intersection record: {detail}")]
    CorruptRecord { detail: String },

    #[error("cannot merge accumulators of different value types")]
    AccumulatorMismatch,

    #[error("sum overflow while aggregating polygon {pid}")]
    SumOverflow { pid: u32 },

    #[error(
        "polygon {pid}: mask layer would need {bytes} bytes (cap {cap}); \
         use the zonal pipeline, which never materializes masks"
    )]
    MaskTooLarge { pid: u32, bytes: u64, cap: u64 },

    #[error("invalid cost parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
