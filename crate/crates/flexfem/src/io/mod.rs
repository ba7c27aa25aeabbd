//! File formats: CSV tables, time-series interpolation, binary checkpoints,
//! and legacy-VTK export plus structured-grid import.

mod checkpoint;
mod csv_table;
mod series;
mod vtk;

pub use checkpoint::{checkpoint_load, checkpoint_save, Checkpoint, MeshDescriptor};
pub use csv_table::{csv_read, csv_write, CsvTable};
pub(crate) use csv_table::format_numeric;
pub use series::{InterpolationMode, TimeSeries};
pub use vtk::{grid_eval, grid_read, vtk_write, EvalMethod, GridData};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("cell '{value}' at row {row}, column '{column}' is not numeric")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("a time series needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("times must increase strictly (violated at index {0})")]
    NonIncreasingTimes(usize),
    #[error("series lengths differ: {times} times vs {values} values")]
    SeriesLengthMismatch { times: usize, values: usize },
    #[error("trigonometric interpolation requires uniform spacing (interval {0} deviates)")]
    NonuniformSpacing(usize),
    #[error("negative smoothing budget {0}")]
    NegativeBudget(f64),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("vtk parse failure: {0}")]
    VtkParse(String),
    #[error("points do not form an axis-aligned lattice: {0}")]
    NotALattice(String),
    #[error("unknown data array '{0}'")]
    UnknownArray(String),
}
