use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Error)]
pub enum FluorError {
    #[error("disjoint grids: source [{source_min}, {source_max}] nm does not overlap target [{target_min}, {target_max}] nm")]
    DisjointGrids {
        source_min: f64,
        source_max: f64,
        target_min: f64,
        target_max: f64,
    },

    #[error("grid mismatch: expected {expected}, got {found}")]
    GridMismatch { expected: String, found: String },

    #[error("wavelength {0} nm is not on the grid")]
    OffGrid(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate basis: Gram condition number {cond:.3e} exceeds 1e12")]
    DegenerateBasis { cond: f64 },

    #[error("color space mismatch: expected {expected}, got {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular conversion matrix")]
    SingularMatrix,

    #[error("emission must sit at longer wavelengths than absorption, got absorb {absorb} nm >= emit {emit} nm")]
    StokesOrder { absorb: f64, emit: f64 },

    #[error("missing data file {0}")]
    MissingData(PathBuf),

    #[error("invalid UV knot vector: {0}")]
    InvalidKnots(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("empty material set")]
    EmptyMaterialSet,

    #[error("white point must have positive luminance")]
    BadWhite,

    #[error("unknown material {0}")]
    UnknownMaterial(String),

    #[error("scene error: {0}")]
    Scene(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FluorError>;
