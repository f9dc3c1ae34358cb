use thiserror::Error;

/// Errors produced by raster, classification, assessment, and report code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("class scheme is empty")]
    EmptyScheme,

    #[error("invalid class scheme: {0}")]
    InvalidScheme(String),

    #[error("raster has zero width or height")]
    ZeroSizedRaster,

    #[error("label {0} is not part of the scheme")]
    LabelOutOfScheme(u8),

    #[error("band count mismatch: {0} vs {1}")]
    BandMismatch(u8, u8),

    #[error("image must have at least 3 bands, got {0}")]
    TooFewBands(u8),

    #[error("target resolution must be positive, got {0}")]
    NonPositiveResolution(f64),

    #[error("{0} has no valid pixels to build a histogram from")]
    EmptyHistogram(&'static str),

    #[error("tile size must be at least 1")]
    InvalidTileSize,

    #[error("tile geometry mismatch: {0}")]
    TileGeometryMismatch(String),

    #[error("missing tile at grid ({row}, {col})")]
    MissingTile { row: u32, col: u32 },

    #[error("duplicate tile at grid ({row}, {col})")]
    DuplicateTile { row: u32, col: u32 },

    #[error("tile at grid ({row}, {col}) lies outside the parent raster")]
    TileOutOfRange { row: u32, col: u32 },

    #[error("mixed tile payload kinds in one tile set")]
    MixedTileKinds,

    #[error("no usable (non-masked, non-padding) training pixels")]
    NoTrainingPixels,

    #[error("window size must be odd and >= 1, got {0}")]
    InvalidWindow(u32),

    #[error("model has no trained classes")]
    UntrainedModel,

    #[error("score map classes do not match the scheme: {0}")]
    ScoreSchemeMismatch(String),

    #[error("confidence floor must lie in [0, 1), got {0}")]
    InvalidFloor(f64),

    #[error("confidence floor requires a not-classified class in the scheme")]
    MissingUnclassifiedClass,

    #[error("requested {requested} sample points but only {available} valid pixels exist")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("confusion matrix has no assessed points")]
    EmptyMatrix,

    #[error("raster dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("class schemes differ between rasters")]
    SchemeMismatch,

    #[error("merge group member {0} is not a valid class id")]
    InvalidMergeMember(u8),

    #[error("geo transform has non-positive pixel size")]
    DegenerateGeo,

    #[error("unknown report format: {0}")]
    UnknownFormat(String),

    #[error("{path}: {reason}")]
    InvalidFile { path: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
