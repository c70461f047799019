use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty transcript set")]
    EmptyTranscriptSet,

    #[error("empty transcript")]
    EmptyTranscript,

    #[error("unknown {kind} {token:?} at position {position}")]
    UnknownToken {
        kind: &'static str,
        token: String,
        position: usize,
    },

    #[error("unit id {0} is not in the inventory")]
    UnknownId(u32),

    #[error("blank id found at position {0}")]
    BlankInSequence(usize),

    #[error("cannot merge inventories with different modes")]
    MixedModes,

    #[error("invalid inventory: {0}")]
    InvalidInventory(String),

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("signal is below one window ({samples} samples, window {window})")]
    BelowOneWindow { samples: usize, window: usize },

    #[error("unsupported sample rate {0} Hz (expected 8000 or 16000)")]
    UnsupportedSampleRate(u32),

    #[error("dimension mismatch in {layer}: expected {expected}, found {found}")]
    DimMismatch {
        layer: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("expected {expected} features, found {found}")]
    WrongFeatureKind { expected: String, found: String },

    #[error("LFV training requires ≥2 languages")]
    TooFewLanguages,

    #[error("no valid alignment: {frames} frames cannot carry {labels} labels ({repeats} repeats)")]
    NoValidAlignment {
        frames: usize,
        labels: usize,
        repeats: usize,
    },

    #[error("instance too large for brute force: {0} paths")]
    InstanceTooLarge(f64),

    #[error("non-finite gradient in {0}; update rejected")]
    NonFiniteGradient(String),

    #[error("missing forward cache")]
    MissingForwardCache,

    #[error("beam width must be at least 1")]
    ZeroBeam,

    #[error("empty logits")]
    EmptyLogits,

    #[error("symbol {0:?} is not in the language model vocabulary")]
    ForeignSymbol(String),

    #[error("length mismatch: {refs} references vs {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },

    #[error("bad file format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
