use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("audio contains no samples")]
    EmptyAudio,

    #[error("invalid audio buffer: {0}")]
    InvalidAudio(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("signal of {len} samples is shorter than one frame ({frame_length} samples)")]
    TooShort { len: usize, frame_length: usize },

    #[error("harmonic {harmonic} at {freq_hz:.1} Hz reaches the Nyquist limit of {nyquist_hz:.1} Hz")]
    AboveNyquist {
        harmonic: usize,
        freq_hz: f64,
        nyquist_hz: f64,
    },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("{0} signal has zero power")]
    ZeroPower(&'static str),

    #[error("SNR of {0} dB is outside the supported range [-60, 60]")]
    SnrOutOfRange(f64),

    /// k-means left one of the two classes empty.
    #[error("degenerate voicing classification: class {empty_class} is empty")]
    DegenerateClassification { empty_class: usize },

    #[error("within-class scatter matrix is singular")]
    SingularScatter,

    #[error("no voiced observations to filter")]
    NoObservations,

    #[error("track mismatch: {0}")]
    TrackMismatch(String),

    #[error("malformed track file: {0}")]
    MalformedTrack(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
