use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("the thresholds span {octaves:.2} octaves, at least {required} are required")]
    InsufficientOctaves { octaves: f64, required: f64 },
    #[error(transparent)]
    Core(#[from] dnls_core::Error),
}
