use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {key}: {message}", line_label(*.line))]
    Config { line: usize, key: String, message: String },
    #[error("missing required key {key:?}")]
    Missing { key: String },
    #[error(transparent)]
    Core(#[from] curlheat::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn line_label(line: usize) -> String {
    if line == 0 {
        "command line".into()
    } else {
        format!("line {line}")
    }
}

impl CliError {
    pub fn config(line: usize, key: &str, message: impl Into<String>) -> Self {
        CliError::Config { line, key: key.to_string(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
