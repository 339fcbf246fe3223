use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] btc_topology::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("failed checks: {}", .0.join(", "))]
    Validation(Vec<String>),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_checks: Option<&'a [String]>,
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let (kind, failed) = match self {
            CliError::Config(_) => ("config", None),
            CliError::Compute(_) => ("compute", None),
            CliError::Io { .. } => ("io", None),
            CliError::Validation(names) => ("validation", Some(names.as_slice())),
        };
        serde_json::to_string(&ErrorReport { kind, message: self.to_string(), failed_checks: failed })
            .expect("plain strings serialize")
    }
}
