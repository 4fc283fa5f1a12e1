//! Error-to-exit-code mapping. One failure class per code so scripts can
//! branch on the status alone; the message goes to stderr as a single JSON
//! line.

use crowdgroups_core::Error as CoreError;
use std::path::Path;

pub const EXIT_CODE_TABLE: &str = "\
Exit codes:
  0  success
  2  usage (unknown flag or subcommand, malformed flag syntax)
  3  io (missing, unreadable, or unwritable file)
  4  parse (malformed JSON, config file, or numeric value)
  5  validation (input violates a schema invariant)
  6  invalid argument (parameter outside its documented domain)
  7  contract violation (a pipeline component broke its guarantee)

Errors are reported on stderr as one JSON line:
  {\"error\":{\"code\":\"io\",\"exit\":3,\"message\":\"...\"}}";

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit: u8,
    pub message: String,
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: "io", exit: 3, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError { code: "parse", exit: 4, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: "validation", exit: 5, message: message.into() }
    }

    pub fn invalid_argument(message: impl Into<String>) -> Self {
        CliError { code: "invalid-argument", exit: 6, message: message.into() }
    }

    /// Same mapping as `From<CoreError>` with the offending path prefixed,
    /// for errors that would otherwise not say which file failed.
    pub fn in_file(path: &Path, err: CoreError) -> Self {
        let mut e = CliError::from(err);
        e.message = format!("{}: {}", path.display(), e.message);
        e
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code, "exit": self.exit, "message": self.message }
        })
        .to_string()
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let (code, exit) = match err {
            CoreError::Io(_) => ("io", 3),
            CoreError::Parse(_) => ("parse", 4),
            CoreError::Validation(_) => ("validation", 5),
            CoreError::InvalidArgument(_) => ("invalid-argument", 6),
            CoreError::Contract(_) => ("contract", 7),
        };
        CliError { code, exit, message: err.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
