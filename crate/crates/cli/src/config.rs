//! Flag/config-file plumbing shared by the subcommands.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pwsim::analysis::AxisRange;

/// Three comma-separated numbers on the command line, a JSON array in
/// config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Triple(pub [f64; 3]);

impl FromStr for Triple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<_, _>>()?;
        <[f64; 3]>::try_from(v).map(Triple).map_err(|v| format!("expected 3 values, got {}", v.len()))
    }
}

/// `min,max,step` or a single fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Range(pub AxisRange);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x] => Ok(Range(AxisRange::fixed(x))),
            [min, max, step] => Ok(Range(AxisRange { min, max, step })),
            _ => Err("expected `value` or `min,max,step`".into()),
        }
    }
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters (exit 2).
    Usage(String),
    /// A numerical invariant broke (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<pwsim::Error> for CliError {
    fn from(e: pwsim::Error) -> Self {
        use pwsim::Error as E;
        match e {
            E::NonUnitary(_) | E::DegenerateState(_) | E::Dimension { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Reads a JSON file into `T`, naming the offending field on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {what} `{}`: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { "<root>".to_string() } else { field };
        CliError::Usage(format!("{what} `{}`: field `{field}`: {}", path.display(), e.inner()))
    })
}

/// Replaces every field of `flags` that the config file sets.
macro_rules! overlay {
    ($flags:expr, $cfg:expr, [$($field:ident),* $(,)?]) => {
        $( if $cfg.$field.is_some() { $flags.$field = $cfg.$field; } )*
    };
}
pub(crate) use overlay;
