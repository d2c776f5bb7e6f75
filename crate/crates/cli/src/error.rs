use std::fmt;
use std::path::Path;

use navmap_core::distill::DistillError;
use navmap_core::eval::EvalError;
use navmap_core::geo::GeoError;
use navmap_core::model::ModelError;
use navmap_core::osm::OsmError;
use navmap_core::pipeline::PipelineError;
use navmap_core::road_graph::GraphError;
use navmap_core::scenario::SceneIoError;

/// Error class; each maps to a distinct exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Usage,
    Io,
    Parse,
    Projection,
    Config,
    Numeric,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Usage => "usage",
            Code::Io => "io",
            Code::Parse => "parse",
            Code::Projection => "projection",
            Code::Config => "config",
            Code::Numeric => "numeric",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Code::Usage => 2,
            Code::Io => 3,
            Code::Parse => 4,
            Code::Projection => 5,
            Code::Config => 6,
            Code::Numeric => 7,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

impl CliError {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Code::Usage, message)
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(Code::Io, format!("{}: {e}", path.display()))
    }

    /// Prefixes the message with a file name.
    pub fn in_file(mut self, path: &Path) -> Self {
        let p = path.display().to_string();
        if !self.message.starts_with(&p) {
            self.message = format!("{p}: {}", self.message);
        }
        self
    }
}

impl fmt::Display for CliError {
    /// One line: `error[<code>]: <message>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.replace('\n', " ");
        write!(f, "error[{}]: {msg}", self.code.as_str())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<OsmError> for CliError {
    fn from(e: OsmError) -> Self {
        match e {
            OsmError::Io(_) => Self::new(Code::Io, e.to_string()),
            _ => Self::new(Code::Parse, e.to_string()),
        }
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        match e {
            GeoError::UnknownFrame(_) => Self::usage(e.to_string()),
            GeoError::Config(_) => Self::new(Code::Config, e.to_string()),
            _ => Self::new(Code::Projection, e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Projection { .. } => Self::new(Code::Projection, e.to_string()),
            _ => Self::new(Code::Parse, e.to_string()),
        }
    }
}

impl From<SceneIoError> for CliError {
    fn from(e: SceneIoError) -> Self {
        match e {
            SceneIoError::Io { .. } => Self::new(Code::Io, e.to_string()),
            _ => Self::new(Code::Parse, e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::NonFinite { .. } => Code::Numeric,
            ModelError::Io { .. } => Code::Io,
            ModelError::Checkpoint(_) => Code::Parse,
            ModelError::Shape { .. } | ModelError::Config(_) => Code::Config,
        };
        Self::new(code, e.to_string())
    }
}

impl From<DistillError> for CliError {
    fn from(e: DistillError) -> Self {
        match e {
            DistillError::Model(m) => m.into(),
            other => Self::new(Code::Config, other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            other => Self::new(Code::Config, other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Spec(m) => Self::usage(format!("invalid spec: {m}")),
            PipelineError::Graph(g) => g.into(),
            PipelineError::Model(m) => m.into(),
            PipelineError::Distill(d) => d.into(),
            PipelineError::Eval(v) => v.into(),
        }
    }
}
