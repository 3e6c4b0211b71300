//! Exit-code contract: 1 usage, 2 physics/numerical, 3 I/O.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Physics(String),
    Io(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn physics(msg: impl Into<String>) -> Self {
        CliError::Physics(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Physics(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Physics(m) => write!(f, "physics error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nvforge_core::transport::TransportError> for CliError {
    fn from(e: nvforge_core::transport::TransportError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<nvforge_core::defect::DefectError> for CliError {
    fn from(e: nvforge_core::defect::DefectError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<nvforge_core::pl::PlError> for CliError {
    fn from(e: nvforge_core::pl::PlError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<nvforge_core::qmem::QmemError> for CliError {
    fn from(e: nvforge_core::qmem::QmemError) -> Self {
        CliError::Physics(e.to_string())
    }
}
