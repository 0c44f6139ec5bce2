use std::fmt;

/// Errors split by exit code: 1 for bad configuration, 2 for everything
/// that goes wrong while running.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Failure::Runtime(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config: {m}"),
            Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<cfx_core::Error> for Failure {
    fn from(e: cfx_core::Error) -> Self {
        match e {
            cfx_core::Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
