use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] randcycles::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical check failed: {0}")]
    Check(String),
}

impl CliError {
    /// 0 ok, 1 numerical failure, 2 usage or config error, 3 size guard.
    pub fn exit_code(&self) -> i32 {
        use randcycles::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(E::SizeGuard { .. }) => 3,
            CliError::Core(
                E::InvalidInterval { .. }
                | E::MalformedMap(_)
                | E::InvalidSystem(_)
                | E::Parameter(_)
                | E::MarkovViolation { .. }
                | E::InfiniteExpansion { .. }
                | E::Domain { .. }
                | E::BoundaryPoint(_),
            ) => 2,
            CliError::Core(_) | CliError::Io(_) | CliError::Check(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
