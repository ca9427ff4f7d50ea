//! Errors surfaced by the harness and the command line, with exit codes.

/// Stable process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const ESTIMATION: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] bssvol_core::Error),
    /// A simulated path failed; the index and seed reproduce it.
    #[error("path {path} (seed {seed}): {source}")]
    Path {
        path: usize,
        seed: u64,
        #[source]
        source: bssvol_core::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    fn core(&self) -> Option<&bssvol_core::Error> {
        match self {
            AppError::Core(e) | AppError::Path { source: e, .. } => Some(e),
            AppError::Usage(_) => None,
        }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for estimation failure.
    pub fn exit_code(&self) -> u8 {
        use bssvol_core::Error as E;
        match self.core() {
            None | Some(E::Argument(_)) | Some(E::UnsupportedKernel) => exit::INPUT,
            Some(E::Domain(_)) | Some(E::Quadrature { .. }) | Some(E::Numeric(_)) => exit::NUMERIC,
            Some(E::DegenerateData(_)) | Some(E::Fit { .. }) => exit::ESTIMATION,
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;
