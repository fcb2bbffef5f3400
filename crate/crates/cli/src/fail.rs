use std::fmt;
use std::path::Path;

pub const NUMERICAL: u8 = 1;
pub const VALIDATION: u8 = 2;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn validation(msg: impl fmt::Display) -> Self {
        Self {
            code: VALIDATION,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn numerical(msg: impl fmt::Display) -> Self {
        Self {
            code: NUMERICAL,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::validation(format!("{}: {err}", path.display()))
    }

    pub fn context(mut self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(ctx);
        self
    }
}

impl From<hmlasso::Error> for Failure {
    fn from(e: hmlasso::Error) -> Self {
        use hmlasso::Error as E;
        let code = match e {
            E::NonFinite(_) | E::Eigen | E::NotPsd { .. } | E::ZeroDiagonal { .. } => NUMERICAL,
            _ => VALIDATION,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}
