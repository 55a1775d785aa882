use std::fmt;

/// Process exit status of a failed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Numeric or unexpected failure.
    Internal = 1,
    /// Bad flags, config or manifest.
    Usage = 2,
    /// Malformed or inconsistent input data.
    Data = 3,
}

pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            kind: Kind::Internal,
            error: e.into(),
        }
    }
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {:#}", self.kind, self.error)
    }
}

pub type Outcome<T> = Result<T, Failure>;

pub trait Classify<T> {
    fn kind(self, kind: Kind, context: impl FnOnce() -> String) -> Outcome<T>;

    fn usage(self, context: impl FnOnce() -> String) -> Outcome<T>
    where
        Self: Sized,
    {
        self.kind(Kind::Usage, context)
    }

    fn data(self, context: impl FnOnce() -> String) -> Outcome<T>
    where
        Self: Sized,
    {
        self.kind(Kind::Data, context)
    }

    fn internal(self, context: impl FnOnce() -> String) -> Outcome<T>
    where
        Self: Sized,
    {
        self.kind(Kind::Internal, context)
    }
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn kind(self, kind: Kind, context: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure {
            kind,
            error: e.into().context(context()),
        })
    }
}

pub fn usage_error(message: impl fmt::Display) -> Failure {
    Failure {
        kind: Kind::Usage,
        error: anyhow::anyhow!("{message}"),
    }
}

pub fn data_error(message: impl fmt::Display) -> Failure {
    Failure {
        kind: Kind::Data,
        error: anyhow::anyhow!("{message}"),
    }
}
