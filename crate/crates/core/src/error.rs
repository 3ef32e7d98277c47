use std::fmt;

/// Errors raised by the library. Undecidability is an error only where an
/// operation cannot return a three-valued answer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("undecidable at configured depth: {0}")]
    UndecidableAtDepth(String),
    #[error("approximation depth exceeded: {0}")]
    ApproximationDepthExceeded(String),
    #[error("Lebesgue decomposition undecidable: {0}")]
    UndecidableDecomposition(String),
    #[error("test function is not absolutely continuous: {0}")]
    NotAbsolutelyContinuous(String),
    #[error("no certified tail bound: {0}")]
    TailBoundUnavailable(String),
    #[error("state spaces differ: {0} vs {1}")]
    StateSpaceMismatch(String, String),
    #[error("speed measures differ")]
    SpeedMismatch,
    #[error("invalid pre-merging point {point}: {reason}")]
    InvalidPreMergingPoint { point: String, reason: String },
    #[error("pre-merging pairs overlap: {0}")]
    OverlappingPairs(String),
    #[error("selection is not dense: {0}")]
    NotDense(String),
    #[error("kernel not representable: {0}")]
    UnrepresentableKernel(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the errors that mean "could not decide" rather than "wrong".
    pub fn is_undecidable(&self) -> bool {
        matches!(
            self,
            Error::UndecidableAtDepth(_)
                | Error::ApproximationDepthExceeded(_)
                | Error::UndecidableDecomposition(_)
                | Error::TailBoundUnavailable(_)
                | Error::Unsupported(_)
        )
    }
}

/// A three-valued answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Undecidable(String),
}

impl Verdict {
    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Verdict::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Verdict::False)
    }

    /// Conjunction: any `False` wins, then any `Undecidable`.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::False, _) | (_, Verdict::False) => Verdict::False,
            (Verdict::Undecidable(r), _) | (_, Verdict::Undecidable(r)) => Verdict::Undecidable(r),
            _ => Verdict::True,
        }
    }

    /// Disjunction: any `True` wins, then any `Undecidable`.
    pub fn or(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::True, _) | (_, Verdict::True) => Verdict::True,
            (Verdict::Undecidable(r), _) | (_, Verdict::Undecidable(r)) => Verdict::Undecidable(r),
            _ => Verdict::False,
        }
    }

    pub fn not(self) -> Verdict {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            u => u,
        }
    }

    /// Lifts a fallible boolean: undecidable errors become `Undecidable`.
    pub fn from_result(r: Result<bool>) -> Result<Verdict> {
        match r {
            Ok(b) => Ok(Verdict::from_bool(b)),
            Err(e) if e.is_undecidable() => Ok(Verdict::Undecidable(e.to_string())),
            Err(e) => Err(e),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::True => write!(f, "true"),
            Verdict::False => write!(f, "false"),
            Verdict::Undecidable(_) => write!(f, "undecidable"),
        }
    }
}
