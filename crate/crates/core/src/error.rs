use thiserror::Error;

/// Errors produced by the lattice library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol band [{have_lo}, {have_hi}] does not cover required exponents [{need_lo}, {need_hi}]")]
    BandTooNarrow {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("exponential truncation at order {order} drops an estimated tail of {tail:e} (floor {floor:e})")]
    TruncationInsufficient { order: usize, tail: f64, floor: f64 },

    #[error("leading block of the Schur complement is numerically singular (sigma_min = {sigma_min:e})")]
    SingularLeadingBlock { sigma_min: f64 },

    /// The k-th pivot (Schur complement) vanished: the symbol is outside the factorizable chart.
    #[error("block factorization degenerate at pivot {0}")]
    FactorizationDegenerate(usize),

    #[error("dressing factor has a singular diagonal block at {0}")]
    SingularDressing(usize),

    #[error("integration step must be positive, got {0}")]
    StepNotPositive(f64),

    #[error("Hermitian reduction violated at start (deviation {0:e})")]
    ReductionViolatedAtStart(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
