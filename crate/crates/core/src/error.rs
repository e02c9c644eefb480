use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("supplied inverse fails round trip: residual {residual:.3e} exceeds {tol:.1e}")]
    InverseCheck { residual: f64, tol: f64 },

    #[error("symbolic composition exceeded the term cap of {cap}")]
    TermCap { cap: usize },

    #[error("composition depth {k} exceeds the symbolic budget of {budget}")]
    SymbolicBudget { k: usize, budget: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measure is centered at a different point than the evaluation point")]
    CenterMismatch,

    #[error("point lies outside the domain U")]
    OutsideDomain,

    #[error("no convergence after {sweeps} sweeps (last update {residual:.3e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("{fraction:.3} of the mass escaped during pullback (limit 0.05)")]
    DroppedMass { fraction: f64 },

    #[error("fields live on different slices")]
    SliceMismatch,

    #[error("ball leaves the grid")]
    BallOutsideGrid,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
