use thiserror::Error;

/// Errors shared across the series kernel, curve geometry and recursion engine.
#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("coordinate tag mismatch: {0} vs {1}")]
    TagMismatch(u64, u64),
    #[error("empty exactness window after {0}")]
    EmptyWindow(&'static str),
    #[error("window exhausted: {0}")]
    WindowExhausted(&'static str),
    #[error("zero leading coefficient in {0}")]
    ZeroLeading(&'static str),
    #[error("degree {0} outside tracked window [{1}, {2}]")]
    OutsideWindow(i32, i32, i32),
    #[error("coincident points in {0}")]
    CoincidentPoints(&'static str),
    #[error("pole on contour after {0} offset retries")]
    PoleOnContour(usize),
    #[error("quadrature tolerance not reached: est {0:.3e} > tol {1:.3e}")]
    QuadTolerance(f64, f64),
    #[error("theta lattice tail bound {0:.3e} exceeds target {1:.3e}")]
    ThetaTail(f64, f64),
    #[error("theta derivative cache exhausted: order {0} > D_der {1}")]
    DerivCache(usize, usize),
    #[error("vanishing theta value at working point")]
    ThetaZero,
    #[error("missing recursion table entry (g={0}, n={1})")]
    MissingTable(usize, usize),
    #[error("internal symmetry violation: residual {0:.3e}")]
    Asymmetry(f64),
    #[error("nonvanishing A-period {0:.3e} beyond tolerance")]
    APeriod(f64),
    #[error("residue of integrand nonzero ({0:.3e}); primitive is multivalued")]
    ResidueObstruction(f64),
    #[error("path from {0} to {1} passes too close to a pole")]
    PathThroughPole(String, String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
