use thiserror::Error;

/// Failures raised by grid construction, state constructors, transforms and tests.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid range: min {min} must be below max {max}")]
    InvalidRange { min: f64, max: f64 },
    #[error("invalid point count {0}: a grid needs at least 2 points")]
    InvalidCount(usize),
    #[error("field length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("covariance is not positive definite (sqq={sqq}, spp={spp}, sqp={sqp})")]
    CovarianceNotPositiveDefinite { sqq: f64, spp: f64, sqp: f64 },
    #[error("grid too small: {mass:.3e} probability falls outside the sampled support")]
    GridTooSmall { mass: f64 },
    #[error("not a minimum-uncertainty state: sqq*spp = {product}, sqp = {sqp}")]
    NotMinimumUncertainty { product: f64, sqp: f64 },
    #[error("argument outside grid: shift {shift} exceeds grid span {span}")]
    ArgumentOutsideGrid { shift: f64, span: f64 },

    #[error("degenerate ray (mu, nu) = (0, 0)")]
    DegenerateRay,
    #[error("duplicate ray ({mu}, {nu}) in ray set")]
    DuplicateRay { mu: f64, nu: f64 },
    #[error("x grid too small: image of the support reaches |X| = {needed}, grid covers [{min}, {max}]")]
    XGridTooSmall { needed: f64, min: f64, max: f64 },
    #[error("state leaks {mass:.3e} probability into the grid guard band")]
    GridLeakage { mass: f64 },
    #[error("insufficient angular sampling: {got} unit-circle angles, need at least {needed}")]
    InsufficientAngularSampling { got: usize, needed: usize },
    #[error("slices do not share a common x grid")]
    InconsistentXGrids,
    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),
    #[error("non-physical result: minimum eigenvalue {min_eigenvalue:.3e} below -{tol:.1e}")]
    NonPhysical { min_eigenvalue: f64, tol: f64 },

    #[error("support leaves the grid: {mass:.3e} probability lost")]
    SupportLeavesGrid { mass: f64 },
    #[error("wave packet leaves the grid: {mass:.3e} probability in the guard band")]
    PacketLeavesGrid { mass: f64 },
    #[error("ray ({mu}, {nu}) is not representable from the stored ray set")]
    RayNotRepresentable { mu: f64, nu: f64 },
    #[error("time samples are not uniformly spaced")]
    NonUniformTimes,

    #[error("tail truncation: estimated tail contribution {estimate:.3e} to moment {order}")]
    TailTruncation { order: u32, estimate: f64 },
    #[error("moment order {0} too high for a sampled slice (max 4)")]
    MomentOrderTooHigh(u32),
    #[error("missing ray ({mu}, {nu})")]
    MissingRay { mu: f64, nu: f64 },
    #[error("group element ({mu}, {nu}) is unreachable from the stored ray set")]
    UnreachableRay { mu: f64, nu: f64 },
    #[error("positive-type test needs distinct elements")]
    DuplicateElements,

    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
