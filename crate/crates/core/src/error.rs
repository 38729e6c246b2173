use thiserror::Error;

/// Grid vertex location attached to pointwise failures.
pub type Vertex = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WforgeError {
    #[error("quaternionic matrix is singular (|det| = {det:e}, scale = {scale:e})")]
    SingularMatrix { det: f64, scale: f64 },

    #[error("endomorphism is not a complex structure (|S^2 + 1| = {residual:e})")]
    NotComplexStructure { residual: f64 },

    #[error("grid too small: {nx}x{ny} (need at least {min} samples per direction)")]
    GridTooSmall { nx: usize, ny: usize, min: usize },

    #[error("bad surface spec: {0}")]
    BadSpec(String),

    #[error("degenerate differential at vertex {vertex:?} (|df| = {norm:e})")]
    DegenerateDifferential { vertex: Vertex, norm: f64 },

    #[error("section hits the point at infinity at vertex {vertex:?}")]
    PointAtInfinity { vertex: Vertex },

    #[error("conformality residual {residual:e} exceeds {limit:e}")]
    ConformalityTooPoor { residual: f64, limit: f64 },

    #[error("mean curvature sphere solve is singular at vertex {vertex:?}")]
    WSolveSingular { vertex: Vertex },

    #[error("spectral parameter must be nonzero")]
    LambdaZero,

    #[error("parallel sections need a simply connected domain (torus grid given)")]
    NotSimplyConnected,

    #[error("parallel transport blew up at vertex {vertex:?} (|psi| = {norm:e})")]
    BlowUp { vertex: Vertex, norm: f64 },

    #[error("parallel frame does not span H^2 (margin {margin:e} at vertex {vertex:?})")]
    SpanningFailed { vertex: Vertex, margin: f64 },

    #[error("T = S(a-1) + b is singular at vertex {vertex:?}")]
    TSingular { vertex: Vertex },

    #[error("a - 1 is singular (mu = 1?)")]
    AminusOneSingular,

    #[error("Hopf field {which} vanishes identically (sup = {sup:e})")]
    HopfFieldZero { which: char, sup: f64 },

    #[error("rank of Hopf field is ambiguous at vertex {vertex:?} (singular value gap {gap:e})")]
    RankAmbiguous { vertex: Vertex, gap: f64 },

    #[error("surface is not Willmore (harmonicity residual {residual:e} > {limit:e})")]
    NotWillmore { residual: f64, limit: f64 },

    #[error("sequence step {step} degenerate: {reason}")]
    StepDegenerate { step: i32, reason: String },

    #[error("surface is not closed; normal bundle degree is not an integer invariant")]
    NotClosed { integral: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for WforgeError {
    fn from(e: std::io::Error) -> Self {
        WforgeError::Io(e.to_string())
    }
}

pub type Result<T, E = WforgeError> = std::result::Result<T, E>;
