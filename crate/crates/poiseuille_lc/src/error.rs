use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("compatibility violation at x={endpoint}: {identity} has residual {residual:e}")]
    CompatibilityViolation {
        endpoint: String,
        identity: String,
        residual: f64,
    },

    #[error("invalid boundary coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("initial-data sampler returned a non-finite value at x={0}")]
    QuadratureFailure(f64),

    #[error("p or q became nonpositive at char node (X={x_coord}, Y={y_coord}): p={p}, q={q}")]
    NonpositivePQ {
        x_coord: f64,
        y_coord: f64,
        p: f64,
        q: f64,
    },

    #[error("characteristic domain exhausted before reaching t={0}")]
    HorizonNotReached(f64),

    #[error("no characteristic cell brackets physical node (x={x}, t={t})")]
    LookupMiss { x: f64, t: f64 },

    #[error("cusp reached the Robin boundary (z=pi with iota>0) at t~{0}")]
    CuspAtRobinBoundary(f64),

    #[error("non-positive time gap in kernel evaluation: t={t}, tau={tau}")]
    NonpositiveTimeGap { t: f64, tau: f64 },

    #[error("Duhamel window under-resolved: {0} quadrature points in s (need >= 8)")]
    WindowUnderResolved(usize),

    #[error("fixed-point iteration diverged on window [{t0}, {t1}] after {iterations} iterations")]
    FixedPointDiverged { t0: f64, t1: f64, iterations: usize },

    #[error("window halving budget exhausted at seam t={0}")]
    WindowCollapsed(f64),

    #[error("CFL violation: dt={dt} exceeds {limit} = 0.9 dx / C_U")]
    CFLViolation { dt: f64, limit: f64 },

    #[error("finite-difference solution blew up at t={0} (sup norm > 1e6)")]
    BlowupDetected(f64),

    #[error("boundary condition combination not supported by the solver core: {0}")]
    UnsupportedBoundary(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver failure in {module} at t={time}: {source}")]
    AtTime {
        module: &'static str,
        time: f64,
        #[source]
        source: Box<SolverError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SolverError {
    pub fn at_time(self, module: &'static str, time: f64) -> Self {
        SolverError::AtTime {
            module,
            time,
            source: Box::new(self),
        }
    }
}
