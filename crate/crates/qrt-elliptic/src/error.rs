//! Error type shared by all stages of the pipeline.

use thiserror::Error;

/// Everything that can go wrong between reading a map and emitting its
/// closed-form solution.
#[derive(Debug, Error)]
pub enum Error {
    /// The invariant is infinite: the initial point lies on `x^T B y = 0`
    /// but not on `x^T A y = 0`.  Swapping the roles of `A` and `B` turns the
    /// fixed curve into the `K = 0` member of the swapped pencil.
    #[error("the invariant K is infinite at the initial point; swap the pencil matrices and retry")]
    InfiniteK,

    /// Both pencil forms vanish: the initial point is a base point, every
    /// member of the pencil passes through it and no single fixed curve is
    /// selected.
    #[error("the initial point is a base point of the pencil; K is undetermined there")]
    DegeneratePoint,

    /// A coordinate switch produced the indeterminate `[0 : 0]`.
    #[error("the map is indeterminate at the given point")]
    IndeterminatePoint,

    /// The two pencil forms share a common component, so the base locus is
    /// not finite.
    #[error("the pencil is degenerate: its members share a common component")]
    DegeneratePencil,

    /// The fixed curve has no `y^2` term for generic `x`; it is not a double
    /// cover of the `x`-line.
    #[error("the curve is not biquadratic in y (the y^2 coefficient vanishes identically)")]
    NotBiquadraticInY,

    /// The seeded search for an admissible marked-point pair ran out of
    /// candidates.
    #[error("no admissible marked-point pair found after {tried} candidates")]
    ExhaustedSearch { tried: usize },

    /// Normalization produced a curve that misses a needed corner
    /// coefficient (e.g. the `x^2 y` or `x y^2` term vanished).
    #[error("the Moebius normalization degenerates the curve: {reason}")]
    DegenerateTransform { reason: String },

    /// The discriminant quartic cannot support the construction.
    #[error("the discriminant quartic is degenerate: {reason}")]
    DegenerateQuartic { reason: String },

    /// The smoothness gate failed: the modular discriminant of the fixed
    /// curve vanishes to within the scaled threshold.
    #[error(
        "curve is not smooth: |Delta| = {delta_abs:.6e} is below the threshold {threshold:.6e}"
    )]
    CurveNotSmooth { delta_abs: f64, threshold: f64 },

    /// Analytic continuation of the square root could not separate the two
    /// sheets even at the minimum step size.
    #[error("square-root continuation collapsed below the minimum step near segment parameter {t:.6}")]
    StepCollapse { t: f64 },

    /// An integration segment violates the safety margin around a branch
    /// point.
    #[error("integration path passes within {dist:.3e} of a branch point (margin {margin:.3e})")]
    PathTooCloseToBranchPoint { dist: f64, margin: f64 },

    /// The start of an integration path does not lie on the curve.
    #[error("integration start point is off the curve (residual {residual:.3e})")]
    StartOffCurve { residual: f64 },

    /// Continuation ended on the wrong sheet and the corrective detour did
    /// not fix it.
    #[error("could not reach the requested sheet at the path end, even after a corrective detour")]
    SheetMismatch,

    /// The chart swap at infinity is unusable for this curve.
    #[error("chart change at infinity is degenerate: {reason}")]
    ChartDegenerate { reason: String },

    /// After normalization the period ratio still fails to lie in the upper
    /// half plane.
    #[error("period ratio is not in the upper half plane after normalization")]
    TauNotInUpperHalfPlane,

    /// The two periods are (numerically) parallel.
    #[error("the computed periods generate a degenerate lattice")]
    DegenerateLattice,

    /// A sigma-quotient was evaluated exactly on one of its poles.
    #[error("sigma-quotient evaluation hit a pole of the factor")]
    PoleAtU,

    /// A sigma-quotient was requested with mismatched zero/pole shift sums,
    /// which would not be doubly periodic.
    #[error("imbalanced sigma factor: zero shifts and pole shifts must have equal sums")]
    ImbalancedFactor,

    /// An eigenvalue iteration failed to converge.
    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    /// Generic numerical failure with context.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A wrapper that names the pipeline stage an inner error came from.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap this error with the name of the pipeline stage it occurred in.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when this error (or the one it wraps) is the smoothness gate.
    pub fn is_curve_not_smooth(&self) -> bool {
        match self {
            Error::CurveNotSmooth { .. } => true,
            Error::Stage { source, .. } => source.is_curve_not_smooth(),
            _ => false,
        }
    }
}
