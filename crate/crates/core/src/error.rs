use thiserror::Error;

/// Errors raised by graph construction, model evaluation and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KwError {
    // graph construction
    #[error("vertex and edge lists must be non-empty")]
    EmptyInput,
    #[error("vertex `{0}` declared more than once")]
    DuplicateVertex(String),
    #[error("edge references undeclared vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{vertex}` has non-positive measure {value}")]
    NonPositiveMeasure { vertex: String, value: f64 },
    #[error("edge `{a}`-`{b}` has non-positive weight {value}")]
    NonPositiveWeight { a: String, b: String, value: f64 },
    #[error("edge `{a}`-`{b}` declared twice with conflicting weights {first} and {second}")]
    DuplicateEdge {
        a: String,
        b: String,
        first: f64,
        second: f64,
    },
    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),
    #[error("graph is disconnected: vertex `{0}` is unreachable")]
    Disconnected(String),
    #[error("graph needs at least two vertices, got only `{0}`")]
    SingleVertex(String),

    // vertex functions and operators
    #[error("vertex function has {got} values, graph has {expected} vertices")]
    DomainMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at vertex index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid exponent p = {0}, need p >= 1 or infinity")]
    InvalidExponent(f64),

    // model
    #[error("problem hypothesis violated: {0}")]
    HypothesesViolated(String),
    #[error("exponent 2u = {exponent} at vertex index {index} exceeds the overflow guard")]
    Overflow { index: usize, exponent: f64 },

    // solvers
    #[error("right-hand side has non-zero integral {integral}")]
    IncompatibleRhs { integral: f64 },
    #[error("singular solve failed: {0}")]
    SingularSolveFailure(String),
    #[error("solver precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no convergence: {0}")]
    ConvergenceFailure(String),
    #[error("lower solution search failed: shift exceeded {0}")]
    SearchFailure(f64),
    #[error("order interval invalid: {0}")]
    NotAnOrderedPair(String),
    #[error("monotone iterate decreased by {amount} at vertex index {index}")]
    MonotonicityViolation { index: usize, amount: f64 },
    #[error("continuation stalled at lambda = {reached} before target {target}")]
    ContinuationStalled { reached: f64, target: f64 },
    #[error("no solution exists at lambda = {lambda}: K_lambda >= 0 and the integral of kappa is negative")]
    CertifiedInfeasible { lambda: f64 },
    #[error("mountain-pass endpoint search failed: {0}")]
    EndpointSearchFailure(String),
    #[error("path deformation stalled after {0} steps")]
    DeformationStalled(usize),
    #[error("mountain-pass critical point collapsed onto the minimizer")]
    CollapsedToMinimum,
}

pub type Result<T> = std::result::Result<T, KwError>;
