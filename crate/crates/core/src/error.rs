use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Potential parameters outside their admissible range.
    InvalidParams(&'static str),
    /// An argument outside the domain of the operation (e.g. `r <= 0`).
    Domain(&'static str),
    /// Evaluation at the origin of a kernel that blows up there.
    SingularPoint,
    /// A documented precondition of the operation does not hold.
    Precondition(&'static str),
    /// Too few nodes to apply the periodic difference stencils.
    Resolution { nodes: usize, min: usize },
    /// Non-finite values or runaway speeds during time stepping.
    BlowUp { step: usize, t: f64, max_speed: f64 },
    /// Unrecognized configuration value.
    Config(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid potential parameters: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::SingularPoint => write!(f, "kernel evaluated at its singular point z = 0"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Resolution { nodes, min } => {
                write!(f, "curve has {nodes} nodes, at least {min} are required")
            }
            Error::BlowUp { step, t, max_speed } => write!(
                f,
                "blow-up at step {step} (t = {t}): max speed {max_speed:e}"
            ),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
