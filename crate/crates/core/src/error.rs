use core::fmt;

/// Errors raised by the numeric core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    SingularMatrix,
    InvalidOrder(usize),
    /// Two distinct poles closer than the identification threshold.
    PoleCollision {
        distance: f64,
    },
    PoleOrderTooHigh {
        order: usize,
    },
    /// Evaluation requested within the threshold of a pole.
    AtPole {
        distance: f64,
    },
    /// A Laurent series was needed beyond the order it was computed to.
    TruncationTooShort {
        needed: i32,
        available: i32,
    },
    InvalidConfig(&'static str),
    NotEquivariant {
        residual: f64,
    },
    /// A pole coefficient that must cancel did not.
    StructuralResidual {
        residual: f64,
    },
    NonReal {
        imag: f64,
    },
    InadmissibleFlow {
        p: usize,
        r: usize,
    },
    IllConditioned {
        condition: f64,
    },
    Diverged {
        step: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::SingularMatrix => write!(f, "matrix is singular"),
            Error::InvalidOrder(t) => write!(f, "invalid cyclic order {t}"),
            Error::PoleCollision { distance } => {
                write!(f, "poles collide (distance {distance:e})")
            }
            Error::PoleOrderTooHigh { order } => write!(f, "pole order {order} exceeds 8"),
            Error::AtPole { distance } => {
                write!(f, "evaluation point within {distance:e} of a pole")
            }
            Error::TruncationTooShort { needed, available } => {
                write!(f, "series truncated at order {available}, order {needed} required")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NotEquivariant { residual } => {
                write!(f, "input is not equivariant (residual {residual:e})")
            }
            Error::StructuralResidual { residual } => {
                write!(f, "structural cancellation failed (residual {residual:e})")
            }
            Error::NonReal { imag } => write!(f, "real data acquired imaginary part {imag:e}"),
            Error::InadmissibleFlow { p, r } => write!(f, "flow ({p},{r}) is not admissible"),
            Error::IllConditioned { condition } => {
                write!(f, "dressing matrix ill-conditioned (condition {condition:e})")
            }
            Error::Diverged { step } => write!(f, "integration diverged at step {step}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
