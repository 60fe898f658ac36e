use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter is out of its admissible range.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Pulse timing violates `0 < tau_p < t_pi / n`, `n >= 1`.
    InvalidSchedule(&'static str),
    /// A matrix offered as a density matrix is not Hermitian, unit trace or
    /// positive within tolerance.
    InvalidDensity {
        defect: &'static str,
        magnitude: f64,
    },
    /// `‖L t‖₁` too large for a single scaling-and-squaring pass.
    NormOverflow { norm: f64 },
    /// Subdividing a propagation step did not bring the norm under the guard.
    SubdivisionLimit { steps: u32 },
    /// A conserved quantity drifted during propagation.
    InvariantBreach {
        what: &'static str,
        time: f64,
        magnitude: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::InvalidSchedule(reason) => write!(f, "invalid pulse schedule: {reason}"),
            Error::InvalidDensity { defect, magnitude } => {
                write!(f, "not a density matrix: {defect} ({magnitude:.3e})")
            }
            Error::NormOverflow { norm } => {
                write!(f, "generator norm {norm:.3e} exceeds the exponential guard")
            }
            Error::SubdivisionLimit { steps } => {
                write!(f, "propagation step still too stiff after {steps} halvings")
            }
            Error::InvariantBreach {
                what,
                time,
                magnitude,
            } => write!(
                f,
                "{what} violated at t = {time:.6e} (deviation {magnitude:.3e})"
            ),
        }
    }
}

impl core::error::Error for Error {}
