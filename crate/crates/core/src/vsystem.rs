//! The driven V system: parameters, generators and validity diagnostics.
//!
//! With zero detunings the conditional no-photon evolution is `e^{-M t}` with
//!
//! ```text
//! M = ½ [[0,    iΩ₂, iΩ₃],
//!        [iΩ₂,  A₂,  0  ],
//!        [iΩ₃,  0,   A₃ ]]
//! ```
//!
//! and the ensemble obeys `ρ̇ = -Mρ - ρM† + (A₂ρ₂₂ + A₃ρ₃₃)|1⟩⟨1|`.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg3::{c, re, vec_index, Complex, Mat3C, Mat9C, ZERO};
use crate::pulses::{PulseSchedule, Segment};
use crate::{Error, Result};

/// Rabi frequencies of the two lasers and Einstein coefficients of the two
/// upper levels, in consistent units (angular frequency and inverse time).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VParams {
    pub omega2: f64,
    pub omega3: f64,
    pub a2: f64,
    pub a3: f64,
}

impl VParams {
    pub fn new(omega2: f64, omega3: f64, a2: f64, a3: f64) -> Result<Self> {
        let p = VParams {
            omega2,
            omega3,
            a2,
            a3,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        let fields = [
            ("omega2", self.omega2),
            ("omega3", self.omega3),
            ("a2", self.a2),
            ("a3", self.a3),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and non-negative",
                });
            }
        }
        Ok(())
    }

    /// Same atom with the π-pulse laser switched off.
    pub fn probe_only(&self) -> Self {
        VParams {
            omega2: 0.0,
            ..*self
        }
    }

    /// Same atom with the probe laser switched off.
    pub fn drive_only(&self) -> Self {
        VParams {
            omega3: 0.0,
            ..*self
        }
    }

    /// Parameters in force during `seg`: lasers that are off get zero Rabi
    /// frequency.
    pub fn for_segment(&self, seg: &Segment) -> Self {
        VParams {
            omega2: if seg.pi_on { self.omega2 } else { 0.0 },
            omega3: if seg.probe_on { self.omega3 } else { 0.0 },
            ..*self
        }
    }

    /// Steady-state photon emission rate of an atom in the ground state under
    /// the probe laser alone, `A₃Ω₃²/(A₃² + 2Ω₃²)`.
    pub fn probe_emission_rate(&self) -> f64 {
        let o2 = self.omega3 * self.omega3;
        let denom = self.a3 * self.a3 + 2.0 * o2;
        if denom == 0.0 {
            0.0
        } else {
            self.a3 * o2 / denom
        }
    }
}

/// The non-Hermitian generator `M` of the no-photon evolution.
pub fn reduced_operator(p: &VParams) -> Mat3C {
    let h2 = c(0.0, 0.5 * p.omega2);
    let h3 = c(0.0, 0.5 * p.omega3);
    Mat3C::from_rows([
        [ZERO, h2, h3],
        [h2, re(0.5 * p.a2), ZERO],
        [h3, ZERO, re(0.5 * p.a3)],
    ])
}

/// `M` with the π-pulse laser off.
pub fn probe_only_operator(p: &VParams) -> Mat3C {
    reduced_operator(&p.probe_only())
}

/// Free evolution of levels 1 and 2 under the π-pulse laser alone, ignoring
/// decay; level 3 is left untouched.
pub fn pi_pulse_unitary(p: &VParams, t: f64) -> Mat3C {
    let half = 0.5 * p.omega2 * t;
    let (s, co) = (half.sin(), half.cos());
    Mat3C::from_rows([
        [re(co), c(0.0, -s), ZERO],
        [c(0.0, -s), re(co), ZERO],
        [ZERO, ZERO, re(1.0)],
    ])
}

/// Superoperator `L` with `vec(ρ̇) = L vec(ρ)` in column-stacking order.
pub fn liouvillian(p: &VParams) -> Mat9C {
    let m = reduced_operator(p);
    let mut l = Mat9C::zeros();
    // vec(-Mρ - ρM†): entry (i,j) of the result is
    // -Σ_k M_ik ρ_kj - Σ_l ρ_il conj(M_jl).
    for i in 0..3 {
        for j in 0..3 {
            let row = vec_index(i, j);
            for k in 0..3 {
                l.0[row][vec_index(k, j)] -= m.0[i][k];
                l.0[row][vec_index(i, k)] -= m.0[j][k].conj();
            }
        }
    }
    l.0[vec_index(0, 0)][vec_index(1, 1)] += re(p.a2);
    l.0[vec_index(0, 0)][vec_index(2, 2)] += re(p.a3);
    l
}

/// Dimensionless smallness parameters of the measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Epsilons {
    /// `A₃Ω₂/Ω₃²`: leakage of the π drive through an imperfect probe.
    pub eps_p: f64,
    /// `Ω₂/Ω₃`.
    pub eps_r: f64,
    /// `Ω₃²/A₃²`.
    pub eps_d: f64,
}

pub fn epsilons(p: &VParams) -> Result<Epsilons> {
    if p.omega3 == 0.0 {
        return Err(Error::InvalidParameter {
            name: "omega3",
            reason: "must be positive to define the measurement parameters",
        });
    }
    if p.a3 == 0.0 {
        return Err(Error::InvalidParameter {
            name: "a3",
            reason: "must be positive to define the measurement parameters",
        });
    }
    let o3sq = p.omega3 * p.omega3;
    Ok(Epsilons {
        eps_p: p.a3 * p.omega2 / o3sq,
        eps_r: p.omega2 / p.omega3,
        eps_d: o3sq / (p.a3 * p.a3),
    })
}

/// Outcome of one "much smaller than" comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Grade {
    /// Ratio below `0.01`.
    Pass,
    /// Ratio below `0.1`.
    Warning,
    Fail,
}

impl Grade {
    pub fn of(ratio: f64) -> Grade {
        if ratio < 0.01 {
            Grade::Pass
        } else if ratio < 0.1 {
            Grade::Warning
        } else {
            Grade::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Grade::Pass => "pass",
            Grade::Warning => "warning",
            Grade::Fail => "fail",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeCheck {
    pub name: &'static str,
    pub description: &'static str,
    /// The ratio required to be small.
    pub value: f64,
    pub grade: Grade,
}

impl RegimeCheck {
    fn new(name: &'static str, description: &'static str, value: f64) -> Self {
        let grade = if value.is_nan() {
            Grade::Fail
        } else {
            Grade::of(value)
        };
        RegimeCheck {
            name,
            description,
            value,
            grade,
        }
    }

    /// A check is satisfied unless it fails outright.
    pub fn satisfied(&self) -> bool {
        self.grade != Grade::Fail
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    pub checks: Vec<RegimeCheck>,
}

impl RegimeReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(RegimeCheck::satisfied)
    }

    pub fn worst(&self) -> Grade {
        self.checks
            .iter()
            .map(|c| c.grade)
            .max()
            .unwrap_or(Grade::Pass)
    }

    pub fn get(&self, name: &str) -> Option<&RegimeCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Grade the inequalities under which the first-order measurement picture
/// holds.
pub fn validate_regime(p: &VParams, s: &PulseSchedule) -> RegimeReport {
    let inv_a3 = ratio(1.0, p.a3);
    let slow = ratio(p.a3, p.omega3 * p.omega3);
    let gap = s.t_pi / s.n as f64 - s.tau_p;
    let (eps_p, eps_d) = match epsilons(p) {
        Ok(e) => (e.eps_p, e.eps_d),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    RegimeReport {
        checks: alloc::vec![
            RegimeCheck::new("short_probe", "tau_p / T_pi", ratio(s.tau_p, s.t_pi)),
            RegimeCheck::new(
                "fast_decay",
                "(1/A3) / (T_pi/n - tau_p)",
                ratio(inv_a3, gap),
            ),
            RegimeCheck::new(
                "long_probe",
                "max(1/A3, A3/Omega3^2) / tau_p",
                ratio(inv_a3.max(slow), s.tau_p),
            ),
            RegimeCheck::new("eps_p", "A3 Omega2 / Omega3^2", eps_p),
            RegimeCheck::new("eps_d", "Omega3^2 / A3^2", eps_d),
        ],
    }
}

/// `ρ̇` evaluated directly from the master equation, for checking
/// [`liouvillian`].
pub fn bloch_rhs(p: &VParams, rho: &Mat3C) -> Mat3C {
    let m = reduced_operator(p);
    let mut out = -(m * *rho) - *rho * m.adjoint();
    out.0[0][0] += Complex::new(p.a2 * rho.0[1][1].re + p.a3 * rho.0[2][2].re, 0.0);
    out
}
