//! Named parameter sets.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::pulses::{Mode, PulseSchedule};
use crate::vsystem::VParams;

/// `Ω₂/Ω₃` of the ion-trap reconstruction.
pub const ITANO_EPS_R: f64 = 6.5e-6;
/// `Ω₃²/A₃²` of the ion-trap reconstruction.
pub const ITANO_EPS_D: f64 = 2.5e-4;
/// Probe duration in units of the π-pulse length.
pub const ITANO_TAU_RATIO: f64 = 0.009375;
pub const ITANO_DEFAULT_N: usize = 4;

/// Dimensionless reconstruction of the Be⁺ ion-trap experiment with
/// `Tπ = 1`: an exact π pulse `Ω₂ = π`, and `Ω₃`, `A₃` fixed by
/// `eps_r = 6.5e-6` and `eps_d = 2.5e-4`. This gives `Ω₃ ≈ 4.833e5`,
/// `A₃ ≈ 3.057e7` and `eps_p ≈ 4.11e-4`.
pub fn itano() -> VParams {
    let omega2 = PI;
    let omega3 = omega2 / ITANO_EPS_R;
    let a3 = omega3 / ITANO_EPS_D.sqrt();
    VParams {
        omega2,
        omega3,
        a2: 0.0,
        a3,
    }
}

/// Pulse timing of [`itano`] with `n` probe pulses.
pub fn itano_schedule(n: usize, mode: Mode) -> PulseSchedule {
    PulseSchedule {
        t_pi: 1.0,
        n,
        tau_p: ITANO_TAU_RATIO,
        mode,
        placement: Default::default(),
    }
}

/// Look up a preset by name.
pub fn by_name(name: &str) -> Option<VParams> {
    match name {
        "itano" => Some(itano()),
        _ => None,
    }
}

pub const NAMES: &[&str] = &["itano"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsystem::epsilons;

    #[test]
    fn reconstruction_matches_quoted_epsilons() {
        let p = itano();
        let e = epsilons(&p).unwrap();
        assert!((e.eps_r / ITANO_EPS_R - 1.0).abs() < 1e-12);
        assert!((e.eps_d / ITANO_EPS_D - 1.0).abs() < 1e-12);
        assert!((e.eps_p - 4.11e-4).abs() < 1e-6);
        assert!((p.omega3 - 483321.9467).abs() < 1e-3);
        assert!((p.a3 - 30567963.89).abs() < 1e-1);
        assert!((e.eps_r - e.eps_p * e.eps_d.sqrt()).abs() <= 1e-12 * e.eps_r);
    }
}
