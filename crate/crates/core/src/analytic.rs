//! First-order closed forms in the measurement parameter `eps_p`.
//!
//! A probe of relative length `r = τ_p/Tπ` acting on an atom that is also
//! driven by the π pulse does not project perfectly. Atoms that scatter no
//! photon end up in `|λ̃⟩ ∝ (-i eps_p, 1, 0)` instead of `|2⟩`, and atoms that
//! do scatter end up in `ρ̃`, which keeps a population `π r eps_p` on level 2.
//! Chaining `n` such probes across one π pulse gives a linear recurrence for
//! the no-photon weight `β(k)` and the level-2 population at `Tπ`.
//!
//! Terms of order `eps_p²` and `eps_p eps_d` are dropped throughout; the
//! exact values come from [`crate::bloch`].

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::density::DensityMatrix3;
use crate::linalg3::{c, re, Complex, Mat3C, Vec3C, ZERO};
use crate::pulses::PulseSchedule;
use crate::vsystem::{epsilons, Epsilons, VParams};
use crate::{Error, Result};

/// Approximate eigenvalues `(λ₁, λ₂, λ₃)` of `M`: the pair
/// `¼(A₃ ± √(A₃² − 4Ω₃²))` of the probe transition and the slow
/// `½A₃Ω₂²/Ω₃²` of the driven level.
pub fn lambda_approx(p: &VParams) -> [Complex; 3] {
    let root = re(p.a3 * p.a3 - 4.0 * p.omega3 * p.omega3).sqrt();
    let slow = if p.omega3 > 0.0 {
        0.5 * p.a3 * p.omega2 * p.omega2 / (p.omega3 * p.omega3)
    } else {
        0.0
    };
    [(re(p.a3) + root) * 0.25, re(slow), (re(p.a3) - root) * 0.25]
}

/// `½(1 − cosⁿ(π/n))`: level-2 population after `n` ideal instantaneous
/// projections spread evenly over the π pulse.
pub fn rho22_ideal(n: usize) -> f64 {
    0.5 * (1.0 - (PI / n as f64).cos().powi(n as i32))
}

/// The measurement-error parameters that enter every first-order formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeCorrection {
    pub eps_p: f64,
    /// `τ_p/Tπ`.
    pub tau_ratio: f64,
}

/// States left behind by one probe window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveMeasurement {
    /// No photon scattered.
    pub lambda_tilde: Vec3C,
    /// At least one photon scattered.
    pub rho_tilde: DensityMatrix3,
    pub eps: Epsilons,
    pub tau_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZenoPrediction {
    pub n: usize,
    pub rho22_ideal: f64,
    pub rho22_modified: f64,
    pub rho22_jump: f64,
    /// `β(1), …, β(n)`.
    pub beta: Vec<f64>,
    /// Level-2 population of `(1 − β(n)) ρ̃ + β(n) |λ̃⟩⟨λ̃|`.
    pub rho22_assembled: f64,
}

impl ProbeCorrection {
    pub fn new(eps_p: f64, tau_ratio: f64) -> Self {
        ProbeCorrection { eps_p, tau_ratio }
    }

    pub fn from_params(p: &VParams, s: &PulseSchedule) -> Result<Self> {
        s.check()?;
        Ok(ProbeCorrection {
            eps_p: epsilons(p)?.eps_p,
            tau_ratio: s.tau_ratio(),
        })
    }

    /// `π r eps_p`, the level-2 population left in the emitting subensemble.
    fn leak(&self) -> f64 {
        PI * self.tau_ratio * self.eps_p
    }

    /// `(s_n, c_n) = (sin, cos) π(1/n − r)`: the rotation accumulated between
    /// two probe windows.
    pub fn rotation(&self, n: usize) -> (f64, f64) {
        let angle = PI / n as f64 - PI * self.tau_ratio;
        (angle.sin(), angle.cos())
    }

    /// `(−i eps_p, 1, 0)/√(1 + eps_p²)`.
    pub fn lambda_tilde(&self) -> Vec3C {
        let e = self.eps_p;
        Vec3C::new(c(0.0, -e), re(1.0), ZERO) * (1.0 / (1.0 + e * e).sqrt())
    }

    pub fn rho_tilde(&self) -> DensityMatrix3 {
        let leak = self.leak();
        let e = self.eps_p;
        DensityMatrix3::from_raw(Mat3C::from_rows([
            [re(1.0 - leak), c(0.0, e), ZERO],
            [c(0.0, -e), re(leak), ZERO],
            [ZERO, ZERO, ZERO],
        ]))
    }

    fn lower_pair(rho: &DensityMatrix3) -> Result<()> {
        if rho.supported_on_lower_pair(1e-8) {
            Ok(())
        } else {
            Err(Error::InvalidDensity {
                defect: "state has weight on level 3 before a probe",
                magnitude: rho.get(3, 3).norm(),
            })
        }
    }

    /// Probability that a probe window scatters no photon,
    /// `ρ₂₂ + 2 eps_p Im ρ₁₂ − π r eps_p ρ₂₂`.
    pub fn p0_probe(&self, rho: &DensityMatrix3) -> Result<f64> {
        Self::lower_pair(rho)?;
        let r22 = rho.population(2);
        Ok(r22 + 2.0 * self.eps_p * rho.get(1, 2).im - self.leak() * r22)
    }

    /// Ensemble state after one probe window, `P₀|λ̃⟩⟨λ̃| + (1 − P₀)ρ̃`.
    pub fn post_probe_density(&self, rho: &DensityMatrix3) -> Result<DensityMatrix3> {
        let p0 = self.p0_probe(rho)?;
        let l = self.lambda_tilde();
        Ok(DensityMatrix3::mix(
            p0,
            &DensityMatrix3::from_raw(l.outer(&l)),
            1.0 - p0,
            &self.rho_tilde(),
        ))
    }

    /// Level-2 population after one probe window to first order,
    /// `ρ₂₂ + 2 eps_p Im ρ₁₂ + π r eps_p (1 − 2ρ₂₂)`.
    pub fn post_probe_rho22(&self, rho: &DensityMatrix3) -> Result<f64> {
        Self::lower_pair(rho)?;
        let r22 = rho.population(2);
        Ok(r22 + 2.0 * self.eps_p * rho.get(1, 2).im + self.leak() * (1.0 - 2.0 * r22))
    }

    /// Transfer coefficients of `β(k) = p + (q − p) β(k−1)`: `p` is the
    /// no-photon probability of the next window for an atom that scattered
    /// in this one, `q` for an atom that did not.
    pub fn pq(&self, n: usize) -> (f64, f64) {
        let (s, co) = self.rotation(n);
        let (e, leak) = (self.eps_p, self.leak());
        let p = 0.5 * (1.0 - co) + 2.0 * s * e + leak * co - 0.5 * leak * (1.0 - co);
        let q = 0.5 * (1.0 + co) - 2.0 * s * e - 0.5 * leak * (1.0 + co);
        (p, q)
    }

    /// `β(1)` for an atom prepared in the ground state.
    pub fn beta1(&self, n: usize) -> f64 {
        let (s, co) = self.rotation(n);
        0.5 * (1.0 - co) + s * self.eps_p - 0.5 * self.leak() * (1.0 - co)
    }

    /// `β(1), …, β(n)` by the recurrence.
    pub fn beta_sequence(&self, n: usize) -> Vec<f64> {
        let (p, q) = self.pq(n);
        let mut out = Vec::with_capacity(n);
        let mut b = self.beta1(n);
        for _ in 0..n {
            out.push(b);
            b = p + (q - p) * b;
        }
        out
    }

    /// `β(k) = p(1 − dᵏ⁻¹)/(1 − d) + dᵏ⁻¹ β(1)` with `d = q − p`.
    pub fn beta_closed(&self, n: usize, k: usize) -> f64 {
        assert!(k >= 1, "beta is indexed from 1");
        let (p, q) = self.pq(n);
        let d = q - p;
        let dk = d.powi(k as i32 - 1);
        let geometric = if d == 1.0 {
            (k - 1) as f64
        } else {
            (1.0 - dk) / (1.0 - d)
        };
        p * geometric + dk * self.beta1(n)
    }

    /// `½(1 − c_nⁿ)`: ideal projections at the ends of the probe windows,
    /// with the π drive running for `Tπ/n − τ_p` between them.
    pub fn rho22_modified(&self, n: usize) -> f64 {
        let (_, co) = self.rotation(n);
        0.5 * (1.0 - co.powi(n as i32))
    }

    /// `½(1 − c_nⁿ) + (2n − 1) s_n c_nⁿ⁻¹ eps_p + π n r c_nⁿ eps_p`.
    pub fn rho22_jump(&self, n: usize) -> f64 {
        let (s, co) = self.rotation(n);
        let nn = n as i32;
        let nf = n as f64;
        0.5 * (1.0 - co.powi(nn))
            + (2.0 * nf - 1.0) * s * co.powi(nn - 1) * self.eps_p
            + PI * nf * self.tau_ratio * co.powi(nn) * self.eps_p
    }

    /// Ensemble after the last window, `(1 − β(n)) ρ̃ + β(n) |λ̃⟩⟨λ̃|`.
    pub fn assembled_final(&self, n: usize) -> DensityMatrix3 {
        let b = self.beta_closed(n, n);
        let l = self.lambda_tilde();
        DensityMatrix3::mix(
            1.0 - b,
            &self.rho_tilde(),
            b,
            &DensityMatrix3::from_raw(l.outer(&l)),
        )
    }

    pub fn prediction(&self, n: usize) -> ZenoPrediction {
        ZenoPrediction {
            n,
            rho22_ideal: rho22_ideal(n),
            rho22_modified: self.rho22_modified(n),
            rho22_jump: self.rho22_jump(n),
            beta: self.beta_sequence(n),
            rho22_assembled: self.assembled_final(n).population(2),
        }
    }
}

pub fn effective_measurement(p: &VParams, s: &PulseSchedule) -> Result<EffectiveMeasurement> {
    let pc = ProbeCorrection::from_params(p, s)?;
    Ok(EffectiveMeasurement {
        lambda_tilde: pc.lambda_tilde(),
        rho_tilde: pc.rho_tilde(),
        eps: epsilons(p)?,
        tau_ratio: pc.tau_ratio,
    })
}

pub fn p0_probe(p: &VParams, s: &PulseSchedule, rho: &DensityMatrix3) -> Result<f64> {
    ProbeCorrection::from_params(p, s)?.p0_probe(rho)
}

pub fn post_probe_density(
    p: &VParams,
    s: &PulseSchedule,
    rho: &DensityMatrix3,
) -> Result<DensityMatrix3> {
    ProbeCorrection::from_params(p, s)?.post_probe_density(rho)
}

/// `(p, q)` for the schedule's `n`.
pub fn pq(p: &VParams, s: &PulseSchedule) -> Result<(f64, f64)> {
    Ok(ProbeCorrection::from_params(p, s)?.pq(s.n))
}

pub fn beta_sequence(p: &VParams, s: &PulseSchedule) -> Result<Vec<f64>> {
    Ok(ProbeCorrection::from_params(p, s)?.beta_sequence(s.n))
}

pub fn rho22_final(p: &VParams, s: &PulseSchedule) -> Result<ZenoPrediction> {
    Ok(ProbeCorrection::from_params(p, s)?.prediction(s.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{itano, itano_schedule};
    use crate::pulses::Mode;

    fn canonical() -> ProbeCorrection {
        ProbeCorrection::from_params(&itano(), &itano_schedule(4, Mode::Simultaneous)).unwrap()
    }

    #[test]
    fn ideal_limit_of_the_effective_states() {
        let pc = ProbeCorrection::new(0.0, 0.01);
        assert_eq!(pc.lambda_tilde(), Vec3C::level(2));
        assert_eq!(pc.rho_tilde(), DensityMatrix3::ground());
    }

    #[test]
    fn canonical_effective_states() {
        let pc = canonical();
        let rt = pc.rho_tilde();
        assert!((rt.population(2) - 1.2e-5).abs() < 0.1e-5);
        assert!((rt.get(1, 2).norm() - 4.1e-4).abs() < 0.05e-4);
        assert_eq!(rt.get(2, 1), -rt.get(1, 2));
        assert!((pc.lambda_tilde().norm() - 1.0).abs() < 1e-12);
        assert!((rt.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probe_on_the_upper_state() {
        let pc = ProbeCorrection::new(4.1e-4, 0.009375);
        let up = DensityMatrix3::level(2);
        let expected = 1.0 - PI * 0.009375 * 4.1e-4;
        assert!((pc.p0_probe(&up).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.99998793).abs() < 1e-8);
        assert!((pc.post_probe_rho22(&up).unwrap() - expected).abs() < 1e-12);
        assert_eq!(
            ProbeCorrection::new(0.0, 0.1)
                .p0_probe(&DensityMatrix3::ground())
                .unwrap(),
            0.0
        );
        assert!(pc.p0_probe(&DensityMatrix3::level(3)).is_err());
    }

    #[test]
    fn balanced_state_is_a_fixed_point() {
        let pc = canonical();
        let rho = DensityMatrix3::diagonal([0.5, 0.5, 0.0]);
        assert_eq!(pc.post_probe_rho22(&rho).unwrap(), 0.5);
        let ideal = ProbeCorrection::new(0.0, 0.05);
        let d = DensityMatrix3::diagonal([0.3, 0.7, 0.0]);
        let out = ideal.post_probe_density(&d).unwrap();
        assert!((out.population(1) - 0.3).abs() < 1e-15);
        assert!((out.population(2) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn transfer_coefficients() {
        let (p, q) = ProbeCorrection::new(0.0, 0.013).pq(7);
        assert!((p + q - 1.0).abs() < 1e-15);
        let e = 3e-3;
        let (p, q) = ProbeCorrection::new(e, 0.0).pq(2);
        assert!((p - (0.5 + 2.0 * e)).abs() < 1e-15);
        assert!((q - (0.5 - 2.0 * e)).abs() < 1e-15);
        let (p64, _) = canonical().pq(64);
        assert!((p64 - 1.25e-4).abs() < 0.01e-4, "{p64}");
    }

    #[test]
    fn beta_for_two_ideal_projections() {
        let pc = ProbeCorrection::new(0.0, 0.0);
        let b = pc.beta_sequence(2);
        assert!((b[0] - 0.5).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_rows() {
        assert_eq!(rho22_ideal(1), 1.0);
        let pc = ProbeCorrection::new(4.1e-4, 0.009375);
        assert!((pc.rho22_modified(4) - 0.35985).abs() < 5e-6);
        assert!((pc.rho22_jump(4) - 0.36062).abs() < 2e-5);
        assert!((pc.rho22_jump(64) - 0.00789).abs() < 2e-5);
    }

    #[test]
    fn eigenvalue_approximations() {
        let p = itano();
        let l = lambda_approx(&p);
        assert!((l[1].re - 0.5 * 6.5e-6f64.powi(2) * p.a3).abs() < 1e-12);
        assert_eq!(lambda_approx(&p.probe_only())[1], ZERO);
    }
}
