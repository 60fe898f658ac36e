//! Conditional no-photon quantities.
//!
//! An atom that has emitted no photon up to time `t` is in the unnormalized
//! state `e^{-Mt}ψ`; its squared norm is the no-photon probability `P₀(t)`
//! and `w₁(t) = -dP₀/dt = ⟨φ|(M + M†)|φ⟩` is the density of the first
//! emission.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::density::{DensityMatrix3, INPUT_TOL};
use crate::linalg3::{eig3, Mat3C, Modes, Vec3C};
use crate::vsystem::{probe_only_operator, VParams};
use crate::{Error, Result};

/// `‖e^{-Mt}ψ‖²`.
pub fn p0_state(m: &Mat3C, t: f64, psi: &Vec3C) -> f64 {
    eig3(m).propagate(t, psi).norm_sqr()
}

/// `tr{e^{-Mt} ρ e^{-M†t}}`.
pub fn p0_density(m: &Mat3C, t: f64, rho: &DensityMatrix3) -> Result<f64> {
    rho.validate(INPUT_TOL, INPUT_TOL)?;
    let u = eig3(m).exp_neg(t);
    Ok((u * rho.0 * u.adjoint()).trace().re)
}

/// First-emission density `⟨φ|(M + M†)|φ⟩` with `φ = e^{-Mt}ψ`.
pub fn w1(m: &Mat3C, t: f64, psi: &Vec3C) -> f64 {
    let phi = eig3(m).propagate(t, psi);
    decay_rate(m, &phi)
}

/// `⟨φ|(M + M†)|φ⟩`.
pub fn decay_rate(m: &Mat3C, phi: &Vec3C) -> f64 {
    let d = *m + m.adjoint();
    phi.inner(&(d * *phi)).re
}

/// Evaluator of `P₀(t)` and `w₁(t)` for one fixed operator and initial state.
#[derive(Clone, Copy, Debug)]
pub struct NoPhotonCurve {
    modes: Modes,
    decay: Mat3C,
}

impl NoPhotonCurve {
    pub fn new(m: &Mat3C, psi: &Vec3C) -> Self {
        NoPhotonCurve {
            modes: eig3(m).modes(psi),
            decay: *m + m.adjoint(),
        }
    }

    /// Unnormalized conditional state `e^{-Mt}ψ`.
    #[inline]
    pub fn state(&self, t: f64) -> Vec3C {
        self.modes.at(t)
    }

    #[inline]
    pub fn p0(&self, t: f64) -> f64 {
        self.state(t).norm_sqr()
    }

    #[inline]
    pub fn w1(&self, t: f64) -> f64 {
        let phi = self.state(t);
        phi.inner(&(self.decay * phi)).re
    }

    /// `P₀` and `w₁` from a single propagation.
    #[inline]
    pub fn p0_and_w1(&self, t: f64) -> (f64, f64, Vec3C) {
        let phi = self.state(t);
        (phi.norm_sqr(), phi.inner(&(self.decay * phi)).re, phi)
    }

    /// `(t, P₀(t))` on `samples + 1` evenly spaced times in `[0, horizon]`.
    pub fn sample(&self, horizon: f64, samples: usize) -> Vec<(f64, f64)> {
        let n = samples.max(1);
        (0..=n)
            .map(|k| {
                let t = horizon * k as f64 / n as f64;
                (t, self.p0(t))
            })
            .collect()
    }
}

/// Mean number of photons emitted during a probe of length `tau`,
/// `|α₁|² A₃Ω₃²/(A₃² + 2Ω₃²) τ`, from the steady-state emission rate.
pub fn photon_number(p: &VParams, tau: f64, psi: &Vec3C) -> f64 {
    let n = psi.norm_sqr();
    if n == 0.0 {
        return 0.0;
    }
    psi[0].norm_sqr() / n * p.probe_emission_rate() * tau
}

/// Probe duration that yields `n_photons` expected photons for ground-state
/// amplitude `alpha1`.
pub fn probe_time_for_photons(p: &VParams, n_photons: f64, alpha1: f64) -> f64 {
    n_photons / (alpha1 * alpha1 * p.probe_emission_rate())
}

/// Norm `‖α₁ e^{-M₀τ_p}|1⟩‖` of the part of the state that a probe of
/// `n_photons` expected photons fails to reduce. The π drive is ignored.
pub fn nonreduced_norm(p: &VParams, n_photons: f64, alpha1: f64) -> Result<f64> {
    Ok(NonReducedNorm::new(p)?.at(n_photons, alpha1))
}

/// [`nonreduced_norm`] with the spectral data of `M₀` computed once.
#[derive(Clone, Copy, Debug)]
pub struct NonReducedNorm {
    params: VParams,
    modes: Modes,
}

impl NonReducedNorm {
    pub fn new(p: &VParams) -> Result<Self> {
        p.check()?;
        if !(p.omega3 > 0.0) || !(p.a3 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega3",
                reason: "probe Rabi frequency and A3 must be positive",
            });
        }
        Ok(NonReducedNorm {
            params: *p,
            modes: eig3(&probe_only_operator(p)).modes(&Vec3C::level(1)),
        })
    }

    pub fn at(&self, n_photons: f64, alpha1: f64) -> f64 {
        assert!(
            alpha1 > 0.0 && alpha1 <= 1.0,
            "ground-state amplitude must lie in (0, 1]"
        );
        let tau = probe_time_for_photons(&self.params, n_photons, alpha1);
        alpha1 * self.modes.at(tau).norm()
    }

    /// Maximum over `α₁ ∈ (0, 1]`: scan `α₁²` on a `1e-3` grid, then refine
    /// by golden-section search around the best grid point.
    pub fn maximize(&self, n_photons: f64) -> (f64, f64) {
        let f = |a2: f64| self.at(n_photons, a2.sqrt());
        let step = 1e-3;
        let mut best = (f(1.0), 1.0);
        for k in 1..1000 {
            let x = k as f64 * step;
            let v = f(x);
            if v > best.0 {
                best = (v, x);
            }
        }
        let (mut lo, mut hi) = ((best.1 - step).max(step * 1e-3), (best.1 + step).min(1.0));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..60 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            }
        }
        for (v, x) in [(f1, x1), (f2, x2)] {
            if v > best.0 {
                best = (v, x);
            }
        }
        (best.0, best.1.sqrt())
    }
}

/// Upper bound `1.04 e^{-N/2}` on the non-reduced norm.
pub fn nonreduced_bound(n_photons: f64) -> f64 {
    1.04 * (-0.5 * n_photons).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table1Cell {
    /// `Ω₃/A₃`.
    pub ratio: f64,
    pub n_photons: u32,
    pub max_norm: f64,
    pub argmax_alpha1: f64,
    pub bound: f64,
}

impl Table1Cell {
    pub fn within_bound(&self) -> bool {
        self.max_norm <= self.bound
    }
}

/// Largest non-reduced norm for each `(Ω₃/A₃, N)`, in row-major order over
/// `ratios × counts`. Uses `A₃ = 1`.
pub fn table1(ratios: &[f64], counts: &[u32]) -> Result<Vec<Table1Cell>> {
    if counts.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter {
            name: "counts",
            reason: "photon numbers below 2 are outside the bounded regime",
        });
    }
    let mut cells = Vec::with_capacity(ratios.len() * counts.len());
    for &ratio in ratios {
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidParameter {
                name: "ratios",
                reason: "Omega3/A3 must be positive and finite",
            });
        }
        let eval = NonReducedNorm::new(&VParams {
            omega2: 0.0,
            omega3: ratio,
            a2: 0.0,
            a3: 1.0,
        })?;
        for &n in counts {
            let (max_norm, argmax_alpha1) = eval.maximize(n as f64);
            cells.push(Table1Cell {
                ratio,
                n_photons: n,
                max_norm,
                argmax_alpha1,
                bound: nonreduced_bound(n as f64),
            });
        }
    }
    Ok(cells)
}

/// Ratios `Ω₃/A₃` of the published grid, with `1e-3` standing in for
/// `Ω₃ ≪ A₃`.
pub const TABLE1_RATIOS: [f64; 4] = [1e-3, 0.5, 1.0, 2.0];
pub const TABLE1_COUNTS: [u32; 7] = [4, 5, 6, 8, 10, 20, 50];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::{c, re, ZERO};

    fn unit_probe() -> VParams {
        VParams::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn p0_basics() {
        let m = probe_only_operator(&unit_probe());
        assert_eq!(p0_state(&m, 0.0, &Vec3C::level(1)), 1.0);
        assert!((p0_state(&m, 50.0, &Vec3C::level(2)) - 1.0).abs() < 1e-15);
        let p = p0_state(&m, 30.0, &Vec3C::level(1));
        assert!((p - 4.8e-7).abs() < 0.1e-7, "{p}");
    }

    #[test]
    fn p0_density_of_mixture() {
        let m = probe_only_operator(&unit_probe());
        let rho = DensityMatrix3::diagonal([0.5, 0.5, 0.0]);
        assert!((p0_density(&m, 200.0, &rho).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p0_density(&m, 0.0, &rho).unwrap(), 1.0);
        let psi = Vec3C::new(re(0.6), c(0.0, 0.8), ZERO);
        let pure = DensityMatrix3::pure(&psi).unwrap();
        let a = p0_density(&m, 1.7, &pure).unwrap();
        assert!((a - p0_state(&m, 1.7, &psi)).abs() < 1e-14);
        assert!(p0_density(&m, 1.0, &DensityMatrix3::diagonal([0.7, 0.7, 0.0])).is_err());
    }

    #[test]
    fn w1_edges() {
        let m = probe_only_operator(&unit_probe());
        assert!(w1(&m, 0.0, &Vec3C::level(1)).abs() < 1e-15);
        assert_eq!(w1(&m, 3.0, &Vec3C::level(2)), 0.0);
    }

    #[test]
    fn photon_numbers() {
        let p = unit_probe();
        assert!((photon_number(&p, 30.0, &Vec3C::level(1)) - 10.0).abs() < 1e-12);
        assert_eq!(photon_number(&p, 30.0, &Vec3C::level(2)), 0.0);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let half = Vec3C::new(re(r), re(r), ZERO);
        assert!((photon_number(&p, 30.0, &half) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn nonreduced_norm_examples() {
        let a = |ratio: f64, n: f64| {
            nonreduced_norm(&VParams::new(0.0, ratio, 0.0, 1.0).unwrap(), n, 1.0).unwrap()
        };
        assert!((a(1.0, 10.0) / 6.9e-4 - 1.0).abs() < 0.01);
        assert!((a(0.5, 4.0) / 0.023 - 1.0).abs() < 0.01);
        assert!((a(1e-3, 4.0) / 0.135 - 1.0).abs() < 0.01);
    }

    #[test]
    fn table1_maximum_sits_at_unit_amplitude() {
        let cells = table1(&[0.5, 2.0], &[6, 8]).unwrap();
        for cell in &cells {
            assert!((cell.argmax_alpha1 - 1.0).abs() < 1e-6, "{cell:?}");
            assert!(cell.within_bound());
        }
        let c28 = cells
            .iter()
            .find(|c| c.ratio == 2.0 && c.n_photons == 8)
            .unwrap();
        assert!((c28.max_norm - 0.011).abs() < 0.0005);
        assert!(table1(&[1.0], &[1]).is_err());
    }
}
