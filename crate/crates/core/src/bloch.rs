//! Exact ensemble dynamics through a piecewise-constant pulse schedule.
//!
//! Each segment has a constant Liouvillian, so the state after it is
//! `e^{L dt} vec(ρ)`. Schedules repeat the same two or three segment shapes,
//! so the 9×9 exponentials are computed once per (kind, duration) and reused.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::density::DensityMatrix3;
use crate::linalg3::{c, eig3, expm9_wide, Complex, Mat3C, Mat9C, Vec3C, ZERO};
use crate::pulses::{PulseSchedule, Segment, SegmentKind};
use crate::vsystem::{liouvillian, reduced_operator, VParams};
use crate::{Error, Result};

/// Trace drift and Hermiticity defect tolerated along a run.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated along a run.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Maximum number of interval halvings when `‖L dt‖` is too large.
pub const MAX_SUBDIVISIONS: u32 = 60;
/// Length of the optional free-decay segment, in units of `1/A₃`.
pub const SETTLE_LIFETIMES: f64 = 20.0;

/// `e^{L dt}`, halving `dt` and squaring back when the norm guard trips.
pub fn segment_propagator(l: &Mat9C, dt: f64) -> Result<Mat9C> {
    let mut halvings = 0u32;
    loop {
        let sub = dt / (1u64 << halvings) as f64;
        match expm9_wide(l, sub) {
            Ok(mut e) => {
                for _ in 0..halvings {
                    e = e.mul(&e);
                }
                return Ok(e.round());
            }
            Err(Error::NormOverflow { .. }) if halvings < MAX_SUBDIVISIONS => halvings += 1,
            Err(Error::NormOverflow { .. }) => {
                return Err(Error::SubdivisionLimit { steps: halvings })
            }
            Err(e) => return Err(e),
        }
    }
}

/// `ρ' = e^{L dt} ρ`.
pub fn propagate_segment(l: &Mat9C, dt: f64, rho: &DensityMatrix3) -> Result<DensityMatrix3> {
    if dt == 0.0 {
        return Ok(*rho);
    }
    let e = segment_propagator(l, dt)?;
    Ok(DensityMatrix3::unvectorize(&e.apply(&rho.vectorize())))
}

/// Segment propagators for one atom, cached by laser configuration and
/// duration.
#[derive(Clone, Debug)]
pub struct Propagator {
    params: VParams,
    cache: BTreeMap<(SegmentKind, u64), Mat9C>,
}

impl Propagator {
    pub fn new(params: &VParams) -> Self {
        Propagator {
            params: *params,
            cache: BTreeMap::new(),
        }
    }

    pub fn params_for(&self, kind: SegmentKind) -> VParams {
        let p = &self.params;
        match kind {
            SegmentKind::Dark => VParams {
                omega2: 0.0,
                omega3: 0.0,
                ..*p
            },
            SegmentKind::Drive => p.drive_only(),
            SegmentKind::Probe => p.probe_only(),
            SegmentKind::ProbeAndDrive => *p,
        }
    }

    pub fn step(&mut self, kind: SegmentKind, dt: f64) -> Result<&Mat9C> {
        let key = (kind, dt.to_bits());
        if !self.cache.contains_key(&key) {
            let l = liouvillian(&self.params_for(kind));
            let e = segment_propagator(&l, dt)?;
            self.cache.insert(key, e);
        }
        Ok(&self.cache[&key])
    }

    pub fn apply(
        &mut self,
        kind: SegmentKind,
        dt: f64,
        rho: &DensityMatrix3,
    ) -> Result<DensityMatrix3> {
        if dt == 0.0 {
            return Ok(*rho);
        }
        let e = self.step(kind, dt)?;
        Ok(DensityMatrix3::unvectorize(&e.apply(&rho.vectorize())))
    }

    /// Number of distinct exponentials computed so far.
    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Also record the state every `sample_step` inside segments.
    pub sample_step: Option<f64>,
    /// Append a laser-free decay of `20/A₃` after the schedule.
    pub settle: bool,
}

/// Ensemble states at increasing times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub samples: Vec<(f64, DensityMatrix3)>,
}

impl Trace {
    /// State at the last recorded time.
    ///
    /// # Panics
    /// If the trace is empty, which `run_*` never returns.
    pub fn last(&self) -> &DensityMatrix3 {
        &self
            .samples
            .last()
            .expect("trace has at least one sample")
            .1
    }

    /// The recorded state at exactly time `t`, if any.
    pub fn at(&self, t: f64) -> Option<&DensityMatrix3> {
        self.samples.iter().find(|(s, _)| *s == t).map(|(_, r)| r)
    }
}

fn check(t: f64, rho: &DensityMatrix3) -> Result<()> {
    let drift = (rho.trace() - 1.0).abs();
    if !(drift <= TRACE_TOL) {
        return Err(Error::InvariantBreach {
            what: "trace drift",
            time: t,
            magnitude: drift,
        });
    }
    let herm = rho.hermiticity_defect();
    if !(herm <= TRACE_TOL) {
        return Err(Error::InvariantBreach {
            what: "hermiticity",
            time: t,
            magnitude: herm,
        });
    }
    let min = rho.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        return Err(Error::InvariantBreach {
            what: "positivity",
            time: t,
            magnitude: min,
        });
    }
    Ok(())
}

/// Propagate `rho0` through `segments`, recording every segment boundary and
/// optionally intermediate samples. Aborts if the state stops being a
/// density matrix within [`TRACE_TOL`] / [`POSITIVITY_TOL`].
pub fn run_segments(
    p: &VParams,
    segments: &[Segment],
    rho0: &DensityMatrix3,
    opts: &RunOptions,
) -> Result<Trace> {
    p.check()?;
    if let Some(h) = opts.sample_step {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sample_step",
                reason: "must be positive and finite",
            });
        }
    }
    let mut prop = Propagator::new(p);
    let t0 = segments.first().map_or(0.0, |s| s.start);
    let mut rho = *rho0;
    check(t0, &rho)?;
    let mut trace = Trace {
        samples: alloc::vec![(t0, rho)],
    };
    for seg in segments {
        if !(seg.duration > 0.0) {
            continue;
        }
        let kind = seg.kind();
        if let Some(h) = opts.sample_step {
            let steps = (seg.duration / h).floor() as usize;
            let mut t = seg.start;
            for k in 1..=steps {
                let next = seg.start + k as f64 * h;
                if next >= seg.end {
                    break;
                }
                rho = prop.apply(kind, h, &rho)?;
                t = next;
                check(t, &rho)?;
                trace.samples.push((t, rho));
            }
            rho = prop.apply(kind, seg.end - t, &rho)?;
        } else {
            rho = prop.apply(kind, seg.duration, &rho)?;
        }
        check(seg.end, &rho)?;
        trace.samples.push((seg.end, rho));
    }
    Ok(trace)
}

/// The schedule's segments, plus the settle segment if requested.
pub fn schedule_segments(p: &VParams, s: &PulseSchedule, settle: bool) -> Result<Vec<Segment>> {
    let mut segs = s.segments()?;
    if settle {
        if !(p.a3 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "a3",
                reason: "settling needs a decaying level 3",
            });
        }
        segs.push(Segment::dark(s.t_pi, SETTLE_LIFETIMES / p.a3));
    }
    Ok(segs)
}

/// Ensemble evolution over the whole π pulse, read out at `Tπ` (or after the
/// settle segment).
pub fn run_schedule(
    p: &VParams,
    s: &PulseSchedule,
    rho0: &DensityMatrix3,
    opts: &RunOptions,
) -> Result<Trace> {
    let segs = schedule_segments(p, s, opts.settle)?;
    run_segments(p, &segs, rho0, opts)
}

/// Final ensemble state for an atom prepared in `|1⟩`.
pub fn final_state(p: &VParams, s: &PulseSchedule, settle: bool) -> Result<DensityMatrix3> {
    let segs = schedule_segments(p, s, settle)?;
    let mut prop = Propagator::new(p);
    let mut rho = DensityMatrix3::ground();
    for seg in &segs {
        rho = prop.apply(seg.kind(), seg.duration, &rho)?;
    }
    check(segs.last().map_or(0.0, |s| s.end), &rho)?;
    Ok(rho)
}

/// Subensemble that emitted nothing during `dt`:
/// `(e^{-M dt} ρ e^{-M† dt}, its trace)`.
pub fn no_emission_branch(p: &VParams, dt: f64, rho: &DensityMatrix3) -> (DensityMatrix3, f64) {
    let u = eig3(&reduced_operator(p)).exp_neg(dt);
    let out = DensityMatrix3::from_raw(u * rho.0 * u.adjoint());
    let w = out.trace();
    (out, w)
}

fn simpson_weight(k: usize, steps: usize) -> f64 {
    if k == 0 || k == steps {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

fn even_steps(quad_steps: usize) -> Result<usize> {
    if quad_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "quad_steps",
            reason: "need at least one quadrature panel",
        });
    }
    Ok(quad_steps + quad_steps % 2)
}

/// Rebuild the ensemble at `t` from its no-emission branch and the resets
/// after every emission:
/// `ρ⁰(t; ρ₀) + ∫₀ᵗ I(τ) ρ⁰(t − τ; |1⟩) dτ` with the emission rate
/// `I = A₂ρ₂₂ + A₃ρ₃₃` of the full solution. Composite Simpson rule.
pub fn renewal_reconstruct(
    p: &VParams,
    t: f64,
    rho0: &DensityMatrix3,
    quad_steps: usize,
) -> Result<DensityMatrix3> {
    p.check()?;
    if t == 0.0 {
        return Ok(*rho0);
    }
    let steps = even_steps(quad_steps)?;
    let h = t / steps as f64;
    let step = segment_propagator(&liouvillian(p), h)?;
    let decomp = eig3(&reduced_operator(p));
    let ground = decomp.modes(&Vec3C::level(1));

    let (mut acc, _) = no_emission_branch(p, t, rho0);
    let mut integral = Mat3C::zeros();
    let mut v = rho0.vectorize();
    for k in 0..=steps {
        let tau = k as f64 * h;
        if k > 0 {
            v = step.apply(&v);
        }
        let rho = DensityMatrix3::unvectorize(&v);
        let rate = p.a2 * rho.population(2) + p.a3 * rho.population(3);
        let phi = ground.at(t - tau);
        integral += phi.outer(&phi) * (rate * simpson_weight(k, steps));
    }
    acc.0 += integral * (h / 3.0);
    Ok(acc)
}

/// State of the atoms that scattered at least one photon during a probe
/// window, from the exact no-emission evolution:
/// `ρ̃₁₂, ρ̃₂₂ = R ∫₀^{τ_p} ρ⁰(τ; |1⟩)₁₂, ₂₂ dτ` with the steady-state
/// emission rate `R = A₃Ω₃²/(A₃² + 2Ω₃²)`, completed to a unit-trace
/// Hermitian matrix on levels 1 and 2.
pub fn rho_tilde_exact(
    p: &VParams,
    s: &PulseSchedule,
    quad_steps: usize,
) -> Result<DensityMatrix3> {
    p.check()?;
    s.check()?;
    let steps = even_steps(quad_steps)?;
    let h = s.tau_p / steps as f64;
    let modes = eig3(&reduced_operator(p)).modes(&Vec3C::level(1));
    let (mut i12, mut i22) = (ZERO, 0.0);
    for k in 0..=steps {
        let phi = modes.at(k as f64 * h);
        let w = simpson_weight(k, steps);
        i12 += phi[0] * phi[1].conj() * w;
        i22 += phi[1].norm_sqr() * w;
    }
    let rate = p.probe_emission_rate() * h / 3.0;
    let (r12, r22): (Complex, f64) = (i12 * rate, i22 * rate);
    Ok(DensityMatrix3::from_raw(Mat3C::from_rows([
        [c(1.0 - r22, 0.0), r12, ZERO],
        [r12.conj(), c(r22, 0.0), ZERO],
        [ZERO, ZERO, ZERO],
    ])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::re;
    use crate::presets::{itano, itano_schedule};
    use crate::pulses::{without_probe, Mode};

    #[test]
    fn zero_duration_leaves_state() {
        let l = liouvillian(&itano());
        let rho = DensityMatrix3::level(3);
        assert_eq!(propagate_segment(&l, 0.0, &rho).unwrap(), rho);
    }

    #[test]
    fn free_decay_of_level_three() {
        let p = VParams::new(0.0, 0.0, 0.0, 2.0).unwrap();
        let t = 0.7;
        let out = propagate_segment(&liouvillian(&p), t, &DensityMatrix3::level(3)).unwrap();
        let e = (-2.0 * t).exp();
        assert!((out.population(3) - e).abs() < 1e-14);
        assert!((out.population(1) - (1.0 - e)).abs() < 1e-14);
    }

    #[test]
    fn stiff_segment_subdivides() {
        let p = VParams::new(0.0, 1e5, 0.0, 1e9).unwrap();
        let l = liouvillian(&p);
        assert!(matches!(
            crate::linalg3::expm9(&l, 10.0),
            Err(Error::NormOverflow { .. })
        ));
        let out = propagate_segment(&l, 10.0, &DensityMatrix3::ground()).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn table_rows_from_exact_propagation() {
        let p = itano();
        for (n, expected) in [(4, 0.36056), (64, 0.00789)] {
            let rho = final_state(&p, &itano_schedule(n, Mode::Simultaneous), false).unwrap();
            assert!(
                (rho.population(2) - expected).abs() < 2e-4,
                "n={n}: {}",
                rho.population(2)
            );
        }
    }

    #[test]
    fn pure_pi_pulse_without_probes() {
        let p = itano();
        let segs = without_probe(&itano_schedule(4, Mode::Simultaneous).segments().unwrap());
        let tr =
            run_segments(&p, &segs, &DensityMatrix3::ground(), &RunOptions::default()).unwrap();
        assert!((tr.last().population(2) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sampled_trace_is_increasing_and_consistent() {
        let p = itano();
        let s = itano_schedule(2, Mode::Simultaneous);
        let opts = RunOptions {
            sample_step: Some(0.01),
            settle: false,
        };
        let tr = run_schedule(&p, &s, &DensityMatrix3::ground(), &opts).unwrap();
        assert_eq!(tr.samples[0].0, 0.0);
        assert!(tr.samples.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(tr.samples.last().unwrap().0, 1.0);
        let direct = final_state(&p, &s, false).unwrap();
        assert!((direct.0 - tr.last().0).max_abs() < 1e-10);
    }

    #[test]
    fn settle_drains_level_three() {
        let p = itano();
        let s = itano_schedule(4, Mode::Simultaneous);
        let before = final_state(&p, &s, false).unwrap();
        let after = final_state(&p, &s, true).unwrap();
        assert!(before.population(3) > 1e-8);
        assert!(after.population(3) < 1e-12);
    }

    #[test]
    fn no_emission_branch_basics() {
        let p = itano().probe_only();
        let rho = DensityMatrix3::level(2);
        let (out, w) = no_emission_branch(&p, 0.0, &rho);
        assert!((out.0 - rho.0).max_abs() < 1e-15 && (w - 1.0).abs() < 1e-15);
        let (_, w) = no_emission_branch(&p, 0.5, &rho);
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renewal_trivial_cases() {
        let dark = VParams::new(0.0, 0.0, 0.0, 1.0).unwrap();
        let g = DensityMatrix3::ground();
        assert_eq!(renewal_reconstruct(&dark, 0.0, &g, 10).unwrap(), g);
        let out = renewal_reconstruct(&dark, 3.0, &g, 10).unwrap();
        assert!((out.0 - g.0).max_abs() < 1e-15);
    }

    #[test]
    fn rho_tilde_without_drive_is_ground() {
        let p = itano().probe_only();
        let rt = rho_tilde_exact(&p, &itano_schedule(4, Mode::Simultaneous), 2000).unwrap();
        assert_eq!(rt.population(2), 0.0);
        assert_eq!(rt.get(1, 2), ZERO);
        assert_eq!(rt.get(1, 1), re(1.0));
    }
}
