//! Monte-Carlo quantum jumps.
//!
//! Between emissions a single atom evolves as `e^{-Mt}ψ`; the waiting time to
//! the next photon is drawn by inverting the no-photon probability
//! `P₀(t) = u` for a uniform `u`, and an emission resets the atom to `|1⟩`.
//! Averaging the final conditional states over many atoms reproduces the
//! Bloch solution.
//!
//! Every trajectory draws from its own ChaCha8 stream selected by
//! `(seed, trajectory index)`, and ensembles are accumulated in fixed chunks
//! of [`CHUNK`] trajectories merged in chunk order, so results do not depend
//! on how chunks are distributed over threads.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::density::DensityMatrix3;
use crate::linalg3::{eig3, EigenDecomp3, Mat3C, Modes, Vec3C};
use crate::pulses::{PulseSchedule, Segment, SegmentKind};
use crate::vsystem::{reduced_operator, VParams};
use crate::{Error, Result};

/// Trajectories per deterministic accumulation unit.
pub const CHUNK: u64 = 1024;

/// Points in the lookup table that brackets waiting times after a reset.
const TABLE_POINTS: usize = 4096;

/// Relative time tolerance of the waiting-time solver.
const TIME_TOL: f64 = 1e-12;

/// Uniform draw from the open interval `(0, 1)`.
#[inline]
pub fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// The random stream of trajectory `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `φ(t) = e^{-Mt}ψ` together with the emission rate matrix `M + M†`.
#[derive(Clone, Copy, Debug)]
struct Evolution {
    modes: Modes,
    decay: Mat3C,
}

impl Evolution {
    #[inline]
    fn eval(&self, t: f64) -> (f64, f64) {
        let phi = self.modes.at(t);
        (phi.norm_sqr(), phi.inner(&(self.decay * phi)).re)
    }
}

/// Solve `-ln P₀(t) = target` on `[lo, hi]`, where the left end is below the
/// target and the right end above it: Newton steps in log space, falling
/// back to bisection whenever a step leaves the bracket.
fn solve_waiting_time(
    ev: &Evolution,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    tol: f64,
) -> f64 {
    let mut t = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let (p0, w) = ev.eval(t);
        let g = -p0.ln() - target;
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = if p0 > 0.0 && w > 0.0 {
            t - g * p0 / w
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= tol || hi - lo <= tol {
            return next;
        }
        t = next;
    }
    t
}

/// Time of the first emission from `ψ` under `M`, or `None` if no photon is
/// emitted before `horizon`. `u` is the uniform variate: the emission happens
/// when `P₀(t; ψ)` falls to `u`.
pub fn sample_first_emission(m: &Mat3C, psi: &Vec3C, horizon: f64, u: f64) -> Option<f64> {
    let ev = Evolution {
        modes: eig3(m).modes(psi),
        decay: *m + m.adjoint(),
    };
    let (p_end, _) = ev.eval(horizon);
    if p_end >= u {
        return None;
    }
    Some(solve_waiting_time(
        &ev,
        -u.ln(),
        0.0,
        horizon,
        f64::NAN,
        TIME_TOL * horizon,
    ))
}

/// Spectral data for one segment shape, plus a table of `-ln P₀` after a
/// reset to `|1⟩` that brackets the waiting time before Newton refinement.
#[derive(Clone, Debug)]
struct SegmentModel {
    decomp: EigenDecomp3,
    decay: Mat3C,
    reset: Evolution,
    duration: f64,
    /// Running maximum of `-ln P₀(t; |1⟩)` at `t = k duration / (len − 1)`.
    table: Vec<f64>,
}

impl SegmentModel {
    fn new(m: &Mat3C, duration: f64) -> Self {
        let decomp = eig3(m);
        let decay = *m + m.adjoint();
        let reset = Evolution {
            modes: decomp.modes(&Vec3C::level(1)),
            decay,
        };
        let mut table = Vec::with_capacity(TABLE_POINTS);
        let mut running = 0.0f64;
        for k in 0..TABLE_POINTS {
            let t = duration * k as f64 / (TABLE_POINTS - 1) as f64;
            let y = -reset.eval(t).0.ln();
            running = running.max(if y.is_nan() { f64::INFINITY } else { y });
            table.push(running);
        }
        SegmentModel {
            decomp,
            decay,
            reset,
            duration,
            table,
        }
    }

    fn evolution(&self, psi: &Vec3C) -> Evolution {
        Evolution {
            modes: self.decomp.modes(psi),
            decay: self.decay,
        }
    }

    /// Bracket and first guess for `-ln P₀(t; |1⟩) = target` within
    /// `[0, horizon]`.
    fn bracket(&self, target: f64, horizon: f64) -> (f64, f64, f64) {
        let k = self.table.partition_point(|&y| y < target);
        let step = self.duration / (TABLE_POINTS - 1) as f64;
        if k == 0 || k >= self.table.len() {
            return (0.0, horizon, f64::NAN);
        }
        let (y0, y1) = (self.table[k - 1], self.table[k]);
        let lo = step * (k - 1) as f64;
        let hi = (step * k as f64).min(horizon);
        if lo >= hi {
            return (0.0, horizon, f64::NAN);
        }
        let frac = if y1 > y0 && y1.is_finite() {
            (target - y0) / (y1 - y0)
        } else {
            0.5
        };
        (lo, hi, lo + frac * (hi - lo))
    }
}

/// One simulated atom.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub emission_times: Vec<f64>,
    /// Emissions after the end of window `k − 1` up to the end of window `k`.
    pub photons_per_window: Vec<u32>,
    /// Normalized conditional state at the end of the schedule.
    pub final_state: Vec3C,
    /// `true` if no photon was emitted after the end of window `k − 1` up to
    /// the end of window `k`.
    pub no_emission_flags: Vec<bool>,
}

impl TrajectoryRecord {
    fn reset(&mut self, windows: usize) {
        self.emission_times.clear();
        self.photons_per_window.clear();
        self.photons_per_window.resize(windows, 0);
        self.no_emission_flags.clear();
        self.no_emission_flags.resize(windows, true);
    }
}

/// Everything needed to simulate trajectories for one atom and schedule,
/// precomputed once and shared read-only between workers.
#[derive(Clone, Debug)]
pub struct TrajectoryEngine {
    segments: Vec<Segment>,
    /// Index into `models` for each segment.
    model_of: Vec<usize>,
    models: Vec<SegmentModel>,
    window_ends: Vec<f64>,
    initial: Vec3C,
}

impl TrajectoryEngine {
    /// Engine for the schedule's segments with an atom starting in `|1⟩`.
    pub fn new(p: &VParams, s: &PulseSchedule) -> Result<Self> {
        let segments = s.segments()?;
        let window_ends = (0..s.n).map(|k| s.window_end(k)).collect();
        Self::from_segments(p, segments, window_ends)
    }

    /// Engine for arbitrary segments; `window_ends` must be increasing.
    pub fn from_segments(
        p: &VParams,
        segments: Vec<Segment>,
        window_ends: Vec<f64>,
    ) -> Result<Self> {
        p.check()?;
        if window_ends.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSchedule("window ends must be increasing"));
        }
        let mut index: BTreeMap<(SegmentKind, u64), usize> = BTreeMap::new();
        let mut models = Vec::new();
        let mut model_of = Vec::with_capacity(segments.len());
        for seg in &segments {
            let key = (seg.kind(), seg.duration.to_bits());
            let id = *index.entry(key).or_insert_with(|| {
                let m = reduced_operator(&p.for_segment(seg));
                models.push(SegmentModel::new(&m, seg.duration));
                models.len() - 1
            });
            model_of.push(id);
        }
        Ok(TrajectoryEngine {
            segments,
            model_of,
            models,
            window_ends,
            initial: Vec3C::level(1),
        })
    }

    /// Start every trajectory in the normalized direction of `psi`.
    pub fn with_initial(mut self, psi: &Vec3C) -> Result<Self> {
        self.initial = psi.normalized().ok_or(Error::InvalidParameter {
            name: "initial",
            reason: "initial state must be nonzero and finite",
        })?;
        Ok(self)
    }

    pub fn windows(&self) -> usize {
        self.window_ends.len()
    }

    fn window_of(&self, t: f64) -> Option<usize> {
        let k = self.window_ends.partition_point(|&end| end < t);
        (k < self.window_ends.len()).then_some(k)
    }

    fn record_emission(&self, rec: &mut TrajectoryRecord, t: f64) {
        rec.emission_times.push(t);
        if let Some(k) = self.window_of(t) {
            rec.photons_per_window[k] += 1;
            rec.no_emission_flags[k] = false;
        }
    }

    /// Simulate one atom, drawing uniforms from `rng`.
    pub fn run(&self, rng: &mut impl RngCore) -> TrajectoryRecord {
        let mut rec = TrajectoryRecord::default();
        self.run_into(rng, &mut rec);
        rec
    }

    /// [`Self::run`] reusing the buffers of `rec`.
    pub fn run_into(&self, rng: &mut impl RngCore, rec: &mut TrajectoryRecord) {
        rec.reset(self.windows());
        let mut psi = self.initial;
        for (seg, &id) in self.segments.iter().zip(&self.model_of) {
            if !(seg.duration > 0.0) {
                continue;
            }
            let model = &self.models[id];
            let tol = TIME_TOL * seg.duration;
            // Time already spent in this segment, and whether the atom is in
            // the freshly reset state |1⟩ at that time.
            let mut elapsed = 0.0;
            let mut reset = false;
            loop {
                let horizon = seg.duration - elapsed;
                let fresh;
                let ev = if reset {
                    &model.reset
                } else {
                    fresh = model.evolution(&psi);
                    &fresh
                };
                let u = open_uniform(rng);
                let (p_end, _) = ev.eval(horizon);
                if p_end >= u {
                    let phi = ev.modes.at(horizon);
                    psi = phi.normalized().unwrap_or(psi);
                    break;
                }
                let target = -u.ln();
                let (lo, hi, guess) = if reset {
                    model.bracket(target, horizon)
                } else {
                    (0.0, horizon, f64::NAN)
                };
                let dt = solve_waiting_time(ev, target, lo, hi, guess, tol);
                elapsed += dt;
                self.record_emission(rec, seg.start + elapsed);
                psi = Vec3C::level(1);
                reset = true;
                if elapsed >= seg.duration {
                    break;
                }
            }
        }
        rec.final_state = psi;
    }
}

/// Simulate trajectory `index` of the ensemble seeded by `seed`.
pub fn run_trajectory(engine: &TrajectoryEngine, seed: u64, index: u64) -> TrajectoryRecord {
    engine.run(&mut stream(seed, index))
}

/// Running sums behind [`EnsembleStats`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleAccumulator {
    pub n_traj: u64,
    /// Sums of `ψ_i conj(ψ_j)` (re, im), row-major.
    rho_sum: [[f64; 2]; 9],
    rho_sq_sum: [[f64; 2]; 9],
    no_emission: Vec<u64>,
    photons: Vec<f64>,
    photons_sq: Vec<f64>,
    emissions: u64,
}

impl EnsembleAccumulator {
    pub fn new(windows: usize) -> Self {
        EnsembleAccumulator {
            no_emission: alloc::vec![0; windows],
            photons: alloc::vec![0.0; windows],
            photons_sq: alloc::vec![0.0; windows],
            ..Default::default()
        }
    }

    pub fn add(&mut self, rec: &TrajectoryRecord) {
        self.n_traj += 1;
        let psi = rec.final_state;
        for i in 0..3 {
            for j in 0..3 {
                let z = psi[i] * psi[j].conj();
                let k = 3 * i + j;
                self.rho_sum[k][0] += z.re;
                self.rho_sum[k][1] += z.im;
                self.rho_sq_sum[k][0] += z.re * z.re;
                self.rho_sq_sum[k][1] += z.im * z.im;
            }
        }
        for (k, &quiet) in rec.no_emission_flags.iter().enumerate() {
            self.no_emission[k] += quiet as u64;
            let c = rec.photons_per_window[k] as f64;
            self.photons[k] += c;
            self.photons_sq[k] += c * c;
        }
        self.emissions += rec.emission_times.len() as u64;
    }

    /// Fold `other` into `self`. Merging in a fixed order keeps results
    /// bit-for-bit reproducible.
    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        self.n_traj += other.n_traj;
        for k in 0..9 {
            for c in 0..2 {
                self.rho_sum[k][c] += other.rho_sum[k][c];
                self.rho_sq_sum[k][c] += other.rho_sq_sum[k][c];
            }
        }
        for k in 0..self.no_emission.len() {
            self.no_emission[k] += other.no_emission[k];
            self.photons[k] += other.photons[k];
            self.photons_sq[k] += other.photons_sq[k];
        }
        self.emissions += other.emissions;
    }

    pub fn finish(&self) -> EnsembleStats {
        let n = self.n_traj as f64;
        let se = |sum: f64, sq: f64| -> f64 {
            if self.n_traj < 2 {
                return 0.0;
            }
            let var = ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        };
        let mut rho = Mat3C::zeros();
        let mut rho_se = [[[0.0; 2]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let k = 3 * i + j;
                rho.0[i][j] = crate::linalg3::c(self.rho_sum[k][0] / n, self.rho_sum[k][1] / n);
                rho_se[i][j] = [
                    se(self.rho_sum[k][0], self.rho_sq_sum[k][0]),
                    se(self.rho_sum[k][1], self.rho_sq_sum[k][1]),
                ];
            }
        }
        let beta_hat: Vec<f64> = self.no_emission.iter().map(|&c| c as f64 / n).collect();
        let beta_se = beta_hat
            .iter()
            .map(|&b| {
                if self.n_traj > 0 {
                    (b * (1.0 - b) / n).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        EnsembleStats {
            n_traj: self.n_traj,
            rho_hat: DensityMatrix3::from_raw(rho),
            rho_se,
            beta_hat,
            beta_se,
            photon_mean_per_window: self.photons.iter().map(|&s| s / n).collect(),
            photon_se_per_window: self
                .photons
                .iter()
                .zip(&self.photons_sq)
                .map(|(&s, &q)| se(s, q))
                .collect(),
            mean_emissions: self.emissions as f64 / n,
        }
    }
}

/// Ensemble estimates with their standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub n_traj: u64,
    /// Mean of the final conditional projectors `|ψ⟩⟨ψ|`.
    pub rho_hat: DensityMatrix3,
    /// Standard errors of the real and imaginary parts of `rho_hat`
    /// (zero-based indices).
    pub rho_se: [[[f64; 2]; 3]; 3],
    /// Fraction of atoms without emission attributed to window `k`.
    pub beta_hat: Vec<f64>,
    pub beta_se: Vec<f64>,
    pub photon_mean_per_window: Vec<f64>,
    pub photon_se_per_window: Vec<f64>,
    pub mean_emissions: f64,
}

impl EnsembleStats {
    /// Standard error of the population of level `k` (1-based).
    pub fn population_se(&self, k: usize) -> f64 {
        self.rho_se[k - 1][k - 1][0]
    }

    /// Largest standard error over all real and imaginary parts.
    pub fn max_se(&self) -> f64 {
        self.rho_se
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Number of chunks covering `n_traj` trajectories.
pub fn chunk_count(n_traj: u64) -> u64 {
    n_traj.div_ceil(CHUNK)
}

/// Accumulate chunk `chunk` (trajectories `chunk·CHUNK ..`) of an ensemble of
/// `n_traj`.
pub fn run_chunk(
    engine: &TrajectoryEngine,
    seed: u64,
    n_traj: u64,
    chunk: u64,
) -> EnsembleAccumulator {
    let mut acc = EnsembleAccumulator::new(engine.windows());
    let mut rec = TrajectoryRecord::default();
    let start = chunk * CHUNK;
    let end = (start + CHUNK).min(n_traj);
    for index in start..end {
        engine.run_into(&mut stream(seed, index), &mut rec);
        acc.add(&rec);
    }
    acc
}

/// Sequential ensemble run; any parallel schedule of [`run_chunk`] merged in
/// chunk order gives an identical result.
pub fn ensemble_with(engine: &TrajectoryEngine, n_traj: u64, seed: u64) -> Result<EnsembleStats> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter {
            name: "n_traj",
            reason: "need at least one trajectory",
        });
    }
    let mut total = EnsembleAccumulator::new(engine.windows());
    for chunk in 0..chunk_count(n_traj) {
        total.merge(&run_chunk(engine, seed, n_traj, chunk));
    }
    Ok(total.finish())
}

/// Ensemble of `n_traj` atoms prepared in `|1⟩`.
pub fn ensemble(p: &VParams, s: &PulseSchedule, n_traj: u64, seed: u64) -> Result<EnsembleStats> {
    ensemble_with(&TrajectoryEngine::new(p, s)?, n_traj, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::{re, ZERO};
    use crate::nophoton::p0_state;
    use crate::presets::{itano, itano_schedule};
    use crate::pulses::{without_probe, Mode};
    use crate::vsystem::{pi_pulse_unitary, probe_only_operator};

    #[test]
    fn upper_state_never_emits_under_probe() {
        let m = probe_only_operator(&VParams::new(0.0, 1.0, 0.0, 1.0).unwrap());
        for u in [1e-12, 0.3, 0.999999] {
            assert_eq!(sample_first_emission(&m, &Vec3C::level(2), 30.0, u), None);
        }
    }

    #[test]
    fn waiting_time_inverts_p0() {
        let m = probe_only_operator(&VParams::new(0.0, 1.0, 0.0, 1.0).unwrap());
        let psi = Vec3C::level(1);
        for u in [0.9, 0.5, 0.01, 1e-5] {
            let t = sample_first_emission(&m, &psi, 30.0, u).unwrap();
            assert!(
                (p0_state(&m, t, &psi) - u).abs() < 1e-9 * u.max(1e-3),
                "u={u}"
            );
        }
        let t = sample_first_emission(&m, &psi, 30.0, 1.0 - 1e-12).unwrap();
        assert!(t > 0.0 && t < 1e-3);
    }

    #[test]
    fn no_probe_means_pure_rotation() {
        let p = itano();
        let s = itano_schedule(4, Mode::Simultaneous);
        let segs = without_probe(&s.segments().unwrap());
        let ends = (0..4).map(|k| s.window_end(k)).collect();
        let engine = TrajectoryEngine::from_segments(&p, segs, ends).unwrap();
        let rec = run_trajectory(&engine, 1, 0);
        assert!(rec.emission_times.is_empty());
        let expected = pi_pulse_unitary(&p, 1.0) * Vec3C::level(1);
        assert!((rec.final_state.inner(&expected).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn superposition_collapses_under_a_probe() {
        let p = VParams::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let s = PulseSchedule::new(100.0, 1, 60.0, Mode::Simultaneous).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let engine = TrajectoryEngine::new(&p, &s)
            .unwrap()
            .with_initial(&Vec3C::new(re(r), re(r), ZERO))
            .unwrap();
        for i in 0..50 {
            let rec = run_trajectory(&engine, 9, i);
            let f = rec.final_state;
            if rec.emission_times.is_empty() {
                assert!((f[1].norm() - 1.0).abs() < 1e-6);
            } else {
                assert!(f[1].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn emissions_are_increasing_and_inside_the_pulse() {
        let p = itano();
        let s = itano_schedule(4, Mode::Simultaneous);
        let engine = TrajectoryEngine::new(&p, &s).unwrap();
        let mut total = 0;
        for i in 0..20 {
            let rec = run_trajectory(&engine, 3, i);
            assert!(rec.emission_times.windows(2).all(|w| w[0] < w[1]));
            assert!(rec.emission_times.iter().all(|&t| t > 0.0 && t <= 1.0));
            assert!((rec.final_state.norm() - 1.0).abs() < 1e-12);
            let attributed: u32 = rec.photons_per_window.iter().sum();
            assert_eq!(attributed as usize, rec.emission_times.len());
            total += rec.emission_times.len();
        }
        assert!(total > 0);
    }

    #[test]
    fn chunked_and_sequential_ensembles_agree() {
        let p = itano();
        let s = itano_schedule(2, Mode::Simultaneous);
        let engine = TrajectoryEngine::new(&p, &s).unwrap();
        let n = CHUNK + 17;
        let a = ensemble_with(&engine, n, 5).unwrap();
        let mut acc = EnsembleAccumulator::new(2);
        for i in 0..n {
            acc.add(&run_trajectory(&engine, 5, i));
        }
        // Same trajectories, different summation order.
        let b = acc.finish();
        assert_eq!(a.beta_hat, b.beta_hat);
        assert!((a.rho_hat.0 - b.rho_hat.0).max_abs() < 1e-12);
        assert!(ensemble_with(&engine, 0, 5).is_err());
    }
}
