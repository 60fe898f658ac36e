//! Timing of `n` probe windows inside one π pulse.
//!
//! The π pulse of length `Tπ` is split into `n` equal intervals. Each interval
//! holds one probe window of length `τ_p`, placed at its end by default, so
//! the last probe finishes exactly at `Tπ`.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Whether the π-pulse laser keeps running while a probe is on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    #[default]
    Simultaneous,
    /// π pulse switched off during every probe window.
    Intermittent,
}

/// Position of the probe window inside each `Tπ/n` interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Placement {
    #[default]
    End,
    Start,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSchedule {
    pub t_pi: f64,
    pub n: usize,
    pub tau_p: f64,
    pub mode: Mode,
    pub placement: Placement,
}

/// Which lasers are on; segments of equal kind and duration share a
/// propagator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentKind {
    Dark,
    Drive,
    Probe,
    ProbeAndDrive,
}

/// A stretch of time with constant laser settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub duration: f64,
    pub probe_on: bool,
    pub pi_on: bool,
    /// Zero-based index of the probe window this segment belongs to.
    pub window: Option<usize>,
}

impl Segment {
    pub fn kind(&self) -> SegmentKind {
        match (self.probe_on, self.pi_on) {
            (false, false) => SegmentKind::Dark,
            (false, true) => SegmentKind::Drive,
            (true, false) => SegmentKind::Probe,
            (true, true) => SegmentKind::ProbeAndDrive,
        }
    }

    /// A laser-free stretch of `duration` starting at `start`.
    pub fn dark(start: f64, duration: f64) -> Segment {
        Segment {
            start,
            end: start + duration,
            duration,
            probe_on: false,
            pi_on: false,
            window: None,
        }
    }
}

impl PulseSchedule {
    pub fn new(t_pi: f64, n: usize, tau_p: f64, mode: Mode) -> Result<Self> {
        let s = PulseSchedule {
            t_pi,
            n,
            tau_p,
            mode,
            placement: Placement::End,
        };
        s.check()?;
        Ok(s)
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.t_pi > 0.0) || !self.t_pi.is_finite() {
            return Err(Error::InvalidSchedule("t_pi must be positive and finite"));
        }
        if self.n == 0 {
            return Err(Error::InvalidSchedule("n must be at least 1"));
        }
        if !(self.tau_p > 0.0) || !self.tau_p.is_finite() {
            return Err(Error::InvalidSchedule("tau_p must be positive and finite"));
        }
        if self.tau_p >= self.interval() {
            return Err(Error::InvalidSchedule(
                "tau_p must be shorter than t_pi / n",
            ));
        }
        Ok(())
    }

    /// `Tπ/n`.
    pub fn interval(&self) -> f64 {
        self.t_pi / self.n as f64
    }

    /// `τ_p/Tπ`.
    pub fn tau_ratio(&self) -> f64 {
        self.tau_p / self.t_pi
    }

    /// Boundary `k Tπ/n`, exact at both ends.
    fn boundary(&self, k: usize) -> f64 {
        if k == self.n {
            self.t_pi
        } else {
            k as f64 * self.t_pi / self.n as f64
        }
    }

    /// End time of probe window `k` (zero-based).
    pub fn window_end(&self, k: usize) -> f64 {
        match self.placement {
            Placement::End => self.boundary(k + 1),
            Placement::Start => self.boundary(k) + self.tau_p,
        }
    }

    /// The `2n` constant-parameter segments covering `[0, Tπ]`.
    pub fn segments(&self) -> Result<Vec<Segment>> {
        self.check()?;
        let probe_pi = self.mode == Mode::Simultaneous;
        let mut out = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            let (a, b) = (self.boundary(k), self.boundary(k + 1));
            let split = match self.placement {
                Placement::End => b - self.tau_p,
                Placement::Start => a + self.tau_p,
            };
            let drive = |start: f64, end: f64| Segment {
                start,
                end,
                duration: end - start,
                probe_on: false,
                pi_on: true,
                window: None,
            };
            let probe = |start: f64, end: f64| Segment {
                start,
                end,
                duration: end - start,
                probe_on: true,
                pi_on: probe_pi,
                window: Some(k),
            };
            match self.placement {
                Placement::End => {
                    out.push(drive(a, split));
                    out.push(probe(split, b));
                }
                Placement::Start => {
                    out.push(probe(a, split));
                    out.push(drive(split, b));
                }
            }
        }
        Ok(out)
    }
}

/// The same timing with every probe laser switched off.
pub fn without_probe(segments: &[Segment]) -> Vec<Segment> {
    segments
        .iter()
        .map(|s| Segment {
            probe_on: false,
            ..*s
        })
        .collect()
}
