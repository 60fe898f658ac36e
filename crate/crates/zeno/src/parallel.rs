//! Monte-Carlo ensembles on a rayon pool.
//!
//! Work is split into the fixed chunks of [`zeno_core::trajectories`] and the
//! per-chunk sums are merged in chunk order, so the statistics are identical
//! for every worker count.

use rayon::prelude::*;
use zeno_core::trajectories::{
    chunk_count, stream, EnsembleAccumulator, EnsembleStats, TrajectoryEngine, TrajectoryRecord,
    CHUNK,
};

use crate::error::{CliError, Result};

/// One emission: trajectory index and time.
pub type Event = (u64, f64);

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun {
    pub stats: EnsembleStats,
    /// Every emission in trajectory order, if requested.
    pub events: Option<Vec<Event>>,
}

fn chunk(
    engine: &TrajectoryEngine,
    seed: u64,
    n_traj: u64,
    index: u64,
    keep: bool,
) -> (EnsembleAccumulator, Vec<Event>) {
    let mut acc = EnsembleAccumulator::new(engine.windows());
    let mut rec = TrajectoryRecord::default();
    let mut events = Vec::new();
    let start = index * CHUNK;
    for traj in start..(start + CHUNK).min(n_traj) {
        engine.run_into(&mut stream(seed, traj), &mut rec);
        acc.add(&rec);
        if keep {
            events.extend(rec.emission_times.iter().map(|&t| (traj, t)));
        }
    }
    (acc, events)
}

/// Run `n_traj` trajectories on `workers` threads (all cores if `None`).
pub fn run_ensemble(
    engine: &TrajectoryEngine,
    n_traj: u64,
    seed: u64,
    workers: Option<usize>,
    keep_events: bool,
) -> Result<EnsembleRun> {
    if n_traj == 0 {
        return Err(CliError::config("`n_traj` must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?;
    let parts: Vec<_> = pool.install(|| {
        (0..chunk_count(n_traj))
            .into_par_iter()
            .map(|c| chunk(engine, seed, n_traj, c, keep_events))
            .collect()
    });
    let mut total = EnsembleAccumulator::new(engine.windows());
    let mut events = keep_events.then(Vec::new);
    for (acc, ev) in parts {
        total.merge(&acc);
        if let Some(all) = events.as_mut() {
            all.extend(ev);
        }
    }
    Ok(EnsembleRun {
        stats: total.finish(),
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use zeno_core::presets::{itano, itano_schedule};
    use zeno_core::trajectories::ensemble_with;
    use zeno_core::Mode;

    #[test]
    fn matches_the_sequential_ensemble() {
        let engine =
            TrajectoryEngine::new(&itano(), &itano_schedule(2, Mode::Simultaneous)).unwrap();
        let n = 2 * CHUNK + 5;
        let seq = ensemble_with(&engine, n, 3).unwrap();
        for workers in [1, 3] {
            let par = run_ensemble(&engine, n, 3, Some(workers), true).unwrap();
            assert_eq!(par.stats, seq);
            let events = par.events.unwrap();
            assert!(events.windows(2).all(|w| w[0].0 <= w[1].0));
            assert_eq!(events.len() as f64, seq.mean_emissions * n as f64);
        }
        assert!(run_ensemble(&engine, 0, 3, None, false).is_err());
    }
}
