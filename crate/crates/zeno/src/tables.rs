//! Rows of the two published tables, computed from the model.

use rayon::prelude::*;
use serde::Serialize;
use zeno_core::analytic::{rho22_ideal, ProbeCorrection};
use zeno_core::bloch;
use zeno_core::nophoton::{self, Table1Cell};
use zeno_core::trajectories::TrajectoryEngine;

use crate::config::RunConfig;
use crate::error::Result;
use crate::parallel::run_ensemble;
use crate::reference;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Line {
    pub ratio: f64,
    pub n_photons: u32,
    pub max_norm: f64,
    pub argmax_alpha1: f64,
    pub bound: f64,
    pub published: Option<f64>,
}

impl From<Table1Cell> for Table1Line {
    fn from(c: Table1Cell) -> Self {
        Table1Line {
            ratio: c.ratio,
            n_photons: c.n_photons,
            max_norm: c.max_norm,
            argmax_alpha1: c.argmax_alpha1,
            bound: c.bound,
            published: reference::table1_value(c.ratio, c.n_photons).map(|p| p.value()),
        }
    }
}

pub fn table1(ratios: &[f64], counts: &[u32]) -> Result<Vec<Table1Line>> {
    Ok(nophoton::table1(ratios, counts)?
        .into_iter()
        .map(Into::into)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Line {
    pub n: usize,
    pub ideal: f64,
    pub modified: f64,
    pub quantum_jump: f64,
    pub bloch: f64,
    /// Level-3 population left at readout.
    pub bloch_rho33: f64,
    pub monte_carlo: Option<f64>,
    pub monte_carlo_se: Option<f64>,
    /// Measured value, only for the canonical parameters.
    pub observed: Option<f64>,
}

/// Level-2 populations at the end of the π pulse for every `n` in the
/// config. Rows are computed in parallel; Monte-Carlo columns are filled
/// when `monte_carlo` is set.
pub fn table2(cfg: &RunConfig, monte_carlo: bool) -> Result<Vec<Table2Line>> {
    let p = cfg.params;
    let canonical = cfg.is_canonical();
    let mut rows = cfg
        .ns
        .par_iter()
        .map(|&n| -> Result<Table2Line> {
            let s = cfg.schedule(n)?;
            let pc = ProbeCorrection::from_params(&p, &s)?;
            let rho = bloch::final_state(&p, &s, cfg.settle)?;
            Ok(Table2Line {
                n,
                ideal: rho22_ideal(n),
                modified: pc.rho22_modified(n),
                quantum_jump: pc.rho22_jump(n),
                bloch: rho.population(2),
                bloch_rho33: rho.population(3),
                monte_carlo: None,
                monte_carlo_se: None,
                observed: canonical
                    .then(|| reference::table2_row(n).map(|r| r.observed))
                    .flatten(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if monte_carlo {
        for row in &mut rows {
            let engine = TrajectoryEngine::new(&p, &cfg.schedule(row.n)?)?;
            let run = run_ensemble(&engine, cfg.n_traj, cfg.seed, cfg.workers, false)?;
            row.monte_carlo = Some(run.stats.rho_hat.population(2));
            row.monte_carlo_se = Some(run.stats.population_se(2));
        }
    }
    Ok(rows)
}
