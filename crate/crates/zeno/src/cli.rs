//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zeno_core::analytic::ProbeCorrection;
use zeno_core::bloch::{self, RunOptions};
use zeno_core::linalg3::{Complex, Vec3C};
use zeno_core::nophoton::{TABLE1_COUNTS, TABLE1_RATIOS};
use zeno_core::trajectories::{EnsembleStats, TrajectoryEngine};
use zeno_core::vsystem::{epsilons, validate_regime, RegimeReport};
use zeno_core::{DensityMatrix3, Mode, Placement};

use crate::config::{CommonArgs, RunConfig};
use crate::error::{CliError, Result, EXIT_CONFIG};
use crate::parallel::run_ensemble;
use crate::reference::TABLE2_NS;
use crate::tables;

#[derive(Debug, Parser)]
#[command(
    name = "zeno",
    version,
    about = "Quantum Zeno effect in a driven three-level V system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolved parameters, measurement epsilons and regime checks.
    Params(ParamsArgs),
    /// Largest non-reduced norm after N probe photons (CSV).
    Table1(Table1Args),
    /// Level-2 population at the end of the π pulse for several n (CSV).
    Table2(Table2Args),
    /// Density-matrix time series through one schedule (CSV).
    Evolve(EvolveArgs),
    /// Monte-Carlo quantum-jump ensemble (JSON summary).
    Trajectories(TrajectoriesArgs),
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Omega3/A3 values (default: the published grid).
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Photon numbers N >= 2 (default: the published grid).
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct Table2Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Add a Monte-Carlo column with --n-traj trajectories per row.
    #[arg(long)]
    pub mc: bool,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Time between samples inside segments (default: t_pi / 1000).
    #[arg(long = "sample-step")]
    pub sample_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrajectoriesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write every emission as CSV (trajectory_id, emission_time).
    #[arg(long, value_name = "PATH")]
    pub events: Option<PathBuf>,
    /// Real amplitudes of levels 1, 2, 3 to start from (normalized; default |1⟩).
    #[arg(long, value_delimiter = ',', value_name = "A1,A2,A3")]
    pub initial: Option<Vec<f64>>,
}

/// Parse `args`, run the command and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Params(a) => cmd_params(&RunConfig::from_args(&a.common)?),
        Command::Table1(a) => cmd_table1(&RunConfig::from_args(&a.common)?, a),
        Command::Table2(a) => cmd_table2(&RunConfig::from_args(&a.common)?, a.mc),
        Command::Evolve(a) => cmd_evolve(&RunConfig::from_args(&a.common)?, a.sample_step),
        Command::Trajectories(a) => cmd_trajectories(
            &RunConfig::from_args(&a.common)?,
            a.events.as_deref(),
            a.initial.as_deref(),
        ),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn fixed(x: f64, precision: usize) -> String {
    format!("{x:.precision$}")
}

fn sci(x: f64, precision: usize) -> String {
    format!("{x:.precision$e}")
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Simultaneous => "simultaneous",
        Mode::Intermittent => "intermittent",
    }
}

fn placement_name(p: Placement) -> &'static str {
    match p {
        Placement::End => "end",
        Placement::Start => "start",
    }
}

fn warn_regime(report: &RegimeReport) {
    for c in report.checks.iter().filter(|c| !c.satisfied()) {
        eprintln!(
            "warning: regime check {} failed: {} = {:.3e}",
            c.name, c.description, c.value
        );
    }
}

#[derive(Serialize)]
struct CheckOut {
    name: &'static str,
    description: &'static str,
    value: f64,
    grade: &'static str,
}

#[derive(Serialize)]
struct ParamsOut {
    preset: Option<String>,
    omega2: f64,
    omega3: f64,
    a2: f64,
    a3: f64,
    t_pi: f64,
    n: usize,
    tau_p: f64,
    mode: &'static str,
    placement: &'static str,
    eps_p: Option<f64>,
    eps_r: Option<f64>,
    eps_d: Option<f64>,
    regime: Vec<CheckOut>,
    all_satisfied: bool,
}

/// Exit status 2 when a regime check fails.
pub fn cmd_params(cfg: &RunConfig) -> Result<i32> {
    let n = cfg.single_n()?;
    let s = cfg.schedule(n)?;
    let p = cfg.params;
    let eps = epsilons(&p).ok();
    let report = validate_regime(&p, &s);
    let out = ParamsOut {
        preset: cfg.preset.clone(),
        omega2: p.omega2,
        omega3: p.omega3,
        a2: p.a2,
        a3: p.a3,
        t_pi: s.t_pi,
        n,
        tau_p: s.tau_p,
        mode: mode_name(s.mode),
        placement: placement_name(s.placement),
        eps_p: eps.map(|e| e.eps_p),
        eps_r: eps.map(|e| e.eps_r),
        eps_d: eps.map(|e| e.eps_d),
        regime: report
            .checks
            .iter()
            .map(|c| CheckOut {
                name: c.name,
                description: c.description,
                value: c.value,
                grade: c.grade.as_str(),
            })
            .collect(),
        all_satisfied: report.all_satisfied(),
    };
    let mut w = sink(cfg.out.as_deref())?;
    if cfg.json {
        serde_json::to_writer_pretty(&mut w, &out)?;
        writeln!(w)?;
    } else {
        let pr = cfg.precision;
        let opt = |x: Option<f64>| x.map_or_else(|| "undefined".to_owned(), |v| sci(v, pr));
        writeln!(w, "preset     {}", out.preset.as_deref().unwrap_or("none"))?;
        for (k, v) in [
            ("omega2", p.omega2),
            ("omega3", p.omega3),
            ("a2", p.a2),
            ("a3", p.a3),
            ("t_pi", s.t_pi),
        ] {
            writeln!(w, "{k:<10} {}", sci(v, pr))?;
        }
        writeln!(w, "n          {n}")?;
        writeln!(w, "tau_p      {}", sci(s.tau_p, pr))?;
        writeln!(w, "mode       {}", out.mode)?;
        writeln!(w, "placement  {}", out.placement)?;
        writeln!(w)?;
        writeln!(w, "eps_p      {}", opt(out.eps_p))?;
        writeln!(w, "eps_r      {}", opt(out.eps_r))?;
        writeln!(w, "eps_d      {}", opt(out.eps_d))?;
        writeln!(w)?;
        writeln!(
            w,
            "{:<12} {:<14} {:<8} condition",
            "check", "ratio", "grade"
        )?;
        for c in &report.checks {
            writeln!(
                w,
                "{:<12} {:<14} {:<8} {} << 1",
                c.name,
                sci(c.value, pr),
                c.grade.as_str(),
                c.description
            )?;
        }
    }
    w.flush()?;
    Ok(if report.all_satisfied() {
        0
    } else {
        EXIT_CONFIG
    })
}

pub fn cmd_table1(cfg: &RunConfig, args: &Table1Args) -> Result<i32> {
    let ratios = args
        .ratios
        .clone()
        .unwrap_or_else(|| TABLE1_RATIOS.to_vec());
    let counts = args
        .counts
        .clone()
        .unwrap_or_else(|| TABLE1_COUNTS.to_vec());
    let rows = tables::table1(&ratios, &counts)?;
    let mut w = sink(cfg.out.as_deref())?;
    if cfg.json {
        serde_json::to_writer_pretty(&mut w, &rows)?;
        writeln!(w)?;
    } else {
        let pr = cfg.precision;
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record([
            "ratio",
            "n_photons",
            "max_norm",
            "argmax_alpha1",
            "bound",
            "published",
        ])?;
        for r in &rows {
            csv.write_record([
                r.ratio.to_string(),
                r.n_photons.to_string(),
                sci(r.max_norm, pr),
                fixed(r.argmax_alpha1, pr),
                sci(r.bound, pr),
                crate::reference::table1_value(r.ratio, r.n_photons)
                    .map(|p| p.0.to_owned())
                    .unwrap_or_default(),
            ])?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(0)
}

pub fn cmd_table2(cfg: &RunConfig, monte_carlo: bool) -> Result<i32> {
    let mut cfg = cfg.clone();
    if !cfg.ns_given {
        cfg.ns = TABLE2_NS.to_vec();
    }
    for &n in &cfg.ns {
        warn_regime(&validate_regime(&cfg.params, &cfg.schedule(n)?));
    }
    let started = Instant::now();
    let rows = tables::table2(&cfg, monte_carlo)?;
    eprintln!(
        "table2: {} rows in {:.3} s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );
    let mut w = sink(cfg.out.as_deref())?;
    if cfg.json {
        serde_json::to_writer_pretty(&mut w, &rows)?;
        writeln!(w)?;
    } else {
        let pr = cfg.precision;
        let mut csv = csv::Writer::from_writer(&mut w);
        let mut header = vec![
            "n",
            "ideal",
            "modified",
            "quantum_jump",
            "bloch",
            "bloch_rho33",
        ];
        if monte_carlo {
            header.extend(["monte_carlo", "monte_carlo_se"]);
        }
        header.push("observed");
        csv.write_record(&header)?;
        for r in &rows {
            let mut rec = vec![
                r.n.to_string(),
                fixed(r.ideal, pr),
                fixed(r.modified, pr),
                fixed(r.quantum_jump, pr),
                fixed(r.bloch, pr),
                sci(r.bloch_rho33, pr.saturating_sub(1).max(1)),
            ];
            if monte_carlo {
                rec.push(r.monte_carlo.map(|v| fixed(v, pr)).unwrap_or_default());
                rec.push(r.monte_carlo_se.map(|v| sci(v, 2)).unwrap_or_default());
            }
            rec.push(r.observed.map(|v| format!("{v:.3}")).unwrap_or_default());
            csv.write_record(&rec)?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(0)
}

/// Column order of the time-series CSV.
pub const EVOLVE_HEADER: [&str; 10] = [
    "t", "rho11", "rho22", "rho33", "re_rho12", "im_rho12", "re_rho13", "im_rho13", "re_rho23",
    "im_rho23",
];

pub fn cmd_evolve(cfg: &RunConfig, sample_step: Option<f64>) -> Result<i32> {
    let n = cfg.single_n()?;
    let s = cfg.schedule(n)?;
    warn_regime(&validate_regime(&cfg.params, &s));
    let opts = RunOptions {
        sample_step: Some(sample_step.unwrap_or(cfg.t_pi / 1000.0)),
        settle: cfg.settle,
    };
    let trace = bloch::run_schedule(&cfg.params, &s, &DensityMatrix3::ground(), &opts)?;
    let pr = cfg.precision;
    let mut w = sink(cfg.out.as_deref())?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(EVOLVE_HEADER)?;
    for (t, rho) in &trace.samples {
        let (r12, r13, r23) = (rho.get(1, 2), rho.get(1, 3), rho.get(2, 3));
        let mut rec = vec![t.to_string()];
        rec.extend(
            [
                rho.population(1),
                rho.population(2),
                rho.population(3),
                r12.re,
                r12.im,
                r13.re,
                r13.im,
                r23.re,
                r23.im,
            ]
            .map(|x| fixed(x, pr)),
        );
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    Ok(0)
}

#[derive(Serialize)]
struct Comparison {
    bloch_rho22: f64,
    z_bloch: Option<f64>,
    quantum_jump_rho22: Option<f64>,
    z_quantum_jump: Option<f64>,
    beta_analytic: Option<Vec<f64>>,
    z_beta: Option<Vec<Option<f64>>>,
}

#[derive(Serialize)]
struct TrajectoryRun {
    n: usize,
    rho_hat: [[[f64; 2]; 3]; 3],
    rho_se: [[[f64; 2]; 3]; 3],
    rho22: f64,
    rho22_se: f64,
    beta_hat: Vec<f64>,
    beta_se: Vec<f64>,
    photon_mean_per_window: Vec<f64>,
    photon_se_per_window: Vec<f64>,
    mean_emissions: f64,
    comparison: Comparison,
}

#[derive(Serialize)]
struct TrajectorySummary {
    preset: Option<String>,
    omega2: f64,
    omega3: f64,
    a2: f64,
    a3: f64,
    t_pi: f64,
    tau_p: f64,
    mode: &'static str,
    placement: &'static str,
    initial: Option<[f64; 3]>,
    n_traj: u64,
    seed: u64,
    runs: Vec<TrajectoryRun>,
}

fn z(value: f64, reference: f64, se: f64) -> Option<f64> {
    (se > 0.0).then(|| (value - reference) / se)
}

fn summarize(
    cfg: &RunConfig,
    n: usize,
    initial: Option<&Vec3C>,
    st: &EnsembleStats,
) -> Result<TrajectoryRun> {
    let s = cfg.schedule(n)?;
    let bloch_rho22 = match initial {
        Some(psi) => {
            let rho0 = DensityMatrix3::pure(psi)?;
            bloch::run_schedule(&cfg.params, &s, &rho0, &RunOptions::default())?
                .last()
                .population(2)
        }
        None => bloch::final_state(&cfg.params, &s, false)?.population(2),
    };
    let rho22 = st.rho_hat.population(2);
    let rho22_se = st.population_se(2);
    // The closed forms start every atom in the ground state.
    let analytic = match initial {
        Some(_) => None,
        None => ProbeCorrection::from_params(&cfg.params, &s).ok(),
    };
    let jump = analytic.map(|pc| pc.rho22_jump(n));
    let beta = analytic.map(|pc| pc.beta_sequence(n));
    let z_beta = beta.as_ref().map(|b| {
        b.iter()
            .zip(st.beta_hat.iter().zip(&st.beta_se))
            .map(|(&want, (&got, &se))| z(got, want, se))
            .collect()
    });
    let m = st.rho_hat.matrix();
    Ok(TrajectoryRun {
        n,
        rho_hat: m.0.map(|row| row.map(|z| [z.re, z.im])),
        rho_se: st.rho_se,
        rho22,
        rho22_se,
        beta_hat: st.beta_hat.clone(),
        beta_se: st.beta_se.clone(),
        photon_mean_per_window: st.photon_mean_per_window.clone(),
        photon_se_per_window: st.photon_se_per_window.clone(),
        mean_emissions: st.mean_emissions,
        comparison: Comparison {
            bloch_rho22,
            z_bloch: z(rho22, bloch_rho22, rho22_se),
            quantum_jump_rho22: jump,
            z_quantum_jump: jump.and_then(|j| z(rho22, j, rho22_se)),
            beta_analytic: beta,
            z_beta,
        },
    })
}

fn initial_state(amplitudes: &[f64]) -> Result<Vec3C> {
    match amplitudes {
        &[a1, a2, a3] => Vec3C([a1, a2, a3].map(|a| Complex::new(a, 0.0)))
            .normalized()
            .ok_or_else(|| CliError::config("`initial` must be nonzero and finite")),
        _ => Err(CliError::config("`initial` takes three amplitudes")),
    }
}

pub fn cmd_trajectories(
    cfg: &RunConfig,
    events: Option<&Path>,
    initial: Option<&[f64]>,
) -> Result<i32> {
    if cfg.n_traj == 0 {
        return Err(CliError::config("`n_traj` must be at least 1"));
    }
    let initial = initial.map(initial_state).transpose()?;
    let mut runs = Vec::with_capacity(cfg.ns.len());
    let mut event_log = events
        .map(|path| -> Result<_> {
            let mut csv = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
            csv.write_record(["n", "trajectory_id", "emission_time"])?;
            Ok(csv)
        })
        .transpose()?;
    for &n in &cfg.ns {
        let s = cfg.schedule(n)?;
        warn_regime(&validate_regime(&cfg.params, &s));
        let mut engine = TrajectoryEngine::new(&cfg.params, &s)?;
        if let Some(psi) = &initial {
            engine = engine.with_initial(psi)?;
        }
        let started = Instant::now();
        let run = run_ensemble(
            &engine,
            cfg.n_traj,
            cfg.seed,
            cfg.workers,
            event_log.is_some(),
        )?;
        eprintln!(
            "trajectories: n = {n}, {} atoms in {:.3} s",
            cfg.n_traj,
            started.elapsed().as_secs_f64()
        );
        if let (Some(csv), Some(ev)) = (event_log.as_mut(), &run.events) {
            for (id, t) in ev {
                csv.write_record([n.to_string(), id.to_string(), t.to_string()])?;
            }
        }
        runs.push(summarize(cfg, n, initial.as_ref(), &run.stats)?);
    }
    if let Some(mut csv) = event_log {
        csv.flush()?;
    }
    let p = cfg.params;
    let summary = TrajectorySummary {
        preset: cfg.preset.clone(),
        omega2: p.omega2,
        omega3: p.omega3,
        a2: p.a2,
        a3: p.a3,
        t_pi: cfg.t_pi,
        tau_p: cfg.tau_p,
        mode: mode_name(cfg.mode),
        placement: placement_name(cfg.placement),
        initial: initial.map(|psi| psi.0.map(|a| a.re)),
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        runs,
    };
    let mut w = sink(cfg.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(0)
}
