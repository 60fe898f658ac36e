//! Run configuration: a JSON file and command-line flags with the same keys,
//! flags taking precedence, resolved against a named parameter preset.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use zeno_core::presets::{self, ITANO_DEFAULT_N, ITANO_TAU_RATIO};
use zeno_core::{Mode, Placement, PulseSchedule, VParams};

use crate::error::{CliError, Result};

/// Presets that leave every parameter to the user.
const CUSTOM: &[&str] = &["none", "custom"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Simultaneous,
    Intermittent,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Simultaneous => Mode::Simultaneous,
            ModeArg::Intermittent => Mode::Intermittent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementArg {
    End,
    Start,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Placement {
        match p {
            PlacementArg::End => Placement::End,
            PlacementArg::Start => Placement::Start,
        }
    }
}

/// One probe count or several.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    Many(Vec<usize>),
}

impl Counts {
    fn into_vec(self) -> Vec<usize> {
        match self {
            Counts::One(n) => vec![n],
            Counts::Many(v) => v,
        }
    }
}

/// Keys accepted in a config file. Names match the long flags, with `_`
/// or `-` as separator.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub omega2: Option<f64>,
    pub omega3: Option<f64>,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    #[serde(alias = "t-pi")]
    pub t_pi: Option<f64>,
    pub n: Option<Counts>,
    #[serde(alias = "tau-p")]
    pub tau_p: Option<f64>,
    pub mode: Option<ModeArg>,
    pub placement: Option<PlacementArg>,
    #[serde(alias = "n-traj")]
    pub n_traj: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub json: Option<bool>,
    pub precision: Option<usize>,
    pub settle: Option<bool>,
    pub workers: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
            path: path.to_owned(),
            source,
        })
    }
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON file with any of the keys below; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named parameter set (`itano`), or `none` to give every value explicitly.
    #[arg(long)]
    pub preset: Option<String>,
    /// Rabi frequency of the π-pulse laser.
    #[arg(long)]
    pub omega2: Option<f64>,
    /// Rabi frequency of the probe laser.
    #[arg(long)]
    pub omega3: Option<f64>,
    /// Decay rate of level 2.
    #[arg(long)]
    pub a2: Option<f64>,
    /// Decay rate of level 3.
    #[arg(long)]
    pub a3: Option<f64>,
    /// Length of the π pulse.
    #[arg(long = "t-pi")]
    pub t_pi: Option<f64>,
    /// Number of probe pulses; a comma-separated list where several make sense.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Length of each probe pulse.
    #[arg(long = "tau-p")]
    pub tau_p: Option<f64>,
    /// Whether the π pulse keeps running during the probes.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Probe at the end (default) or the start of each interval.
    #[arg(long, value_enum)]
    pub placement: Option<PlacementArg>,
    /// Number of Monte-Carlo trajectories.
    #[arg(long = "n-traj")]
    pub n_traj: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long)]
    pub json: bool,
    /// Decimal places in text and CSV output.
    #[arg(long)]
    pub precision: Option<usize>,
    /// Let level 3 decay for 20 lifetimes after the pulse before reading out.
    #[arg(long)]
    pub settle: bool,
    /// Worker threads for Monte-Carlo runs (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Preset the parameters started from, if any.
    pub preset: Option<String>,
    pub params: VParams,
    pub t_pi: f64,
    pub ns: Vec<usize>,
    /// Whether `ns` came from the user rather than the default.
    pub ns_given: bool,
    pub tau_p: f64,
    pub mode: Mode,
    pub placement: Placement,
    pub n_traj: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub precision: usize,
    pub settle: bool,
    pub workers: Option<usize>,
}

pub const DEFAULT_N_TRAJ: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PRECISION: usize = 5;

impl RunConfig {
    /// Merge the config file named in `args` (if any) under the flags.
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Self::resolve(args, file)
    }

    pub fn resolve(args: &CommonArgs, file: ConfigFile) -> Result<Self> {
        let preset_name = args
            .preset
            .clone()
            .or(file.preset)
            .unwrap_or_else(|| "itano".to_owned());
        let base = if CUSTOM.contains(&preset_name.as_str()) {
            None
        } else {
            Some(presets::by_name(&preset_name).ok_or_else(|| {
                CliError::config(format!(
                    "unknown preset `{preset_name}` (known: {}, or none)",
                    presets::NAMES.join(", ")
                ))
            })?)
        };

        let field = |flag: Option<f64>, file: Option<f64>, preset: Option<f64>, name: &str| {
            flag.or(file)
                .or(preset)
                .ok_or_else(|| CliError::config(format!("`{name}` is required without a preset")))
        };
        let params = VParams::new(
            field(args.omega2, file.omega2, base.map(|p| p.omega2), "omega2")?,
            field(args.omega3, file.omega3, base.map(|p| p.omega3), "omega3")?,
            field(args.a2, file.a2, base.map(|p| p.a2), "a2")?,
            field(args.a3, file.a3, base.map(|p| p.a3), "a3")?,
        )?;
        let t_pi = args.t_pi.or(file.t_pi).unwrap_or(1.0);
        let tau_p = args
            .tau_p
            .or(file.tau_p)
            .or(base.map(|_| ITANO_TAU_RATIO * t_pi))
            .ok_or_else(|| CliError::config("`tau_p` is required without a preset"))?;
        let given = args.n.clone().or(file.n.map(Counts::into_vec));
        let ns_given = given.is_some();
        let ns = given.unwrap_or_else(|| vec![ITANO_DEFAULT_N]);
        if ns.is_empty() || ns.contains(&0) {
            return Err(CliError::config("`n` must list positive probe counts"));
        }

        let cfg = RunConfig {
            preset: base.map(|_| preset_name),
            params,
            t_pi,
            ns,
            ns_given,
            tau_p,
            mode: args
                .mode
                .or(file.mode)
                .map_or(Mode::Simultaneous, Into::into),
            placement: args
                .placement
                .or(file.placement)
                .map_or(Placement::End, Into::into),
            n_traj: args.n_traj.or(file.n_traj).unwrap_or(DEFAULT_N_TRAJ),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: args.out.clone().or(file.out),
            json: args.json || file.json.unwrap_or(false),
            precision: args
                .precision
                .or(file.precision)
                .unwrap_or(DEFAULT_PRECISION),
            settle: args.settle || file.settle.unwrap_or(false),
            workers: args.workers.or(file.workers),
        };
        for &n in &cfg.ns {
            cfg.schedule(n)?;
        }
        if cfg.workers == Some(0) {
            return Err(CliError::config("`workers` must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn schedule(&self, n: usize) -> Result<PulseSchedule> {
        let s =
            PulseSchedule::new(self.t_pi, n, self.tau_p, self.mode)?.with_placement(self.placement);
        Ok(s)
    }

    /// The single probe count of commands that run one schedule.
    pub fn single_n(&self) -> Result<usize> {
        match self.ns.as_slice() {
            [n] => Ok(*n),
            _ => Err(CliError::config("this command takes a single `n`")),
        }
    }

    /// True for the untouched canonical parameters and timing, the only
    /// setting the published table values refer to.
    pub fn is_canonical(&self) -> bool {
        self.preset.as_deref() == Some("itano")
            && self.params == presets::itano()
            && self.t_pi == 1.0
            && self.tau_p == ITANO_TAU_RATIO
            && self.placement == Placement::End
            && self.mode == Mode::Simultaneous
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_to_the_canonical_preset() {
        let cfg = RunConfig::resolve(&CommonArgs::default(), ConfigFile::default()).unwrap();
        assert!(cfg.is_canonical());
        assert_eq!(cfg.ns, vec![4]);
        assert_eq!(cfg.precision, 5);
    }

    #[test]
    fn flags_override_the_file() {
        let file: ConfigFile = serde_json::from_str(
            r#"{"omega3": 2.0, "t-pi": 3.0, "n": [1, 2], "mode": "intermittent", "seed": 9}"#,
        )
        .unwrap();
        let args = CommonArgs {
            omega3: Some(5.0),
            seed: Some(4),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args, file).unwrap();
        assert_eq!(cfg.params.omega3, 5.0);
        assert_eq!(cfg.t_pi, 3.0);
        assert_eq!(cfg.ns, vec![1, 2]);
        assert_eq!(cfg.mode, Mode::Intermittent);
        assert_eq!(cfg.seed, 4);
        assert!(!cfg.is_canonical());
    }

    #[test]
    fn custom_parameters_must_be_complete() {
        let args = CommonArgs {
            preset: Some("none".into()),
            omega2: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(&args, ConfigFile::default()),
            Err(CliError::Config(_))
        ));
        let unknown = CommonArgs {
            preset: Some("bogus".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&unknown, ConfigFile::default()).is_err());
        assert!(serde_json::from_str::<ConfigFile>(r#"{"omega9": 1}"#).is_err());
    }
}
