//! Experiment harness behind the `csimeta` binary.
//!
//! Every subcommand is a plain function over an [`ExperimentConfig`] so tests
//! can drive the pipeline without spawning processes.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use csimeta::augment::{
    augment_baseline, augment_dataset, covariance_diagnostic, estimate_stats, BaselineParams,
    Scheme,
};
use csimeta::channel::{channel_to_csi, simulate_ue};
use csimeta::config::ExperimentConfig;
use csimeta::dataset::{
    group_runs, read_channel_file, read_csi_file, write_channel_file, write_csi_file,
    DatasetHeader, DatasetWriter,
};
use csimeta::metaenv::{audit_task, TaskGenerator};
use csimeta::model::{read_checkpoint, write_checkpoint, ModelParams};
use csimeta::numerics::Purpose;
use csimeta::train::{meta_train, split_dataset, target_retrain, ConvergenceLog};
use csimeta::{CsiEigen, Error, Result, RngStream, TimeChannel};

#[derive(Debug, Parser)]
#[command(
    name = "csimeta",
    version,
    about = "Knowledge-driven meta-learning for CSI feedback"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise the meta task environment.
    GenMeta(Common),
    /// Simulate seed channels (and an optional test set) into a directory.
    GenTarget(Common),
    /// Augment the seed data with the configured or given scheme.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Reptile meta-training; writes a checkpoint and `<out>.csv`.
    MetaTrain {
        #[command(flatten)]
        common: Common,
        /// Checkpoint path or `random`.
        #[arg(long, default_value = "random")]
        init: String,
    },
    /// Target retraining with periodic evaluation; writes a checkpoint and `<out>.csv`.
    RetrainEval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "random")]
        init: String,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::GenMeta(c) | Command::GenTarget(c) => c,
            Command::Augment { common, .. }
            | Command::MetaTrain { common, .. }
            | Command::RetrainEval { common, .. } => common,
        }
    }
}

/// Loads the config, resolves relative paths against its directory and
/// applies `--seed`.
pub fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    let base = common.config.parent().unwrap_or(Path::new(""));
    let p = &mut cfg.paths;
    for path in [
        &mut p.meta_env,
        &mut p.target_channels,
        &mut p.target_csi,
        &mut p.train_set,
        &mut p.eval_set,
    ]
    .into_iter()
    .flatten()
    {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command and returns its printable summary.
pub fn run(command: &Command) -> Result<String> {
    let cfg = load_config(command.common())?;
    let out = &command.common().out;
    Ok(match command {
        Command::GenMeta(_) => gen_meta(&cfg, out)?.to_string(),
        Command::GenTarget(_) => gen_target(&cfg, out)?.to_string(),
        Command::Augment { scheme, .. } => {
            let scheme = match scheme {
                Some(name) => name.parse()?,
                None => cfg.augment.scheme,
            };
            augment(&cfg, scheme, out)?.to_string()
        }
        Command::MetaTrain { init, .. } => {
            train_report(meta_train_cmd(&cfg, &Init::parse(init), out)?)
        }
        Command::RetrainEval { init, .. } => {
            train_report(retrain_eval(&cfg, &Init::parse(init), out)?)
        }
    })
}

/// Exit status for an error: 1 for bad input, 2 for I/O and file problems.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        1
    } else {
        2
    }
}

fn required<'a>(path: &'a Option<PathBuf>, field: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::Config {
        field: field.to_string(),
        reason: "required by this command".into(),
    })
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Sibling path with the extension replaced by `csv`.
pub fn log_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenMetaReport {
    pub tasks: usize,
    pub samples: usize,
    pub violations: Vec<String>,
}

impl fmt::Display for GenMetaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "meta environment: {} tasks, {} samples, {} structure violations",
            self.tasks,
            self.samples,
            self.violations.len()
        )?;
        for v in self.violations.iter().take(10) {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

const TASK_CHUNK: u32 = 64;

/// Streams the meta environment to `out` in chunks of tasks.
pub fn gen_meta(cfg: &ExperimentConfig, out: &Path) -> Result<GenMetaReport> {
    let sys = &cfg.system;
    let gen = TaskGenerator::new(sys, &cfg.meta_env)?;
    create_parent(out)?;
    let header = DatasetHeader::csi(sys.n_t, sys.n_sb, cfg.seed, cfg.to_toml());
    let mut w = DatasetWriter::new(BufWriter::new(fs::File::create(out)?), header)?;
    let total = cfg.meta_env.tasks as u32;
    let mut report = GenMetaReport {
        tasks: 0,
        samples: 0,
        violations: Vec::new(),
    };
    let mut start = 0;
    while start < total {
        let end = (start + TASK_CHUNK).min(total);
        for task in gen.tasks(start..end)? {
            report
                .violations
                .extend(audit_task(sys, &cfg.meta_env, &task));
            for s in &task.samples {
                w.write_csi(s)?;
            }
            report.samples += task.samples.len();
            report.tasks += 1;
        }
        start = end;
    }
    w.finish()?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenTargetReport {
    pub channels: usize,
    pub test_samples: usize,
}

impl fmt::Display for GenTargetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "target: {} seed channels and CSI records, {} test CSI records",
            self.channels, self.test_samples
        )
    }
}

pub const CHANNELS_FILE: &str = "channels.csids";
pub const CSI_FILE: &str = "csi.csids";
pub const TEST_FILE: &str = "test-csi.csids";

fn simulate_ues(
    cfg: &ExperimentConfig,
    ues: std::ops::Range<u32>,
    n_slot: usize,
) -> Vec<TimeChannel> {
    use rayon::prelude::*;
    let scen = cfg.scenario();
    let per_ue: Vec<Vec<TimeChannel>> = ues
        .into_par_iter()
        .map(|ue| {
            let mut rng = RngStream::keyed(cfg.seed, Purpose::UeGeometry, &[ue as u64]);
            simulate_ue(&cfg.system, &scen, &mut rng, n_slot, ue)
        })
        .collect();
    per_ue.into_iter().flatten().collect()
}

/// Simulates the seed UEs into `dir/channels.csids` and `dir/csi.csids`, plus
/// `dir/test-csi.csids` for held-out UEs when configured.
pub fn gen_target(cfg: &ExperimentConfig, dir: &Path) -> Result<GenTargetReport> {
    fs::create_dir_all(dir)?;
    let sys = &cfg.system;
    let t = &cfg.target;
    let channels = simulate_ues(cfg, 0..t.n_ue as u32, t.n_slot);
    let csi = channels
        .iter()
        .map(|h| channel_to_csi(sys, h))
        .collect::<Result<Vec<_>>>()?;
    let echo = cfg.to_toml();
    write_channel_file(
        &dir.join(CHANNELS_FILE),
        DatasetHeader::time_channel(sys, cfg.seed, echo.clone()),
        &channels,
    )?;
    write_csi_file(
        &dir.join(CSI_FILE),
        DatasetHeader::csi(sys.n_t, sys.n_sb, cfg.seed, echo.clone()),
        &csi,
    )?;
    let mut test_samples = 0;
    if t.n_test_ue > 0 {
        let first = t.n_ue as u32;
        let test = simulate_ues(cfg, first..first + t.n_test_ue as u32, t.n_test_slot);
        let test_csi = test
            .iter()
            .map(|h| channel_to_csi(sys, h))
            .collect::<Result<Vec<_>>>()?;
        write_csi_file(
            &dir.join(TEST_FILE),
            DatasetHeader::csi(sys.n_t, sys.n_sb, cfg.seed, echo),
            &test_csi,
        )?;
        test_samples = test_csi.len();
    }
    Ok(GenTargetReport {
        channels: channels.len(),
        test_samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentReport {
    pub scheme: Scheme,
    pub samples: usize,
    /// Worst per-delay covariance and power mismatch over the diagnosed UEs.
    pub covariance: Option<(f64, f64)>,
}

impl fmt::Display for AugmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "augment ({}): {} samples",
            self.scheme.name(),
            self.samples
        )?;
        if let Some((cov, pow)) = self.covariance {
            write!(
                f,
                "\ncovariance match: worst relative error {cov:.4}, worst power error {pow:.4}"
            )?;
        }
        Ok(())
    }
}

/// Worst covariance and power mismatch of the augmentation diagnostic.
pub type CovarianceMatch = (f64, f64);

const DIAGNOSTIC_UES: usize = 5;
const DIAGNOSTIC_DRAWS: usize = 20_000;

/// Builds the augmented CSI set in memory.
pub fn augment_samples(
    cfg: &ExperimentConfig,
    scheme: Scheme,
) -> Result<(Vec<CsiEigen>, Option<CovarianceMatch>)> {
    let sys = &cfg.system;
    let seeds_csi = || -> Result<Vec<CsiEigen>> {
        Ok(read_csi_file(required(&cfg.paths.target_csi, "paths.target_csi")?)?.1)
    };
    let mut covariance = None;
    let mut out = match scheme {
        Scheme::None => Vec::new(),
        Scheme::Proposed => {
            let (_, channels) = read_channel_file(required(
                &cfg.paths.target_channels,
                "paths.target_channels",
            )?)?;
            let per_ue: Vec<Vec<TimeChannel>> = group_runs(channels, |h| h.ue_id)
                .into_iter()
                .map(|(_, v)| v)
                .collect();
            let mut worst = (0.0f64, 0.0f64);
            for (k, seeds) in per_ue.iter().take(DIAGNOSTIC_UES).enumerate() {
                let stats = estimate_stats(sys, seeds)?;
                let mut rng = RngStream::keyed(cfg.seed, Purpose::Augment, &[u64::MAX, k as u64]);
                let rep = covariance_diagnostic(sys, &stats, DIAGNOSTIC_DRAWS, &mut rng)?;
                worst = (
                    worst.0.max(rep.worst_covariance()),
                    worst.1.max(rep.worst_power()),
                );
            }
            covariance = Some(worst);
            augment_dataset(sys, &cfg.augment, &per_ue, cfg.seed)?
        }
        baseline => {
            let params = BaselineParams {
                count: cfg.augment.n_aug,
                noise_snr_db: cfg.augment.noise_snr_db,
            };
            let mut all = Vec::new();
            for (ue, samples) in group_runs(seeds_csi()?, |s| s.ue_id) {
                let mut rng = RngStream::keyed(cfg.seed, Purpose::Baseline, &[ue as u64]);
                all.extend(augment_baseline(baseline, &samples, &mut rng, &params)?);
            }
            all
        }
    };
    if cfg.augment.include_seeds || scheme == Scheme::None {
        let mut with_seeds = seeds_csi()?;
        with_seeds.append(&mut out);
        out = with_seeds;
    }
    Ok((out, covariance))
}

pub fn augment(cfg: &ExperimentConfig, scheme: Scheme, out: &Path) -> Result<AugmentReport> {
    let (samples, covariance) = augment_samples(cfg, scheme)?;
    create_parent(out)?;
    let sys = &cfg.system;
    write_csi_file(
        out,
        DatasetHeader::csi(sys.n_t, sys.n_sb, cfg.seed, cfg.to_toml()),
        &samples,
    )?;
    Ok(AugmentReport {
        scheme,
        samples: samples.len(),
        covariance,
    })
}

/// Initial parameters: a checkpoint file or a fresh draw from the config seed.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Random,
    Checkpoint(PathBuf),
}

impl Init {
    pub fn parse(s: &str) -> Self {
        if s == "random" {
            Init::Random
        } else {
            Init::Checkpoint(PathBuf::from(s))
        }
    }

    pub fn load(&self, cfg: &ExperimentConfig) -> Result<ModelParams> {
        match self {
            Init::Random => Ok(ModelParams::init(&cfg.model, cfg.seed)),
            Init::Checkpoint(path) => {
                let (mcfg, params) =
                    read_checkpoint(std::io::BufReader::new(fs::File::open(path)?))?;
                if mcfg != cfg.model {
                    return Err(Error::Config {
                        field: "model".into(),
                        reason: format!(
                            "checkpoint {} was trained with a different model config",
                            path.display()
                        ),
                    });
                }
                Ok(params)
            }
        }
    }
}

pub struct TrainOutput {
    pub params: ModelParams,
    pub log: ConvergenceLog,
    pub checkpoint: PathBuf,
    pub csv: PathBuf,
}

fn train_report(o: TrainOutput) -> String {
    let last = o.log.entries.last().expect("logs always hold step 0");
    format!(
        "{} steps, final eval SGCS {:.4}, best {:.4}\ncheckpoint: {}\nlog: {}",
        last.step,
        last.eval_sgcs,
        last.best_sgcs,
        o.checkpoint.display(),
        o.csv.display()
    )
}

fn save(
    cfg: &ExperimentConfig,
    params: ModelParams,
    log: ConvergenceLog,
    out: &Path,
) -> Result<TrainOutput> {
    create_parent(out)?;
    write_checkpoint(BufWriter::new(fs::File::create(out)?), &cfg.model, &params)?;
    let csv = log_path(out);
    log.write_csv(BufWriter::new(fs::File::create(&csv)?))?;
    Ok(TrainOutput {
        params,
        log,
        checkpoint: out.to_path_buf(),
        csv,
    })
}

/// Splits meta samples into per-task groups; the last
/// `train.meta_holdout_tasks` tasks become the held-out evaluation set.
pub fn meta_tasks(
    cfg: &ExperimentConfig,
    samples: Vec<CsiEigen>,
) -> Result<(Vec<Vec<CsiEigen>>, Vec<CsiEigen>)> {
    let mut tasks: Vec<Vec<CsiEigen>> = group_runs(samples, |s| s.task_id)
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let holdout = cfg.train.meta_holdout_tasks;
    if tasks.len() <= holdout {
        return Err(Error::Config {
            field: "train.meta_holdout_tasks".into(),
            reason: format!("environment has only {} tasks", tasks.len()),
        });
    }
    let held: Vec<CsiEigen> = tasks
        .split_off(tasks.len() - holdout)
        .into_iter()
        .flatten()
        .collect();
    Ok((tasks, held))
}

pub fn meta_train_cmd(cfg: &ExperimentConfig, init: &Init, out: &Path) -> Result<TrainOutput> {
    let (_, samples) = read_csi_file(required(&cfg.paths.meta_env, "paths.meta_env")?)?;
    let (tasks, held) = meta_tasks(cfg, samples)?;
    let init = init.load(cfg)?;
    // An empty hold-out scores the first task instead.
    let held = if held.is_empty() {
        tasks[0].clone()
    } else {
        held
    };
    let (params, log) = meta_train(&init, &cfg.model, &tasks, &held, &cfg.train)?;
    save(cfg, params, log, out)
}

pub fn retrain_eval(cfg: &ExperimentConfig, init: &Init, out: &Path) -> Result<TrainOutput> {
    let (_, train) = read_csi_file(required(&cfg.paths.train_set, "paths.train_set")?)?;
    let (train, eval) = match &cfg.paths.eval_set {
        Some(path) => (train, read_csi_file(path)?.1),
        None => split_dataset(&train, cfg.target.eval_fraction, cfg.seed),
    };
    let init = init.load(cfg)?;
    let (params, log) = target_retrain(&init, &cfg.model, &train, &eval, &cfg.train)?;
    save(cfg, params, log, out)
}
