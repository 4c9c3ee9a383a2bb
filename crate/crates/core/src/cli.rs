//! Command-line front end: `dykaf <subcommand> [options] [key=value ...]`.
//!
//! Exit codes: 0 success, 1 runtime or validator failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{
    emit, run_fisher_sim, run_hessian_gap, run_prop_validators, run_selftest, run_train,
    selftest_records, write_records, ExperimentConfig, ExperimentRecord, OutputFormat, FISHER_SIM,
    HESSIAN_GAP, PROPS, SELFTEST, TRAIN,
};

pub const DATA_DIR_ENV: &str = "DYKAF_DATA_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "dykaf",
    version,
    about = "Kronecker-factored preconditioner experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kronecker estimates of a dense EMA Fisher matrix.
    FisherSim(CommonArgs),
    /// Distance between the softmax Hessian and the SOAP / DyKAF Fisher estimates.
    HessianGap(CommonArgs),
    /// Property validators.
    Props(CommonArgs),
    /// Train softmax regression with the configured optimizer.
    Train(CommonArgs),
    /// Linear algebra and Kronecker oracle identities.
    Selftest(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub num_seeds: Option<u64>,
    /// Threads across seeds.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Dataset search root; overrides the DYKAF_DATA_DIR environment variable.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Fail instead of substituting synthetic data when the dataset is missing.
    #[arg(long)]
    pub no_fallback: bool,
    /// Configuration overrides, e.g. `hyperparams.learning_rate=0.01`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FisherSim(_) => FISHER_SIM,
            Command::HessianGap(_) => HESSIAN_GAP,
            Command::Props(_) => PROPS,
            Command::Train(_) => TRAIN,
            Command::Selftest(_) => SELFTEST,
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::FisherSim(a)
            | Command::HessianGap(a)
            | Command::Props(a)
            | Command::Train(a)
            | Command::Selftest(a) => a,
        }
    }
}

impl CommonArgs {
    /// Flags as overrides, ahead of the positional ones.
    pub fn override_list(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(s) = self.seed {
            out.push(format!("seed={s}"));
        }
        if let Some(s) = self.steps {
            out.push(format!("steps={s}"));
        }
        if let Some(s) = self.num_seeds {
            out.push(format!("num_seeds={s}"));
        }
        if let Some(j) = self.jobs {
            out.push(format!("jobs={j}"));
        }
        if self.no_fallback {
            out.push("synth_fallback=false".into());
        }
        out.extend(self.overrides.iter().cloned());
        out
    }

    /// Defaults < environment data dir < config file < flags and overrides.
    pub fn resolve(&self, env_data_dir: Option<PathBuf>) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref(), &self.override_list())?;
        if cfg.data_dir.is_none() {
            cfg.data_dir = env_data_dir;
        }
        if let Some(dir) = &self.data_dir {
            cfg.data_dir = Some(dir.clone());
        }
        Ok(cfg)
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let env_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
    dispatch(&cli.command, env_dir, out, err)
}

pub fn dispatch(
    command: &Command,
    env_data_dir: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let args = command.args();
    let cfg = match args.resolve(env_data_dir) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if matches!(e, Error::Config(_)) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            };
        }
    };
    match execute(command, &cfg, out) {
        Ok(records) => {
            if let Err(e) = write_output(command, &records, args, out) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_FAILURE;
            }
            let failed: Vec<&ExperimentRecord> =
                records.iter().filter(|r| r.is_failure()).collect();
            for r in &failed {
                let _ = writeln!(
                    err,
                    "FAILED: {} {} case {} (seed {})",
                    r.experiment, r.method, r.x, r.seed
                );
            }
            if failed.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Config(_)) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn execute(
    command: &Command,
    cfg: &ExperimentConfig,
    out: &mut dyn Write,
) -> Result<Vec<ExperimentRecord>, Error> {
    match command {
        Command::FisherSim(_) => run_fisher_sim(cfg),
        Command::HessianGap(_) => run_hessian_gap(cfg),
        Command::Props(_) => run_prop_validators(cfg),
        Command::Train(_) => run_train(cfg),
        Command::Selftest(_) => {
            cfg.check_experiment(SELFTEST)?;
            let mut records = Vec::new();
            for seed in cfg.seeds() {
                let checks = run_selftest(seed)?;
                for c in &checks {
                    writeln!(out, "{}", c.line()).map_err(|e| Error::io("<stdout>", e))?;
                }
                let passed = checks.iter().filter(|c| c.passed()).count();
                writeln!(
                    out,
                    "selftest seed {seed}: {passed}/{} checks passed",
                    checks.len()
                )
                .map_err(|e| Error::io("<stdout>", e))?;
                records.extend(selftest_records(seed, &checks));
            }
            Ok(records)
        }
    }
}

/// Records go to `--output` when given, else to stdout. The self-test has
/// already printed its report, so its records are only written to a file.
fn write_output(
    command: &Command,
    records: &[ExperimentRecord],
    args: &CommonArgs,
    out: &mut dyn Write,
) -> Result<(), Error> {
    match &args.output {
        Some(path) => emit(records, path, args.format),
        None if matches!(command, Command::Selftest(_)) => Ok(()),
        None => write_records(records, out, args.format, Path::new("<stdout>")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("dykaf").chain(args.iter().copied()))
    }

    #[test]
    fn flags_become_overrides() {
        let cli = parse(&["fisher-sim", "--seed", "7", "--steps", "200"]).unwrap();
        assert_eq!(cli.command.name(), FISHER_SIM);
        assert_eq!(
            cli.command.args().override_list(),
            vec!["seed=7", "steps=200"]
        );
        let cfg = cli.command.args().resolve(None).unwrap();
        assert_eq!((cfg.seed, cfg.steps), (7, Some(200)));
    }

    #[test]
    fn usage_errors() {
        assert!(parse(&["bogus"]).is_err());
        assert!(parse(&[]).is_err());
        assert!(parse(&["props", "--unknown"]).is_err());
        assert!(parse(&["props", "--seed", "x"]).is_err());
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["dykaf", "bogus"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(
            run(["dykaf", "props", "nonsense=1"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert!(String::from_utf8_lossy(&err).contains("nonsense"));
        assert_eq!(run(["dykaf", "--help"], &mut out, &mut err), EXIT_OK);
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 1}"#).unwrap();
        let cli = parse(&["props", "--config", path.to_str().unwrap(), "--seed", "9"]).unwrap();
        assert_eq!(cli.command.args().resolve(None).unwrap().seed, 9);
    }

    #[test]
    fn data_dir_precedence() {
        let env = Some(PathBuf::from("/env"));
        let cli = parse(&["hessian-gap"]).unwrap();
        assert_eq!(
            cli.command.args().resolve(env.clone()).unwrap().data_dir,
            env
        );
        let cli = parse(&["hessian-gap", "--data-dir", "/flag"]).unwrap();
        assert_eq!(
            cli.command.args().resolve(env).unwrap().data_dir,
            Some(PathBuf::from("/flag"))
        );
    }
}
