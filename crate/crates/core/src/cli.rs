//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for usage and configuration errors and 2
//! when a run fails.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channel::ChannelKind;
use crate::error::Error;
use crate::harness::config::ExperimentConfig;
use crate::harness::robustness::{robustness_probe, ChannelVariant};
use crate::harness::sweep::{self, baseline_csv, curves_csv, estimator_for, plot_script};
use crate::harness::{gradcheck, overlap, train, widths};
use crate::nncore::{read_checkpoint, write_checkpoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_SNAPSHOT_FILE: &str = "config.toml";

#[derive(Debug, Parser)]
#[command(name = "aecomm", version, about = "Autoencoder link simulator")]
pub struct Cli {
    /// TOML config file, or `default` for built-in defaults.
    #[arg(long, global = true, default_value = "default")]
    pub config: String,
    /// Replaces the configured seeds with SEED, SEED+1, ...
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overlap between the training and test noise distributions.
    Overlap,
    /// Train autoencoders at every training Eb/N0 and sweep their BLER.
    Sweep,
    /// Train one autoencoder and write its checkpoint and loss history.
    Train {
        /// Training Eb/N0 in dB.
        #[arg(long, default_value_t = 7.0, allow_negative_numbers = true)]
        ebn0_db: f64,
    },
    /// Hamming(7,4) and uncoded BPSK curves with closed-form values.
    Baseline,
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 10)]
        cases: usize,
    },
    /// Evaluate an AWGN-trained autoencoder under correlated noise and fading.
    Robustness {
        /// Probe this checkpoint instead of training a model.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Training and test loss against decoder hidden width.
    WidthSweep,
}

/// CLI failure with its exit status.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Line (1-based) of byte offset `pos` in `text`.
fn line_of(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].matches('\n').count() + 1
}

/// Line where `section.key` is assigned, if it appears in `text`.
fn key_line(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if let Some((k, _)) = t.split_once('=') {
            let k = k.trim();
            if (current == section && k == key) || (current.is_empty() && k == dotted) {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Parses TOML config text. Errors carry the line of the offending key.
pub fn parse_config(text: &str, origin: &str) -> CliResult<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| format!(" line {}", line_of(text, s.start)))
            .unwrap_or_default();
        CliError::Invalid(format!("{origin}{line}: {}", e.message()))
    })?;
    config.check().map_err(|e| {
        let line = key_line(text, &e.key)
            .map(|l| format!(" line {l}"))
            .unwrap_or_default();
        CliError::Invalid(format!(
            "{origin}{line}: invalid `{}`: {}",
            e.key, e.message
        ))
    })?;
    Ok(config)
}

/// Loads a config file; `default` gives the built-in defaults.
pub fn load_config(path: &str) -> CliResult<ExperimentConfig> {
    if path == "default" {
        return Ok(ExperimentConfig::default());
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {path}: {e}")))?;
    parse_config(&text, path)
}

pub fn config_to_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("config serializes")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seeds: Vec<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// SHA-256 of each output file, keyed by file name.
    pub outputs: std::collections::BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn runtime(context: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    fs::write(&tmp, bytes).map_err(runtime(&format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, &dest).map_err(runtime(&format!("renaming to {}", dest.display())))
}

/// Collects outputs of one run and writes them with a manifest.
struct Run<'a> {
    out: &'a Path,
    command: &'static str,
    config: &'a ExperimentConfig,
    started: u64,
    outputs: Vec<(String, Vec<u8>)>,
    quiet: bool,
}

impl<'a> Run<'a> {
    fn new(
        out: &'a Path,
        command: &'static str,
        config: &'a ExperimentConfig,
        quiet: bool,
    ) -> Self {
        Run {
            out,
            command,
            config,
            started: unix_now(),
            outputs: Vec::new(),
            quiet,
        }
    }

    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("[{}] {msg}", self.command);
        }
    }

    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.outputs.push((name.to_string(), bytes.into()));
    }

    fn finish(mut self) -> CliResult<()> {
        self.add(CONFIG_SNAPSHOT_FILE, config_to_toml(self.config));
        fs::create_dir_all(self.out)
            .map_err(runtime(&format!("creating {}", self.out.display())))?;
        let mut digests = std::collections::BTreeMap::new();
        for (name, bytes) in &self.outputs {
            write_atomic(self.out, name, bytes)?;
            digests.insert(name.clone(), sha256_hex(bytes));
            if !self.quiet {
                println!("wrote {}", self.out.join(name).display());
            }
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            seeds: self.config.seeds.values.clone(),
            started_unix: self.started,
            finished_unix: unix_now(),
            outputs: digests,
            config: self.config.clone(),
        };
        let text =
            toml::to_string(&manifest).map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
        write_atomic(self.out, MANIFEST_FILE, text.as_bytes())
    }
}

fn execute(cli: &Cli, config: &ExperimentConfig) -> CliResult<()> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Overlap => {
            let mut run = Run::new(out, "overlap", config, cli.quiet);
            let o = &config.overlap;
            let rows =
                overlap::overlap_table(o.train_ebn0_db, &o.test_ebn0_db, config.channel.rate)?;
            run.add("overlap.csv", overlap::overlap_csv(&rows));
            run.finish()
        }
        Command::Sweep => {
            let mut run = Run::new(out, "sweep", config, cli.quiet);
            let result = sweep::run_sweep_with_progress(config, &mut |m| run.progress(m))?;
            run.add("sweep.csv", result.to_csv());
            run.add(
                "plot_sweep.py",
                plot_script("sweep.csv", "BLER vs test Eb/N0"),
            );
            run.finish()
        }
        Command::Train { ebn0_db } => {
            if !ebn0_db.is_finite() {
                return Err(CliError::Invalid(format!(
                    "--ebn0-db must be finite, got {ebn0_db}"
                )));
            }
            let mut run = Run::new(out, "train", config, cli.quiet);
            let seed = config.top_seed();
            run.progress(&format!("training at {ebn0_db} dB, seed {seed}"));
            let (params, history) = train::train_autoencoder(config, *ebn0_db, seed)?;
            let mut ckpt = Vec::new();
            write_checkpoint(&params, &mut ckpt)?;
            run.add("model.ckpt", ckpt);
            run.add("history.csv", history.to_csv());
            run.finish()
        }
        Command::Baseline => {
            let mut run = Run::new(out, "baseline", config, cli.quiet);
            run.progress("evaluating baselines");
            let estimator = estimator_for(config)?;
            let curves = sweep::baseline_curves(config, &estimator)?;
            run.add("baseline.csv", baseline_csv(&curves, config.channel.rate.k));
            run.add(
                "plot_baseline.py",
                plot_script("baseline.csv", "Baseline BLER"),
            );
            run.finish()
        }
        Command::Gradcheck { cases } => {
            let report = gradcheck::gradient_check(*cases, config.top_seed())?;
            for (i, c) in report.cases.iter().enumerate() {
                if !cli.quiet {
                    eprintln!(
                        "case {i}: M={} n={} hidden={} {} {:.2} dB batch={} params={} max_rel_error={:.3e}",
                        c.message_count,
                        c.channel_uses,
                        c.decoder_hidden,
                        c.channel,
                        c.ebn0_db,
                        c.batch_size,
                        c.parameters,
                        c.max_rel_error
                    );
                }
            }
            println!("max_rel_error {:e}", report.max_rel_error());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Runtime(format!(
                    "gradient check failed: {:e} >= {:e}",
                    report.max_rel_error(),
                    gradcheck::TOLERANCE
                )))
            }
        }
        Command::Robustness { checkpoint } => {
            let mut run = Run::new(out, "robustness", config, cli.quiet);
            let train_db = config.robustness.train_ebn0_db;
            let params = match checkpoint {
                Some(path) => {
                    let file = fs::File::open(path).map_err(|e| {
                        CliError::Invalid(format!("cannot open {}: {e}", path.display()))
                    })?;
                    read_checkpoint(std::io::BufReader::new(file))?
                }
                None => {
                    let mut awgn = config.clone();
                    awgn.channel.kind = ChannelKind::Awgn;
                    run.progress(&format!("training AWGN model at {train_db} dB"));
                    train::train_autoencoder(&awgn, train_db, config.top_seed())?.0
                }
            };
            let variants = ChannelVariant::standard_set(&config.robustness.rho);
            run.progress("evaluating channel variants");
            let estimator = estimator_for(config)?;
            let curves = robustness_probe(
                Arc::new(params),
                train_db,
                &variants,
                &config.sweep.test_grid(),
                &estimator,
            )?;
            run.add("robustness.csv", curves_csv(&curves));
            run.add(
                "plot_robustness.py",
                plot_script("robustness.csv", "AWGN-trained autoencoder"),
            );
            run.finish()
        }
        Command::WidthSweep => {
            let mut run = Run::new(out, "width-sweep", config, cli.quiet);
            let rows = widths::width_sweep(config, config.top_seed(), &mut |m| run.progress(m))?;
            run.add("widths.csv", widths::width_csv(&rows));
            run.finish()
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let result = load_config(&cli.config).and_then(|mut config| {
        if let Some(seed) = cli.seed {
            config.override_seed(seed);
        }
        execute(&cli, &config)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(parse_config("", "x").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(parse_config(&config_to_toml(&c), "x").unwrap(), c);
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_config("[channel]\nkind = \"awgn\"\nbogus = 3\n", "cfg").unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INVALID);
        assert!(err.message().contains("line 3"), "{}", err.message());
        assert!(err.message().contains("bogus"), "{}", err.message());
    }

    #[test]
    fn type_mismatch_names_line() {
        let err = parse_config("[training]\n\nsteps = \"many\"\n", "cfg").unwrap_err();
        assert!(err.message().contains("line 3"), "{}", err.message());
    }

    #[test]
    fn invalid_rate_names_key_and_line() {
        let err =
            parse_config("[seeds]\nvalues = [1]\n\n[channel]\nrate = 0\n", "cfg").unwrap_err();
        assert!(
            err.message().contains("`channel.rate`"),
            "{}",
            err.message()
        );
        assert!(err.message().contains("line 5"), "{}", err.message());
    }

    #[test]
    fn key_lookup() {
        let text = "[sweep]\nmax_blocks = 0\n[channel]\n rate = \"1/2\"\n";
        assert_eq!(key_line(text, "channel.rate"), Some(4));
        assert_eq!(key_line(text, "sweep.max_blocks"), Some(2));
        assert_eq!(key_line(text, "seeds.values"), None);
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "aecomm",
            "train",
            "--ebn0-db",
            "-4",
            "--seed",
            "3",
            "--quiet",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(3));
        assert!(cli.quiet);
        assert!(matches!(cli.command, Command::Train { ebn0_db } if ebn0_db == -4.0));
        assert!(Cli::try_parse_from(["aecomm", "frobnicate"]).is_err());
        assert!(Cli::try_parse_from(["aecomm", "overlap", "--no-such-flag"]).is_err());
    }
}
