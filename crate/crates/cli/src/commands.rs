//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rcms_core::decipher::{generate_cipher, mapping_accuracy, run_em, Accuracy, CipherInstance, EmConfig, Method};
use rcms_core::engine::{infer, RcmsConfig};
use rcms_core::model::{CipherModel, NgramLM};
use rcms_core::Label;
use serde::Serialize;

use crate::bench::{run_sweep, summarize, write_csv, write_summary};
use crate::cli::{Cli, Command};
use crate::config::{ExperimentConfig, FileConfig};
use crate::validate::{report, run_suite};
use crate::{CliError, Result};

pub const RUN_FORMAT: &str = "rcms-emrun";
pub const RUN_FORMAT_VERSION: u32 = 1;

pub fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let layered = file.overlay(cli.command.flags());
    match &cli.command {
        Command::TrainLm(_) => train_lm(&layered.resolve(&[Method::Rcms])?),
        Command::GenCipher(_) => gen_cipher(&layered.resolve(&[Method::Rcms])?),
        Command::Decipher(args) => decipher(&layered.resolve(&[Method::Rcms])?, args.dump_trellis.as_deref()),
        Command::Bench(_) => bench(&layered.resolve(&[Method::Rcms])?),
        Command::Compare(_) => compare(&layered.resolve(&[Method::Rcms, Method::Beam, Method::Hybrid])?),
        Command::Validate(_) => validate(&layered.resolve(&[Method::Rcms])?),
    }
}

/// Write to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush().map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
            out.flush().map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn emit_text(path: Option<&Path>, text: &str) -> Result<()> {
    emit(path, |out| {
        out.write_all(text.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| CliError::io("<output>", e))
    })
}

fn train_lm(config: &ExperimentConfig) -> Result<()> {
    let text = config.read_corpus()?;
    let alphabet = config.normalizer().alphabet();
    let lm = NgramLM::fit(
        &text,
        config.order,
        config.smoothing,
        config.discount,
        config.lm_epsilon,
        Some(&alphabet),
    )?;
    emit_text(config.output.as_deref(), &lm.to_json()?)
}

fn gen_cipher(config: &ExperimentConfig) -> Result<()> {
    let [seed] = config.seeds[..] else {
        return Err(CliError::usage("gen-cipher takes a single seed"));
    };
    let text = config.read_corpus()?;
    let instance = generate_cipher(&text, &config.normalizer().alphabet(), config.length, seed)?;
    emit_text(config.output.as_deref(), &instance.to_json()?)
}

/// The structured record `decipher` writes.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub format: &'static str,
    pub format_version: u32,
    pub method: Method,
    pub beam: usize,
    pub iterations: usize,
    pub channel_epsilon: f64,
    pub tolerance: f64,
    pub lm_order: usize,
    pub lm_smoothing: &'static str,
    pub lm_discount: f64,
    pub lm_epsilon: f64,
    pub log_likelihoods: Vec<f64>,
    pub log_priors: Vec<f64>,
    pub final_log_likelihood: f64,
    /// Most likely cipher symbol for each plain symbol, in plain-alphabet
    /// order.
    pub key: String,
    pub decoded: String,
    pub accuracy: Option<Accuracy>,
    pub wall_seconds: f64,
}

fn single<T: Copy>(values: &[T], what: &str) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::usage(format!("decipher takes a single {what}"))),
    }
}

fn decipher(config: &ExperimentConfig, dump: Option<&Path>) -> Result<()> {
    let read = |path: &Option<std::path::PathBuf>, flag: &str| -> Result<String> {
        let path = path.as_ref().ok_or_else(|| CliError::usage(format!("--{flag} is required")))?;
        fs::read_to_string(path).map_err(|e| CliError::io(path, e))
    };
    let instance = CipherInstance::from_json(&read(&config.instance, "instance")?)?;
    let lm = NgramLM::from_json(&read(&config.lm, "lm")?)?;
    let em = EmConfig {
        method: single(&config.methods, "method")?,
        beam: single(&config.beams, "beam width")?,
        iterations: config.iterations,
        tolerance: config.tolerance,
        epsilon: config.epsilon,
        state_cap: config.state_cap,
    };
    let start = Instant::now();
    let run = run_em(&instance, &lm, &em)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let accuracy = match instance.plaintext {
        Some(_) => Some(mapping_accuracy(&run, &instance)?),
        None => None,
    };
    let key = (0..instance.plain_alphabet.len())
        .map(|y| instance.cipher_alphabet[run.channel.argmax(Label::from(y)).index()])
        .collect();
    let record = RunRecord {
        format: RUN_FORMAT,
        format_version: RUN_FORMAT_VERSION,
        method: run.method,
        beam: run.beam,
        iterations: run.iterations(),
        channel_epsilon: em.epsilon,
        tolerance: em.tolerance,
        lm_order: lm.order(),
        lm_smoothing: lm.smoothing().as_str(),
        lm_discount: lm.discount(),
        lm_epsilon: lm.epsilon(),
        log_likelihoods: run.log_likelihoods.clone(),
        log_priors: run.log_priors.clone(),
        final_log_likelihood: run.final_log_likelihood,
        key,
        decoded: lm.decode(&run.decoded),
        accuracy,
        wall_seconds,
    };
    if let Some(path) = dump {
        let model = CipherModel::new(&lm, &run.channel);
        let trellis = infer(&model, &instance.ciphertext, RcmsConfig::new(em.beam))?;
        emit(Some(path), |mut out| Ok(trellis.dump(&model, &mut out)?))?;
    }
    emit_text(config.output.as_deref(), &serde_json::to_string_pretty(&record)?)
}

fn bench(config: &ExperimentConfig) -> Result<()> {
    let rows = run_sweep(config)?;
    emit(config.output.as_deref(), |out| write_csv(&rows, out))
}

fn compare(config: &ExperimentConfig) -> Result<()> {
    let rows = run_sweep(config)?;
    if let Some(path) = &config.output {
        emit(Some(path), |out| write_csv(&rows, out))?;
    }
    emit(None, |out| write_summary(&summarize(&rows), out).map_err(|e| CliError::io("<stdout>", e)))
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    let seed = config.seeds[0];
    let checks = run_suite(config.instances, seed)?;
    let violations = report(&checks, io::stdout().lock()).map_err(|e| CliError::io("<stdout>", e))?;
    if violations > 0 {
        return Err(CliError::Violation(violations));
    }
    Ok(())
}
