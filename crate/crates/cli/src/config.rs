//! Experiment configuration: command-line flags layered over an optional
//! TOML file, layered over built-in defaults.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rcms_core::baselines::DEFAULT_STATE_CAP;
use rcms_core::decipher::{Method, TextNormalizer};
use rcms_core::model::Smoothing;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RCMS_WORKERS";
pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// One configuration layer; every field is optional. The TOML file uses
/// these field names, e.g. `beams = [1, 10, 100]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format_version: Option<u32>,
    pub corpus: Option<PathBuf>,
    pub alphabet: Option<String>,
    pub instance: Option<PathBuf>,
    pub lm: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub order: Option<usize>,
    pub smoothing: Option<Smoothing>,
    pub discount: Option<f64>,
    pub lm_epsilon: Option<f64>,
    pub length: Option<usize>,
    pub beams: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub methods: Option<Vec<Method>>,
    pub iterations: Option<usize>,
    pub epsilon: Option<f64>,
    pub tolerance: Option<f64>,
    pub state_cap: Option<u64>,
    pub workers: Option<usize>,
    pub instances: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: FileConfig = toml::from_str(&text)?;
        if let Some(v) = config.format_version {
            if v != CONFIG_FORMAT_VERSION {
                return Err(CliError::usage(format!(
                    "config format_version {v} is not supported (expected {CONFIG_FORMAT_VERSION})"
                )));
            }
        }
        Ok(config)
    }

    /// `over` wins wherever it sets a field.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FileConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            format_version, corpus, alphabet, instance, lm, output, order, smoothing, discount,
            lm_epsilon, length, beams, seeds, methods, iterations, epsilon, tolerance, state_cap,
            workers, instances
        )
    }

    /// Fill defaults and check every value. `methods` defaults to
    /// `default_methods`.
    pub fn resolve(self, default_methods: &[Method]) -> Result<ExperimentConfig> {
        let workers = match self.workers {
            Some(w) => w,
            None => default_workers()?,
        };
        let config = ExperimentConfig {
            corpus: self.corpus,
            alphabet: self
                .alphabet
                .map(|a| a.chars().collect())
                .unwrap_or_else(|| TextNormalizer::default().whitelist),
            instance: self.instance,
            lm: self.lm,
            output: self.output,
            order: self.order.unwrap_or(2),
            smoothing: self.smoothing.unwrap_or(Smoothing::AbsoluteDiscounting),
            discount: self.discount.unwrap_or(0.25),
            lm_epsilon: self.lm_epsilon.unwrap_or(0.01),
            length: self.length.unwrap_or(5000),
            beams: self.beams.unwrap_or_else(|| vec![100]),
            seeds: self.seeds.unwrap_or_else(|| vec![0]),
            methods: self.methods.unwrap_or_else(|| default_methods.to_vec()),
            iterations: self.iterations.unwrap_or(20),
            epsilon: self.epsilon.unwrap_or(0.01),
            tolerance: self.tolerance.unwrap_or(0.0),
            state_cap: self.state_cap.map_or(DEFAULT_STATE_CAP, u128::from),
            workers,
            instances: self.instances.unwrap_or(20),
        };
        config.check()?;
        Ok(config)
    }
}

fn default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub corpus: Option<PathBuf>,
    /// Letters kept by corpus normalization; space is always kept.
    pub alphabet: Vec<char>,
    pub instance: Option<PathBuf>,
    pub lm: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub order: usize,
    pub smoothing: Smoothing,
    pub discount: f64,
    pub lm_epsilon: f64,
    pub length: usize,
    pub beams: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub iterations: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub state_cap: u128,
    pub workers: usize,
    pub instances: usize,
}

impl ExperimentConfig {
    fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::usage(msg));
        if self.beams.is_empty() || self.beams.contains(&0) {
            return fail("beam widths must be at least 1".into());
        }
        if self.seeds.is_empty() || self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return fail(format!("seeds must be nonempty and distinct, got {:?}", self.seeds));
        }
        if self.methods.is_empty() || self.methods.iter().collect::<HashSet<_>>().len() != self.methods.len() {
            return fail("methods must be nonempty and distinct".into());
        }
        if self.order == 0 || self.length == 0 || self.iterations == 0 || self.workers == 0 {
            return fail("order, length, iterations and workers must be positive".into());
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return fail(format!("discount {} must lie in (0, 1]", self.discount));
        }
        if !(self.lm_epsilon > 0.0 && self.epsilon >= 0.0 && self.tolerance >= 0.0) {
            return fail("lm_epsilon must be positive; epsilon and tolerance non-negative".into());
        }
        if self.alphabet.contains(&' ') {
            return fail("the alphabet lists letters only; space is always kept".into());
        }
        for path in [&self.corpus, &self.instance, &self.lm].into_iter().flatten() {
            fs::metadata(path).map_err(|e| CliError::io(path, e))?;
        }
        Ok(())
    }

    pub fn normalizer(&self) -> TextNormalizer {
        TextNormalizer {
            lowercase: true,
            whitelist: self.alphabet.clone(),
        }
    }

    /// The normalized corpus; ingestion is excluded from any timing.
    pub fn read_corpus(&self) -> Result<Vec<char>> {
        let path = self
            .corpus
            .as_ref()
            .ok_or_else(|| CliError::usage("--corpus is required"))?;
        let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let text = self.normalizer().normalize(&raw);
        if text.is_empty() {
            return Err(CliError::usage(format!(
                "{} has no symbols from the alphabet",
                path.display()
            )));
        }
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: FileConfig = toml::from_str("beams = [1, 2]\norder = 3\nsmoothing = \"laplace\"").unwrap();
        let flags = FileConfig {
            beams: Some(vec![8]),
            ..FileConfig::default()
        };
        let c = file.overlay(flags).resolve(&[Method::Rcms]).unwrap();
        assert_eq!(c.beams, vec![8]);
        assert_eq!(c.order, 3);
        assert_eq!(c.smoothing, Smoothing::Laplace);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let cases = [
            "beams = [0]",
            "seeds = [1, 1]",
            "discount = 1.5",
            "alphabet = \"ab \"",
            "corpus = \"/nonexistent/corpus.txt\"",
        ];
        for case in cases {
            let file: FileConfig = toml::from_str(case).unwrap();
            assert!(file.resolve(&[Method::Rcms]).is_err(), "{case}");
        }
        assert!(toml::from_str::<FileConfig>("beam_width = 3").is_err());
    }
}
