//! Flag definitions. Every experiment flag is optional so that a config
//! file can supply it; see [`crate::config`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rcms_core::decipher::Method;
use rcms_core::model::Smoothing;

use crate::config::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "rcms",
    version,
    about = "Reified context model inference, baselines and decipherment experiments"
)]
pub struct Cli {
    /// TOML config file; flags win on conflict.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an n-gram language model on a corpus and write it as JSON.
    TrainLm(TrainLmArgs),
    /// Encipher a seeded slice of a corpus under a random substitution key.
    GenCipher(GenCipherArgs),
    /// Run EM on a cipher instance and write the run record.
    Decipher(DecipherArgs),
    /// Sweep beam width x method x seed and write one CSV row per cell.
    Bench(SweepArgs),
    /// Run the built-in invariant suite on small random chains.
    Validate(ValidateArgs),
    /// Sweep like `bench` and print a per-method summary table.
    Compare(SweepArgs),
}

fn parse_smoothing(s: &str) -> Result<Smoothing, String> {
    s.parse().map_err(|e: rcms_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: rcms_core::Error| e.to_string())
}

#[derive(Debug, Default, Args)]
pub struct TextArgs {
    /// UTF-8 plain-text corpus.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Letters kept after lowercasing (space is always kept) [default: a-z].
    #[arg(long)]
    pub alphabet: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct LmArgs {
    /// N-gram order [default: 2].
    #[arg(long)]
    pub order: Option<usize>,
    /// absolute-discounting or laplace [default: absolute-discounting].
    #[arg(long, value_parser = parse_smoothing)]
    pub smoothing: Option<Smoothing>,
    /// Absolute discount d [default: 0.25].
    #[arg(long)]
    pub discount: Option<f64>,
    /// Laplace parameter of the language model [default: 0.01].
    #[arg(long)]
    pub lm_epsilon: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct EmArgs {
    /// EM iterations [default: 20].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Laplace parameter of the channel M-step; 0 for maximum likelihood
    /// [default: 0.01].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Relative log-likelihood change that stops EM early; 0 disables
    /// [default: 0].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// State cap of the exact method [default: 65536].
    #[arg(long)]
    pub state_cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    #[command(flatten)]
    pub text: TextArgs,
    #[command(flatten)]
    pub lm: LmArgs,
    /// Output path [default: stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenCipherArgs {
    #[command(flatten)]
    pub text: TextArgs,
    /// Plaintext length [default: 5000].
    #[arg(long)]
    pub length: Option<usize>,
    /// Seed for the slice offset and the key [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecipherArgs {
    /// Cipher instance JSON (from `gen-cipher`).
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    /// Language model JSON (from `train-lm`).
    #[arg(long, value_name = "PATH")]
    pub lm: Option<PathBuf>,
    /// rcms, beam, hybrid or exact [default: rcms].
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Beam width B [default: 100].
    #[arg(long, visible_alias = "B")]
    pub beam: Option<usize>,
    #[command(flatten)]
    pub em: EmArgs,
    /// Output path for the run record [default: stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the RCMS trellis under the final channel as JSON lines.
    #[arg(long, value_name = "PATH")]
    pub dump_trellis: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub text: TextArgs,
    #[command(flatten)]
    pub lm: LmArgs,
    /// Plaintext length per seed [default: 5000].
    #[arg(long)]
    pub length: Option<usize>,
    /// Comma-separated beam widths [default: 100].
    #[arg(long, value_delimiter = ',')]
    pub beams: Option<Vec<usize>>,
    /// Comma-separated seeds [default: 0].
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated methods [default: rcms for bench, rcms,beam,hybrid
    /// for compare].
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,
    #[command(flatten)]
    pub em: EmArgs,
    /// Parallel cells [default: $RCMS_WORKERS, else available cores].
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV output path [default: stdout for bench, none for compare].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Number of random chains [default: 20].
    #[arg(long)]
    pub instances: Option<usize>,
    /// Seed of the suite [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TextArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.corpus = self.corpus.clone();
        c.alphabet = self.alphabet.clone();
    }
}

impl LmArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.order = self.order;
        c.smoothing = self.smoothing;
        c.discount = self.discount;
        c.lm_epsilon = self.lm_epsilon;
    }
}

impl EmArgs {
    fn apply(&self, c: &mut FileConfig) {
        c.iterations = self.iterations;
        c.epsilon = self.epsilon;
        c.tolerance = self.tolerance;
        c.state_cap = self.state_cap;
    }
}

impl Command {
    /// The flags given on the command line, as a config layer.
    pub fn flags(&self) -> FileConfig {
        let mut c = FileConfig::default();
        match self {
            Command::TrainLm(a) => {
                a.text.apply(&mut c);
                a.lm.apply(&mut c);
                c.output = a.output.clone();
            }
            Command::GenCipher(a) => {
                a.text.apply(&mut c);
                c.length = a.length;
                c.seeds = a.seed.map(|s| vec![s]);
                c.output = a.output.clone();
            }
            Command::Decipher(a) => {
                c.instance = a.instance.clone();
                c.lm = a.lm.clone();
                c.methods = a.method.map(|m| vec![m]);
                c.beams = a.beam.map(|b| vec![b]);
                a.em.apply(&mut c);
                c.output = a.output.clone();
            }
            Command::Bench(a) | Command::Compare(a) => {
                a.text.apply(&mut c);
                a.lm.apply(&mut c);
                c.length = a.length;
                c.beams = a.beams.clone();
                c.seeds = a.seeds.clone();
                c.methods = a.methods.clone();
                a.em.apply(&mut c);
                c.workers = a.workers;
                c.output = a.output.clone();
            }
            Command::Validate(a) => {
                c.instances = a.instances;
                c.seeds = a.seed.map(|s| vec![s]);
            }
        }
        c
    }
}
