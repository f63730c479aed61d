//! The sweep harness behind `bench` and `compare`.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use rcms_core::decipher::{generate_cipher, mapping_accuracy, run_em, CipherInstance, EmConfig, Method};
use rcms_core::model::NgramLM;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::{CliError, Result};

pub const BENCH_FORMAT: &str = "rcms-bench";
pub const BENCH_FORMAT_VERSION: u32 = 1;

/// CSV header, in column order.
pub const BENCH_COLUMNS: [&str; 20] = [
    "format",
    "format_version",
    "method",
    "beam",
    "seed",
    "length",
    "lm_order",
    "lm_smoothing",
    "lm_discount",
    "lm_epsilon",
    "channel_epsilon",
    "iterations",
    "log_z",
    "ll_first",
    "ll_last",
    "ll_max",
    "ll_drops",
    "symbol_accuracy",
    "token_accuracy",
    "wall_seconds",
];

/// One sweep cell. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub format: &'static str,
    pub format_version: u32,
    pub method: Method,
    pub beam: usize,
    pub seed: u64,
    pub length: usize,
    pub lm_order: usize,
    pub lm_smoothing: &'static str,
    pub lm_discount: f64,
    pub lm_epsilon: f64,
    pub channel_epsilon: f64,
    /// EM iterations actually run.
    pub iterations: usize,
    /// Log normalizer of the method's model under the final channel.
    pub log_z: f64,
    pub ll_first: f64,
    pub ll_last: f64,
    pub ll_max: f64,
    /// Iterations whose log-likelihood fell below the previous one.
    pub ll_drops: usize,
    pub symbol_accuracy: f64,
    pub token_accuracy: f64,
    /// EM time only; corpus ingestion and LM fitting are excluded.
    pub wall_seconds: f64,
}

/// Fit the LM once, draw one instance per seed, then run every
/// `(method, beam, seed)` cell on `config.workers` threads. Rows come back
/// sorted by method, beam and seed.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<BenchRow>> {
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
    let instances = config
        .seeds
        .iter()
        .map(|&seed| Ok((seed, generate_cipher(&text, lm.alphabet(), config.length, seed)?)))
        .collect::<Result<Vec<(u64, CipherInstance)>>>()?;
    let mut cells = Vec::new();
    for &method in &config.methods {
        for &beam in &config.beams {
            for (seed, instance) in &instances {
                cells.push((method, beam, *seed, instance));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} workers: {e}", config.workers)))?;
    let mut rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(method, beam, seed, instance)| run_cell(config, &lm, method, beam, seed, instance))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by_key(|r| (r.method, r.beam, r.seed));
    Ok(rows)
}

fn run_cell(
    config: &ExperimentConfig,
    lm: &NgramLM,
    method: Method,
    beam: usize,
    seed: u64,
    instance: &CipherInstance,
) -> Result<BenchRow> {
    let em = EmConfig {
        method,
        beam,
        iterations: config.iterations,
        tolerance: config.tolerance,
        epsilon: config.epsilon,
        state_cap: config.state_cap,
    };
    let start = Instant::now();
    let run = run_em(instance, lm, &em)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let accuracy = mapping_accuracy(&run, instance)?;
    let ll = &run.log_likelihoods;
    Ok(BenchRow {
        format: BENCH_FORMAT,
        format_version: BENCH_FORMAT_VERSION,
        method,
        beam,
        seed,
        length: instance.len(),
        lm_order: lm.order(),
        lm_smoothing: lm.smoothing().as_str(),
        lm_discount: lm.discount(),
        lm_epsilon: lm.epsilon(),
        channel_epsilon: config.epsilon,
        iterations: run.iterations(),
        log_z: run.final_log_likelihood,
        ll_first: ll[0],
        ll_last: ll[ll.len() - 1],
        ll_max: ll.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ll_drops: ll.windows(2).filter(|w| w[1] < w[0]).count(),
        symbol_accuracy: accuracy.symbol,
        token_accuracy: accuracy.token,
        wall_seconds,
    })
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(BENCH_COLUMNS)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| CliError::io("<csv output>", e))?;
    Ok(())
}

/// Per `(method, beam)` medians over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub method: Method,
    pub beam: usize,
    pub seeds: usize,
    pub symbol_accuracy: f64,
    pub token_accuracy: f64,
    pub log_z: f64,
    pub wall_seconds: f64,
}

pub fn summarize(rows: &[BenchRow]) -> Vec<Summary> {
    let mut out: Vec<Summary> = Vec::new();
    for group in rows.chunk_by(|a, b| (a.method, a.beam) == (b.method, b.beam)) {
        let median = |f: fn(&BenchRow) -> f64| {
            let mut v: Vec<f64> = group.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            let m = v.len() / 2;
            if v.len() % 2 == 1 {
                v[m]
            } else {
                (v[m - 1] + v[m]) / 2.0
            }
        };
        out.push(Summary {
            method: group[0].method,
            beam: group[0].beam,
            seeds: group.len(),
            symbol_accuracy: median(|r| r.symbol_accuracy),
            token_accuracy: median(|r| r.token_accuracy),
            log_z: median(|r| r.log_z),
            wall_seconds: median(|r| r.wall_seconds),
        });
    }
    out
}

pub fn write_summary<W: Write>(summary: &[Summary], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<8} {:>6} {:>5} {:>9} {:>9} {:>14} {:>9}",
        "method", "beam", "seeds", "symbol", "token", "log_z", "seconds"
    )?;
    for s in summary {
        writeln!(
            out,
            "{:<8} {:>6} {:>5} {:>9.4} {:>9.4} {:>14.4} {:>9.3}",
            s.method.as_str(),
            s.beam,
            s.seeds,
            s.symbol_accuracy,
            s.token_accuracy,
            s.log_z,
            s.wall_seconds
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_fields() {
        let row = BenchRow {
            format: BENCH_FORMAT,
            format_version: BENCH_FORMAT_VERSION,
            method: Method::Rcms,
            beam: 1,
            seed: 0,
            length: 1,
            lm_order: 2,
            lm_smoothing: "laplace",
            lm_discount: 0.25,
            lm_epsilon: 0.01,
            channel_epsilon: 0.01,
            iterations: 1,
            log_z: -1.0,
            ll_first: -1.0,
            ll_last: -1.0,
            ll_max: -1.0,
            ll_drops: 0,
            symbol_accuracy: 1.0,
            token_accuracy: 1.0,
            wall_seconds: 0.0,
        };
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.serialize(&row).unwrap();
        let text = String::from_utf8(writer.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), BENCH_COLUMNS.join(","));
    }
}
