use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CipherInstance;
use crate::baselines::{beam_search, exact_forward_backward, hybrid_union, DEFAULT_STATE_CAP};
use crate::context::Label;
use crate::engine::{argmax, infer, RcmsConfig};
use crate::error::{Error, Result};
use crate::model::{CipherModel, ChannelModel, NgramLM};

/// Inference routine used for the E-step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rcms,
    Beam,
    Hybrid,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rcms, Method::Beam, Method::Hybrid, Method::Exact];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rcms => "rcms",
            Method::Beam => "beam",
            Method::Hybrid => "hybrid",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::usage(format!("unknown method {s:?} (rcms, beam, hybrid, exact)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    pub method: Method,
    pub beam: usize,
    pub iterations: usize,
    /// Stop once the relative change in log-likelihood falls below this.
    /// Zero (the default) runs every iteration: from the uniform start the
    /// likelihood barely moves for the first few iterations.
    pub tolerance: f64,
    /// Laplace parameter of the M-step; zero for plain maximum likelihood.
    pub epsilon: f64,
    /// State cap for the exact E-step.
    pub state_cap: u128,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            method: Method::Rcms,
            beam: 100,
            iterations: 20,
            tolerance: 0.0,
            epsilon: 0.01,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Outcome of one EM run.
#[derive(Clone, Debug, PartialEq)]
pub struct EmRun {
    pub method: Method,
    pub beam: usize,
    /// Data log-likelihood (log normalizer of the E-step's model) before each
    /// M-step.
    pub log_likelihoods: Vec<f64>,
    /// `ChannelModel::log_prior` of the channel behind each entry of
    /// `log_likelihoods`. With an exact E-step the sums of the two are
    /// non-decreasing; the likelihood alone is only when `epsilon = 0`.
    pub log_priors: Vec<f64>,
    /// Log-likelihood under the final channel.
    pub final_log_likelihood: f64,
    pub channel: ChannelModel,
    /// Posterior decoding under the final channel.
    pub decoded: Vec<Label>,
}

impl EmRun {
    pub fn iterations(&self) -> usize {
        self.log_likelihoods.len()
    }
}

struct EStep {
    log_z: f64,
    marginals: Vec<Vec<f64>>,
}

fn e_step(
    config: &EmConfig,
    lm: &NgramLM,
    alternate: Option<&NgramLM>,
    channel: &ChannelModel,
    ciphertext: &[Label],
) -> Result<EStep> {
    let model = CipherModel::new(lm, channel);
    match config.method {
        Method::Rcms => {
            let trellis = infer(&model, ciphertext, RcmsConfig::new(config.beam))?;
            Ok(EStep {
                log_z: trellis.log_partition()?,
                marginals: trellis.marginals()?.to_vec(),
            })
        }
        Method::Beam => {
            let r = beam_search(&model, ciphertext, config.beam)?;
            Ok(EStep {
                log_z: r.log_z,
                marginals: r.marginals,
            })
        }
        Method::Hybrid => {
            let alt = CipherModel::new(alternate.expect("hybrid needs an alternate model"), channel);
            let r = hybrid_union(&model, &alt, ciphertext, config.beam)?;
            Ok(EStep {
                log_z: r.log_z,
                marginals: r.marginals,
            })
        }
        Method::Exact => {
            let r = exact_forward_backward(&model, ciphertext, config.state_cap)?;
            Ok(EStep {
                log_z: r.log_z,
                marginals: r.marginals,
            })
        }
    }
}

/// EM over the channel with the language model held fixed.
///
/// The channel starts exactly uniform. Each iteration turns the chosen
/// inference method's posteriors into expected `(plain, cipher)` counts and
/// re-estimates the channel with Laplace smoothing. The hybrid method's
/// second criterion is the same counts under the other smoothing mode.
pub fn run_em(instance: &CipherInstance, lm: &NgramLM, config: &EmConfig) -> Result<EmRun> {
    if config.iterations == 0 {
        return Err(Error::usage("EM needs at least one iteration"));
    }
    if config.beam == 0 {
        return Err(Error::usage("beam width must be at least 1"));
    }
    if instance.is_empty() {
        return Err(Error::usage("empty ciphertext"));
    }
    if lm.alphabet() != instance.plain_alphabet.as_slice() {
        return Err(Error::usage(
            "language model alphabet differs from the instance's plain alphabet",
        ));
    }
    let alternate = match config.method {
        Method::Hybrid => Some(lm.with_smoothing(lm.smoothing().alternate(), lm.discount(), lm.epsilon())?),
        _ => None,
    };
    let plain = instance.plain_alphabet.len();
    let cipher = instance.cipher_alphabet.len();
    let mut channel = ChannelModel::uniform(plain, cipher, config.epsilon)?;
    let mut log_likelihoods = Vec::with_capacity(config.iterations);
    let mut log_priors = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let step = e_step(config, lm, alternate.as_ref(), &channel, &instance.ciphertext)?;
        if !step.log_z.is_finite() {
            return Err(Error::Inference {
                position: instance.len(),
                message: format!("non-finite log-likelihood {}", step.log_z),
            });
        }
        let mut counts = vec![0.0; plain * cipher];
        for (marginal, x) in step.marginals.iter().zip(&instance.ciphertext) {
            for (y, p) in marginal.iter().enumerate() {
                counts[y * cipher + x.index()] += p;
            }
        }
        let previous = log_likelihoods.last().copied();
        log_likelihoods.push(step.log_z);
        log_priors.push(channel.log_prior());
        channel = channel.reestimate(counts)?;
        if let Some(prev) = previous {
            if ((step.log_z - prev) / prev).abs() < config.tolerance {
                break;
            }
        }
    }
    let last = e_step(config, lm, alternate.as_ref(), &channel, &instance.ciphertext)?;
    Ok(EmRun {
        method: config.method,
        beam: config.beam,
        log_likelihoods,
        log_priors,
        final_log_likelihood: last.log_z,
        decoded: last.marginals.iter().map(|m| argmax(m)).collect(),
        channel,
    })
}
