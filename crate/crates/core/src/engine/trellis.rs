use std::io::Write;

use serde::Serialize;

use super::step::{expand_level, merge_level, select_active, MergedLevel};
use crate::context::{Context, Label, Level};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LogSumAcc};
use crate::model::ChainModel;

/// Engine settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RcmsConfig {
    /// Number of concrete contexts retained per position (`B >= 1`).
    pub beam: usize,
    /// Count the root against `beam` (keeping `beam - 1` concrete contexts)
    /// instead of adding it on top.
    pub root_in_beam: bool,
}

impl RcmsConfig {
    pub fn new(beam: usize) -> Self {
        Self {
            beam,
            root_in_beam: false,
        }
    }

    fn concrete_slots(&self) -> usize {
        if self.root_in_beam {
            self.beam.saturating_sub(1)
        } else {
            self.beam
        }
    }
}

/// Log masses around one merge, in the same (pre-rescaling) units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub candidates: usize,
    pub candidate_log_mass: f64,
    pub merged_log_mass: f64,
}

/// Posterior mass of one expansion: the parent context at `position - 1`
/// extended by `label`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgePosterior {
    pub position: usize,
    pub parent: usize,
    pub label: Label,
    pub mass: f64,
}

/// All levels of one inference run.
///
/// `levels[0]` is the start context; `levels[i]` holds the retained
/// contexts after `i` labels. Forward scores are stored relative to a
/// per-level scale (the level maximum), backward scores likewise, so
/// nothing underflows on long chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Trellis<O> {
    config: RcmsConfig,
    window: usize,
    observations: Vec<O>,
    levels: Vec<MergedLevel>,
    forward_scale: Vec<f64>,
    backward_scale: Vec<f64>,
    // log sum_m f*b at each level, in stored units
    local_mass: Vec<f64>,
    marginals: Vec<Vec<f64>>,
    backward_done: bool,
}

/// Run the forward pass over `observations`.
pub fn forward_pass<M: ChainModel>(
    model: &M,
    observations: &[M::Obs],
    config: RcmsConfig,
) -> Result<Trellis<M::Obs>>
where
    M::Obs: Clone,
{
    if observations.is_empty() {
        return Err(Error::usage("empty input: nothing to infer"));
    }
    let mut trellis = Trellis::new(config, model.history_window())?;
    for obs in observations {
        trellis.push_level(model, obs.clone())?;
    }
    Ok(trellis)
}

impl<O> Trellis<O> {
    /// An empty trellis holding only the start context.
    pub fn new(config: RcmsConfig, window: usize) -> Result<Self> {
        if config.beam == 0 {
            return Err(Error::usage("beam width must be at least 1"));
        }
        Ok(Self {
            config,
            window,
            observations: Vec::new(),
            levels: vec![MergedLevel::start()],
            forward_scale: vec![0.0],
            backward_scale: Vec::new(),
            local_mass: Vec::new(),
            marginals: Vec::new(),
            backward_done: false,
        })
    }

    /// Expand, select and merge one more position.
    pub fn push_level<M>(&mut self, model: &M, obs: O) -> Result<StepStats>
    where
        M: ChainModel<Obs = O>,
    {
        let prev = self.levels.last().expect("start level");
        let mut expansion = expand_level(prev, model, &obs)?;
        select_active(&mut expansion.nodes, self.config.concrete_slots());
        let mut level = merge_level(prev, &mut expansion, self.window)?;
        let candidate_log_mass = log_sum_exp(expansion.nodes.iter().map(|e| e.log_forward));
        let merged_log_mass = log_sum_exp(level.nodes.iter().map(|m| m.log_forward));
        let scale = level
            .nodes
            .iter()
            .map(|m| m.log_forward)
            .fold(f64::NEG_INFINITY, f64::max);
        if !scale.is_finite() {
            return Err(Error::Inference {
                position: level.position,
                message: "all forward mass vanished".into(),
            });
        }
        for m in &mut level.nodes {
            m.log_forward -= scale;
        }
        self.levels.push(level);
        self.forward_scale.push(scale);
        self.observations.push(obs);
        self.backward_done = false;
        Ok(StepStats {
            candidates: expansion.nodes.len(),
            candidate_log_mass,
            merged_log_mass,
        })
    }

    pub fn config(&self) -> RcmsConfig {
        self.config
    }

    /// Chain length `n`.
    pub fn len(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn observations(&self) -> &[O] {
        &self.observations
    }

    /// The retained nodes after `position` labels (0 is the start context).
    pub fn level_nodes(&self, position: usize) -> &MergedLevel {
        &self.levels[position]
    }

    pub fn levels(&self) -> &[MergedLevel] {
        &self.levels
    }

    /// Full suffix of node `index` at `position`, recovered through the
    /// chain of originating expansions.
    pub fn suffix(&self, position: usize, index: usize) -> Vec<Label> {
        let mut out = Vec::new();
        let (mut pos, mut idx) = (position, index);
        while let Some(e) = self.levels[pos].nodes[idx].origin {
            let parents = self.levels[pos].parent_count;
            out.push(Label::from(e / parents));
            idx = e % parents;
            pos -= 1;
        }
        out.reverse();
        out
    }

    pub fn context(&self, position: usize, index: usize) -> Context {
        Context {
            position,
            suffix: self.suffix(position, index),
        }
    }

    /// Forward score of a node in absolute (unrescaled) log units.
    pub fn log_forward(&self, position: usize, index: usize) -> f64 {
        self.levels[position].nodes[index].log_forward
            + self.forward_scale[..=position].iter().sum::<f64>()
    }

    /// Backward score of a node in absolute log units.
    pub fn log_backward(&self, position: usize, index: usize) -> Result<f64> {
        self.require_backward()?;
        Ok(self.levels[position].nodes[index].log_backward
            + self.backward_scale[position..].iter().sum::<f64>())
    }

    /// Materialize the level at `position` as explicit contexts.
    pub fn level(&self, position: usize) -> Level {
        let merged = &self.levels[position];
        Level {
            position,
            contexts: (0..merged.len()).map(|k| self.context(position, k)).collect(),
            lcs: merged.lcs.clone(),
        }
    }

    /// Index of the node owning `assignment[..i]` at every level `i`,
    /// following merge targets from the start context.
    pub fn owners(&self, assignment: &[Label]) -> Result<Vec<usize>> {
        if assignment.len() != self.len() {
            return Err(Error::usage(format!(
                "assignment of length {} for a chain of length {}",
                assignment.len(),
                self.len()
            )));
        }
        let mut owners = Vec::with_capacity(assignment.len() + 1);
        owners.push(0);
        let mut m = 0;
        for (slot, &y) in assignment.iter().enumerate() {
            let level = &self.levels[slot + 1];
            if y.index() >= level.label_count {
                return Err(Error::usage(format!("label {} out of range at slot {slot}", y.0)));
            }
            m = level.target(level.candidate(m, y));
            owners.push(m);
        }
        Ok(owners)
    }

    /// Run the backward pass, caching the normalizer and label marginals.
    pub fn backward_pass<M>(&mut self, model: &M) -> Result<()>
    where
        M: ChainModel<Obs = O>,
    {
        let n = self.len();
        if n == 0 {
            return Err(Error::usage("backward pass before forward pass"));
        }
        self.backward_scale = vec![0.0; n + 1];
        self.local_mass = vec![f64::NEG_INFINITY; n + 1];
        self.marginals = vec![Vec::new(); n];
        for m in &mut self.levels[n].nodes {
            m.log_backward = 0.0;
        }
        self.local_mass[n] = log_sum_exp(self.levels[n].nodes.iter().map(|m| m.log_forward));

        for slot in (0..n).rev() {
            let (head, rest) = self.levels.split_at_mut(slot + 1);
            let level = &mut head[slot];
            let child = &rest[0];
            let obs = &self.observations[slot];
            let parents = level.nodes.len();
            let norm = self.forward_scale[slot + 1] + self.local_mass[slot + 1];
            let mut accs = vec![LogSumAcc::new(); parents];
            let mut marginal = vec![0.0; child.label_count];
            for (j, mass) in marginal.iter_mut().enumerate() {
                let label = Label::from(j);
                for (k, parent) in level.nodes.iter().enumerate() {
                    let w = model.log_weight(slot, &parent.history, label, obs);
                    let target = &child.nodes[child.target(j * parents + k)];
                    accs[k].add(target.log_backward + w);
                    *mass += (parent.log_forward + w + target.log_backward - norm).exp();
                }
            }
            self.marginals[slot] = marginal;

            let raw: Vec<f64> = accs.iter().map(LogSumAcc::value).collect();
            let scale = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !scale.is_finite() {
                return Err(Error::Inference {
                    position: slot,
                    message: "all backward mass vanished".into(),
                });
            }
            for (m, b) in level.nodes.iter_mut().zip(raw) {
                m.log_backward = b - scale;
            }
            self.backward_scale[slot] = scale;
            self.local_mass[slot] =
                log_sum_exp(level.nodes.iter().map(|m| m.log_forward + m.log_backward));
        }
        self.backward_done = true;
        Ok(())
    }

    fn require_backward(&self) -> Result<()> {
        if self.backward_done {
            Ok(())
        } else {
            Err(Error::usage("forward and backward passes must run first"))
        }
    }

    /// Log normalizer of the induced model, from the final level's forward
    /// scores.
    pub fn log_partition(&self) -> Result<f64> {
        self.require_backward()?;
        let n = self.len();
        Ok(self.forward_scale.iter().sum::<f64>() + self.local_mass[n])
    }

    /// `log sum_m forward(m) * backward(m)` at each level `0..=n`, in absolute
    /// units. Every entry equals [`log_partition`](Self::log_partition) up
    /// to round-off.
    pub fn level_log_masses(&self) -> Result<Vec<f64>> {
        self.require_backward()?;
        let n = self.len();
        let mut out = Vec::with_capacity(n + 1);
        let mut forward = 0.0;
        let mut backward: f64 = self.backward_scale.iter().sum();
        for i in 0..=n {
            forward += self.forward_scale[i];
            out.push(self.local_mass[i] + forward + backward);
            backward -= self.backward_scale[i];
        }
        Ok(out)
    }

    /// Posterior marginal of every label at each slot.
    pub fn marginals(&self) -> Result<&[Vec<f64>]> {
        self.require_backward()?;
        Ok(&self.marginals)
    }

    /// Visit every expansion with its posterior mass. Per position the
    /// masses sum to one.
    pub fn edge_posteriors<M, F>(&self, model: &M, mut visit: F) -> Result<()>
    where
        M: ChainModel<Obs = O>,
        F: FnMut(EdgePosterior),
    {
        self.require_backward()?;
        for slot in 0..self.len() {
            let level = &self.levels[slot];
            let child = &self.levels[slot + 1];
            let norm = self.forward_scale[slot + 1] + self.local_mass[slot + 1];
            let parents = level.nodes.len();
            for j in 0..child.label_count {
                let label = Label::from(j);
                for (k, parent) in level.nodes.iter().enumerate() {
                    let w = model.log_weight(slot, &parent.history, label, &self.observations[slot]);
                    let target = &child.nodes[child.target(j * parents + k)];
                    visit(EdgePosterior {
                        position: slot + 1,
                        parent: k,
                        label,
                        mass: (parent.log_forward + w + target.log_backward - norm).exp(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Position-wise posterior decoding; the lowest label wins ties.
    pub fn decode(&self) -> Result<Vec<Label>> {
        self.require_backward()?;
        Ok(self.marginals.iter().map(|m| argmax(m)).collect())
    }

    /// Log probability of a full assignment under the induced model, where
    /// each label is scored against the context that owns the prefix before
    /// it.
    pub fn assignment_log_prob<M>(&self, model: &M, assignment: &[Label]) -> Result<f64>
    where
        M: ChainModel<Obs = O>,
    {
        let log_z = self.log_partition()?;
        let owners = self.owners(assignment)?;
        let mut total = 0.0;
        for (slot, &y) in assignment.iter().enumerate() {
            let owner = &self.levels[slot].nodes[owners[slot]];
            total += model.log_weight(slot, &owner.history, y, &self.observations[slot]);
        }
        Ok(total - log_z)
    }

    /// Write one JSON record per node and expansion (see the README for the
    /// field list).
    pub fn dump<M, W>(&self, model: &M, out: &mut W) -> Result<()>
    where
        M: ChainModel<Obs = O>,
        W: Write,
    {
        let mut forward = 0.0;
        for (position, level) in self.levels.iter().enumerate() {
            forward += self.forward_scale[position];
            if position > 0 {
                let prev = &self.levels[position - 1];
                let prev_scale = forward - self.forward_scale[position];
                for j in 0..level.label_count {
                    for (k, parent) in prev.nodes.iter().enumerate() {
                        let candidate = j * prev.nodes.len() + k;
                        let target = level.target(candidate);
                        let w = model.log_weight(
                            position - 1,
                            &parent.history,
                            Label::from(j),
                            &self.observations[position - 1],
                        );
                        let record = DumpRecord::E {
                            position,
                            index: candidate,
                            parent: k,
                            label: j,
                            active: level.nodes[target].origin == Some(candidate),
                            target,
                            log_forward: parent.log_forward + w + prev_scale,
                        };
                        serde_json::to_writer(&mut *out, &record)?;
                        out.write_all(b"\n")?;
                    }
                }
            }
            for (index, m) in level.nodes.iter().enumerate() {
                let record = DumpRecord::M {
                    position,
                    index,
                    len: m.len,
                    suffix: self.suffix(position, index).iter().map(|l| l.0).collect(),
                    absorbed: m.absorbed,
                    log_forward: m.log_forward + forward,
                    log_backward: self
                        .backward_done
                        .then(|| m.log_backward + self.backward_scale[position..].iter().sum::<f64>()),
                };
                serde_json::to_writer(&mut *out, &record)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DumpRecord {
    M {
        position: usize,
        index: usize,
        len: usize,
        suffix: Vec<u32>,
        absorbed: usize,
        log_forward: f64,
        /// Absent before the backward pass.
        log_backward: Option<f64>,
    },
    E {
        position: usize,
        index: usize,
        parent: usize,
        label: usize,
        active: bool,
        target: usize,
        log_forward: f64,
    },
}

pub(crate) fn argmax(values: &[f64]) -> Label {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    Label::from(best)
}
