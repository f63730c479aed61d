use crate::context::Label;
use crate::engine::argmax;
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::model::{tail, ChainModel};

/// A fully specified prefix kept in a beam.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    /// Index into the previous beam (0 for the first position).
    pub parent: usize,
    pub label: Label,
    pub log_forward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamResult {
    /// `beams[i]` holds the prefixes of length `i + 1`.
    pub beams: Vec<Vec<Hypothesis>>,
    /// Log-sum of the surviving final prefixes. Pruned assignments have zero
    /// mass, so this never exceeds the exact value.
    pub log_z: f64,
    pub marginals: Vec<Vec<f64>>,
    pub decoded: Vec<Label>,
}

impl BeamResult {
    /// Whether `assignment` survived to the final beam.
    pub fn contains(&self, assignment: &[Label]) -> bool {
        final_assignments(&self.beams, |h| (h.parent, h.label))
            .iter()
            .any(|a| a == assignment)
    }

    /// The full assignments in the final beam.
    pub fn assignments(&self) -> Vec<Vec<Label>> {
        final_assignments(&self.beams, |h| (h.parent, h.label))
    }
}

/// Hybrid beam entry carrying the score under both criteria.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridHypothesis {
    pub parent: usize,
    pub label: Label,
    pub log_forward: f64,
    pub alt_log_forward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridResult {
    /// The per-position union beams, at most `2B` entries each.
    pub beams: Vec<Vec<HybridHypothesis>>,
    /// Primary-criterion log mass of the final union.
    pub log_z: f64,
    pub alt_log_z: f64,
    /// Primary-criterion marginals over the final union.
    pub marginals: Vec<Vec<f64>>,
    pub decoded: Vec<Label>,
}

impl HybridResult {
    pub fn assignments(&self) -> Vec<Vec<Label>> {
        final_assignments(&self.beams, |h| (h.parent, h.label))
    }
}

struct Node {
    parent: usize,
    label: Label,
    history: Vec<Label>,
    scores: [f64; 2],
}

/// Standard beam search: expand every kept prefix by every label and keep
/// the `beam` best prefixes (earlier candidates win ties).
pub fn beam_search<M: ChainModel>(
    model: &M,
    observations: &[M::Obs],
    beam: usize,
) -> Result<BeamResult> {
    let levels = search(observations, beam, 1, model.history_window(), |slot| {
        model.num_labels(slot)
    }, |slot, h, y, obs| {
        let w = model.log_weight(slot, h, y, obs);
        [w, w]
    })?;
    let beams: Vec<Vec<Hypothesis>> = levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|n| Hypothesis {
                    parent: n.parent,
                    label: n.label,
                    log_forward: n.scores[0],
                })
                .collect()
        })
        .collect();
    let (log_z, marginals) = posterior(&levels, 0, model);
    let decoded = marginals.iter().map(|m| argmax(m)).collect();
    Ok(BeamResult {
        beams,
        log_z,
        marginals,
        decoded,
    })
}

/// Beam search under two criteria sharing one union beam per step: each
/// step expands the union, then keeps the top `beam` under each criterion.
pub fn hybrid_union<M, A>(
    primary: &M,
    alternate: &A,
    observations: &[M::Obs],
    beam: usize,
) -> Result<HybridResult>
where
    M: ChainModel,
    A: ChainModel<Obs = M::Obs>,
{
    for slot in 0..observations.len() {
        if primary.num_labels(slot) != alternate.num_labels(slot) {
            return Err(Error::usage(format!(
                "hybrid criteria disagree on the alphabet at slot {slot}"
            )));
        }
    }
    let window = primary.history_window().max(alternate.history_window());
    let levels = search(observations, beam, 2, window, |slot| primary.num_labels(slot), |slot, h, y, obs| {
        [
            primary.log_weight(slot, h, y, obs),
            alternate.log_weight(slot, h, y, obs),
        ]
    })?;
    let beams: Vec<Vec<HybridHypothesis>> = levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|n| HybridHypothesis {
                    parent: n.parent,
                    label: n.label,
                    log_forward: n.scores[0],
                    alt_log_forward: n.scores[1],
                })
                .collect()
        })
        .collect();
    let (log_z, marginals) = posterior(&levels, 0, primary);
    let alt_log_z = log_sum_exp(levels.last().expect("nonempty").iter().map(|n| n.scores[1]));
    let decoded = marginals.iter().map(|m| argmax(m)).collect();
    Ok(HybridResult {
        beams,
        log_z,
        alt_log_z,
        marginals,
        decoded,
    })
}

fn search<O, L, W>(
    observations: &[O],
    beam: usize,
    criteria: usize,
    window: usize,
    labels: L,
    weight: W,
) -> Result<Vec<Vec<Node>>>
where
    L: Fn(usize) -> usize,
    W: Fn(usize, &[Label], Label, &O) -> [f64; 2],
{
    if beam == 0 {
        return Err(Error::usage("beam width must be at least 1"));
    }
    if observations.is_empty() {
        return Err(Error::usage("empty input: nothing to infer"));
    }
    let start = Node {
        parent: 0,
        label: Label(0),
        history: Vec::new(),
        scores: [0.0; 2],
    };
    let mut levels: Vec<Vec<Node>> = Vec::with_capacity(observations.len());
    let mut prev_level = vec![start];
    for (slot, obs) in observations.iter().enumerate() {
        let count = labels(slot);
        let mut candidates: Vec<(usize, Label, [f64; 2])> = Vec::with_capacity(prev_level.len() * count);
        for (k, parent) in prev_level.iter().enumerate() {
            for y in 0..count {
                let y = Label::from(y);
                let w = weight(slot, &parent.history, y, obs);
                if !(w[0].is_finite() && w[1].is_finite()) {
                    return Err(Error::Inference {
                        position: slot + 1,
                        message: format!("model returned non-finite log-weight {w:?}"),
                    });
                }
                candidates.push((k, y, [parent.scores[0] + w[0], parent.scores[1] + w[1]]));
            }
        }
        let mut keep = vec![false; candidates.len()];
        for c in 0..criteria {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            if beam < order.len() {
                order.select_nth_unstable_by(beam - 1, |&a, &b| {
                    candidates[b].2[c].total_cmp(&candidates[a].2[c]).then(a.cmp(&b))
                });
                order.truncate(beam);
            }
            for i in order {
                keep[i] = true;
            }
        }
        let next: Vec<Node> = candidates
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|((k, y, scores), _)| {
                let mut history = Vec::with_capacity(window);
                history.extend_from_slice(tail(&prev_level[k].history, window.saturating_sub(1)));
                if window > 0 {
                    history.push(y);
                }
                Node {
                    parent: k,
                    label: y,
                    history,
                    scores,
                }
            })
            .collect();
        levels.push(std::mem::replace(&mut prev_level, next));
    }
    levels.push(prev_level);
    levels.remove(0);
    Ok(levels)
}

/// Log mass of the final beam and marginals over its prefixes.
fn posterior<M: ChainModel>(levels: &[Vec<Node>], criterion: usize, model: &M) -> (f64, Vec<Vec<f64>>) {
    let last = levels.last().expect("nonempty");
    let log_z = log_sum_exp(last.iter().map(|n| n.scores[criterion]));
    let mut marginals: Vec<Vec<f64>> = (0..levels.len())
        .map(|slot| vec![0.0; model.num_labels(slot)])
        .collect();
    let mut mass: Vec<f64> = last
        .iter()
        .map(|n| (n.scores[criterion] - log_z).exp())
        .collect();
    for slot in (0..levels.len()).rev() {
        let level = &levels[slot];
        let parents = if slot == 0 { 1 } else { levels[slot - 1].len() };
        let mut up = vec![0.0; parents];
        for (n, &m) in level.iter().zip(&mass) {
            marginals[slot][n.label.index()] += m;
            up[n.parent] += m;
        }
        mass = up;
    }
    (log_z, marginals)
}

fn final_assignments<H, F>(beams: &[Vec<H>], link: F) -> Vec<Vec<Label>>
where
    F: Fn(&H) -> (usize, Label),
{
    let Some(last) = beams.last() else {
        return Vec::new();
    };
    (0..last.len())
        .map(|mut idx| {
            let mut out = vec![Label(0); beams.len()];
            for slot in (0..beams.len()).rev() {
                let (parent, label) = link(&beams[slot][idx]);
                out[slot] = label;
                idx = parent;
            }
            out
        })
        .collect()
}
