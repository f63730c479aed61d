//! One forward step of the engine: expand every retained context by every
//! label, keep the `B` best expansions, and merge the rest into their least
//! retained ancestor.

use crate::context::Label;
use crate::error::{Error, Result};
use crate::logspace::LogSumAcc;
use crate::model::{tail, ChainModel};

/// An expansion `c × {y}` of a retained context `c` at the previous position.
#[derive(Clone, Debug, PartialEq)]
pub struct ENode {
    /// Index of the parent [`MNode`] in the previous level.
    pub parent: usize,
    pub label: Label,
    /// Length of the specified suffix (parent length + 1).
    pub len: usize,
    pub log_forward: f64,
    pub active: bool,
    /// Index of the [`MNode`] this expansion was merged into.
    pub target: Option<usize>,
}

/// A retained context. It represents its own context minus the contexts of
/// any retained descendants, and absorbs every pruned expansion whose least
/// retained ancestor it is.
#[derive(Clone, Debug, PartialEq)]
pub struct MNode {
    /// Index of the expansion this node was created from; `None` for the
    /// root (and for the start context).
    pub origin: Option<usize>,
    pub len: usize,
    /// The last `min(len, window)` labels of the suffix, oldest first.
    pub history: Vec<Label>,
    pub log_forward: f64,
    pub log_backward: f64,
    /// Number of expansions merged into this node, itself included.
    pub absorbed: usize,
}

impl MNode {
    fn root() -> Self {
        Self {
            origin: None,
            len: 0,
            history: Vec::new(),
            log_forward: f64::NEG_INFINITY,
            log_backward: 0.0,
            absorbed: 0,
        }
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }
}

/// The sorted candidate list at one position with its lcs array.
///
/// Candidate `j * parent_count + k` is parent `k` expanded by label `j`, and
/// `lcs[j]` is the common-suffix length of candidates `j` and `j + 1` (the
/// last entry is 0).
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    pub position: usize,
    pub parent_count: usize,
    pub nodes: Vec<ENode>,
    pub lcs: Vec<usize>,
}

impl Expansion {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The retained contexts at one position, sorted, root last.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedLevel {
    pub position: usize,
    pub nodes: Vec<MNode>,
    /// `lcs[k]` is the common-suffix length of nodes `k` and `k + 1`.
    pub lcs: Vec<usize>,
    /// Size of the previous level.
    pub parent_count: usize,
    /// Number of labels at this position.
    pub label_count: usize,
    /// Merge target of every candidate, indexed like [`Expansion::nodes`].
    pub targets: Vec<u32>,
}

impl MergedLevel {
    /// The single len-0 context the first position expands from.
    pub fn start() -> Self {
        let mut root = MNode::root();
        root.log_forward = 0.0;
        Self {
            position: 0,
            nodes: vec![root],
            lcs: Vec::new(),
            parent_count: 0,
            label_count: 0,
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Candidate index of parent `k` expanded by `label`.
    #[inline]
    pub fn candidate(&self, parent: usize, label: Label) -> usize {
        label.index() * self.parent_count + parent
    }

    #[inline]
    pub fn target(&self, candidate: usize) -> usize {
        self.targets[candidate] as usize
    }
}

/// Expand every context of `prev` by every label of the next slot, in
/// label-major order (outer loop over labels, inner over parents). Parents
/// are sorted, so the result is sorted too.
pub fn expand_level<M: ChainModel>(
    prev: &MergedLevel,
    model: &M,
    obs: &M::Obs,
) -> Result<Expansion> {
    let slot = prev.position;
    let labels = model.num_labels(slot);
    if labels == 0 {
        return Err(Error::usage(format!("slot {slot} has no labels")));
    }
    let parents = prev.nodes.len();
    let mut nodes = Vec::with_capacity(labels * parents);
    let mut lcs = Vec::with_capacity(labels * parents);
    for j in 0..labels {
        let label = Label::from(j);
        for (k, parent) in prev.nodes.iter().enumerate() {
            lcs.push(if k + 1 < parents { prev.lcs[k] + 1 } else { 0 });
            let w = model.log_weight(slot, &parent.history, label, obs);
            if !w.is_finite() {
                return Err(Error::Inference {
                    position: slot + 1,
                    message: format!("model returned log-weight {w} for label {j}"),
                });
            }
            nodes.push(ENode {
                parent: k,
                label,
                len: parent.len + 1,
                log_forward: parent.log_forward + w,
                active: false,
                target: None,
            });
        }
    }
    Ok(Expansion {
        position: slot + 1,
        parent_count: parents,
        nodes,
        lcs,
    })
}

/// Mark the `beam` candidates with the highest forward score as active.
/// Ties at the cut go to the earlier candidate.
pub fn select_active(candidates: &mut [ENode], beam: usize) {
    for c in candidates.iter_mut() {
        c.active = false;
    }
    if beam >= candidates.len() {
        candidates.iter_mut().for_each(|c| c.active = true);
        return;
    }
    if beam == 0 {
        return;
    }
    let mut order: Vec<u32> = (0..candidates.len() as u32).collect();
    let by_score = |a: &u32, b: &u32| {
        candidates[*b as usize]
            .log_forward
            .total_cmp(&candidates[*a as usize].log_forward)
            .then(a.cmp(b))
    };
    order.select_nth_unstable_by(beam - 1, by_score);
    for &i in &order[..beam] {
        candidates[i as usize].active = true;
    }
}

/// Merge every candidate into its least active ancestor with a backwards
/// depth-first sweep over the sorted candidates, seeded with a fresh root.
///
/// Fills in each candidate's `target`. `window` is the number of trailing
/// labels kept in each new node's history.
pub fn merge_level(
    prev: &MergedLevel,
    expansion: &mut Expansion,
    window: usize,
) -> Result<MergedLevel> {
    let count = expansion.nodes.len();
    // Nodes in push order: the root first, then actives from the back.
    let mut pushed: Vec<MNode> = vec![MNode::root()];
    let mut lcs_rev: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = vec![0];
    let mut raw_targets: Vec<u32> = vec![0; count];
    let mut l = usize::MAX;
    for j in (0..count).rev() {
        l = l.min(expansion.lcs[j]);
        loop {
            let top = *stack
                .last()
                .ok_or_else(|| Error::Engine("merge stack emptied".into()))?;
            if l < pushed[top].len {
                stack.pop();
            } else {
                break;
            }
        }
        let e = &expansion.nodes[j];
        if e.active {
            let parent = &prev.nodes[e.parent];
            let mut history = Vec::with_capacity(window.min(e.len));
            history.extend_from_slice(tail(&parent.history, window.saturating_sub(1)));
            if window > 0 {
                history.push(e.label);
            }
            pushed.push(MNode {
                origin: Some(j),
                len: e.len,
                history,
                log_forward: f64::NEG_INFINITY,
                log_backward: 0.0,
                absorbed: 0,
            });
            lcs_rev.push(l);
            stack.push(pushed.len() - 1);
            l = usize::MAX;
        }
        raw_targets[j] = *stack
            .last()
            .ok_or_else(|| Error::Engine("merge stack emptied".into()))? as u32;
    }

    let last = pushed.len() - 1;
    let mut accs = vec![LogSumAcc::new(); pushed.len()];
    for (j, e) in expansion.nodes.iter_mut().enumerate() {
        let p = raw_targets[j] as usize;
        accs[p].add(e.log_forward);
        pushed[p].absorbed += 1;
        let target = last - p;
        raw_targets[j] = target as u32;
        e.target = Some(target);
    }
    for (node, acc) in pushed.iter_mut().zip(&accs) {
        node.log_forward = acc.value();
    }
    pushed.reverse();
    lcs_rev.reverse();
    Ok(MergedLevel {
        position: expansion.position,
        nodes: pushed,
        lcs: lcs_rev,
        parent_count: expansion.parent_count,
        label_count: count / expansion.parent_count.max(1),
        targets: raw_targets,
    })
}
