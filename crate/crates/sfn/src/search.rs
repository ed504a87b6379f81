//! Structure search: growing and pruning the tree.
//!
//! All five builders share one admission rule. A grown model replaces the
//! current one only if its validation MSE beats the current validation MSE
//! by more than the threshold `a`; otherwise the previous model (structure
//! and weights) is restored. Every attempt is logged in a [`SearchTrace`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Result, SfnError};
use crate::grad::sum_squared_error;
use crate::train::{init_weights, mse, train, TrainConfig};
use crate::tree::{FunctionKind, Parent, SfnModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// FLK: one link at a time.
    ForwardLinkByLink,
    /// FLY: a whole layer at a time.
    ForwardLayerByLayer,
    /// FRS: one link at a time from a random subset of the candidates.
    ForwardReducedRandom,
    /// B: FLY followed by pruning.
    Backward,
    /// FB: FLK with a pruning pass every `k_prune_interval` acceptances.
    ForwardBackward,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::ForwardLinkByLink,
        Algorithm::ForwardLayerByLayer,
        Algorithm::ForwardReducedRandom,
        Algorithm::Backward,
        Algorithm::ForwardBackward,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Algorithm::ForwardLinkByLink => "FLK",
            Algorithm::ForwardLayerByLayer => "FLY",
            Algorithm::ForwardReducedRandom => "FRS",
            Algorithm::Backward => "B",
            Algorithm::ForwardBackward => "FB",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Algorithm {
    type Err = SfnError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| SfnError::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// How a forward sweep picks among admissible candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Selection {
    /// Keep the first candidate, in canonical order, that passes admission.
    FirstImprovement,
    /// Train the whole sweep and keep the admissible candidate with the lowest
    /// validation MSE. Ties go to the earlier candidate.
    #[default]
    BestOfSweep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub max_depth: usize,
    /// `a`: required validation-MSE improvement for admission, and allowed
    /// validation-MSE increase for a pruning removal.
    pub admission_threshold: f64,
    /// FRS: fraction of the candidates drawn per sweep.
    pub rf: f64,
    /// FB: prune after this many accepted links.
    pub k_prune_interval: usize,
    pub max_links: usize,
    pub seed: u64,
    /// Epoch budget for each tentatively grown or pruned model.
    pub candidate_epochs: usize,
    /// Epoch budget for the refit after an accepted addition.
    pub topup_epochs: usize,
    pub selection: Selection,
    /// Retrain after a tentative removal; otherwise only re-evaluate.
    pub prune_retrain: bool,
    /// Hard cap on forward sweeps.
    pub max_sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::ForwardLinkByLink,
            max_depth: 1,
            admission_threshold: 1e-4,
            rf: 0.5,
            k_prune_interval: 5,
            max_links: 24,
            seed: 0,
            candidate_epochs: 500,
            topup_epochs: 2000,
            selection: Selection::BestOfSweep,
            prune_retrain: true,
            max_sweeps: 200,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(SfnError::InvalidConfig("max_depth must be positive".into()));
        }
        if !(self.admission_threshold >= 0.0) {
            return Err(SfnError::InvalidConfig("admission threshold must be >= 0".into()));
        }
        if !(self.rf > 0.0 && self.rf <= 1.0) {
            return Err(SfnError::InvalidConfig("rf must lie in (0, 1]".into()));
        }
        if self.k_prune_interval == 0 {
            return Err(SfnError::InvalidConfig(
                "k_prune_interval must be positive".into(),
            ));
        }
        if self.candidate_epochs == 0 {
            return Err(SfnError::InvalidConfig(
                "candidate_epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A link that could be added to the current model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CandidateLink {
    pub parent: Parent,
    pub kind: FunctionKind,
    pub baseline_input: usize,
}

impl fmt::Display for CandidateLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(x{})@{}", self.kind, self.baseline_input, self.parent)
    }
}

/// Every legal single-link addition: attachment points in canonical link
/// order followed by the root, then kinds E1, E2, E3, then inputs ascending.
pub fn enumerate_candidates(model: &SfnModel) -> Vec<CandidateLink> {
    let mut points: Vec<Parent> = model
        .links()
        .iter()
        .filter(|v| v.depth < model.max_depth())
        .map(|v| Parent::Link(v.link.id()))
        .collect();
    points.push(Parent::Root);
    let mut out = Vec::new();
    for parent in points {
        for kind in FunctionKind::ALL {
            for baseline_input in 0..model.input_arity() {
                out.push(CandidateLink {
                    parent,
                    kind,
                    baseline_input,
                });
            }
        }
    }
    out
}

/// The next layer: the full root set for an empty model, otherwise a child of
/// every kind on every input under each link at the deepest level. Empty
/// when that level is already at the depth cap.
pub fn layer_candidates(model: &SfnModel) -> Vec<CandidateLink> {
    let depth = model.depth();
    if depth >= model.max_depth() {
        return Vec::new();
    }
    let parents: Vec<Parent> = if depth == 0 {
        vec![Parent::Root]
    } else {
        model
            .links()
            .iter()
            .filter(|v| v.depth == depth)
            .map(|v| Parent::Link(v.link.id()))
            .collect()
    };
    let mut out = Vec::new();
    for parent in parents {
        for kind in FunctionKind::ALL {
            for baseline_input in 0..model.input_arity() {
                out.push(CandidateLink {
                    parent,
                    kind,
                    baseline_input,
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    /// One link added.
    Add,
    /// A whole layer added as a unit.
    AddLayer,
    /// Longer training of a just-admitted model; kept only if validation
    /// MSE does not rise.
    Refit,
    /// A link and its subtree removed.
    Remove,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub action: StepAction,
    pub candidate: String,
    pub train_j_before: f64,
    pub train_j_after: f64,
    pub val_mse_before: f64,
    pub val_mse_after: f64,
    pub accepted: bool,
    /// Fingerprint of the model before the step.
    pub hash_before: String,
    /// Fingerprint of the model in effect after the step (the restored one
    /// when rejected).
    pub hash_after: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    pub fn accepted(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps.iter().filter(|s| s.accepted)
    }

    /// Replays the log and checks every decision against the rules it was
    /// made under.
    pub fn verify(&self, a: f64) -> std::result::Result<(), String> {
        let mut current: Option<&str> = None;
        for s in &self.steps {
            if let Some(h) = current {
                if h != s.hash_before {
                    return Err(format!(
                        "step {}: starts from {} but model is {h}",
                        s.step, s.hash_before
                    ));
                }
            }
            if s.accepted {
                let ok = match s.action {
                    StepAction::Add | StepAction::AddLayer => s.val_mse_after < s.val_mse_before - a,
                    StepAction::Remove => s.val_mse_after <= s.val_mse_before + a,
                    StepAction::Refit => s.val_mse_after <= s.val_mse_before,
                };
                if !ok {
                    return Err(format!(
                        "step {} ({:?} {}) accepted with validation MSE {} -> {}",
                        s.step, s.action, s.candidate, s.val_mse_before, s.val_mse_after
                    ));
                }
            } else if s.hash_after != s.hash_before {
                return Err(format!("step {}: rejected but model changed", s.step));
            }
            current = Some(&s.hash_after);
        }
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.steps {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| SfnError::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let steps = r.deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(SearchTrace { steps })
    }
}

/// Training and validation sets used while building.
#[derive(Clone, Copy, Debug)]
pub struct SearchData<'a> {
    pub train: &'a Samples,
    pub validation: &'a Samples,
}

impl SearchData<'_> {
    fn check(&self) -> Result<usize> {
        if self.train.is_empty() || self.validation.is_empty() {
            return Err(SfnError::EmptyData);
        }
        let arity = self.train.arity();
        if arity == 0 || self.validation.arity() != arity {
            return Err(SfnError::InvalidConfig(
                "train and validation inputs disagree in width".into(),
            ));
        }
        Ok(arity)
    }
}

/// Strict admission: `new < old - a`.
pub fn admits(old_val_mse: f64, new_val_mse: f64, a: f64) -> bool {
    new_val_mse < old_val_mse - a
}

pub fn admit(old: &SfnModel, new: &SfnModel, validation: &Samples, a: f64) -> Result<bool> {
    Ok(admits(
        mse(old, &validation.inputs, &validation.targets)?,
        mse(new, &validation.inputs, &validation.targets)?,
        a,
    ))
}

#[derive(Clone, Debug)]
struct Scored {
    model: SfnModel,
    train_j: f64,
    val_mse: f64,
}

struct Builder<'a> {
    data: SearchData<'a>,
    train_cfg: TrainConfig,
    cfg: SearchConfig,
    init_rng: ChaCha8Rng,
    pick_rng: ChaCha8Rng,
    trace: SearchTrace,
}

impl<'a> Builder<'a> {
    fn new(data: SearchData<'a>, train_cfg: &TrainConfig, cfg: &SearchConfig) -> Result<(Self, Scored)> {
        train_cfg.validate()?;
        cfg.validate()?;
        let arity = data.check()?;
        let builder = Builder {
            data,
            train_cfg: train_cfg.clone(),
            cfg: cfg.clone(),
            init_rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            pick_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15),
            trace: SearchTrace::default(),
        };
        let empty = builder.score(SfnModel::new(arity, cfg.max_depth)?)?;
        Ok((builder, empty))
    }

    fn score(&self, model: SfnModel) -> Result<Scored> {
        let train_j = sum_squared_error(&model, &self.data.train.inputs, &self.data.train.targets)?;
        let val_mse = mse(
            &model,
            &self.data.validation.inputs,
            &self.data.validation.targets,
        )?;
        Ok(Scored {
            model,
            train_j,
            val_mse,
        })
    }

    fn fit(&self, mut model: SfnModel, epochs: usize) -> Result<Scored> {
        if model.count_weights() > 0 {
            train(
                &mut model,
                &self.data.train.inputs,
                &self.data.train.targets,
                &self.train_cfg.with_epochs(epochs),
            )?;
        }
        self.score(model)
    }

    fn grow(&mut self, current: &SfnModel, links: &[CandidateLink]) -> Result<Scored> {
        let mut model = current.clone();
        for c in links {
            let weights = init_weights(c.kind, &mut self.init_rng);
            model.add_link(c.parent, c.kind, c.baseline_input, weights)?;
        }
        self.fit(model, self.cfg.candidate_epochs)
    }

    fn log(
        &mut self,
        action: StepAction,
        candidate: String,
        before: &Scored,
        after: &Scored,
        accepted: bool,
    ) {
        let kept = if accepted { after } else { before };
        self.trace.steps.push(TraceStep {
            step: self.trace.steps.len(),
            action,
            candidate,
            train_j_before: before.train_j,
            train_j_after: after.train_j,
            val_mse_before: before.val_mse,
            val_mse_after: after.val_mse,
            accepted,
            hash_before: before.model.fingerprint(),
            hash_after: kept.model.fingerprint(),
        });
    }

    fn topup(&mut self, admitted: Scored) -> Result<Scored> {
        if self.cfg.topup_epochs == 0 {
            return Ok(admitted);
        }
        let refit = self.fit(admitted.model.clone(), self.cfg.topup_epochs)?;
        let keep = refit.val_mse <= admitted.val_mse;
        self.log(StepAction::Refit, "refit".into(), &admitted, &refit, keep);
        Ok(if keep { refit } else { admitted })
    }

    /// One forward sweep. Returns the grown model when a candidate was
    /// admitted.
    fn sweep(&mut self, current: &Scored) -> Result<Option<Scored>> {
        let all = enumerate_candidates(&current.model);
        let candidates: Vec<CandidateLink> = if self.cfg.algorithm == Algorithm::ForwardReducedRandom {
            let n = all.len();
            let take = ((self.cfg.rf * n as f64).ceil() as usize).clamp(1, n);
            let mut picked = sample(&mut self.pick_rng, n, take).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| all[i]).collect()
        } else {
            all
        };
        let a = self.cfg.admission_threshold;
        match self.cfg.selection {
            Selection::FirstImprovement => {
                for c in candidates {
                    let grown = self.grow(&current.model, &[c])?;
                    let ok = admits(current.val_mse, grown.val_mse, a);
                    self.log(StepAction::Add, c.to_string(), current, &grown, ok);
                    if ok {
                        return Ok(Some(grown));
                    }
                }
                Ok(None)
            }
            Selection::BestOfSweep => {
                let mut grown = Vec::with_capacity(candidates.len());
                for c in &candidates {
                    grown.push(self.grow(&current.model, &[*c])?);
                }
                let best = grown
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| admits(current.val_mse, g.val_mse, a))
                    .min_by(|x, y| x.1.val_mse.total_cmp(&y.1.val_mse))
                    .map(|(i, _)| i);
                for (i, (c, g)) in candidates.iter().zip(&grown).enumerate() {
                    if Some(i) != best {
                        self.log(StepAction::Add, c.to_string(), current, g, false);
                    }
                }
                Ok(match best {
                    Some(i) => {
                        let g = grown.swap_remove(i);
                        self.log(StepAction::Add, candidates[i].to_string(), current, &g, true);
                        Some(g)
                    }
                    None => None,
                })
            }
        }
    }

    fn forward(&mut self, start: Scored, prune_every: Option<usize>) -> Result<Scored> {
        let mut current = start;
        let mut admitted = 0;
        for _ in 0..self.cfg.max_sweeps {
            if current.model.link_count() >= self.cfg.max_links {
                break;
            }
            let Some(grown) = self.sweep(&current)? else {
                break;
            };
            current = self.topup(grown)?;
            admitted += 1;
            if let Some(k) = prune_every {
                if admitted % k == 0 {
                    current = self.prune(current)?;
                }
            }
        }
        Ok(current)
    }

    fn layers(&mut self, start: Scored) -> Result<Scored> {
        let mut current = start;
        loop {
            let layer = layer_candidates(&current.model);
            if layer.is_empty() || current.model.link_count() + layer.len() > self.cfg.max_links {
                break;
            }
            let grown = self.grow(&current.model, &layer)?;
            let ok = admits(current.val_mse, grown.val_mse, self.cfg.admission_threshold);
            let label = format!("layer {} ({} links)", current.model.depth() + 1, layer.len());
            self.log(StepAction::AddLayer, label, &current, &grown, ok);
            if !ok {
                break;
            }
            current = self.topup(grown)?;
        }
        Ok(current)
    }

    fn prune(&mut self, start: Scored) -> Result<Scored> {
        let mut current = start;
        let a = self.cfg.admission_threshold;
        while !current.model.is_empty() {
            let ids: Vec<_> = current.model.links().iter().map(|v| v.link.id()).collect();
            let mut trials = Vec::with_capacity(ids.len());
            for id in &ids {
                let mut m = current.model.clone();
                m.remove_link(*id)?;
                let trial = if self.cfg.prune_retrain {
                    self.fit(m, self.cfg.candidate_epochs)?
                } else {
                    self.score(m)?
                };
                trials.push(trial);
            }
            // First minimum wins ties.
            let mut best = 0;
            for (i, t) in trials.iter().enumerate() {
                if t.val_mse < trials[best].val_mse {
                    best = i;
                }
            }
            let ok = trials[best].val_mse <= current.val_mse + a;
            for (i, (id, t)) in ids.iter().zip(&trials).enumerate() {
                if i != best || !ok {
                    self.log(StepAction::Remove, format!("remove {id}"), &current, t, false);
                }
            }
            if !ok {
                break;
            }
            let chosen = trials.swap_remove(best);
            self.log(
                StepAction::Remove,
                format!("remove {}", ids[best]),
                &current,
                &chosen,
                true,
            );
            current = chosen;
        }
        Ok(current)
    }
}

fn run(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
    body: impl FnOnce(&mut Builder<'_>, Scored) -> Result<Scored>,
) -> Result<(SfnModel, SearchTrace)> {
    let (mut builder, empty) = Builder::new(data, train_cfg, cfg)?;
    let done = body(&mut builder, empty)?;
    Ok((done.model, builder.trace))
}

/// FLK: grow one link at a time, restarting the candidate sweep after each
/// admission, until a full sweep admits nothing.
pub fn forward_link_by_link(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    run(data, train_cfg, cfg, |b, empty| b.forward(empty, None))
}

/// FLY: add whole layers as a unit until one is rejected or the depth cap
/// is reached.
pub fn forward_layer_by_layer(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    run(data, train_cfg, cfg, |b, empty| b.layers(empty))
}

/// FRS: as FLK, but each sweep only tries `ceil(rf * N)` of the `N` legal
/// candidates, drawn without replacement and tried in canonical order.
pub fn forward_reduced_random(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    let cfg = SearchConfig {
        algorithm: Algorithm::ForwardReducedRandom,
        ..cfg.clone()
    };
    run(data, train_cfg, &cfg, |b, empty| b.forward(empty, None))
}

/// Backward-greedy pruning of an existing model. Each round tries removing
/// every link (with its subtree), retrains, and commits the removal with the
/// lowest validation MSE if that MSE is within `a` of the current one.
pub fn prune(
    model: &SfnModel,
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    let cfg = SearchConfig {
        max_depth: model.max_depth(),
        ..cfg.clone()
    };
    let (mut builder, _) = Builder::new(data, train_cfg, &cfg)?;
    if model.input_arity() != data.train.arity() {
        return Err(SfnError::LengthMismatch {
            expected: model.input_arity(),
            got: data.train.arity(),
        });
    }
    let start = builder.score(model.clone())?;
    let done = builder.prune(start)?;
    Ok((done.model, builder.trace))
}

/// B: FLY, then prune.
pub fn backward_build(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    run(data, train_cfg, cfg, |b, empty| {
        let grown = b.layers(empty)?;
        b.prune(grown)
    })
}

/// FB: FLK with a pruning pass after every `k_prune_interval` admissions and
/// once more at the end.
pub fn forward_backward(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    run(data, train_cfg, cfg, |b, empty| {
        let k = b.cfg.k_prune_interval;
        let grown = b.forward(empty, Some(k))?;
        b.prune(grown)
    })
}

/// Runs `cfg.algorithm`.
pub fn build(
    data: SearchData<'_>,
    train_cfg: &TrainConfig,
    cfg: &SearchConfig,
) -> Result<(SfnModel, SearchTrace)> {
    match cfg.algorithm {
        Algorithm::ForwardLinkByLink => forward_link_by_link(data, train_cfg, cfg),
        Algorithm::ForwardLayerByLayer => forward_layer_by_layer(data, train_cfg, cfg),
        Algorithm::ForwardReducedRandom => forward_reduced_random(data, train_cfg, cfg),
        Algorithm::Backward => backward_build(data, train_cfg, cfg),
        Algorithm::ForwardBackward => forward_backward(data, train_cfg, cfg),
    }
}
