//! Greedy multi-phase data collection.
//!
//! Every phase trains all (configuration, seed) pairs from the snapshot
//! selected in the previous phase, evaluates them at the phase boundary
//! (landscape records), trains each snapshot on to the end of training for
//! the final-performance records, and picks the snapshot that seeds the
//! next phase.

mod plan;
mod store;
mod surrogate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use plan::{PhasePlan, PlanFile, SpaceRef, DEFAULT_EVAL_EPISODES};
pub use store::{SnapshotKey, SnapshotStore};
pub use surrogate::{Bump, Region, SurrogatePhase, SurrogateSpec, SurrogateTrainable};

use crate::dataset::{EvalKind, LandscapeDataset, SampleRow};
use crate::space::{ConfigVector, UnitVector};
use crate::stats::{iqm, mean};
use crate::{par, Error, Result};

pub type TrainError = Box<dyn std::error::Error + Send + Sync>;

/// A learner that can be trained over a step window and evaluated.
///
/// Implementations must be deterministic: identical arguments give identical
/// outputs. States are opaque byte blobs so they can be snapshotted.
pub trait Trainable: Sync {
    fn initial_state(&self) -> Vec<u8>;

    fn train(
        &self,
        state: &[u8],
        config: &ConfigVector,
        seed: u64,
        from_step: u64,
        to_step: u64,
    ) -> std::result::Result<Vec<u8>, TrainError>;

    fn evaluate(&self, state: &[u8], eval_seed: u64, episodes: usize) -> std::result::Result<Vec<f64>, TrainError>;
}

/// A saved learner state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub key: SnapshotKey,
    pub state: Vec<u8>,
}

/// The (configuration, seed) pair whose snapshot seeds the next phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub phase_index: usize,
    pub conf_index: usize,
    pub seed: u64,
}

/// Everything produced by [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct RunArchive {
    pub configs: Vec<UnitVector>,
    pub landscape: LandscapeDataset,
    pub final_records: LandscapeDataset,
    /// One entry per phase, in order.
    pub chosen: Vec<Selection>,
    /// Snapshot each phase started from (`None` for the initial state).
    pub incoming: Vec<Option<SnapshotKey>>,
    pub snapshots: SnapshotStore,
}

impl RunArchive {
    /// Mean of the pooled final-checkpoint returns for one (phase, conf, seed).
    pub fn fitness(&self, phase: usize, conf_index: usize, seed: u64) -> Option<f64> {
        let returns: Vec<f64> = self
            .final_records
            .rows()
            .iter()
            .filter(|r| r.phase_index == phase && r.conf_index == conf_index && r.seed == seed)
            .map(|r| r.ret)
            .collect();
        (!returns.is_empty()).then(|| mean(&returns))
    }
}

/// Output of one phase's training and landscape evaluation.
#[derive(Debug, Clone)]
pub struct PhaseOutput {
    pub rows: Vec<SampleRow>,
    pub snapshots: Vec<Snapshot>,
}

/// Splitmix64-style mixing of several words into one stream seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

fn eval_stream(plan: &PhasePlan, phase: usize, conf: usize, seed: u64, checkpoint: u64) -> u64 {
    derive_seed(&[plan.eval_seed, phase as u64, conf as u64, seed, checkpoint])
}

fn train_error(phase: usize, conf_index: usize, seed: u64) -> impl Fn(TrainError) -> Error {
    move |e| Error::Training {
        phase,
        conf_index,
        seed,
        reason: e.to_string(),
    }
}

fn sample_rows(
    configs: &[(UnitVector, ConfigVector)],
    phase: usize,
    conf: usize,
    seed: u64,
    checkpoint: u64,
    kind: EvalKind,
    returns: Vec<f64>,
) -> Vec<SampleRow> {
    let (unit, raw) = &configs[conf];
    returns
        .into_iter()
        .enumerate()
        .map(|(episode, ret)| SampleRow {
            phase_index: phase,
            checkpoint_step: checkpoint,
            conf_index: conf,
            seed,
            episode,
            eval_kind: kind,
            unit: unit.coords().to_vec(),
            hp: raw.values().to_vec(),
            ret,
        })
        .collect()
}

fn check_returns(returns: &[f64], expected: usize, phase: usize, conf: usize, seed: u64) -> Result<()> {
    let fail = |reason: String| Error::Training {
        phase,
        conf_index: conf,
        seed,
        reason,
    };
    if returns.len() != expected {
        return Err(fail(format!("expected {expected} returns, got {}", returns.len())));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(fail("non-finite return".into()));
    }
    Ok(())
}

/// Trains every (configuration, seed) pair of phase `phase` (1-based) from
/// `incoming`, snapshots the results and records landscape returns at the
/// phase boundary.
pub fn run_phase(
    plan: &PhasePlan,
    phase: usize,
    trainable: &dyn Trainable,
    incoming: &[u8],
) -> Result<PhaseOutput> {
    run_phase_cached(plan, phase, trainable, incoming, &plan.configs()?, None)
}

fn run_phase_cached(
    plan: &PhasePlan,
    phase: usize,
    trainable: &dyn Trainable,
    incoming: &[u8],
    configs: &[(UnitVector, ConfigVector)],
    cache: Option<&SnapshotStore>,
) -> Result<PhaseOutput> {
    if phase == 0 || phase > plan.phase_steps.len() {
        return Err(Error::InvalidArgument(format!(
            "phase {phase} outside 1..={}",
            plan.phase_steps.len()
        )));
    }
    let from = plan.phase_start(phase);
    let to = plan.phase_steps[phase - 1];
    let pairs = plan.pairs();
    let results = par::map(&pairs, |&(conf, seed)| -> Result<(Snapshot, Vec<SampleRow>)> {
        let key = SnapshotKey::new(phase, conf, seed);
        let state = match cache.and_then(|c| c.get(&key)) {
            Some(state) => state.to_vec(),
            None => trainable
                .train(incoming, &configs[conf].1, seed, from, to)
                .map_err(train_error(phase, conf, seed))?,
        };
        let returns = trainable
            .evaluate(&state, eval_stream(plan, phase, conf, seed, to), plan.eval_episodes)
            .map_err(train_error(phase, conf, seed))?;
        check_returns(&returns, plan.eval_episodes, phase, conf, seed)?;
        let rows = sample_rows(configs, phase, conf, seed, to, EvalKind::Landscape, returns);
        Ok((Snapshot { key, state }, rows))
    });
    let mut out = PhaseOutput {
        rows: Vec::with_capacity(pairs.len() * plan.eval_episodes),
        snapshots: Vec::with_capacity(pairs.len()),
    };
    for r in results {
        let (snap, rows) = r?;
        out.snapshots.push(snap);
        out.rows.extend(rows);
    }
    Ok(out)
}

/// Trains each phase snapshot on to the end of training and records returns
/// at the three final checkpoints.
///
/// Checkpoints that precede the snapshot's own step (late phases) are
/// evaluated on the snapshot itself without further training.
pub fn evaluate_final(
    plan: &PhasePlan,
    trainable: &dyn Trainable,
    snapshots: &[Snapshot],
) -> Result<Vec<SampleRow>> {
    evaluate_final_with(plan, trainable, snapshots, &plan.configs()?)
}

fn evaluate_final_with(
    plan: &PhasePlan,
    trainable: &dyn Trainable,
    snapshots: &[Snapshot],
    configs: &[(UnitVector, ConfigVector)],
) -> Result<Vec<SampleRow>> {
    let checkpoints = plan.final_checkpoints();
    let results = par::map(snapshots, |snap| -> Result<Vec<SampleRow>> {
        let SnapshotKey {
            phase_index: phase,
            conf_index: conf,
            seed,
        } = snap.key;
        if conf >= configs.len() || phase == 0 || phase > plan.phase_steps.len() {
            return Err(Error::InvalidArgument(format!("snapshot {} does not belong to the plan", snap.key)));
        }
        let mut state = snap.state.clone();
        let mut step = plan.phase_steps[phase - 1];
        let mut rows = Vec::new();
        for &cp in &checkpoints {
            if cp > step {
                state = trainable
                    .train(&state, &configs[conf].1, seed, step, cp)
                    .map_err(train_error(phase, conf, seed))?;
                step = cp;
            }
            let returns = trainable
                .evaluate(&state, eval_stream(plan, phase, conf, seed, cp), plan.eval_episodes)
                .map_err(train_error(phase, conf, seed))?;
            check_returns(&returns, plan.eval_episodes, phase, conf, seed)?;
            rows.extend(sample_rows(configs, phase, conf, seed, cp, EvalKind::Final, returns));
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Picks the configuration with the highest IQM of its pooled final returns,
/// then the seed with the highest IQM within it. Ties go to the lowest
/// configuration index, then the earliest seed in `seeds`.
pub fn select_best(
    final_rows: &[SampleRow],
    phase: usize,
    num_configs: usize,
    seeds: &[u64],
) -> Result<Selection> {
    let mut grouped: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
    for r in final_rows
        .iter()
        .filter(|r| r.phase_index == phase && r.eval_kind == EvalKind::Final)
    {
        grouped.entry((r.conf_index, r.seed)).or_default().push(r.ret);
    }
    if grouped.is_empty() {
        return Err(Error::MissingRecords(format!("no final records for phase {phase}")));
    }
    for conf in 0..num_configs {
        for &seed in seeds {
            if !grouped.contains_key(&(conf, seed)) {
                return Err(Error::MissingRecords(format!(
                    "phase {phase}: no final records for config {conf}, seed {seed}"
                )));
            }
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for conf in 0..num_configs {
        let pooled: Vec<f64> = seeds.iter().flat_map(|s| grouped[&(conf, *s)].iter().copied()).collect();
        let score = iqm(&pooled)?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((conf, score));
        }
    }
    let (conf, _) = best.expect("num_configs >= 1");
    let mut best_seed: Option<(u64, f64)> = None;
    for &seed in seeds {
        let score = iqm(&grouped[&(conf, seed)])?;
        if best_seed.is_none_or(|(_, b)| score > b) {
            best_seed = Some((seed, score));
        }
    }
    Ok(Selection {
        phase_index: phase,
        conf_index: conf,
        seed: best_seed.expect("seeds non-empty").0,
    })
}

/// Runs every phase in order, chaining each phase from the best snapshot of
/// the previous one.
pub fn run_pipeline(plan: &PhasePlan, trainable: &dyn Trainable) -> Result<RunArchive> {
    run_pipeline_cached(plan, trainable, None)
}

/// Like [`run_pipeline`], but reuses snapshots found in `cache` instead of
/// retraining them. The cache must come from a run of the same plan.
pub fn run_pipeline_cached(
    plan: &PhasePlan,
    trainable: &dyn Trainable,
    cache: Option<&SnapshotStore>,
) -> Result<RunArchive> {
    plan.validate()?;
    let configs = plan.configs()?;
    let mut store = SnapshotStore::default();
    let mut landscape = Vec::new();
    let mut finals = Vec::new();
    let mut chosen = Vec::new();
    let mut incoming_keys = Vec::new();
    let mut incoming = trainable.initial_state();
    let mut incoming_key = None;
    for phase in 1..=plan.phase_steps.len() {
        incoming_keys.push(incoming_key);
        let out = run_phase_cached(plan, phase, trainable, &incoming, &configs, cache)?;
        let final_rows = evaluate_final_with(plan, trainable, &out.snapshots, &configs)?;
        let sel = select_best(&final_rows, phase, plan.num_configs, &plan.seeds)?;
        for snap in out.snapshots {
            store.insert(snap.key, snap.state);
        }
        let key = SnapshotKey::new(phase, sel.conf_index, sel.seed);
        incoming = store.get(&key).expect("selected snapshot exists").to_vec();
        incoming_key = Some(key);
        chosen.push(sel);
        landscape.extend(out.rows);
        finals.extend(final_rows);
    }
    Ok(RunArchive {
        configs: configs.into_iter().map(|(u, _)| u).collect(),
        landscape: LandscapeDataset::new(plan.space.clone(), landscape)?,
        final_records: LandscapeDataset::new(plan.space.clone(), finals)?,
        chosen,
        incoming: incoming_keys,
        snapshots: store,
    })
}
