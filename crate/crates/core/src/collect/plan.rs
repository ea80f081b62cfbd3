use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SurrogateSpec;
use crate::sobol::sobol_sample;
use crate::space::{ConfigVector, SearchSpace, UnitVector};
use crate::{Error, Result};

/// Schedule and seeds of a collection run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    pub space: SearchSpace,
    pub num_configs: usize,
    /// Training seeds, in tie-breaking order.
    pub seeds: Vec<u64>,
    /// Landscape time points `t_ls(1) < ... < t_ls(P)`.
    pub phase_steps: Vec<u64>,
    pub t_final: u64,
    pub eval_episodes: usize,
    pub sampler_seed: u64,
    pub eval_seed: u64,
}

pub const DEFAULT_EVAL_EPISODES: usize = 10;

impl PhasePlan {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidPlan(m));
        if self.num_configs == 0 {
            return fail("num_configs must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return fail("at least one training seed is required".into());
        }
        if self.eval_episodes == 0 {
            return fail("eval_episodes must be >= 1".into());
        }
        if self.phase_steps.is_empty() {
            return fail("at least one phase is required".into());
        }
        if self.phase_steps[0] == 0 {
            return fail("the first landscape step must be > 0".into());
        }
        if self.phase_steps.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("phase_steps must be strictly increasing: {:?}", self.phase_steps));
        }
        if *self.phase_steps.last().unwrap() != self.t_final {
            return fail(format!(
                "the last landscape step ({}) must equal t_final ({})",
                self.phase_steps.last().unwrap(),
                self.t_final
            ));
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return fail(format!("duplicate training seed {s}"));
            }
        }
        for (name, s) in [("sampler_seed", self.sampler_seed), ("eval_seed", self.eval_seed)] {
            if self.seeds.contains(&s) {
                return fail(format!("{name} {s} collides with a training seed"));
            }
        }
        if self.sampler_seed == self.eval_seed {
            return fail("sampler_seed and eval_seed must differ".into());
        }
        Ok(())
    }

    pub fn num_phases(&self) -> usize {
        self.phase_steps.len()
    }

    /// Step at which phase `phase` (1-based) starts.
    pub fn phase_start(&self, phase: usize) -> u64 {
        if phase <= 1 {
            0
        } else {
            self.phase_steps[phase - 2]
        }
    }

    /// Final evaluation steps `floor(0.95 t)`, `floor(0.975 t)`, `t`.
    pub fn final_checkpoints(&self) -> [u64; 3] {
        let t = self.t_final;
        [t * 95 / 100, t * 975 / 1000, t]
    }

    /// Training runs per phase.
    pub fn pairs(&self) -> Vec<(usize, u64)> {
        (0..self.num_configs)
            .flat_map(|c| self.seeds.iter().map(move |&s| (c, s)))
            .collect()
    }

    /// The sampled configurations, as unit-cube points and raw values.
    pub fn configs(&self) -> Result<Vec<(UnitVector, ConfigVector)>> {
        sobol_sample(&self.space, self.num_configs, self.sampler_seed)?
            .into_iter()
            .map(|u| {
                let c = self.space.to_config(&u)?;
                Ok((u, c))
            })
            .collect()
    }
}

/// Where a plan file takes its search space from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Preset { preset: String },
    Path { path: String },
    Inline(SearchSpace),
}

/// On-disk plan: the collection schedule plus the surrogate learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub space: SpaceRef,
    pub num_configs: usize,
    pub seeds: Vec<u64>,
    pub phase_steps: Vec<u64>,
    pub t_final: u64,
    #[serde(default = "default_episodes")]
    pub eval_episodes: usize,
    pub sampler_seed: u64,
    pub eval_seed: u64,
    pub surrogate: SurrogateSpec,
}

fn default_episodes() -> usize {
    DEFAULT_EVAL_EPISODES
}

impl PlanFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Resolves the space reference (relative paths against `base_dir`) and
    /// validates the plan and surrogate.
    pub fn resolve(&self, base_dir: &Path) -> Result<(PhasePlan, SurrogateSpec)> {
        let space = match &self.space {
            SpaceRef::Inline(s) => s.clone(),
            SpaceRef::Preset { preset } => SearchSpace::preset(preset)
                .ok_or_else(|| Error::InvalidPlan(format!("unknown space preset `{preset}`")))?,
            SpaceRef::Path { path } => SearchSpace::load(base_dir.join(path))?,
        };
        let plan = PhasePlan {
            space,
            num_configs: self.num_configs,
            seeds: self.seeds.clone(),
            phase_steps: self.phase_steps.clone(),
            t_final: self.t_final,
            eval_episodes: self.eval_episodes,
            sampler_seed: self.sampler_seed,
            eval_seed: self.eval_seed,
        };
        plan.validate()?;
        self.surrogate.validate(plan.space.n())?;
        Ok((plan, self.surrogate.clone()))
    }
}
