//! A synthetic learner with a known, phase-dependent performance landscape.
//!
//! The state is a scalar skill plus the step, training seed and unit-cube
//! coordinates of the last training window. Training a full phase window
//! adds that phase's mean function at the configuration to the skill;
//! evaluation returns `skill + m_i(u) + seed offset + N(0, noise^2)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{derive_seed, TrainError, Trainable};
use crate::space::{ConfigVector, SearchSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub height: f64,
    pub width: f64,
}

impl Bump {
    fn value(&self, u: &[f64]) -> f64 {
        let d2: f64 = self.center.iter().zip(u).map(|(c, x)| (c - x) * (c - x)).sum();
        self.height * (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

/// Ground-truth mean function for steps up to `end_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePhase {
    pub end_step: u64,
    #[serde(default)]
    pub baseline: f64,
    pub bumps: Vec<Bump>,
}

impl SurrogatePhase {
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.baseline + self.bumps.iter().map(|b| b.value(u)).sum::<f64>()
    }
}

/// Axis-aligned box in the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Region {
    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.low.iter().zip(&self.high))
            .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub phases: Vec<SurrogatePhase>,
    /// Magnitude of the per-seed return offset.
    #[serde(default)]
    pub seed_offset: f64,
    /// Standard deviation of per-episode observation noise.
    #[serde(default)]
    pub noise: f64,
    /// Inside this region the seed offset is `+/- seed_offset` by seed parity.
    #[serde(default)]
    pub bimodal_region: Option<Region>,
    #[serde(default = "one")]
    pub skill_gain: f64,
}

fn one() -> f64 {
    1.0
}

impl SurrogateSpec {
    pub fn validate(&self, dims: usize) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(format!("surrogate: {m}")));
        if self.phases.is_empty() {
            return fail("at least one phase is required".into());
        }
        if self.phases[0].end_step == 0 || self.phases.windows(2).any(|w| w[0].end_step >= w[1].end_step) {
            return fail("phase end steps must be positive and strictly increasing".into());
        }
        for p in &self.phases {
            if !p.baseline.is_finite() {
                return fail("non-finite baseline".into());
            }
            for b in &p.bumps {
                if b.center.len() != dims {
                    return fail(format!("bump center has {} coordinates, space has {dims}", b.center.len()));
                }
                if !(b.width > 0.0 && b.width.is_finite()) || !b.height.is_finite() {
                    return fail("bump widths must be positive and heights finite".into());
                }
            }
        }
        if !(self.seed_offset >= 0.0 && self.seed_offset.is_finite()) {
            return fail("seed_offset must be finite and >= 0".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("noise must be finite and >= 0".into());
        }
        if !self.skill_gain.is_finite() {
            return fail("skill_gain must be finite".into());
        }
        if let Some(r) = &self.bimodal_region {
            if r.low.len() != dims || r.high.len() != dims || r.low.iter().zip(&r.high).any(|(l, h)| l > h) {
                return fail("bimodal region must have one low <= high pair per dimension".into());
            }
        }
        Ok(())
    }

    /// Index of the phase whose window contains `step`; steps past the last
    /// window belong to the last phase.
    pub fn phase_at(&self, step: u64) -> usize {
        self.phases
            .iter()
            .position(|p| step <= p.end_step)
            .unwrap_or(self.phases.len() - 1)
    }

    fn window(&self, i: usize) -> (u64, u64) {
        let start = if i == 0 { 0 } else { self.phases[i - 1].end_step };
        (start, self.phases[i].end_step)
    }

    /// Skill gained by training at `u` over `[from, to]`: each phase window
    /// contributes its mean function weighted by the covered fraction.
    pub fn skill_increment(&self, u: &[f64], from: u64, to: u64) -> f64 {
        let last = self.phases.len() - 1;
        let mut total = 0.0;
        for (i, phase) in self.phases.iter().enumerate() {
            let (start, end) = self.window(i);
            let len = (end - start) as f64;
            let hi = if i == last { to } else { to.min(end) };
            let lo = from.max(start);
            if hi > lo {
                total += phase.mean(u) * (hi - lo) as f64 / len;
            }
        }
        self.skill_gain * total
    }

    pub fn seed_offset_for(&self, u: &[f64], seed: u64) -> f64 {
        if self.bimodal_region.as_ref().is_some_and(|r| r.contains(u)) {
            if seed.is_multiple_of(2) {
                self.seed_offset
            } else {
                -self.seed_offset
            }
        } else {
            let h = derive_seed(&[seed, 0x5EED]) as f64 / u64::MAX as f64;
            self.seed_offset * (2.0 * h - 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SurrogateState {
    pub skill: f64,
    pub step: u64,
    pub seed: u64,
    pub unit: Vec<f64>,
}

impl SurrogateState {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 8 * self.unit.len());
        out.extend_from_slice(&self.skill.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.unit.len() as u32).to_le_bytes());
        for x in &self.unit {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, TrainError> {
        let word = |i: usize| -> std::result::Result<[u8; 8], TrainError> {
            bytes
                .get(i..i + 8)
                .and_then(|b| b.try_into().ok())
                .ok_or_else(|| "truncated surrogate state".into())
        };
        let n_bytes: [u8; 4] = bytes
            .get(24..28)
            .and_then(|b| b.try_into().ok())
            .ok_or("truncated surrogate state")?;
        let n = u32::from_le_bytes(n_bytes) as usize;
        if bytes.len() != 28 + 8 * n {
            return Err("malformed surrogate state".into());
        }
        Ok(Self {
            skill: f64::from_le_bytes(word(0)?),
            step: u64::from_le_bytes(word(8)?),
            seed: u64::from_le_bytes(word(16)?),
            unit: (0..n)
                .map(|k| word(28 + 8 * k).map(f64::from_le_bytes))
                .collect::<std::result::Result<_, _>>()?,
        })
    }
}

/// [`Trainable`] backed by a [`SurrogateSpec`].
#[derive(Debug, Clone)]
pub struct SurrogateTrainable {
    space: SearchSpace,
    spec: SurrogateSpec,
}

impl SurrogateTrainable {
    pub fn new(space: SearchSpace, spec: SurrogateSpec) -> Result<Self> {
        spec.validate(space.n())?;
        Ok(Self { space, spec })
    }

    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    /// Noise-free expected return of a state (skill + mean + seed offset).
    pub fn expected_return(&self, state: &[u8]) -> std::result::Result<f64, TrainError> {
        let s = SurrogateState::decode(state)?;
        if s.unit.is_empty() {
            return Err("cannot evaluate an untrained state".into());
        }
        let phase = &self.spec.phases[self.spec.phase_at(s.step)];
        Ok(s.skill + phase.mean(&s.unit) + self.spec.seed_offset_for(&s.unit, s.seed))
    }
}

impl Trainable for SurrogateTrainable {
    fn initial_state(&self) -> Vec<u8> {
        SurrogateState {
            skill: 0.0,
            step: 0,
            seed: 0,
            unit: Vec::new(),
        }
        .encode()
    }

    fn train(
        &self,
        state: &[u8],
        config: &ConfigVector,
        seed: u64,
        from_step: u64,
        to_step: u64,
    ) -> std::result::Result<Vec<u8>, TrainError> {
        if to_step < from_step {
            return Err(format!("training window [{from_step}, {to_step}] is reversed").into());
        }
        let mut s = SurrogateState::decode(state)?;
        let u = self.space.to_unit(config)?.into_inner();
        s.skill += self.spec.skill_increment(&u, from_step, to_step);
        s.step = to_step;
        s.seed = seed;
        s.unit = u;
        Ok(s.encode())
    }

    fn evaluate(&self, state: &[u8], eval_seed: u64, episodes: usize) -> std::result::Result<Vec<f64>, TrainError> {
        let center = self.expected_return(state)?;
        if self.spec.noise == 0.0 {
            return Ok(vec![center; episodes]);
        }
        let normal = Normal::new(center, self.spec.noise)?;
        let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
        Ok((0..episodes).map(|_| normal.sample(&mut rng)).collect())
    }
}
