//! Search spaces and the monotone map between the unit cube and raw
//! hyperparameter values.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterDef {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub scale: Scale,
}

impl HyperparameterDef {
    pub fn new(name: impl Into<String>, low: f64, high: f64, scale: Scale) -> Self {
        Self {
            name: name.into(),
            low,
            high,
            scale,
        }
    }

    pub fn linear(name: impl Into<String>, low: f64, high: f64) -> Self {
        Self::new(name, low, high, Scale::Linear)
    }

    pub fn log(name: impl Into<String>, low: f64, high: f64) -> Self {
        Self::new(name, low, high, Scale::Log)
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidSpace("empty hyperparameter name".into()));
        }
        if self
            .name
            .chars()
            .any(|c| c == ',' || c == '"' || c.is_whitespace())
        {
            return Err(Error::InvalidSpace(format!(
                "hyperparameter name `{}` contains a comma, quote or whitespace",
                self.name
            )));
        }
        if !self.low.is_finite() || !self.high.is_finite() {
            return Err(Error::InvalidSpace(format!(
                "`{}`: bounds must be finite",
                self.name
            )));
        }
        if self.low >= self.high {
            return Err(Error::InvalidSpace(format!(
                "`{}`: low ({}) must be < high ({})",
                self.name, self.low, self.high
            )));
        }
        if self.scale == Scale::Log && self.low <= 0.0 {
            return Err(Error::InvalidSpace(format!(
                "`{}`: log scale requires low > 0, got {}",
                self.name, self.low
            )));
        }
        Ok(())
    }

    /// Maps a unit coordinate to the raw value. Endpoints map exactly.
    pub fn from_unit(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.low;
        }
        if u >= 1.0 {
            return self.high;
        }
        let v = match self.scale {
            Scale::Linear => self.low + u * (self.high - self.low),
            Scale::Log => {
                let (a, b) = (self.low.log10(), self.high.log10());
                10f64.powf(a + u * (b - a))
            }
        };
        v.clamp(self.low, self.high)
    }

    pub fn to_unit(&self, value: f64) -> Result<f64> {
        if !(value >= self.low && value <= self.high) {
            return Err(Error::OutOfBounds {
                name: self.name.clone(),
                value,
                low: self.low,
                high: self.high,
            });
        }
        let u = match self.scale {
            Scale::Linear => (value - self.low) / (self.high - self.low),
            Scale::Log => {
                let (a, b) = (self.low.log10(), self.high.log10());
                (value.log10() - a) / (b - a)
            }
        };
        Ok(u.clamp(0.0, 1.0))
    }
}

/// An ordered, validated set of continuous hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceFile", into = "SpaceFile")]
pub struct SearchSpace {
    dims: Vec<HyperparameterDef>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    dims: Vec<HyperparameterDef>,
}

impl TryFrom<SpaceFile> for SearchSpace {
    type Error = Error;

    fn try_from(file: SpaceFile) -> Result<Self> {
        build_space(file.dims)
    }
}

impl From<SearchSpace> for SpaceFile {
    fn from(space: SearchSpace) -> Self {
        SpaceFile { dims: space.dims }
    }
}

/// Validates `defs` and builds a space, keeping the given dimension order.
pub fn build_space(defs: Vec<HyperparameterDef>) -> Result<SearchSpace> {
    if defs.is_empty() {
        return Err(Error::InvalidSpace("a space needs at least one dimension".into()));
    }
    for (i, d) in defs.iter().enumerate() {
        d.validate()?;
        if defs[..i].iter().any(|o| o.name == d.name) {
            return Err(Error::InvalidSpace(format!("duplicate name `{}`", d.name)));
        }
    }
    Ok(SearchSpace { dims: defs })
}

impl SearchSpace {
    pub fn dims(&self) -> &[HyperparameterDef] {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dims.iter().map(|d| d.name.as_str())
    }

    pub fn to_config(&self, u: &UnitVector) -> Result<ConfigVector> {
        self.check_dim(u.len())?;
        Ok(ConfigVector(
            self.dims
                .iter()
                .zip(u.coords())
                .map(|(d, &x)| d.from_unit(x))
                .collect(),
        ))
    }

    pub fn to_unit(&self, c: &ConfigVector) -> Result<UnitVector> {
        self.check_dim(c.len())?;
        let coords = self
            .dims
            .iter()
            .zip(c.values())
            .map(|(d, &v)| d.to_unit(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(UnitVector(coords))
    }

    pub fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got,
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Built-in spaces for the three learners of the reference study.
    pub fn preset(name: &str) -> Option<Self> {
        let lr = HyperparameterDef::log("learning_rate", 1e-4, 0.1);
        let gamma = HyperparameterDef::log("gamma", 0.8, 0.9999);
        let third = match name {
            "dqn" => HyperparameterDef::linear("epsilon_final", 0.01, 1.0),
            "sac" => HyperparameterDef::log("tau", 1e-4, 0.2),
            "ppo" => HyperparameterDef::log("gae_lambda", 0.8, 0.9999),
            _ => return None,
        };
        Some(build_space(vec![lr, gamma, third]).expect("presets are valid"))
    }
}

/// A point of the unit cube `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidArgument(format!(
                "unit coordinate {bad} outside [0, 1]"
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl fmt::Display for UnitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x:.4}")?;
        }
        write!(f, ")")
    }
}

/// Raw hyperparameter values, ordered as the space's dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigVector(Vec<f64>);

impl ConfigVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Euclidean distance in the unit cube.
pub fn unit_distance(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
