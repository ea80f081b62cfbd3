//! Landscape surface models over the unit cube.
//!
//! Two families are available: exact linear-kernel RBF interpolation
//! ([`ModelKind::Ilm`]) and independent Gaussian-process posterior means
//! ([`ModelKind::Igpr`]). A [`SurfaceTriple`] holds one surface per band
//! (upper quantile, IQM, lower quantile), each fitted independently.

mod cv;
mod gp;
mod ilm;
pub mod optim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, format_cv_table, CvReport};
pub use gp::{fit_igpr, lml, GpBounds, GpOptions, GpParams, IgprSurface};
pub use ilm::{fit_ilm, IlmSurface};

use crate::dataset::{Affine, Band, PerConfigStats};
use crate::space::UnitVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ilm,
    Igpr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Ilm, ModelKind::Igpr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ilm => "ilm",
            ModelKind::Igpr => "igpr",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ilm" => Ok(ModelKind::Ilm),
            "igpr" => Ok(ModelKind::Igpr),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

/// A fitted landscape surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Surface {
    Ilm(IlmSurface),
    Igpr(IgprSurface),
}

impl Surface {
    pub fn fit(kind: ModelKind, points: &[(UnitVector, f64)], gp: &GpOptions) -> Result<Self> {
        Ok(match kind {
            ModelKind::Ilm => Surface::Ilm(fit_ilm(points)?),
            ModelKind::Igpr => Surface::Igpr(fit_igpr(points, gp)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Surface::Ilm(_) => ModelKind::Ilm,
            Surface::Igpr(_) => ModelKind::Igpr,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Surface::Ilm(s) => s.dims(),
            Surface::Igpr(s) => s.dims(),
        }
    }

    /// Evaluates the surface at a point of the unit cube.
    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: u.len(),
            });
        }
        if let Some(x) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidArgument(format!("query coordinate {x} outside the unit cube")));
        }
        Ok(self.predict_unchecked(u))
    }

    pub(crate) fn predict_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            Surface::Ilm(s) => s.predict(u),
            Surface::Igpr(s) => s.predict(u),
        }
    }
}

/// Upper, mean and lower surfaces fitted on normalized targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTriple {
    pub kind: ModelKind,
    pub upper: Surface,
    pub mean: Surface,
    pub lower: Surface,
    /// Map from raw returns to the normalized scale the surfaces live on.
    pub normalization: Affine,
}

impl SurfaceTriple {
    pub fn band(&self, band: Band) -> &Surface {
        match band {
            Band::Upper => &self.upper,
            Band::Mean => &self.mean,
            Band::Lower => &self.lower,
        }
    }

    /// Prediction mapped back to raw return units.
    pub fn predict_raw(&self, band: Band, u: &[f64]) -> Result<f64> {
        Ok(self.normalization.invert(self.band(band).predict(u)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surfaces serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitOptions {
    pub gp: GpOptions,
}

fn band_points(stats: &PerConfigStats, band: Band, affine: &Affine) -> Vec<(UnitVector, f64)> {
    stats
        .points()
        .into_iter()
        .zip(stats.targets(band))
        .map(|(u, y)| (u, affine.apply(y)))
        .collect()
}

/// Fits the three band surfaces independently on `affine`-normalized
/// statistics.
pub fn fit_surface_triple(
    stats: &PerConfigStats,
    kind: ModelKind,
    opts: &FitOptions,
    affine: Affine,
) -> Result<SurfaceTriple> {
    if stats.is_empty() {
        return Err(Error::Empty("per-configuration statistics"));
    }
    let fit = |band: Band| {
        Surface::fit(kind, &band_points(stats, band, &affine), &opts.gp).map_err(|e| Error::SurfaceFit {
            band: band.name(),
            source: Box::new(e),
        })
    };
    Ok(SurfaceTriple {
        kind,
        upper: fit(Band::Upper)?,
        mean: fit(Band::Mean)?,
        lower: fit(Band::Lower)?,
        normalization: affine,
    })
}

/// A 2-D slice of the unit cube: two free dimensions on a regular grid, all
/// other coordinates fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_dim: usize,
    pub y_dim: usize,
    pub resolution: usize,
    /// Full unit-cube point; the free dimensions' entries are ignored.
    pub fixed: Vec<f64>,
}

impl GridSpec {
    /// Slice through `x_dim`, `y_dim` with the remaining dimensions at 0.5.
    pub fn midpoint(dims: usize, x_dim: usize, y_dim: usize, resolution: usize) -> Self {
        Self {
            x_dim,
            y_dim,
            resolution,
            fixed: vec![0.5; dims],
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        let r = self.resolution;
        (0..r).map(|i| i as f64 / (r - 1) as f64).collect()
    }

    fn validate(&self, dims: usize) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidArgument("grid resolution must be >= 2".into()));
        }
        if self.x_dim >= dims || self.y_dim >= dims || self.x_dim == self.y_dim {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions ({}, {}) invalid for a {dims}-dimensional surface",
                self.x_dim, self.y_dim
            )));
        }
        if self.fixed.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: self.fixed.len(),
            });
        }
        if self.fixed.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument("fixed coordinates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Surface values on a grid; `values[i * resolution + j]` is at
/// `(positions[i], positions[j])` along `(x_dim, y_dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridValues {
    pub spec: GridSpec,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridValues {
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let positions = spec.positions();
        let values = positions
            .iter()
            .flat_map(|&x| positions.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { spec, positions, values }
    }

    pub fn resolution(&self) -> usize {
        self.spec.resolution
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.resolution + j]
    }

    /// Unit-cube point of node `(i, j)`.
    pub fn node_point(&self, i: usize, j: usize) -> Vec<f64> {
        let mut p = self.spec.fixed.clone();
        p[self.spec.x_dim] = self.positions[i];
        p[self.spec.y_dim] = self.positions[j];
        p
    }

    /// Node with the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let r = self.spec.resolution;
        let k = self
            .values
            .iter()
            .enumerate()
            .fold(0, |best, (k, v)| if *v > self.values[best] { k } else { best });
        (k / r, k % r)
    }
}

pub fn grid_eval(surface: &Surface, spec: &GridSpec) -> Result<GridValues> {
    spec.validate(surface.dims())?;
    let positions = spec.positions();
    let mut values = Vec::with_capacity(positions.len() * positions.len());
    let mut p = spec.fixed.clone();
    for &x in &positions {
        p[spec.x_dim] = x;
        for &y in &positions {
            p[spec.y_dim] = y;
            values.push(surface.predict_unchecked(&p));
        }
    }
    Ok(GridValues {
        spec: spec.clone(),
        positions,
        values,
    })
}
