use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::models::Surface;
use crate::space::UnitVector;
use crate::{Error, Result};

/// One curve per anchor along dimension `dim`, all other coordinates fixed
/// to the anchor's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IceCurveSet {
    pub dim: usize,
    pub resolution: usize,
    pub anchors: Vec<UnitVector>,
    /// Unit positions of the varied dimension.
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
}

pub fn ice_curves(surface: &Surface, dim: usize, anchors: &[UnitVector], resolution: usize) -> Result<IceCurveSet> {
    let n = surface.dims();
    if dim >= n {
        return Err(Error::InvalidArgument(format!("ICE dimension {dim} out of range for {n} dimensions")));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("ICE resolution must be >= 2".into()));
    }
    if let Some(a) = anchors.iter().find(|a| a.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    let grid: Vec<f64> = (0..resolution).map(|i| i as f64 / (resolution - 1) as f64).collect();
    let curves = anchors
        .iter()
        .map(|a| {
            let mut p = a.coords().to_vec();
            grid.iter()
                .map(|&x| {
                    p[dim] = x;
                    surface.predict_unchecked(&p)
                })
                .collect()
        })
        .collect();
    Ok(IceCurveSet {
        dim,
        resolution,
        anchors: anchors.to_vec(),
        grid,
        curves,
    })
}

impl IceCurveSet {
    /// `anchor_id,position,value` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["anchor_id", "position", "value"])?;
        for (id, curve) in self.curves.iter().enumerate() {
            for (x, v) in self.grid.iter().zip(curve) {
                w.write_record([id.to_string(), x.to_string(), v.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}
