use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::models::GridValues;
use crate::{Error, Result};

/// Grid nodes strictly above (maxima) or below (minima) every existing
/// Moore neighbour.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOptima {
    pub maxima: Vec<(usize, usize)>,
    pub minima: Vec<(usize, usize)>,
}

pub fn find_local_optima(grid: &GridValues) -> Result<GridOptima> {
    let r = grid.resolution();
    if r < 3 {
        return Err(Error::InvalidArgument(format!("local optima need at least a 3x3 grid, got {r}x{r}")));
    }
    let mut out = GridOptima::default();
    for i in 0..r {
        for j in 0..r {
            let v = grid.get(i, j);
            let (mut above, mut below) = (true, true);
            for ni in i.saturating_sub(1)..=(i + 1).min(r - 1) {
                for nj in j.saturating_sub(1)..=(j + 1).min(r - 1) {
                    if (ni, nj) == (i, j) {
                        continue;
                    }
                    let w = grid.get(ni, nj);
                    above &= v > w;
                    below &= v < w;
                }
            }
            if above {
                out.maxima.push((i, j));
            } else if below {
                out.minima.push((i, j));
            }
        }
    }
    Ok(out)
}

/// `band,x_dim,y_dim,x,y,value,kind` rows for several labelled slices.
pub fn write_optima_csv<W: Write>(slices: &[(&str, &GridValues, &GridOptima)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["band", "x_dim", "y_dim", "x", "y", "value", "kind"])?;
    for (label, grid, optima) in slices {
        let tagged = optima
            .maxima
            .iter()
            .map(|n| (n, "maximum"))
            .chain(optima.minima.iter().map(|n| (n, "minimum")));
        for (&(i, j), kind) in tagged {
            w.write_record([
                label.to_string(),
                grid.spec.x_dim.to_string(),
                grid.spec.y_dim.to_string(),
                grid.positions[i].to_string(),
                grid.positions[j].to_string(),
                grid.get(i, j).to_string(),
                kind.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
