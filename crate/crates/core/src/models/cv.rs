use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FitOptions, ModelKind, Surface};
use crate::dataset::{Affine, Band, PerConfigStats};
use crate::space::UnitVector;
use crate::stats::{mean, std_dev};
use crate::{par, Error, Result};

/// K-fold cross-validation scores of the mean surface on normalized IQMs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub phase_index: usize,
    pub kind: ModelKind,
    pub k: usize,
    pub seed: u64,
    pub fold_mse: Vec<f64>,
    pub fold_mae: Vec<f64>,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
}

/// Shuffles configurations with `seed`, splits them into `k` near-equal
/// folds and scores each fold with a mean surface fitted on the others.
/// Standard deviations are population (ddof = 0) over folds.
pub fn cross_validate(
    stats: &PerConfigStats,
    affine: &Affine,
    kind: ModelKind,
    k: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<CvReport> {
    let m = stats.len();
    if k < 2 {
        return Err(Error::InvalidArgument("cross-validation needs k >= 2".into()));
    }
    if m < k {
        return Err(Error::InvalidArgument(format!(
            "{m} configurations cannot be split into {k} folds"
        )));
    }
    let points: Vec<(UnitVector, f64)> = stats
        .points()
        .into_iter()
        .zip(stats.targets(Band::Mean))
        .map(|(u, y)| (u, affine.apply(y)))
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = m / k + usize::from(f < m % k);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }

    let scores = par::map(&folds, |held: &Vec<usize>| -> Result<(f64, f64)> {
        let train: Vec<(UnitVector, f64)> = (0..m)
            .filter(|i| !held.contains(i))
            .map(|i| points[i].clone())
            .collect();
        let surface = Surface::fit(kind, &train, &opts.gp)?;
        let errors: Vec<f64> = held
            .iter()
            .map(|&i| surface.predict_unchecked(points[i].0.coords()) - points[i].1)
            .collect();
        let mse = mean(&errors.iter().map(|e| e * e).collect::<Vec<_>>());
        let mae = mean(&errors.iter().map(|e| e.abs()).collect::<Vec<_>>());
        Ok((mse, mae))
    });
    let (mut fold_mse, mut fold_mae) = (Vec::with_capacity(k), Vec::with_capacity(k));
    for s in scores {
        let (mse, mae) = s?;
        fold_mse.push(mse);
        fold_mae.push(mae);
    }
    Ok(CvReport {
        phase_index: stats.phase_index,
        kind,
        k,
        seed,
        mse_mean: mean(&fold_mse),
        mse_std: std_dev(&fold_mse),
        mae_mean: mean(&fold_mae),
        mae_std: std_dev(&fold_mae),
        fold_mse,
        fold_mae,
    })
}

/// Per-phase `mean ± std` table of MSE and MAE.
pub fn format_cv_table(reports: &[CvReport]) -> String {
    let mut out = String::from("Phase | Mean squared error | Mean absolute error\n");
    for r in reports {
        out.push_str(&format!(
            "{:<5} | {:.4} ± {:.4} | {:.4} ± {:.4}\n",
            r.phase_index, r.mse_mean, r.mse_std, r.mae_mean, r.mae_std
        ));
    }
    out
}
