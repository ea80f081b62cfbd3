//! Order statistics used to summarize return distributions.

use crate::{Error, Result};

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Interquartile mean with fractional weights at the quartile boundaries.
///
/// Order statistic `j` (1-based) owns the rank mass `((j-1)/n, j/n]`; its
/// weight is the overlap of that interval with `(0.25, 0.75]`.
pub fn iqm(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("iqm of an empty sample"));
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (j, x) in xs.iter().enumerate() {
        let lo = (j as f64 / n).max(0.25);
        let hi = ((j + 1) as f64 / n).min(0.75);
        if hi > lo {
            let w = hi - lo;
            num += w * x;
            den += w;
        }
    }
    Ok(num / den)
}

/// Linear-interpolation quantile at position `q (n - 1)` of the sorted sample.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("quantile of an empty sample"));
    }
    quantile_sorted(&sorted(samples), q)
}

pub fn quantile_sorted(xs: &[f64], q: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile level {q} outside [0, 1]")));
    }
    let pos = q * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(if lo == hi {
        xs[lo]
    } else {
        xs[lo] + frac * (xs[hi] - xs[lo])
    })
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Population variance (divides by `n`).
pub fn variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / samples.len() as f64
}

/// Population standard deviation.
pub fn std_dev(samples: &[f64]) -> f64 {
    variance(samples).sqrt()
}
