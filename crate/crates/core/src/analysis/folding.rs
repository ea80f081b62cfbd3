use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats::{mean, variance};
use crate::{Error, Result};

/// Below this many samples the test is not run.
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Unimodal,
    Multimodal,
    Uncategorized,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Unimodal, Category::Multimodal, Category::Uncategorized];

    pub fn name(self) -> &'static str {
        match self {
            Category::Unimodal => "unimodal",
            Category::Multimodal => "multimodal",
            Category::Uncategorized => "uncategorized",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown modality category `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldingStatistic {
    pub phi: f64,
    pub pivot: f64,
}

/// Φ = 4·Var(|X − s*|)/Var(X) with s* minimising the folded variance.
///
/// On each gap between consecutive order statistics E|X − s| is linear in s,
/// so Var(|X − s|) = Var(X) + (μ − s)² − (E|X − s|)² is a convex quadratic
/// there. Minimising it in closed form per gap gives the exact pivot.
pub fn folding_statistic(samples: &[f64]) -> Result<FoldingStatistic> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("folding statistic needs at least 2 samples".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let mu = mean(samples);
    let var = variance(samples);
    let scale = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if var <= (1e-12 * scale).powi(2) {
        return Err(Error::ZeroVariance);
    }

    // centred, so the quadratic's coefficients stay well conditioned
    let mut xs: Vec<f64> = samples.iter().map(|x| x - mu).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let total: f64 = xs.iter().sum();

    let mut best = (f64::INFINITY, 0.0);
    let mut below = 0.0;
    for k in 1..n {
        below += xs[k - 1];
        let (lo, hi) = (xs[k - 1], xs[k]);
        let a = (2.0 * k as f64 - nf) / nf;
        let b = (total - 2.0 * below) / nf;
        let s = if a.abs() < 1.0 { (a * b / (1.0 - a * a)).clamp(lo, hi) } else { lo };
        let e = a * s + b;
        let f = var + s * s - e * e;
        if f < best.0 {
            best = (f, s);
        }
    }
    let s = best.1;
    let folded: Vec<f64> = xs.iter().map(|x| (x - s).abs()).collect();
    let phi = (4.0 * variance(&folded) / var).max(0.0);
    Ok(FoldingStatistic { phi, pivot: s + mu })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldingOutcome {
    /// `None` when the test was skipped (too few samples or zero variance).
    pub phi: Option<f64>,
    pub pivot: Option<f64>,
    pub p_value: f64,
    pub category: Category,
    pub sample_count: usize,
}

impl FoldingOutcome {
    fn skipped(sample_count: usize) -> Self {
        Self {
            phi: None,
            pivot: None,
            p_value: 1.0,
            category: Category::Uncategorized,
            sample_count,
        }
    }
}

/// Monte Carlo reference distribution of |Φ − 1| for uniform samples of size `n`.
#[derive(Debug, Clone)]
pub struct FoldingNull {
    deviations: Vec<f64>,
}

impl FoldingNull {
    pub fn new(n: usize, draws: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("null sample size must be >= 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = vec![0.0; n];
        let mut deviations = Vec::with_capacity(draws);
        for _ in 0..draws {
            buf.iter_mut().for_each(|x| *x = rng.random::<f64>());
            // a uniform draw with zero variance has probability zero
            let phi = folding_statistic(&buf)?.phi;
            deviations.push((phi - 1.0).abs());
        }
        deviations.sort_by(f64::total_cmp);
        Ok(Self { deviations })
    }

    pub fn draws(&self) -> usize {
        self.deviations.len()
    }

    pub fn p_value(&self, phi: f64) -> f64 {
        let d = (phi - 1.0).abs();
        let at_least = self.deviations.len() - self.deviations.partition_point(|&x| x < d);
        (1 + at_least) as f64 / (self.deviations.len() + 1) as f64
    }
}

pub fn folding_test(samples: &[f64], alpha: f64, draws: usize, seed: u64) -> Result<FoldingOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if draws < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 null draws, got {draws}")));
    }
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Ok(FoldingOutcome::skipped(n));
    }
    let stat = match folding_statistic(samples) {
        Ok(s) => s,
        Err(Error::ZeroVariance) => return Ok(FoldingOutcome::skipped(n)),
        Err(e) => return Err(e),
    };
    let p_value = FoldingNull::new(n, draws, seed)?.p_value(stat.phi);
    let category = match (p_value < alpha, stat.phi >= 1.0) {
        (true, true) => Category::Unimodal,
        (true, false) => Category::Multimodal,
        (false, _) => Category::Uncategorized,
    };
    Ok(FoldingOutcome {
        phi: Some(stat.phi),
        pivot: Some(stat.pivot),
        p_value,
        category,
        sample_count: n,
    })
}
