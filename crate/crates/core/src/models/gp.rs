//! Gaussian-process regression with a squared-exponential ARD kernel whose
//! hyperparameters maximize the log marginal likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{minimize_box, LbfgsOptions};
use crate::space::UnitVector;
use crate::{par, Error, Result};

const JITTERS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Kernel `k(x, x') = signal_var * exp(-1/2 sum_d (x_d - x'_d)^2 / l_d^2)`
/// plus `noise_var` on the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    pub signal_var: f64,
    pub length_scales: Vec<f64>,
    pub noise_var: f64,
}

impl GpParams {
    /// `[ln signal_var, ln l_1, ..., ln l_n, ln noise_var]`
    pub fn to_log(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.length_scales.len() + 2);
        v.push(self.signal_var.ln());
        v.extend(self.length_scales.iter().map(|l| l.ln()));
        v.push(self.noise_var.ln());
        v
    }

    pub fn from_log(theta: &[f64]) -> Self {
        let n = theta.len() - 2;
        Self {
            signal_var: theta[0].exp(),
            length_scales: theta[1..=n].iter().map(|t| t.exp()).collect(),
            noise_var: theta[n + 1].exp(),
        }
    }

    fn is_valid(&self) -> bool {
        self.signal_var > 0.0 && self.noise_var >= 0.0 && self.length_scales.iter().all(|l| *l > 0.0)
    }
}

/// Box bounds on the kernel parameters (natural scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpBounds {
    pub signal_var: (f64, f64),
    pub length_scale: (f64, f64),
    pub noise_var: (f64, f64),
}

impl Default for GpBounds {
    fn default() -> Self {
        Self {
            signal_var: (1e-6, 1e3),
            length_scale: (1e-3, 1e3),
            noise_var: (1e-8, 1e1),
        }
    }
}

impl GpBounds {
    fn log_box(&self, dims: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.signal_var.0.ln()];
        let mut hi = vec![self.signal_var.1.ln()];
        lo.extend(std::iter::repeat_n(self.length_scale.0.ln(), dims));
        hi.extend(std::iter::repeat_n(self.length_scale.1.ln(), dims));
        lo.push(self.noise_var.0.ln());
        hi.push(self.noise_var.1.ln());
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpOptions {
    /// Random restarts in addition to the default starting point.
    pub restarts: usize,
    pub bounds: GpBounds,
    pub opt_seed: u64,
    pub max_iter: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            bounds: GpBounds::default(),
            opt_seed: 0,
            max_iter: 200,
        }
    }
}

fn sq_dist_scaled(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(ls)
        .map(|((x, y), l)| {
            let d = (x - y) / l;
            d * d
        })
        .sum()
}

/// Signal part of the kernel matrix (no noise).
fn signal_matrix(params: &GpParams, x: &[Vec<f64>]) -> DMatrix<f64> {
    let m = x.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = params.signal_var;
        for j in 0..i {
            let v = params.signal_var * (-0.5 * sq_dist_scaled(&x[i], &x[j], &params.length_scales)).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn factor(kf: &DMatrix<f64>, noise: f64, jitters: &[f64]) -> Option<(Cholesky<f64, Dyn>, f64)> {
    for &jitter in jitters {
        let mut k = kf.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += noise + jitter;
        }
        if let Some(c) = Cholesky::new(k) {
            return Some((c, jitter));
        }
    }
    None
}

fn lml_impl(params: &GpParams, x: &[Vec<f64>], y: &[f64], jitters: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument("GP data must be non-empty with one target per input".into()));
    }
    if !params.is_valid() {
        return Err(Error::InvalidArgument("GP parameters must be positive".into()));
    }
    let m = x.len();
    let n = params.length_scales.len();
    let kf = signal_matrix(params, x);
    let (chol, jitter) = factor(&kf, params.noise_var, jitters).ok_or(Error::NotPositiveDefinite)?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let log_det: f64 = chol.l_dirty().diagonal().iter().take(m).map(|d| d.ln()).sum::<f64>() * 2.0;
    let value = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * m as f64 * LN_2PI;

    // W = alpha alpha^T - K^{-1}; dL/dtheta_j = 1/2 tr(W dK/dtheta_j)
    let mut w = chol.inverse();
    w.neg_mut();
    w.ger(1.0, &alpha, &alpha, 1.0);
    let mut grad = vec![0.0; n + 2];
    for i in 0..m {
        for j in 0..m {
            let wk = w[(i, j)] * kf[(i, j)];
            grad[0] += wk;
            if i != j {
                for d in 0..n {
                    let diff = (x[i][d] - x[j][d]) / params.length_scales[d];
                    grad[1 + d] += wk * diff * diff;
                }
            }
        }
    }
    grad[n + 1] = params.noise_var * w.diagonal().sum();
    for g in &mut grad {
        *g *= 0.5;
    }
    Ok((value, grad, jitter))
}

/// Log marginal likelihood of zero-mean GP data and its gradient with
/// respect to `[ln signal_var, ln l_d.., ln noise_var]`.
pub fn lml(params: &GpParams, x: &[Vec<f64>], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    lml_impl(params, x, y, &[0.0]).map(|(v, g, _)| (v, g))
}

/// Posterior-mean surface of a fitted GP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgprSurface {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub params: GpParams,
    /// Constant prior mean (the target average).
    pub prior_mean: f64,
    /// `K^{-1} (y - prior_mean)`.
    pub alpha: Vec<f64>,
    pub lml: f64,
    pub jitter: f64,
}

impl IgprSurface {
    /// Conditions a GP with fixed `params` on the data.
    pub fn with_params(points: &[(UnitVector, f64)], params: GpParams) -> Result<Self> {
        let (x, y, mean) = split(points)?;
        let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let (value, _, jitter) = lml_impl(&params, &x, &centered, &JITTERS)?;
        let kf = signal_matrix(&params, &x);
        let (chol, _) = factor(&kf, params.noise_var, &[jitter]).ok_or(Error::NotPositiveDefinite)?;
        let alpha = chol.solve(&DVector::from_column_slice(&centered));
        Ok(Self {
            inputs: x,
            targets: y,
            params,
            prior_mean: mean,
            alpha: alpha.iter().copied().collect(),
            lml: value,
            jitter,
        })
    }

    pub fn dims(&self) -> usize {
        self.params.length_scales.len()
    }

    pub fn predict(&self, u: &[f64]) -> f64 {
        self.prior_mean
            + self
                .inputs
                .iter()
                .zip(&self.alpha)
                .map(|(x, a)| a * self.params.signal_var * (-0.5 * sq_dist_scaled(u, x, &self.params.length_scales)).exp())
                .sum::<f64>()
    }
}

fn split(points: &[(UnitVector, f64)]) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a GP fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points[0].0.len();
    if let Some(p) = points.iter().find(|p| p.0.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: p.0.len() });
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::InvalidArgument("non-finite GP target".into()));
    }
    let x: Vec<Vec<f64>> = points.iter().map(|p| p.0.coords().to_vec()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mean = crate::stats::mean(&y);
    Ok((x, y, mean))
}

/// Starting points in log-parameter space: one default, then `restarts`
/// log-uniform draws inside the bounds.
fn starting_points(dims: usize, var: f64, opts: &GpOptions) -> Vec<Vec<f64>> {
    let (lo, hi) = opts.bounds.log_box(dims);
    let default = GpParams {
        signal_var: var.max(1e-3),
        length_scales: vec![0.3; dims],
        noise_var: 1e-4,
    }
    .to_log();
    let mut starts = vec![default.iter().zip(lo.iter().zip(&hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.opt_seed);
    for _ in 0..opts.restarts {
        starts.push(lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..=*h)).collect());
    }
    starts
}

/// Fits kernel parameters by multi-start bounded quasi-Newton maximization
/// of the log marginal likelihood; the best start wins (earliest on ties).
pub fn fit_igpr(points: &[(UnitVector, f64)], opts: &GpOptions) -> Result<IgprSurface> {
    let (x, y, mean) = split(points)?;
    let dims = x[0].len();
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let var = crate::stats::variance(&centered);
    let (lo, hi) = opts.bounds.log_box(dims);
    let starts = starting_points(dims, var, opts);
    let lbfgs = LbfgsOptions {
        max_iter: opts.max_iter,
        ..Default::default()
    };
    let objective = |theta: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (v, g, _) = lml_impl(&GpParams::from_log(theta), &x, &centered, &JITTERS).ok()?;
        Some((-v, g.into_iter().map(|gi| -gi).collect()))
    };
    let results = par::map(&starts, |start| minimize_box(objective, start, &lo, &hi, lbfgs));
    let best = results
        .into_iter()
        .flatten()
        .fold(None, |best: Option<super::optim::Minimum>, m| match best {
            Some(b) if b.value <= m.value => Some(b),
            _ => Some(m),
        })
        .ok_or(Error::NotPositiveDefinite)?;
    IgprSurface::with_params(points, GpParams::from_log(&best.x))
}
