//! Exact RBF interpolation with the linear kernel `phi(r) = -r` and a
//! degree-1 polynomial tail.
//!
//! The coefficients solve
//!
//! ```text
//! [ A   P ] [w]   [y]
//! [ P^T 0 ] [c] = [0]
//! ```
//!
//! with `A_ij = -|x_i - x_j|` and `P_i = (1, x_i)`. The side conditions make
//! the system uniquely solvable for distinct, affinely spanning centers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::space::UnitVector;
use crate::{Error, Result};

const JITTERS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlmSurface {
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Constant term followed by one slope per dimension.
    pub tail: Vec<f64>,
    /// Diagonal regularization that was needed to solve the system.
    pub jitter: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn fit_ilm(points: &[(UnitVector, f64)]) -> Result<IlmSurface> {
    let m = points.len();
    let n = points.first().map_or(0, |p| p.0.len());
    if n == 0 {
        return Err(Error::Empty("ILM training points"));
    }
    if m < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "ILM in {n} dimensions needs at least {} points, got {m}",
            n + 1
        )));
    }
    for (j, (p, y)) in points.iter().enumerate() {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite target at index {j}")));
        }
        if points[..j].iter().any(|(q, _)| distance(p.coords(), q.coords()) < 1e-12) {
            return Err(Error::DuplicateCenter(j));
        }
    }

    // the linear tail is determined only if the centers affinely span the cube
    let tail_basis = DMatrix::from_fn(m, n + 1, |i, d| if d == 0 { 1.0 } else { points[i].0.coords()[d - 1] });
    let sv = tail_basis.singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::Singular);
    }

    let size = m + n + 1;
    let mut system = DMatrix::<f64>::zeros(size, size);
    for i in 0..m {
        let xi = points[i].0.coords();
        for j in 0..i {
            let v = -distance(xi, points[j].0.coords());
            system[(i, j)] = v;
            system[(j, i)] = v;
        }
        system[(i, m)] = 1.0;
        system[(m, i)] = 1.0;
        for d in 0..n {
            system[(i, m + 1 + d)] = xi[d];
            system[(m + 1 + d, i)] = xi[d];
        }
    }
    let mut rhs = DVector::<f64>::zeros(size);
    for (i, (_, y)) in points.iter().enumerate() {
        rhs[i] = *y;
    }
    let scale = rhs.amax().max(1.0);

    for jitter in JITTERS {
        let mut a = system.clone();
        for i in 0..m {
            a[(i, i)] += jitter;
        }
        let Some(sol) = a.clone().full_piv_lu().solve(&rhs) else {
            continue;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let residual = (&a * &sol - &rhs).amax();
        if residual > 1e-9 * scale {
            continue;
        }
        return Ok(IlmSurface {
            centers: points.iter().map(|(p, _)| p.coords().to_vec()).collect(),
            weights: sol.rows(0, m).iter().copied().collect(),
            tail: sol.rows(m, n + 1).iter().copied().collect(),
            jitter,
        });
    }
    Err(Error::Singular)
}

impl IlmSurface {
    pub fn dims(&self) -> usize {
        self.tail.len() - 1
    }

    pub fn predict(&self, u: &[f64]) -> f64 {
        let kernel: f64 = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| -w * distance(u, c))
            .sum();
        let tail = self.tail[0] + self.tail[1..].iter().zip(u).map(|(c, x)| c * x).sum::<f64>();
        kernel + tail
    }
}
