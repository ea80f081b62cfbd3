//! Hyperparameter landscapes for iteratively trained learners.
//!
//! The crate covers the whole pipeline: a [`space::SearchSpace`] with its
//! unit-cube view and scrambled Sobol sampler, a greedy multi-phase
//! collection protocol driven through the [`collect::Trainable`] trait,
//! per-configuration return statistics ([`dataset`]), interpolated and
//! Gaussian-process surface models ([`models`]) and the landscape analyses
//! in [`analysis`] (ICE curves, grid optima, folding-test modality).

pub mod analysis;
pub mod collect;
pub mod dataset;
mod error;
pub mod models;
pub mod plot;
pub mod sobol;
pub mod space;
pub mod stats;

pub use error::{Error, Result};

pub(crate) mod par {
    //! Order-preserving map that runs on rayon when the `parallel` feature is
    //! on and sequentially otherwise.

    #[cfg(feature = "parallel")]
    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }
}
