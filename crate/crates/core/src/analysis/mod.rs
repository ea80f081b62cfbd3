//! Landscape analyses: ICE curves, local optima of 2-D slices, and
//! per-configuration modality via the folding test of unimodality.

mod folding;
mod ice;
mod modality;
mod optima;

pub use folding::{folding_statistic, folding_test, Category, FoldingNull, FoldingOutcome, FoldingStatistic, MIN_SAMPLES};
pub use ice::{ice_curves, IceCurveSet};
pub use modality::{modality_summary, write_modality_csv, ModalityResult, ModalitySummary, ModalityTable, PhaseModality};
pub use optima::{find_local_optima, write_optima_csv, GridOptima};
