use std::io::Write;

use serde::{Deserialize, Serialize};

use super::folding::{folding_test, Category, FoldingOutcome};
use crate::collect::derive_seed;
use crate::dataset::{EvalKind, LandscapeDataset};
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityResult {
    pub phase_index: usize,
    pub conf_index: usize,
    #[serde(flatten)]
    pub outcome: FoldingOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseModality {
    pub phase_index: usize,
    pub config_count: usize,
    pub unimodal: f64,
    pub multimodal: f64,
    pub uncategorized: f64,
}

impl PhaseModality {
    pub fn percentage(&self, c: Category) -> f64 {
        match c {
            Category::Unimodal => self.unimodal,
            Category::Multimodal => self.multimodal,
            Category::Uncategorized => self.uncategorized,
        }
    }

    fn tally(phase_index: usize, results: &[ModalityResult]) -> Self {
        let n = results.len();
        let pct = |c: Category| {
            let k = results.iter().filter(|r| r.outcome.category == c).count();
            100.0 * k as f64 / n as f64
        };
        Self {
            phase_index,
            config_count: n,
            unimodal: pct(Category::Unimodal),
            multimodal: pct(Category::Multimodal),
            uncategorized: pct(Category::Uncategorized),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModalityTable {
    pub phases: Vec<PhaseModality>,
}

impl std::fmt::Display for ModalityTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Phase | Unimodal | Multimodal | Uncategorized")?;
        for p in &self.phases {
            writeln!(
                f,
                "{:<5} | {:>7.2}% | {:>9.2}% | {:>12.2}%",
                p.phase_index, p.unimodal, p.multimodal, p.uncategorized
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalitySummary {
    pub table: ModalityTable,
    pub results: Vec<ModalityResult>,
}

/// Folding test on every configuration's pooled landscape returns, per phase.
/// Each configuration draws its null sample from its own seeded stream.
pub fn modality_summary(ds: &LandscapeDataset, alpha: f64, draws: usize, seed: u64) -> Result<ModalitySummary> {
    let mut table = ModalityTable::default();
    let mut results = Vec::new();
    for phase in ds.phases() {
        let groups: Vec<(usize, Vec<f64>)> = ds
            .returns_by_config(EvalKind::Landscape, phase)
            .into_iter()
            .map(|(c, (_, rets))| (c, rets))
            .collect();
        if groups.is_empty() {
            continue;
        }
        let outcomes = par::map(&groups, |(conf, rets)| {
            folding_test(rets, alpha, draws, derive_seed(&[seed, phase as u64, *conf as u64]))
        });
        let phase_results = groups
            .iter()
            .zip(outcomes)
            .map(|((conf, _), o)| {
                o.map(|outcome| ModalityResult {
                    phase_index: phase,
                    conf_index: *conf,
                    outcome,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        table.phases.push(PhaseModality::tally(phase, &phase_results));
        results.extend(phase_results);
    }
    if table.phases.is_empty() {
        return Err(Error::Empty("no landscape records for the modality analysis"));
    }
    Ok(ModalitySummary { table, results })
}

/// `phase_index,conf_index,phi,pivot,p_value,category,sample_count` rows;
/// skipped tests leave `phi` and `pivot` empty.
pub fn write_modality_csv<W: Write>(results: &[ModalityResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["phase_index", "conf_index", "phi", "pivot", "p_value", "category", "sample_count"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        w.write_record([
            r.phase_index.to_string(),
            r.conf_index.to_string(),
            opt(r.outcome.phi),
            opt(r.outcome.pivot),
            r.outcome.p_value.to_string(),
            r.outcome.category.to_string(),
            r.outcome.sample_count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
