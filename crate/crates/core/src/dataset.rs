//! Return samples, their per-configuration summaries and CSV persistence.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::space::{SearchSpace, UnitVector};
use crate::stats::{iqm, quantile_sorted};
use crate::{Error, Result};

/// Lower and upper quantile levels of the 95% band.
pub const BAND_LOWER: f64 = 0.025;
pub const BAND_UPPER: f64 = 0.975;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalKind {
    Landscape,
    Final,
}

impl fmt::Display for EvalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalKind::Landscape => "landscape",
            EvalKind::Final => "final",
        })
    }
}

impl FromStr for EvalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "landscape" => Ok(EvalKind::Landscape),
            "final" => Ok(EvalKind::Final),
            other => Err(Error::Schema(format!("unknown eval_kind `{other}`"))),
        }
    }
}

/// One evaluation episode of one trained (phase, configuration, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub phase_index: usize,
    pub checkpoint_step: u64,
    pub conf_index: usize,
    pub seed: u64,
    pub episode: usize,
    pub eval_kind: EvalKind,
    pub unit: Vec<f64>,
    pub hp: Vec<f64>,
    pub ret: f64,
}

impl SampleRow {
    fn sort_key(&self) -> (usize, EvalKind, usize, u64, u64, usize) {
        (
            self.phase_index,
            self.eval_kind,
            self.conf_index,
            self.seed,
            self.checkpoint_step,
            self.episode,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeDataset {
    space: SearchSpace,
    rows: Vec<SampleRow>,
}

impl LandscapeDataset {
    /// Validates the rows against `space` and sorts them into canonical order.
    pub fn new(space: SearchSpace, mut rows: Vec<SampleRow>) -> Result<Self> {
        for row in &rows {
            check_row(&space, row)?;
        }
        rows.sort_by_key(SampleRow::sort_key);
        Ok(Self { space, rows })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn rows(&self) -> &[SampleRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted, de-duplicated phase indices present in the dataset.
    pub fn phases(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.rows.iter().map(|r| r.phase_index).collect();
        p.dedup();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Keeps only the rows matching `keep`.
    pub fn filter(&self, keep: impl Fn(&SampleRow) -> bool) -> Self {
        Self {
            space: self.space.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Concatenates two datasets over the same space.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::InvalidArgument("cannot merge datasets over different spaces".into()));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        rows.sort_by_key(SampleRow::sort_key);
        Ok(Self {
            space: self.space.clone(),
            rows,
        })
    }

    /// Pooled returns per configuration for one phase and evaluation kind.
    pub fn returns_by_config(&self, kind: EvalKind, phase: usize) -> BTreeMap<usize, (Vec<f64>, Vec<f64>)> {
        let mut out: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for r in self
            .rows
            .iter()
            .filter(|r| r.eval_kind == kind && r.phase_index == phase)
        {
            out.entry(r.conf_index)
                .or_insert_with(|| (r.unit.clone(), Vec::new()))
                .1
                .push(r.ret);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(csv_header(&self.space))?;
        for r in &self.rows {
            let mut rec = vec![
                r.phase_index.to_string(),
                r.checkpoint_step.to_string(),
                r.conf_index.to_string(),
                r.seed.to_string(),
                r.episode.to_string(),
                r.eval_kind.to_string(),
            ];
            rec.extend(r.unit.iter().map(f64::to_string));
            rec.extend(r.hp.iter().map(f64::to_string));
            rec.push(r.ret.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, space: &SearchSpace) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let expected = csv_header(space);
        let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if found != expected {
            let missing: Vec<&String> = expected.iter().filter(|h| !found.contains(h)).collect();
            let detail = if missing.is_empty() {
                format!("expected header `{}`", expected.join(","))
            } else {
                format!(
                    "missing column(s) {}",
                    missing.iter().map(|m| format!("`{m}`")).collect::<Vec<_>>().join(", ")
                )
            };
            return Err(Error::Schema(detail));
        }
        let n = space.n();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let ctx = |i: usize| format!("row {}, column `{}`", line + 1, expected[i]);
            fn num<T: FromStr>(s: &str, ctx: String) -> Result<T> {
                s.trim().parse().map_err(|_| Error::Schema(format!("{ctx}: cannot parse `{s}`")))
            }
            let floats = |from: usize| -> Result<Vec<f64>> {
                (from..from + n).map(|i| num(field(i), ctx(i))).collect()
            };
            rows.push(SampleRow {
                phase_index: num(field(0), ctx(0))?,
                checkpoint_step: num(field(1), ctx(1))?,
                conf_index: num(field(2), ctx(2))?,
                seed: num(field(3), ctx(3))?,
                episode: num(field(4), ctx(4))?,
                eval_kind: field(5).parse()?,
                unit: floats(6)?,
                hp: floats(6 + n)?,
                ret: num(field(6 + 2 * n), ctx(6 + 2 * n))?,
            });
        }
        Self::new(space.clone(), rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>, space: &SearchSpace) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), space)
    }
}

/// The exact CSV header for `space`.
pub fn csv_header(space: &SearchSpace) -> Vec<String> {
    let mut h: Vec<String> = [
        "phase_index",
        "checkpoint_step",
        "conf_index",
        "seed",
        "episode",
        "eval_kind",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(space.names().map(|n| format!("unit.{n}")));
    h.extend(space.names().map(|n| format!("hp.{n}")));
    h.push("return".into());
    h
}

fn check_row(space: &SearchSpace, row: &SampleRow) -> Result<()> {
    space.check_dim(row.unit.len())?;
    space.check_dim(row.hp.len())?;
    if !row.ret.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "non-finite return in phase {}, config {}",
            row.phase_index, row.conf_index
        )));
    }
    for ((def, &u), &v) in space.dims().iter().zip(&row.unit).zip(&row.hp) {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Schema(format!("unit.{} = {u} outside [0, 1]", def.name)));
        }
        let expected = def.from_unit(u);
        let tol = 1e-9 * expected.abs().max(v.abs()) + 1e-12 * (def.high - def.low);
        if (expected - v).abs() > tol {
            return Err(Error::Schema(format!(
                "hp.{} = {v} inconsistent with unit coordinate {u} (expected {expected})",
                def.name
            )));
        }
    }
    Ok(())
}

/// Summary of one configuration's pooled returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigStats {
    pub conf_index: usize,
    pub unit: UnitVector,
    pub iqm: f64,
    pub q_lower: f64,
    pub q_upper: f64,
    pub sample_count: usize,
}

/// Per-configuration statistics for one phase, the targets of surface fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerConfigStats {
    pub phase_index: usize,
    pub eval_kind: EvalKind,
    pub entries: Vec<ConfigStats>,
}

/// Which statistic a surface is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Lower,
    Mean,
    Upper,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Upper, Band::Mean, Band::Lower];

    pub fn name(self) -> &'static str {
        match self {
            Band::Lower => "lower",
            Band::Mean => "mean",
            Band::Upper => "upper",
        }
    }
}

impl PerConfigStats {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.entries.first().map_or(0, |e| e.unit.len())
    }

    pub fn targets(&self, band: Band) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match band {
                Band::Lower => e.q_lower,
                Band::Mean => e.iqm,
                Band::Upper => e.q_upper,
            })
            .collect()
    }

    pub fn points(&self) -> Vec<UnitVector> {
        self.entries.iter().map(|e| e.unit.clone()).collect()
    }

    /// Applies `affine` to every statistic.
    pub fn normalized(&self, affine: &Affine) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.iqm = affine.apply(e.iqm);
            e.q_lower = affine.apply(e.q_lower);
            e.q_upper = affine.apply(e.q_upper);
        }
        out
    }

    /// The configuration with the highest IQM (lowest index on ties).
    pub fn best(&self) -> Option<&ConfigStats> {
        self.entries
            .iter()
            .fold(None, |best: Option<&ConfigStats>, e| match best {
                Some(b) if b.iqm >= e.iqm => Some(b),
                _ => Some(e),
            })
    }
}

/// Pools returns across seeds and episodes per configuration and computes
/// IQM and the 95% band.
pub fn aggregate(ds: &LandscapeDataset, kind: EvalKind, phase: usize) -> Result<PerConfigStats> {
    let grouped = ds.returns_by_config(kind, phase);
    if grouped.is_empty() {
        return Err(Error::MissingRecords(format!(
            "no {kind} rows for phase {phase}"
        )));
    }
    let all_confs: std::collections::BTreeSet<usize> = ds
        .rows()
        .iter()
        .filter(|r| r.eval_kind == kind)
        .map(|r| r.conf_index)
        .collect();
    if let Some(missing) = all_confs.iter().find(|c| !grouped.contains_key(c)) {
        return Err(Error::MissingRecords(format!(
            "config {missing} has no {kind} rows in phase {phase}"
        )));
    }
    let entries = grouped
        .into_iter()
        .map(|(conf_index, (unit, mut returns))| {
            returns.sort_by(f64::total_cmp);
            Ok(ConfigStats {
                conf_index,
                unit: UnitVector::new(unit)?,
                iqm: iqm(&returns)?,
                q_lower: quantile_sorted(&returns, BAND_LOWER)?,
                q_upper: quantile_sorted(&returns, BAND_UPPER)?,
                sample_count: returns.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerConfigStats {
        phase_index: phase,
        eval_kind: kind,
        entries,
    })
}

/// Min-max map `x -> (x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub offset: f64,
    pub scale: f64,
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            offset: 0.0,
            scale: 1.0,
        }
    }

    /// Fits the map sending the smallest value to 0 and the largest to 1.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Err(Error::Empty("normalization scope"));
        }
        if hi <= lo {
            return Err(Error::DegenerateScope(lo));
        }
        Ok(Self {
            offset: lo,
            scale: hi - lo,
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.offset + y * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormScope {
    #[default]
    PooledAllPhases,
    PerPhase,
}

impl FromStr for NormScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" | "pooled_all_phases" => Ok(NormScope::PooledAllPhases),
            "per_phase" | "per-phase" => Ok(NormScope::PerPhase),
            other => Err(Error::InvalidArgument(format!("unknown normalization scope `{other}`"))),
        }
    }
}

fn stat_values(s: &PerConfigStats) -> impl Iterator<Item = f64> + '_ {
    s.entries.iter().flat_map(|e| [e.q_lower, e.iqm, e.q_upper])
}

/// Min-max normalizes per-phase statistics to `[0, 1]` over the chosen scope.
/// Returns the normalized copies and the affine used for each phase.
pub fn normalize(stats: &[PerConfigStats], scope: NormScope) -> Result<(Vec<PerConfigStats>, Vec<Affine>)> {
    let affines = match scope {
        NormScope::PooledAllPhases => {
            let a = Affine::fit(stats.iter().flat_map(stat_values))?;
            vec![a; stats.len()]
        }
        NormScope::PerPhase => stats
            .iter()
            .map(|s| Affine::fit(stat_values(s)))
            .collect::<Result<Vec<_>>>()?,
    };
    let normalized = stats
        .iter()
        .zip(&affines)
        .map(|(s, a)| s.normalized(a))
        .collect();
    Ok((normalized, affines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_space, HyperparameterDef};

    fn space() -> SearchSpace {
        build_space(vec![
            HyperparameterDef::log("lr", 1e-4, 0.1),
            HyperparameterDef::linear("eps", 0.0, 1.0),
        ])
        .unwrap()
    }

    fn row(space: &SearchSpace, phase: usize, conf: usize, seed: u64, ep: usize, ret: f64) -> SampleRow {
        let unit = vec![(conf as f64 * 0.37) % 1.0, (conf as f64 * 0.61) % 1.0];
        let hp = space
            .to_config(&UnitVector::new(unit.clone()).unwrap())
            .unwrap()
            .values()
            .to_vec();
        SampleRow {
            phase_index: phase,
            checkpoint_step: 100 * phase as u64,
            conf_index: conf,
            seed,
            episode: ep,
            eval_kind: EvalKind::Landscape,
            unit,
            hp,
            ret,
        }
    }

    fn grid_dataset(f: impl Fn(usize, usize, u64, usize) -> f64) -> LandscapeDataset {
        let s = space();
        let mut rows = Vec::new();
        for phase in 1..=2 {
            for conf in 0..4 {
                for seed in 0..5 {
                    for ep in 0..10 {
                        rows.push(row(&s, phase, conf, seed, ep, f(phase, conf, seed, ep)));
                    }
                }
            }
        }
        LandscapeDataset::new(s, rows).unwrap()
    }

    #[test]
    fn aggregate_counts_and_constants() {
        let ds = grid_dataset(|_, _, _, _| 3.5);
        let st = aggregate(&ds, EvalKind::Landscape, 1).unwrap();
        assert_eq!(st.len(), 4);
        for e in &st.entries {
            assert_eq!(e.sample_count, 50);
            assert_eq!((e.iqm, e.q_lower, e.q_upper), (3.5, 3.5, 3.5));
        }
        assert!(aggregate(&ds, EvalKind::Final, 1).is_err());
        assert!(aggregate(&ds, EvalKind::Landscape, 3).is_err());
    }

    #[test]
    fn aggregate_band_from_quantiles() {
        let s = space();
        let rows = (0..=100).map(|i| row(&s, 1, 0, 0, i, i as f64)).collect();
        let ds = LandscapeDataset::new(s, rows).unwrap();
        let e = &aggregate(&ds, EvalKind::Landscape, 1).unwrap().entries[0];
        assert!((e.q_lower - 2.5).abs() < 1e-12 && (e.q_upper - 97.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_detects_missing_config() {
        let ds = grid_dataset(|p, c, _, _| (p * c) as f64);
        let holed = ds.filter(|r| !(r.phase_index == 2 && r.conf_index == 1));
        assert!(matches!(
            aggregate(&holed, EvalKind::Landscape, 2),
            Err(Error::MissingRecords(m)) if m.contains("config 1")
        ));
    }

    #[test]
    fn affine_examples() {
        let a = Affine::fit([-100.0, 0.0, 100.0]).unwrap();
        let mapped: Vec<f64> = [-100.0, 0.0, 100.0].iter().map(|&x| a.apply(x)).collect();
        assert_eq!(mapped, [0.0, 0.5, 1.0]);
        for x in [-100.0, -3.3, 42.0, 1e-7] {
            assert!((a.invert(a.apply(x)) - x).abs() < 1e-12);
        }
        assert!(matches!(Affine::fit([2.0, 2.0]), Err(Error::DegenerateScope(_))));
    }

    #[test]
    fn normalize_scopes() {
        let ds = grid_dataset(|p, c, s, e| (p * 1000) as f64 + (c * 10) as f64 + s as f64 + e as f64 * 0.1);
        let stats: Vec<_> = [1, 2]
            .iter()
            .map(|&p| aggregate(&ds, EvalKind::Landscape, p).unwrap())
            .collect();
        let (per, affines) = normalize(&stats, NormScope::PerPhase).unwrap();
        assert_ne!(affines[0], affines[1]);
        for s in &per {
            let vals: Vec<f64> = stat_values(s).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
        let (pooled, affines) = normalize(&stats, NormScope::PooledAllPhases).unwrap();
        assert_eq!(affines[0], affines[1]);
        assert!(pooled[0].entries.iter().all(|e| e.q_upper < 0.5));
        assert!(pooled[1].entries.iter().all(|e| e.q_lower > 0.5));
        // order preserving
        let before = stats[0].targets(Band::Mean);
        let after = pooled[0].targets(Band::Mean);
        for i in 0..before.len() {
            for j in 0..before.len() {
                assert_eq!(before[i] < before[j], after[i] < after[j]);
            }
        }
    }

    #[test]
    fn csv_round_trip_and_schema() {
        let ds = grid_dataset(|p, c, s, e| (p as f64).sin() * 1e3 / (1.0 + c as f64) + s as f64 / 3.0 - e as f64);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "phase_index,checkpoint_step,conf_index,seed,episode,eval_kind,unit.lr,unit.eps,hp.lr,hp.eps,return\n"
        ));
        assert_eq!(text.lines().count(), 1 + 2 * 4 * 5 * 10);
        let back = LandscapeDataset::read_csv(buf.as_slice(), ds.space()).unwrap();
        assert_eq!(back, ds);

        let no_return = text.replacen(",return", ",reward", 1);
        assert!(matches!(
            LandscapeDataset::read_csv(no_return.as_bytes(), ds.space()),
            Err(Error::Schema(m)) if m.contains("`return`")
        ));
        let bad_hp = text.replacen("\n1,100,0,0,0,landscape,0,0,0.0001,", "\n1,100,0,0,0,landscape,0,0,0.5,", 1);
        assert_ne!(bad_hp, text);
        assert!(matches!(
            LandscapeDataset::read_csv(bad_hp.as_bytes(), ds.space()),
            Err(Error::Schema(m)) if m.contains("inconsistent")
        ));
    }
}
