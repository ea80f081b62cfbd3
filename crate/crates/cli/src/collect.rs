use std::path::Path;

use landscape_core::collect::{run_pipeline_cached, PhasePlan, PlanFile, SnapshotStore, SurrogateTrainable};
use landscape_core::dataset::LandscapeDataset;
use landscape_core::space::SearchSpace;
use serde_json::json;

use crate::bundle::BundleWriter;
use crate::{CliResult, CollectArgs, Failure, ValidateArgs};

pub const SPACE_FILE: &str = "space.json";
pub const LANDSCAPE_FILE: &str = "landscape.csv";
pub const FINAL_FILE: &str = "final.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

fn load_plan(path: &Path) -> CliResult<(String, PhasePlan, SurrogateTrainable)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read plan {}: {e}", path.display())))?;
    let file = PlanFile::from_json(&text).map_err(|e| Failure::Validation(format!("plan {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (plan, spec) = file
        .resolve(base)
        .map_err(|e| Failure::Validation(format!("plan {}: {e}", path.display())))?;
    let trainable = SurrogateTrainable::new(plan.space.clone(), spec).map_err(Failure::validation)?;
    Ok((text, plan, trainable))
}

pub fn run(args: &CollectArgs) -> CliResult {
    let (text, plan, trainable) = load_plan(&args.plan)?;
    let snap_dir = args.out.join(SNAPSHOT_DIR);
    let cache = if args.resume && snap_dir.is_dir() {
        Some(SnapshotStore::load_dir(&snap_dir).map_err(Failure::validation)?)
    } else {
        None
    };
    let archive = run_pipeline_cached(&plan, &trainable, cache.as_ref()).map_err(Failure::runtime)?;

    let mut out = BundleWriter::new(&args.out)?;
    out.write("plan.json", text.as_bytes())?;
    out.write(SPACE_FILE, plan.space.to_json().as_bytes())?;
    let mut buf = Vec::new();
    archive.landscape.write_csv(&mut buf).map_err(Failure::runtime)?;
    out.write(LANDSCAPE_FILE, &buf)?;
    buf.clear();
    archive.final_records.write_csv(&mut buf).map_err(Failure::runtime)?;
    out.write(FINAL_FILE, &buf)?;
    let selection = json!({ "chosen": archive.chosen, "incoming": archive.incoming });
    out.write(SELECTION_FILE, pretty(&selection).as_bytes())?;
    for key in archive.snapshots.keys() {
        let blob = archive.snapshots.get(key).expect("key from the store");
        out.write(&format!("{SNAPSHOT_DIR}/{}", key.file_name()), blob)?;
    }
    let manifest = json!({ "files": out.files });
    out.write("manifest.json", pretty(&manifest).as_bytes())?;

    println!(
        "collected {} phases x {} configs x {} seeds: {} landscape rows, {} final rows, {} snapshots -> {}",
        plan.num_phases(),
        plan.num_configs,
        plan.seeds.len(),
        archive.landscape.len(),
        archive.final_records.len(),
        archive.snapshots.len(),
        args.out.display()
    );
    for sel in &archive.chosen {
        println!("phase {}: selected config {} seed {}", sel.phase_index, sel.conf_index, sel.seed);
    }
    Ok(())
}

pub fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Space plus landscape and final records from a `collect` directory.
pub fn load_data(dir: &Path) -> CliResult<(SearchSpace, LandscapeDataset, LandscapeDataset)> {
    let space = SearchSpace::load(dir.join(SPACE_FILE)).map_err(Failure::validation)?;
    let landscape = LandscapeDataset::load(dir.join(LANDSCAPE_FILE), &space).map_err(Failure::validation)?;
    let finals = LandscapeDataset::load(dir.join(FINAL_FILE), &space).map_err(Failure::validation)?;
    Ok((space, landscape, finals))
}

pub fn validate(args: &ValidateArgs) -> CliResult {
    if let Some(path) = &args.plan {
        let (_, plan, _) = load_plan(path)?;
        println!(
            "plan ok: {} dims, {} configs, {} seeds, {} phases, t_final {}",
            plan.space.n(),
            plan.num_configs,
            plan.seeds.len(),
            plan.num_phases(),
            plan.t_final
        );
    }
    if let Some(dir) = &args.data {
        let (space, landscape, finals) = load_data(dir)?;
        println!(
            "data ok: {} dims, {} phases, {} landscape rows, {} final rows",
            space.n(),
            landscape.phases().len(),
            landscape.len(),
            finals.len()
        );
    }
    Ok(())
}
