use serde::Deserialize;

use crate::analyze::SUMMARY_FILE;
use crate::bundle::{sha256_hex, FileEntry};
use crate::{CliResult, Failure, ReportArgs};

#[derive(Deserialize)]
struct Summary {
    models: Vec<String>,
    modality_table: landscape_core::analysis::ModalityTable,
    files: Vec<FileEntry>,
}

pub fn run(args: &ReportArgs) -> CliResult {
    let path = args.bundle.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let summary: Summary =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;

    let mut bad = Vec::new();
    for f in &summary.files {
        match std::fs::read(args.bundle.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            Ok(_) => bad.push(format!("{}: hash mismatch", f.path)),
            Err(e) => bad.push(format!("{}: {e}", f.path)),
        }
    }
    for m in &summary.models {
        let cv = args.bundle.join(format!("cv_{m}.txt"));
        if let Ok(table) = std::fs::read_to_string(&cv) {
            println!("{m} cross-validation\n{table}");
        }
    }
    println!("modality\n{}", summary.modality_table);
    if !bad.is_empty() {
        return Err(Failure::Runtime(format!("bundle verification failed:\n  {}", bad.join("\n  "))));
    }
    println!("{} files verified", summary.files.len());
    Ok(())
}
