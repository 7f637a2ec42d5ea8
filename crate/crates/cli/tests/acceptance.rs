//! Runs the full acceptance battery and prints one line per criterion.
//! Artifacts land in the target tmp directory for inspection.

use std::path::PathBuf;
use std::process::ExitCode;

use fracsol_harness::accept::{run_acceptance, ACCEPTANCE_FILE};
use fracsol_harness::config::AcceptConfig;

const SEED: u64 = 2024;

fn schema_errors(schema: &str, file: &PathBuf) -> Vec<String> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas");
    let read = |p: PathBuf| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
    let validator = jsonschema::validator_for(&read(root.join(format!("{schema}.schema.json")))).unwrap();
    let instance = read(file.clone());
    validator.iter_errors(&instance).map(|e| format!("{}: {e}", file.display())).collect()
}

fn main() -> ExitCode {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&dir);
    println!("acceptance battery, seed {SEED}, artifacts in {}", dir.display());
    let outcome = match run_acceptance(&AcceptConfig { seed: SEED }, &dir, true) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("acceptance battery aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut errors = schema_errors("acceptance", &dir.join(ACCEPTANCE_FILE));
    errors.extend(schema_errors("manifest", &dir.join("manifest.json")));
    for e in &errors {
        eprintln!("schema violation: {e}");
    }
    let failed: Vec<u32> = outcome.results.iter().filter(|r| !r.passed()).map(|r| r.record.id).collect();
    println!("{} of {} criteria passed", outcome.results.len() - failed.len(), outcome.results.len());
    if failed.is_empty() && errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
