// Loads every bundled problem file and prints its classification.

use std::path::Path;

use quasidiff::analysis::{analyze, AnalysisConfig};
use quasidiff::file::{load_problem, ProblemFile};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/problems");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    for path in paths {
        let problem = load_problem(&path)?;
        let file = ProblemFile::from_problem(&problem);
        assert_eq!(ProblemFile::parse(&file.to_toml())?, file);
        let report = analyze(&problem, &AnalysisConfig::default())?;
        println!(
            "{}: {}",
            path.file_stem().unwrap_or_default().to_string_lossy(),
            report.message
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
