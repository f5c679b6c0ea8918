//! Walk the builtin corpus by category and self-check it.
//!
//! ```text
//! cargo run --example corpus_tour [manifest.json]
//! ```

use std::path::Path;

use sentinel::category::MATRIX_ROWS;
use sentinel::corpus::{builtin_corpus, load_manifest, merge_cases, verify_corpus};

fn main() {
    let mut cases = builtin_corpus();
    if let Some(path) = std::env::args().nth(1) {
        let extra = load_manifest(Path::new(&path)).unwrap_or_else(|e| panic!("{e}"));
        cases = merge_cases(cases, extra).unwrap_or_else(|e| panic!("{e}"));
    }

    for cat in MATRIX_ROWS {
        let ids: Vec<&str> = cases
            .iter()
            .filter(|c| c.category == cat)
            .map(|c| c.id.as_str())
            .collect();
        println!("{:<48} {}", cat.label(), ids.len());
        for id in ids {
            println!("    {id}");
        }
    }

    let report = verify_corpus(&cases);
    println!(
        "\n{} cases checked, {} confirmed by the reference evaluator, {} failures",
        report.checked,
        report.evaluated,
        report.failures.len()
    );
    for f in &report.failures {
        println!("  {f}");
    }
}
