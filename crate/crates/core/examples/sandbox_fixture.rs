//! Materialize the fixture of a builtin case and inspect the sandbox.
//!
//! ```text
//! cargo run --example sandbox_fixture [case-id]
//! ```

use sentinel::corpus::{builtin_corpus, materialize_fixture, PathAssertion};

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "B1.dir-count".to_string());
    let case = builtin_corpus()
        .into_iter()
        .find(|c| c.id == id)
        .unwrap_or_else(|| panic!("no builtin case {id}"));

    let parent = std::env::temp_dir();
    let sandbox = materialize_fixture(&case, &parent).expect("fixture materializes");
    println!("sandbox root: {}", sandbox.fs_root().display());
    for p in &sandbox.preopens {
        println!("preopen {} -> {}", p.host.display(), p.guest);
    }

    let mut names: Vec<_> = std::fs::read_dir(sandbox.fs_root())
        .expect("readable")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for n in &names {
        let path = sandbox.fs_root().join(n);
        match std::fs::read_dir(&path) {
            Ok(rd) => println!("  {n}/ ({} entries)", rd.count()),
            Err(_) => println!("  {n}"),
        }
    }

    let problems = sandbox.check();
    println!(
        "assertions before running: {}",
        if problems.is_empty() {
            "hold".into()
        } else {
            problems.join("; ")
        }
    );
    let extra = sandbox.check_assertions(&[PathAssertion::Absent("never-created".into())]);
    println!("absent(never-created): {}", extra.is_empty());

    let root = sandbox.base().to_path_buf();
    sandbox.cleanup().expect("cleanup");
    println!("removed after cleanup: {}", !root.exists());
}
