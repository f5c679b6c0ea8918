//! Per-run filesystem sandboxes built from a [`FixtureSpec`](super::FixtureSpec).

use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use tempfile::TempDir;
use thiserror::Error;

use super::{EntryKind, OracleSpec, PathAssertion, TestCase};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture path `{0}` escapes the sandbox")]
    SandboxEscape(String),
    #[error("cannot materialize {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FixtureError + '_ {
    move |source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Checks that `path` stays below the sandbox root and returns it as a
/// relative path. `.` and the empty string denote the root.
pub(crate) fn confine(path: &str) -> Result<PathBuf, FixtureError> {
    let mut out = PathBuf::new();
    for comp in Path::new(path).components() {
        match comp {
            Component::Normal(c) => out.push(c),
            Component::CurDir => {}
            Component::ParentDir | Component::RootDir | Component::Prefix(_) => {
                return Err(FixtureError::SandboxEscape(path.to_string()))
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedPreopen {
    /// Absolute host directory.
    pub host: PathBuf,
    pub guest: String,
}

/// A materialized sandbox. The guest-visible tree lives under [`fs_root`];
/// the directory above it holds module bytes, compiled artifacts and `HOME`.
///
/// Removed on drop unless [`keep`](SandboxHandle::keep) was called.
///
/// [`fs_root`]: SandboxHandle::fs_root
#[derive(Debug)]
pub struct SandboxHandle {
    dir: Option<TempDir>,
    base: PathBuf,
    fs_root: PathBuf,
    pub preopens: Vec<ResolvedPreopen>,
    pub stdin: Option<Vec<u8>>,
    pub env: Vec<(String, String)>,
    assertions: Vec<PathAssertion>,
}

impl SandboxHandle {
    pub fn base(&self) -> &Path {
        &self.base
    }

    pub fn fs_root(&self) -> &Path {
        &self.fs_root
    }

    /// Evaluates the case's FilesystemState assertions; one message per failure.
    pub fn check(&self) -> Vec<String> {
        self.check_assertions(&self.assertions)
    }

    pub fn check_assertions(&self, assertions: &[PathAssertion]) -> Vec<String> {
        let mut failures = Vec::new();
        for a in assertions {
            let ok = match a {
                PathAssertion::Exists(p) => self.resolve(p).is_some_and(|p| p.exists()),
                PathAssertion::Absent(p) => self.resolve(p).is_some_and(|p| !p.exists()),
                PathAssertion::EntryCount { path, count } => {
                    let actual = self
                        .resolve(path)
                        .and_then(|p| fs::read_dir(p).ok())
                        .map(|rd| rd.count());
                    if actual != Some(*count) {
                        failures.push(match actual {
                            Some(n) => format!("{path} holds {n} entries, expected {count}"),
                            None => format!("{path} is not a readable directory"),
                        });
                    }
                    continue;
                }
            };
            if !ok {
                failures.push(format!("expected {a}"));
            }
        }
        failures
    }

    fn resolve(&self, rel: &str) -> Option<PathBuf> {
        confine(rel).ok().map(|p| self.fs_root.join(p))
    }

    /// Detaches the sandbox from cleanup and returns its base directory.
    pub fn keep(mut self) -> PathBuf {
        if let Some(dir) = self.dir.take() {
            let _ = dir.keep();
        }
        self.base.clone()
    }

    pub fn cleanup(mut self) -> io::Result<()> {
        match self.dir.take() {
            Some(dir) => dir.close(),
            None => Ok(()),
        }
    }
}

/// Creates a fresh sandbox under `parent` and populates it from the case's
/// fixture spec.
pub fn materialize_fixture(case: &TestCase, parent: &Path) -> Result<SandboxHandle, FixtureError> {
    let spec = &case.fixture;
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let dir = tempfile::Builder::new()
        .prefix("sandbox-")
        .tempdir_in(parent)
        .map_err(io_err(parent))?;
    let base = dir.path().to_path_buf();
    let fs_root = base.join("fs");
    fs::create_dir(&fs_root).map_err(io_err(&fs_root))?;

    for entry in &spec.entries {
        let target = fs_root.join(confine(&entry.path)?);
        match &entry.kind {
            EntryKind::Dir => fs::create_dir_all(&target).map_err(io_err(&target))?,
            EntryKind::File(bytes) => {
                if let Some(p) = target.parent() {
                    fs::create_dir_all(p).map_err(io_err(p))?;
                }
                fs::write(&target, bytes).map_err(io_err(&target))?;
            }
        }
    }

    let mut preopens = Vec::new();
    for p in &spec.preopens {
        let host = fs_root.join(confine(&p.host)?);
        fs::create_dir_all(&host).map_err(io_err(&host))?;
        preopens.push(ResolvedPreopen {
            host,
            guest: p.guest.clone(),
        });
    }

    Ok(SandboxHandle {
        dir: Some(dir),
        base,
        fs_root,
        preopens,
        stdin: spec.stdin.clone(),
        env: spec.env.clone(),
        assertions: case
            .oracles
            .iter()
            .filter_map(|o| match o {
                OracleSpec::FilesystemState { assertions } => Some(assertions.clone()),
                _ => None,
            })
            .flatten()
            .collect(),
    })
}

impl Drop for SandboxHandle {
    fn drop(&mut self) {
        if let Some(dir) = self.dir.take() {
            let _ = dir.close();
        }
    }
}
