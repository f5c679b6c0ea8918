//! Test-case model, builtin detectors, manifests, and sandbox fixtures.

mod builtin;
mod fixture;
mod manifest;
mod verify;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::Category;
use crate::eval::Value;
use crate::wat::{self, AssembleError, Module};

pub use builtin::builtin_corpus;
pub use fixture::{materialize_fixture, FixtureError, SandboxHandle};
pub use manifest::{load_manifest, merge_cases, parse_manifest, ManifestError};
pub use verify::{verify_corpus, CaseFailure, FailureStage, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Feature {
    Simd,
    Wasi,
    StartSection,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Simd, Feature::Wasi, Feature::StartSection];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Simd => "SIMD",
            Feature::Wasi => "WASI",
            Feature::StartSection => "START_SECTION",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Wat(String),
    /// Absolute path of a `.wasm` file.
    Binary(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Invoke {
    pub export: String,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryKind {
    File(Vec<u8>),
    Dir,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureEntry {
    /// Relative to the sandbox root, `/`-separated.
    pub path: String,
    pub kind: EntryKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Preopen {
    /// Relative to the sandbox root; `.` is the root itself.
    pub host: String,
    pub guest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureSpec {
    pub entries: Vec<FixtureEntry>,
    pub preopens: Vec<Preopen>,
    pub stdin: Option<Vec<u8>>,
    pub env: Vec<(String, String)>,
}

impl FixtureSpec {
    pub fn file(mut self, path: &str, content: impl Into<Vec<u8>>) -> Self {
        self.entries.push(FixtureEntry {
            path: path.to_string(),
            kind: EntryKind::File(content.into()),
        });
        self
    }

    pub fn dir(mut self, path: &str) -> Self {
        self.entries.push(FixtureEntry {
            path: path.to_string(),
            kind: EntryKind::Dir,
        });
        self
    }

    pub fn preopen(mut self, host: &str, guest: &str) -> Self {
        self.preopens.push(Preopen {
            host: host.to_string(),
            guest: guest.to_string(),
        });
        self
    }

    pub fn stdin(mut self, bytes: impl Into<Vec<u8>>) -> Self {
        self.stdin = Some(bytes.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathAssertion {
    Exists(String),
    Absent(String),
    EntryCount { path: String, count: usize },
}

impl fmt::Display for PathAssertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathAssertion::Exists(p) => write!(f, "{p} exists"),
            PathAssertion::Absent(p) => write!(f, "{p} absent"),
            PathAssertion::EntryCount { path, count } => write!(f, "{path} holds {count} entries"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StdoutExpectation {
    Text(String),
    /// Result values, compared against the runtime's decimal rendering.
    Values(Vec<Value>),
}

impl StdoutExpectation {
    /// Expected output after whitespace trimming.
    pub fn rendered(&self) -> String {
        match self {
            StdoutExpectation::Text(t) => t.trim().to_string(),
            StdoutExpectation::Values(vs) => vs.iter().map(Value::render).collect::<Vec<_>>().join("\n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Exit 0 with the given trimmed stdout.
    ExpectedStdout {
        expect: StdoutExpectation,
    },
    /// Nonzero exit, no signal, stderr containing `substring`.
    ExpectTrap {
        substring: String,
    },
    /// Nonzero exit with a diagnostic containing `substring`, no signal.
    ExpectError {
        substring: String,
    },
    /// Statically valid; the runtime must accept it (exit 0).
    ExpectValid,
    /// Statically invalid; the runtime must reject it with a diagnostic.
    ExpectInvalid,
    FilesystemState {
        assertions: Vec<PathAssertion>,
    },
    /// All repeats produce byte-identical stdout.
    Determinism,
    /// Majority vote across runtimes.
    Differential,
    /// Peak-memory trend across repeats.
    LeakTrend {
        threshold_bytes_per_iter: f64,
        min_correlation: f64,
    },
}

pub const DEFAULT_LEAK_THRESHOLD: f64 = 1024.0 * 1024.0;
pub const DEFAULT_LEAK_CORRELATION: f64 = 0.9;

impl OracleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OracleSpec::ExpectedStdout { .. } => "ExpectedStdout",
            OracleSpec::ExpectTrap { .. } => "ExpectTrap",
            OracleSpec::ExpectError { .. } => "ExpectError",
            OracleSpec::ExpectValid => "ExpectValid",
            OracleSpec::ExpectInvalid => "ExpectInvalid",
            OracleSpec::FilesystemState { .. } => "FilesystemState",
            OracleSpec::Determinism => "Determinism",
            OracleSpec::Differential => "Differential",
            OracleSpec::LeakTrend { .. } => "LeakTrend",
        }
    }

    pub fn text(expected: &str) -> OracleSpec {
        OracleSpec::ExpectedStdout {
            expect: StdoutExpectation::Text(expected.to_string()),
        }
    }

    pub fn values(values: Vec<Value>) -> OracleSpec {
        OracleSpec::ExpectedStdout {
            expect: StdoutExpectation::Values(values),
        }
    }

    pub fn trap(substring: &str) -> OracleSpec {
        OracleSpec::ExpectTrap {
            substring: substring.to_string(),
        }
    }

    pub fn error(substring: &str) -> OracleSpec {
        OracleSpec::ExpectError {
            substring: substring.to_string(),
        }
    }

    pub fn leak() -> OracleSpec {
        OracleSpec::LeakTrend {
            threshold_bytes_per_iter: DEFAULT_LEAK_THRESHOLD,
            min_correlation: DEFAULT_LEAK_CORRELATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub id: String,
    pub category: Category,
    pub source: Source,
    pub invoke: Option<Invoke>,
    pub features: BTreeSet<Feature>,
    pub fixture: FixtureSpec,
    pub oracles: Vec<OracleSpec>,
    pub repeats: u32,
    pub timeout: Option<Duration>,
    /// One-line description of the bug pattern the case targets.
    pub note: String,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Decode(#[from] wat::DecodeError),
}

impl TestCase {
    pub fn new(id: &str, category: Category, wat: impl Into<String>) -> TestCase {
        TestCase {
            id: id.to_string(),
            category,
            source: Source::Wat(wat.into()),
            invoke: None,
            features: BTreeSet::new(),
            fixture: FixtureSpec::default(),
            oracles: Vec::new(),
            repeats: 1,
            timeout: None,
            note: String::new(),
        }
    }

    pub fn invoke(mut self, export: &str, args: Vec<Value>) -> Self {
        self.invoke = Some(Invoke {
            export: export.to_string(),
            args,
        });
        self
    }

    pub fn features(mut self, features: &[Feature]) -> Self {
        self.features.extend(features.iter().copied());
        self
    }

    pub fn fixture(mut self, fixture: FixtureSpec) -> Self {
        self.fixture = fixture;
        self
    }

    pub fn oracle(mut self, oracle: OracleSpec) -> Self {
        self.oracles.push(oracle);
        self
    }

    pub fn repeats(mut self, n: u32) -> Self {
        self.repeats = n;
        self
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = note.to_string();
        self
    }

    pub fn has_oracle(&self, pred: impl Fn(&OracleSpec) -> bool) -> bool {
        self.oracles.iter().any(pred)
    }

    pub fn expects_invalid(&self) -> bool {
        self.has_oracle(|o| matches!(o, OracleSpec::ExpectInvalid))
    }

    /// Parsed module: from the WAT text, or decoded from the binary fixture.
    pub fn module(&self) -> Result<Module, CaseError> {
        match &self.source {
            Source::Wat(text) => Ok(wat::parse_wat(text).map_err(AssembleError::from)?),
            Source::Binary(path) => Ok(wat::decode_module(&self.binary_bytes(path)?)?),
        }
    }

    /// Encoded module bytes. Binary fixtures are passed through verbatim.
    pub fn module_bytes(&self) -> Result<Vec<u8>, CaseError> {
        match &self.source {
            Source::Wat(text) => Ok(wat::assemble(text)?),
            Source::Binary(path) => self.binary_bytes(path),
        }
    }

    fn binary_bytes(&self, path: &PathBuf) -> Result<Vec<u8>, CaseError> {
        std::fs::read(path).map_err(|source| CaseError::Io {
            path: path.clone(),
            source,
        })
    }
}
