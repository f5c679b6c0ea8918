//! JSON case manifests. The schema is documented in `docs/manifest-schema.md`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::category::Category;
use crate::eval::Value;
use crate::wat::{parse_wat, validate_module};

use super::fixture::{confine, FixtureError};
use super::{
    EntryKind, Feature, FixtureEntry, FixtureSpec, Invoke, OracleSpec, PathAssertion, Source, StdoutExpectation,
    TestCase, DEFAULT_LEAK_CORRELATION, DEFAULT_LEAK_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{field}: {reason}")]
    Field { field: String, reason: String },
    #[error("duplicate case id `{0}`")]
    DuplicateCaseId(String),
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ManifestError {
    fn field(field: impl Into<String>, reason: impl Into<String>) -> ManifestError {
        ManifestError::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Document {
    List(Vec<serde_json::Value>),
    Wrapped { cases: Vec<serde_json::Value> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDto {
    id: String,
    category: String,
    wat: Option<String>,
    wat_file: Option<String>,
    binary: Option<String>,
    invoke: Option<InvokeDto>,
    #[serde(default)]
    features: Vec<Feature>,
    #[serde(default)]
    fixture: FixtureDto,
    oracle: OneOrMany<OracleDto>,
    repeats: Option<u32>,
    timeout_secs: Option<f64>,
    note: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvokeDto {
    export: String,
    #[serde(default)]
    args: Vec<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FixtureDto {
    #[serde(default)]
    files: Vec<FileDto>,
    #[serde(default)]
    preopens: Vec<PreopenDto>,
    stdin: Option<String>,
    #[serde(default)]
    env: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDto {
    path: String,
    content: Option<String>,
    #[serde(default)]
    dir: bool,
    from: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreopenDto {
    host: String,
    guest: String,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum OracleDto {
    ExpectedStdout {
        expect: Option<String>,
        values: Option<Vec<Value>>,
    },
    ExpectTrap {
        substring: String,
    },
    ExpectError {
        #[serde(default)]
        substring: String,
    },
    ExpectValid,
    ExpectInvalid,
    FilesystemState {
        assertions: Vec<AssertionDto>,
    },
    Determinism,
    Differential,
    LeakTrend {
        threshold_bytes_per_iter: Option<f64>,
        min_correlation: Option<f64>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum AssertionDto {
    Exists(String),
    Absent(String),
    EntryCount { path: String, count: usize },
}

/// Reads and parses a manifest file. Relative paths inside it resolve
/// against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<TestCase>, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<TestCase>, ManifestError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc: Document = serde_json::from_str(text).map_err(|e| {
        ManifestError::field(
            "manifest",
            format!("expected a case array or {{\"cases\": [...]}}: {e}"),
        )
    })?;
    let raw = match doc {
        Document::List(v) | Document::Wrapped { cases: v } => v,
    };
    let mut cases = Vec::with_capacity(raw.len());
    for (i, value) in raw.into_iter().enumerate() {
        let field = format!("cases[{i}]");
        let dto: CaseDto =
            serde_json::from_value(value).map_err(|e| ManifestError::field(field.clone(), e.to_string()))?;
        cases.push(convert_case(dto, &field, base)?);
    }
    merge_cases(Vec::new(), cases)
}

/// Appends `extra` to `cases`, rejecting repeated ids.
pub fn merge_cases(cases: Vec<TestCase>, extra: Vec<TestCase>) -> Result<Vec<TestCase>, ManifestError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(cases.len() + extra.len());
    for case in cases.into_iter().chain(extra) {
        if !seen.insert(case.id.clone()) {
            return Err(ManifestError::DuplicateCaseId(case.id));
        }
        out.push(case);
    }
    Ok(out)
}

fn relative_file(base: &Path, rel: &str, field: &str) -> Result<PathBuf, ManifestError> {
    if Path::new(rel).is_absolute() {
        return Err(ManifestError::field(field, "must be relative"));
    }
    Ok(base.join(rel))
}

fn sandbox_path(path: &str, field: &str) -> Result<String, ManifestError> {
    if Path::new(path).is_absolute() {
        return Err(ManifestError::field(field, "must be relative"));
    }
    match confine(path) {
        Ok(_) => Ok(path.to_string()),
        Err(FixtureError::SandboxEscape(_)) => Err(ManifestError::field(field, "escapes the sandbox")),
        Err(e) => Err(ManifestError::field(field, e.to_string())),
    }
}

fn read(path: &Path, field: &str) -> Result<Vec<u8>, ManifestError> {
    fs::read(path).map_err(|e| ManifestError::field(field, format!("{}: {e}", path.display())))
}

/// Adds `src` (a file or a directory tree) at sandbox path `dest`.
fn copy_in(entries: &mut Vec<FixtureEntry>, src: &Path, dest: &str, field: &str) -> Result<(), ManifestError> {
    if src.is_dir() {
        entries.push(FixtureEntry {
            path: dest.to_string(),
            kind: EntryKind::Dir,
        });
        let mut children: Vec<_> = fs::read_dir(src)
            .map_err(|e| ManifestError::field(field, format!("{}: {e}", src.display())))?
            .filter_map(Result::ok)
            .collect();
        children.sort_by_key(|c| c.file_name());
        for child in children {
            let name = child.file_name().to_string_lossy().into_owned();
            copy_in(entries, &child.path(), &format!("{dest}/{name}"), field)?;
        }
    } else {
        entries.push(FixtureEntry {
            path: dest.to_string(),
            kind: EntryKind::File(read(src, field)?),
        });
    }
    Ok(())
}

fn convert_fixture(dto: FixtureDto, field: &str, base: &Path) -> Result<FixtureSpec, ManifestError> {
    let mut spec = FixtureSpec::default();
    for (i, f) in dto.files.into_iter().enumerate() {
        let ff = format!("{field}.files[{i}]");
        let path = sandbox_path(&f.path, &format!("{ff}.path"))?;
        match (f.content, f.dir, f.from) {
            (Some(text), false, None) => spec = spec.file(&path, text),
            (None, true, None) => spec = spec.dir(&path),
            (None, false, Some(from)) => {
                let src = relative_file(base, &from, &format!("{ff}.from"))?;
                copy_in(&mut spec.entries, &src, &path, &format!("{ff}.from"))?;
            }
            (None, false, None) => spec = spec.file(&path, Vec::new()),
            _ => {
                return Err(ManifestError::field(
                    ff,
                    "give exactly one of `content`, `dir: true`, `from`",
                ))
            }
        }
    }
    for (i, p) in dto.preopens.into_iter().enumerate() {
        let host = sandbox_path(&p.host, &format!("{field}.preopens[{i}].host"))?;
        spec = spec.preopen(&host, &p.guest);
    }
    spec.stdin = dto.stdin.map(String::into_bytes);
    spec.env = dto.env.into_iter().collect();
    Ok(spec)
}

fn convert_oracle(dto: OracleDto, field: &str) -> Result<OracleSpec, ManifestError> {
    Ok(match dto {
        OracleDto::ExpectedStdout { expect, values } => match (expect, values) {
            (Some(text), None) => OracleSpec::text(&text),
            (None, Some(values)) => OracleSpec::ExpectedStdout {
                expect: StdoutExpectation::Values(values),
            },
            _ => {
                return Err(ManifestError::field(
                    field,
                    "expected_stdout needs exactly one of `expect` or `values`",
                ))
            }
        },
        OracleDto::ExpectTrap { substring } => OracleSpec::ExpectTrap { substring },
        OracleDto::ExpectError { substring } => OracleSpec::ExpectError { substring },
        OracleDto::ExpectValid => OracleSpec::ExpectValid,
        OracleDto::ExpectInvalid => OracleSpec::ExpectInvalid,
        OracleDto::FilesystemState { assertions } => {
            let mut out = Vec::new();
            for (i, a) in assertions.into_iter().enumerate() {
                let af = format!("{field}.assertions[{i}]");
                out.push(match a {
                    AssertionDto::Exists(p) => PathAssertion::Exists(sandbox_path(&p, &af)?),
                    AssertionDto::Absent(p) => PathAssertion::Absent(sandbox_path(&p, &af)?),
                    AssertionDto::EntryCount { path, count } => PathAssertion::EntryCount {
                        path: sandbox_path(&path, &af)?,
                        count,
                    },
                });
            }
            OracleSpec::FilesystemState { assertions: out }
        }
        OracleDto::Determinism => OracleSpec::Determinism,
        OracleDto::Differential => OracleSpec::Differential,
        OracleDto::LeakTrend {
            threshold_bytes_per_iter,
            min_correlation,
        } => OracleSpec::LeakTrend {
            threshold_bytes_per_iter: threshold_bytes_per_iter.unwrap_or(DEFAULT_LEAK_THRESHOLD),
            min_correlation: min_correlation.unwrap_or(DEFAULT_LEAK_CORRELATION),
        },
    })
}

fn convert_case(dto: CaseDto, field: &str, base: &Path) -> Result<TestCase, ManifestError> {
    if dto.id.trim().is_empty() {
        return Err(ManifestError::field(format!("{field}.id"), "must not be empty"));
    }
    let category: Category = dto.category.parse().map_err(|e: crate::category::UnknownCategory| {
        ManifestError::field(format!("{field}.category"), e.to_string())
    })?;

    let source = match (dto.wat, dto.wat_file, dto.binary) {
        (Some(text), None, None) => Source::Wat(text),
        (None, Some(file), None) => {
            let f = format!("{field}.wat_file");
            let path = relative_file(base, &file, &f)?;
            let bytes = read(&path, &f)?;
            Source::Wat(String::from_utf8(bytes).map_err(|_| ManifestError::field(f, "not UTF-8"))?)
        }
        (None, None, Some(file)) => {
            let f = format!("{field}.binary");
            let path = relative_file(base, &file, &f)?;
            read(&path, &f)?;
            Source::Binary(path)
        }
        _ => {
            return Err(ManifestError::field(
                field,
                "give exactly one of `wat`, `wat_file`, `binary`",
            ))
        }
    };

    let oracles = match dto.oracle {
        OneOrMany::One(o) => vec![o],
        OneOrMany::Many(v) => v,
    };
    if oracles.is_empty() {
        return Err(ManifestError::field(
            format!("{field}.oracle"),
            "at least one oracle is required",
        ));
    }
    let mut case = TestCase::new(&dto.id, category, String::new());
    case.source = source;
    for (i, o) in oracles.into_iter().enumerate() {
        case.oracles.push(convert_oracle(o, &format!("{field}.oracle[{i}]"))?);
    }

    if let Some(inv) = dto.invoke {
        let mut args = Vec::new();
        for (i, a) in inv.args.iter().enumerate() {
            args.push(
                a.parse::<Value>()
                    .map_err(|e| ManifestError::field(format!("{field}.invoke.args[{i}]"), e.to_string()))?,
            );
        }
        case.invoke = Some(Invoke {
            export: inv.export,
            args,
        });
    }
    case.features = dto.features.into_iter().collect();
    case.fixture = convert_fixture(dto.fixture, &format!("{field}.fixture"), base)?;
    if let Some(r) = dto.repeats {
        if r == 0 {
            return Err(ManifestError::field(format!("{field}.repeats"), "must be at least 1"));
        }
        case.repeats = r;
    }
    if let Some(t) = dto.timeout_secs {
        if !(t.is_finite() && t > 0.0) {
            return Err(ManifestError::field(
                format!("{field}.timeout_secs"),
                "must be positive",
            ));
        }
        case.timeout = Some(Duration::from_secs_f64(t));
    }
    case.note = dto.note.unwrap_or_default();

    if let Source::Wat(text) = &case.source {
        let module = parse_wat(text).map_err(|e| ManifestError::field(format!("{field}.wat"), e.to_string()))?;
        if !case.expects_invalid() {
            let report = validate_module(&module);
            if let Some(v) = report.violations.first() {
                return Err(ManifestError::field(format!("{field}.wat"), v.to_string()));
            }
        }
    }
    Ok(case)
}
