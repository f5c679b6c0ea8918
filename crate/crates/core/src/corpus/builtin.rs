//! The builtin detector corpus: at least one case per detector-backed leaf.
//!
//! Modules are straight-line WAT. WASI programs share a small prelude that
//! prints through `fd_write`; numbers are rendered with an unrolled decimal
//! printer since the subset has no loops.

use std::fmt::Write as _;

use crate::category::Category::*;
use crate::eval::Value;

use super::{Feature, FixtureSpec, OracleSpec, PathAssertion, TestCase};

const WASI: &str = "wasi_snapshot_preview1";

/// Signatures of the WASI preview1 functions the corpus imports.
fn wasi_signature(name: &str) -> &'static str {
    match name {
        "fd_write" | "fd_read" => "(param i32 i32 i32 i32) (result i32)",
        "path_open" => "(param i32 i32 i32 i32 i32 i64 i64 i32 i32) (result i32)",
        "path_rename" => "(param i32 i32 i32 i32 i32 i32) (result i32)",
        "fd_readdir" => "(param i32 i32 i32 i64 i32) (result i32)",
        "fd_fdstat_get" => "(param i32 i32) (result i32)",
        "clock_time_get" => "(param i32 i64 i32) (result i32)",
        "poll_oneoff" => "(param i32 i32 i32 i32) (result i32)",
        "proc_exit" => "(param i32)",
        other => panic!("no signature for {other}"),
    }
}

fn wasi_import(module: &str, name: &str, id: &str) -> String {
    format!(
        "  (import \"{module}\" \"{name}\" (func ${id} {}))\n",
        wasi_signature(name)
    )
}

/// Quotes bytes as a WAT string literal.
pub(crate) fn wat_string(bytes: &[u8]) -> String {
    let mut out = String::from("\"");
    for &b in bytes {
        match b {
            b'"' | b'\\' => {
                out.push('\\');
                out.push(b as char);
            }
            0x20..=0x7e => out.push(b as char),
            _ => {
                let _ = write!(out, "\\{b:02x}");
            }
        }
    }
    out.push('"');
    out
}

/// `$print_str (ptr, len)` and `$print_i32 (value)`, both writing to stdout.
///
/// Memory map used by the prelude: 0..8 iovec, 8 nwritten, 190..211 number
/// buffer. Cases keep their own data at 256 and above.
fn print_helpers() -> String {
    let mut s = String::from(
        r#"  (func $print_str (param $ptr i32) (param $len i32)
    (i32.store (i32.const 0) (local.get $ptr))
    (i32.store (i32.const 4) (local.get $len))
    (drop (call $fd_write (i32.const 1) (i32.const 0) (i32.const 1) (i32.const 8))))
  (func $print_i32 (param $v i32) (local $n i32) (local $len i32) (local $neg i32)
    (local.set $neg (i32.lt_s (local.get $v) (i32.const 0)))
    (local.set $n (select (i32.sub (i32.const 0) (local.get $v)) (local.get $v) (local.get $neg)))
"#,
    );
    let mut div: u32 = 1;
    for k in 0..10u32 {
        let digit = if k == 0 {
            "(i32.rem_u (local.get $n) (i32.const 10))".to_string()
        } else {
            format!("(i32.rem_u (i32.div_u (local.get $n) (i32.const {div})) (i32.const 10))")
        };
        let _ = writeln!(
            s,
            "    (i32.store8 (i32.const {}) (i32.add (i32.const 48) {digit}))",
            209 - k
        );
        div = div.wrapping_mul(10);
    }
    let mut len = "(i32.const 1)".to_string();
    let mut bound: u32 = 10;
    for _ in 1..10 {
        len = format!("(i32.add {len} (i32.ge_u (local.get $n) (i32.const {bound})))");
        bound = bound.wrapping_mul(10);
    }
    let _ = writeln!(s, "    (local.set $len {len})");
    s.push_str(
        r#"    (i32.store8 (i32.const 210) (i32.const 10))
    (i32.store8 (i32.sub (i32.const 209) (local.get $len)) (i32.const 45))
    (call $print_str
      (i32.sub (i32.sub (i32.const 210) (local.get $len)) (local.get $neg))
      (i32.add (i32.add (local.get $len) (local.get $neg)) (i32.const 1))))
"#,
    );
    s
}

/// Prints the file at `path` (relative to directory fd `dir`) to stdout.
const CAT_HELPER: &str = r#"  (func $cat (param $dir i32) (param $path i32) (param $len i32)
    (i32.store (i32.const 16) (i32.const -1))
    (drop (call $path_open (local.get $dir) (i32.const 0) (local.get $path) (local.get $len)
      (i32.const 0) (i64.const 2) (i64.const 0) (i32.const 0) (i32.const 16)))
    (i32.store (i32.const 32) (i32.const 1024))
    (i32.store (i32.const 36) (i32.const 512))
    (i32.store (i32.const 40) (i32.const 0))
    (drop (call $fd_read (i32.load (i32.const 16)) (i32.const 32) (i32.const 1) (i32.const 40)))
    (call $print_str (i32.const 1024) (i32.load (i32.const 40))))
"#;

/// A WASI command: the listed preview1 imports (plus `fd_write`), an
/// exported memory, `data` strings, the print prelude, `extra` functions,
/// and a `_start` running `body`.
fn wasi_program(imports: &[&str], data: &[(u32, &[u8])], extra: &str, body: &str) -> String {
    let mut s = String::from("(module\n");
    s.push_str(&wasi_import(WASI, "fd_write", "fd_write"));
    for name in imports.iter().filter(|n| **n != "fd_write") {
        s.push_str(&wasi_import(WASI, name, name));
    }
    s.push_str("  (memory (export \"memory\") 1)\n");
    for (offset, bytes) in data {
        let _ = writeln!(s, "  (data (i32.const {offset}) {})", wat_string(bytes));
    }
    s.push_str(&print_helpers());
    s.push_str(extra);
    let _ = write!(s, "  (func (export \"_start\")\n{body}))\n");
    s
}

fn wasi_case(id: &str, category: crate::category::Category, wat: String) -> TestCase {
    TestCase::new(id, category, wat).features(&[Feature::Wasi])
}

pub const DIR_COUNT_FILES: usize = 203;
pub const LEAK_REPEATS: u32 = 50;
const LARGE_MODULE_FUNCS: u32 = 3000;

fn dir_count_name(i: usize) -> String {
    format!("entry_{i:03}_{}", "x".repeat(30))
}

fn large_module() -> (String, i32) {
    let mut s = String::from("(module\n");
    for i in 0..LARGE_MODULE_FUNCS {
        let _ = writeln!(
            s,
            "  (func $f{i} (param i32) (result i32)\n    local.get 0 i32.const {} i32.xor i32.const {i} i32.add i32.const 3 i32.rotl)",
            i * 7
        );
    }
    let last = LARGE_MODULE_FUNCS - 1;
    let _ = writeln!(
        s,
        "  (func (export \"run\") (param i32) (result i32)\n    (call $f{last} (call $f{} (local.get 0)))))",
        last - 1
    );
    let f = |i: u32, x: u32| ((x ^ (i * 7)).wrapping_add(i)).rotate_left(3);
    let expected = f(last, f(last - 1, 5)) as i32;
    (s, expected)
}

#[allow(clippy::vec_init_then_push)]
pub fn builtin_corpus() -> Vec<TestCase> {
    let mut cases = Vec::new();

    // ---- A: backend compilation ----

    cases.push(
        TestCase::new(
            "A2.rotr-zero-amount",
            A2,
            r#"(module
  (func (export "rotr") (param i64 i64) (result i64)
    local.get 0
    local.get 1
    i64.rotr))"#,
        )
        .note("i64.rotr with a rotate amount of zero must return its input unchanged")
        .invoke("rotr", vec![Value::I64(4), Value::I64(0)])
        .oracle(OracleSpec::values(vec![Value::I64(4)]))
        .oracle(OracleSpec::Determinism)
        .oracle(OracleSpec::Differential)
        .repeats(3),
    );

    // i32x4 lanes viewed as i64x2: splat(7) as i64 is 7 | 7 << 32.
    cases.push(
        TestCase::new(
            "A2.i64x2-over-i32x4",
            A2,
            r#"(module
  (func (export "mix") (param i64 i32) (result i64)
    (i64x2.extract_lane 1
      (i64x2.add (i64x2.splat (local.get 0)) (i32x4.splat (local.get 1))))))"#,
        )
        .note("i64x2 arithmetic over a vector built with i32x4 lanes")
        .features(&[Feature::Simd])
        .invoke("mix", vec![Value::I64(5), Value::I32(7)])
        .oracle(OracleSpec::values(vec![Value::I64(7 + (7 << 32) + 5)]))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A2.i32x4-mul-extract",
            A2,
            r#"(module
  (func (export "mul") (param i32) (result i32)
    (i32x4.extract_lane 3
      (i32x4.mul (i32x4.splat (local.get 0)) (v128.const i32x4 1 2 3 4)))))"#,
        )
        .note("lane-wise multiply followed by a high-lane extract")
        .features(&[Feature::Simd])
        .invoke("mul", vec![Value::I32(-7)])
        .oracle(OracleSpec::values(vec![Value::I32(-28)]))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A3.select-v128",
            A3,
            r#"(module
  (func (export "pick") (param i32) (result i32)
    (i32x4.extract_lane 2
      (select (v128.const i32x4 1 2 3 4) (v128.const i32x4 5 6 7 8) (local.get 0)))))"#,
        )
        .note("select with v128 operands must compile")
        .features(&[Feature::Simd])
        .invoke("pick", vec![Value::I32(0)])
        .oracle(OracleSpec::values(vec![Value::I32(7)]))
        .oracle(OracleSpec::Differential),
    );

    let (large, large_expected) = large_module();
    cases.push(
        TestCase::new("A3.large-module", A3, large)
            .note("a module with thousands of functions must compile in every mode")
            .invoke("run", vec![Value::I32(5)])
            .oracle(OracleSpec::values(vec![Value::I32(large_expected)]))
            .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A3.div-copysign-f64",
            A3,
            r#"(module
  (func (export "f") (param f64 f64) (result f64)
    (f64.copysign (f64.div (local.get 0) (local.get 1)) (local.get 1))))"#,
        )
        .note("float division feeding copysign")
        .invoke("f", vec![Value::f64(7.0), Value::f64(-2.0)])
        .oracle(OracleSpec::values(vec![Value::f64(-3.5)]))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A4.extend-low-u",
            A4,
            r#"(module
  (func (export "widen") (param i32) (result i64)
    (i64x2.extract_lane 1
      (i64x2.extend_low_i32x4_u
        (i32x4.replace_lane 1 (i32x4.splat (i32.const 1)) (local.get 0))))))"#,
        )
        .note("i64x2.extend_low_i32x4_u must zero-extend, not reuse a stale register")
        .features(&[Feature::Simd])
        .invoke("widen", vec![Value::I32(-1)])
        .oracle(OracleSpec::values(vec![Value::I64(4294967295)]))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A4.f64x2-replace-lane",
            A4,
            r#"(module
  (func (export "lanes") (param f64 f64) (result f64) (local v128)
    (local.set 2 (f64x2.replace_lane 1 (f64x2.splat (local.get 0)) (local.get 1)))
    (f64.sub (f64x2.extract_lane 1 (local.get 2)) (f64x2.extract_lane 0 (local.get 2)))))"#,
        )
        .note("f64x2.replace_lane must leave the other lane intact")
        .features(&[Feature::Simd])
        .invoke("lanes", vec![Value::f64(1.5), Value::f64(4.25)])
        .oracle(OracleSpec::values(vec![Value::f64(2.75)]))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        wasi_case(
            "A5.nested-path-open",
            A5,
            wasi_program(
                &["path_open", "fd_read"],
                &[(256, b"sub/dir/file.txt")],
                CAT_HELPER,
                "    (call $cat (i32.const 3) (i32.const 256) (i32.const 16))",
            ),
        )
        .note("opening a multi-component relative path uses host path separators correctly")
        .fixture(
            FixtureSpec::default()
                .file("root/sub/dir/file.txt", "nested\n")
                .preopen("root", "/root"),
        )
        .oracle(OracleSpec::text("nested"))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A5.large-initial-memory",
            A5,
            r#"(module
  (memory 16384)
  (func (export "pages") (result i32) memory.size))"#,
        )
        .note("a 1 GiB initial memory reservation must succeed on every host OS")
        .invoke("pages", vec![])
        .oracle(OracleSpec::text("16384"))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A7.unaligned-v128-load",
            A7,
            r#"(module
  (memory 1)
  (data (i32.const 3) "\01\00\00\00\02\00\00\00\03\00\00\00\04\00\00\00")
  (func (export "load") (result i32)
    (i32x4.extract_lane 1 (v128.load align=1 (i32.const 3)))))"#,
        )
        .note("v128.load from an address that is not 16-byte aligned")
        .features(&[Feature::Simd])
        .invoke("load", vec![])
        .oracle(OracleSpec::text("2"))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A7.unaligned-v128-store",
            A7,
            r#"(module
  (memory 1)
  (func (export "store") (result i64)
    (v128.store align=1 (i32.const 5) (i64x2.splat (i64.const 0x0102030405060708)))
    (i64.load (i32.const 13))))"#,
        )
        .note("v128.store to an odd address, read back through a scalar load")
        .features(&[Feature::Simd])
        .invoke("store", vec![])
        .oracle(OracleSpec::text("72623859790382856"))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A8.mem-max-65536",
            A8,
            r#"(module
  (memory 0 65536)
  (func (export "pages") (result i32) memory.size))"#,
        )
        .note("a memory maximum of exactly 65536 pages is valid")
        .invoke("pages", vec![])
        .oracle(OracleSpec::ExpectValid)
        .oracle(OracleSpec::text("0")),
    );

    cases.push(
        TestCase::new(
            "A8.mem-max-65537",
            A8,
            r#"(module
  (memory 0 65537)
  (func (export "pages") (result i32) memory.size))"#,
        )
        .note("a memory maximum above 65536 pages must be rejected by validation")
        .invoke("pages", vec![])
        .oracle(OracleSpec::ExpectInvalid)
        .oracle(OracleSpec::error("")),
    );

    cases.push(
        TestCase::new(
            "A9.debug-info-garbage",
            A9,
            r#"(module
  (func (export "answer") (result i32) i32.const 42)
  (@custom ".debug_info" "\de\ad\be\ef\00\01\02\03")
  (@custom ".debug_line" "\ff\ff\ff\ff"))"#,
        )
        .note("malformed DWARF custom sections must not break compilation or execution")
        .invoke("answer", vec![])
        .oracle(OracleSpec::values(vec![Value::I32(42)]))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "A9.malformed-name-section",
            A9,
            r#"(module
  (func (export "answer") (result i32) i32.const 42)
  (@custom "name" "\01\ff\ff\ff\ff\0f\00"))"#,
        )
        .note("a corrupt name section is a custom section and must be ignored")
        .invoke("answer", vec![])
        .oracle(OracleSpec::values(vec![Value::I32(42)]))
        .oracle(OracleSpec::Differential),
    );

    // ---- B: WASI robustness ----

    let mut dir_fixture = FixtureSpec::default().preopen("data", "/data");
    for i in 0..DIR_COUNT_FILES {
        dir_fixture = dir_fixture.file(&format!("data/{}", dir_count_name(i)), "");
    }
    // Each dirent is a 24-byte header plus the name; 40-byte names make
    // 64-byte records, so bufused / 64 counts entries (`.` and `..` add < 64).
    cases.push(
        wasi_case(
            "B1.dir-count",
            B1,
            wasi_program(
                &["fd_readdir"],
                &[],
                "",
                "    (drop (call $fd_readdir (i32.const 3) (i32.const 4096) (i32.const 60000) (i64.const 0) (i32.const 16)))
    (call $print_i32 (i32.div_u (i32.load (i32.const 16)) (i32.const 64)))",
            ),
        )
        .note("fd_readdir must report every entry of a directory with 203 files")
        .fixture(dir_fixture)
        .oracle(OracleSpec::text("203"))
        .oracle(OracleSpec::FilesystemState {
            assertions: vec![PathAssertion::EntryCount {
                path: "data".into(),
                count: DIR_COUNT_FILES,
            }],
        }),
    );

    let rename_body = |old: &str, new: &str| {
        format!(
            "    (call $print_i32 (call $path_rename (i32.const 3) (i32.const 256) (i32.const {}) (i32.const 3) (i32.const 512) (i32.const {})))",
            old.len(),
            new.len()
        )
    };

    cases.push(
        wasi_case(
            "B1.rename-file",
            B1,
            wasi_program(
                &["path_rename"],
                &[(256, b"old.txt"), (512, b"new.txt")],
                "",
                &rename_body("old.txt", "new.txt"),
            ),
        )
        .note("path_rename within one preopened directory")
        .fixture(
            FixtureSpec::default()
                .file("work/old.txt", "payload")
                .preopen("work", "/work"),
        )
        .oracle(OracleSpec::text("0"))
        .oracle(OracleSpec::FilesystemState {
            assertions: vec![
                PathAssertion::Absent("work/old.txt".into()),
                PathAssertion::Exists("work/new.txt".into()),
            ],
        }),
    );

    cases.push(
        wasi_case(
            "B1.move-into-subdir",
            B1,
            wasi_program(
                &["path_rename"],
                &[(256, b"a.txt"), (512, b"sub/a.txt")],
                "",
                &rename_body("a.txt", "sub/a.txt"),
            ),
        )
        .note("path_rename moving a file into a subdirectory")
        .fixture(
            FixtureSpec::default()
                .file("work/a.txt", "payload")
                .dir("work/sub")
                .preopen("work", "/work"),
        )
        .oracle(OracleSpec::text("0"))
        .oracle(OracleSpec::FilesystemState {
            assertions: vec![
                PathAssertion::Absent("work/a.txt".into()),
                PathAssertion::Exists("work/sub/a.txt".into()),
            ],
        }),
    );

    // errno 44 is ENOENT in preview1.
    cases.push(
        wasi_case(
            "B1.rename-missing",
            B1,
            wasi_program(
                &["path_rename"],
                &[(256, b"missing.txt"), (512, b"x.txt")],
                "",
                &rename_body("missing.txt", "x.txt"),
            ),
        )
        .note("renaming a nonexistent file must report ENOENT")
        .fixture(FixtureSpec::default().dir("work").preopen("work", "/work"))
        .oracle(OracleSpec::text("44"))
        .oracle(OracleSpec::FilesystemState {
            assertions: vec![PathAssertion::Absent("work/x.txt".into())],
        }),
    );

    cases.push(
        wasi_case(
            "B1.mapped-dir-read",
            B1,
            wasi_program(
                &["path_open", "fd_read"],
                &[(256, b"greeting.txt")],
                CAT_HELPER,
                "    (call $cat (i32.const 3) (i32.const 256) (i32.const 12))",
            ),
        )
        .note("a host directory mapped under a different guest name")
        .fixture(
            FixtureSpec::default()
                .file("hostdir/greeting.txt", "mapped ok\n")
                .preopen("hostdir", "/mapped"),
        )
        .oracle(OracleSpec::text("mapped ok")),
    );

    let mut dual = String::from("(module\n");
    dual.push_str(&wasi_import(WASI, "fd_write", "fd_write"));
    dual.push_str(&wasi_import("wasi_unstable", "fd_write", "fd_write_unstable"));
    dual.push_str("  (memory (export \"memory\") 1)\n  (data (i32.const 256) \"ab\\0a\")\n");
    dual.push_str(&print_helpers());
    dual.push_str(
        r#"  (func (export "_start")
    (call $print_str (i32.const 256) (i32.const 1))
    (i32.store (i32.const 0) (i32.const 257))
    (i32.store (i32.const 4) (i32.const 2))
    (drop (call $fd_write_unstable (i32.const 1) (i32.const 0) (i32.const 1) (i32.const 8)))))
"#,
    );
    cases.push(
        wasi_case("B2.dual-wasi-import", B2, dual)
            .note("one module importing from both wasi_snapshot_preview1 and wasi_unstable")
            .oracle(OracleSpec::text("ab"))
            .oracle(OracleSpec::Differential),
    );

    for (id, guest) in [("B3.preopen-root", "/"), ("B3.preopen-dot", "./")] {
        cases.push(
            wasi_case(
                id,
                B3,
                wasi_program(
                    &["path_open", "fd_read"],
                    &[(256, b"hello.txt")],
                    CAT_HELPER,
                    "    (call $cat (i32.const 3) (i32.const 256) (i32.const 9))",
                ),
            )
            .note("preopened directories named / and ./")
            .fixture(FixtureSpec::default().file("hello.txt", "hello\n").preopen(".", guest))
            .oracle(OracleSpec::text("hello")),
        );
    }

    // fdstat: filetype @0, flags @2, rights_base @8; FD_WRITE is right bit 6.
    cases.push(
        wasi_case(
            "B4.fdstat-stdout",
            B4,
            wasi_program(
                &["fd_fdstat_get"],
                &[],
                "",
                "    (call $print_i32 (call $fd_fdstat_get (i32.const 1) (i32.const 64)))
    (call $print_i32 (i32.wrap_i64 (i64.and (i64.shr_u (i64.load (i32.const 72)) (i64.const 6)) (i64.const 1))))",
            ),
        )
        .note("fd_fdstat_get on stdout succeeds and reports the write right")
        .oracle(OracleSpec::text("0\n1")),
    );

    cases.push(
        wasi_case(
            "B4.stdin-echo",
            B4,
            wasi_program(
                &["fd_read"],
                &[],
                "",
                "    (i32.store (i32.const 32) (i32.const 1024))
    (i32.store (i32.const 36) (i32.const 256))
    (drop (call $fd_read (i32.const 0) (i32.const 32) (i32.const 1) (i32.const 40)))
    (call $print_str (i32.const 1024) (i32.load (i32.const 40)))",
            ),
        )
        .note("bytes read from stdin are written back to stdout")
        .fixture(FixtureSpec::default().stdin("ping\n"))
        .oracle(OracleSpec::text("ping")),
    );

    cases.push(
        wasi_case(
            "B5.clock-monotonic",
            B5,
            wasi_program(
                &["clock_time_get"],
                &[],
                "",
                "    (call $print_i32 (i32.add
      (call $clock_time_get (i32.const 1) (i64.const 1) (i32.const 16))
      (call $clock_time_get (i32.const 1) (i64.const 1) (i32.const 24))))
    (call $print_i32 (i64.ge_u (i64.load (i32.const 24)) (i64.load (i32.const 16))))",
            ),
        )
        .note("the monotonic clock is readable and never goes backwards")
        .oracle(OracleSpec::text("0\n1")),
    );

    // subscription (48 bytes at 96): userdata @0, tag @8, clock id @16,
    // timeout @24, precision @32, flags @40. One 32-byte event at 160.
    cases.push(
        wasi_case(
            "B5.poll-clock",
            B5,
            wasi_program(
                &["poll_oneoff"],
                &[],
                "",
                "    (i64.store (i32.const 96) (i64.const 7))
    (i32.store8 (i32.const 104) (i32.const 0))
    (i32.store (i32.const 112) (i32.const 1))
    (i64.store (i32.const 120) (i64.const 1000000))
    (i64.store (i32.const 128) (i64.const 0))
    (i32.store16 (i32.const 136) (i32.const 0))
    (call $print_i32 (call $poll_oneoff (i32.const 96) (i32.const 160) (i32.const 1) (i32.const 16)))
    (call $print_i32 (i32.load (i32.const 16)))",
            ),
        )
        .note("poll_oneoff with a single relative clock subscription")
        .oracle(OracleSpec::text("0\n1")),
    );

    // ---- C: runtime environment ----

    cases.push(
        TestCase::new("C1.empty-module", C1, "(module)")
            .note("instantiating an empty module is legal")
            .oracle(OracleSpec::ExpectValid)
            .oracle(OracleSpec::text("")),
    );

    cases.push(
        TestCase::new(
            "C1.repeated-instantiation",
            C1,
            r#"(module
  (memory 16)
  (data (i32.const 0) "instance"))"#,
        )
        .note("peak memory must not grow across many short-lived instantiations")
        .repeats(LEAK_REPEATS)
        .oracle(OracleSpec::text(""))
        .oracle(OracleSpec::leak()),
    );

    cases.push(
        TestCase::new(
            "C2.global-index-oob",
            C2,
            r#"(module
  (global i32 (i32.const 1))
  (func (export "g") (result i32) global.get 1))"#,
        )
        .note("a global index beyond the global index space must be reported")
        .invoke("g", vec![])
        .oracle(OracleSpec::ExpectInvalid)
        .oracle(OracleSpec::error("global")),
    );

    cases.push(
        TestCase::new(
            "C3.self-named-import-module",
            C3,
            r#"(module
  (import "mylib" "helper" (func $helper (result i32)))
  (func (export "_start") (drop (call $helper))))"#,
        )
        .note("an import from a module other than env must be resolved or reported, never crash")
        .oracle(OracleSpec::error("")),
    );

    let host_calls = |first: &str, second: &str| {
        let mut s = String::from("(module\n");
        s.push_str(&wasi_import(WASI, first, first));
        s.push_str(&wasi_import(WASI, second, second));
        s.push_str("  (memory (export \"memory\") 1)\n  (data (i32.const 256) \"ok\\0a\")\n");
        s.push_str(&print_helpers());
        s.push_str(
            r#"  (func (export "_start")
    (call $print_str (i32.const 256) (i32.const 3))
    (call $proc_exit (i32.const 0))))
"#,
        );
        s
    };
    for (id, first, second) in [
        ("C3.host-functions-ordered", "fd_write", "proc_exit"),
        ("C3.host-functions-reordered", "proc_exit", "fd_write"),
    ] {
        cases.push(
            wasi_case(id, C3, host_calls(first, second))
                .note("several host functions must map to the right imports regardless of order")
                .oracle(OracleSpec::text("ok"))
                .oracle(OracleSpec::Differential),
        );
    }

    cases.push(
        wasi_case(
            "C3.host-function-wrong-signature",
            C3,
            format!(
                r#"(module
  (import "{WASI}" "fd_write" (func $fd_write (param i32) (result i32)))
  (memory (export "memory") 1)
  (func (export "_start") (drop (call $fd_write (i32.const 1)))))"#
            ),
        )
        .note("a host import declared with the wrong signature must be rejected at link time")
        .oracle(OracleSpec::error("")),
    );

    cases.push(
        TestCase::new(
            "C4.grow-then-size",
            C4,
            r#"(module
  (memory 1)
  (func (export "grow") (result i32)
    (drop (memory.grow (i32.const 2)))
    memory.size))"#,
        )
        .note("memory.size reflects a successful memory.grow")
        .invoke("grow", vec![])
        .oracle(OracleSpec::text("3"))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "C4.grow-beyond-max",
            C4,
            r#"(module
  (memory 1 2)
  (func (export "grow") (result i32)
    (memory.grow (i32.const 5))))"#,
        )
        .note("growing past the declared maximum returns -1")
        .invoke("grow", vec![])
        .oracle(OracleSpec::text("-1"))
        .oracle(OracleSpec::Differential),
    );

    cases.push(
        TestCase::new(
            "C5.unreachable",
            C5,
            r#"(module
  (func (export "boom") unreachable))"#,
        )
        .note("unreachable traps and the runtime reports it")
        .invoke("boom", vec![])
        .oracle(OracleSpec::trap("unreachable")),
    );

    let mut start_section = String::from("(module\n");
    start_section.push_str(&wasi_import(WASI, "fd_write", "fd_write"));
    start_section.push_str("  (memory (export \"memory\") 1)\n  (data (i32.const 256) \"started\\0a\")\n");
    start_section.push_str(&print_helpers());
    start_section.push_str(
        r#"  (func $init (call $print_str (i32.const 256) (i32.const 8)))
  (start $init))
"#,
    );
    cases.push(
        wasi_case("C9.start-section", C9, start_section)
            .features(&[Feature::StartSection])
            .note("the start function runs on instantiation")
            .oracle(OracleSpec::text("started")),
    );

    cases.push(
        wasi_case(
            "C9.underscore-start",
            C9,
            wasi_program(
                &[],
                &[(256, b"entry\n")],
                "",
                "    (call $print_str (i32.const 256) (i32.const 6))",
            ),
        )
        .note("_start is the default entry point")
        .oracle(OracleSpec::text("entry")),
    );

    cases.push(
        TestCase::new(
            "C9.no-entry-point",
            C9,
            r#"(module
  (memory 1)
  (func (export "helper") (result i32) i32.const 1))"#,
        )
        .note("a module without an entry point is accepted")
        .oracle(OracleSpec::text("")),
    );

    cases.push(
        TestCase::new(
            "C10.data-segment-oob",
            C10,
            r#"(module
  (memory 1)
  (data (i32.const 65534) "\01\02\03\04"))"#,
        )
        .note("a data segment past the end of memory fails instantiation with an error, not a panic")
        .oracle(OracleSpec::error("")),
    );

    cases.push(
        TestCase::new(
            "C10.load-oob",
            C10,
            r#"(module
  (memory 1)
  (func (export "peek") (result i32)
    (i32.load (i32.const 65536))))"#,
        )
        .note("an out-of-bounds load traps with a message")
        .invoke("peek", vec![])
        .oracle(OracleSpec::trap("out of bounds")),
    );

    cases.push(
        TestCase::new(
            "C10.div-by-zero",
            C10,
            r#"(module
  (func (export "div") (param i32 i32) (result i32)
    (i32.div_u (local.get 0) (local.get 1))))"#,
        )
        .note("integer division by zero traps with a message")
        .invoke("div", vec![Value::I32(1), Value::I32(0)])
        .oracle(OracleSpec::trap("divide by zero")),
    );

    cases
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::MATRIX_ROWS;
    use crate::wat::{parse_wat, validate_module};
    use std::collections::BTreeSet;

    #[test]
    fn covers_exactly_the_detector_rows() {
        let cats: BTreeSet<_> = builtin_corpus().iter().map(|c| c.category).collect();
        let rows: BTreeSet<_> = MATRIX_ROWS.into_iter().collect();
        assert_eq!(cats, rows);
    }

    #[test]
    fn ids_are_unique_and_prefixed() {
        let cases = builtin_corpus();
        let ids: BTreeSet<_> = cases.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids.len(), cases.len());
        for c in &cases {
            let prefix = c.category.id().replace('.', "");
            assert!(c.id.starts_with(&format!("{prefix}.")), "{}", c.id);
            assert!(!c.oracles.is_empty(), "{}", c.id);
            assert!(!c.note.is_empty(), "{}", c.id);
        }
    }

    #[test]
    fn printer_renders_via_straight_line_code() {
        let wat = wasi_program(&[], &[], "", "    (call $print_i32 (i32.const -2147483648))");
        let m = parse_wat(&wat).unwrap();
        assert!(validate_module(&m).is_valid(), "{:?}", validate_module(&m));
    }

    #[test]
    fn wat_string_escapes() {
        assert_eq!(wat_string(b"a\"\\\n"), r#""a\"\\\0a""#);
    }

    #[test]
    fn dir_count_names_make_64_byte_dirents() {
        assert_eq!(dir_count_name(0).len(), 40);
        assert_eq!(dir_count_name(202).len(), 40);
    }
}
