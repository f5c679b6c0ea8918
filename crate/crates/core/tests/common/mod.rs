//! Shared helpers for integration tests: module generators and a scriptable
//! stub runtime.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::os::unix::fs::PermissionsExt;
use std::path::Path;

use proptest::prelude::*;
use proptest::sample::select;

use sentinel::adapters::{discover_runtimes, RuntimeConfig, RuntimeSpec};
use sentinel::wat::*;

/// Boundary values for LEB128 fields.
pub const LEB_BOUNDARIES: [u64; 6] = [0, 127, 128, 624485, (1 << 32) - 1, u64::MAX];

fn boundary_u32() -> impl Strategy<Value = u32> {
    prop_oneof![
        3 => any::<u32>(),
        1 => select(vec![0u32, 127, 128, 624485, u32::MAX]),
    ]
}

fn boundary_i64() -> impl Strategy<Value = i64> {
    prop_oneof![
        3 => any::<i64>(),
        1 => select(LEB_BOUNDARIES.iter().map(|&v| v as i64).collect::<Vec<_>>()),
        1 => select(vec![-1i64, -64, -65, 63, 64, i64::MIN, i64::MAX]),
    ]
}

fn valtype() -> impl Strategy<Value = ValType> {
    select(ValType::ALL.to_vec())
}

fn functype() -> impl Strategy<Value = FuncType> {
    (
        prop::collection::vec(valtype(), 0..4),
        prop::collection::vec(valtype(), 0..3),
    )
        .prop_map(|(p, r)| FuncType::new(p, r))
}

fn name() -> impl Strategy<Value = String> {
    "[a-z_]{0,6}|\\PC{0,4}"
}

fn const_expr(ty: ValType, globals: u32) -> BoxedStrategy<ConstExpr> {
    let base = match ty {
        ValType::I32 => any::<i32>().prop_map(ConstExpr::I32).boxed(),
        ValType::I64 => boundary_i64().prop_map(ConstExpr::I64).boxed(),
        ValType::F32 => any::<u32>().prop_map(ConstExpr::F32).boxed(),
        ValType::F64 => any::<u64>().prop_map(ConstExpr::F64).boxed(),
        ValType::V128 => any::<[u8; 16]>().prop_map(ConstExpr::V128).boxed(),
    };
    if globals == 0 {
        base
    } else {
        prop_oneof![4 => base, 1 => (0..globals).prop_map(ConstExpr::GlobalGet)].boxed()
    }
}

fn instr(funcs: u32, locals: u32, globals: u32) -> BoxedStrategy<Instr> {
    let mut choices: Vec<BoxedStrategy<Instr>> = vec![
        select(Op::ALL.to_vec()).prop_map(Instr::Plain).boxed(),
        any::<i32>().prop_map(Instr::I32Const).boxed(),
        boundary_i64().prop_map(Instr::I64Const).boxed(),
        any::<u32>().prop_map(Instr::F32Const).boxed(),
        any::<u64>().prop_map(Instr::F64Const).boxed(),
        any::<[u8; 16]>().prop_map(Instr::V128Const).boxed(),
        (select(MemOp::ALL.to_vec()), 0u32..5, boundary_u32())
            .prop_map(|(op, align, offset)| Instr::Mem(op, MemArg { align, offset }))
            .boxed(),
        select(LaneOp::ALL.to_vec())
            .prop_flat_map(|op| (Just(op), 0..op.lane_count()))
            .prop_map(|(op, lane)| Instr::Lane(op, lane))
            .boxed(),
        Just(Instr::MemorySize).boxed(),
        Just(Instr::MemoryGrow).boxed(),
    ];
    if funcs > 0 {
        choices.push((0..funcs).prop_map(Instr::Call).boxed());
    }
    if locals > 0 {
        choices.push((0..locals).prop_map(Instr::LocalGet).boxed());
        choices.push((0..locals).prop_map(Instr::LocalSet).boxed());
        choices.push((0..locals).prop_map(Instr::LocalTee).boxed());
    }
    if globals > 0 {
        choices.push((0..globals).prop_map(Instr::GlobalGet).boxed());
        choices.push((0..globals).prop_map(Instr::GlobalSet).boxed());
    }
    proptest::strategy::Union::new(choices).boxed()
}

fn limits() -> impl Strategy<Value = Limits> {
    (0u32..70000, prop::option::of(0u32..70000)).prop_map(|(min, max)| Limits { min, max })
}

fn import() -> impl Strategy<Value = Import> {
    let desc = prop_oneof![
        functype().prop_map(ImportDesc::Func),
        (valtype(), any::<bool>()).prop_map(|(ty, mutable)| ImportDesc::Global(GlobalType { ty, mutable })),
    ];
    (name(), name(), desc).prop_map(|(module, name, desc)| Import { module, name, desc })
}

/// Structurally arbitrary modules: any shape the encoder accepts, not
/// necessarily valid.
pub fn arb_module() -> impl Strategy<Value = Module> {
    let header = (
        prop::collection::vec(import(), 0..3),
        prop::option::of(prop_oneof![
            limits().prop_map(|l| (false, l)),
            limits().prop_map(|l| (true, l)),
        ]),
        prop::collection::vec(functype(), 0..4),
        prop::collection::vec((valtype(), any::<bool>()), 0..3),
    );
    header
        .prop_flat_map(|(mut imports, memory, sigs, gtys)| {
            let mut memories = Vec::new();
            match memory {
                Some((true, l)) => imports.push(Import {
                    module: "env".into(),
                    name: "mem".into(),
                    desc: ImportDesc::Memory(l),
                }),
                Some((false, l)) => memories.push(l),
                None => {}
            }
            let imported_funcs = imports.iter().filter(|i| matches!(i.desc, ImportDesc::Func(_))).count() as u32;
            let imported_globals = imports
                .iter()
                .filter(|i| matches!(i.desc, ImportDesc::Global(_)))
                .count() as u32;
            let funcs = imported_funcs + sigs.len() as u32;
            let globals = imported_globals + gtys.len() as u32;

            let bodies: Vec<_> = sigs
                .iter()
                .map(|sig| {
                    let sig = sig.clone();
                    prop::collection::vec(valtype(), 0..4).prop_flat_map(move |locals| {
                        let n = (sig.params.len() + locals.len()) as u32;
                        let sig = sig.clone();
                        prop::collection::vec(instr(funcs, n, globals), 0..12).prop_map(move |body| FuncDef {
                            params: sig.params.clone(),
                            results: sig.results.clone(),
                            locals: locals.clone(),
                            body,
                        })
                    })
                })
                .collect();
            let global_defs: Vec<_> = gtys
                .iter()
                .map(|&(ty, mutable)| {
                    const_expr(ty, imported_globals).prop_map(move |init| Global {
                        ty: GlobalType { ty, mutable },
                        init,
                    })
                })
                .collect();
            let has_memory = !memories.is_empty() || imports.iter().any(|i| matches!(i.desc, ImportDesc::Memory(_)));
            let exports = prop::collection::vec(
                prop_oneof![
                    (0..funcs.max(1)).prop_map(|i| (ExportKind::Func, i)),
                    (0..globals.max(1)).prop_map(|i| (ExportKind::Global, i)),
                    Just((ExportKind::Memory, 0)),
                ],
                0..4,
            );
            let data = prop::collection::vec(
                (const_expr(ValType::I32, 0), prop::collection::vec(any::<u8>(), 0..20))
                    .prop_map(|(offset, bytes)| DataSegment { offset, bytes }),
                if has_memory { 0..3 } else { 0..1 },
            );
            let customs = prop::collection::vec(
                (name(), prop::collection::vec(any::<u8>(), 0..40))
                    .prop_map(|(name, payload)| CustomSection { name, payload }),
                0..3,
            );
            let start = prop::option::of(0..funcs.max(1));
            (
                Just(imports),
                Just(memories),
                bodies,
                global_defs,
                exports,
                start,
                data,
                customs,
                Just((funcs, globals, has_memory)),
            )
        })
        .prop_map(
            |(imports, memories, funcs, globals, exports, start, data, customs, (nf, ng, has_mem))| {
                let exports = exports
                    .into_iter()
                    .filter(|(k, _)| match k {
                        ExportKind::Func => nf > 0,
                        ExportKind::Global => ng > 0,
                        ExportKind::Memory => has_mem,
                    })
                    .enumerate()
                    .map(|(i, (kind, index))| Export {
                        name: format!("e{i}"),
                        kind,
                        index,
                    })
                    .collect();
                let mut m = Module {
                    types: Vec::new(),
                    imports,
                    funcs,
                    memories,
                    globals,
                    exports,
                    start: start.filter(|_| nf > 0),
                    data: if has_mem { data } else { Vec::new() },
                    customs,
                };
                m.intern_types();
                m
            },
        )
}

/// Renders an `f32` literal that the text parsers read back to `bits`.
fn f32_literal(bits: u32) -> String {
    let v = f32::from_bits(bits);
    if v.is_nan() {
        let sign = if bits >> 31 == 1 { "-" } else { "" };
        format!("{sign}nan:0x{:x}", bits & 0x7f_ffff)
    } else if v.is_infinite() {
        if v < 0.0 {
            "-inf".into()
        } else {
            "inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

fn f64_literal(bits: u64) -> String {
    let v = f64::from_bits(bits);
    if v.is_nan() {
        let sign = if bits >> 63 == 1 { "-" } else { "" };
        format!("{sign}nan:0x{:x}", bits & 0xf_ffff_ffff_ffff)
    } else if v.is_infinite() {
        if v < 0.0 {
            "-inf".into()
        } else {
            "inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

/// Random bits for an instruction tree, consumed front to back.
#[derive(Debug, Clone)]
pub struct Entropy(pub Vec<u64>, pub usize);

impl Entropy {
    fn next(&mut self) -> u64 {
        let v = self.0.get(self.1 % self.0.len().max(1)).copied().unwrap_or(0);
        self.1 += 1;
        v.rotate_left(self.1 as u32 % 64) ^ (self.1 as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[(self.next() % xs.len() as u64) as usize]
    }
}

const PARAMS: [ValType; 5] = [ValType::I32, ValType::I64, ValType::F32, ValType::F64, ValType::V128];

fn leaf(ty: ValType, e: &mut Entropy) -> String {
    if e.next().is_multiple_of(3) {
        let idx = PARAMS.iter().position(|&p| p == ty).expect("every type is a param");
        return format!("(local.get {idx})");
    }
    let bits = e.next();
    match ty {
        ValType::I32 => format!("(i32.const {})", bits as i32),
        ValType::I64 => format!("(i64.const {})", bits as i64),
        ValType::F32 => format!("(f32.const {})", f32_literal(bits as u32)),
        ValType::F64 => format!("(f64.const {})", f64_literal(bits)),
        ValType::V128 => {
            let hi = e.next();
            format!(
                "(v128.const i32x4 {} {} {} {})",
                bits as u32,
                (bits >> 32) as u32,
                hi as u32,
                (hi >> 32) as u32
            )
        }
    }
}

/// A well-typed folded expression producing `ty`.
pub fn typed_expr(ty: ValType, depth: u32, e: &mut Entropy) -> String {
    if depth == 0 || e.next().is_multiple_of(4) {
        return leaf(ty, e);
    }
    match e.next() % 5 {
        0 => {
            let ops: Vec<LaneOp> = LaneOp::ALL
                .iter()
                .copied()
                .filter(|op| match op.access() {
                    ops::LaneAccess::Extract => op.scalar_type() == ty,
                    ops::LaneAccess::Replace => ty == ValType::V128,
                })
                .collect();
            if !ops.is_empty() {
                let op = e.pick(&ops);
                let lane = e.next() % op.lane_count() as u64;
                let v = typed_expr(ValType::V128, depth - 1, e);
                return match op.access() {
                    ops::LaneAccess::Extract => format!("({} {lane} {v})", op.name()),
                    ops::LaneAccess::Replace => {
                        let x = typed_expr(op.scalar_type(), depth - 1, e);
                        format!("({} {lane} {v} {x})", op.name())
                    }
                };
            }
        }
        1 => {
            let loads: Vec<MemOp> = MemOp::ALL
                .iter()
                .copied()
                .filter(|op| op.access() == ops::MemAccess::Load && op.value_type() == ty)
                .collect();
            if !loads.is_empty() {
                let op = e.pick(&loads);
                let offset = e.next() % 4096;
                let align = e.next() as u32 % (op.natural_align() + 1);
                let addr = typed_expr(ValType::I32, depth - 1, e);
                return format!("({} offset={offset} align={} {addr})", op.name(), 1u32 << align);
            }
        }
        2 => {
            let c = typed_expr(ValType::I32, depth - 1, e);
            let a = typed_expr(ty, depth - 1, e);
            let b = typed_expr(ty, depth - 1, e);
            return format!("(select {a} {b} {c})");
        }
        _ => {}
    }
    let ops: Vec<Op> = Op::ALL
        .iter()
        .copied()
        .filter(|op| matches!(op.signature(), Some((_, r)) if r == [ty]))
        .collect();
    if ops.is_empty() {
        return leaf(ty, e);
    }
    let op = e.pick(&ops);
    let (params, _) = op.signature().expect("filtered");
    let mut s = format!("({}", op.name());
    for &p in params {
        let _ = write!(s, " {}", typed_expr(p, depth - 1, e));
    }
    s.push(')');
    s
}

/// A valid single-function module in folded WAT, with a store statement
/// before the result expression. No symbolic names, so text tools emit no
/// name section.
pub fn typed_module_text(result: ValType, e: &mut Entropy) -> String {
    let store = typed_expr(ValType::I64, 3, e);
    let addr = typed_expr(ValType::I32, 2, e);
    let body = typed_expr(result, 4, e);
    format!(
        "(module\n  (memory 1 2)\n  (func (export \"f\") (param i32 i64 f32 f64 v128) (result {result})\n    \
         (i64.store offset=8 {addr} {store})\n    {body}))\n"
    )
}

pub fn arb_typed_text() -> impl Strategy<Value = String> {
    (valtype(), prop::collection::vec(any::<u64>(), 8..32))
        .prop_map(|(ty, bits)| typed_module_text(ty, &mut Entropy(bits, 0)))
}

/// Shell stub that mimics a runtime CLI:
/// `stub --invoke NAME MODULE ARGS...` or `stub run MODULE`.
///
/// Exports named `echo`, `fail`, `crash`, `hang` and `quiet-abort` select a
/// behaviour; any other export prints `default_output` (with `$1` as the
/// first argument).
pub fn stub_script(name: &str, default_output: &str) -> String {
    format!(
        r#"#!/bin/sh
[ "$1" = --version ] && {{ echo "{name} 1.0.0"; exit 0; }}
if [ "$1" = --invoke ]; then export="$2"; shift 3; else export=""; shift 2; fi
case "$export" in
  echo) echo "$@" ;;
  fail) echo "error: boom" >&2; exit 3 ;;
  crash) kill -SEGV $$ ;;
  hang) sleep 30 & sleep 30 ;;
  quiet-abort) exit 134 ;;
  *) echo "{default_output}" ;;
esac
"#
    )
}

pub fn write_stub(dir: &Path, name: &str, default_output: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, stub_script(name, default_output)).expect("write stub");
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).expect("chmod");
    path
}

/// Config entry for a stub with every feature pinned off, so no probes run.
pub fn stub_entry(name: &str, binary: &Path, modes: &[&str]) -> String {
    let templates: Vec<String> = modes
        .iter()
        .map(|m| {
            format!(
                r#""{m}": {{ "run": "{{binary}} run {{module}}", "invoke": "{{binary}} --invoke {{invoke}} {{module}} {{args}}" }}"#
            )
        })
        .collect();
    let modes: Vec<String> = modes.iter().map(|m| format!("\"{m}\"")).collect();
    format!(
        r#""{name}": {{ "binary": "{}", "modes": [{}], "templates": {{ {} }},
            "features": {{ "SIMD": false, "WASI": false, "START_SECTION": false }} }}"#,
        binary.display(),
        modes.join(", "),
        templates.join(", ")
    )
}

pub fn stub_config(entries: &[String]) -> String {
    format!("{{ {} }}", entries.join(",\n"))
}

/// Writes stub runtimes into `dir` and discovers them. Each entry is
/// (name, default output).
pub fn stub_runtimes(dir: &Path, stubs: &[(&str, &str)], modes: &[&str]) -> Vec<RuntimeSpec> {
    let entries: Vec<String> = stubs
        .iter()
        .map(|(name, out)| stub_entry(name, &write_stub(dir, name, out), modes))
        .collect();
    let config = RuntimeConfig::parse(&stub_config(&entries)).expect("stub config parses");
    let found = discover_runtimes(&config);
    assert!(found.warnings.is_empty(), "{:?}", found.warnings);
    found.runtimes
}
