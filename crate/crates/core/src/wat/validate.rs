//! Static validation: limits, index spaces, and straight-line type checking.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::ops::{LaneAccess, MemAccess, Op};

/// Rule identifiers reported by [`validate_module`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    MemMaxExceeded,
    MemMinExceeded,
    LimitsMinGtMax,
    MultipleMemories,
    IndexOutOfBounds,
    TypeMismatch,
    StartSignature,
    DuplicateExport,
    MemoryRequired,
    LaneOutOfRange,
    AlignmentTooLarge,
    ImmutableGlobal,
    ConstExprInvalid,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::MemMaxExceeded => "MEM_MAX_EXCEEDED",
            Rule::MemMinExceeded => "MEM_MIN_EXCEEDED",
            Rule::LimitsMinGtMax => "LIMITS_MIN_GT_MAX",
            Rule::MultipleMemories => "MULTIPLE_MEMORIES",
            Rule::IndexOutOfBounds => "INDEX_OUT_OF_BOUNDS",
            Rule::TypeMismatch => "TYPE_MISMATCH",
            Rule::StartSignature => "START_SIGNATURE",
            Rule::DuplicateExport => "DUPLICATE_EXPORT",
            Rule::MemoryRequired => "MEMORY_REQUIRED",
            Rule::LaneOutOfRange => "LANE_OUT_OF_RANGE",
            Rule::AlignmentTooLarge => "ALIGNMENT_TOO_LARGE",
            Rule::ImmutableGlobal => "IMMUTABLE_GLOBAL",
            Rule::ConstExprInvalid => "CONST_EXPR_INVALID",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    /// Where the violation sits, e.g. `func[2] instr 5` or `memory[0]`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, rule: Rule, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            rule,
            location: location.into(),
            message: message.into(),
        });
    }
}

pub fn validate_module(module: &Module) -> ValidationReport {
    let mut report = ValidationReport::default();

    let memories: Vec<Limits> = module
        .imported_memories()
        .copied()
        .chain(module.memories.iter().copied())
        .collect();
    if memories.len() > 1 {
        report.push(
            Rule::MultipleMemories,
            "module",
            format!("{} memories declared, at most 1 allowed", memories.len()),
        );
    }
    for (i, limits) in memories.iter().enumerate() {
        check_limits(&mut report, &format!("memory[{i}]"), limits);
    }

    let global_count = module.global_count();
    let imported_globals = module.imported_globals().count() as u32;
    for (i, global) in module.globals.iter().enumerate() {
        let loc = format!("global[{}]", imported_globals as usize + i);
        check_const_expr(&mut report, module, &loc, &global.init, global.ty.ty, imported_globals);
    }

    let func_count = module.func_count();
    let mut names = HashSet::new();
    for export in &module.exports {
        let loc = format!("export \"{}\"", export.name);
        if !names.insert(export.name.as_str()) {
            report.push(Rule::DuplicateExport, &loc, "export name used twice");
        }
        let (space, bound) = match export.kind {
            ExportKind::Func => ("function", func_count),
            ExportKind::Memory => ("memory", memories.len() as u32),
            ExportKind::Global => ("global", global_count),
        };
        if export.index >= bound {
            report.push(
                Rule::IndexOutOfBounds,
                &loc,
                format!("{space} index {} out of bounds ({bound} defined)", export.index),
            );
        }
    }

    if let Some(start) = module.start {
        match module.func_type(start) {
            None => report.push(
                Rule::IndexOutOfBounds,
                "start",
                format!("function index {start} out of bounds ({func_count} defined)"),
            ),
            Some(ty) if !ty.params.is_empty() || !ty.results.is_empty() => report.push(
                Rule::StartSignature,
                "start",
                format!("start function must have type [] -> [], found {ty}"),
            ),
            Some(_) => {}
        }
    }

    for (i, seg) in module.data.iter().enumerate() {
        let loc = format!("data[{i}]");
        if memories.is_empty() {
            report.push(Rule::MemoryRequired, &loc, "data segment without a memory");
        }
        check_const_expr(&mut report, module, &loc, &seg.offset, ValType::I32, global_count);
    }

    let imported_funcs = module.imported_funcs().count();
    for (i, func) in module.funcs.iter().enumerate() {
        let loc = format!("func[{}]", imported_funcs + i);
        check_body(&mut report, module, &loc, func, !memories.is_empty());
    }

    report
}

fn check_limits(report: &mut ValidationReport, loc: &str, limits: &Limits) {
    if limits.min > MAX_PAGES {
        report.push(
            Rule::MemMinExceeded,
            loc,
            format!("minimum {} pages exceeds {MAX_PAGES}", limits.min),
        );
    }
    if let Some(max) = limits.max {
        if max > MAX_PAGES {
            report.push(
                Rule::MemMaxExceeded,
                loc,
                format!("maximum {max} pages exceeds {MAX_PAGES}"),
            );
        }
        if limits.min > max {
            report.push(
                Rule::LimitsMinGtMax,
                loc,
                format!("minimum {} exceeds maximum {max}", limits.min),
            );
        }
    }
}

/// `visible_globals` bounds `global.get` inside the expression: only
/// imported globals are visible to global initializers.
fn check_const_expr(
    report: &mut ValidationReport,
    module: &Module,
    loc: &str,
    expr: &ConstExpr,
    expected: ValType,
    visible_globals: u32,
) {
    let actual = match *expr {
        ConstExpr::I32(_) => ValType::I32,
        ConstExpr::I64(_) => ValType::I64,
        ConstExpr::F32(_) => ValType::F32,
        ConstExpr::F64(_) => ValType::F64,
        ConstExpr::V128(_) => ValType::V128,
        ConstExpr::GlobalGet(idx) => {
            if idx >= visible_globals {
                report.push(
                    Rule::IndexOutOfBounds,
                    loc,
                    format!("global index {idx} out of bounds in constant expression"),
                );
                return;
            }
            let gt = module.global_type(idx).expect("index checked");
            if gt.mutable {
                report.push(
                    Rule::ConstExprInvalid,
                    loc,
                    format!("constant expression reads mutable global {idx}"),
                );
            }
            gt.ty
        }
    };
    if actual != expected {
        report.push(
            Rule::TypeMismatch,
            loc,
            format!("constant expression has type {actual}, expected {expected}"),
        );
    }
}

/// Operand stack for straight-line type checking. After `unreachable` or
/// `return` the stack becomes polymorphic: pops below the floor yield any type.
struct TypeStack {
    stack: Vec<ValType>,
    polymorphic: bool,
}

impl TypeStack {
    fn pop(&mut self) -> Result<Option<ValType>, String> {
        match self.stack.pop() {
            Some(t) => Ok(Some(t)),
            None if self.polymorphic => Ok(None),
            None => Err("operand stack underflow".into()),
        }
    }

    fn pop_expect(&mut self, expected: ValType) -> Result<(), String> {
        match self.pop()? {
            Some(t) if t != expected => Err(format!("expected {expected} on stack, found {t}")),
            _ => Ok(()),
        }
    }

    fn unreachable(&mut self) {
        self.stack.clear();
        self.polymorphic = true;
    }
}

fn check_body(report: &mut ValidationReport, module: &Module, loc: &str, func: &FuncDef, has_memory: bool) {
    let locals: Vec<ValType> = func.params.iter().chain(&func.locals).copied().collect();
    let mut st = TypeStack {
        stack: Vec::new(),
        polymorphic: false,
    };

    for (pc, instr) in func.body.iter().enumerate() {
        let at = format!("{loc} instr {pc}");
        let result = step(&mut st, module, &locals, &func.results, instr, has_memory);
        if let Err((rule, message)) = result {
            report.push(rule, at, message);
            // Further type errors in this body would only be follow-ons.
            if rule == Rule::TypeMismatch {
                return;
            }
        }
    }

    let end_ok = if st.polymorphic {
        st.stack.len() <= func.results.len()
            && st
                .stack
                .iter()
                .rev()
                .zip(func.results.iter().rev())
                .all(|(a, b)| a == b)
    } else {
        st.stack == func.results
    };
    if !end_ok {
        report.push(
            Rule::TypeMismatch,
            format!("{loc} end"),
            format!(
                "function ends with stack {:?}, expected results {:?}",
                st.stack, func.results
            ),
        );
    }
}

type StepResult = Result<(), (Rule, String)>;

fn mismatch(msg: String) -> (Rule, String) {
    (Rule::TypeMismatch, msg)
}

fn step(
    st: &mut TypeStack,
    module: &Module,
    locals: &[ValType],
    results: &[ValType],
    instr: &Instr,
    has_memory: bool,
) -> StepResult {
    let local = |idx: u32| -> Result<ValType, (Rule, String)> {
        locals.get(idx as usize).copied().ok_or_else(|| {
            (
                Rule::IndexOutOfBounds,
                format!("local index {idx} out of bounds ({} locals)", locals.len()),
            )
        })
    };
    let global = |idx: u32| -> Result<GlobalType, (Rule, String)> {
        module.global_type(idx).ok_or_else(|| {
            (
                Rule::IndexOutOfBounds,
                format!("global index {idx} out of bounds ({} globals)", module.global_count()),
            )
        })
    };
    let need_memory = || -> StepResult {
        if has_memory {
            Ok(())
        } else {
            Err((Rule::MemoryRequired, "memory instruction without a memory".into()))
        }
    };

    match instr {
        Instr::Plain(op) => match op {
            Op::Unreachable | Op::Return => {
                if *op == Op::Return {
                    for &t in results.iter().rev() {
                        st.pop_expect(t).map_err(mismatch)?;
                    }
                }
                st.unreachable();
            }
            Op::Nop => {}
            Op::Drop => {
                st.pop().map_err(mismatch)?;
            }
            Op::Select => {
                st.pop_expect(ValType::I32).map_err(mismatch)?;
                let b = st.pop().map_err(mismatch)?;
                let a = st.pop().map_err(mismatch)?;
                match (a, b) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(mismatch(format!("select operands differ: {a} vs {b}")))
                    }
                    (Some(t), _) | (None, Some(t)) => st.stack.push(t),
                    (None, None) => {
                        // Both operands came from the polymorphic floor.
                        st.stack.push(ValType::I32);
                    }
                }
            }
            other => {
                let (params, outs) = other.signature().expect("monomorphic op");
                for &t in params.iter().rev() {
                    st.pop_expect(t)
                        .map_err(|e| mismatch(format!("{}: {e}", other.name())))?;
                }
                st.stack.extend_from_slice(outs);
            }
        },
        Instr::Call(idx) => {
            let ty = module.func_type(*idx).ok_or_else(|| {
                (
                    Rule::IndexOutOfBounds,
                    format!("function index {idx} out of bounds ({} functions)", module.func_count()),
                )
            })?;
            for &t in ty.params.iter().rev() {
                st.pop_expect(t).map_err(|e| mismatch(format!("call {idx}: {e}")))?;
            }
            st.stack.extend_from_slice(&ty.results);
        }
        Instr::LocalGet(idx) => st.stack.push(local(*idx)?),
        Instr::LocalSet(idx) => {
            let t = local(*idx)?;
            st.pop_expect(t).map_err(mismatch)?;
        }
        Instr::LocalTee(idx) => {
            let t = local(*idx)?;
            st.pop_expect(t).map_err(mismatch)?;
            st.stack.push(t);
        }
        Instr::GlobalGet(idx) => st.stack.push(global(*idx)?.ty),
        Instr::GlobalSet(idx) => {
            let gt = global(*idx)?;
            if !gt.mutable {
                return Err((Rule::ImmutableGlobal, format!("global.set on immutable global {idx}")));
            }
            st.pop_expect(gt.ty).map_err(mismatch)?;
        }
        Instr::I32Const(_) => st.stack.push(ValType::I32),
        Instr::I64Const(_) => st.stack.push(ValType::I64),
        Instr::F32Const(_) => st.stack.push(ValType::F32),
        Instr::F64Const(_) => st.stack.push(ValType::F64),
        Instr::V128Const(_) => st.stack.push(ValType::V128),
        Instr::Mem(op, arg) => {
            need_memory()?;
            if arg.align > op.natural_align() {
                return Err((
                    Rule::AlignmentTooLarge,
                    format!(
                        "{}: alignment 2^{} exceeds natural alignment 2^{}",
                        op.name(),
                        arg.align,
                        op.natural_align()
                    ),
                ));
            }
            match op.access() {
                MemAccess::Load => {
                    st.pop_expect(ValType::I32).map_err(mismatch)?;
                    st.stack.push(op.value_type());
                }
                MemAccess::Store => {
                    st.pop_expect(op.value_type()).map_err(mismatch)?;
                    st.pop_expect(ValType::I32).map_err(mismatch)?;
                }
            }
        }
        Instr::Lane(op, lane) => {
            if *lane >= op.lane_count() {
                return Err((
                    Rule::LaneOutOfRange,
                    format!("{}: lane {lane} >= {}", op.name(), op.lane_count()),
                ));
            }
            match op.access() {
                LaneAccess::Extract => {
                    st.pop_expect(ValType::V128).map_err(mismatch)?;
                    st.stack.push(op.scalar_type());
                }
                LaneAccess::Replace => {
                    st.pop_expect(op.scalar_type()).map_err(mismatch)?;
                    st.pop_expect(ValType::V128).map_err(mismatch)?;
                    st.stack.push(ValType::V128);
                }
            }
        }
        Instr::MemorySize => {
            need_memory()?;
            st.stack.push(ValType::I32);
        }
        Instr::MemoryGrow => {
            need_memory()?;
            st.pop_expect(ValType::I32).map_err(mismatch)?;
            st.stack.push(ValType::I32);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_memory(min: u32, max: Option<u32>) -> Module {
        Module {
            memories: vec![Limits { min, max }],
            ..Module::default()
        }
    }

    #[test]
    fn memory_max_boundary() {
        assert!(validate_module(&with_memory(0, Some(65536))).is_valid());
        let r = validate_module(&with_memory(0, Some(65537)));
        assert!(r.has(Rule::MemMaxExceeded));
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn min_greater_than_max() {
        let r = validate_module(&with_memory(3, Some(2)));
        assert!(r.has(Rule::LimitsMinGtMax));
    }

    #[test]
    fn dangling_export() {
        let m = Module {
            exports: vec![Export {
                name: "f".into(),
                kind: ExportKind::Func,
                index: 0,
            }],
            ..Module::default()
        };
        assert!(validate_module(&m).has(Rule::IndexOutOfBounds));
    }

    #[test]
    fn import_counts_toward_index_space() {
        let m = Module {
            types: vec![FuncType::default()],
            imports: vec![Import {
                module: "host".into(),
                name: "f".into(),
                desc: ImportDesc::Func(FuncType::default()),
            }],
            exports: vec![Export {
                name: "f".into(),
                kind: ExportKind::Func,
                index: 0,
            }],
            start: Some(0),
            ..Module::default()
        };
        assert!(validate_module(&m).is_valid());
    }

    #[test]
    fn global_get_beyond_globals() {
        let m = Module {
            globals: vec![Global {
                ty: GlobalType {
                    ty: ValType::I32,
                    mutable: false,
                },
                init: ConstExpr::I32(0),
            }],
            funcs: vec![FuncDef {
                results: vec![ValType::I32],
                body: vec![Instr::GlobalGet(1)],
                ..FuncDef::default()
            }],
            ..Module::default()
        };
        let r = validate_module(&m);
        assert!(r.has(Rule::IndexOutOfBounds), "{r:?}");
    }

    #[test]
    fn type_mismatch_detected() {
        let m = Module {
            funcs: vec![FuncDef {
                results: vec![ValType::I64],
                body: vec![Instr::I32Const(1)],
                ..FuncDef::default()
            }],
            ..Module::default()
        };
        assert!(validate_module(&m).has(Rule::TypeMismatch));
    }

    #[test]
    fn unreachable_makes_stack_polymorphic() {
        let m = Module {
            funcs: vec![FuncDef {
                results: vec![ValType::I64],
                body: vec![Instr::Plain(Op::Unreachable), Instr::Plain(Op::I64Add)],
                ..FuncDef::default()
            }],
            ..Module::default()
        };
        assert!(validate_module(&m).is_valid());
    }

    #[test]
    fn lane_index_checked() {
        use crate::wat::ops::LaneOp;
        let m = Module {
            funcs: vec![FuncDef {
                params: vec![ValType::V128],
                results: vec![ValType::I64],
                body: vec![Instr::LocalGet(0), Instr::Lane(LaneOp::I64x2ExtractLane, 2)],
                ..FuncDef::default()
            }],
            ..Module::default()
        };
        assert!(validate_module(&m).has(Rule::LaneOutOfRange));
    }
}
