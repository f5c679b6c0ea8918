//! Reference evaluator for straight-line numeric function bodies.
//!
//! Covers the numeric, SIMD lane, local, global, and internal-call
//! instructions of the subset. Memory instructions and calls to imports are
//! rejected with [`EvalError::UnsupportedInstr`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::wat::ops::{LaneAccess, LaneOp, Op, Opcode};
use crate::wat::parse::parse_literal;
use crate::wat::{ConstExpr, Instr, Module, ValType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    I32(i32),
    I64(i64),
    /// Bit pattern.
    F32(u32),
    /// Bit pattern.
    F64(u64),
    /// Little-endian lane bytes.
    V128([u8; 16]),
}

impl Value {
    pub fn ty(&self) -> ValType {
        match self {
            Value::I32(_) => ValType::I32,
            Value::I64(_) => ValType::I64,
            Value::F32(_) => ValType::F32,
            Value::F64(_) => ValType::F64,
            Value::V128(_) => ValType::V128,
        }
    }

    pub fn f32(v: f32) -> Value {
        Value::F32(v.to_bits())
    }

    pub fn f64(v: f64) -> Value {
        Value::F64(v.to_bits())
    }

    pub fn i32x4(lanes: [u32; 4]) -> Value {
        let mut out = [0u8; 16];
        for (chunk, lane) in out.chunks_exact_mut(4).zip(lanes) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
        Value::V128(out)
    }

    pub fn i64x2(lanes: [u64; 2]) -> Value {
        let mut out = [0u8; 16];
        for (chunk, lane) in out.chunks_exact_mut(8).zip(lanes) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
        Value::V128(out)
    }

    fn zero(ty: ValType) -> Value {
        match ty {
            ValType::I32 => Value::I32(0),
            ValType::I64 => Value::I64(0),
            ValType::F32 => Value::F32(0),
            ValType::F64 => Value::F64(0),
            ValType::V128 => Value::V128([0; 16]),
        }
    }

    pub fn as_instr(&self) -> Instr {
        match *self {
            Value::I32(v) => Instr::I32Const(v),
            Value::I64(v) => Instr::I64Const(v),
            Value::F32(v) => Instr::F32Const(v),
            Value::F64(v) => Instr::F64Const(v),
            Value::V128(v) => Instr::V128Const(v),
        }
    }

    /// Decimal rendering as a runtime's `--invoke` output would print it.
    pub fn render(&self) -> String {
        match *self {
            Value::I32(v) => v.to_string(),
            Value::I64(v) => v.to_string(),
            Value::F32(b) => f32::from_bits(b).to_string(),
            Value::F64(b) => f64::from_bits(b).to_string(),
            Value::V128(b) => format!("0x{:032x}", u128::from_le_bytes(b)),
        }
    }

    /// Equality up to NaN payloads: two NaNs of the same type agree.
    pub fn agrees_with(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::F32(a), Value::F32(b)) => a == b || (f32::from_bits(*a).is_nan() && f32::from_bits(*b).is_nan()),
            (Value::F64(a), Value::F64(b)) => a == b || (f64::from_bits(*a).is_nan() && f64::from_bits(*b).is_nan()),
            _ => self == other,
        }
    }
}

fn float_text(bits: u64, mant_bits: u32, exp_bits: u32, finite: impl Fn() -> String) -> String {
    let sign = if bits >> (mant_bits + exp_bits) & 1 == 1 {
        "-"
    } else {
        ""
    };
    let exp = bits >> mant_bits & ((1 << exp_bits) - 1);
    let mant = bits & ((1 << mant_bits) - 1);
    if exp == (1 << exp_bits) - 1 {
        if mant == 0 {
            format!("{sign}inf")
        } else if mant == 1 << (mant_bits - 1) {
            format!("{sign}nan")
        } else {
            format!("{sign}nan:0x{mant:x}")
        }
    } else {
        finite()
    }
}

/// Typed text form used in manifests and reports, e.g. `i64:4`,
/// `f64:-0.0`, `f32:nan:0x1`, `v128:i32x4 1 2 3 4`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Value::I32(v) => write!(f, "i32:{v}"),
            Value::I64(v) => write!(f, "i64:{v}"),
            Value::F32(b) => {
                let text = float_text(u64::from(b), 23, 8, || format!("{:?}", f32::from_bits(b)));
                write!(f, "f32:{text}")
            }
            Value::F64(b) => {
                let text = float_text(b, 52, 11, || format!("{:?}", f64::from_bits(b)));
                write!(f, "f64:{text}")
            }
            Value::V128(b) => {
                write!(f, "v128:i32x4")?;
                for chunk in b.chunks_exact(4) {
                    let lane = u32::from_le_bytes(chunk.try_into().expect("4 bytes"));
                    write!(f, " 0x{lane:08x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid value `{0}`: expected `<type>:<literal>` such as `i64:4`")]
pub struct ValueParseError(pub String);

impl FromStr for Value {
    type Err = ValueParseError;

    fn from_str(s: &str) -> Result<Value, ValueParseError> {
        let err = || ValueParseError(s.to_string());
        let (ty, lit) = s.split_once(':').ok_or_else(err)?;
        let ty = ValType::from_name(ty.trim()).ok_or_else(err)?;
        match parse_literal(ty, lit).ok_or_else(err)? {
            Instr::I32Const(v) => Ok(Value::I32(v)),
            Instr::I64Const(v) => Ok(Value::I64(v)),
            Instr::F32Const(v) => Ok(Value::F32(v)),
            Instr::F64Const(v) => Ok(Value::F64(v)),
            Instr::V128Const(v) => Ok(Value::V128(v)),
            _ => Err(err()),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Value, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrapKind {
    Unreachable,
    IntegerDivideByZero,
    IntegerOverflow,
}

impl TrapKind {
    /// Substring that runtimes commonly include in their trap message.
    pub fn message(self) -> &'static str {
        match self {
            TrapKind::Unreachable => "unreachable",
            TrapKind::IntegerDivideByZero => "divide by zero",
            TrapKind::IntegerOverflow => "integer overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Values(Vec<Value>),
    Trap(TrapKind),
}

impl EvalOutcome {
    /// Whitespace-separated decimal rendering of the result values.
    pub fn render(&self) -> String {
        match self {
            EvalOutcome::Values(vs) => vs.iter().map(Value::render).collect::<Vec<_>>().join("\n"),
            EvalOutcome::Trap(t) => format!("trap: {}", t.message()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("instruction `{0}` is outside the evaluable subset")]
    UnsupportedInstr(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("no exported function named `{0}`")]
    ExportNotFound(String),
    #[error("call depth exceeded {0}")]
    CallDepthExceeded(usize),
    #[error("lane index {index} out of range for {op} ({lanes} lanes)")]
    LaneOutOfRange { op: &'static str, index: u8, lanes: u8 },
    #[error("ill-typed body: {0}")]
    Malformed(String),
}

pub const MAX_CALL_DEPTH: usize = 64;

/// Invokes the exported function `export` with `args`.
pub fn eval_func(m: &Module, export: &str, args: &[Value]) -> Result<EvalOutcome, EvalError> {
    let index = m
        .exported_func(export)
        .ok_or_else(|| EvalError::ExportNotFound(export.to_string()))?;
    let ty = m
        .func_type(index)
        .ok_or_else(|| EvalError::ExportNotFound(export.to_string()))?;
    let arg_types: Vec<ValType> = args.iter().map(Value::ty).collect();
    if arg_types != ty.params {
        return Err(EvalError::SignatureMismatch(format!(
            "`{export}` expects {ty}, got ({})",
            arg_types.iter().map(|t| t.name()).collect::<Vec<_>>().join(" ")
        )));
    }
    let mut machine = Machine::new(m)?;
    match machine.call(index, args.to_vec(), 0) {
        Ok(values) => Ok(EvalOutcome::Values(values)),
        Err(Stop::Trap(t)) => Ok(EvalOutcome::Trap(t)),
        Err(Stop::Error(e)) => Err(e),
    }
}

enum Stop {
    Trap(TrapKind),
    Error(EvalError),
}

impl From<EvalError> for Stop {
    fn from(e: EvalError) -> Stop {
        Stop::Error(e)
    }
}

fn malformed(msg: impl Into<String>) -> Stop {
    Stop::Error(EvalError::Malformed(msg.into()))
}

struct Machine<'m> {
    module: &'m Module,
    globals: Vec<Value>,
    imported_funcs: u32,
}

impl<'m> Machine<'m> {
    fn new(module: &'m Module) -> Result<Machine<'m>, EvalError> {
        if module.imported_globals().next().is_some() {
            return Err(EvalError::UnsupportedInstr("imported global".into()));
        }
        let mut globals = Vec::with_capacity(module.globals.len());
        for g in &module.globals {
            let v = match g.init {
                ConstExpr::I32(v) => Value::I32(v),
                ConstExpr::I64(v) => Value::I64(v),
                ConstExpr::F32(v) => Value::F32(v),
                ConstExpr::F64(v) => Value::F64(v),
                ConstExpr::V128(v) => Value::V128(v),
                ConstExpr::GlobalGet(_) => return Err(EvalError::UnsupportedInstr("global.get initializer".into())),
            };
            globals.push(v);
        }
        Ok(Machine {
            module,
            globals,
            imported_funcs: module.imported_funcs().count() as u32,
        })
    }

    fn call(&mut self, index: u32, args: Vec<Value>, depth: usize) -> Result<Vec<Value>, Stop> {
        if depth >= MAX_CALL_DEPTH {
            return Err(EvalError::CallDepthExceeded(MAX_CALL_DEPTH).into());
        }
        if index < self.imported_funcs {
            return Err(EvalError::UnsupportedInstr("call to imported function".into()).into());
        }
        let func = self
            .module
            .funcs
            .get((index - self.imported_funcs) as usize)
            .ok_or_else(|| malformed(format!("function index {index} out of range")))?;
        let mut locals = args;
        locals.extend(func.locals.iter().map(|&t| Value::zero(t)));
        let mut stack: Vec<Value> = Vec::new();

        for instr in &func.body {
            match instr {
                Instr::Plain(Op::Return) => break,
                Instr::Plain(Op::Unreachable) => return Err(Stop::Trap(TrapKind::Unreachable)),
                Instr::Plain(Op::Nop) => {}
                Instr::Plain(Op::Drop) => {
                    pop(&mut stack)?;
                }
                Instr::Plain(Op::Select) => {
                    let c = pop_i32(&mut stack)?;
                    let b = pop(&mut stack)?;
                    let a = pop(&mut stack)?;
                    stack.push(if c != 0 { a } else { b });
                }
                Instr::Plain(op) => {
                    let (params, _) = op.signature().expect("monomorphic");
                    let at = stack
                        .len()
                        .checked_sub(params.len())
                        .ok_or_else(|| malformed(format!("stack underflow at {}", op.name())))?;
                    let inputs = stack.split_off(at);
                    stack.push(apply_op(*op, &inputs)?);
                }
                Instr::Lane(op, lane) => {
                    let arity = match op.access() {
                        LaneAccess::Extract => 1,
                        LaneAccess::Replace => 2,
                    };
                    let at = stack
                        .len()
                        .checked_sub(arity)
                        .ok_or_else(|| malformed(format!("stack underflow at {}", op.name())))?;
                    let inputs = stack.split_off(at);
                    stack.push(apply_lane(*op, *lane, &inputs)?);
                }
                Instr::Call(callee) => {
                    let ty = self
                        .module
                        .func_type(*callee)
                        .ok_or_else(|| malformed(format!("function index {callee} out of range")))?;
                    let at = stack
                        .len()
                        .checked_sub(ty.params.len())
                        .ok_or_else(|| malformed("stack underflow at call"))?;
                    let call_args = stack.split_off(at);
                    let results = self.call(*callee, call_args, depth + 1)?;
                    stack.extend(results);
                }
                Instr::LocalGet(i) => stack.push(*local(&mut locals, *i)?),
                Instr::LocalSet(i) => {
                    let v = pop(&mut stack)?;
                    *local(&mut locals, *i)? = v;
                }
                Instr::LocalTee(i) => {
                    let v = *stack.last().ok_or_else(|| malformed("stack underflow"))?;
                    *local(&mut locals, *i)? = v;
                }
                Instr::GlobalGet(i) => {
                    let v = *self
                        .globals
                        .get(*i as usize)
                        .ok_or_else(|| malformed(format!("global {i} out of range")))?;
                    stack.push(v);
                }
                Instr::GlobalSet(i) => {
                    let v = pop(&mut stack)?;
                    *self
                        .globals
                        .get_mut(*i as usize)
                        .ok_or_else(|| malformed(format!("global {i} out of range")))? = v;
                }
                Instr::I32Const(v) => stack.push(Value::I32(*v)),
                Instr::I64Const(v) => stack.push(Value::I64(*v)),
                Instr::F32Const(v) => stack.push(Value::F32(*v)),
                Instr::F64Const(v) => stack.push(Value::F64(*v)),
                Instr::V128Const(v) => stack.push(Value::V128(*v)),
                Instr::Mem(op, _) => return Err(EvalError::UnsupportedInstr(op.name().into()).into()),
                Instr::MemorySize => return Err(EvalError::UnsupportedInstr("memory.size".into()).into()),
                Instr::MemoryGrow => return Err(EvalError::UnsupportedInstr("memory.grow".into()).into()),
            }
        }

        let n = func.results.len();
        let at = stack
            .len()
            .checked_sub(n)
            .ok_or_else(|| malformed("too few results on the stack"))?;
        let results = stack.split_off(at);
        if results.iter().map(Value::ty).ne(func.results.iter().copied()) {
            return Err(malformed("result types do not match the signature"));
        }
        Ok(results)
    }
}

fn local(locals: &mut [Value], i: u32) -> Result<&mut Value, Stop> {
    locals
        .get_mut(i as usize)
        .ok_or_else(|| malformed(format!("local {i} out of range")))
}

fn pop(stack: &mut Vec<Value>) -> Result<Value, Stop> {
    stack.pop().ok_or_else(|| malformed("stack underflow"))
}

fn pop_i32(stack: &mut Vec<Value>) -> Result<i32, Stop> {
    match pop(stack)? {
        Value::I32(v) => Ok(v),
        other => Err(malformed(format!("expected i32, found {}", other.ty()))),
    }
}

/// Applies one SIMD lane instruction (splat, extend, lane arithmetic,
/// bitwise, extract or replace) to `inputs`.
pub fn eval_lane_op(instr: &Instr, inputs: &[Value]) -> Result<Value, EvalError> {
    let result = match instr {
        Instr::Plain(op) if matches!(op.opcode(), Opcode::Simd(_)) => apply_op(*op, inputs),
        Instr::Lane(op, lane) => apply_lane(*op, *lane, inputs),
        other => {
            return Err(EvalError::UnsupportedInstr(format!(
                "{other:?} is not a lane instruction"
            )))
        }
    };
    result.map_err(|stop| match stop {
        Stop::Error(e) => e,
        Stop::Trap(t) => EvalError::Malformed(format!("unexpected trap {t:?}")),
    })
}

fn check_inputs(name: &str, inputs: &[Value], expected: &[ValType]) -> Result<(), Stop> {
    if inputs.len() != expected.len() || inputs.iter().map(Value::ty).ne(expected.iter().copied()) {
        return Err(malformed(format!(
            "{name} expects ({}), got ({})",
            expected.iter().map(|t| t.name()).collect::<Vec<_>>().join(" "),
            inputs.iter().map(|v| v.ty().name()).collect::<Vec<_>>().join(" ")
        )));
    }
    Ok(())
}

fn apply_lane(op: LaneOp, lane: u8, inputs: &[Value]) -> Result<Value, Stop> {
    if lane >= op.lane_count() {
        return Err(EvalError::LaneOutOfRange {
            op: op.name(),
            index: lane,
            lanes: op.lane_count(),
        }
        .into());
    }
    let width = 16 / op.lane_count() as usize;
    let at = lane as usize * width;
    match op.access() {
        LaneAccess::Extract => {
            check_inputs(op.name(), inputs, &[ValType::V128])?;
            let Value::V128(v) = inputs[0] else { unreachable!() };
            let mut raw = [0u8; 8];
            raw[..width].copy_from_slice(&v[at..at + width]);
            let raw = u64::from_le_bytes(raw);
            Ok(match op {
                LaneOp::I8x16ExtractLaneS => Value::I32(raw as u8 as i8 as i32),
                LaneOp::I8x16ExtractLaneU => Value::I32(raw as u8 as i32),
                LaneOp::I16x8ExtractLaneS => Value::I32(raw as u16 as i16 as i32),
                LaneOp::I16x8ExtractLaneU => Value::I32(raw as u16 as i32),
                LaneOp::I32x4ExtractLane => Value::I32(raw as u32 as i32),
                LaneOp::I64x2ExtractLane => Value::I64(raw as i64),
                LaneOp::F32x4ExtractLane => Value::F32(raw as u32),
                LaneOp::F64x2ExtractLane => Value::F64(raw),
                _ => unreachable!("replace handled below"),
            })
        }
        LaneAccess::Replace => {
            check_inputs(op.name(), inputs, &[ValType::V128, op.scalar_type()])?;
            let Value::V128(mut v) = inputs[0] else { unreachable!() };
            let scalar: u64 = match inputs[1] {
                Value::I32(x) => x as u32 as u64,
                Value::I64(x) => x as u64,
                Value::F32(x) => u64::from(x),
                Value::F64(x) => x,
                Value::V128(_) => unreachable!("checked"),
            };
            v[at..at + width].copy_from_slice(&scalar.to_le_bytes()[..width]);
            Ok(Value::V128(v))
        }
    }
}

fn lanes_u32(v: [u8; 16]) -> [u32; 4] {
    std::array::from_fn(|i| u32::from_le_bytes(v[4 * i..4 * i + 4].try_into().expect("4")))
}

fn lanes_u64(v: [u8; 16]) -> [u64; 2] {
    std::array::from_fn(|i| u64::from_le_bytes(v[8 * i..8 * i + 8].try_into().expect("8")))
}

fn lanes_u16(v: [u8; 16]) -> [u16; 8] {
    std::array::from_fn(|i| u16::from_le_bytes([v[2 * i], v[2 * i + 1]]))
}

fn map2_u32(a: [u8; 16], b: [u8; 16], f: impl Fn(u32, u32) -> u32) -> Value {
    let (a, b) = (lanes_u32(a), lanes_u32(b));
    Value::i32x4(std::array::from_fn(|i| f(a[i], b[i])))
}

fn map2_u64(a: [u8; 16], b: [u8; 16], f: impl Fn(u64, u64) -> u64) -> Value {
    let (a, b) = (lanes_u64(a), lanes_u64(b));
    Value::i64x2(std::array::from_fn(|i| f(a[i], b[i])))
}

fn bytes_map(a: [u8; 16], b: [u8; 16], f: impl Fn(u8, u8) -> u8) -> Value {
    Value::V128(std::array::from_fn(|i| f(a[i], b[i])))
}

fn f32_min(a: f32, b: f32) -> f32 {
    if a.is_nan() || b.is_nan() {
        f32::NAN
    } else if a == b {
        // -0 and +0 compare equal; the sign bit decides
        f32::from_bits(a.to_bits() | b.to_bits())
    } else {
        a.min(b)
    }
}

fn f32_max(a: f32, b: f32) -> f32 {
    if a.is_nan() || b.is_nan() {
        f32::NAN
    } else if a == b {
        f32::from_bits(a.to_bits() & b.to_bits())
    } else {
        a.max(b)
    }
}

fn f64_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a == b {
        f64::from_bits(a.to_bits() | b.to_bits())
    } else {
        a.min(b)
    }
}

fn f64_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a == b {
        f64::from_bits(a.to_bits() & b.to_bits())
    } else {
        a.max(b)
    }
}

fn bool_val(b: bool) -> Value {
    Value::I32(b as i32)
}

fn apply_op(op: Op, inputs: &[Value]) -> Result<Value, Stop> {
    let (params, _) = op
        .signature()
        .ok_or_else(|| malformed(format!("{} is not a numeric instruction", op.name())))?;
    check_inputs(op.name(), inputs, params)?;
    use Value::*;
    let trap = |t| Err(Stop::Trap(t));
    Ok(match (op, inputs) {
        (Op::I32Eqz, [I32(a)]) => bool_val(*a == 0),
        (Op::I64Eqz, [I64(a)]) => bool_val(*a == 0),
        (Op::I32Clz, [I32(a)]) => I32(a.leading_zeros() as i32),
        (Op::I32Ctz, [I32(a)]) => I32(a.trailing_zeros() as i32),
        (Op::I32Popcnt, [I32(a)]) => I32(a.count_ones() as i32),
        (Op::I64Clz, [I64(a)]) => I64(a.leading_zeros() as i64),
        (Op::I64Ctz, [I64(a)]) => I64(a.trailing_zeros() as i64),
        (Op::I64Popcnt, [I64(a)]) => I64(a.count_ones() as i64),
        (op, [I32(a), I32(b)]) => {
            let (a, b) = (*a, *b);
            let (ua, ub) = (a as u32, b as u32);
            match op {
                Op::I32Eq => bool_val(a == b),
                Op::I32Ne => bool_val(a != b),
                Op::I32LtS => bool_val(a < b),
                Op::I32LtU => bool_val(ua < ub),
                Op::I32GtS => bool_val(a > b),
                Op::I32GtU => bool_val(ua > ub),
                Op::I32LeS => bool_val(a <= b),
                Op::I32LeU => bool_val(ua <= ub),
                Op::I32GeS => bool_val(a >= b),
                Op::I32GeU => bool_val(ua >= ub),
                Op::I32Add => I32(a.wrapping_add(b)),
                Op::I32Sub => I32(a.wrapping_sub(b)),
                Op::I32Mul => I32(a.wrapping_mul(b)),
                Op::I32DivS | Op::I32DivU | Op::I32RemS | Op::I32RemU if b == 0 => {
                    return trap(TrapKind::IntegerDivideByZero)
                }
                Op::I32DivS if a == i32::MIN && b == -1 => return trap(TrapKind::IntegerOverflow),
                Op::I32DivS => I32(a / b),
                Op::I32DivU => I32((ua / ub) as i32),
                Op::I32RemS => I32(a.wrapping_rem(b)),
                Op::I32RemU => I32((ua % ub) as i32),
                Op::I32And => I32(a & b),
                Op::I32Or => I32(a | b),
                Op::I32Xor => I32(a ^ b),
                Op::I32Shl => I32(a.wrapping_shl(ub)),
                Op::I32ShrS => I32(a.wrapping_shr(ub)),
                Op::I32ShrU => I32(ua.wrapping_shr(ub) as i32),
                Op::I32Rotl => I32(ua.rotate_left(ub % 32) as i32),
                Op::I32Rotr => I32(ua.rotate_right(ub % 32) as i32),
                _ => unreachable!("signature checked"),
            }
        }
        (op, [I64(a), I64(b)]) => {
            let (a, b) = (*a, *b);
            let (ua, ub) = (a as u64, b as u64);
            match op {
                Op::I64Eq => bool_val(a == b),
                Op::I64Ne => bool_val(a != b),
                Op::I64LtS => bool_val(a < b),
                Op::I64LtU => bool_val(ua < ub),
                Op::I64GtS => bool_val(a > b),
                Op::I64GtU => bool_val(ua > ub),
                Op::I64LeS => bool_val(a <= b),
                Op::I64LeU => bool_val(ua <= ub),
                Op::I64GeS => bool_val(a >= b),
                Op::I64GeU => bool_val(ua >= ub),
                Op::I64Add => I64(a.wrapping_add(b)),
                Op::I64Sub => I64(a.wrapping_sub(b)),
                Op::I64Mul => I64(a.wrapping_mul(b)),
                Op::I64DivS | Op::I64DivU | Op::I64RemS | Op::I64RemU if b == 0 => {
                    return trap(TrapKind::IntegerDivideByZero)
                }
                Op::I64DivS if a == i64::MIN && b == -1 => return trap(TrapKind::IntegerOverflow),
                Op::I64DivS => I64(a / b),
                Op::I64DivU => I64((ua / ub) as i64),
                Op::I64RemS => I64(a.wrapping_rem(b)),
                Op::I64RemU => I64((ua % ub) as i64),
                Op::I64And => I64(a & b),
                Op::I64Or => I64(a | b),
                Op::I64Xor => I64(a ^ b),
                Op::I64Shl => I64(a.wrapping_shl(ub as u32)),
                Op::I64ShrS => I64(a.wrapping_shr(ub as u32)),
                Op::I64ShrU => I64(ua.wrapping_shr(ub as u32) as i64),
                Op::I64Rotl => I64(ua.rotate_left((ub % 64) as u32) as i64),
                Op::I64Rotr => I64(ua.rotate_right((ub % 64) as u32) as i64),
                _ => unreachable!("signature checked"),
            }
        }
        (op, [F32(a)]) if op.signature().is_some_and(|(_, r)| r == [ValType::F32]) => {
            let x = f32::from_bits(*a);
            match op {
                Op::F32Abs => F32(a & 0x7fff_ffff),
                Op::F32Neg => F32(a ^ 0x8000_0000),
                Op::F32Ceil => Value::f32(x.ceil()),
                Op::F32Floor => Value::f32(x.floor()),
                Op::F32Trunc => Value::f32(x.trunc()),
                Op::F32Nearest => Value::f32(x.round_ties_even()),
                Op::F32Sqrt => Value::f32(x.sqrt()),
                _ => unreachable!("signature checked"),
            }
        }
        (op, [F64(a)]) if op.signature().is_some_and(|(_, r)| r == [ValType::F64]) => {
            let x = f64::from_bits(*a);
            match op {
                Op::F64Abs => F64(a & 0x7fff_ffff_ffff_ffff),
                Op::F64Neg => F64(a ^ 0x8000_0000_0000_0000),
                Op::F64Ceil => Value::f64(x.ceil()),
                Op::F64Floor => Value::f64(x.floor()),
                Op::F64Trunc => Value::f64(x.trunc()),
                Op::F64Nearest => Value::f64(x.round_ties_even()),
                Op::F64Sqrt => Value::f64(x.sqrt()),
                _ => unreachable!("signature checked"),
            }
        }
        (op, [F32(a), F32(b)]) => {
            let (x, y) = (f32::from_bits(*a), f32::from_bits(*b));
            match op {
                Op::F32Eq => bool_val(x == y),
                Op::F32Ne => bool_val(x != y),
                Op::F32Lt => bool_val(x < y),
                Op::F32Gt => bool_val(x > y),
                Op::F32Le => bool_val(x <= y),
                Op::F32Ge => bool_val(x >= y),
                Op::F32Add => Value::f32(x + y),
                Op::F32Sub => Value::f32(x - y),
                Op::F32Mul => Value::f32(x * y),
                Op::F32Div => Value::f32(x / y),
                Op::F32Min => Value::f32(f32_min(x, y)),
                Op::F32Max => Value::f32(f32_max(x, y)),
                Op::F32Copysign => F32((a & 0x7fff_ffff) | (b & 0x8000_0000)),
                _ => unreachable!("signature checked"),
            }
        }
        (op, [F64(a), F64(b)]) => {
            let (x, y) = (f64::from_bits(*a), f64::from_bits(*b));
            let sign = 0x8000_0000_0000_0000u64;
            match op {
                Op::F64Eq => bool_val(x == y),
                Op::F64Ne => bool_val(x != y),
                Op::F64Lt => bool_val(x < y),
                Op::F64Gt => bool_val(x > y),
                Op::F64Le => bool_val(x <= y),
                Op::F64Ge => bool_val(x >= y),
                Op::F64Add => Value::f64(x + y),
                Op::F64Sub => Value::f64(x - y),
                Op::F64Mul => Value::f64(x * y),
                Op::F64Div => Value::f64(x / y),
                Op::F64Min => Value::f64(f64_min(x, y)),
                Op::F64Max => Value::f64(f64_max(x, y)),
                Op::F64Copysign => F64((a & !sign) | (b & sign)),
                _ => unreachable!("signature checked"),
            }
        }
        (op, [V128(a), V128(b)]) => {
            let (a, b) = (*a, *b);
            match op {
                Op::V128And => bytes_map(a, b, |x, y| x & y),
                Op::V128AndNot => bytes_map(a, b, |x, y| x & !y),
                Op::V128Or => bytes_map(a, b, |x, y| x | y),
                Op::V128Xor => bytes_map(a, b, |x, y| x ^ y),
                Op::I32x4Add => map2_u32(a, b, u32::wrapping_add),
                Op::I32x4Sub => map2_u32(a, b, u32::wrapping_sub),
                Op::I32x4Mul => map2_u32(a, b, u32::wrapping_mul),
                Op::I64x2Add => map2_u64(a, b, u64::wrapping_add),
                Op::I64x2Sub => map2_u64(a, b, u64::wrapping_sub),
                Op::I64x2Mul => map2_u64(a, b, u64::wrapping_mul),
                Op::F32x4Add | Op::F32x4Sub | Op::F32x4Mul => map2_u32(a, b, |x, y| {
                    let (x, y) = (f32::from_bits(x), f32::from_bits(y));
                    match op {
                        Op::F32x4Add => x + y,
                        Op::F32x4Sub => x - y,
                        _ => x * y,
                    }
                    .to_bits()
                }),
                Op::F64x2Add | Op::F64x2Sub | Op::F64x2Mul => map2_u64(a, b, |x, y| {
                    let (x, y) = (f64::from_bits(x), f64::from_bits(y));
                    match op {
                        Op::F64x2Add => x + y,
                        Op::F64x2Sub => x - y,
                        _ => x * y,
                    }
                    .to_bits()
                }),
                _ => unreachable!("signature checked"),
            }
        }
        (Op::V128Bitselect, [V128(a), V128(b), V128(c)]) => {
            Value::V128(std::array::from_fn(|i| (a[i] & c[i]) | (b[i] & !c[i])))
        }
        (Op::V128Not, [V128(a)]) => Value::V128(a.map(|x| !x)),
        (Op::V128AnyTrue, [V128(a)]) => bool_val(a.iter().any(|&x| x != 0)),
        (op, [V128(a)]) => {
            let (u16s, u32s) = (lanes_u16(*a), lanes_u32(*a));
            match op {
                Op::I32x4ExtendLowI16x8S => Value::i32x4(std::array::from_fn(|i| u16s[i] as i16 as i32 as u32)),
                Op::I32x4ExtendHighI16x8S => Value::i32x4(std::array::from_fn(|i| u16s[i + 4] as i16 as i32 as u32)),
                Op::I32x4ExtendLowI16x8U => Value::i32x4(std::array::from_fn(|i| u16s[i] as u32)),
                Op::I32x4ExtendHighI16x8U => Value::i32x4(std::array::from_fn(|i| u16s[i + 4] as u32)),
                Op::I64x2ExtendLowI32x4S => Value::i64x2(std::array::from_fn(|i| u32s[i] as i32 as i64 as u64)),
                Op::I64x2ExtendHighI32x4S => Value::i64x2(std::array::from_fn(|i| u32s[i + 2] as i32 as i64 as u64)),
                Op::I64x2ExtendLowI32x4U => Value::i64x2(std::array::from_fn(|i| u32s[i] as u64)),
                Op::I64x2ExtendHighI32x4U => Value::i64x2(std::array::from_fn(|i| u32s[i + 2] as u64)),
                _ => unreachable!("signature checked"),
            }
        }
        // conversions and splats: one scalar input, result type differs
        (op, [x]) => match (op, *x) {
            (Op::I32WrapI64, I64(v)) => I32(v as i32),
            (Op::I64ExtendI32S, I32(v)) => I64(v as i64),
            (Op::I64ExtendI32U, I32(v)) => I64(v as u32 as i64),
            (Op::F32ConvertI32S, I32(v)) => Value::f32(v as f32),
            (Op::F32ConvertI32U, I32(v)) => Value::f32(v as u32 as f32),
            (Op::F32ConvertI64S, I64(v)) => Value::f32(v as f32),
            (Op::F32ConvertI64U, I64(v)) => Value::f32(v as u64 as f32),
            (Op::F32DemoteF64, F64(v)) => Value::f32(f64::from_bits(v) as f32),
            (Op::F64ConvertI32S, I32(v)) => Value::f64(v as f64),
            (Op::F64ConvertI32U, I32(v)) => Value::f64(v as u32 as f64),
            (Op::F64ConvertI64S, I64(v)) => Value::f64(v as f64),
            (Op::F64ConvertI64U, I64(v)) => Value::f64(v as u64 as f64),
            (Op::F64PromoteF32, F32(v)) => Value::f64(f32::from_bits(v) as f64),
            (Op::I32ReinterpretF32, F32(v)) => I32(v as i32),
            (Op::I64ReinterpretF64, F64(v)) => I64(v as i64),
            (Op::F32ReinterpretI32, I32(v)) => F32(v as u32),
            (Op::F64ReinterpretI64, I64(v)) => F64(v as u64),
            (Op::I8x16Splat, I32(v)) => Value::V128([v as u8; 16]),
            (Op::I16x8Splat, I32(v)) => {
                let b = (v as u16).to_le_bytes();
                Value::V128(std::array::from_fn(|i| b[i % 2]))
            }
            (Op::I32x4Splat, I32(v)) => Value::i32x4([v as u32; 4]),
            (Op::I64x2Splat, I64(v)) => Value::i64x2([v as u64; 2]),
            (Op::F32x4Splat, F32(v)) => Value::i32x4([v; 4]),
            (Op::F64x2Splat, F64(v)) => Value::i64x2([v; 2]),
            _ => unreachable!("signature checked"),
        },
        _ => unreachable!("signature checked"),
    })
}
