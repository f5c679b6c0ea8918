//! Opcode tables for the supported instruction subset.
//!
//! Each table row ties a text mnemonic to its binary opcode and its stack
//! signature, so the parser, encoder, decoder, and validator share one source.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::ast::ValType;

/// Binary opcode. SIMD instructions sit behind the `0xFD` prefix followed by
/// an unsigned varint sub-opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Core(u8),
    Simd(u32),
}

pub const SIMD_PREFIX: u8 = 0xfd;

macro_rules! plain_ops {
    ($( $variant:ident => $name:literal, $enc:expr, [$($p:ident),*] -> [$($r:ident),*]; )*) => {
        /// Instructions without immediates.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Op {
            Unreachable,
            Nop,
            Return,
            Drop,
            Select,
            $($variant),*
        }

        impl Op {
            pub const ALL: &'static [Op] = &[
                Op::Unreachable, Op::Nop, Op::Return, Op::Drop, Op::Select,
                $(Op::$variant),*
            ];

            pub fn name(self) -> &'static str {
                match self {
                    Op::Unreachable => "unreachable",
                    Op::Nop => "nop",
                    Op::Return => "return",
                    Op::Drop => "drop",
                    Op::Select => "select",
                    $(Op::$variant => $name),*
                }
            }

            pub fn opcode(self) -> Opcode {
                match self {
                    Op::Unreachable => Opcode::Core(0x00),
                    Op::Nop => Opcode::Core(0x01),
                    Op::Return => Opcode::Core(0x0f),
                    Op::Drop => Opcode::Core(0x1a),
                    Op::Select => Opcode::Core(0x1b),
                    $(Op::$variant => $enc),*
                }
            }

            /// Monomorphic stack signature; `None` for the parametric and
            /// stack-polymorphic instructions.
            pub fn signature(self) -> Option<(&'static [ValType], &'static [ValType])> {
                match self {
                    Op::Unreachable | Op::Nop | Op::Return | Op::Drop | Op::Select => None,
                    $(Op::$variant => Some((&[$(ValType::$p),*], &[$(ValType::$r),*]))),*
                }
            }
        }
    };
}

use Opcode::{Core as C, Simd as S};

plain_ops! {
    I32Eqz => "i32.eqz", C(0x45), [I32] -> [I32];
    I32Eq => "i32.eq", C(0x46), [I32, I32] -> [I32];
    I32Ne => "i32.ne", C(0x47), [I32, I32] -> [I32];
    I32LtS => "i32.lt_s", C(0x48), [I32, I32] -> [I32];
    I32LtU => "i32.lt_u", C(0x49), [I32, I32] -> [I32];
    I32GtS => "i32.gt_s", C(0x4a), [I32, I32] -> [I32];
    I32GtU => "i32.gt_u", C(0x4b), [I32, I32] -> [I32];
    I32LeS => "i32.le_s", C(0x4c), [I32, I32] -> [I32];
    I32LeU => "i32.le_u", C(0x4d), [I32, I32] -> [I32];
    I32GeS => "i32.ge_s", C(0x4e), [I32, I32] -> [I32];
    I32GeU => "i32.ge_u", C(0x4f), [I32, I32] -> [I32];
    I64Eqz => "i64.eqz", C(0x50), [I64] -> [I32];
    I64Eq => "i64.eq", C(0x51), [I64, I64] -> [I32];
    I64Ne => "i64.ne", C(0x52), [I64, I64] -> [I32];
    I64LtS => "i64.lt_s", C(0x53), [I64, I64] -> [I32];
    I64LtU => "i64.lt_u", C(0x54), [I64, I64] -> [I32];
    I64GtS => "i64.gt_s", C(0x55), [I64, I64] -> [I32];
    I64GtU => "i64.gt_u", C(0x56), [I64, I64] -> [I32];
    I64LeS => "i64.le_s", C(0x57), [I64, I64] -> [I32];
    I64LeU => "i64.le_u", C(0x58), [I64, I64] -> [I32];
    I64GeS => "i64.ge_s", C(0x59), [I64, I64] -> [I32];
    I64GeU => "i64.ge_u", C(0x5a), [I64, I64] -> [I32];
    F32Eq => "f32.eq", C(0x5b), [F32, F32] -> [I32];
    F32Ne => "f32.ne", C(0x5c), [F32, F32] -> [I32];
    F32Lt => "f32.lt", C(0x5d), [F32, F32] -> [I32];
    F32Gt => "f32.gt", C(0x5e), [F32, F32] -> [I32];
    F32Le => "f32.le", C(0x5f), [F32, F32] -> [I32];
    F32Ge => "f32.ge", C(0x60), [F32, F32] -> [I32];
    F64Eq => "f64.eq", C(0x61), [F64, F64] -> [I32];
    F64Ne => "f64.ne", C(0x62), [F64, F64] -> [I32];
    F64Lt => "f64.lt", C(0x63), [F64, F64] -> [I32];
    F64Gt => "f64.gt", C(0x64), [F64, F64] -> [I32];
    F64Le => "f64.le", C(0x65), [F64, F64] -> [I32];
    F64Ge => "f64.ge", C(0x66), [F64, F64] -> [I32];
    I32Clz => "i32.clz", C(0x67), [I32] -> [I32];
    I32Ctz => "i32.ctz", C(0x68), [I32] -> [I32];
    I32Popcnt => "i32.popcnt", C(0x69), [I32] -> [I32];
    I32Add => "i32.add", C(0x6a), [I32, I32] -> [I32];
    I32Sub => "i32.sub", C(0x6b), [I32, I32] -> [I32];
    I32Mul => "i32.mul", C(0x6c), [I32, I32] -> [I32];
    I32DivS => "i32.div_s", C(0x6d), [I32, I32] -> [I32];
    I32DivU => "i32.div_u", C(0x6e), [I32, I32] -> [I32];
    I32RemS => "i32.rem_s", C(0x6f), [I32, I32] -> [I32];
    I32RemU => "i32.rem_u", C(0x70), [I32, I32] -> [I32];
    I32And => "i32.and", C(0x71), [I32, I32] -> [I32];
    I32Or => "i32.or", C(0x72), [I32, I32] -> [I32];
    I32Xor => "i32.xor", C(0x73), [I32, I32] -> [I32];
    I32Shl => "i32.shl", C(0x74), [I32, I32] -> [I32];
    I32ShrS => "i32.shr_s", C(0x75), [I32, I32] -> [I32];
    I32ShrU => "i32.shr_u", C(0x76), [I32, I32] -> [I32];
    I32Rotl => "i32.rotl", C(0x77), [I32, I32] -> [I32];
    I32Rotr => "i32.rotr", C(0x78), [I32, I32] -> [I32];
    I64Clz => "i64.clz", C(0x79), [I64] -> [I64];
    I64Ctz => "i64.ctz", C(0x7a), [I64] -> [I64];
    I64Popcnt => "i64.popcnt", C(0x7b), [I64] -> [I64];
    I64Add => "i64.add", C(0x7c), [I64, I64] -> [I64];
    I64Sub => "i64.sub", C(0x7d), [I64, I64] -> [I64];
    I64Mul => "i64.mul", C(0x7e), [I64, I64] -> [I64];
    I64DivS => "i64.div_s", C(0x7f), [I64, I64] -> [I64];
    I64DivU => "i64.div_u", C(0x80), [I64, I64] -> [I64];
    I64RemS => "i64.rem_s", C(0x81), [I64, I64] -> [I64];
    I64RemU => "i64.rem_u", C(0x82), [I64, I64] -> [I64];
    I64And => "i64.and", C(0x83), [I64, I64] -> [I64];
    I64Or => "i64.or", C(0x84), [I64, I64] -> [I64];
    I64Xor => "i64.xor", C(0x85), [I64, I64] -> [I64];
    I64Shl => "i64.shl", C(0x86), [I64, I64] -> [I64];
    I64ShrS => "i64.shr_s", C(0x87), [I64, I64] -> [I64];
    I64ShrU => "i64.shr_u", C(0x88), [I64, I64] -> [I64];
    I64Rotl => "i64.rotl", C(0x89), [I64, I64] -> [I64];
    I64Rotr => "i64.rotr", C(0x8a), [I64, I64] -> [I64];
    F32Abs => "f32.abs", C(0x8b), [F32] -> [F32];
    F32Neg => "f32.neg", C(0x8c), [F32] -> [F32];
    F32Ceil => "f32.ceil", C(0x8d), [F32] -> [F32];
    F32Floor => "f32.floor", C(0x8e), [F32] -> [F32];
    F32Trunc => "f32.trunc", C(0x8f), [F32] -> [F32];
    F32Nearest => "f32.nearest", C(0x90), [F32] -> [F32];
    F32Sqrt => "f32.sqrt", C(0x91), [F32] -> [F32];
    F32Add => "f32.add", C(0x92), [F32, F32] -> [F32];
    F32Sub => "f32.sub", C(0x93), [F32, F32] -> [F32];
    F32Mul => "f32.mul", C(0x94), [F32, F32] -> [F32];
    F32Div => "f32.div", C(0x95), [F32, F32] -> [F32];
    F32Min => "f32.min", C(0x96), [F32, F32] -> [F32];
    F32Max => "f32.max", C(0x97), [F32, F32] -> [F32];
    F32Copysign => "f32.copysign", C(0x98), [F32, F32] -> [F32];
    F64Abs => "f64.abs", C(0x99), [F64] -> [F64];
    F64Neg => "f64.neg", C(0x9a), [F64] -> [F64];
    F64Ceil => "f64.ceil", C(0x9b), [F64] -> [F64];
    F64Floor => "f64.floor", C(0x9c), [F64] -> [F64];
    F64Trunc => "f64.trunc", C(0x9d), [F64] -> [F64];
    F64Nearest => "f64.nearest", C(0x9e), [F64] -> [F64];
    F64Sqrt => "f64.sqrt", C(0x9f), [F64] -> [F64];
    F64Add => "f64.add", C(0xa0), [F64, F64] -> [F64];
    F64Sub => "f64.sub", C(0xa1), [F64, F64] -> [F64];
    F64Mul => "f64.mul", C(0xa2), [F64, F64] -> [F64];
    F64Div => "f64.div", C(0xa3), [F64, F64] -> [F64];
    F64Min => "f64.min", C(0xa4), [F64, F64] -> [F64];
    F64Max => "f64.max", C(0xa5), [F64, F64] -> [F64];
    F64Copysign => "f64.copysign", C(0xa6), [F64, F64] -> [F64];
    I32WrapI64 => "i32.wrap_i64", C(0xa7), [I64] -> [I32];
    I64ExtendI32S => "i64.extend_i32_s", C(0xac), [I32] -> [I64];
    I64ExtendI32U => "i64.extend_i32_u", C(0xad), [I32] -> [I64];
    F32ConvertI32S => "f32.convert_i32_s", C(0xb2), [I32] -> [F32];
    F32ConvertI32U => "f32.convert_i32_u", C(0xb3), [I32] -> [F32];
    F32ConvertI64S => "f32.convert_i64_s", C(0xb4), [I64] -> [F32];
    F32ConvertI64U => "f32.convert_i64_u", C(0xb5), [I64] -> [F32];
    F32DemoteF64 => "f32.demote_f64", C(0xb6), [F64] -> [F32];
    F64ConvertI32S => "f64.convert_i32_s", C(0xb7), [I32] -> [F64];
    F64ConvertI32U => "f64.convert_i32_u", C(0xb8), [I32] -> [F64];
    F64ConvertI64S => "f64.convert_i64_s", C(0xb9), [I64] -> [F64];
    F64ConvertI64U => "f64.convert_i64_u", C(0xba), [I64] -> [F64];
    F64PromoteF32 => "f64.promote_f32", C(0xbb), [F32] -> [F64];
    I32ReinterpretF32 => "i32.reinterpret_f32", C(0xbc), [F32] -> [I32];
    I64ReinterpretF64 => "i64.reinterpret_f64", C(0xbd), [F64] -> [I64];
    F32ReinterpretI32 => "f32.reinterpret_i32", C(0xbe), [I32] -> [F32];
    F64ReinterpretI64 => "f64.reinterpret_i64", C(0xbf), [I64] -> [F64];

    I8x16Splat => "i8x16.splat", S(0x0f), [I32] -> [V128];
    I16x8Splat => "i16x8.splat", S(0x10), [I32] -> [V128];
    I32x4Splat => "i32x4.splat", S(0x11), [I32] -> [V128];
    I64x2Splat => "i64x2.splat", S(0x12), [I64] -> [V128];
    F32x4Splat => "f32x4.splat", S(0x13), [F32] -> [V128];
    F64x2Splat => "f64x2.splat", S(0x14), [F64] -> [V128];
    V128Not => "v128.not", S(0x4d), [V128] -> [V128];
    V128And => "v128.and", S(0x4e), [V128, V128] -> [V128];
    V128AndNot => "v128.andnot", S(0x4f), [V128, V128] -> [V128];
    V128Or => "v128.or", S(0x50), [V128, V128] -> [V128];
    V128Xor => "v128.xor", S(0x51), [V128, V128] -> [V128];
    V128Bitselect => "v128.bitselect", S(0x52), [V128, V128, V128] -> [V128];
    V128AnyTrue => "v128.any_true", S(0x53), [V128] -> [I32];
    I32x4ExtendLowI16x8S => "i32x4.extend_low_i16x8_s", S(0xa7), [V128] -> [V128];
    I32x4ExtendHighI16x8S => "i32x4.extend_high_i16x8_s", S(0xa8), [V128] -> [V128];
    I32x4ExtendLowI16x8U => "i32x4.extend_low_i16x8_u", S(0xa9), [V128] -> [V128];
    I32x4ExtendHighI16x8U => "i32x4.extend_high_i16x8_u", S(0xaa), [V128] -> [V128];
    I32x4Add => "i32x4.add", S(0xae), [V128, V128] -> [V128];
    I32x4Sub => "i32x4.sub", S(0xb1), [V128, V128] -> [V128];
    I32x4Mul => "i32x4.mul", S(0xb5), [V128, V128] -> [V128];
    I64x2ExtendLowI32x4S => "i64x2.extend_low_i32x4_s", S(0xc7), [V128] -> [V128];
    I64x2ExtendHighI32x4S => "i64x2.extend_high_i32x4_s", S(0xc8), [V128] -> [V128];
    I64x2ExtendLowI32x4U => "i64x2.extend_low_i32x4_u", S(0xc9), [V128] -> [V128];
    I64x2ExtendHighI32x4U => "i64x2.extend_high_i32x4_u", S(0xca), [V128] -> [V128];
    I64x2Add => "i64x2.add", S(0xce), [V128, V128] -> [V128];
    I64x2Sub => "i64x2.sub", S(0xd1), [V128, V128] -> [V128];
    I64x2Mul => "i64x2.mul", S(0xd5), [V128, V128] -> [V128];
    F32x4Add => "f32x4.add", S(0xe4), [V128, V128] -> [V128];
    F32x4Sub => "f32x4.sub", S(0xe5), [V128, V128] -> [V128];
    F32x4Mul => "f32x4.mul", S(0xe6), [V128, V128] -> [V128];
    F64x2Add => "f64x2.add", S(0xf0), [V128, V128] -> [V128];
    F64x2Sub => "f64x2.sub", S(0xf1), [V128, V128] -> [V128];
    F64x2Mul => "f64x2.mul", S(0xf2), [V128, V128] -> [V128];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemAccess {
    Load,
    Store,
}

macro_rules! mem_ops {
    ($( $variant:ident => $name:literal, $enc:expr, $align:literal, $ty:ident, $access:ident; )*) => {
        /// Loads and stores carrying a memory argument.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum MemOp { $($variant),* }

        impl MemOp {
            pub const ALL: &'static [MemOp] = &[$(MemOp::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(MemOp::$variant => $name),* }
            }

            pub fn opcode(self) -> Opcode {
                match self { $(MemOp::$variant => $enc),* }
            }

            /// log2 of the natural alignment in bytes.
            pub fn natural_align(self) -> u32 {
                match self { $(MemOp::$variant => $align),* }
            }

            pub fn value_type(self) -> ValType {
                match self { $(MemOp::$variant => ValType::$ty),* }
            }

            pub fn access(self) -> MemAccess {
                match self { $(MemOp::$variant => MemAccess::$access),* }
            }
        }
    };
}

mem_ops! {
    I32Load => "i32.load", C(0x28), 2, I32, Load;
    I64Load => "i64.load", C(0x29), 3, I64, Load;
    F32Load => "f32.load", C(0x2a), 2, F32, Load;
    F64Load => "f64.load", C(0x2b), 3, F64, Load;
    I32Load8S => "i32.load8_s", C(0x2c), 0, I32, Load;
    I32Load8U => "i32.load8_u", C(0x2d), 0, I32, Load;
    I32Load16S => "i32.load16_s", C(0x2e), 1, I32, Load;
    I32Load16U => "i32.load16_u", C(0x2f), 1, I32, Load;
    I32Store => "i32.store", C(0x36), 2, I32, Store;
    I64Store => "i64.store", C(0x37), 3, I64, Store;
    F32Store => "f32.store", C(0x38), 2, F32, Store;
    F64Store => "f64.store", C(0x39), 3, F64, Store;
    I32Store8 => "i32.store8", C(0x3a), 0, I32, Store;
    I32Store16 => "i32.store16", C(0x3b), 1, I32, Store;
    V128Load => "v128.load", S(0x00), 4, V128, Load;
    V128Store => "v128.store", S(0x0b), 4, V128, Store;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneAccess {
    Extract,
    Replace,
}

macro_rules! lane_ops {
    ($( $variant:ident => $name:literal, $enc:expr, $lanes:literal, $scalar:ident, $access:ident; )*) => {
        /// Lane accessors carrying a lane-index immediate.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum LaneOp { $($variant),* }

        impl LaneOp {
            pub const ALL: &'static [LaneOp] = &[$(LaneOp::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(LaneOp::$variant => $name),* }
            }

            pub fn opcode(self) -> Opcode {
                match self { $(LaneOp::$variant => $enc),* }
            }

            pub fn lane_count(self) -> u8 {
                match self { $(LaneOp::$variant => $lanes),* }
            }

            /// Scalar type read from or written into the lane.
            pub fn scalar_type(self) -> ValType {
                match self { $(LaneOp::$variant => ValType::$scalar),* }
            }

            pub fn access(self) -> LaneAccess {
                match self { $(LaneOp::$variant => LaneAccess::$access),* }
            }
        }
    };
}

lane_ops! {
    I8x16ExtractLaneS => "i8x16.extract_lane_s", S(0x15), 16, I32, Extract;
    I8x16ExtractLaneU => "i8x16.extract_lane_u", S(0x16), 16, I32, Extract;
    I8x16ReplaceLane => "i8x16.replace_lane", S(0x17), 16, I32, Replace;
    I16x8ExtractLaneS => "i16x8.extract_lane_s", S(0x18), 8, I32, Extract;
    I16x8ExtractLaneU => "i16x8.extract_lane_u", S(0x19), 8, I32, Extract;
    I16x8ReplaceLane => "i16x8.replace_lane", S(0x1a), 8, I32, Replace;
    I32x4ExtractLane => "i32x4.extract_lane", S(0x1b), 4, I32, Extract;
    I32x4ReplaceLane => "i32x4.replace_lane", S(0x1c), 4, I32, Replace;
    I64x2ExtractLane => "i64x2.extract_lane", S(0x1d), 2, I64, Extract;
    I64x2ReplaceLane => "i64x2.replace_lane", S(0x1e), 2, I64, Replace;
    F32x4ExtractLane => "f32x4.extract_lane", S(0x1f), 4, F32, Extract;
    F32x4ReplaceLane => "f32x4.replace_lane", S(0x20), 4, F32, Replace;
    F64x2ExtractLane => "f64x2.extract_lane", S(0x21), 2, F64, Extract;
    F64x2ReplaceLane => "f64x2.replace_lane", S(0x22), 2, F64, Replace;
}

/// What a mnemonic or opcode stands for in the instruction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Plain(Op),
    Mem(MemOp),
    Lane(LaneOp),
    Call,
    LocalGet,
    LocalSet,
    LocalTee,
    GlobalGet,
    GlobalSet,
    I32Const,
    I64Const,
    F32Const,
    F64Const,
    V128Const,
    MemorySize,
    MemoryGrow,
}

const SPECIAL: &[(&str, Opcode, OpKind)] = &[
    ("call", C(0x10), OpKind::Call),
    ("local.get", C(0x20), OpKind::LocalGet),
    ("local.set", C(0x21), OpKind::LocalSet),
    ("local.tee", C(0x22), OpKind::LocalTee),
    ("global.get", C(0x23), OpKind::GlobalGet),
    ("global.set", C(0x24), OpKind::GlobalSet),
    ("memory.size", C(0x3f), OpKind::MemorySize),
    ("memory.grow", C(0x40), OpKind::MemoryGrow),
    ("i32.const", C(0x41), OpKind::I32Const),
    ("i64.const", C(0x42), OpKind::I64Const),
    ("f32.const", C(0x43), OpKind::F32Const),
    ("f64.const", C(0x44), OpKind::F64Const),
    ("v128.const", S(0x0c), OpKind::V128Const),
];

struct Tables {
    by_name: HashMap<&'static str, OpKind>,
    by_opcode: HashMap<Opcode, OpKind>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut by_name = HashMap::new();
        let mut by_opcode = HashMap::new();
        let mut add = |name: &'static str, code: Opcode, kind: OpKind| {
            let dup_name = by_name.insert(name, kind);
            let dup_code = by_opcode.insert(code, kind);
            debug_assert!(dup_name.is_none() && dup_code.is_none(), "{name}");
        };
        for &op in Op::ALL {
            add(op.name(), op.opcode(), OpKind::Plain(op));
        }
        for &op in MemOp::ALL {
            add(op.name(), op.opcode(), OpKind::Mem(op));
        }
        for &op in LaneOp::ALL {
            add(op.name(), op.opcode(), OpKind::Lane(op));
        }
        for &(name, code, kind) in SPECIAL {
            add(name, code, kind);
        }
        Tables { by_name, by_opcode }
    })
}

pub fn lookup_name(name: &str) -> Option<OpKind> {
    tables().by_name.get(name).copied()
}

pub fn lookup_opcode(code: Opcode) -> Option<OpKind> {
    tables().by_opcode.get(&code).copied()
}

pub fn special_opcode(kind: OpKind) -> Opcode {
    match kind {
        OpKind::Plain(op) => op.opcode(),
        OpKind::Mem(op) => op.opcode(),
        OpKind::Lane(op) => op.opcode(),
        other => SPECIAL
            .iter()
            .find(|(_, _, k)| *k == other)
            .map(|(_, code, _)| *code)
            .expect("every special kind has a table row"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_opcodes_are_unique() {
        let t = tables();
        let total = Op::ALL.len() + MemOp::ALL.len() + LaneOp::ALL.len() + SPECIAL.len();
        assert_eq!(t.by_name.len(), total);
        assert_eq!(t.by_opcode.len(), total);
    }

    #[test]
    fn known_encodings() {
        assert_eq!(lookup_name("i64.rotr"), Some(OpKind::Plain(Op::I64Rotr)));
        assert_eq!(Op::I64Rotr.opcode(), Opcode::Core(0x8a));
        assert_eq!(Op::I64x2ExtendLowI32x4U.opcode(), Opcode::Simd(0xc9));
        assert_eq!(LaneOp::F64x2ReplaceLane.opcode(), Opcode::Simd(0x22));
        assert_eq!(lookup_opcode(Opcode::Simd(0x0c)), Some(OpKind::V128Const));
    }
}
