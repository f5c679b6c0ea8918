//! Binary encoder.

use thiserror::Error;

use super::ast::*;
use super::leb128::{write_i32, write_i64, write_u32};
use super::ops::{special_opcode, OpKind, Opcode, SIMD_PREFIX};

pub const MAGIC: [u8; 4] = [0x00, 0x61, 0x73, 0x6d];
pub const VERSION: [u8; 4] = [0x01, 0x00, 0x00, 0x00];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("module declares {0} memories; at most one is supported")]
    MultipleMemories(u32),
    #[error("signature {0} is missing from the type section")]
    MissingType(FuncType),
}

pub fn encode_module(module: &Module) -> Result<Vec<u8>, EncodeError> {
    let memories = module.memory_count();
    if memories > 1 {
        return Err(EncodeError::MultipleMemories(memories));
    }

    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION);

    if !module.types.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.types.len());
        for ty in &module.types {
            s.push(0x60);
            write_valtypes(&mut s, &ty.params);
            write_valtypes(&mut s, &ty.results);
        }
        section(&mut out, 1, &s);
    }

    if !module.imports.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.imports.len());
        for import in &module.imports {
            write_name(&mut s, &import.module);
            write_name(&mut s, &import.name);
            match &import.desc {
                ImportDesc::Func(ty) => {
                    s.push(0x00);
                    write_u32(&mut s, type_index(module, ty)?);
                }
                ImportDesc::Memory(limits) => {
                    s.push(0x02);
                    write_limits(&mut s, limits);
                }
                ImportDesc::Global(gt) => {
                    s.push(0x03);
                    write_global_type(&mut s, gt);
                }
            }
        }
        section(&mut out, 2, &s);
    }

    if !module.funcs.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.funcs.len());
        for func in &module.funcs {
            write_u32(&mut s, type_index(module, &func.signature())?);
        }
        section(&mut out, 3, &s);
    }

    if !module.memories.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.memories.len());
        for limits in &module.memories {
            write_limits(&mut s, limits);
        }
        section(&mut out, 5, &s);
    }

    if !module.globals.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.globals.len());
        for global in &module.globals {
            write_global_type(&mut s, &global.ty);
            write_const_expr(&mut s, &global.init);
        }
        section(&mut out, 6, &s);
    }

    if !module.exports.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.exports.len());
        for export in &module.exports {
            write_name(&mut s, &export.name);
            s.push(export.kind.byte());
            write_u32(&mut s, export.index);
        }
        section(&mut out, 7, &s);
    }

    if let Some(start) = module.start {
        let mut s = Vec::new();
        write_u32(&mut s, start);
        section(&mut out, 8, &s);
    }

    if !module.funcs.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.funcs.len());
        for func in &module.funcs {
            let mut body = Vec::new();
            write_locals(&mut body, &func.locals);
            for instr in &func.body {
                write_instr(&mut body, instr);
            }
            body.push(0x0b);
            write_len(&mut s, body.len());
            s.extend_from_slice(&body);
        }
        section(&mut out, 10, &s);
    }

    if !module.data.is_empty() {
        let mut s = Vec::new();
        write_len(&mut s, module.data.len());
        for seg in &module.data {
            s.push(0x00);
            write_const_expr(&mut s, &seg.offset);
            write_len(&mut s, seg.bytes.len());
            s.extend_from_slice(&seg.bytes);
        }
        section(&mut out, 11, &s);
    }

    for custom in &module.customs {
        let mut s = Vec::new();
        write_name(&mut s, &custom.name);
        s.extend_from_slice(&custom.payload);
        section(&mut out, 0, &s);
    }

    Ok(out)
}

fn type_index(module: &Module, ty: &FuncType) -> Result<u32, EncodeError> {
    module
        .type_index(ty)
        .ok_or_else(|| EncodeError::MissingType(ty.clone()))
}

fn section(out: &mut Vec<u8>, id: u8, payload: &[u8]) {
    out.push(id);
    write_len(out, payload.len());
    out.extend_from_slice(payload);
}

fn write_len(out: &mut Vec<u8>, len: usize) {
    write_u32(out, u32::try_from(len).expect("length fits in u32"));
}

fn write_name(out: &mut Vec<u8>, name: &str) {
    write_len(out, name.len());
    out.extend_from_slice(name.as_bytes());
}

fn write_valtypes(out: &mut Vec<u8>, tys: &[ValType]) {
    write_len(out, tys.len());
    out.extend(tys.iter().map(|t| t.byte()));
}

fn write_limits(out: &mut Vec<u8>, limits: &Limits) {
    match limits.max {
        None => {
            out.push(0x00);
            write_u32(out, limits.min);
        }
        Some(max) => {
            out.push(0x01);
            write_u32(out, limits.min);
            write_u32(out, max);
        }
    }
}

fn write_global_type(out: &mut Vec<u8>, gt: &GlobalType) {
    out.push(gt.ty.byte());
    out.push(u8::from(gt.mutable));
}

fn write_locals(out: &mut Vec<u8>, locals: &[ValType]) {
    let mut runs: Vec<(u32, ValType)> = Vec::new();
    for &ty in locals {
        match runs.last_mut() {
            Some((count, last)) if *last == ty => *count += 1,
            _ => runs.push((1, ty)),
        }
    }
    write_len(out, runs.len());
    for (count, ty) in runs {
        write_u32(out, count);
        out.push(ty.byte());
    }
}

fn write_const_expr(out: &mut Vec<u8>, expr: &ConstExpr) {
    let instr = match *expr {
        ConstExpr::I32(v) => Instr::I32Const(v),
        ConstExpr::I64(v) => Instr::I64Const(v),
        ConstExpr::F32(v) => Instr::F32Const(v),
        ConstExpr::F64(v) => Instr::F64Const(v),
        ConstExpr::V128(v) => Instr::V128Const(v),
        ConstExpr::GlobalGet(i) => Instr::GlobalGet(i),
    };
    write_instr(out, &instr);
    out.push(0x0b);
}

fn write_opcode(out: &mut Vec<u8>, code: Opcode) {
    match code {
        Opcode::Core(b) => out.push(b),
        Opcode::Simd(sub) => {
            out.push(SIMD_PREFIX);
            write_u32(out, sub);
        }
    }
}

pub(crate) fn write_instr(out: &mut Vec<u8>, instr: &Instr) {
    match instr {
        Instr::Plain(op) => write_opcode(out, op.opcode()),
        Instr::Call(i) => index_instr(out, OpKind::Call, *i),
        Instr::LocalGet(i) => index_instr(out, OpKind::LocalGet, *i),
        Instr::LocalSet(i) => index_instr(out, OpKind::LocalSet, *i),
        Instr::LocalTee(i) => index_instr(out, OpKind::LocalTee, *i),
        Instr::GlobalGet(i) => index_instr(out, OpKind::GlobalGet, *i),
        Instr::GlobalSet(i) => index_instr(out, OpKind::GlobalSet, *i),
        Instr::I32Const(v) => {
            write_opcode(out, special_opcode(OpKind::I32Const));
            write_i32(out, *v);
        }
        Instr::I64Const(v) => {
            write_opcode(out, special_opcode(OpKind::I64Const));
            write_i64(out, *v);
        }
        Instr::F32Const(bits) => {
            write_opcode(out, special_opcode(OpKind::F32Const));
            out.extend_from_slice(&bits.to_le_bytes());
        }
        Instr::F64Const(bits) => {
            write_opcode(out, special_opcode(OpKind::F64Const));
            out.extend_from_slice(&bits.to_le_bytes());
        }
        Instr::V128Const(bytes) => {
            write_opcode(out, special_opcode(OpKind::V128Const));
            out.extend_from_slice(bytes);
        }
        Instr::Mem(op, arg) => {
            write_opcode(out, op.opcode());
            write_u32(out, arg.align);
            write_u32(out, arg.offset);
        }
        Instr::Lane(op, lane) => {
            write_opcode(out, op.opcode());
            out.push(*lane);
        }
        Instr::MemorySize => {
            write_opcode(out, special_opcode(OpKind::MemorySize));
            out.push(0x00);
        }
        Instr::MemoryGrow => {
            write_opcode(out, special_opcode(OpKind::MemoryGrow));
            out.push(0x00);
        }
    }
}

fn index_instr(out: &mut Vec<u8>, kind: OpKind, index: u32) {
    write_opcode(out, special_opcode(kind));
    write_u32(out, index);
}
