//! Binary decoder for the supported subset.

use thiserror::Error;

use super::ast::*;
use super::encode::{MAGIC, VERSION};
use super::leb128::{self, LebError};
use super::ops::{lookup_opcode, OpKind, Opcode, SIMD_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode error at offset {offset}: {reason}")]
pub struct DecodeError {
    pub offset: usize,
    pub reason: String,
}

type Result<T> = std::result::Result<T, DecodeError>;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(DecodeError {
            offset: self.pos,
            reason: reason.into(),
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.end
    }

    fn byte(&mut self) -> Result<u8> {
        if self.pos >= self.end {
            return self.err("unexpected end of input");
        }
        let b = self.bytes[self.pos];
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.end - self.pos < n {
            return self.err(format!("unexpected end of input: need {n} bytes"));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn leb<T>(&mut self, r: std::result::Result<(T, usize), LebError>) -> Result<T> {
        match r {
            Ok((v, n)) => {
                self.pos += n;
                Ok(v)
            }
            Err(LebError::Truncated) => self.err("unexpected end of input in varint"),
            Err(LebError::Overflow) => self.err("malformed varint"),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let r = leb128::read_unsigned(&self.bytes[self.pos..self.end], 32);
        self.leb(r).map(|v| v as u32)
    }

    fn i32(&mut self) -> Result<i32> {
        let r = leb128::read_signed(&self.bytes[self.pos..self.end], 32);
        self.leb(r).map(|v| v as i32)
    }

    fn i64(&mut self) -> Result<i64> {
        let r = leb128::read_signed(&self.bytes[self.pos..self.end], 64);
        self.leb(r)
    }

    fn len(&mut self) -> Result<usize> {
        let start = self.pos;
        let n = self.u32()? as usize;
        if n > self.end - self.pos {
            return Err(DecodeError {
                offset: start,
                reason: format!("length {n} exceeds remaining input"),
            });
        }
        Ok(n)
    }

    fn name(&mut self) -> Result<String> {
        let n = self.len()?;
        let start = self.pos;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError {
            offset: start,
            reason: "name is not valid UTF-8".into(),
        })
    }

    fn valtype(&mut self) -> Result<ValType> {
        let b = self.byte()?;
        ValType::from_byte(b).map_or_else(
            || {
                Err(DecodeError {
                    offset: self.pos - 1,
                    reason: format!("unknown value type 0x{b:02x}"),
                })
            },
            Ok,
        )
    }

    fn valtypes(&mut self) -> Result<Vec<ValType>> {
        let n = self.len()?;
        (0..n).map(|_| self.valtype()).collect()
    }

    fn limits(&mut self) -> Result<Limits> {
        match self.byte()? {
            0x00 => Ok(Limits {
                min: self.u32()?,
                max: None,
            }),
            0x01 => Ok(Limits {
                min: self.u32()?,
                max: Some(self.u32()?),
            }),
            other => {
                self.pos -= 1;
                self.err(format!("unsupported limits flag 0x{other:02x}"))
            }
        }
    }

    fn global_type(&mut self) -> Result<GlobalType> {
        let ty = self.valtype()?;
        let mutable = match self.byte()? {
            0 => false,
            1 => true,
            other => {
                self.pos -= 1;
                return self.err(format!("invalid mutability 0x{other:02x}"));
            }
        };
        Ok(GlobalType { ty, mutable })
    }

    fn opcode(&mut self) -> Result<Opcode> {
        let b = self.byte()?;
        if b == SIMD_PREFIX {
            Ok(Opcode::Simd(self.u32()?))
        } else {
            Ok(Opcode::Core(b))
        }
    }

    fn instr_of(&mut self, kind: OpKind) -> Result<Instr> {
        Ok(match kind {
            OpKind::Plain(op) => Instr::Plain(op),
            OpKind::Call => Instr::Call(self.u32()?),
            OpKind::LocalGet => Instr::LocalGet(self.u32()?),
            OpKind::LocalSet => Instr::LocalSet(self.u32()?),
            OpKind::LocalTee => Instr::LocalTee(self.u32()?),
            OpKind::GlobalGet => Instr::GlobalGet(self.u32()?),
            OpKind::GlobalSet => Instr::GlobalSet(self.u32()?),
            OpKind::I32Const => Instr::I32Const(self.i32()?),
            OpKind::I64Const => Instr::I64Const(self.i64()?),
            OpKind::F32Const => {
                let raw = self.take(4)?;
                Instr::F32Const(u32::from_le_bytes(raw.try_into().unwrap()))
            }
            OpKind::F64Const => {
                let raw = self.take(8)?;
                Instr::F64Const(u64::from_le_bytes(raw.try_into().unwrap()))
            }
            OpKind::V128Const => Instr::V128Const(self.take(16)?.try_into().unwrap()),
            OpKind::Mem(op) => {
                let align = self.u32()?;
                let offset = self.u32()?;
                Instr::Mem(op, MemArg { align, offset })
            }
            OpKind::Lane(op) => Instr::Lane(op, self.byte()?),
            OpKind::MemorySize | OpKind::MemoryGrow => {
                if self.byte()? != 0x00 {
                    self.pos -= 1;
                    return self.err("memory index must be zero");
                }
                if kind == OpKind::MemorySize {
                    Instr::MemorySize
                } else {
                    Instr::MemoryGrow
                }
            }
        })
    }

    /// Reads one instruction, or `None` at the `end` opcode.
    fn instr(&mut self) -> Result<Option<Instr>> {
        let start = self.pos;
        let code = self.opcode()?;
        if code == Opcode::Core(0x0b) {
            return Ok(None);
        }
        match lookup_opcode(code) {
            Some(kind) => self.instr_of(kind).map(Some),
            None => Err(DecodeError {
                offset: start,
                reason: match code {
                    Opcode::Core(b) => format!("unknown opcode 0x{b:02x}"),
                    Opcode::Simd(s) => format!("unknown opcode 0xfd 0x{s:x}"),
                },
            }),
        }
    }

    fn const_expr(&mut self) -> Result<ConstExpr> {
        let start = self.pos;
        let expr = match self.instr()? {
            Some(Instr::I32Const(v)) => ConstExpr::I32(v),
            Some(Instr::I64Const(v)) => ConstExpr::I64(v),
            Some(Instr::F32Const(v)) => ConstExpr::F32(v),
            Some(Instr::F64Const(v)) => ConstExpr::F64(v),
            Some(Instr::V128Const(v)) => ConstExpr::V128(v),
            Some(Instr::GlobalGet(i)) => ConstExpr::GlobalGet(i),
            _ => {
                return Err(DecodeError {
                    offset: start,
                    reason: "unsupported constant expression".into(),
                })
            }
        };
        if self.byte()? != 0x0b {
            self.pos -= 1;
            return self.err("constant expression must end after one instruction");
        }
        Ok(expr)
    }

    fn sub(&self, len: usize) -> Reader<'a> {
        Reader {
            bytes: self.bytes,
            pos: self.pos,
            end: self.pos + len,
        }
    }
}

pub fn decode_module(bytes: &[u8]) -> Result<Module> {
    let mut r = Reader {
        bytes,
        pos: 0,
        end: bytes.len(),
    };
    if r.take(4).ok() != Some(&MAGIC[..]) {
        return Err(DecodeError {
            offset: 0,
            reason: "bad magic number".into(),
        });
    }
    if r.take(4).ok() != Some(&VERSION[..]) {
        return Err(DecodeError {
            offset: 4,
            reason: "unsupported version".into(),
        });
    }

    let mut module = Module::default();
    let mut func_types: Vec<u32> = Vec::new();
    let mut func_type_offset = 0;
    let mut last_id = 0u8;
    let mut saw_code = false;

    while !r.at_end() {
        let id_offset = r.pos;
        let id = r.byte()?;
        let size = r.len()?;
        let mut s = r.sub(size);
        r.pos += size;

        if id != 0 {
            if id <= last_id {
                return Err(DecodeError {
                    offset: id_offset,
                    reason: format!("section {id} out of order or duplicated"),
                });
            }
            last_id = id;
        }

        match id {
            0 => {
                let name = s.name()?;
                let payload = s.take(s.end - s.pos)?.to_vec();
                module.customs.push(CustomSection { name, payload });
            }
            1 => {
                let n = s.len()?;
                for _ in 0..n {
                    if s.byte()? != 0x60 {
                        s.pos -= 1;
                        return s.err("expected function type marker 0x60");
                    }
                    let params = s.valtypes()?;
                    let results = s.valtypes()?;
                    module.types.push(FuncType { params, results });
                }
            }
            2 => {
                let n = s.len()?;
                for _ in 0..n {
                    let module_name = s.name()?;
                    let name = s.name()?;
                    let desc = match s.byte()? {
                        0x00 => {
                            let at = s.pos;
                            let idx = s.u32()?;
                            let ty = module.types.get(idx as usize).cloned().ok_or(DecodeError {
                                offset: at,
                                reason: format!("type index {idx} out of range"),
                            })?;
                            ImportDesc::Func(ty)
                        }
                        0x02 => ImportDesc::Memory(s.limits()?),
                        0x03 => ImportDesc::Global(s.global_type()?),
                        other => {
                            s.pos -= 1;
                            return s.err(format!("unsupported import kind 0x{other:02x}"));
                        }
                    };
                    module.imports.push(Import {
                        module: module_name,
                        name,
                        desc,
                    });
                }
            }
            3 => {
                func_type_offset = s.pos;
                let n = s.len()?;
                for _ in 0..n {
                    func_types.push(s.u32()?);
                }
            }
            5 => {
                let n = s.len()?;
                for _ in 0..n {
                    module.memories.push(s.limits()?);
                }
            }
            6 => {
                let n = s.len()?;
                for _ in 0..n {
                    let ty = s.global_type()?;
                    let init = s.const_expr()?;
                    module.globals.push(Global { ty, init });
                }
            }
            7 => {
                let n = s.len()?;
                for _ in 0..n {
                    let name = s.name()?;
                    let kind = match s.byte()? {
                        0x00 => ExportKind::Func,
                        0x02 => ExportKind::Memory,
                        0x03 => ExportKind::Global,
                        other => {
                            s.pos -= 1;
                            return s.err(format!("unsupported export kind 0x{other:02x}"));
                        }
                    };
                    let index = s.u32()?;
                    module.exports.push(Export { name, kind, index });
                }
            }
            8 => module.start = Some(s.u32()?),
            10 => {
                saw_code = true;
                let n = s.len()?;
                if n != func_types.len() {
                    return s.err(format!(
                        "code section has {n} bodies but function section declares {}",
                        func_types.len()
                    ));
                }
                for &type_idx in &func_types {
                    let body_len = s.len()?;
                    let mut b = s.sub(body_len);
                    s.pos += body_len;
                    let func = read_body(&mut b, &module, type_idx, func_type_offset)?;
                    module.funcs.push(func);
                }
            }
            11 => {
                let n = s.len()?;
                for _ in 0..n {
                    if s.byte()? != 0x00 {
                        s.pos -= 1;
                        return s.err("only active data segments for memory 0 are supported");
                    }
                    let offset = s.const_expr()?;
                    let len = s.len()?;
                    let bytes = s.take(len)?.to_vec();
                    module.data.push(DataSegment { offset, bytes });
                }
            }
            other => {
                return Err(DecodeError {
                    offset: id_offset,
                    reason: format!("unsupported section id {other}"),
                })
            }
        }

        if !s.at_end() {
            return s.err(format!("section {id} has trailing bytes"));
        }
    }

    if !func_types.is_empty() && !saw_code {
        return Err(DecodeError {
            offset: bytes.len(),
            reason: "function section without code section".into(),
        });
    }

    Ok(module)
}

fn read_body(b: &mut Reader<'_>, module: &Module, type_idx: u32, type_offset: usize) -> Result<FuncDef> {
    let ty = module.types.get(type_idx as usize).cloned().ok_or(DecodeError {
        offset: type_offset,
        reason: format!("type index {type_idx} out of range"),
    })?;
    let mut locals = Vec::new();
    let groups = b.u32()?;
    for _ in 0..groups {
        let at = b.pos;
        let count = b.u32()?;
        let vt = b.valtype()?;
        if locals.len() + count as usize > 50_000 {
            return Err(DecodeError {
                offset: at,
                reason: "too many locals".into(),
            });
        }
        locals.extend(std::iter::repeat_n(vt, count as usize));
    }
    let mut body = Vec::new();
    while let Some(instr) = b.instr()? {
        body.push(instr);
    }
    if !b.at_end() {
        return b.err("function body continues after end");
    }
    Ok(FuncDef {
        params: ty.params,
        results: ty.results,
        locals,
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_module() {
        let m = decode_module(&[0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00]).unwrap();
        assert_eq!(m, Module::default());
    }

    #[test]
    fn bad_version() {
        let err = decode_module(&[0x00, 0x61, 0x73, 0x6d, 0x02, 0x00, 0x00, 0x00]).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.reason.contains("version"));
    }

    #[test]
    fn bad_magic() {
        let err = decode_module(b"\0asn\x01\0\0\0").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn unknown_section_rejected() {
        // table section (id 4) is outside the subset
        let bytes = [0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00, 0x04, 0x00];
        let err = decode_module(&bytes).unwrap_err();
        assert_eq!(err.offset, 8);
    }

    #[test]
    fn custom_section_kept() {
        let bytes = [
            0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00, 0x00, 0x04, 0x01, b'x', 0xaa, 0xbb,
        ];
        let m = decode_module(&bytes).unwrap();
        assert_eq!(
            m.customs,
            vec![CustomSection {
                name: "x".into(),
                payload: vec![0xaa, 0xbb]
            }]
        );
    }

    #[test]
    fn unknown_opcode_offset() {
        // type () -> (), one func, body: 0xff
        let bytes = [
            0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00, // preamble
            0x01, 0x04, 0x01, 0x60, 0x00, 0x00, // types
            0x03, 0x02, 0x01, 0x00, // funcs
            0x0a, 0x05, 0x01, 0x03, 0x00, 0xff, 0x0b, // code
        ];
        let err = decode_module(&bytes).unwrap_err();
        assert_eq!(err.offset, 23);
        assert!(err.reason.contains("unknown opcode"));
    }
}
