//! In-memory representation of a module in the supported subset.
//!
//! Float payloads are stored as raw bit patterns so that structural equality
//! is exact (NaN payloads and signed zeros included).

use std::fmt;

use super::ops::{LaneOp, MemOp, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValType {
    I32,
    I64,
    F32,
    F64,
    V128,
}

impl ValType {
    pub const ALL: [ValType; 5] = [ValType::I32, ValType::I64, ValType::F32, ValType::F64, ValType::V128];

    pub fn byte(self) -> u8 {
        match self {
            ValType::I32 => 0x7f,
            ValType::I64 => 0x7e,
            ValType::F32 => 0x7d,
            ValType::F64 => 0x7c,
            ValType::V128 => 0x7b,
        }
    }

    pub fn from_byte(byte: u8) -> Option<ValType> {
        ValType::ALL.into_iter().find(|t| t.byte() == byte)
    }

    pub fn name(self) -> &'static str {
        match self {
            ValType::I32 => "i32",
            ValType::I64 => "i64",
            ValType::F32 => "f32",
            ValType::F64 => "f64",
            ValType::V128 => "v128",
        }
    }

    pub fn from_name(name: &str) -> Option<ValType> {
        ValType::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for ValType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Page limits of a linear memory (64 KiB pages).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Limits {
    pub min: u32,
    pub max: Option<u32>,
}

/// Largest page count a 32-bit linear memory may declare.
pub const MAX_PAGES: u32 = 65536;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FuncType {
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
}

impl FuncType {
    pub fn new(params: impl Into<Vec<ValType>>, results: impl Into<Vec<ValType>>) -> Self {
        FuncType {
            params: params.into(),
            results: results.into(),
        }
    }
}

impl fmt::Display for FuncType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |tys: &[ValType]| tys.iter().map(|t| t.name()).collect::<Vec<_>>().join(" ");
        write!(f, "[{}] -> [{}]", join(&self.params), join(&self.results))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MemArg {
    /// log2 of the alignment hint.
    pub align: u32,
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Plain(Op),
    Call(u32),
    LocalGet(u32),
    LocalSet(u32),
    LocalTee(u32),
    GlobalGet(u32),
    GlobalSet(u32),
    I32Const(i32),
    I64Const(i64),
    /// Bit pattern of an f32 literal.
    F32Const(u32),
    /// Bit pattern of an f64 literal.
    F64Const(u64),
    /// Little-endian lane bytes.
    V128Const([u8; 16]),
    Mem(MemOp, MemArg),
    Lane(LaneOp, u8),
    MemorySize,
    MemoryGrow,
}

impl From<Op> for Instr {
    fn from(op: Op) -> Self {
        Instr::Plain(op)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FuncDef {
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
    pub locals: Vec<ValType>,
    pub body: Vec<Instr>,
}

impl FuncDef {
    pub fn signature(&self) -> FuncType {
        FuncType::new(self.params.clone(), self.results.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalType {
    pub ty: ValType,
    pub mutable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImportDesc {
    Func(FuncType),
    Memory(Limits),
    Global(GlobalType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub module: String,
    pub name: String,
    pub desc: ImportDesc,
}

/// Constant initializer for globals and data-segment offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstExpr {
    I32(i32),
    I64(i64),
    F32(u32),
    F64(u64),
    V128([u8; 16]),
    GlobalGet(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Global {
    pub ty: GlobalType,
    pub init: ConstExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Func,
    Memory,
    Global,
}

impl ExportKind {
    pub fn byte(self) -> u8 {
        match self {
            ExportKind::Func => 0x00,
            ExportKind::Memory => 0x02,
            ExportKind::Global => 0x03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Export {
    pub name: String,
    pub kind: ExportKind,
    pub index: u32,
}

/// Active data segment targeting memory 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSegment {
    pub offset: ConstExpr,
    pub bytes: Vec<u8>,
}

/// Opaque custom section, re-emitted verbatim after the standard sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustomSection {
    pub name: String,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Module {
    /// Type section. Every import and function signature must appear here;
    /// [`Module::intern_types`] fills it in.
    pub types: Vec<FuncType>,
    pub imports: Vec<Import>,
    pub funcs: Vec<FuncDef>,
    pub memories: Vec<Limits>,
    pub globals: Vec<Global>,
    pub exports: Vec<Export>,
    pub start: Option<u32>,
    pub data: Vec<DataSegment>,
    pub customs: Vec<CustomSection>,
}

impl Module {
    pub fn imported_funcs(&self) -> impl Iterator<Item = &FuncType> {
        self.imports.iter().filter_map(|i| match &i.desc {
            ImportDesc::Func(ty) => Some(ty),
            _ => None,
        })
    }

    pub fn imported_globals(&self) -> impl Iterator<Item = &GlobalType> {
        self.imports.iter().filter_map(|i| match &i.desc {
            ImportDesc::Global(ty) => Some(ty),
            _ => None,
        })
    }

    pub fn imported_memories(&self) -> impl Iterator<Item = &Limits> {
        self.imports.iter().filter_map(|i| match &i.desc {
            ImportDesc::Memory(l) => Some(l),
            _ => None,
        })
    }

    pub fn func_count(&self) -> u32 {
        (self.imported_funcs().count() + self.funcs.len()) as u32
    }

    pub fn global_count(&self) -> u32 {
        (self.imported_globals().count() + self.globals.len()) as u32
    }

    pub fn memory_count(&self) -> u32 {
        (self.imported_memories().count() + self.memories.len()) as u32
    }

    /// Signature of a function in the combined index space (imports first).
    pub fn func_type(&self, index: u32) -> Option<FuncType> {
        let imported: Vec<&FuncType> = self.imported_funcs().collect();
        let i = index as usize;
        if i < imported.len() {
            Some(imported[i].clone())
        } else {
            self.funcs.get(i - imported.len()).map(FuncDef::signature)
        }
    }

    /// Type of a global in the combined index space (imports first).
    pub fn global_type(&self, index: u32) -> Option<GlobalType> {
        let imported: Vec<GlobalType> = self.imported_globals().copied().collect();
        let i = index as usize;
        if i < imported.len() {
            Some(imported[i])
        } else {
            self.globals.get(i - imported.len()).map(|g| g.ty)
        }
    }

    /// Index into `funcs` of the function exported under `name`, if it is a
    /// defined (not imported) function.
    pub fn exported_func(&self, name: &str) -> Option<u32> {
        self.exports
            .iter()
            .find(|e| e.kind == ExportKind::Func && e.name == name)
            .map(|e| e.index)
    }

    /// Appends every import and function signature missing from `types`,
    /// in order of first use.
    pub fn intern_types(&mut self) {
        let mut needed: Vec<FuncType> = self.imported_funcs().cloned().collect();
        needed.extend(self.funcs.iter().map(FuncDef::signature));
        for ty in needed {
            if !self.types.contains(&ty) {
                self.types.push(ty);
            }
        }
    }

    pub fn type_index(&self, ty: &FuncType) -> Option<u32> {
        self.types.iter().position(|t| t == ty).map(|i| i as u32)
    }
}
