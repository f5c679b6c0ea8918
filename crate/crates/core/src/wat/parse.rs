//! Text-format parser for the supported subset.
//!
//! Parsing happens in two passes over the S-expression tree: the first assigns
//! indices to every `$name` (imports before definitions, as in the binary index
//! spaces), the second builds the [`Module`] with all references resolved.

use std::collections::HashMap;

use thiserror::Error;

use super::ast::*;
use super::lexer::{read_sexps, Pos, Sexp};
use super::literals::{parse_f32, parse_f64, parse_int};
use super::ops::{lookup_name, OpKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WatError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Parse {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{col}: unresolved name `{name}`")]
    UnresolvedName { line: usize, col: usize, name: String },
}

impl WatError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            WatError::Parse { line, col, .. } | WatError::UnresolvedName { line, col, .. } => (*line, *col),
        }
    }
}

type Result<T> = std::result::Result<T, WatError>;

fn expected<T>(pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> Result<T> {
    Err(WatError::Parse {
        line: pos.line,
        col: pos.col,
        expected: expected.into(),
        found: found.into(),
    })
}

fn expected_at<T>(item: &Sexp, what: &str) -> Result<T> {
    expected(item.pos(), what, item.describe())
}

pub fn parse_wat(text: &str) -> Result<Module> {
    let top = read_sexps(text)?;
    let module_sexp = match top.as_slice() {
        [single] if single.head() == Some("module") => single,
        [] => {
            return expected(Pos { line: 1, col: 1 }, "`(module ...)`", "end of input");
        }
        [first, ..] if first.head() != Some("module") => {
            return expected_at(first, "`(module ...)`");
        }
        [_, second, ..] => return expected_at(second, "end of input"),
        _ => unreachable!(),
    };
    let Sexp::List(items, _) = module_sexp else {
        unreachable!()
    };
    let mut fields = &items[1..];
    if let Some(Sexp::Atom(a, _)) = fields.first() {
        if a.starts_with('$') {
            fields = &fields[1..];
        }
    }

    let names = NameTable::collect(fields)?;
    let mut b = Builder {
        names,
        module: Module::default(),
    };
    for field in fields {
        b.field(field)?;
    }
    b.module.intern_types();
    Ok(b.module)
}

/// `$name` → index maps for each module-level index space.
#[derive(Default)]
struct NameTable {
    funcs: HashMap<String, u32>,
    globals: HashMap<String, u32>,
    memories: HashMap<String, u32>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Space {
    Func,
    Global,
    Memory,
}

impl NameTable {
    fn collect(fields: &[Sexp]) -> Result<NameTable> {
        let mut table = NameTable::default();
        let mut counts = [0u32; 3];
        let mut seen_definition = false;
        for field in fields {
            let Sexp::List(items, pos) = field else {
                return expected_at(field, "module field");
            };
            let head = field.head().unwrap_or("");
            let (space, id, is_import) = match head {
                "import" => {
                    let desc = items.get(3);
                    let space = match desc.and_then(Sexp::head) {
                        Some("func") => Space::Func,
                        Some("global") => Space::Global,
                        Some("memory") => Space::Memory,
                        _ => {
                            return match desc {
                                Some(d) => expected_at(d, "import descriptor"),
                                None => expected(*pos, "import descriptor", "`)`"),
                            }
                        }
                    };
                    let id = match desc {
                        Some(Sexp::List(d, _)) => d.get(1).and_then(id_atom),
                        _ => None,
                    };
                    (space, id, true)
                }
                "func" | "global" | "memory" => {
                    let space = match head {
                        "func" => Space::Func,
                        "global" => Space::Global,
                        _ => Space::Memory,
                    };
                    let inline_import = items.iter().any(|i| i.head() == Some("import"));
                    (space, items.get(1).and_then(id_atom), inline_import)
                }
                _ => continue,
            };
            if is_import && seen_definition {
                return expected(*pos, "imports before definitions", "import after definition");
            }
            if !is_import {
                seen_definition = true;
            }
            let slot = space as usize;
            let index = counts[slot];
            counts[slot] += 1;
            if let Some((name, at)) = id {
                let map = match space {
                    Space::Func => &mut table.funcs,
                    Space::Global => &mut table.globals,
                    Space::Memory => &mut table.memories,
                };
                if map.insert(name.to_string(), index).is_some() {
                    return expected(at, "unique name", format!("duplicate `{name}`"));
                }
            }
        }
        Ok(table)
    }
}

fn id_atom(s: &Sexp) -> Option<(&str, Pos)> {
    match s {
        Sexp::Atom(a, p) if a.starts_with('$') => Some((a.as_str(), *p)),
        _ => None,
    }
}

struct Builder {
    names: NameTable,
    module: Module,
}

/// Cursor over the items of one list.
struct Items<'a> {
    items: &'a [Sexp],
    i: usize,
    close: Pos,
}

impl<'a> Items<'a> {
    fn new(list: &'a Sexp) -> Items<'a> {
        match list {
            Sexp::List(items, pos) => Items {
                items,
                i: 1,
                close: *pos,
            },
            _ => Items {
                items: &[],
                i: 0,
                close: list.pos(),
            },
        }
    }

    fn peek(&self) -> Option<&'a Sexp> {
        self.items.get(self.i)
    }

    fn next(&mut self) -> Option<&'a Sexp> {
        let item = self.items.get(self.i);
        self.i += 1;
        item
    }

    fn peek_head(&self) -> Option<&'a str> {
        self.peek().and_then(Sexp::head)
    }

    fn id(&mut self) -> Option<(&'a str, Pos)> {
        let id = self.peek().and_then(id_atom);
        if id.is_some() {
            self.i += 1;
        }
        id
    }

    fn string(&mut self, what: &str) -> Result<&'a [u8]> {
        match self.next() {
            Some(Sexp::Str(bytes, _)) => Ok(bytes),
            Some(other) => expected_at(other, what),
            None => expected(self.close, what, "`)`"),
        }
    }

    fn name(&mut self, what: &str) -> Result<String> {
        let pos = self.peek().map_or(self.close, Sexp::pos);
        let bytes = self.string(what)?;
        String::from_utf8(bytes.to_vec()).or_else(|_| expected(pos, format!("{what} (UTF-8)"), "invalid UTF-8"))
    }

    fn atom(&mut self, what: &str) -> Result<(&'a str, Pos)> {
        match self.next() {
            Some(Sexp::Atom(a, p)) => Ok((a, *p)),
            Some(other) => expected_at(other, what),
            None => expected(self.close, what, "`)`"),
        }
    }

    fn end(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(extra) => expected_at(extra, "`)`"),
        }
    }

    fn rest(&mut self) -> &'a [Sexp] {
        let rest = &self.items[self.i.min(self.items.len())..];
        self.i = self.items.len();
        rest
    }
}

fn valtype(item: Option<&Sexp>, close: Pos) -> Result<ValType> {
    match item {
        Some(Sexp::Atom(a, p)) => {
            ValType::from_name(a).map_or_else(|| expected(*p, "value type", format!("`{a}`")), Ok)
        }
        Some(other) => expected_at(other, "value type"),
        None => expected(close, "value type", "`)`"),
    }
}

fn u32_literal(text: &str, pos: Pos, what: &str) -> Result<u32> {
    match text.strip_prefix('+').unwrap_or(text) {
        t if t.starts_with('-') => expected(pos, what, format!("`{text}`")),
        t => match parse_int(t, 32) {
            Some(v) => Ok(v as u32),
            None => expected(pos, what, format!("`{text}`")),
        },
    }
}

/// Collected `(param)`, `(result)`, and `(local)` declarations plus local names.
#[derive(Default)]
struct Signature {
    params: Vec<ValType>,
    results: Vec<ValType>,
    locals: Vec<ValType>,
    local_names: HashMap<String, u32>,
}

impl Signature {
    /// Consumes leading `(param ...)`, `(result ...)`, and when `with_locals`
    /// `(local ...)` clauses, in that order.
    fn read(items: &mut Items<'_>, with_locals: bool) -> Result<Signature> {
        let mut sig = Signature::default();
        let mut stage = 0;
        while let Some(head) = items.peek_head() {
            let order = match head {
                "param" => 0,
                "result" => 1,
                "local" if with_locals => 2,
                _ => break,
            };
            let decl = items.next().expect("peeked");
            if order < stage {
                return expected_at(decl, "declarations in param/result/local order");
            }
            stage = order;
            let mut inner = Items::new(decl);
            if let Some((name, pos)) = inner.id() {
                if order == 1 {
                    return expected(pos, "value type", format!("`{name}`"));
                }
                let ty = valtype(inner.next(), inner.close)?;
                inner.end()?;
                let index = (sig.params.len() + sig.locals.len()) as u32;
                if sig.local_names.insert(name.to_string(), index).is_some() {
                    return expected(pos, "unique name", format!("duplicate `{name}`"));
                }
                sig.push(order, ty);
            } else {
                while let Some(item) = inner.next() {
                    let ty = valtype(Some(item), inner.close)?;
                    sig.push(order, ty);
                }
            }
        }
        Ok(sig)
    }

    fn push(&mut self, order: u8, ty: ValType) {
        match order {
            0 => self.params.push(ty),
            1 => self.results.push(ty),
            _ => self.locals.push(ty),
        }
    }

    fn func_type(&self) -> FuncType {
        FuncType::new(self.params.clone(), self.results.clone())
    }
}

impl Builder {
    fn resolve(&self, space: Space, item: (&str, Pos)) -> Result<u32> {
        let (text, pos) = item;
        if text.starts_with('$') {
            let map = match space {
                Space::Func => &self.names.funcs,
                Space::Global => &self.names.globals,
                Space::Memory => &self.names.memories,
            };
            return map.get(text).copied().ok_or(WatError::UnresolvedName {
                line: pos.line,
                col: pos.col,
                name: text.to_string(),
            });
        }
        u32_literal(text, pos, "index")
    }

    fn field(&mut self, field: &Sexp) -> Result<()> {
        match field.head() {
            Some("func") => self.func(field),
            Some("import") => self.import(field),
            Some("memory") => self.memory(field),
            Some("global") => self.global(field),
            Some("export") => self.export(field),
            Some("start") => self.start(field),
            Some("data") => self.data(field),
            Some("@custom") => self.custom(field),
            _ => expected_at(field, "module field"),
        }
    }

    fn inline_exports(&mut self, items: &mut Items<'_>, kind: ExportKind, index: u32) -> Result<()> {
        while items.peek_head() == Some("export") {
            let mut e = Items::new(items.next().expect("peeked"));
            let name = e.name("export name")?;
            e.end()?;
            self.module.exports.push(Export { name, kind, index });
        }
        Ok(())
    }

    fn inline_import(&mut self, items: &mut Items<'_>) -> Result<Option<(String, String)>> {
        if items.peek_head() != Some("import") {
            return Ok(None);
        }
        let mut i = Items::new(items.next().expect("peeked"));
        let module = i.name("import module name")?;
        let name = i.name("import item name")?;
        i.end()?;
        Ok(Some((module, name)))
    }

    fn next_func_index(&self) -> u32 {
        self.module.func_count()
    }

    fn func(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        items.id();
        let index = self.next_func_index();
        self.inline_exports(&mut items, ExportKind::Func, index)?;
        if let Some((module, name)) = self.inline_import(&mut items)? {
            let sig = Signature::read(&mut items, false)?;
            items.end()?;
            self.module.imports.push(Import {
                module,
                name,
                desc: ImportDesc::Func(sig.func_type()),
            });
            return Ok(());
        }
        let sig = Signature::read(&mut items, true)?;
        let mut body = Vec::new();
        let ctx = BodyCtx {
            builder: self,
            locals: &sig.local_names,
        };
        ctx.instrs(items.rest(), &mut body)?;
        self.module.funcs.push(FuncDef {
            params: sig.params,
            results: sig.results,
            locals: sig.locals,
            body,
        });
        Ok(())
    }

    fn import(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        let module = items.name("import module name")?;
        let name = items.name("import item name")?;
        let desc_sexp = match items.next() {
            Some(d) => d,
            None => return expected(items.close, "import descriptor", "`)`"),
        };
        items.end()?;
        let mut d = Items::new(desc_sexp);
        d.id();
        let desc = match desc_sexp.head() {
            Some("func") => {
                let sig = Signature::read(&mut d, false)?;
                d.end()?;
                ImportDesc::Func(sig.func_type())
            }
            Some("memory") => {
                let limits = self.limits(&mut d)?;
                d.end()?;
                ImportDesc::Memory(limits)
            }
            Some("global") => {
                let ty = self.global_type(&mut d)?;
                d.end()?;
                ImportDesc::Global(ty)
            }
            _ => return expected_at(desc_sexp, "import descriptor"),
        };
        self.module.imports.push(Import { module, name, desc });
        Ok(())
    }

    fn limits(&self, items: &mut Items<'_>) -> Result<Limits> {
        let (min, pos) = items.atom("minimum page count")?;
        let min = u32_literal(min, pos, "minimum page count")?;
        let max = match items.peek() {
            Some(Sexp::Atom(a, p)) => {
                items.next();
                Some(u32_literal(a, *p, "maximum page count")?)
            }
            _ => None,
        };
        Ok(Limits { min, max })
    }

    fn global_type(&self, items: &mut Items<'_>) -> Result<GlobalType> {
        match items.next() {
            Some(m @ Sexp::List(..)) if m.head() == Some("mut") => {
                let mut inner = Items::new(m);
                let ty = valtype(inner.next(), inner.close)?;
                inner.end()?;
                Ok(GlobalType { ty, mutable: true })
            }
            other => Ok(GlobalType {
                ty: valtype(other, items.close)?,
                mutable: false,
            }),
        }
    }

    fn memory(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        items.id();
        let index = self.module.memory_count();
        self.inline_exports(&mut items, ExportKind::Memory, index)?;
        let import = self.inline_import(&mut items)?;
        let limits = self.limits(&mut items)?;
        items.end()?;
        match import {
            Some((module, name)) => self.module.imports.push(Import {
                module,
                name,
                desc: ImportDesc::Memory(limits),
            }),
            None => self.module.memories.push(limits),
        }
        Ok(())
    }

    fn global(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        items.id();
        let index = self.module.global_count();
        self.inline_exports(&mut items, ExportKind::Global, index)?;
        let import = self.inline_import(&mut items)?;
        let ty = self.global_type(&mut items)?;
        if let Some((module, name)) = import {
            items.end()?;
            self.module.imports.push(Import {
                module,
                name,
                desc: ImportDesc::Global(ty),
            });
            return Ok(());
        }
        let init = self.const_expr(items.rest(), field.pos())?;
        self.module.globals.push(Global { ty, init });
        Ok(())
    }

    fn const_expr(&self, items: &[Sexp], pos: Pos) -> Result<ConstExpr> {
        let empty = HashMap::new();
        let ctx = BodyCtx {
            builder: self,
            locals: &empty,
        };
        let mut instrs = Vec::new();
        ctx.instrs(items, &mut instrs)?;
        match instrs.as_slice() {
            [Instr::I32Const(v)] => Ok(ConstExpr::I32(*v)),
            [Instr::I64Const(v)] => Ok(ConstExpr::I64(*v)),
            [Instr::F32Const(v)] => Ok(ConstExpr::F32(*v)),
            [Instr::F64Const(v)] => Ok(ConstExpr::F64(*v)),
            [Instr::V128Const(v)] => Ok(ConstExpr::V128(*v)),
            [Instr::GlobalGet(i)] => Ok(ConstExpr::GlobalGet(*i)),
            _ => expected(
                items.first().map_or(pos, Sexp::pos),
                "single constant instruction",
                format!("{} instructions", instrs.len()),
            ),
        }
    }

    fn export(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        let name = items.name("export name")?;
        let desc = match items.next() {
            Some(d) => d,
            None => return expected(items.close, "export descriptor", "`)`"),
        };
        items.end()?;
        let (kind, space) = match desc.head() {
            Some("func") => (ExportKind::Func, Space::Func),
            Some("memory") => (ExportKind::Memory, Space::Memory),
            Some("global") => (ExportKind::Global, Space::Global),
            _ => return expected_at(desc, "`(func ...)`, `(memory ...)` or `(global ...)`"),
        };
        let mut d = Items::new(desc);
        let index = self.resolve(space, d.atom("index")?)?;
        d.end()?;
        self.module.exports.push(Export { name, kind, index });
        Ok(())
    }

    fn start(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        if self.module.start.is_some() {
            return expected_at(field, "at most one start field");
        }
        let index = self.resolve(Space::Func, items.atom("function index")?)?;
        items.end()?;
        self.module.start = Some(index);
        Ok(())
    }

    fn data(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        items.id();
        if items.peek_head() == Some("memory") {
            let mut m = Items::new(items.next().expect("peeked"));
            let idx = self.resolve(Space::Memory, m.atom("memory index")?)?;
            m.end()?;
            if idx != 0 {
                return expected_at(field, "memory index 0");
            }
        }
        let offset_sexp = match items.next() {
            Some(s @ Sexp::List(..)) => s,
            Some(other) => return expected_at(other, "offset expression"),
            None => return expected(items.close, "offset expression", "`)`"),
        };
        let offset = if offset_sexp.head() == Some("offset") {
            let mut o = Items::new(offset_sexp);
            self.const_expr(o.rest(), offset_sexp.pos())?
        } else {
            self.const_expr(std::slice::from_ref(offset_sexp), offset_sexp.pos())?
        };
        let mut bytes = Vec::new();
        while items.peek().is_some() {
            bytes.extend_from_slice(items.string("data string")?);
        }
        self.module.data.push(DataSegment { offset, bytes });
        Ok(())
    }

    fn custom(&mut self, field: &Sexp) -> Result<()> {
        let mut items = Items::new(field);
        let name = items.name("custom section name")?;
        // A placement clause is accepted but custom sections are always
        // emitted after the standard sections.
        if matches!(items.peek_head(), Some("before" | "after")) {
            items.next();
        }
        let mut payload = Vec::new();
        while items.peek().is_some() {
            payload.extend_from_slice(items.string("custom section data")?);
        }
        self.module.customs.push(CustomSection { name, payload });
        Ok(())
    }
}

struct BodyCtx<'a> {
    builder: &'a Builder,
    locals: &'a HashMap<String, u32>,
}

impl BodyCtx<'_> {
    /// Parses a mixed sequence of flat and folded instructions.
    fn instrs(&self, items: &[Sexp], out: &mut Vec<Instr>) -> Result<()> {
        let mut i = 0;
        while i < items.len() {
            match &items[i] {
                Sexp::Atom(name, pos) => {
                    i += 1;
                    let kind = self.kind(name, *pos)?;
                    let mut imm = ImmSource::Flat {
                        items,
                        i: &mut i,
                        end: pos_after(items, *pos),
                    };
                    let instr = self.instr(kind, &mut imm)?;
                    out.push(instr);
                }
                list @ Sexp::List(inner, pos) => {
                    i += 1;
                    let (name, name_pos) = match inner.first() {
                        Some(Sexp::Atom(a, p)) => (a.as_str(), *p),
                        _ => return expected_at(list, "folded instruction"),
                    };
                    let kind = self.kind(name, name_pos)?;
                    let mut j = 1;
                    let instr = {
                        let mut imm = ImmSource::Flat {
                            items: inner,
                            i: &mut j,
                            end: *pos,
                        };
                        self.instr(kind, &mut imm)?
                    };
                    for operand in &inner[j..] {
                        if !matches!(operand, Sexp::List(..)) {
                            return expected_at(operand, "folded operand");
                        }
                    }
                    self.instrs(&inner[j..], out)?;
                    out.push(instr);
                }
                other @ Sexp::Str(..) => return expected_at(other, "instruction"),
            }
        }
        Ok(())
    }

    fn kind(&self, name: &str, pos: Pos) -> Result<OpKind> {
        lookup_name(name).map_or_else(|| expected(pos, "instruction", format!("`{name}`")), Ok)
    }

    fn local(&self, item: (&str, Pos)) -> Result<u32> {
        let (text, pos) = item;
        if text.starts_with('$') {
            return self.locals.get(text).copied().ok_or(WatError::UnresolvedName {
                line: pos.line,
                col: pos.col,
                name: text.to_string(),
            });
        }
        u32_literal(text, pos, "local index")
    }

    fn instr(&self, kind: OpKind, imm: &mut ImmSource<'_, '_>) -> Result<Instr> {
        Ok(match kind {
            OpKind::Plain(op) => Instr::Plain(op),
            OpKind::Call => Instr::Call(self.builder.resolve(Space::Func, imm.atom("function index")?)?),
            OpKind::LocalGet => Instr::LocalGet(self.local(imm.atom("local index")?)?),
            OpKind::LocalSet => Instr::LocalSet(self.local(imm.atom("local index")?)?),
            OpKind::LocalTee => Instr::LocalTee(self.local(imm.atom("local index")?)?),
            OpKind::GlobalGet => Instr::GlobalGet(self.builder.resolve(Space::Global, imm.atom("global index")?)?),
            OpKind::GlobalSet => Instr::GlobalSet(self.builder.resolve(Space::Global, imm.atom("global index")?)?),
            OpKind::I32Const => {
                let (t, p) = imm.atom("i32 literal")?;
                match parse_int(t, 32) {
                    Some(v) => Instr::I32Const(v as u32 as i32),
                    None => return expected(p, "i32 literal", format!("`{t}`")),
                }
            }
            OpKind::I64Const => {
                let (t, p) = imm.atom("i64 literal")?;
                match parse_int(t, 64) {
                    Some(v) => Instr::I64Const(v as i64),
                    None => return expected(p, "i64 literal", format!("`{t}`")),
                }
            }
            OpKind::F32Const => {
                let (t, p) = imm.atom("f32 literal")?;
                match parse_f32(t) {
                    Some(v) => Instr::F32Const(v),
                    None => return expected(p, "f32 literal", format!("`{t}`")),
                }
            }
            OpKind::F64Const => {
                let (t, p) = imm.atom("f64 literal")?;
                match parse_f64(t) {
                    Some(v) => Instr::F64Const(v),
                    None => return expected(p, "f64 literal", format!("`{t}`")),
                }
            }
            OpKind::V128Const => Instr::V128Const(parse_v128_literal(imm)?),
            OpKind::Mem(op) => {
                let mut arg = MemArg {
                    align: op.natural_align(),
                    offset: 0,
                };
                if let Some((t, p)) = imm.peek_atom_prefixed("offset=") {
                    arg.offset = u32_literal(&t["offset=".len()..], p, "offset")?;
                    imm.skip();
                }
                if let Some((t, p)) = imm.peek_atom_prefixed("align=") {
                    let bytes = u32_literal(&t["align=".len()..], p, "alignment")?;
                    if !bytes.is_power_of_two() {
                        return expected(p, "power-of-two alignment", format!("`{t}`"));
                    }
                    arg.align = bytes.trailing_zeros();
                    imm.skip();
                }
                Instr::Mem(op, arg)
            }
            OpKind::Lane(op) => {
                let (t, p) = imm.atom("lane index")?;
                match parse_int(t, 8) {
                    Some(v) if !t.starts_with('-') => Instr::Lane(op, v as u8),
                    _ => return expected(p, "lane index", format!("`{t}`")),
                }
            }
            OpKind::MemorySize => Instr::MemorySize,
            OpKind::MemoryGrow => Instr::MemoryGrow,
        })
    }
}

fn pos_after(items: &[Sexp], fallback: Pos) -> Pos {
    items.last().map_or(fallback, Sexp::pos)
}

/// Where immediates are read from: the atoms that follow the mnemonic.
enum ImmSource<'a, 'b> {
    Flat {
        items: &'a [Sexp],
        i: &'b mut usize,
        end: Pos,
    },
}

impl<'a> ImmSource<'a, '_> {
    fn atom(&mut self, what: &str) -> Result<(&'a str, Pos)> {
        let ImmSource::Flat { items, i, end } = self;
        match items.get(**i) {
            Some(Sexp::Atom(a, p)) => {
                **i += 1;
                Ok((a.as_str(), *p))
            }
            Some(other) => expected_at(other, what),
            None => expected(*end, what, "`)`"),
        }
    }

    fn peek_atom_prefixed(&self, prefix: &str) -> Option<(&'a str, Pos)> {
        let ImmSource::Flat { items, i, .. } = self;
        match items.get(**i) {
            Some(Sexp::Atom(a, p)) if a.starts_with(prefix) => Some((a.as_str(), *p)),
            _ => None,
        }
    }

    fn skip(&mut self) {
        let ImmSource::Flat { i, .. } = self;
        **i += 1;
    }
}

fn parse_v128_literal(imm: &mut ImmSource<'_, '_>) -> Result<[u8; 16]> {
    let (shape, shape_pos) = imm.atom("v128 shape")?;
    let (lanes, lane_bytes): (usize, usize) = match shape {
        "i8x16" => (16, 1),
        "i16x8" => (8, 2),
        "i32x4" | "f32x4" => (4, 4),
        "i64x2" | "f64x2" => (2, 8),
        _ => return expected(shape_pos, "v128 shape", format!("`{shape}`")),
    };
    let mut out = [0u8; 16];
    for lane in 0..lanes {
        let (t, p) = imm.atom("lane literal")?;
        let bits: u64 = match shape {
            "f32x4" => parse_f32(t).map(u64::from),
            "f64x2" => parse_f64(t),
            _ => parse_int(t, 8 * lane_bytes as u32),
        }
        .map_or_else(|| expected(p, format!("{shape} lane literal"), format!("`{t}`")), Ok)?;
        let le = bits.to_le_bytes();
        out[lane * lane_bytes..(lane + 1) * lane_bytes].copy_from_slice(&le[..lane_bytes]);
    }
    Ok(out)
}

/// Parses a standalone literal such as `4`, `-0.0`, or `i32x4 1 2 3 4` as a
/// value of type `ty`. Used for manifest arguments and expectations.
pub(crate) fn parse_literal(ty: ValType, text: &str) -> Option<Instr> {
    let text = text.trim();
    match ty {
        ValType::I32 => parse_int(text, 32).map(|v| Instr::I32Const(v as u32 as i32)),
        ValType::I64 => parse_int(text, 64).map(|v| Instr::I64Const(v as i64)),
        ValType::F32 => parse_f32(text).map(Instr::F32Const),
        ValType::F64 => parse_f64(text).map(Instr::F64Const),
        ValType::V128 => {
            let sexps = read_sexps(text).ok()?;
            let mut i = 0;
            let mut imm = ImmSource::Flat {
                items: &sexps,
                i: &mut i,
                end: Pos { line: 1, col: 1 },
            };
            let bytes = parse_v128_literal(&mut imm).ok()?;
            (i == sexps.len()).then_some(Instr::V128Const(bytes))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wat::ops::{LaneOp, MemOp, Op};

    #[test]
    fn empty_module() {
        assert_eq!(parse_wat("(module)").unwrap(), Module::default());
        assert_eq!(parse_wat("(module $m)").unwrap(), Module::default());
    }

    #[test]
    fn rotr_export() {
        let m = parse_wat(
            r#"(module (func (export "rotr") (param i64 i64) (result i64)
                 local.get 0 local.get 1 i64.rotr))"#,
        )
        .unwrap();
        assert_eq!(m.funcs.len(), 1);
        assert_eq!(m.exports.len(), 1);
        assert_eq!(m.exports[0].name, "rotr");
        assert_eq!(
            m.funcs[0].body,
            vec![Instr::LocalGet(0), Instr::LocalGet(1), Instr::Plain(Op::I64Rotr)]
        );
        assert_eq!(m.types, vec![FuncType::new([ValType::I64; 2], [ValType::I64])]);
    }

    #[test]
    fn folded_matches_flat() {
        let flat = parse_wat("(module (func (param $a i32) (result i32) local.get $a i32.const 1 i32.add))").unwrap();
        let folded =
            parse_wat("(module (func (param $a i32) (result i32) (i32.add (local.get $a) (i32.const 1))))").unwrap();
        assert_eq!(flat, folded);
    }

    #[test]
    fn oversized_memory_parses() {
        let m = parse_wat("(module (memory 0 65537))").unwrap();
        assert_eq!(
            m.memories,
            vec![Limits {
                min: 0,
                max: Some(65537)
            }]
        );
    }

    #[test]
    fn imports_come_first_in_index_space() {
        let m = parse_wat(
            r#"(module
                (import "wasi_snapshot_preview1" "proc_exit" (func $exit (param i32)))
                (func $main (export "_start") i32.const 0 call $exit)
                (start $main))"#,
        )
        .unwrap();
        assert_eq!(m.exports[0].index, 1);
        assert_eq!(m.start, Some(1));
        assert_eq!(m.funcs[0].body[1], Instr::Call(0));
    }

    #[test]
    fn import_after_definition_rejected() {
        let err = parse_wat(r#"(module (func) (import "a" "b" (func)))"#).unwrap_err();
        assert!(matches!(err, WatError::Parse { .. }));
    }

    #[test]
    fn unresolved_name() {
        let err = parse_wat("(module (func call $nope))").unwrap_err();
        assert_eq!(
            err,
            WatError::UnresolvedName {
                line: 1,
                col: 20,
                name: "$nope".into()
            }
        );
    }

    #[test]
    fn duplicate_name_is_parse_error() {
        let err = parse_wat("(module (func $f) (func $f))").unwrap_err();
        assert!(matches!(err, WatError::Parse { line: 1, col: 25, .. }), "{err:?}");
    }

    #[test]
    fn unknown_instruction_position() {
        let err = parse_wat("(module\n  (func\n    i32.bogus))").unwrap_err();
        match err {
            WatError::Parse {
                line, col, expected, ..
            } => {
                assert_eq!((line, col), (3, 5));
                assert_eq!(expected, "instruction");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simd_and_memory_immediates() {
        let m = parse_wat(
            "(module (memory 1) (func (result f64)
               (f64x2.replace_lane 1 (f64x2.splat (f64.const 1.5)) (f64.const -0.0))
               f64x2.extract_lane 1
               (drop (v128.load offset=16 align=1 (i32.const 0)))
               (drop (v128.const i32x4 1 2 0xffffffff -1))))",
        )
        .unwrap();
        let body = &m.funcs[0].body;
        assert_eq!(body[0], Instr::F64Const(1.5f64.to_bits()));
        assert_eq!(body[3], Instr::Lane(LaneOp::F64x2ReplaceLane, 1));
        assert_eq!(body[4], Instr::Lane(LaneOp::F64x2ExtractLane, 1));
        assert_eq!(body[6], Instr::Mem(MemOp::V128Load, MemArg { align: 0, offset: 16 }));
        let mut expected = [0u8; 16];
        expected[0] = 1;
        expected[4] = 2;
        expected[8..16].fill(0xff);
        assert_eq!(body[8], Instr::V128Const(expected));
    }

    #[test]
    fn data_and_custom_sections() {
        let m = parse_wat(
            r#"(module (memory 1)
                 (data (i32.const 8) "ab" "\01")
                 (data (offset (i32.const 0)) "")
                 (@custom "note" "hi"))"#,
        )
        .unwrap();
        assert_eq!(m.data[0].offset, ConstExpr::I32(8));
        assert_eq!(m.data[0].bytes, b"ab\x01");
        assert_eq!(m.customs[0].name, "note");
    }

    #[test]
    fn globals_and_mutability() {
        let m = parse_wat(
            r#"(module (global $g (mut i64) (i64.const -5)) (global i32 i32.const 7)
                 (func (result i64) global.get $g))"#,
        )
        .unwrap();
        assert!(m.globals[0].ty.mutable);
        assert_eq!(m.globals[0].init, ConstExpr::I64(-5));
        assert_eq!(m.globals[1].init, ConstExpr::I32(7));
    }

    #[test]
    fn literal_helper() {
        assert_eq!(parse_literal(ValType::I64, "4"), Some(Instr::I64Const(4)));
        assert_eq!(
            parse_literal(ValType::F64, "-0.0"),
            Some(Instr::F64Const((-0.0f64).to_bits()))
        );
        assert!(parse_literal(ValType::V128, "i64x2 1 2").is_some());
        assert!(parse_literal(ValType::V128, "i64x2 1").is_none());
    }
}
