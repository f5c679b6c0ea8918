//! Tokenizer and S-expression reader for the text format.

use super::parse::WatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    List(Vec<Sexp>, Pos),
    /// Keyword, identifier (`$x`), number, or `key=value` reserved token.
    Atom(String, Pos),
    Str(Vec<u8>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::List(_, p) | Sexp::Atom(_, p) | Sexp::Str(_, p) => *p,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Atom(head, _)) => format!("`({head} ...)`"),
                _ => "list".to_string(),
            },
            Sexp::Atom(a, _) => format!("`{a}`"),
            Sexp::Str(..) => "string".to_string(),
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    /// Head keyword of a list, e.g. `func` for `(func ...)`.
    pub fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => items.first().and_then(Sexp::as_atom),
            _ => None,
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.i).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.i + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.i += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if c & 0xc0 != 0x80 {
            // count characters, not UTF-8 continuation bytes
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, pos: Pos, expected: &str, found: &str) -> WatError {
        WatError::Parse {
            line: pos.line,
            col: pos.col,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    fn skip_trivia(&mut self) -> Result<(), WatError> {
        loop {
            match (self.peek(), self.peek2()) {
                (Some(c), _) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                (Some(b';'), Some(b';')) => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some(b'('), Some(b';')) => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match (self.peek(), self.peek2()) {
                            (None, _) => return Err(self.error(start, "`;)`", "end of input")),
                            (Some(b';'), Some(b')')) => {
                                self.bump();
                                self.bump();
                                depth -= 1;
                            }
                            (Some(b'('), Some(b';')) => {
                                self.bump();
                                self.bump();
                                depth += 1;
                            }
                            _ => {
                                self.bump();
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn string(&mut self) -> Result<Vec<u8>, WatError> {
        let start = self.pos();
        self.bump(); // opening quote
        let mut out = Vec::new();
        loop {
            let here = self.pos();
            match self.bump() {
                None => return Err(self.error(start, "closing `\"`", "end of input")),
                Some(b'"') => return Ok(out),
                Some(b'\n') => return Err(self.error(here, "closing `\"`", "newline")),
                Some(b'\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some(b'n') => out.push(b'\n'),
                        Some(b't') => out.push(b'\t'),
                        Some(b'r') => out.push(b'\r'),
                        Some(b'\\') => out.push(b'\\'),
                        Some(b'\'') => out.push(b'\''),
                        Some(b'"') => out.push(b'"'),
                        Some(b'u') => {
                            if self.bump() != Some(b'{') {
                                return Err(self.error(esc_pos, "`{` after `\\u`", "other"));
                            }
                            let mut hex = String::new();
                            while let Some(c) = self.peek() {
                                if c == b'}' {
                                    break;
                                }
                                hex.push(c as char);
                                self.bump();
                            }
                            self.bump();
                            let cp = u32::from_str_radix(&hex.replace('_', ""), 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.error(esc_pos, "unicode scalar value", &hex))?;
                            let mut buf = [0u8; 4];
                            out.extend_from_slice(cp.encode_utf8(&mut buf).as_bytes());
                        }
                        Some(h) if h.is_ascii_hexdigit() => {
                            let l = self
                                .bump()
                                .filter(u8::is_ascii_hexdigit)
                                .ok_or_else(|| self.error(esc_pos, "two hex digits after `\\`", "one"))?;
                            let byte = u8::from_str_radix(std::str::from_utf8(&[h, l]).expect("ascii"), 16)
                                .expect("hex digits");
                            out.push(byte);
                        }
                        other => {
                            let found = other.map_or("end of input".to_string(), |c| format!("`\\{}`", c as char));
                            return Err(self.error(esc_pos, "string escape", &found));
                        }
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn atom(&mut self) -> String {
        let start = self.i;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b'"' || c == b';' {
                break;
            }
            self.bump();
        }
        String::from_utf8_lossy(&self.src[start..self.i]).into_owned()
    }
}

/// Reads every top-level S-expression in `text`.
pub fn read_sexps(text: &str) -> Result<Vec<Sexp>, WatError> {
    let mut lx = Lexer {
        src: text.as_bytes(),
        i: 0,
        line: 1,
        col: 1,
    };
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    loop {
        lx.skip_trivia()?;
        let pos = lx.pos();
        let item = match lx.peek() {
            None => {
                if let Some((_, open)) = stack.last() {
                    return Err(lx.error(*open, "`)`", "end of input"));
                }
                return Ok(top);
            }
            Some(b'(') => {
                lx.bump();
                stack.push((Vec::new(), pos));
                continue;
            }
            Some(b')') => {
                lx.bump();
                match stack.pop() {
                    Some((items, open)) => Sexp::List(items, open),
                    None => return Err(lx.error(pos, "expression", "`)`")),
                }
            }
            Some(b'"') => Sexp::Str(lx.string()?, pos),
            Some(_) => Sexp::Atom(lx.atom(), pos),
        };
        match stack.last_mut() {
            Some((items, _)) => items.push(item),
            None => top.push(item),
        }
    }
}
