//! Recursive-descent reader for the netlist subset (grammar in docs/netlist.md).

use thiserror::Error;

use super::{Binding, Direction, Instance, Module, Net, Netlist, Port, Top, Width};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("netlist {line}:{column}: {message}")]
pub struct NetlistError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u64),
    Punct(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, NetlistError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut out = Vec::new();
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            loop {
                if i + 1 >= chars.len() {
                    return Err(NetlistError {
                        line: l0,
                        column: c0,
                        message: "unterminated block comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                s.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            out.push(Lexed {
                tok: Tok::Ident(s),
                line: l0,
                column: c0,
            });
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            let n = s.parse().map_err(|_| NetlistError {
                line: l0,
                column: c0,
                message: format!("number `{s}` out of range"),
            })?;
            out.push(Lexed {
                tok: Tok::Number(n),
                line: l0,
                column: c0,
            });
        } else if "()[]{}#.,;:=-".contains(c) {
            advance(&mut i, &mut line, &mut col);
            out.push(Lexed {
                tok: Tok::Punct(c),
                line: l0,
                column: c0,
            });
        } else {
            return Err(NetlistError {
                line: l0,
                column: c0,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 6] = ["module", "endmodule", "parameter", "input", "output", "wire"];

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

/// A module as written, before the top is singled out.
struct RawModule {
    name: String,
    params: Vec<(String, u64)>,
    ports: Vec<Port>,
    nets: Vec<Net>,
    instances: Vec<Instance>,
    line: usize,
    column: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, NetlistError> {
        let t = &self.toks[self.pos];
        Err(NetlistError {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, NetlistError> {
        self.err(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn at_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    fn at_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn punct(&mut self, c: char) -> Result<(), NetlistError> {
        if self.at_punct(c) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{c}`"))
        }
    }

    fn keyword(&mut self, k: &str) -> Result<(), NetlistError> {
        if self.at_keyword(k) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> Result<String, NetlistError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn number(&mut self) -> Result<u64, NetlistError> {
        match *self.peek() {
            Tok::Number(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a number"),
        }
    }

    /// `[ msb : 0 ]`, where `msb` is a number or `NAME - 1`.
    fn range(&mut self) -> Result<Width, NetlistError> {
        if !self.at_punct('[') {
            return Ok(Width::Bits(1));
        }
        self.bump();
        let width = match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                if self.at_punct('-') {
                    self.bump();
                    let one = self.number()?;
                    if one != 1 || n == 0 {
                        return self.err("range must read `[N-1:0]`");
                    }
                    Width::Bits(n)
                } else {
                    Width::Bits(n + 1)
                }
            }
            Tok::Ident(_) => {
                let p = self.ident()?;
                self.punct('-')?;
                if self.number()? != 1 {
                    return self.err("range must read `[NAME-1:0]`");
                }
                Width::Param(p)
            }
            _ => return self.unexpected("a range bound"),
        };
        self.punct(':')?;
        if self.number()? != 0 {
            return self.err("ranges must end at bit 0");
        }
        self.punct(']')?;
        Ok(width)
    }

    fn port_decl(&mut self) -> Result<Port, NetlistError> {
        let direction = if self.at_keyword("input") {
            Direction::Input
        } else if self.at_keyword("output") {
            Direction::Output
        } else {
            return self.unexpected("`input` or `output`");
        };
        self.bump();
        self.keyword("wire")?;
        let width = self.range()?;
        let name = self.ident()?;
        Ok(Port { name, direction, width })
    }

    fn module(&mut self) -> Result<RawModule, NetlistError> {
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        self.keyword("module")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.at_punct('#') {
            self.bump();
            self.punct('(')?;
            loop {
                self.keyword("parameter")?;
                let k = self.ident()?;
                self.punct('=')?;
                params.push((k, self.number()?));
                if self.at_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.punct(')')?;
        }
        self.punct('(')?;
        let mut ports = Vec::new();
        if !self.at_punct(')') {
            loop {
                ports.push(self.port_decl()?);
                if self.at_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        self.punct(';')?;

        let mut nets = Vec::new();
        let mut instances = Vec::new();
        loop {
            if self.at_keyword("endmodule") {
                self.bump();
                break;
            }
            if self.at_keyword("wire") {
                self.bump();
                let width = match self.range()? {
                    Width::Bits(w) => w,
                    Width::Param(_) => return self.err("wire widths must be literal"),
                };
                let name = self.ident()?;
                self.punct(';')?;
                nets.push(Net { name, width });
            } else if matches!(self.peek(), Tok::Ident(_)) {
                instances.push(self.instance()?);
            } else {
                return self.unexpected("`wire`, an instance or `endmodule`");
            }
        }
        Ok(RawModule {
            name,
            params,
            ports,
            nets,
            instances,
            line,
            column,
        })
    }

    fn instance(&mut self) -> Result<Instance, NetlistError> {
        let module = self.ident()?;
        let mut params = Vec::new();
        if self.at_punct('#') {
            self.bump();
            self.punct('(')?;
            loop {
                self.punct('.')?;
                let k = self.ident()?;
                self.punct('(')?;
                let v = self.number()?;
                self.punct(')')?;
                params.push((k, v));
                if self.at_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.punct(')')?;
        }
        let name = self.ident()?;
        self.punct('(')?;
        let mut ports = Vec::new();
        if !self.at_punct(')') {
            loop {
                self.punct('.')?;
                let p = self.ident()?;
                self.punct('(')?;
                let binding = if self.at_punct(')') {
                    Binding::Open
                } else if self.at_punct('{') {
                    self.bump();
                    let mut nets = vec![self.ident()?];
                    while self.at_punct(',') {
                        self.bump();
                        nets.push(self.ident()?);
                    }
                    self.punct('}')?;
                    Binding::Concat(nets)
                } else {
                    Binding::Net(self.ident()?)
                };
                self.punct(')')?;
                ports.push((p, binding));
                if self.at_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        self.punct(';')?;
        Ok(Instance {
            module,
            name,
            params,
            ports,
        })
    }
}

/// Reads netlist text. The last module is the top; all others must be
/// interface-only. Names are resolved by [`super::lint`], not here.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut raw = Vec::new();
    while *p.peek() != Tok::Eof {
        raw.push(p.module()?);
    }
    let Some(top) = raw.pop() else {
        return p.err("missing top module");
    };
    let mut modules = Vec::new();
    for m in raw {
        if !m.nets.is_empty() || !m.instances.is_empty() {
            return Err(NetlistError {
                line: m.line,
                column: m.column,
                message: format!("module `{}` has a body but is not the last (top) module", m.name),
            });
        }
        modules.push(Module {
            name: m.name,
            params: m.params,
            ports: m.ports,
        });
    }
    if !top.params.is_empty() || top.ports.iter().any(|p| matches!(p.width, Width::Param(_))) {
        return Err(NetlistError {
            line: top.line,
            column: top.column,
            message: format!("top module `{}` must not be parameterized", top.name),
        });
    }
    Ok(Netlist {
        modules,
        top: Top {
            name: top.name,
            ports: top.ports,
            nets: top.nets,
            instances: top.instances,
        },
    })
}
