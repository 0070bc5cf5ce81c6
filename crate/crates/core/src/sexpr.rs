//! Minimal s-expression reader shared by the problem and domain parsers.

use std::fmt;

/// Line/column position (both 1-based) inside a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: String,
    pub found: String,
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// The leading atom of a list, e.g. `and` for `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|items| items.first()).and_then(SExpr::as_atom)
    }

    pub fn describe(&self) -> String {
        match self {
            SExpr::Atom(s, _) => format!("`{s}`"),
            SExpr::List(..) => "a list".to_string(),
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&(_, c)) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExpr, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos();
        match self.chars.peek().map(|&(_, c)| c) {
            None => Err(SyntaxError {
                pos,
                expected: "`(` or an atom".into(),
                found: "end of input".into(),
            }),
            Some(')') => Err(SyntaxError {
                pos,
                expected: "`(` or an atom".into(),
                found: "`)`".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek().map(|&(_, c)| c) {
                        None => {
                            return Err(SyntaxError {
                                pos: self.pos(),
                                expected: "`)`".into(),
                                found: "end of input".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, pos));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&(_, c)) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(SExpr::Atom(s, pos))
            }
        }
    }
}

/// Reads exactly one s-expression from `text`; trailing non-comment input is an error.
pub fn parse_one(text: &str) -> Result<SExpr, SyntaxError> {
    let mut reader = Reader {
        chars: text.char_indices().peekable(),
        line: 1,
        col: 1,
    };
    let expr = reader.read()?;
    reader.skip_trivia();
    if reader.chars.peek().is_some() {
        let pos = reader.pos();
        let found = reader.read().map(|e| e.describe()).unwrap_or_else(|_| "`)`".into());
        return Err(SyntaxError {
            pos,
            expected: "end of input".into(),
            found,
        });
    }
    Ok(expr)
}

/// True for identifiers of the form `[A-Za-z][A-Za-z0-9_-]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}
