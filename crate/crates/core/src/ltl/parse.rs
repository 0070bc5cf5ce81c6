use thiserror::Error;

use super::LtlFormula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("LTL syntax error at column {col}: expected {expected}, found {found}")]
pub struct LtlSyntaxError {
    /// 1-based character column; `len + 1` means end of input.
    pub col: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Globally,
    Finally,
    Until,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Next => "`X`".into(),
            Tok::Globally => "`G`".into(),
            Tok::Finally => "`F`".into(),
            Tok::Until => "`U`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LtlSyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let two = |s: &str| chars[i..].iter().take(2).collect::<String>() == s;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '!' | '~' | '¬' => (Tok::Not, 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '→' => (Tok::Implies, 1),
            '&' if two("&&") => (Tok::And, 2),
            '&' => (Tok::And, 1),
            '|' if two("||") => (Tok::Or, 2),
            '|' => (Tok::Or, 1),
            '-' if two("->") => (Tok::Implies, 2),
            '=' if two("=>") => (Tok::Implies, 2),
            c if c.is_ascii_alphabetic() => {
                let start = i;
                let mut j = i;
                while j < chars.len() {
                    let d = chars[j];
                    let arrow = d == '-' && chars.get(j + 1) == Some(&'>');
                    if (d.is_ascii_alphanumeric() || d == '_' || d == '-') && !arrow {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let word: String = chars[start..j].iter().collect();
                i = j;
                match word.as_str() {
                    "true" | "TRUE" | "True" => toks.push((Tok::True, col)),
                    "false" | "FALSE" | "False" => toks.push((Tok::False, col)),
                    "U" => toks.push((Tok::Until, col)),
                    w if w.chars().all(|c| matches!(c, 'G' | 'F' | 'X')) => {
                        for (k, op) in w.chars().enumerate() {
                            let t = match op {
                                'G' => Tok::Globally,
                                'F' => Tok::Finally,
                                _ => Tok::Next,
                            };
                            toks.push((t, col + k));
                        }
                    }
                    _ => toks.push((Tok::Ident(word), col)),
                }
                continue;
            }
            other => {
                return Err(LtlSyntaxError {
                    col,
                    expected: "a formula".into(),
                    found: format!("`{other}`"),
                })
            }
        };
        toks.push((tok, col));
        i += width;
    }
    toks.push((Tok::End, chars.len() + 1));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> LtlSyntaxError {
        let (tok, col) = &self.toks[self.at];
        LtlSyntaxError {
            col: *col,
            expected: expected.into(),
            found: tok.describe(),
        }
    }

    fn implies(&mut self) -> Result<LtlFormula, LtlSyntaxError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(LtlFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<LtlFormula, LtlSyntaxError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = LtlFormula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<LtlFormula, LtlSyntaxError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = LtlFormula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<LtlFormula, LtlSyntaxError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::Until {
            self.bump();
            let rhs = self.until()?;
            return Ok(LtlFormula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LtlFormula, LtlSyntaxError> {
        let wrap: fn(LtlFormula) -> LtlFormula = match self.peek() {
            Tok::Not => LtlFormula::not,
            Tok::Next => LtlFormula::next,
            Tok::Globally => LtlFormula::globally,
            Tok::Finally => LtlFormula::finally,
            _ => return self.primary(),
        };
        self.bump();
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<LtlFormula, LtlSyntaxError> {
        match self.peek().clone() {
            Tok::Ident(p) => {
                self.bump();
                Ok(LtlFormula::Atom(p))
            }
            Tok::True => {
                self.bump();
                Ok(LtlFormula::True)
            }
            Tok::False => {
                self.bump();
                Ok(LtlFormula::False)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implies()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error("a formula")),
        }
    }
}

/// Parses LTL text. Precedence from tightest: unary (`!` `X` `G` `F`), `U`
/// (right-assoc), `&`, `|`, `->` (right-assoc).
pub fn parse_ltl(text: &str) -> Result<LtlFormula, LtlSyntaxError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let f = p.implies()?;
    if *p.peek() != Tok::End {
        return Err(p.error("end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LtlFormula as L;

    fn a(p: &str) -> LtlFormula {
        L::atom(p)
    }

    #[test]
    fn navigation_constraint() {
        assert_eq!(
            parse_ltl("G(!g U (c & d))").unwrap(),
            L::globally(L::until(L::not(a("g")), L::and(a("c"), a("d"))))
        );
        assert_eq!(parse_ltl("G(¬g U (c ∧ d))").unwrap(), parse_ltl("G(!g U (c & d))").unwrap());
    }

    #[test]
    fn single_atom() {
        assert_eq!(parse_ltl("a").unwrap(), a("a"));
        assert_eq!(parse_ltl("at-city_2").unwrap(), a("at-city_2"));
    }

    #[test]
    fn missing_operand_reports_end_of_input() {
        let err = parse_ltl("a U").unwrap_err();
        assert_eq!(err.col, 4);
        assert_eq!(err.found, "end of input");
        assert!(parse_ltl("(a & b").is_err());
        assert!(parse_ltl("a b").is_err());
        assert!(parse_ltl("a # b").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse_ltl("a U b U c").unwrap(), L::until(a("a"), L::until(a("b"), a("c"))));
        assert_eq!(parse_ltl("a & b U c").unwrap(), L::and(a("a"), L::until(a("b"), a("c"))));
        assert_eq!(parse_ltl("a | b & c").unwrap(), L::or(a("a"), L::and(a("b"), a("c"))));
        assert_eq!(parse_ltl("a -> b | c").unwrap(), L::implies(a("a"), L::or(a("b"), a("c"))));
        assert_eq!(parse_ltl("!a U b").unwrap(), L::until(L::not(a("a")), a("b")));
        assert_eq!(parse_ltl("a->b").unwrap(), L::implies(a("a"), a("b")));
        assert_eq!(parse_ltl("GF a").unwrap(), L::globally(L::finally(a("a"))));
        assert_eq!(parse_ltl("X true").unwrap(), L::next(L::True));
    }
}
