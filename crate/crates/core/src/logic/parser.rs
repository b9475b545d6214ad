use super::{Atom, Formula, LogicError, Signature, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Forall,
    LParen,
    RParen,
    Comma,
    Colon,
    Tilde,
    Star,
    Plus,
    Amp,
    Pipe,
    Arrow,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Forall => "`forall`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, LogicError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '~' => Some(Tok::Tilde),
            '*' => Some(Tok::Star),
            '+' => Some(Tok::Plus),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: l0, column: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' {
            if chars.get(i + 1) == Some(&'>') {
                out.push(Spanned { tok: Tok::Arrow, line: l0, column: c0 });
                i += 2;
                col += 2;
                continue;
            }
            return Err(LogicError::Syntax {
                line: l0,
                column: c0,
                message: "expected `->`".into(),
            });
        }
        if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if word == "forall" { Tok::Forall } else { Tok::Ident(word) };
            out.push(Spanned { tok, line: l0, column: c0 });
            continue;
        }
        return Err(LogicError::Syntax {
            line: l0,
            column: c0,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Spanned { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    sig: &'a Signature,
    bound: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, at: &Spanned, message: String) -> Result<T, LogicError> {
        Err(LogicError::Syntax {
            line: at.line,
            column: at.column,
            message,
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, LogicError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            self.error(&t, format!("expected {}, found {}", tok.describe(), t.tok.describe()))
        }
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        if self.peek().tok == Tok::Forall {
            self.bump();
            let t = self.bump();
            let var = match t.tok {
                Tok::Ident(ref v) => v.clone(),
                ref other => return self.error(&t, format!("expected variable, found {}", other.describe())),
            };
            if self.bound.contains(&var) {
                return Err(LogicError::Rebound(var));
            }
            self.expect(Tok::Colon)?;
            self.bound.push(var.clone());
            let body = self.formula();
            self.bound.pop();
            let body = body?;
            if !body.mentions_var(&var) {
                return Err(LogicError::VacuousQuantifier(var));
            }
            return Ok(Formula::forall(&var, body));
        }
        self.implication()
    }

    fn implication(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.left_assoc(0)?;
        if self.peek().tok == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    /// Levels 0..4 are `|`, `&`, `+`, `*`; all left-associative.
    fn left_assoc(&mut self, level: usize) -> Result<Formula, LogicError> {
        const OPS: [Tok; 4] = [Tok::Pipe, Tok::Amp, Tok::Plus, Tok::Star];
        if level == OPS.len() {
            return self.unary();
        }
        let mut acc = self.left_assoc(level + 1)?;
        while self.peek().tok == OPS[level] {
            self.bump();
            let rhs = self.left_assoc(level + 1)?;
            acc = match level {
                0 => Formula::weak_disj(acc, rhs),
                1 => Formula::weak_conj(acc, rhs),
                2 => Formula::strong_disj(acc, rhs),
                _ => Formula::strong_conj(acc, rhs),
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        let t = self.bump();
        match t.tok {
            Tok::Tilde => Ok(Formula::negation(self.unary()?)),
            Tok::LParen => {
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(ref name) => self.atom(name.clone(), &t),
            ref other => self.error(&t, format!("expected formula, found {}", other.describe())),
        }
    }

    fn atom(&mut self, name: String, at: &Spanned) -> Result<Formula, LogicError> {
        let Some(arity) = self.sig.arity(&name) else {
            return Err(LogicError::UnknownPredicate {
                name,
                line: at.line,
                column: at.column,
            });
        };
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        loop {
            let t = self.bump();
            match t.tok {
                Tok::Ident(ref s) => {
                    let term = if self.bound.contains(s) {
                        Term::Var(s.clone())
                    } else {
                        Term::Const(s.clone())
                    };
                    args.push(term);
                }
                ref other => return self.error(&t, format!("expected term, found {}", other.describe())),
            }
            let sep = self.bump();
            match sep.tok {
                Tok::Comma => continue,
                Tok::RParen => break,
                ref other => {
                    return self.error(&sep, format!("expected `,` or `)`, found {}", other.describe()))
                }
            }
        }
        if args.len() != arity {
            return Err(LogicError::ArityMismatch {
                name,
                expected: arity,
                found: args.len(),
                line: at.line,
                column: at.column,
            });
        }
        Ok(Formula::Atom(Atom { predicate: name, args }))
    }
}

/// Parses a formula, checking predicate names and arities against `sig`.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, LogicError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        sig,
        bound: Vec::new(),
    };
    let f = p.formula()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return p.error(&t, format!("unexpected {} after formula", t.tok.describe()));
    }
    Ok(f)
}
