use std::fmt;

use super::ParseError;

/// Line/column of a token, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    LParen,
    RParen,
    Atom(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

impl Token {
    pub fn text(&self) -> &str {
        match &self.kind {
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::Atom(s) => s,
        }
    }
}

/// Splits PDDL text into parenthesis and atom tokens. `;` comments run to end of line.
/// Fails on unbalanced parentheses.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut open: Vec<Pos> = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    let mut atom = String::new();
    let mut atom_pos = Pos::default();

    fn flush(atom: &mut String, pos: Pos, tokens: &mut Vec<Token>) {
        if !atom.is_empty() {
            tokens.push(Token {
                kind: TokenKind::Atom(std::mem::take(atom)),
                pos,
            });
        }
    }

    while let Some(c) = chars.next() {
        let here = Pos { line, col };
        match c {
            '(' => {
                flush(&mut atom, atom_pos, &mut tokens);
                open.push(here);
                tokens.push(Token {
                    kind: TokenKind::LParen,
                    pos: here,
                });
            }
            ')' => {
                flush(&mut atom, atom_pos, &mut tokens);
                if open.pop().is_none() {
                    return Err(ParseError::new("unbalanced parentheses: unexpected ')'", here));
                }
                tokens.push(Token {
                    kind: TokenKind::RParen,
                    pos: here,
                });
            }
            ';' => {
                flush(&mut atom, atom_pos, &mut tokens);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            c if c.is_whitespace() => flush(&mut atom, atom_pos, &mut tokens),
            c => {
                if atom.is_empty() {
                    atom_pos = here;
                }
                atom.push(c);
            }
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    flush(&mut atom, atom_pos, &mut tokens);
    if let Some(pos) = open.pop() {
        return Err(ParseError::new("unbalanced parentheses: '(' is never closed", pos));
    }
    Ok(tokens)
}

/// S-expression tree built from a token stream.
#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
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

    /// True when this is an atom equal to `kw` ignoring ASCII case.
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.as_atom().is_some_and(|a| a.eq_ignore_ascii_case(kw))
    }
}

/// Builds the top-level s-expressions of a balanced token stream.
pub fn read_sexprs(tokens: &[Token]) -> Result<Vec<SExpr>, ParseError> {
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut top = Vec::new();
    for tok in tokens {
        match &tok.kind {
            TokenKind::LParen => stack.push((Vec::new(), tok.pos)),
            TokenKind::RParen => {
                let (items, pos) = stack
                    .pop()
                    .ok_or_else(|| ParseError::new("unbalanced parentheses: unexpected ')'", tok.pos))?;
                let list = SExpr::List(items, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            TokenKind::Atom(s) => {
                let atom = SExpr::Atom(s.clone(), tok.pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, pos)) = stack.pop() {
        return Err(ParseError::new("unbalanced parentheses: '(' is never closed", pos));
    }
    Ok(top)
}
