//! Tokenizer shared by both input formats.

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Arrow,
    GuardSep,
    And,
    Or,
    Not,
    Implies,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Cons,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '\'' | '.' | '#')
}

/// Split `text` into tokens. `hash_comments` makes `#` start a line comment.
pub fn tokenize(text: &str, hash_comments: bool) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let peek = |k: usize| chars.get(i + k).copied().unwrap_or('\0');
        let mut advance = |n: usize, i: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if (hash_comments && c == '#') || (c == '/' && peek(1) == '/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i);
            }
            continue;
        }
        if ident_start(c) {
            let start = i;
            while i < chars.len() && ident_char(chars[i]) && !(hash_comments && chars[i] == '#') {
                advance(1, &mut i);
            }
            let s: String = chars[start..i].iter().collect();
            let tok = match s.as_str() {
                "not" => Tok::Not,
                "and" => Tok::And,
                "or" => Tok::Or,
                _ => Tok::Ident(s),
            };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i);
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse::<i64>().map_err(|_| ParseError::Syntax {
                line: tl,
                col: tc,
                msg: format!("integer literal `{s}` out of range"),
            })?;
            out.push(Token { tok: Tok::Int(n), line: tl, col: tc });
            continue;
        }
        let two: String = [c, peek(1)].iter().collect();
        let three: String = [c, peek(1), peek(2)].iter().collect();
        let (tok, n) = if three == ":|:" {
            (Tok::GuardSep, 3)
        } else {
            match two.as_str() {
                "->" => (Tok::Arrow, 2),
                "&&" | "/\\" => (Tok::And, 2),
                "||" | "\\/" => (Tok::Or, 2),
                "=>" => (Tok::Implies, 2),
                "==" => (Tok::Eq, 2),
                "!=" => (Tok::Ne, 2),
                "<=" => (Tok::Le, 2),
                ">=" => (Tok::Ge, 2),
                "::" => (Tok::Cons, 2),
                _ => match c {
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    '[' => (Tok::LBracket, 1),
                    ']' => (Tok::RBracket, 1),
                    ',' => (Tok::Comma, 1),
                    ':' => (Tok::Colon, 1),
                    '=' => (Tok::Eq, 1),
                    '<' | '⟨' => (Tok::Lt, 1),
                    '>' | '⟩' => (Tok::Gt, 1),
                    '≤' => (Tok::Le, 1),
                    '≥' => (Tok::Ge, 1),
                    '∧' => (Tok::And, 1),
                    '∨' => (Tok::Or, 1),
                    '¬' | '!' => (Tok::Not, 1),
                    '→' => (Tok::Arrow, 1),
                    '+' => (Tok::Plus, 1),
                    '-' | '−' => (Tok::Minus, 1),
                    '*' | '·' => (Tok::Star, 1),
                    '/' => (Tok::Slash, 1),
                    '%' => (Tok::Percent, 1),
                    _ => {
                        return Err(ParseError::Syntax {
                            line: tl,
                            col: tc,
                            msg: format!("unexpected character `{c}`"),
                        })
                    }
                },
            }
        };
        advance(n, &mut i);
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
