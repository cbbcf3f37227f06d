//! Tokenizer shared by the module and assignment-file parsers.

use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    /// `@name`
    Global(String),
    /// `%name` (values, labels in reference position, and `%hole.t`)
    Local(String),
    /// Bare identifier: keywords, opcodes, type tokens, block labels.
    Ident(String),
    /// Integer literal; the sign is kept separate so the full `u128`
    /// range stays representable.
    Int { neg: bool, mag: u128 },
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Colon,
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '$')
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c, '.' | '_' | '$')
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Lexer<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if c == Some('\n') {
            self.line += 1;
            self.col = 1;
        } else if c.is_some() {
            self.col += 1;
        }
        c
    }

    fn take_name(&mut self) -> String {
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if is_name_char(c) {
                name.push(c);
                self.bump();
            } else {
                break;
            }
        }
        name
    }

    fn take_number(&mut self, neg: bool, line: u32, col: u32, diags: &mut Vec<Diagnostic>) -> Option<Tok> {
        let mut mag: u128 = 0;
        let mut overflow = false;
        while let Some(c) = self.peek() {
            if let Some(d) = c.to_digit(10) {
                match mag.checked_mul(10).and_then(|m| m.checked_add(d as u128)) {
                    Some(m) => mag = m,
                    None => overflow = true,
                }
                self.bump();
            } else {
                break;
            }
        }
        if overflow {
            diags.push(Diagnostic::error(line, col, "integer literal too large".into()));
            None
        } else {
            Some(Tok::Int { neg, mag })
        }
    }
}

/// Tokenize `text`. `comment` introduces a to-end-of-line comment (`;` in
/// module files, `#` in assignment files). Bad characters are reported
/// and skipped so one stray byte does not hide later errors.
pub(super) fn lex(text: &str, comment: char) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut lx = Lexer { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut toks = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = lx.peek() {
        let (line, col) = (lx.line, lx.col);
        if c == comment {
            while let Some(n) = lx.peek() {
                if n == '\n' {
                    break;
                }
                lx.bump();
            }
            continue;
        }
        if c.is_whitespace() {
            lx.bump();
            continue;
        }
        let tok = match c {
            '(' => { lx.bump(); Some(Tok::LParen) }
            ')' => { lx.bump(); Some(Tok::RParen) }
            '{' => { lx.bump(); Some(Tok::LBrace) }
            '}' => { lx.bump(); Some(Tok::RBrace) }
            '[' => { lx.bump(); Some(Tok::LBracket) }
            ']' => { lx.bump(); Some(Tok::RBracket) }
            ',' => { lx.bump(); Some(Tok::Comma) }
            '=' => { lx.bump(); Some(Tok::Eq) }
            ':' => { lx.bump(); Some(Tok::Colon) }
            '@' | '%' => {
                lx.bump();
                let name = lx.take_name();
                if name.is_empty() {
                    diags.push(Diagnostic::error(
                        line,
                        col,
                        format!("`{c}` must be followed by a name"),
                    ));
                    None
                } else if c == '@' {
                    Some(Tok::Global(name))
                } else {
                    Some(Tok::Local(name))
                }
            }
            '-' => {
                lx.bump();
                if lx.peek().map(|n| n.is_ascii_digit()).unwrap_or(false) {
                    lx.take_number(true, line, col, &mut diags)
                } else {
                    diags.push(Diagnostic::error(line, col, "stray `-`".into()));
                    None
                }
            }
            _ if c.is_ascii_digit() => lx.take_number(false, line, col, &mut diags),
            _ if is_name_start(c) => Some(Tok::Ident(lx.take_name())),
            _ => {
                diags.push(Diagnostic::error(
                    line,
                    col,
                    format!("unexpected character `{c}`"),
                ));
                lx.bump();
                None
            }
        };
        if let Some(tok) = tok {
            toks.push(Token { tok, line, col });
        }
    }
    (toks, diags)
}
