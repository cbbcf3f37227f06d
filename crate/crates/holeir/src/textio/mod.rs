//! Textual form of modules and hole-assignment files.
//!
//! The module grammar is a small LLVM-IR-style subset: `declare`/`define`,
//! integer types `iN`, `void`, the opaque `%hole.t`, the arithmetic and
//! logical opcodes, `icmp`, `select`, `call`, `phi`, `br`, and `ret`.
//! `;` starts a comment.
//!
//! [`print_module`] emits a canonical form: declarations first, two-space
//! indentation, unnamed and purely numeric value names renumbered `%0`,
//! `%1`, ... in definition order, unnamed or numeric block labels renamed
//! `bbN`, an entry label printed only when the function has more than one
//! block, and exactly one trailing newline. Parsing the canonical form and
//! printing again reproduces it byte for byte.
//!
//! Assignment files are line-oriented: `@holeN = <ty> <constant>` assigns
//! a constant, `@holeN = [ty] %name` assigns an in-scope value (the type,
//! when present, must match). `#` starts a comment.

mod lex;
mod parse;
mod print;

use std::fmt;

pub use parse::parse_module;
pub use print::{block_names, print_function, print_module, value_names};

use crate::types::{IntConst, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One problem found while parsing or verifying, with its source position.
/// Positions are 1-based; API-constructed entities report `0:0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    severity: Severity,
    line: u32,
    col: u32,
    message: String,
}

impl Diagnostic {
    pub fn error(line: u32, col: u32, message: String) -> Diagnostic {
        debug_assert!(!message.is_empty());
        Diagnostic { severity: Severity::Error, line, col, message }
    }

    pub fn severity(&self) -> Severity {
        self.severity
    }

    pub fn line(&self) -> u32 {
        self.line
    }

    pub fn col(&self) -> u32 {
        self.col
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.col, sev, self.message)
    }
}

/// Right-hand side of one assignment entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignRhs {
    Const(IntConst),
    /// A reference to an in-scope value by its printed name, with an
    /// optional type the value must have.
    Value { ty: Option<Type>, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Hole name without the `@` sigil.
    pub hole: String,
    pub rhs: AssignRhs,
    /// Source line, for error reporting; 0 for constructed sets.
    pub line: u32,
}

/// An ordered list of hole assignments, applied first to last.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentSet {
    pub entries: Vec<Assignment>,
}

impl fmt::Display for AssignmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.entries {
            match &a.rhs {
                AssignRhs::Const(c) => writeln!(f, "@{} = {} {}", a.hole, c.ty(), c)?,
                AssignRhs::Value { ty: Some(t), name } => {
                    writeln!(f, "@{} = {} %{}", a.hole, t, name)?
                }
                AssignRhs::Value { ty: None, name } => writeln!(f, "@{} = %{}", a.hole, name)?,
            }
        }
        Ok(())
    }
}

/// Parse an assignment file. Blank lines and `#` comments are ignored;
/// every malformed line yields its own diagnostic.
pub fn parse_assignments(text: &str) -> Result<AssignmentSet, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex::lex(text, '#');
    let mut set = AssignmentSet::default();
    let mut pos = 0usize;
    while pos < tokens.len() {
        let start = pos;
        let line = tokens[start].line;
        // Consume the whole source line up front so one bad entry cannot
        // desynchronize the rest of the file.
        let mut end = start;
        while end < tokens.len() && tokens[end].line == line {
            end += 1;
        }
        pos = end;
        let toks = &tokens[start..end];
        match parse_assignment_line(toks, line) {
            Ok(a) => {
                if set.entries.iter().any(|e| e.hole == a.hole) {
                    diags.push(Diagnostic::error(
                        line,
                        toks[0].col,
                        format!("duplicate assignment for @{}", a.hole),
                    ));
                } else {
                    set.entries.push(a);
                }
            }
            Err(d) => diags.push(d),
        }
    }
    if diags.is_empty() {
        Ok(set)
    } else {
        Err(diags)
    }
}

fn parse_assignment_line(toks: &[lex::Token], line: u32) -> Result<Assignment, Diagnostic> {
    use lex::Tok;
    let bad = |col: u32, msg: &str| Diagnostic::error(line, col, msg.to_string());
    let mut it = toks.iter();
    let hole = match it.next() {
        Some(t) => match &t.tok {
            Tok::Global(n) => n.clone(),
            _ => return Err(bad(t.col, "expected a hole name (`@holeN`)")),
        },
        None => unreachable!("empty line slices are not produced"),
    };
    match it.next() {
        Some(t) if matches!(t.tok, Tok::Eq) => {}
        Some(t) => return Err(bad(t.col, "expected `=`")),
        None => return Err(bad(toks[0].col, "expected `=` after the hole name")),
    }
    let rhs_tok = it.next().ok_or_else(|| bad(toks[0].col, "missing right-hand side"))?;
    let rhs = match &rhs_tok.tok {
        // Untyped value reference, or `%hole.t %name`.
        Tok::Local(n) if n != "hole.t" => AssignRhs::Value { ty: None, name: n.clone() },
        Tok::Local(_) | Tok::Ident(_) => {
            let ty = parse::type_from_token(rhs_tok)
                .ok_or_else(|| bad(rhs_tok.col, "expected a type or `%name`"))?;
            let val = it.next().ok_or_else(|| bad(rhs_tok.col, "missing value after the type"))?;
            match &val.tok {
                Tok::Int { neg, mag } => {
                    let Some(w) = ty.int_width() else {
                        return Err(bad(val.col, "a constant needs an integer type"));
                    };
                    let c = parse::const_in_width(w, *neg, *mag)
                        .ok_or_else(|| bad(val.col, &format!("constant does not fit in {ty}")))?;
                    AssignRhs::Const(c)
                }
                Tok::Local(n) => AssignRhs::Value { ty: Some(ty), name: n.clone() },
                _ => return Err(bad(val.col, "expected a constant or `%name`")),
            }
        }
        _ => return Err(bad(rhs_tok.col, "expected a type or `%name`")),
    };
    if let Some(extra) = it.next() {
        return Err(bad(extra.col, "unexpected trailing tokens"));
    }
    Ok(Assignment { hole, rhs, line })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_constant() {
        let set = parse_assignments("@hole0 = i32 5\n").unwrap();
        assert_eq!(set.entries.len(), 1);
        assert_eq!(set.entries[0].hole, "hole0");
        assert_eq!(set.entries[0].rhs, AssignRhs::Const(IntConst::new(32, 5)));
    }

    #[test]
    fn assignment_comments_and_blanks() {
        let text = "# pick the shift amount\n\n@hole1 = i4 1   # one bit\n@hole2 = %x\n";
        let set = parse_assignments(text).unwrap();
        assert_eq!(set.entries.len(), 2);
        assert_eq!(
            set.entries[1].rhs,
            AssignRhs::Value { ty: None, name: "x".into() }
        );
    }

    #[test]
    fn assignment_empty_file() {
        assert!(parse_assignments("").unwrap().entries.is_empty());
        assert!(parse_assignments("# nothing\n").unwrap().entries.is_empty());
    }

    #[test]
    fn assignment_duplicate_is_an_error() {
        let err = parse_assignments("@hole0 = i32 5\n@hole0 = i32 6\n").unwrap_err();
        assert!(err[0].message().contains("duplicate"));
        assert_eq!(err[0].line(), 2);
    }

    #[test]
    fn assignment_typed_value_and_roundtrip() {
        let set = parse_assignments("@hole0 = i8 %acc\n").unwrap();
        assert_eq!(
            set.entries[0].rhs,
            AssignRhs::Value { ty: Some(Type::int(8)), name: "acc".into() }
        );
        assert_eq!(set.to_string(), "@hole0 = i8 %acc\n");
    }

    #[test]
    fn assignment_bad_lines_each_report() {
        let err = parse_assignments("@a = \n@b = i32 %x %y\nnot a line\n").unwrap_err();
        assert_eq!(err.len(), 3);
        assert_eq!(err[0].line(), 1);
        assert_eq!(err[1].line(), 2);
        assert_eq!(err[2].line(), 3);
    }

    #[test]
    fn assignment_constant_range() {
        assert!(parse_assignments("@h = i8 127\n").is_ok());
        assert!(parse_assignments("@h = i8 -128\n").is_ok());
        assert!(parse_assignments("@h = i8 255\n").is_ok());
        assert!(parse_assignments("@h = i8 256\n").is_err());
        assert!(parse_assignments("@h = i8 -129\n").is_err());
    }
}
